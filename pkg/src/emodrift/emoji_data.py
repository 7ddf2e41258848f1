"""Loader for the pinned Unicode emoji data files.

The files under emodrift/data/ follow the semicolon-delimited layout of the
files published at unicode.org/Public/emoji/, so genuine copies can be dropped
in as replacements. Codepoint emoji-ness is always decided by these tables,
never by hardcoded ranges.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path


def _iter_records(text: str):
    """Yield the semicolon-split fields of each non-comment line."""
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        yield [f.strip() for f in line.split(";")]


def _parse_codepoint_field(field: str) -> list[int]:
    """Expand 'XXXX', 'XXXX..YYYY' or 'XXXX YYYY ZZZZ' into codepoint lists."""
    if ".." in field:
        lo, hi = field.split("..")
        return list(range(int(lo, 16), int(hi, 16) + 1))
    return [int(c, 16) for c in field.split()]


@dataclass
class EmojiData:
    """Emoji property sets and the RGI sequence list."""

    properties: dict[str, frozenset[int]]
    sequences: dict[str, list[str]] = field(default_factory=dict)

    @property
    def emoji(self) -> frozenset[int]:
        return self.properties["Emoji"]

    @property
    def presentation(self) -> frozenset[int]:
        return self.properties["Emoji_Presentation"]

    @property
    def modifiers(self) -> frozenset[int]:
        """Skin tone modifiers (Emoji_Modifier property)."""
        return self.properties["Emoji_Modifier"]

    @property
    def components(self) -> frozenset[int]:
        return self.properties["Emoji_Component"]

    def rgi_sequences(self) -> list[str]:
        """Every pinned RGI sequence, as a string of codepoints."""
        out: list[str] = []
        for seqs in self.sequences.values():
            out.extend(seqs)
        return out


def _parse_property_file(text: str) -> dict[str, frozenset[int]]:
    props: dict[str, set[int]] = {}
    for fields in _iter_records(text):
        if len(fields) < 2:
            continue
        cps, prop = fields[0], fields[1]
        props.setdefault(prop, set()).update(_parse_codepoint_field(cps))
    return {name: frozenset(cps) for name, cps in props.items()}


def _parse_sequence_file(text: str, into: dict[str, list[str]]) -> None:
    for fields in _iter_records(text):
        if len(fields) < 2:
            continue
        cps = _parse_codepoint_field(fields[0])
        seq_type = fields[1]
        if ".." in fields[0]:
            into.setdefault(seq_type, []).extend(chr(c) for c in cps)
        else:
            into.setdefault(seq_type, []).append("".join(chr(c) for c in cps))


def load_emoji_data(data_dir: str | Path | None = None) -> EmojiData:
    """Load property and sequence tables, from data_dir or the packaged copies."""
    if data_dir is not None:
        data_dir = Path(data_dir)
        read = lambda name: (data_dir / name).read_text(encoding="utf-8")
    else:
        pkg = importlib.resources.files("emodrift") / "data"
        read = lambda name: (pkg / name).read_text(encoding="utf-8")

    data = EmojiData(properties=_parse_property_file(read("emoji-data.txt")))
    for fname in ("emoji-sequences.txt", "emoji-zwj-sequences.txt"):
        _parse_sequence_file(read(fname), data.sequences)
    return data


_DEFAULT: EmojiData | None = None


def default_emoji_data() -> EmojiData:
    """Packaged tables, loaded once per process."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_emoji_data()
    return _DEFAULT
