#!/usr/bin/env python3
"""Regenerate the pinned Unicode emoji data files under src/emodrift/data/.

Property ranges (emoji-data.txt) are enumerated through the `regex` module's
Unicode tables; sequence lists (emoji-sequences.txt, emoji-zwj-sequences.txt)
come from the emoji-datasource npm package (the RGI set). Both outputs use the
semicolon-delimited layout of the files published at unicode.org/Public/emoji/
so that genuine copies of those files can be dropped in as replacements.

Usage:
    npm pack emoji-datasource@16.0.0 && tar xzf emoji-datasource-16.0.0.tgz
    python tools/gen_unicode_data.py package/emoji.json src/emodrift/data
"""

import json
import sys
from pathlib import Path

import regex

PROPERTIES = [
    "Emoji",
    "Emoji_Presentation",
    "Emoji_Modifier",
    "Emoji_Modifier_Base",
    "Emoji_Component",
    "Extended_Pictographic",
]

KEYCAP_BASES = "0123456789#*"


def property_ranges(prop):
    pat = regex.compile(r"\p{%s}" % prop)
    ranges = []
    start = None
    prev = None
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            matched = False
        else:
            matched = pat.match(chr(cp)) is not None
        if matched:
            if start is None:
                start = cp
            prev = cp
        elif start is not None:
            ranges.append((start, prev))
            start = None
    if start is not None:
        ranges.append((start, prev))
    return ranges


def fmt_range(lo, hi):
    if lo == hi:
        return f"{lo:04X}"
    return f"{lo:04X}..{hi:04X}"


def write_emoji_data(out_path):
    lines = [
        "# emoji-data.txt",
        "# Emoji property data in the unicode.org/Public/emoji layout.",
        "# Regenerated by tools/gen_unicode_data.py from the `regex` module's",
        "# Unicode tables (regex %s)." % regex.__version__,
        "#",
        "# Format: <codepoint(s)> ; <property> # <comment>",
        "",
    ]
    for prop in PROPERTIES:
        lines.append(f"# ================ {prop} ================")
        total = 0
        for lo, hi in property_ranges(prop):
            n = hi - lo + 1
            total += n
            lines.append(f"{fmt_range(lo, hi):<14}; {prop:<22} # [{n}]")
        lines.append(f"# Total elements: {total}")
        lines.append("")
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out_path}")


def load_rgi(emoji_json):
    """Yield (codepoint tuple, name) for every RGI emoji in emoji.json."""
    data = json.loads(Path(emoji_json).read_text(encoding="utf-8"))
    for entry in data:
        yield tuple(int(c, 16) for c in entry["unified"].split("-")), entry["name"]
        for var in (entry.get("skin_variations") or {}).values():
            yield tuple(int(c, 16) for c in var["unified"].split("-")), entry["name"]


def classify(cps):
    if 0x200D in cps:
        return "RGI_Emoji_ZWJ_Sequence"
    if len(cps) == 2 and all(0x1F1E6 <= c <= 0x1F1FF for c in cps):
        return "RGI_Emoji_Flag_Sequence"
    if len(cps) == 3 and chr(cps[0]) in KEYCAP_BASES and cps[1] == 0xFE0F and cps[2] == 0x20E3:
        return "Emoji_Keycap_Sequence"
    if cps[0] == 0x1F3F4 and len(cps) > 1 and all(0xE0020 <= c <= 0xE007F for c in cps[1:]):
        return "RGI_Emoji_Tag_Sequence"
    if len(cps) > 1 and 0x1F3FB <= cps[-1] <= 0x1F3FF:
        return "RGI_Emoji_Modifier_Sequence"
    if len(cps) == 1 or (len(cps) == 2 and cps[1] == 0xFE0F):
        return "Basic_Emoji"
    raise ValueError(f"unclassifiable sequence: {cps}")


def write_sequences(emoji_json, seq_path, zwj_path):
    by_type = {}
    for cps, name in load_rgi(emoji_json):
        by_type.setdefault(classify(cps), []).append((cps, name))

    def emit(path, types, title):
        lines = [
            f"# {title}",
            "# RGI emoji sequences in the unicode.org/Public/emoji layout.",
            "# Regenerated by tools/gen_unicode_data.py from emoji-datasource",
            "# (npm) 16.0.0, Unicode Emoji 16.0.",
            "#",
            "# Format: <codepoint(s)> ; <type_field> ; <description> # <comment>",
            "",
        ]
        total = 0
        for t in types:
            entries = sorted(by_type.get(t, []))
            lines.append(f"# ================ {t} ================")
            for cps, name in entries:
                cp_field = " ".join(f"{c:04X}" for c in cps)
                lines.append(f"{cp_field:<52}; {t:<28}; {name.lower()}")
            total += len(entries)
            lines.append(f"# Total elements: {len(entries)}")
            lines.append("")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {path} ({total} sequences)")

    emit(
        seq_path,
        [
            "Basic_Emoji",
            "Emoji_Keycap_Sequence",
            "RGI_Emoji_Flag_Sequence",
            "RGI_Emoji_Tag_Sequence",
            "RGI_Emoji_Modifier_Sequence",
        ],
        "emoji-sequences.txt",
    )
    emit(zwj_path, ["RGI_Emoji_ZWJ_Sequence"], "emoji-zwj-sequences.txt")


def main():
    emoji_json = sys.argv[1] if len(sys.argv) > 1 else "/tmp/emojidata/package/emoji.json"
    out_dir = Path(sys.argv[2] if len(sys.argv) > 2 else "src/emodrift/data")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_emoji_data(out_dir / "emoji-data.txt")
    write_sequences(
        emoji_json,
        out_dir / "emoji-sequences.txt",
        out_dir / "emoji-zwj-sequences.txt",
    )


if __name__ == "__main__":
    main()
