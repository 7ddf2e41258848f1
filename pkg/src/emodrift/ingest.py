"""Raw post ingestion: cleaning rules and (month x platform) corpus slicing.

Input is newline-delimited JSON with keys text, timestamp, platform,
is_retweet, user_id. Output is one UTF-8 plain-text file per slice (one
cleaned document per line) plus a JSON manifest of per-slice counts.

Cleaning, in order: lower-case; URL spans (http/https scheme through the next
whitespace) removed; @-mentions removed; then a single codepoint scan that
keeps letters/digits/marks, pads punctuation (Unicode categories P*) with
spaces, pads every emoji sequence with spaces (ZWJ-joined sequences stay
contiguous), and drops everything else (controls, non-emoji symbols, stray
joiners/selectors); finally whitespace runs collapse to single spaces.

The exact padded set is the characters in categories Pc Pd Pe Pf Pi Po Ps;
"special characters" are anything left over: C* controls, non-emoji S*
symbols, and emoji components outside a valid sequence.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .tokenizer import _STRAY_COMPONENTS, Token, TokenKind, Tokenizer

_URL_RE = re.compile(r"https?://\S+")
_MENTION_RE = re.compile(r"@\w+")


class Platform(Enum):
    IOS = "ios"
    ANDROID = "android"
    WEB = "web"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "Platform":
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            return cls.OTHER


@dataclass(frozen=True)
class RawPost:
    text: str
    timestamp: float
    platform: Platform
    is_retweet: bool = False
    user_id: str | None = None

    @classmethod
    def from_json_line(cls, line: str) -> "RawPost":
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError("post record must be a JSON object")
        text = obj["text"]
        if not isinstance(text, str):
            raise ValueError("text must be a string")
        return cls(
            text=text,
            timestamp=float(obj["timestamp"]),
            platform=Platform.parse(obj.get("platform", "other")),
            is_retweet=bool(obj.get("is_retweet", False)),
            user_id=obj.get("user_id"),
        )

    def month(self) -> tuple[int, int]:
        dt = datetime.fromtimestamp(self.timestamp, tz=timezone.utc)
        return dt.year, dt.month


@dataclass(frozen=True)
class SliceKey:
    year: int
    month: int
    platform: Platform = Platform.OTHER

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}_{self.platform.value}"

    def sort_key(self) -> tuple[int, str]:
        return self.month_index(), self.platform.value

    @classmethod
    def parse(cls, label: str) -> "SliceKey":
        ym, _, plat = label.partition("_")
        year, month = ym.split("-")
        return cls(int(year), int(month), Platform.parse(plat or "other"))

    def month_index(self) -> int:
        return self.year * 12 + (self.month - 1)


@dataclass(frozen=True)
class SliceGrid:
    """T periods x P platforms; dataset index i runs over the grid."""

    start: tuple[int, int]
    end: tuple[int, int]  # inclusive (year, month)
    platforms: tuple[Platform, ...] = (Platform.OTHER,)

    def __post_init__(self):
        if self._index(*self.end) < self._index(*self.start):
            raise ValueError("grid end precedes start")
        if not self.platforms:
            raise ValueError("grid needs at least one platform")

    @staticmethod
    def _index(year: int, month: int) -> int:
        if not 1 <= month <= 12:
            raise ValueError(f"month out of range: {month}")
        return year * 12 + (month - 1)

    @property
    def n_periods(self) -> int:
        return self._index(*self.end) - self._index(*self.start) + 1

    @property
    def n_slices(self) -> int:
        return self.n_periods * len(self.platforms)

    def periods(self) -> list[tuple[int, int]]:
        base = self._index(*self.start)
        out = []
        for i in range(self.n_periods):
            year, month0 = divmod(base + i, 12)
            out.append((year, month0 + 1))
        return out

    def keys(self) -> list[SliceKey]:
        return [SliceKey(y, m, p) for (y, m) in self.periods() for p in self.platforms]

    def key_for(self, post: RawPost) -> SliceKey | None:
        """Slice for the post, or None when it falls outside the grid."""
        year, month = post.month()
        if not self._index(*self.start) <= self._index(year, month) <= self._index(*self.end):
            return None
        platform = post.platform if post.platform in self.platforms else Platform.OTHER
        if platform not in self.platforms:
            return None
        return SliceKey(year, month, platform)


@dataclass
class CleanDocument:
    tokens: list[Token]
    slice: SliceKey | None = None

    def line(self) -> str:
        return " ".join(t.surface for t in self.tokens)


class Normalizer:
    """The cleaning rules, plus admit/clean built on top of them."""

    def __init__(self, tokenizer: Tokenizer | None = None, require_emoji: bool = True):
        self.tokenizer = tokenizer if tokenizer is not None else Tokenizer()
        self.require_emoji = require_emoji

    def normalize(self, text: str) -> str:
        s = text.lower()
        s = _URL_RE.sub(" ", s)
        s = _MENTION_RE.sub(" ", s)
        out: list[str] = []
        i = 0
        n = len(s)
        while i < n:
            ch = s[i]
            cp = ord(ch)
            if ch.isspace():
                out.append(" ")
                i += 1
            elif cp in _STRAY_COMPONENTS:
                i += 1
            elif self.tokenizer.starts_emoji(s, i):
                token, i = self.tokenizer.parse_emoji_sequence(s, i)
                out.append(f" {token.surface} ")
            else:
                cat = unicodedata.category(ch)
                if cat[0] in ("L", "N", "M"):
                    out.append(ch)
                elif cat[0] == "P":
                    out.append(f" {ch} ")
                else:
                    out.append(" ")
                i += 1
        return " ".join("".join(out).split())

    def admit(self, post: RawPost) -> bool:
        """False iff retweet, empty after cleaning, or (configurably) no emoji."""
        return self.clean(post) is not None

    def clean(self, post: RawPost) -> CleanDocument | None:
        if post.is_retweet:
            return None
        tokens = self.tokenizer.tokenize(self.normalize(post.text))
        if not tokens:
            return None
        if self.require_emoji and not any(t.kind is TokenKind.EMOJI for t in tokens):
            return None
        return CleanDocument(tokens=tokens)


def read_posts(stream: TextIO) -> Iterator[RawPost | None]:
    """Parse posts from newline-delimited JSON; malformed records yield None.

    Invalid input is never repaired; bad records are surfaced for counting.
    """
    for line in stream:
        if not line.strip():
            continue
        try:
            yield RawPost.from_json_line(line)
        except (ValueError, KeyError, TypeError):
            yield None


def partition(
    posts: Iterable[RawPost | None],
    grid: SliceGrid,
    out_dir: str | Path,
    normalizer: Normalizer | None = None,
) -> dict:
    """Write admitted posts into per-slice corpus files; returns the manifest.

    Every admitted post lands in exactly one slice, keyed by (month, platform);
    posts outside the grid window are skipped and counted. Unknown platforms
    map to Other when the grid includes it.
    """
    normalizer = normalizer if normalizer is not None else Normalizer()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    counts: dict[SliceKey, dict[str, int]] = {k: {"documents": 0, "tokens": 0} for k in grid.keys()}
    skipped = {"rejected": 0, "off_grid": 0, "parse_error": 0}
    files: dict[SliceKey, TextIO] = {}
    try:
        for post in posts:
            if post is None:
                skipped["parse_error"] += 1
                continue
            doc = normalizer.clean(post)
            if doc is None:
                skipped["rejected"] += 1
                continue
            key = grid.key_for(post)
            if key is None:
                skipped["off_grid"] += 1
                continue
            if key not in files:
                files[key] = open(out_dir / f"{key}.txt", "w", encoding="utf-8")
            files[key].write(doc.line() + "\n")
            counts[key]["documents"] += 1
            counts[key]["tokens"] += len(doc.tokens)
    finally:
        for fh in files.values():
            fh.close()

    manifest = {
        "slices": {str(k): v for k, v in sorted(counts.items(), key=lambda kv: kv[0].sort_key())},
        "skipped": skipped,
        "diagnostics": dict(normalizer.tokenizer.diagnostics),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
