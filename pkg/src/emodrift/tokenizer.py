"""Segmentation of normalized text into Word and Emoji tokens.

Emoji sequences are parsed greedily against this grammar (longest match):

    SEQ    := BASE (VS16)? (TONE)? ( ZWJ BASE (VS16)? (TONE)? )*
    FLAG   := RI RI                       (regional indicator pair)
    KEYCAP := [0-9#*] (VS16)? U+20E3
    TAG    := U+1F3F4 TAG_CHAR+ U+E007F   (subdivision flags)

BASE is any codepoint carrying the Emoji property in the ingested data tables
(keycap bases qualify only through the KEYCAP production). Multi-codepoint
sequences joined by U+200D stay one token; unjoined emoji are separate tokens.
Tokens are keyed by codepoint sequence, never by rendered glyph.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .emoji_data import EmojiData, default_emoji_data

ZWJ = 0x200D
VS15 = 0xFE0E
VS16 = 0xFE0F
KEYCAP_MARK = 0x20E3
RI_FIRST, RI_LAST = 0x1F1E6, 0x1F1FF
TAG_FIRST, TAG_LAST = 0xE0020, 0xE007F
TAG_END = 0xE007F
TAG_BASE = 0x1F3F4
KEYCAP_BASES = frozenset(map(ord, "0123456789#*"))

# Invisible sequence plumbing; a degenerate Emoji token when found on its own.
_STRAY_COMPONENTS = frozenset({ZWJ, VS15, VS16, KEYCAP_MARK}) | frozenset(
    range(TAG_FIRST, TAG_LAST + 1)
)


class TokenKind(Enum):
    WORD = "word"
    EMOJI = "emoji"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    surface: str

    def __str__(self) -> str:
        return self.surface


class Tokenizer:
    """Stateless segmentation; only the diagnostics tally is mutated."""

    def __init__(self, data: EmojiData | None = None, collapse_skin_tones: bool = False):
        self.data = data if data is not None else default_emoji_data()
        self.collapse_skin_tones = collapse_skin_tones
        self.diagnostics: Counter[str] = Counter()
        self._emoji = self.data.emoji
        self._tones = self.data.modifiers

    def starts_emoji(self, text: str, pos: int) -> bool:
        """True when an emoji sequence (possibly degenerate) begins at pos."""
        cp = ord(text[pos])
        if cp in KEYCAP_BASES:
            return self._keycap_end(text, pos) is not None
        if cp in _STRAY_COMPONENTS:
            return True
        return cp in self._emoji

    def _keycap_end(self, text: str, pos: int) -> int | None:
        i = pos + 1
        if i < len(text) and ord(text[i]) == VS16:
            i += 1
        if i < len(text) and ord(text[i]) == KEYCAP_MARK:
            return i + 1
        return None

    def parse_emoji_sequence(self, text: str, pos: int) -> tuple[Token, int]:
        """Parse the emoji sequence starting at pos; returns (token, next index).

        Never raises on malformed input: unpaired regional indicators, stray
        joiners/modifiers and unterminated tag sequences come back as
        degenerate single tokens and are counted in the diagnostics tally.
        """
        cp = ord(text[pos])

        if cp in KEYCAP_BASES:
            end = self._keycap_end(text, pos)
            if end is None:
                self.diagnostics["unexpected_sequence_start"] += 1
                return Token(TokenKind.EMOJI, text[pos]), pos + 1
            return Token(TokenKind.EMOJI, text[pos:end]), end

        if RI_FIRST <= cp <= RI_LAST:
            if pos + 1 < len(text) and RI_FIRST <= ord(text[pos + 1]) <= RI_LAST:
                return Token(TokenKind.EMOJI, text[pos : pos + 2]), pos + 2
            self.diagnostics["unpaired_regional_indicator"] += 1
            return Token(TokenKind.EMOJI, text[pos]), pos + 1

        if cp == TAG_BASE and pos + 1 < len(text) and TAG_FIRST <= ord(text[pos + 1]) <= TAG_LAST:
            i = pos + 1
            while i < len(text) and TAG_FIRST <= ord(text[i]) <= TAG_LAST:
                terminated = ord(text[i]) == TAG_END
                i += 1
                if terminated:
                    return Token(TokenKind.EMOJI, text[pos:i]), i
            self.diagnostics["unterminated_tag_sequence"] += 1
            return Token(TokenKind.EMOJI, text[pos:i]), i

        if cp in _STRAY_COMPONENTS:
            self.diagnostics["lone_component"] += 1
            return Token(TokenKind.EMOJI, text[pos]), pos + 1

        if cp not in self._emoji:
            self.diagnostics["unexpected_sequence_start"] += 1
            return Token(TokenKind.EMOJI, text[pos]), pos + 1

        surface, i = self._consume_element(text, pos)
        while (
            i + 1 < len(text)
            and ord(text[i]) == ZWJ
            and ord(text[i + 1]) in self._emoji
            and ord(text[i + 1]) not in KEYCAP_BASES
        ):
            element, i = self._consume_element(text, i + 1)
            surface += chr(ZWJ) + element
        return Token(TokenKind.EMOJI, surface), i

    def _consume_element(self, text: str, pos: int) -> tuple[str, int]:
        """BASE (VS16)? (TONE)? — the repeated unit of a ZWJ sequence."""
        out = text[pos]
        i = pos + 1
        if i < len(text) and ord(text[i]) == VS16:
            out += text[i]
            i += 1
        if i < len(text) and ord(text[i]) in self._tones:
            if not self.collapse_skin_tones:
                out += text[i]
            i += 1
        return out, i

    def tokenize(self, text: str) -> list[Token]:
        """Split normalized text into tokens; total and deterministic.

        Joining the surfaces with single spaces reproduces the input exactly
        (normalized text is single-spaced with emoji padded).
        """
        tokens: list[Token] = []
        word_start: int | None = None
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                if word_start is not None:
                    tokens.append(Token(TokenKind.WORD, text[word_start:i]))
                    word_start = None
                i += 1
            elif self.starts_emoji(text, i):
                if word_start is not None:
                    tokens.append(Token(TokenKind.WORD, text[word_start:i]))
                    word_start = None
                token, i = self.parse_emoji_sequence(text, i)
                tokens.append(token)
            else:
                if word_start is None:
                    word_start = i
                i += 1
        if word_start is not None:
            tokens.append(Token(TokenKind.WORD, text[word_start:]))
        return tokens
