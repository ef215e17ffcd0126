"""Locale codes prefixed to every source sequence."""

import re
from dataclasses import dataclass
from typing import Optional

from src.utils.exceptions import LocaleError

_LETTERS = re.compile(r"^[a-z]+$")


@dataclass(frozen=True)
class Locale:
    """A language + region tag such as `en-gb`, or a bare code such as `arb`.

    Fields are stored lowercase so equality is equality of the canonical string.
    """

    language: str
    region: Optional[str] = None

    def __str__(self) -> str:
        if self.region is None:
            return self.language
        return f"{self.language}-{self.region}"

    @property
    def tag(self) -> str:
        """Source-vocabulary spelling of this locale, e.g. `<en-gb>`."""
        return f"<{self}>"


def parse_locale(s: str) -> Locale:
    """Parse a locale code, accepting any letter case.

    `xx-yy` takes a 2-letter (or 3-letter, e.g. `cmn-cn`) language and a
    2-letter region; a bare code must be exactly 3 letters.
    """
    if not s or not s.isascii():
        raise LocaleError(f"Locale code must be nonempty ASCII: {s!r}")

    segments = s.strip().lower().split("-")
    if len(segments) == 1:
        code = segments[0]
        if len(code) != 3 or not _LETTERS.match(code):
            raise LocaleError(f"Invalid bare locale code {code!r}: expected 3 letters")
        return Locale(language=code)

    if len(segments) != 2:
        raise LocaleError(f"Invalid locale {s!r}: expected language-region")

    language, region = segments
    if len(language) not in (2, 3) or not _LETTERS.match(language):
        raise LocaleError(f"Invalid language segment {language!r} in locale {s!r}")
    if len(region) != 2 or not _LETTERS.match(region):
        raise LocaleError(f"Invalid region segment {region!r} in locale {s!r}")
    return Locale(language=language, region=region)
