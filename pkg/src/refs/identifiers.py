"""Strict parsing, validation and formatting of DOIs and 19-character ADS bibcodes."""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import quote

from .errors import BibcodeFormatError, BibcodeLengthError, InvalidDoiError

_DOI_RE = re.compile(r"^10\.[0-9]{4,9}/\S+$")

# Prefixes stripped from raw DOI input, longest first, matched case-insensitively.
_DOI_PREFIXES = ("https://doi.org/", "http://doi.org/", "doi.org/", "doi:")

BIBCODE_LENGTH = 19

ADS_ABS_URL = "https://ui.adsabs.harvard.edu/abs/"
DOI_URL_PREFIX = "https://doi.org/"


@dataclass(frozen=True)
class Doi:
    """A DOI in canonical form: lowercase, no URL scheme, no doi.org host."""

    canonical: str

    def __post_init__(self) -> None:
        if not _DOI_RE.match(self.canonical):
            raise InvalidDoiError(f"not a valid canonical DOI: {self.canonical!r}")
        if self.canonical != self.canonical.lower():
            raise InvalidDoiError(f"canonical DOI must be lowercase: {self.canonical!r}")

    def __str__(self) -> str:
        return self.canonical

    @property
    def url(self) -> str:
        return DOI_URL_PREFIX + self.canonical


def parse_doi(raw: str) -> Doi:
    """Normalize a raw DOI string and validate its grammar.

    Strips the doi.org URL forms and the "doi:" prefix, then lowercases.
    Raises InvalidDoiError when the remainder does not match
    ``10.<4-9 digits>/<suffix>``.
    """
    if not raw or not raw.strip():
        raise InvalidDoiError("empty DOI string")
    text = raw.strip()
    lowered = text.lower()
    for prefix in _DOI_PREFIXES:
        if lowered.startswith(prefix):
            text = text[len(prefix):]
            break
    canonical = text.lower()
    if not _DOI_RE.match(canonical):
        raise InvalidDoiError(f"not a valid DOI: {raw!r}")
    return Doi(canonical)


# Bibcode columns, 0-indexed half-open ranges into the 19-character string.
_YEAR = slice(0, 4)
_JOURNAL = slice(4, 9)
_VOLUME = slice(9, 13)
_QUALIFIER = 13
_PAGE = slice(14, 18)
_AUTHOR = 18


@dataclass(frozen=True)
class Bibcode:
    """One ADS bibcode, split into its fixed-width fields.

    The formatted form is always exactly 19 characters; empty positions are
    periods. A page longer than four characters spills into the qualifier
    column, in which case ``qualifier`` is None.
    """

    year: int
    journal: str
    volume: str
    page: str
    author_initial: str
    qualifier: str | None = None

    def __post_init__(self) -> None:
        if not 1000 <= self.year <= 9999:
            raise BibcodeFormatError(f"bibcode year out of range: {self.year}")
        if len(self.journal) > 5:
            raise BibcodeFormatError(f"journal abbreviation too wide: {self.journal!r}")
        if len(self.volume) > 4:
            raise BibcodeFormatError(f"volume too wide: {self.volume!r}")
        if self.qualifier is not None:
            if len(self.qualifier) != 1 or not self.qualifier.isalnum():
                raise BibcodeFormatError(f"qualifier must be one alphanumeric character: {self.qualifier!r}")
            if len(self.page) > 4:
                raise BibcodeFormatError(
                    f"page {self.page!r} does not fit beside qualifier {self.qualifier!r}"
                )
        elif len(self.page) > 5:
            raise BibcodeFormatError(f"page too wide: {self.page!r}")
        if len(self.author_initial) != 1 or not (
            self.author_initial.isalpha() or self.author_initial == "."
        ):
            raise BibcodeFormatError(f"author initial must be one letter or '.': {self.author_initial!r}")

    def __str__(self) -> str:
        return format_bibcode(self)

    @property
    def ads_url(self) -> str:
        """Link to the abstract page, with the bibcode percent-encoded."""
        return ADS_ABS_URL + quote(format_bibcode(self), safe="")


def parse_bibcode(raw: str) -> Bibcode:
    """Split a 19-character bibcode into its fields.

    Surrounding whitespace is tolerated. Period padding is stripped from
    each field: the journal is left-aligned, volume and page right-aligned.
    A digit in the qualifier column is read as the leading digit of a
    five-character page.
    """
    s = raw.strip()
    if len(s) != BIBCODE_LENGTH:
        raise BibcodeLengthError(f"bibcode must be {BIBCODE_LENGTH} characters, got {len(s)}: {raw!r}")
    year_text = s[_YEAR]
    if not all(c in "0123456789" for c in year_text):
        raise BibcodeFormatError(f"bibcode year is not numeric: {year_text!r} in {s!r}")
    qualifier_char = s[_QUALIFIER]
    if qualifier_char in "0123456789":
        # Page overflow: the page starts in the qualifier column.
        qualifier = None
        page = s[_QUALIFIER:_PAGE.stop].lstrip(".")
    else:
        qualifier = None if qualifier_char == "." else qualifier_char
        page = s[_PAGE].lstrip(".")
    return Bibcode(
        year=int(year_text),
        journal=s[_JOURNAL].rstrip("."),
        volume=s[_VOLUME].lstrip("."),
        qualifier=qualifier,
        page=page,
        author_initial=s[_AUTHOR],
    )


def format_bibcode(b: Bibcode) -> str:
    """Emit the exact 19-character form of a bibcode."""
    if b.qualifier is None and len(b.page) == 5:
        middle = b.page
    else:
        middle = (b.qualifier or ".") + b.page.rjust(4, ".")
    out = f"{b.year:04d}" + b.journal.ljust(5, ".") + b.volume.rjust(4, ".") + middle + b.author_initial
    if len(out) != BIBCODE_LENGTH:
        raise BibcodeFormatError(f"formatted bibcode is {len(out)} characters: {out!r}")
    return out
