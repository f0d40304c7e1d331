"""Canonical bibliographic data model.

Every resolver populates these types and every renderer consumes them, so
nothing downstream needs to know which service a record came from.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any
from urllib.parse import unquote

from .errors import InvalidAuthorError
from .identifiers import Bibcode, Doi, format_bibcode, parse_bibcode, parse_doi

MIN_YEAR = 1500
MAX_YEAR = 2999


class SourceType(str, enum.Enum):
    """Kind of cited work. Articles dominate, so they are the default."""

    ARTICLE = "article"
    BOOK = "book"
    PROCEEDINGS = "proceedings"
    THESIS = "thesis"
    REPORT = "report"
    PRIVATE_COMMUNICATION = "private-communication"
    UNPUBLISHED = "unpublished"
    OTHER = "other"


@dataclass(frozen=True)
class AuthorName:
    """One author, kept as given-name tokens plus surname.

    Initials are derived, never stored: the first letter of each given-name
    token, uppercased, with a trailing period. A name with no given-name
    tokens (a consortium, say) renders as the bare surname.
    """

    given_names: tuple[str, ...]
    surname: str

    def __post_init__(self) -> None:
        if not self.surname.strip():
            raise InvalidAuthorError("author surname must be non-empty")

    @property
    def initials(self) -> list[str]:
        out = []
        for token in self.given_names:
            letter = next((c for c in token if c.isalpha()), None)
            if letter is not None:
                out.append(letter.upper() + ".")
        return out

    @property
    def formatted(self) -> str:
        """The display form: initials then surname, e.g. ``I. E. Gordon``."""
        initials = self.initials
        if not initials:
            return self.surname
        return " ".join(initials) + " " + self.surname


def make_author(raw_given: str, raw_surname: str) -> AuthorName:
    """Build an AuthorName from raw given-name and surname strings.

    Given names are split on whitespace and hyphens; each token contributes
    one initial. Raises InvalidAuthorError when the surname is blank.
    """
    surname = raw_surname.strip()
    if not surname:
        raise InvalidAuthorError(f"author surname must be non-empty (given={raw_given!r})")
    tokens = tuple(t for t in raw_given.replace("-", " ").split() if t)
    return AuthorName(given_names=tokens, surname=surname)


def format_pages(first: str, last: str | None = None) -> str:
    """Render a page range as ``first-last``, or just ``first``."""
    if not first:
        raise ValueError("first page must be non-empty")
    return f"{first}-{last}" if last else first


def sub_labels(n: int) -> list[str]:
    """Labels for the records nested under one entry.

    A single record carries no label; two or more get consecutive lowercase
    letters, continuing spreadsheet-style ("z", "aa", "ab", ...) past 26.
    """
    if n < 1:
        raise ValueError(f"record count must be >= 1, got {n}")
    if n == 1:
        return [""]
    return [_alpha_label(i) for i in range(1, n + 1)]


def _alpha_label(i: int) -> str:
    out = ""
    while i > 0:
        i, r = divmod(i - 1, 26)
        out = chr(ord("a") + r) + out
    return out


@dataclass(frozen=True)
class Pages:
    """First page plus an optional last page."""

    first: str
    last: str | None = None

    def __post_init__(self) -> None:
        if not self.first:
            raise ValueError("first page must be non-empty")

    @property
    def formatted(self) -> str:
        return format_pages(self.first, self.last)


@dataclass
class BibRecord:
    """Source-independent metadata for one cited work.

    The title holds clean Unicode: HTML entities are decoded once, at the
    resolver boundary, never at render time. When a DOI or bibcode is set
    the matching hyperlink is derived automatically.
    """

    title: str = ""
    authors: list[AuthorName] = field(default_factory=list)
    source_type: SourceType = SourceType.ARTICLE
    journal: str | None = None
    volume: str | None = None
    number: str | None = None
    pages: Pages | None = None
    year: int | None = None
    publisher: str | None = None
    doi: Doi | None = None
    bibcode: Bibcode | None = None
    doi_url: str | None = None
    ads_url: str | None = None

    def __post_init__(self) -> None:
        if self.year is not None and not MIN_YEAR <= self.year <= MAX_YEAR:
            raise ValueError(f"year out of range [{MIN_YEAR}, {MAX_YEAR}]: {self.year}")
        if self.doi is not None:
            expected = self.doi.url
            if self.doi_url is None:
                self.doi_url = expected
            elif self.doi_url != expected:
                raise ValueError(f"doi_url {self.doi_url!r} does not match DOI {self.doi.canonical!r}")
        if self.bibcode is not None:
            if self.ads_url is None:
                self.ads_url = self.bibcode.ads_url
            elif format_bibcode(self.bibcode) not in unquote(self.ads_url):
                raise ValueError(f"ads_url {self.ads_url!r} does not embed bibcode {self.bibcode}")

    @property
    def has_identifier(self) -> bool:
        return self.doi is not None or self.bibcode is not None


@dataclass
class RefEntry:
    """One stored reference: an ID, one or more nested records, and a note.

    ``global_id`` is None until the store assigns one. Display labels are
    the ID concatenated with each record's sub-label, e.g. ``663a``.
    """

    records: list[BibRecord]
    note: str | None = None
    global_id: int | None = None

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError("an entry needs at least one record")
        if self.global_id is not None and self.global_id < 1:
            raise ValueError(f"global_id must be positive, got {self.global_id}")

    @property
    def sub_labels(self) -> list[str]:
        return sub_labels(len(self.records))

    @property
    def display_labels(self) -> list[str]:
        """Composite labels like ``["663a", "663b"]``, or ``[""]`` pre-store."""
        prefix = "" if self.global_id is None else str(self.global_id)
        return [prefix + sub for sub in self.sub_labels]


@dataclass(frozen=True)
class SourceCrossRef:
    """Maps a dataset-local reference integer onto a global entry ID."""

    dataset_scope: str
    parameter: str
    local_id: int
    global_id: int

    def __post_init__(self) -> None:
        if not self.dataset_scope:
            raise ValueError("dataset_scope must be non-empty")
        if not self.parameter:
            raise ValueError("parameter must be non-empty")
        if self.local_id < 0:
            raise ValueError(f"local_id must be >= 0, got {self.local_id}")
        if self.global_id < 1:
            raise ValueError(f"global_id must be >= 1, got {self.global_id}")


# --- dict codecs, used by the JSON renderer and the store ------------------

def author_to_dict(a: AuthorName) -> dict[str, Any]:
    return {"given_names": list(a.given_names), "surname": a.surname}


def author_from_dict(d: dict[str, Any]) -> AuthorName:
    return AuthorName(given_names=tuple(d.get("given_names", [])), surname=d["surname"])


def record_to_dict(r: BibRecord) -> dict[str, Any]:
    """Plain-dict form of a record. None-valued fields are omitted."""
    out: dict[str, Any] = {
        "source_type": r.source_type.value,
        "title": r.title,
        "authors": [author_to_dict(a) for a in r.authors],
    }
    if r.journal is not None:
        out["journal"] = r.journal
    if r.volume is not None:
        out["volume"] = r.volume
    if r.number is not None:
        out["number"] = r.number
    if r.pages is not None:
        out["pages"] = {"first": r.pages.first, "last": r.pages.last}
    if r.year is not None:
        out["year"] = r.year
    if r.publisher is not None:
        out["publisher"] = r.publisher
    if r.doi is not None:
        out["doi"] = r.doi.canonical
    if r.bibcode is not None:
        out["bibcode"] = format_bibcode(r.bibcode)
    if r.doi_url is not None:
        out["doi_url"] = r.doi_url
    if r.ads_url is not None:
        out["ads_url"] = r.ads_url
    return out


def record_from_dict(d: dict[str, Any]) -> BibRecord:
    pages = None
    if d.get("pages") is not None:
        pages = Pages(first=d["pages"]["first"], last=d["pages"].get("last"))
    return BibRecord(
        title=d.get("title", ""),
        authors=[author_from_dict(a) for a in d.get("authors", [])],
        source_type=SourceType(d.get("source_type", "article")),
        journal=d.get("journal"),
        volume=d.get("volume"),
        number=d.get("number"),
        pages=pages,
        year=d.get("year"),
        publisher=d.get("publisher"),
        doi=parse_doi(d["doi"]) if d.get("doi") else None,
        bibcode=parse_bibcode(d["bibcode"]) if d.get("bibcode") else None,
        doi_url=d.get("doi_url"),
        ads_url=d.get("ads_url"),
    )


def entry_to_dict(e: RefEntry) -> dict[str, Any]:
    out: dict[str, Any] = {"records": [record_to_dict(r) for r in e.records]}
    if e.global_id is not None:
        out["global_id"] = e.global_id
        out["labels"] = e.display_labels
    if e.note is not None:
        out["note"] = e.note
    return out


def entry_from_dict(d: dict[str, Any]) -> RefEntry:
    return RefEntry(
        records=[record_from_dict(r) for r in d["records"]],
        note=d.get("note"),
        global_id=d.get("global_id"),
    )
