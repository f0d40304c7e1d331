"""Brace-aware BibTeX tokenizer, plus the mapping from one entry to a BibRecord."""

from __future__ import annotations

import html
import re
from dataclasses import dataclass

from .errors import BibcodeError, BibtexCardinalityError, BibtexParseError, InvalidDoiError
from .identifiers import parse_bibcode, parse_doi
from .model import AuthorName, BibRecord, Pages, SourceType, make_author

_ENTRY_TYPE_MAP = {
    "article": SourceType.ARTICLE,
    "book": SourceType.BOOK,
    "inbook": SourceType.BOOK,
    "inproceedings": SourceType.PROCEEDINGS,
    "proceedings": SourceType.PROCEEDINGS,
    "conference": SourceType.PROCEEDINGS,
    "phdthesis": SourceType.THESIS,
    "mastersthesis": SourceType.THESIS,
    "techreport": SourceType.REPORT,
    "unpublished": SourceType.UNPUBLISHED,
}

# Characters with special meaning in BibTeX/LaTeX values and their escapes.
_VALUE_ESCAPES = {
    "\\": r"\textbackslash{}",
    "{": r"\{",
    "}": r"\}",
    "%": r"\%",
    "&": r"\&",
    "$": r"\$",
    "#": r"\#",
    "_": r"\_",
}

_UNESCAPE_RE = re.compile(r"\\textbackslash\{\}|\\([{}%&$#_])")
_UNPROTECTED_BRACE_RE = re.compile(r"(?<!\\)[{}]")
_PAGE_RANGE_RE = re.compile(r"\s*(?:--|–|—|-)\s*")
_YEAR_RE = re.compile(r"\d{4}")


@dataclass(frozen=True)
class BibtexEntry:
    """One ``@type{key, ...}`` block with raw (still escaped) field values."""

    entry_type: str
    key: str
    fields: dict[str, str]
    raw: str = ""


def escape_value(text: str) -> str:
    """Escape a field value for emission inside braces."""
    return "".join(_VALUE_ESCAPES.get(c, c) for c in text)


def unescape_value(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: m.group(1) or "\\", text)


def clean_value(raw: str) -> str:
    """Turn a raw field value into model text.

    Case-protection braces are dropped, escapes resolved, HTML entities
    decoded, and line-wrapped whitespace collapsed to single spaces.
    """
    text = _UNPROTECTED_BRACE_RE.sub("", raw)
    text = unescape_value(text)
    text = html.unescape(text)
    return " ".join(text.split())


def parse_entries(text: str) -> list[BibtexEntry]:
    """Tokenize every @-entry in the input, respecting nested braces."""
    entries = []
    i = 0
    n = len(text)
    while True:
        start = text.find("@", i)
        if start == -1:
            return entries
        entry, i = _parse_entry(text, start)
        entries.append(entry)


def _parse_entry(text: str, start: int) -> tuple[BibtexEntry, int]:
    n = len(text)
    i = start + 1
    type_start = i
    while i < n and (text[i].isalpha() or text[i] in "-_"):
        i += 1
    entry_type = text[type_start:i].lower()
    if not entry_type:
        raise BibtexParseError("expected an entry type after '@'", offset=start)
    while i < n and text[i].isspace():
        i += 1
    if i >= n or text[i] != "{":
        raise BibtexParseError(f"expected '{{' after @{entry_type}", offset=i)
    body_start = i + 1
    depth = 1
    i += 1
    while i < n and depth > 0:
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
        i += 1
    if depth != 0:
        raise BibtexParseError("unbalanced braces in entry", offset=start)
    body = text[body_start : i - 1]
    comma = body.find(",")
    if comma == -1:
        raise BibtexParseError("entry has no key separator comma", offset=body_start)
    key = body[:comma].strip()
    if not key:
        raise BibtexParseError("entry has an empty key", offset=body_start)
    fields = _parse_fields(body[comma + 1 :], body_start + comma + 1)
    return BibtexEntry(entry_type=entry_type, key=key, fields=fields, raw=text[start:i]), i


def _parse_fields(body: str, base_offset: int) -> dict[str, str]:
    fields: dict[str, str] = {}
    i = 0
    n = len(body)
    while i < n:
        while i < n and (body[i].isspace() or body[i] == ","):
            i += 1
        if i >= n:
            break
        name_start = i
        while i < n and (body[i].isalnum() or body[i] in "-_"):
            i += 1
        name = body[name_start:i].lower()
        while i < n and body[i].isspace():
            i += 1
        if not name or i >= n or body[i] != "=":
            raise BibtexParseError("malformed field assignment", offset=base_offset + name_start)
        i += 1
        while i < n and body[i].isspace():
            i += 1
        value, i = _parse_value(body, i, base_offset)
        fields[name] = value
    return fields


def _parse_value(body: str, i: int, base_offset: int) -> tuple[str, int]:
    n = len(body)
    if i >= n:
        return "", i
    ch = body[i]
    if ch == "{":
        depth = 1
        start = i + 1
        i += 1
        while i < n and depth > 0:
            if body[i] == "{":
                depth += 1
            elif body[i] == "}":
                depth -= 1
            i += 1
        if depth != 0:
            raise BibtexParseError("unbalanced braces in field value", offset=base_offset + start - 1)
        return body[start : i - 1], i
    if ch == '"':
        start = i + 1
        i += 1
        while i < n and body[i] != '"':
            i += 1
        if i >= n:
            raise BibtexParseError("unterminated quoted value", offset=base_offset + start - 1)
        return body[start:i], i + 1
    start = i
    while i < n and body[i] not in ",\n":
        i += 1
    return body[start:i].strip(), i


def split_authors(raw: str) -> list[str]:
    """Split an author field on `` and `` at brace depth zero."""
    parts = []
    depth = 0
    current = []
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if depth == 0 and raw.startswith(" and ", i):
            parts.append("".join(current))
            current = []
            i += 5
            continue
        current.append(ch)
        i += 1
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _author_from_bibtex(name: str) -> AuthorName:
    stripped = name.strip()
    if stripped.startswith("{") and stripped.endswith("}"):
        return AuthorName(given_names=(), surname=clean_value(stripped))
    if "," in stripped:
        surname, given = stripped.split(",", 1)
        return make_author(clean_value(given), clean_value(surname))
    tokens = clean_value(stripped).split()
    if len(tokens) == 1:
        return AuthorName(given_names=(), surname=tokens[0])
    return make_author(" ".join(tokens[:-1]), tokens[-1])


def split_page_range(value: str) -> Pages | None:
    """Read a page spec like ``3-69``, ``306--312`` or plain ``7``."""
    text = value.strip()
    if not text:
        return None
    parts = _PAGE_RANGE_RE.split(text, maxsplit=1)
    if len(parts) == 2 and parts[0] and parts[1]:
        return Pages(first=parts[0], last=parts[1])
    return Pages(first=text)


def bibtex_to_record(raw: str) -> BibRecord:
    """Parse a string holding exactly one BibTeX entry into a BibRecord.

    The entry key doubles as the bibcode when it parses as one; an ADS
    export is keyed that way. Raises BibtexCardinalityError unless the
    input holds exactly one entry.
    """
    entries = parse_entries(raw)
    if len(entries) != 1:
        raise BibtexCardinalityError(f"expected exactly one BibTeX entry, found {len(entries)}")
    entry = entries[0]

    doi = None
    if entry.fields.get("doi"):
        try:
            doi = parse_doi(clean_value(entry.fields["doi"]))
        except InvalidDoiError:
            doi = None
    bibcode = None
    try:
        bibcode = parse_bibcode(entry.key)
    except BibcodeError:
        pass

    year = None
    if entry.fields.get("year"):
        match = _YEAR_RE.search(entry.fields["year"])
        if match:
            year = int(match.group())

    authors = [_author_from_bibtex(a) for a in split_authors(entry.fields.get("author", ""))]

    return BibRecord(
        title=clean_value(entry.fields.get("title", "")),
        authors=authors,
        source_type=_ENTRY_TYPE_MAP.get(entry.entry_type, SourceType.OTHER),
        journal=clean_value(entry.fields["journal"]) if entry.fields.get("journal") else None,
        volume=clean_value(entry.fields["volume"]) if entry.fields.get("volume") else None,
        number=clean_value(entry.fields["number"]) if entry.fields.get("number") else None,
        pages=split_page_range(clean_value(entry.fields.get("pages", ""))),
        year=year,
        publisher=clean_value(entry.fields["publisher"]) if entry.fields.get("publisher") else None,
        doi=doi,
        bibcode=bibcode,
    )
