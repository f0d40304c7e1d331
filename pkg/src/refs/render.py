"""House output formats: HTML, BibTeX, JSON and plain text.

Field order follows one fixed citation shape: note, authors, quoted title,
italic journal, bold volume, pages, year in parentheses, then the DOI and
ADS hyperlinks. The golden files under tests/ are the byte-level authority
for the exact punctuation.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

from .bibtex import escape_value
from .errors import UnrenderableError
from .identifiers import format_bibcode
from .model import AuthorName, BibRecord, RefEntry, SourceType, entry_to_dict, format_pages

_BIBTEX_TYPE = {
    SourceType.ARTICLE: "article",
    SourceType.BOOK: "book",
    SourceType.PROCEEDINGS: "inproceedings",
    SourceType.THESIS: "phdthesis",
    SourceType.REPORT: "techreport",
    SourceType.PRIVATE_COMMUNICATION: "unpublished",
    SourceType.UNPUBLISHED: "unpublished",
    SourceType.OTHER: "misc",
}

_BIBTEX_KEY_JUNK = re.compile(r"[\s{},\"\\]+")


class RenderFormat(str, enum.Enum):
    HTML = "html"
    JSON = "json"
    BIBTEX = "bibtex"
    TEXT = "text"


@dataclass(frozen=True)
class RenderedCitation:
    """One reference rendered in one concrete format."""

    format: RenderFormat
    body: str
    global_label: str


def escape_html(raw: str) -> str:
    """Apply exactly five entity mappings, ampersand first.

    & < " ' > become &amp; &lt; &quot; &#x27; &gt;. Every other character
    passes through unchanged.
    """
    out = raw.replace("&", "&amp;")
    out = out.replace("<", "&lt;")
    out = out.replace('"', "&quot;")
    out = out.replace("'", "&#x27;")
    return out.replace(">", "&gt;")


def _citation_line(record: BibRecord, note: str | None, markup: bool) -> str:
    """One citation line, either HTML (markup=True) or plain text."""
    esc = escape_html if markup else (lambda s: s)

    if not (
        record.authors
        or record.title
        or record.journal
        or record.volume
        or record.pages
        or record.year
    ):
        raise UnrenderableError("record has no renderable fields")

    segments = []
    if record.authors:
        segments.append(", ".join(esc(a.formatted) for a in record.authors))
    if record.title:
        if markup:
            segments.append("&quot;" + esc(record.title) + "&quot;")
        else:
            segments.append('"' + record.title + '"')
    journal_volume = []
    if record.journal:
        journal_volume.append(f"<i>{esc(record.journal)}</i>" if markup else record.journal)
    if record.volume:
        journal_volume.append(f"<b>{esc(record.volume)}</b>" if markup else record.volume)
    if journal_volume:
        segments.append(" ".join(journal_volume))
    if record.pages:
        segments.append(esc(format_pages(record.pages.first, record.pages.last)))

    year_text = str(record.year) if record.year is not None else "n.d."
    head = ", ".join(segments)
    line = f"{head} ({year_text})." if head else f"({year_text})."

    links = []
    if record.doi_url:
        links.append(f'<a href="{esc(record.doi_url)}">[link]</a>' if markup else record.doi_url)
    if record.ads_url:
        links.append(f'<a href="{esc(record.ads_url)}">[ADS]</a>' if markup else record.ads_url)
    if links:
        line += " " + " ".join(links)

    if note:
        line = f"{esc(note)} {line}" if markup else f"{note} {line}"
    return line


def _entry_lines(entry: RefEntry, markup: bool) -> list[str]:
    esc = escape_html if markup else (lambda s: s)
    lines = []
    for i, (record, sub) in enumerate(zip(entry.records, entry.sub_labels)):
        note = entry.note if i == 0 else None
        line = _citation_line(record, note, markup)
        if entry.global_id is not None:
            line = f"{esc(str(entry.global_id) + sub)}. {line}"
        lines.append(line)
    return lines


def _label(entry: RefEntry) -> str:
    return "" if entry.global_id is None else str(entry.global_id)


def render_html(entry: RefEntry) -> RenderedCitation:
    """Render every nested record as one HTML line; the note leads the first.

    All free text goes through escape_html; only the <i>/<b>/<a> tags and
    the label punctuation are emitted raw.
    """
    body = "<br>\n".join(_entry_lines(entry, markup=True))
    return RenderedCitation(format=RenderFormat.HTML, body=body, global_label=_label(entry))


def render_text(entry: RefEntry) -> RenderedCitation:
    """Same field order as HTML with markup stripped and links as bare URLs."""
    body = "\n".join(_entry_lines(entry, markup=False))
    return RenderedCitation(format=RenderFormat.TEXT, body=body, global_label=_label(entry))


def render_record_html(record: BibRecord, note: str | None = None) -> str:
    """One record as an HTML citation line, without any entry label."""
    return _citation_line(record, note, markup=True)


def _bibtex_key(record: BibRecord, sub: str) -> str:
    if record.bibcode is not None:
        return format_bibcode(record.bibcode)
    surname = record.authors[0].surname if record.authors else "ref"
    year = str(record.year) if record.year is not None else "nd"
    return _BIBTEX_KEY_JUNK.sub("", f"{surname}{year}{sub}")


def _bibtex_author(author: AuthorName) -> str:
    if not author.given_names:
        return "{" + escape_value(author.surname) + "}"
    return escape_value(f"{author.surname}, {' '.join(author.given_names)}")


def _bibtex_block(record: BibRecord, sub: str) -> str:
    fields: list[tuple[str, str]] = []
    if record.title:
        fields.append(("title", escape_value(record.title)))
    if record.authors:
        fields.append(("author", " and ".join(_bibtex_author(a) for a in record.authors)))
    if record.journal:
        fields.append(("journal", escape_value(record.journal)))
    if record.volume:
        fields.append(("volume", escape_value(record.volume)))
    if record.number:
        fields.append(("number", escape_value(record.number)))
    if record.pages:
        fields.append(("pages", escape_value(format_pages(record.pages.first, record.pages.last))))
    if record.year is not None:
        fields.append(("year", str(record.year)))
    if record.publisher:
        fields.append(("publisher", escape_value(record.publisher)))
    if record.doi is not None:
        fields.append(("doi", escape_value(record.doi.canonical)))

    lines = [f"@{_BIBTEX_TYPE[record.source_type]}{{{_bibtex_key(record, sub)},"]
    lines.extend(f"    {name} = {{{value}}}," for name, value in fields)
    lines.append("}")
    return "\n".join(lines)


def render_bibtex(entry: RefEntry) -> RenderedCitation:
    """One BibTeX block per nested record.

    Fields are emitted in the order title, author, journal, volume, number,
    pages, year, publisher, doi, skipping absent ones. The entry key is the
    bibcode when there is one, else surname plus year (plus the sub-label
    when records share an entry).
    """
    multi = len(entry.records) > 1
    blocks = [
        _bibtex_block(record, sub if multi else "")
        for record, sub in zip(entry.records, entry.sub_labels)
    ]
    return RenderedCitation(
        format=RenderFormat.BIBTEX, body="\n\n".join(blocks), global_label=_label(entry)
    )


def render_json(entry: RefEntry) -> RenderedCitation:
    """Canonical JSON form: sorted keys, UTF-8, two-space indent, no trailing whitespace."""
    body = json.dumps(entry_to_dict(entry), sort_keys=True, ensure_ascii=False, indent=2)
    return RenderedCitation(format=RenderFormat.JSON, body=body, global_label=_label(entry))


def render_all(entry: RefEntry) -> dict[RenderFormat, RenderedCitation]:
    """Every house format for one entry."""
    return {
        RenderFormat.HTML: render_html(entry),
        RenderFormat.JSON: render_json(entry),
        RenderFormat.BIBTEX: render_bibtex(entry),
        RenderFormat.TEXT: render_text(entry),
    }
