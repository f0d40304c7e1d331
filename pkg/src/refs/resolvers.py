"""Network clients that turn identifiers into BibRecords.

Two routes exist: the ADS path (DOI to bibcode, then structured field
export) and the DOI content-negotiation fallback at doi.org. Both run over
a pluggable transport, so tests replay recorded fixtures instead of hitting
the services.
"""

from __future__ import annotations

import enum
import html
import json
import os
import time
import warnings
from dataclasses import dataclass
from urllib.parse import quote, urlencode

from .bibtex import _author_from_bibtex, parse_entries, split_page_range
from .errors import (
    AuthError,
    MissingEntryError,
    MultipleBibcodesWarning,
    NoMatchError,
    NoMetadataFormatError,
    ResponseDecodeError,
    UnknownDoiError,
    UnusableMetadataError,
    UnverifiedResultWarning,
    UpstreamError,
    UpstreamUnavailableError,
    TransportTimeoutError,
)
from .identifiers import Bibcode, Doi, parse_bibcode, parse_doi
from .model import AuthorName, BibRecord, SourceType, make_author
from .transport import HttpRequest, HttpResponse, Transport

ADS_TOKEN_ENV = "REFS_ADS_TOKEN"
DEFAULT_ADS_BASE_URL = "https://api.adsabs.harvard.edu/v1"
CROSSREF_WORKS_URL = "https://api.crossref.org/works"

CSL_JSON_ACCEPT = "application/vnd.citationstyles.csl+json"
BIBTEX_ACCEPT = "application/x-bibtex"

# Structured fields fetched from ADS to build a BibRecord.
ADS_FIELD_LIST = "author,bibcode,doi,page,pub,title,volume,year"

_CSL_TYPE_MAP = {
    "article-journal": SourceType.ARTICLE,
    "journal-article": SourceType.ARTICLE,
    "book": SourceType.BOOK,
    "monograph": SourceType.BOOK,
    "paper-conference": SourceType.PROCEEDINGS,
    "proceedings-article": SourceType.PROCEEDINGS,
    "thesis": SourceType.THESIS,
    "dissertation": SourceType.THESIS,
    "report": SourceType.REPORT,
}

# Module-level so tests can stub the backoff delay away.
_sleep = time.sleep


class ExportFormat(str, enum.Enum):
    BIBTEX = "bibtex"
    JSON_FIELDS = "json-fields"
    CUSTOM_HTML = "custom-html"


@dataclass
class AdsConfig:
    """Connection settings for the ADS API.

    The token comes from configuration or the REFS_ADS_TOKEN environment
    variable, never from command-line arguments.
    """

    base_url: str = DEFAULT_ADS_BASE_URL
    token: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 1.0

    @classmethod
    def from_env(cls, **overrides) -> "AdsConfig":
        token = overrides.pop("token", os.environ.get(ADS_TOKEN_ENV, ""))
        return cls(token=token, **overrides)


@dataclass(frozen=True)
class CslRecord:
    """Citation metadata in the citation-styles JSON convention."""

    raw: dict

    @property
    def doi(self) -> str:
        return str(self.raw.get("DOI", ""))


def _clean_text(value: str) -> str:
    """Decode HTML entities and collapse whitespace at the ingestion boundary."""
    return " ".join(html.unescape(value).split())


def _first(value) -> str:
    """ADS and the CrossRef works API wrap many scalars in one-element lists."""
    if isinstance(value, list):
        return str(value[0]) if value else ""
    return str(value) if value is not None else ""


def _execute_with_retry(
    transport: Transport,
    request: HttpRequest,
    *,
    max_retries: int = 3,
    backoff_base: float = 1.0,
) -> HttpResponse:
    """Run a request with at most max_retries attempts on 5xx or timeouts.

    4xx responses return immediately and are never retried. Backoff doubles
    from backoff_base between attempts.
    """
    attempt = 0
    while True:
        attempt += 1
        try:
            response = transport.execute(request)
        except TransportTimeoutError:
            if attempt >= max_retries:
                raise UpstreamUnavailableError(
                    f"{request.url} kept timing out after {attempt} attempts"
                ) from None
            _sleep(backoff_base * 2 ** (attempt - 1))
            continue
        if response.status >= 500:
            if attempt >= max_retries:
                raise UpstreamUnavailableError(
                    f"{request.url} answered {response.status} on all {attempt} attempts",
                    status=response.status,
                )
            _sleep(backoff_base * 2 ** (attempt - 1))
            continue
        return response


def _check_ads_auth(cfg: AdsConfig, transport: Transport) -> None:
    if getattr(transport, "is_live", True) and not cfg.token:
        raise AuthError("no ADS token configured; set REFS_ADS_TOKEN or AdsConfig.token")


def _ads_get(cfg: AdsConfig, transport: Transport, url: str) -> HttpResponse:
    request = HttpRequest("GET", url, headers={"Authorization": f"Bearer {cfg.token}"})
    response = _execute_with_retry(
        transport, request, max_retries=cfg.max_retries, backoff_base=cfg.backoff_base
    )
    if response.status == 401:
        raise AuthError("ADS rejected the token", status=401)
    if response.status != 200:
        raise UpstreamError(f"ADS answered {response.status} for {url}", status=response.status)
    return response


def ads_search_url(cfg: AdsConfig, query: str, fields: str, rows: int) -> str:
    params = urlencode({"q": query, "fl": fields, "rows": str(rows)})
    return f"{cfg.base_url}/search/query?{params}"


def doi_negotiation_url(doi: Doi) -> str:
    return "https://doi.org/" + quote(doi.canonical, safe="/")


def crossref_query_url(text: str, rows: int = 1) -> str:
    params = urlencode({"query.bibliographic": text, "rows": str(rows)})
    return f"{CROSSREF_WORKS_URL}?{params}"


def _ads_docs(response: HttpResponse, url: str) -> list[dict]:
    try:
        payload = response.json()
        return list(payload["response"]["docs"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ResponseDecodeError(f"malformed ADS response from {url}: {exc}") from exc


def resolve_bibcode(doi: Doi, cfg: AdsConfig, transport: Transport) -> Bibcode | None:
    """Look up the ADS bibcode for a DOI.

    Returns None when ADS has no match (that selects the fallback path; it
    is not an error). When several bibcodes match, the first by service
    relevance is used and a MultipleBibcodesWarning is issued.
    """
    _check_ads_auth(cfg, transport)
    url = ads_search_url(cfg, f'doi:"{doi.canonical}"', "bibcode", rows=10)
    response = _ads_get(cfg, transport, url)
    docs = _ads_docs(response, url)
    bibcodes = [d["bibcode"] for d in docs if d.get("bibcode")]
    if not bibcodes:
        return None
    if len(bibcodes) > 1:
        warnings.warn(
            f"DOI {doi} matches {len(bibcodes)} bibcodes; using {bibcodes[0]}",
            MultipleBibcodesWarning,
            stacklevel=2,
        )
    return parse_bibcode(bibcodes[0])


def fetch_ads_export(
    bibcodes: list[Bibcode],
    format: ExportFormat,
    cfg: AdsConfig,
    transport: Transport,
) -> list[tuple[Bibcode, str]]:
    """Fetch one export string per bibcode, preserving input order.

    ``bibtex`` uses the ADS export endpoint; ``json-fields`` fetches the
    structured fields needed to build a BibRecord; ``custom-html`` renders
    those fields locally instead of asking ADS for markup.
    """
    if not bibcodes:
        raise ValueError("bibcode list must be non-empty")
    _check_ads_auth(cfg, transport)
    format = ExportFormat(format)

    if format is ExportFormat.BIBTEX:
        return _fetch_ads_bibtex(bibcodes, cfg, transport)

    docs = _fetch_ads_docs(bibcodes, cfg, transport)
    if format is ExportFormat.JSON_FIELDS:
        return [(b, json.dumps(docs[str(b)], sort_keys=True)) for b in bibcodes]
    from .render import render_record_html

    return [(b, render_record_html(ads_doc_to_record(docs[str(b)]))) for b in bibcodes]


def _fetch_ads_bibtex(
    bibcodes: list[Bibcode], cfg: AdsConfig, transport: Transport
) -> list[tuple[Bibcode, str]]:
    body = json.dumps({"bibcode": [str(b) for b in bibcodes]}).encode("utf-8")
    request = HttpRequest(
        "POST",
        f"{cfg.base_url}/export/bibtex",
        headers={
            "Authorization": f"Bearer {cfg.token}",
            "Content-Type": "application/json",
        },
        body=body,
    )
    response = _execute_with_retry(
        transport, request, max_retries=cfg.max_retries, backoff_base=cfg.backoff_base
    )
    if response.status == 401:
        raise AuthError("ADS rejected the token", status=401)
    if response.status != 200:
        raise UpstreamError(f"ADS export answered {response.status}", status=response.status)
    try:
        blob = response.json()["export"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ResponseDecodeError(f"malformed ADS export response: {exc}") from exc

    by_key = {entry.key: entry.raw for entry in parse_entries(blob)}
    missing = [str(b) for b in bibcodes if str(b) not in by_key]
    if missing:
        raise MissingEntryError(
            f"ADS export is missing bibcodes: {', '.join(missing)}", missing=missing
        )
    return [(b, by_key[str(b)]) for b in bibcodes]


def _fetch_ads_docs(
    bibcodes: list[Bibcode], cfg: AdsConfig, transport: Transport
) -> dict[str, dict]:
    joined = " OR ".join(f'"{b}"' for b in bibcodes)
    url = ads_search_url(cfg, f"bibcode:({joined})", ADS_FIELD_LIST, rows=len(bibcodes))
    response = _ads_get(cfg, transport, url)
    docs = {d.get("bibcode", ""): d for d in _ads_docs(response, url)}
    missing = [str(b) for b in bibcodes if str(b) not in docs]
    if missing:
        raise MissingEntryError(
            f"ADS returned no fields for bibcodes: {', '.join(missing)}", missing=missing
        )
    return docs


def ads_doc_to_record(doc: dict, queried_doi: Doi | None = None) -> BibRecord:
    """Map one ADS search document onto the canonical model."""
    authors = [_author_from_bibtex(a) for a in doc.get("author", [])]
    title = _clean_text(_first(doc.get("title")))
    if not authors and not title:
        raise UnusableMetadataError("ADS document carries neither author nor title")
    doi = queried_doi
    if doc.get("doi"):
        doi = parse_doi(_first(doc["doi"]))
    year = int(doc["year"]) if doc.get("year") else None
    return BibRecord(
        title=title,
        authors=authors,
        journal=_clean_text(doc["pub"]) if doc.get("pub") else None,
        volume=_first(doc.get("volume")) or None,
        pages=split_page_range(_first(doc.get("page"))),
        year=year,
        doi=doi,
        bibcode=parse_bibcode(doc["bibcode"]) if doc.get("bibcode") else None,
    )


def _negotiate(doi: Doi, accept: str, transport: Transport, *, max_retries: int = 3,
               backoff_base: float = 1.0) -> HttpResponse:
    url = doi_negotiation_url(doi)
    request = HttpRequest("GET", url, headers={"Accept": accept})
    response = _execute_with_retry(
        transport, request, max_retries=max_retries, backoff_base=backoff_base
    )
    if response.status == 404:
        raise UnknownDoiError(f"DOI {doi} is not registered")
    if response.status == 406:
        raise NoMetadataFormatError(f"no {accept} metadata available for DOI {doi}")
    if response.status != 200:
        raise UpstreamError(
            f"doi.org answered {response.status} for {doi}", status=response.status
        )
    return response


def fetch_csl_json(doi: Doi, transport: Transport, *, max_retries: int = 3,
                   backoff_base: float = 1.0) -> CslRecord:
    """Content-negotiate citation-styles JSON for a DOI at doi.org."""
    response = _negotiate(
        doi, CSL_JSON_ACCEPT, transport, max_retries=max_retries, backoff_base=backoff_base
    )
    try:
        payload = response.json()
    except ValueError as exc:
        raise ResponseDecodeError(f"citation JSON for {doi} does not parse: {exc}") from exc
    if not isinstance(payload, dict):
        raise ResponseDecodeError(f"citation JSON for {doi} is not an object")
    record = CslRecord(raw=payload)
    if record.doi.lower() != doi.canonical:
        raise ResponseDecodeError(
            f"citation JSON reports DOI {record.doi!r}, expected {doi.canonical!r}"
        )
    return record


def fetch_bibtex(doi: Doi, transport: Transport, *, max_retries: int = 3,
                 backoff_base: float = 1.0) -> str:
    """Content-negotiate a BibTeX entry for a DOI; the body is returned verbatim."""
    response = _negotiate(
        doi, BIBTEX_ACCEPT, transport, max_retries=max_retries, backoff_base=backoff_base
    )
    try:
        text = response.text()
    except UnicodeDecodeError as exc:
        raise ResponseDecodeError(f"BibTeX for {doi} is not valid UTF-8") from exc
    if not text.strip():
        raise ResponseDecodeError(f"empty BibTeX response for {doi}")
    return text


def fetch_bibtex_by_query(freeform: str, transport: Transport) -> str:
    """Resolve free text to BibTeX via the top-ranked CrossRef match.

    The match is keyword-based, so an UnverifiedResultWarning is issued:
    the result may belong to a different article than intended.
    """
    if not freeform or not freeform.strip():
        raise ValueError("query text must be non-empty")
    doi = crossref_top_doi(freeform, transport)
    bibtex = fetch_bibtex(doi, transport)
    warnings.warn(
        f"bibliography for query {freeform!r} resolved by keyword match to {doi}; "
        "it may belong to a different article",
        UnverifiedResultWarning,
        stacklevel=2,
    )
    return bibtex


def crossref_top_doi(freeform: str, transport: Transport) -> Doi:
    """The DOI of the top-ranked CrossRef hit for a free-text query."""
    if not freeform or not freeform.strip():
        raise ValueError("query text must be non-empty")
    url = crossref_query_url(freeform.strip())
    request = HttpRequest("GET", url, headers={"Accept": "application/json"})
    response = _execute_with_retry(transport, request)
    if response.status != 200:
        raise UpstreamError(f"CrossRef answered {response.status}", status=response.status)
    try:
        items = response.json()["message"]["items"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ResponseDecodeError(f"malformed CrossRef response: {exc}") from exc
    if not items:
        raise NoMatchError(f"no bibliographic match for query {freeform!r}")
    top = items[0]
    if not top.get("DOI"):
        raise ResponseDecodeError("top CrossRef hit carries no DOI")
    return parse_doi(str(top["DOI"]))


def _csl_author(item: dict) -> AuthorName:
    if item.get("literal"):
        return AuthorName(given_names=(), surname=_clean_text(item["literal"]))
    return make_author(_clean_text(item.get("given", "")), _clean_text(item.get("family", "")))


def csl_to_record(record: CslRecord) -> BibRecord:
    """Bridge a citation-styles JSON document onto the canonical model."""
    raw = record.raw
    if not raw.get("DOI"):
        raise UnusableMetadataError("citation JSON carries no DOI")
    authors = [_csl_author(a) for a in raw.get("author", [])]
    title = _clean_text(_first(raw.get("title")))
    if not authors and not title:
        raise UnusableMetadataError("citation JSON carries neither author nor title")

    year = None
    issued = raw.get("issued", {})
    date_parts = issued.get("date-parts") if isinstance(issued, dict) else None
    if date_parts and date_parts[0] and date_parts[0][0] is not None:
        year = int(date_parts[0][0])

    source_type = SourceType.ARTICLE
    if raw.get("type"):
        source_type = _CSL_TYPE_MAP.get(str(raw["type"]), SourceType.OTHER)

    journal = _clean_text(_first(raw.get("container-title")))
    publisher = _clean_text(_first(raw.get("publisher")))
    return BibRecord(
        title=title,
        authors=authors,
        source_type=source_type,
        journal=journal or None,
        volume=_first(raw.get("volume")) or None,
        number=_first(raw.get("issue")) or None,
        pages=split_page_range(_first(raw.get("page"))),
        year=year,
        publisher=publisher or None,
        doi=parse_doi(record.doi),
    )
