"""End-to-end flow: DOI in, resolved record plus all four renders out.

The ADS route is preferred; when ADS knows nothing about the DOI, metadata
is content-negotiated at doi.org instead. Either way one renderer produces
the output formats, so both routes yield identical HTML by construction.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field

from .bibtex import bibtex_to_record
from .errors import (
    DuplicateEntryError,
    RefsError,
    RefsWarning,
    ResolutionFailedError,
    UnusableMetadataError,
)
from .identifiers import Bibcode, Doi
from .model import BibRecord, RefEntry
from .render import RenderedCitation, RenderFormat, render_all
from .resolvers import (
    AdsConfig,
    ExportFormat,
    ads_doc_to_record,
    csl_to_record,
    fetch_ads_export,
    fetch_bibtex,
    fetch_bibtex_by_query,
    fetch_csl_json,
    resolve_bibcode,
)
from .store import RefStore
from .transport import Transport


class ResolutionPath(str, enum.Enum):
    ADS = "ads"
    FALLBACK = "fallback"


@dataclass
class ResolutionReport:
    """What one resolution did and produced."""

    doi: Doi
    path_taken: ResolutionPath
    record: BibRecord
    renders: dict[RenderFormat, RenderedCitation]
    bibcode: Bibcode | None = None
    warnings: list[str] = field(default_factory=list)
    unverified: bool = False

    def __post_init__(self) -> None:
        if (self.path_taken is ResolutionPath.ADS) != (self.bibcode is not None):
            raise ValueError("the ads path carries a bibcode and the fallback path does not")
        if set(self.renders) != set(RenderFormat):
            raise ValueError("a report carries exactly the four render formats")


def resolve_reference(
    doi: Doi,
    note: str | None = None,
    cfg: AdsConfig | None = None,
    transport: Transport | None = None,
) -> ResolutionReport:
    """Resolve one DOI into a record rendered in all four formats.

    An empty ADS result cleanly selects the fallback; an ADS *error* also
    falls back, with the cause kept as a warning. When the fallback fails
    too, a ResolutionFailedError aggregates both causes.
    """
    if cfg is None:
        cfg = AdsConfig.from_env()
    if transport is None:
        raise ValueError("a transport is required")

    collected: list[str] = []
    ads_cause = "DOI not in ADS (empty bibcode search result)"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bibcode = None
        try:
            bibcode = resolve_bibcode(doi, cfg, transport)
        except RefsError as exc:
            ads_cause = f"bibcode lookup failed: {exc}"

        if bibcode is not None:
            try:
                report = _resolve_via_ads(doi, bibcode, note, cfg, transport)
                report.warnings = _warning_messages(caught) + report.warnings
                return report
            except RefsError as exc:
                ads_cause = f"ADS field fetch failed for {bibcode}: {exc}"
                collected.append(ads_cause)

        try:
            report = _resolve_via_fallback(doi, note, cfg, transport)
        except RefsError as exc:
            raise ResolutionFailedError(ads_cause, str(exc)) from exc
        report.warnings = _warning_messages(caught) + collected + report.warnings
        return report


def _warning_messages(caught) -> list[str]:
    return [str(w.message) for w in caught if issubclass(w.category, RefsWarning)]


def _resolve_via_ads(
    doi: Doi, bibcode: Bibcode, note: str | None, cfg: AdsConfig, transport: Transport
) -> ResolutionReport:
    exports = fetch_ads_export([bibcode], ExportFormat.JSON_FIELDS, cfg, transport)
    doc = json.loads(exports[0][1])
    record = ads_doc_to_record(doc, queried_doi=doi)
    extra = []
    if record.doi is not None and record.doi.canonical != doi.canonical:
        extra.append(f"ADS reports DOI {record.doi} for bibcode {bibcode}, queried {doi}")
    entry = RefEntry(records=[record], note=note)
    return ResolutionReport(
        doi=doi,
        path_taken=ResolutionPath.ADS,
        record=record,
        renders=render_all(entry),
        bibcode=bibcode,
        warnings=extra,
    )


def _resolve_via_fallback(
    doi: Doi, note: str | None, cfg: AdsConfig, transport: Transport
) -> ResolutionReport:
    retry = {"max_retries": cfg.max_retries, "backoff_base": cfg.backoff_base}
    record = csl_to_record(fetch_csl_json(doi, transport, **retry))
    entry = RefEntry(records=[record], note=note)
    renders = render_all(entry)
    extra = []
    try:
        fetched = fetch_bibtex(doi, transport, **retry)
        renders[RenderFormat.BIBTEX] = RenderedCitation(
            format=RenderFormat.BIBTEX, body=fetched, global_label=""
        )
    except RefsError as exc:
        extra.append(f"BibTeX fetch failed ({exc}); generated locally from the record")
    return ResolutionReport(
        doi=doi,
        path_taken=ResolutionPath.FALLBACK,
        record=record,
        renders=renders,
        warnings=extra,
    )


def resolve_query_reference(
    freeform: str,
    note: str | None = None,
    cfg: AdsConfig | None = None,
    transport: Transport | None = None,
) -> ResolutionReport:
    """Resolve free text (a title, say) through the keyword search route.

    The top-ranked match's BibTeX is fetched and parsed into the record.
    Reports from this route are always marked unverified: a keyword match
    may belong to a different article.
    """
    if transport is None:
        raise ValueError("a transport is required")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fetched = fetch_bibtex_by_query(freeform, transport)
    record = bibtex_to_record(fetched)
    if record.doi is None:
        raise UnusableMetadataError(f"query result for {freeform!r} carries no DOI")
    entry = RefEntry(records=[record], note=note)
    renders = render_all(entry)
    renders[RenderFormat.BIBTEX] = RenderedCitation(
        format=RenderFormat.BIBTEX, body=fetched, global_label=""
    )
    return ResolutionReport(
        doi=record.doi,
        path_taken=ResolutionPath.FALLBACK,
        record=record,
        renders=renders,
        warnings=_warning_messages(caught),
        unverified=True,
    )


def resolve_and_store(
    doi: Doi,
    note: str | None,
    store: RefStore,
    cfg: AdsConfig | None = None,
    transport: Transport | None = None,
) -> int:
    """Resolve and persist, returning the new or pre-existing global ID."""
    gid, _report = resolve_and_store_report(doi, note, store, cfg, transport)
    return gid


def resolve_and_store_report(
    doi: Doi,
    note: str | None,
    store: RefStore,
    cfg: AdsConfig | None = None,
    transport: Transport | None = None,
) -> tuple[int, ResolutionReport]:
    """Like resolve_and_store, but also hands back the resolution report.

    A duplicate DOI is not an error here: the existing ID is returned with
    a warning on the report, which keeps batch imports idempotent.
    """
    report = resolve_reference(doi, note, cfg, transport)
    try:
        gid = store.add_entry([report.record], note=note)
    except DuplicateEntryError as exc:
        gid = exc.existing_id
        report.warnings.append(f"DOI {doi} is already stored as entry {gid}")
    return gid, report
