"""Command-line front end: add references by DOI, render, export, cross-reference.

Exit codes are stable for scripting:
  0  success
  1  invalid DOI
  2  resolution failed, unknown entry, or nothing to export
  3  store or filesystem error
  64 usage or configuration error
Diagnostics go to stderr; stdout carries data only.
"""

from __future__ import annotations

import argparse
import os
import sqlite3
import sys

from .errors import (
    CrossRefConflictError,
    DuplicateEntryError,
    InvalidDoiError,
    MissingEntryError,
    RefsError,
    StoreError,
    TransportError,
    ResolutionFailedError,
    UnusableMetadataError,
)
from .identifiers import parse_doi
from .pipeline import resolve_query_reference, resolve_and_store_report
from .render import RenderFormat, render_all
from .resolvers import ADS_TOKEN_ENV, AdsConfig
from .store import RefStore
from .transport import FixtureTransport, LiveTransport, RecordingTransport, Transport

DB_ENV = "REFS_DB"
FIXTURES_ENV = "REFS_FIXTURES"
DEFAULT_DB = "refs.db"

EXIT_OK = 0
EXIT_INVALID_DOI = 1
EXIT_RESOLUTION = 2
EXIT_STORE = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


def _err(message: str) -> None:
    print(f"refs: {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refs",
        description="Turn DOIs into consistently formatted bibliography entries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--db",
        default=None,
        help=f"reference database file (default: ${DB_ENV} or {DEFAULT_DB})",
    )

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument(
        "--offline",
        action="store_true",
        help="replay recorded fixtures instead of performing HTTP",
    )
    net.add_argument(
        "--fixtures",
        default=None,
        help=f"directory of fixture archives (default: ${FIXTURES_ENV})",
    )
    net.add_argument(
        "--record-fixtures",
        default=None,
        metavar="ARCHIVE",
        help="record live exchanges into a fixture archive (live mode only)",
    )

    p_add = sub.add_parser(
        "add", parents=[common, net], help="resolve a DOI (or free-text query) and store it"
    )
    p_add.add_argument("--doi", help="DOI of the work to reference")
    p_add.add_argument("--query", help="free-text search instead of a DOI (marked unverified)")
    p_add.add_argument("--note", help="curation note stored and rendered with the entry")
    p_add.set_defaults(func=cmd_add)

    p_render = sub.add_parser("render", parents=[common], help="print one stored entry")
    p_render.add_argument("id", type=int)
    p_render.add_argument(
        "--format",
        choices=[f.value for f in RenderFormat],
        default=RenderFormat.TEXT.value,
    )
    p_render.set_defaults(func=cmd_render)

    p_export = sub.add_parser(
        "export", parents=[common], help="write the HTML and .bib bibliography bundle"
    )
    p_export.add_argument("ids", nargs="*", type=int)
    p_export.add_argument("--all", action="store_true", help="export every stored entry")
    p_export.add_argument("-o", "--out-dir", default=".")
    p_export.set_defaults(func=cmd_export)

    p_crossref = sub.add_parser(
        "crossref", parents=[common], help="map a dataset-local integer onto a global ID"
    )
    p_crossref.add_argument("scope")
    p_crossref.add_argument("parameter")
    p_crossref.add_argument("local_id", type=int)
    p_crossref.add_argument("global_id", type=int)
    p_crossref.set_defaults(func=cmd_crossref)

    p_list = sub.add_parser("list", parents=[common], help="list stored entries")
    p_list.add_argument("--scope", help="only entries cross-referenced in this dataset scope")
    p_list.set_defaults(func=cmd_list)

    return parser


def _db_path(args) -> str:
    return args.db or os.environ.get(DB_ENV) or DEFAULT_DB


def _open_store(args) -> RefStore:
    return RefStore(_db_path(args))


def _fail(code: int, message: str) -> int:
    _err(message)
    return code


def _build_transport(args) -> Transport:
    if args.offline:
        fixtures = args.fixtures or os.environ.get(FIXTURES_ENV)
        if not fixtures:
            raise UsageError("offline mode needs --fixtures or REFS_FIXTURES")
        if args.record_fixtures:
            raise UsageError("--record-fixtures only makes sense in live mode")
        return FixtureTransport.from_dir(fixtures)
    transport: Transport = LiveTransport()
    if args.record_fixtures:
        transport = RecordingTransport(transport, args.record_fixtures)
    return transport


def _build_ads_config(args) -> AdsConfig:
    cfg = AdsConfig.from_env()
    if not args.offline and not cfg.token:
        raise UsageError(f"live mode requires an ADS token in ${ADS_TOKEN_ENV}")
    return cfg


def cmd_add(args) -> int:
    if bool(args.doi) == bool(args.query):
        raise UsageError("pass exactly one of --doi or --query")
    transport = _build_transport(args)
    cfg = _build_ads_config(args)

    if args.doi:
        try:
            doi = parse_doi(args.doi)
        except InvalidDoiError as exc:
            return _fail(EXIT_INVALID_DOI, str(exc))

    store = _open_store(args)
    try:
        if args.doi:
            gid, report = resolve_and_store_report(doi, args.note, store, cfg, transport)
        else:
            report = resolve_query_reference(args.query, args.note, cfg, transport)
            gid = _store_resolved(store, report, args.note)
    except (ResolutionFailedError, UnusableMetadataError, TransportError) as exc:
        return _fail(EXIT_RESOLUTION, str(exc))
    except (StoreError, sqlite3.Error, OSError) as exc:
        return _fail(EXIT_STORE, str(exc))
    finally:
        store.close()

    for warning in report.warnings:
        _err(f"warning: {warning}")
    suffix = " unverified" if report.unverified else ""
    print(f"id={gid} path={report.path_taken.value}{suffix}")
    return EXIT_OK


def _store_resolved(store: RefStore, report, note: str | None) -> int:
    try:
        return store.add_entry([report.record], note=note)
    except DuplicateEntryError as exc:
        report.warnings.append(f"DOI {report.doi} is already stored as entry {exc.existing_id}")
        return exc.existing_id


def cmd_render(args) -> int:
    store = _open_store(args)
    try:
        entry = store.get_entry(args.id)
    except MissingEntryError as exc:
        return _fail(EXIT_RESOLUTION, str(exc))
    finally:
        store.close()
    print(render_all(entry)[RenderFormat(args.format)].body)
    return EXIT_OK


def cmd_export(args) -> int:
    if args.all == bool(args.ids):
        raise UsageError("pass entry IDs or --all, not both or neither")
    store = _open_store(args)
    try:
        ids = args.ids
        if args.all:
            ids = [e.global_id for e in store.list_entries()]
            if not ids:
                return _fail(EXIT_RESOLUTION, "no entries")
        html_path, bib_path = store.export_bundle(ids, args.out_dir)
    except MissingEntryError as exc:
        return _fail(EXIT_RESOLUTION, str(exc))
    except (StoreError, sqlite3.Error, OSError) as exc:
        return _fail(EXIT_STORE, str(exc))
    finally:
        store.close()
    print(html_path)
    print(bib_path)
    return EXIT_OK


def cmd_crossref(args) -> int:
    store = _open_store(args)
    try:
        store.attach_crossref(args.scope, args.parameter, args.local_id, args.global_id)
    except MissingEntryError as exc:
        return _fail(EXIT_RESOLUTION, str(exc))
    except (CrossRefConflictError, StoreError, sqlite3.Error) as exc:
        return _fail(EXIT_STORE, str(exc))
    finally:
        store.close()
    return EXIT_OK


def cmd_list(args) -> int:
    store = _open_store(args)
    try:
        entries = store.list_entries(scope=args.scope)
    finally:
        store.close()
    for entry in entries:
        first = entry.records[0]
        label = first.title or (first.authors[0].formatted if first.authors else "(untitled)")
        print(f"{entry.global_id}\t{label}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (StoreError, sqlite3.Error, OSError) as exc:
        _err(str(exc))
        return EXIT_STORE
    except RefsError as exc:
        # Anything not mapped above is a resolution-side failure.
        _err(str(exc))
        return EXIT_RESOLUTION


if __name__ == "__main__":
    sys.exit(main())
