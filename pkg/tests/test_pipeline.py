"""Orchestrator tests: branch selection, fallback behavior, persistence."""

from __future__ import annotations

import pytest

from refs import (
    FixtureTransport,
    RenderFormat,
    ResolutionFailedError,
    ResolutionPath,
    parse_doi,
    resolve_and_store,
    resolve_and_store_report,
    resolve_query_reference,
    resolve_reference,
)

HITRAN = parse_doi("10.1016/j.jqsrt.2017.06.038")
NIST = parse_doi("10.18434/t4w30f")


class TestAdsPath:
    def test_resolves_with_bibcode_and_four_renders(self, transport, ads_config):
        report = resolve_reference(HITRAN, cfg=ads_config, transport=transport)
        assert report.path_taken is ResolutionPath.ADS
        assert str(report.bibcode) == "2017JQSRT.203....3G"
        assert set(report.renders) == set(RenderFormat)
        assert report.unverified is False

    def test_never_touches_negotiation_endpoints(self, counting_transport, ads_config):
        resolve_reference(HITRAN, cfg=ads_config, transport=counting_transport)
        assert counting_transport.count("doi.org") == 0
        assert counting_transport.count("adsabs.harvard.edu") == 2  # search + fields

    def test_record_fields_come_from_ads(self, transport, ads_config):
        report = resolve_reference(HITRAN, cfg=ads_config, transport=transport)
        assert report.record.volume == "203"
        assert report.record.year == 2017
        assert str(report.record.bibcode) == "2017JQSRT.203....3G"

    def test_note_is_rendered(self, transport, ads_config):
        report = resolve_reference(HITRAN, note="Background data.", cfg=ads_config,
                                   transport=transport)
        assert report.renders[RenderFormat.HTML].body.startswith("Background data. ")


class TestFallbackPath:
    def test_absent_doi_takes_fallback(self, transport, ads_config):
        report = resolve_reference(NIST, cfg=ads_config, transport=transport)
        assert report.path_taken is ResolutionPath.FALLBACK
        assert report.bibcode is None
        assert set(report.renders) == set(RenderFormat)

    def test_performs_one_csl_and_one_bibtex_fetch(self, counting_transport, ads_config):
        resolve_reference(NIST, cfg=ads_config, transport=counting_transport)
        negotiations = [r for r in counting_transport.requests if "doi.org" in r.url]
        accepts = sorted(r.accept for r in negotiations)
        assert accepts == ["application/vnd.citationstyles.csl+json", "application/x-bibtex"]

    def test_fetched_bibtex_is_authoritative(self, transport, ads_config):
        report = resolve_reference(NIST, cfg=ads_config, transport=transport)
        assert report.renders[RenderFormat.BIBTEX].body.startswith("@misc{Kramida_2022,")

    def test_partial_fallback_generates_bibtex_locally(self, transport, ads_config):
        report = resolve_reference(parse_doi("10.5555/emptybib"), cfg=ads_config,
                                   transport=transport)
        assert report.path_taken is ResolutionPath.FALLBACK
        assert any("BibTeX fetch failed" in w for w in report.warnings)
        assert report.renders[RenderFormat.BIBTEX].body.startswith("@article{Lovelace2001,")

    def test_both_paths_failing_aggregates_causes(self, transport, ads_config):
        with pytest.raises(ResolutionFailedError) as exc_info:
            resolve_reference(parse_doi("10.1000/unregistered"), cfg=ads_config,
                              transport=transport)
        assert exc_info.value.ads_cause
        assert exc_info.value.fallback_cause

    def test_multiple_bibcode_warning_lands_in_report(self, transport, ads_config):
        report = resolve_reference(parse_doi("10.3847/1538-4365/aa8e94"), cfg=ads_config,
                                   transport=transport)
        assert any("matches 2 bibcodes" in w for w in report.warnings)


class TestCrossFormatAgreement:
    @pytest.mark.parametrize("doi", [HITRAN, NIST])
    def test_every_render_embeds_the_canonical_doi(self, doi, transport, ads_config):
        report = resolve_reference(doi, cfg=ads_config, transport=transport)
        for rendered in report.renders.values():
            assert doi.canonical in rendered.body


class TestQueryMode:
    def test_query_resolves_unverified(self, transport, ads_config):
        report = resolve_query_reference(
            "The HITRAN2016 molecular spectroscopic database", cfg=ads_config,
            transport=transport,
        )
        assert report.unverified is True
        assert report.path_taken is ResolutionPath.FALLBACK
        assert report.doi == HITRAN
        assert any("may belong to a different article" in w for w in report.warnings)
        assert set(report.renders) == set(RenderFormat)


class TestResolveAndStore:
    def test_fresh_doi_gets_new_id(self, transport, ads_config, store):
        gid = resolve_and_store(HITRAN, None, store, ads_config, transport)
        assert gid == 1

    def test_same_doi_twice_returns_same_id(self, transport, ads_config, store):
        first = resolve_and_store(HITRAN, None, store, ads_config, transport)
        again, report = resolve_and_store_report(HITRAN, None, store, ads_config, transport)
        assert again == first
        assert any("already stored" in w for w in report.warnings)

    def test_batch_assigns_consecutive_ids(self, transport, ads_config, store):
        dois = [HITRAN, parse_doi("10.1086/670067"), parse_doi("10.1093/mnras/stw2949")]
        ids = [resolve_and_store(d, None, store, ads_config, transport) for d in dois]
        assert ids == [1, 2, 3]

    def test_stored_entry_carries_note(self, transport, ads_config, store):
        gid = resolve_and_store(HITRAN, "For the line list.", store, ads_config, transport)
        assert store.get_entry(gid).note == "For the line list."


class TestPathExclusivity:
    def test_exactly_one_branch_fetches(self, fixture_dir, ads_config):
        from conftest import CountingTransport

        for doi, expect_ads_fetches, expect_negotiations in [
            (HITRAN, 2, 0),
            (NIST, 1, 2),  # the absent-DOI search plus the two negotiation calls
        ]:
            counting = CountingTransport(FixtureTransport.from_dir(fixture_dir))
            resolve_reference(doi, cfg=ads_config, transport=counting)
            assert counting.count("adsabs.harvard.edu") == expect_ads_fetches
            assert counting.count("doi.org") == expect_negotiations
