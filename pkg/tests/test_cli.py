"""End-to-end CLI tests, all offline against the fixture corpus."""

from __future__ import annotations

import pytest

from refs import BibRecord, RefStore, make_author, parse_doi
from refs.cli import main
from refs.model import Pages

from conftest import FIXTURE_DIR

HITRAN = "10.1016/j.jqsrt.2017.06.038"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for var in ("REFS_DB", "REFS_FIXTURES", "REFS_ADS_TOKEN"):
        monkeypatch.delenv(var, raising=False)


@pytest.fixture()
def db_path(tmp_path):
    return str(tmp_path / "refs.db")


def run(capsys, *argv: str):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def offline(*argv: str, db: str) -> list[str]:
    return [*argv, "--db", db, "--offline", "--fixtures", str(FIXTURE_DIR)]


class TestAdd:
    def test_add_by_doi_prints_id_and_path(self, capsys, db_path):
        code, out, _ = run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        assert code == 0
        assert out == "id=1 path=ads\n"

    def test_add_fallback_doi(self, capsys, db_path):
        code, out, _ = run(capsys, *offline("add", "--doi", "10.18434/t4w30f", db=db_path))
        assert code == 0
        assert out == "id=1 path=fallback\n"

    def test_neither_doi_nor_query_is_usage_error(self, capsys, db_path):
        code, out, err = run(capsys, "add", "--db", db_path, "--offline",
                             "--fixtures", str(FIXTURE_DIR))
        assert code == 64
        assert out == ""
        assert "exactly one" in err

    def test_both_doi_and_query_is_usage_error(self, capsys, db_path):
        code, _, _ = run(capsys, *offline("add", "--doi", HITRAN, "--query", "t", db=db_path))
        assert code == 64

    def test_invalid_doi_exits_1(self, capsys, db_path):
        code, _, err = run(capsys, *offline("add", "--doi", "not-a-doi", db=db_path))
        assert code == 1
        assert "not-a-doi" in err

    def test_resolution_failure_exits_2(self, capsys, db_path):
        code, _, err = run(capsys, *offline("add", "--doi", "10.1000/unregistered", db=db_path))
        assert code == 2
        assert "resolution failed" in err

    def test_query_mode_marks_unverified(self, capsys, db_path):
        code, out, err = run(
            capsys,
            *offline("add", "--query", "The HITRAN2016 molecular spectroscopic database",
                     db=db_path),
        )
        assert code == 0
        assert out == "id=1 path=fallback unverified\n"
        assert "may belong to a different article" in err

    def test_repeat_add_returns_same_id_with_warning(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        code, out, err = run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        assert code == 0
        assert out == "id=1 path=ads\n"
        assert "already stored" in err

    def test_note_is_persisted(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, "--note", "For intensities.", db=db_path))
        with RefStore(db_path) as store:
            assert store.get_entry(1).note == "For intensities."

    def test_offline_without_fixtures_is_usage_error(self, capsys, db_path):
        code, _, err = run(capsys, "add", "--doi", HITRAN, "--db", db_path, "--offline")
        assert code == 64
        assert "REFS_FIXTURES" in err

    def test_live_mode_without_token_fails_fast(self, capsys, db_path):
        code, _, err = run(capsys, "add", "--doi", HITRAN, "--db", db_path)
        assert code == 64
        assert "REFS_ADS_TOKEN" in err

    def test_fixtures_from_environment(self, capsys, db_path, monkeypatch):
        monkeypatch.setenv("REFS_FIXTURES", str(FIXTURE_DIR))
        code, out, _ = run(capsys, "add", "--doi", HITRAN, "--db", db_path, "--offline")
        assert code == 0
        assert out == "id=1 path=ads\n"

    def test_stdout_is_byte_identical_across_runs(self, capsys, tmp_path):
        outs = []
        for name in ("one.db", "two.db"):
            code, out, _ = run(
                capsys, *offline("add", "--doi", HITRAN, db=str(tmp_path / name))
            )
            assert code == 0
            outs.append(out)
        assert outs[0] == outs[1]


class TestRender:
    @pytest.fixture()
    def seeded(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        return db_path

    def test_bibtex_to_stdout(self, capsys, seeded):
        code, out, _ = run(capsys, "render", "1", "--format", "bibtex", "--db", seeded)
        assert code == 0
        assert out.startswith("@article{2017JQSRT.203....3G,")

    def test_html_line_has_two_trailing_links(self, capsys, seeded):
        code, out, _ = run(capsys, "render", "1", "--format", "html", "--db", seeded)
        assert code == 0
        body = out.rstrip("\n")
        assert body.count("<a href=") == 2
        assert body.rstrip().endswith("</a>")
        assert "doi.org" in body and "adsabs.harvard.edu" in body

    def test_unknown_id_exits_2(self, capsys, seeded):
        code, _, err = run(capsys, "render", "999", "--format", "json", "--db", seeded)
        assert code == 2
        assert "999" in err

    def test_default_format_is_text(self, capsys, seeded):
        code, out, _ = run(capsys, "render", "1", "--db", seeded)
        assert code == 0
        assert "<" not in out


class TestExport:
    def test_export_all_writes_bundle(self, capsys, db_path, tmp_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        out_dir = tmp_path / "out"
        code, out, _ = run(capsys, "export", "--all", "-o", str(out_dir), "--db", db_path)
        assert code == 0
        assert (out_dir / "refs.html").exists()
        assert (out_dir / "refs.bib").exists()
        assert str(out_dir / "refs.html") in out
        assert str(out_dir / "refs.bib") in out

    def test_empty_store_exits_2(self, capsys, db_path, tmp_path):
        code, _, err = run(capsys, "export", "--all", "-o", str(tmp_path), "--db", db_path)
        assert code == 2
        assert "no entries" in err

    def test_unknown_ids_exit_2(self, capsys, db_path, tmp_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        code, _, _ = run(capsys, "export", "7", "-o", str(tmp_path), "--db", db_path)
        assert code == 2

    def test_neither_ids_nor_all_is_usage_error(self, capsys, db_path, tmp_path):
        code, _, _ = run(capsys, "export", "-o", str(tmp_path), "--db", db_path)
        assert code == 64

    def test_export_663_and_665_labels(self, capsys, db_path, tmp_path):
        # Seed a store whose IDs genuinely reach 663 and 665.
        with RefStore(db_path) as store:
            for i in range(1, 663):
                store.add_entry([BibRecord(title=f"Filler {i}", year=2000,
                                           doi=parse_doi(f"10.9999/fill.{i}"))])
            gid_a = store.add_entry(
                [
                    BibRecord(title="Acetone cross sections, part one",
                              authors=[make_author("A.", "One")], journal="JQSRT",
                              volume="10", pages=Pages("1", "5"), year=2011,
                              doi=parse_doi("10.9999/acetone.1")),
                    BibRecord(title="Acetone cross sections, part two",
                              authors=[make_author("B.", "Two")], journal="JQSRT",
                              volume="11", pages=Pages("6", "9"), year=2012,
                              doi=parse_doi("10.9999/acetone.2")),
                ],
                note="Combined retrieval.",
            )
            store.add_entry([BibRecord(title="Filler 664", year=2001,
                                       doi=parse_doi("10.9999/fill.664"))])
            gid_b = store.add_entry([BibRecord(title="Formaldehyde cross sections",
                                               authors=[make_author("C.", "Three")],
                                               journal="JQSRT", volume="12",
                                               pages=Pages("10", "20"), year=2013,
                                               doi=parse_doi("10.9999/h2co.1"))])
        assert (gid_a, gid_b) == (663, 665)

        code, _, _ = run(capsys, "export", "663", "665", "-o", str(tmp_path), "--db", db_path)
        assert code == 0
        html = (tmp_path / "refs.html").read_text(encoding="utf-8")
        assert "663a. " in html and "663b. " in html
        assert "665. " in html
        assert "664" not in html


class TestCrossref:
    @pytest.fixture()
    def seeded(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        run(capsys, *offline("add", "--doi", "10.1086/670067", db=db_path))
        return db_path

    def test_attach_and_reattach(self, capsys, seeded):
        code, out, _ = run(capsys, "crossref", "H2C18O", "nu", "5", "1", "--db", seeded)
        assert code == 0 and out == ""
        code, _, _ = run(capsys, "crossref", "H2C18O", "nu", "5", "1", "--db", seeded)
        assert code == 0
        with RefStore(seeded) as store:
            assert store.lookup_crossref("H2C18O", "nu", 5) == 1

    def test_conflicting_remap_exits_3(self, capsys, seeded):
        run(capsys, "crossref", "H2C18O", "nu", "5", "1", "--db", seeded)
        code, _, err = run(capsys, "crossref", "H2C18O", "nu", "5", "2", "--db", seeded)
        assert code == 3
        assert "already mapped" in err

    def test_unknown_global_id_exits_2(self, capsys, seeded):
        code, _, _ = run(capsys, "crossref", "H2C18O", "nu", "5", "42", "--db", seeded)
        assert code == 2


class TestList:
    def test_lists_ids_and_titles(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        run(capsys, *offline("add", "--doi", "10.1086/670067", db=db_path))
        code, out, _ = run(capsys, "list", "--db", db_path)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("1\tThe HITRAN2016")
        assert lines[1].startswith("2\temcee")

    def test_scope_filter(self, capsys, db_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        run(capsys, *offline("add", "--doi", "10.1086/670067", db=db_path))
        run(capsys, "crossref", "H2O", "nu", "0", "2", "--db", db_path)
        code, out, _ = run(capsys, "list", "--scope", "H2O", "--db", db_path)
        assert code == 0
        assert out.startswith("2\t")
        assert "1\t" not in out


class TestStoreFailures:
    def test_unreadable_db_exits_3(self, capsys, tmp_path):
        target = tmp_path / "not-a-db"
        target.write_bytes(b"\x00" * 32)
        code, _, _ = run(capsys, "list", "--db", str(target))
        assert code == 3

    def test_unwritable_export_dir_exits_3(self, capsys, db_path, tmp_path):
        run(capsys, *offline("add", "--doi", HITRAN, db=db_path))
        blocker = tmp_path / "blocker"
        blocker.write_text("in the way")
        code, _, _ = run(capsys, "export", "--all", "-o", str(blocker / "out"), "--db", db_path)
        assert code == 3
