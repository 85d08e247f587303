import json
import subprocess
import sys

import numpy as np

from supcon.cli import main
from supcon.envelope import convex_envelope
from supcon.funcspace import GridSpec, corpus_entry, load_csv, sample


def run_cli(*argv):
    return main(list(argv))


def run_proc(*argv):
    return subprocess.run([sys.executable, "-m", "supcon", *argv],
                          capture_output=True, text=True)


def test_corpus_list(capsys):
    assert run_cli("corpus", "list") == 0
    out = capsys.readouterr().out
    assert "clamp1d" in out and "arctan_det" in out


def test_corpus_list_json(tmp_path):
    path = tmp_path / "corpus.json"
    assert run_cli("corpus", "list", "--json", str(path)) == 0
    rows = json.loads(path.read_text())
    assert any(r["name"] == "one_minus_chi_pair" for r in rows)


def test_envelope_command_writes_reloadable_csv(tmp_path):
    code = run_cli("envelope", "--corpus", "double_well_1d", "--kind", "convex",
                   "--radius", "3.0", "--points", "61", "--out", str(tmp_path))
    assert code == 0
    out = load_csv(tmp_path / "double_well_1d_convex.csv")
    expected = convex_envelope(sample(corpus_entry("double_well_1d"),
                                      GridSpec((1, 1), 3.0, 61)))
    assert np.array_equal(out.values, expected.values)


def test_envelope_command_other_kinds(tmp_path):
    assert run_cli("envelope", "--corpus", "double_well_1d", "--kind",
                   "pasch-hausdorff", "--lam", "2.0", "--radius", "3",
                   "--points", "31", "--out", str(tmp_path)) == 0
    assert run_cli("envelope", "--corpus", "double_well_1d", "--kind",
                   "lamination", "--radius", "3", "--points", "31",
                   "--out", str(tmp_path)) == 0
    assert (tmp_path / "double_well_1d_pasch-hausdorff.csv").exists()
    assert (tmp_path / "double_well_1d_lamination.csv").exists()


def test_envelope_command_reingests_own_output(tmp_path):
    assert run_cli("envelope", "--corpus", "clamp1d", "--kind", "lslc",
                   "--radius", "2.0", "--points", "21", "--out", str(tmp_path)) == 0
    assert run_cli("envelope", "--input", str(tmp_path / "clamp1d_lslc.csv"),
                   "--kind", "convex", "--out", str(tmp_path)) == 0
    assert (tmp_path / "clamp1d_lslc_convex.csv").exists()


def test_classify_expect_exit_codes(tmp_path):
    base = ("classify", "--corpus", "double_well_1d", "--budget", "2000",
            "--out", str(tmp_path))
    assert run_cli(*base, "--expect", "violated") == 0
    assert run_cli(*base, "--expect", "holds") == 2
    report = json.loads((tmp_path / "classify_double_well_1d.json").read_text())
    assert report["verdicts"]["level_convex"]["outcome"] == "violated"


def test_classify_determinism_modulo_timestamp(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("classify", "--corpus", "arctan_det", "--budget", "2000",
                       "--out", str(out)) == 0
    da = json.loads((a / "classify_arctan_det.json").read_text())
    db = json.loads((b / "classify_arctan_det.json").read_text())
    da.pop("timestamp"), db.pop("timestamp")
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)


def test_powerlaw_command(tmp_path):
    code = run_cli("powerlaw", "--corpus", "clamp1d", "--radius", "10",
                   "--points", "201", "--mode", "convex-lower",
                   "--p-schedule", "2,8,32", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "powerlaw_clamp1d.json").read_text())
    assert doc["mode"] == "convex-lower"
    assert doc["gap_detected"] is True
    for ref in doc["per_p"]:
        assert (tmp_path / ref).exists()


def test_gamma1d_command(tmp_path):
    code = run_cli("gamma1d", "--corpus", "clamp1d", "--xi", "1.0",
                   "--p-schedule", "2,8", "--cells", "16", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "gamma1d_clamp1d.json").exists()


def test_gamma1d_rejects_matrix_entries():
    assert run_cli("gamma1d", "--corpus", "arctan_det", "--xi", "0.0") == 1


def test_laminate_check_expect(tmp_path):
    assert run_cli("laminate-check", "--corpus", "one_minus_chi_pair",
                   "--budget", "2000", "--expect", "violated",
                   "--out", str(tmp_path)) == 0
    assert run_cli("laminate-check", "--corpus", "clamp1d",
                   "--budget", "2000", "--expect", "violated") == 2


def test_morrey_search_per_notion(tmp_path):
    assert run_cli("morrey-search", "--corpus", "one_minus_chi_pair",
                   "--notion", "periodic", "--budget", "2000",
                   "--expect", "violated", "--out", str(tmp_path)) == 0
    doc = json.loads((tmp_path / "morrey_periodic_one_minus_chi_pair.json").read_text())
    assert doc["outcome"] == "violated"
    assert doc["witness"]["gap"] == 1.0
    assert run_cli("morrey-search", "--corpus", "one_minus_chi_pair",
                   "--notion", "weak", "--budget", "2000",
                   "--expect", "holds") == 0


def test_morrey_search_explicit_xi():
    assert run_cli("morrey-search", "--corpus", "double_well_1d",
                   "--notion", "strong", "--xi", "0.0", "--budget", "2000",
                   "--expect", "violated") == 0


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"budget": 1000, "radius": 2.0}))
    out = tmp_path / "out"
    assert run_cli("classify", "--corpus", "clamp1d", "--config", str(cfg),
                   "--out", str(out)) == 0
    doc = json.loads((out / "classify_clamp1d.json").read_text())
    assert doc["config"]["budget"] == 1000
    out2 = tmp_path / "out2"
    assert run_cli("classify", "--corpus", "clamp1d", "--config", str(cfg),
                   "--budget", "1500", "--out", str(out2)) == 0
    doc2 = json.loads((out2 / "classify_clamp1d.json").read_text())
    assert doc2["config"]["budget"] == 1500


def test_unknown_corpus_exits_one():
    assert run_cli("classify", "--corpus", "nope") == 1


def test_missing_out_exits_one():
    assert run_cli("envelope", "--corpus", "clamp1d", "--kind", "convex") == 1
    assert run_cli("powerlaw", "--corpus", "clamp1d") == 1


def test_usage_errors_exit_one():
    proc = run_proc("no-such-command")
    assert proc.returncode == 1
    proc = run_proc("morrey-search", "--corpus", "clamp1d")  # missing --notion
    assert proc.returncode == 1


def test_no_command_prints_help():
    assert run_cli() == 1
