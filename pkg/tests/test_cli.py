import csv
import json
import shutil
from pathlib import Path

import pytest

from domaincraft.analysis import RunResult
from domaincraft.cli import main, render_report
from domaincraft.strategy import Mode, Strategy

GOLDEN = Path(__file__).parent / "golden"

TINY_CONFIG = """\
# tiny model so the end-to-end path runs in seconds
model.layers = 1
model.heads = 2
model.d_model = 32
model.d_ff = 64
model.max_len = 32
bpe.vocab_size = 150
train.epochs = 2
train.lr = 0.003
train.dropout = 0.0
train.attention_dropout = 0.0
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err: str) -> dict:
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


@pytest.fixture(scope="module")
def tiny_ws(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    assert main(["--workspace", str(root), "synth", "--domain", "alpha:30", "--domain", "beta:30:0.6",
                 "--domain", "gamma:30:0.2:0.5", "--train-size", "120", "--test-size", "20",
                 "--length", "3", "6"]) == 0
    (root / "domaincraft.conf").write_text(TINY_CONFIG)
    return root


@pytest.fixture
def ws(tiny_ws, tmp_path):
    root = tmp_path / "ws"
    shutil.copytree(tiny_ws, root)
    return root


def test_version_and_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "domaincraft" in capsys.readouterr().out
    code, _, err = run(capsys, "plan")
    assert code == 2 and error_of(err)["error"] == "UsageError"
    code, _, err = run(capsys, "bogus")
    assert code == 2 and error_of(err)["error"] == "UsageError"


def test_missing_workspace_is_single_line_error(capsys, tmp_path):
    code, _, err = run(capsys, "--workspace", tmp_path / "none", "analyze")
    assert code == 1 and error_of(err)["error"] == "WorkspaceError"


def test_ingest_creates_workspace(capsys, tmp_path):
    src, tgt = tmp_path / "x.src", tmp_path / "x.tgt"
    src.write_text("a b\n\nc d\n")
    tgt.write_text("x\ny\nz\n")
    code, out, _ = run(capsys, "--workspace", tmp_path / "w", "ingest", "--domain", "pmi", "--lang", "en-si",
                       "--src", src, "--tgt", tgt)
    assert code == 0 and "2 pairs (1 dropped)" in out
    assert (tmp_path / "w" / "corpora" / "en-si" / "pmi" / "train.src.txt").read_text() == "a b\nc d\n"
    code, _, err = run(capsys, "--workspace", tmp_path / "w", "ingest", "--domain", "pmi", "--lang", "en-si")
    assert code == 2 and "--tsv" in error_of(err)["message"]


def test_synth_writes_layout(tiny_ws):
    corpora = tiny_ws / "corpora" / "qaa-qab"
    assert sorted(p.name for p in corpora.iterdir() if p.is_dir()) == ["alpha", "beta", "gamma"]
    record = json.loads((corpora / "synth.json").read_text())
    assert [d["name"] for d in record["domains"]] == ["alpha", "beta", "gamma"]


def test_divergence_outputs(capsys, ws):
    code, out, _ = run(capsys, "--workspace", ws, "divergence")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0][1:] == ["alpha/train", "beta/train", "gamma/train"]
    assert all(float(rows[i][i]) == 0.0 for i in range(1, 4))
    assert (ws / "reports" / "divergence.svg").read_text().startswith("<svg")
    code, out, _ = run(capsys, "--workspace", ws, "divergence", "--split", "train", "--split", "test")
    assert len(out.splitlines()) == 7


def test_plan_validation_errors(capsys, ws):
    code, _, err = run(capsys, "--workspace", ws, "plan", "--strategy", "vanilla-ft", "--target", "nope",
                       "--mode", "in-domain")
    assert code == 1 and error_of(err)["error"] == "UnknownDomainError"
    code, _, err = run(capsys, "--workspace", ws, "plan", "--strategy", "vanilla-ft", "--target", "alpha",
                       "--mode", "in-domain", "--fi-size", 500)
    assert code == 1 and "only 120" in error_of(err)["message"]
    code, _, err = run(capsys, "--workspace", ws, "plan", "--strategy", "vanilla-ft", "--target", "alpha",
                       "--mode", "out-domain")
    assert code == 2
    run(capsys, "--workspace", ws, "plan", "--strategy", "vanilla-ft", "--target", "alpha", "--mode", "in-domain",
        "--fi-size", 100, "--id", "fixed")
    code, _, err = run(capsys, "--workspace", ws, "plan", "--strategy", "vanilla-ft", "--target", "beta",
                       "--mode", "in-domain", "--fi-size", 100, "--id", "fixed")
    assert code == 1 and "different definition" in error_of(err)["message"]


def test_plan_large_small_example(capsys, tmp_path):
    root = tmp_path / "big"
    assert main(["--workspace", str(root), "synth", "--domain", "cc:50", "--domain", "bible:50:0.5",
                 "--domain", "pmi:50:0.5:0.5", "--train-size", "25000", "--test-size", "10",
                 "--length", "2", "3"]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "--workspace", root, "plan", "--strategy", "multi-domain-ittl", "--target", "pmi",
                       "--mode", "in-domain", "--im-size", 25000, "--fi-size", 1000)
    assert code == 0
    lines = out.splitlines()
    sid = "qaa-qab_mdittl_in_im25000-fi1000_bible+cc+pmi_to-pmi_test-pmi"
    assert lines[0] == f"manifest written: {root / 'manifests' / (sid + '.json')}"
    assert lines[1:] == [
        f"schedule {sid}",
        "  strategy: multi-domain-ittl (in-domain)",
        "  stage 0 [intermediate] nmt: bible:25000 + cc:25000 + pmi:1000 (seed 222)",
        "  stage 1 [final] nmt: pmi:1000 (seed 222)",
        "  test: pmi/test",
    ]
    manifest = json.loads((root / "manifests" / f"{sid}.json").read_text())
    assert manifest["manifest_version"] == 1
    assert manifest["seeds"] == {"base": 222, "data": [222, 222]}
    assert len(manifest["schedule"]["stages"]) == 2


def plan_and_train(capsys, ws, *extra):
    code, out, err = run(capsys, "--workspace", ws, "plan", *extra)
    assert code == 0, err
    sid = out.splitlines()[1].split()[1]
    code, out, err = run(capsys, "--workspace", ws, "train", "--schedule", sid)
    assert code == 0, err
    return sid, out


def test_train_twice_gives_identical_rows(capsys, ws):
    sid, first = plan_and_train(capsys, ws, "--strategy", "multi-domain-ittl", "--target", "alpha", "--mode",
                                "in-domain", "--im-size", 100, "--fi-size", 100)
    assert first.strip().endswith("(appended)")
    rows_before = (ws / "results.csv").read_text()
    ckpts = json.loads((ws / "manifests" / f"{sid}.json").read_text())["outputs"]["checkpoints"]
    code, second, _ = run(capsys, "--workspace", ws, "train", "--schedule", sid)
    assert code == 0 and second.strip().endswith("(unchanged)")
    assert second.split("(")[0] == first.split("(")[0]
    assert (ws / "results.csv").read_text() == rows_before
    manifest = json.loads((ws / "manifests" / f"{sid}.json").read_text())
    assert manifest["outputs"]["checkpoints"] == ckpts
    assert len(ckpts) == 2 and len(manifest["runs"]) == 2


def test_train_rejects_changed_inputs_and_versions(capsys, ws):
    sid, _ = plan_and_train(capsys, ws, "--strategy", "vanilla-ft", "--target", "beta", "--mode", "in-domain",
                            "--fi-size", 100)
    train = ws / "corpora" / "qaa-qab" / "beta" / "train.src.txt"
    lines = train.read_text().splitlines()
    lines[0] = lines[0] + " extra"
    train.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "--workspace", ws, "train", "--schedule", sid)
    assert code == 1 and "inputs" in error_of(err)["message"]
    path = ws / "manifests" / f"{sid}.json"
    data = json.loads(path.read_text())
    data["manifest_version"] = 7
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, "--workspace", ws, "train", "--schedule", sid)
    assert code == 1 and error_of(err)["error"] == "ManifestVersionError"


def test_full_pipeline_evaluate_analyze_report(capsys, ws):
    plan_and_train(capsys, ws, "--strategy", "vanilla-ft", "--target", "alpha", "--mode", "out-domain",
                   "--test", "gamma", "--fi-size", 100)
    sid, _ = plan_and_train(capsys, ws, "--strategy", "vanilla-ft", "--target", "beta", "--mode", "out-domain",
                            "--test", "gamma", "--fi-size", 100)
    plan_and_train(capsys, ws, "--strategy", "multi-domain-ft", "--target", "alpha", "--mode", "out-domain",
                   "--test", "gamma", "--aux", "beta", "--im-size", 100, "--fi-size", 100)
    hyp_file = ws / "hyps.txt"
    code, out, _ = run(capsys, "--workspace", ws, "evaluate", "--schedule", sid, "--test-domain", "alpha",
                       "--tokenizer", "word", "--output", hyp_file)
    assert code == 0 and "alpha/test bleu" in out and "signature" in out
    assert len(hyp_file.read_text().splitlines()) == 20
    code, out, _ = run(capsys, "--workspace", ws, "evaluate", "--schedule", sid, "--test-domain", "alpha",
                       "--tokenizer", "word")
    assert "(unchanged)" in out

    code, out, _ = run(capsys, "--workspace", ws, "analyze")
    assert code == 0 and out.splitlines()[0] == "strategy,runs,mean,variance,r2,spearman"
    analysis = json.loads((ws / "reports" / "analysis.json").read_text())
    assert analysis["variance"] == "population"
    assert analysis["strategies"]["vanilla-ft"]["runs"] == 3
    runs = list(csv.DictReader((ws / "reports" / "runs.csv").open()))
    assert all(0.0 <= float(r["jsd"]) <= 1.0 for r in runs)

    code, out, _ = run(capsys, "--workspace", ws, "report")
    assert code == 0 and "# Results summary" in out
    assert (ws / "reports" / "summary.md").exists()
    assert (ws / "reports" / "jsd_vs_score.svg").read_text().startswith("<svg")


def test_orphan_rows_fail_loudly(capsys, ws):
    (ws / "results.csv").write_text(
        "schedule_id,strategy,mode,test_domain,im_size,fi_size,metric,score\n"
        "ghost,vanilla-ft,in-domain,alpha,0,100,spbleu,1.0000\n")
    code, _, err = run(capsys, "--workspace", ws, "report")
    assert code == 1 and error_of(err)["error"] == "OrphanRowError"
    code, _, err = run(capsys, "--workspace", ws, "analyze")
    assert code == 1 and "ghost" in error_of(err)["message"]


def test_recommend_command(capsys):
    code, out, _ = run(capsys, "recommend", "--target-size", 1000, "--aux-size", 25000, "--mode", "in-domain")
    assert code == 0
    assert out.splitlines()[:2] == ["strategy: multi-domain-ittl", "rule: R3"]
    code, out, _ = run(capsys, "recommend", "--mode", "out-domain", "--aux-size", "bible=25000",
                       "--aux-size", "pmi=25000", "--jsd", "bible=0.47", "--jsd", "pmi=0.33", "--json")
    rec = json.loads(out)
    assert (rec["strategy"], rec["rule"], rec["final_domain"]) == ("multi-domain-ft", "R5", "pmi")
    code, _, err = run(capsys, "recommend", "--mode", "in-domain", "--target-size", 10, "--jsd", "x")
    assert code == 2


def fixed_results():
    rows = [
        ("vft-1", Strategy.VANILLA_FT, Mode.IN_DOMAIN, 0, 1000, 12.5, 0.12),
        ("mdft-1", Strategy.MULTI_DOMAIN_FT, Mode.IN_DOMAIN, 1000, 1000, 19.5, 0.2),
        ("mdittl-1", Strategy.MULTI_DOMAIN_ITTL, Mode.IN_DOMAIN, 1000, 1000, 20.0, 0.12),
        ("sdittl-1", Strategy.SINGLE_DOMAIN_ITTL, Mode.IN_DOMAIN, 1000, 1000, 16.0, 0.12),
        ("mdft-2", Strategy.MULTI_DOMAIN_FT, Mode.IN_DOMAIN, 25000, 1000, 21.0, 0.3),
        ("mdittl-2", Strategy.MULTI_DOMAIN_ITTL, Mode.IN_DOMAIN, 25000, 1000, 24.5, 0.12),
        ("vft-o1", Strategy.VANILLA_FT, Mode.OUT_DOMAIN, 0, 1000, 3.0, 0.47),
        ("vft-o2", Strategy.VANILLA_FT, Mode.OUT_DOMAIN, 0, 1000, 9.0, 0.33),
        ("mdft-o1", Strategy.MULTI_DOMAIN_FT, Mode.OUT_DOMAIN, 1000, 1000, 10.0, 0.4),
        ("mdittl-o1", Strategy.MULTI_DOMAIN_ITTL, Mode.OUT_DOMAIN, 1000, 1000, 8.0, 0.47),
        ("mdittl-o2", Strategy.MULTI_DOMAIN_ITTL, Mode.OUT_DOMAIN, 1000, 1000, 11.0, 0.33),
    ]
    return [RunResult(sid, s, m, im, fi, "flores", score, jsd) for sid, s, m, im, fi, score, jsd in rows]


def test_report_matches_golden_files():
    md, svg = render_report(fixed_results())
    assert md == (GOLDEN / "summary.md").read_text(encoding="utf-8")
    assert svg == (GOLDEN / "jsd_vs_score.svg").read_text(encoding="utf-8")


def test_report_has_markers_per_size_combination():
    md, _ = render_report(fixed_results())
    assert md.count("## IM ") == 3
    assert md.count("| vanilla-ft | 12.50 |") == 2
    assert "| multi-domain-ittl | 20.00 | **best** |" in md
    assert "| multi-domain-ft | 19.50 | second |" in md
    assert "note: compute-limited pick: MDFT" in md
