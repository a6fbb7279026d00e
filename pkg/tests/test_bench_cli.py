import numpy as np
import pytest

from tsetlin_index import ConfigError, TMConfig, TsetlinMachine, load_bank
from tsetlin_index.bench import (BenchReport, Experiment, Record, Variant, emit_report, read_report_csv,
                                 run_experiment, verify_mode)
from tsetlin_index.cli import main
from tsetlin_index.data_pipeline import (BinarizeSpec, binarize_images, load_dataset, noisy_xor,
                                         save_dataset, write_idx_images, write_idx_labels)


def _xor_variant(o=6, rows=200):
    return Variant(noisy_xor(rows, o=o, rng=1), noisy_xor(rows, o=o, noise=0.0, rng=2), f"o={o}")


# --- experiments ------------------------------------------------------------


def test_inference_only_run():
    exp = Experiment("noisy-xor", [_xor_variant()], clauses=(4,), epochs=0)
    report = run_experiment(exp)
    assert {r.phase for r in report.records} == {"test"}
    assert len(report.find(backend="direct")) == 1
    # an untrained bank is all-empty: every clause is true, nothing is visited
    assert report.find(backend="indexed")[0].literal_visits == 0
    assert report.find(backend="direct")[0].literal_visits == 200 * 2 * 4 * 12


def test_backends_share_trajectory():
    exp = Experiment("noisy-xor", [_xor_variant()], clauses=(10, 20), epochs=3, reps=2)
    report = run_experiment(exp)
    assert report.metadata["trajectory_mismatches"] == []
    for n in (10, 20):
        for rep in range(2):
            assert report.curves[f"noisy-xor/6/{n}/direct/{rep}"] == report.curves[f"noisy-xor/6/{n}/indexed/{rep}"]
    train = report.find(clauses=10, phase="train")
    assert len(train) == 2 and all(r.speedup is not None for r in train)
    assert report.metadata["generator"].startswith("numpy.random.Generator")


def test_machines_with_same_seed_are_bit_identical():
    ds = noisy_xor(300, o=8, rng=3)
    cfg = TMConfig(m=2, n=12, o=8, T=5, seed=4)
    a, b = TsetlinMachine(cfg, "direct"), TsetlinMachine(cfg, "indexed")
    a.fit(ds.features, ds.labels, epochs=4)
    b.fit(ds.features, ds.labels, epochs=4)
    np.testing.assert_array_equal(a.bank.states, b.bank.states)
    assert a.flips == b.flips
    b.index.verify(b.bank)
    np.testing.assert_array_equal(a.class_scores(ds.features), b.class_scores(ds.features))


@pytest.mark.parametrize("kwargs", [dict(clauses=()), dict(clauses=(3,)), dict(reps=0), dict(epochs=-1),
                                    dict(backend="gpu")])
def test_bad_experiment(kwargs):
    with pytest.raises(ConfigError):
        Experiment("noisy-xor", [_xor_variant()], **kwargs)


def test_threshold_rule():
    exp = Experiment("mnist", [], clauses=(1000,))
    assert exp.threshold(1000) == 40
    assert exp.threshold(2) == 1
    assert Experiment("noisy-xor", [], clauses=(2,)).threshold(20000) == 15


# --- reports ----------------------------------------------------------------


def test_empty_report_is_header_only(tmp_path):
    path = emit_report(BenchReport(), tmp_path / "r.csv")
    assert path.read_text().splitlines() == [
        "dataset,features,clauses,backend,phase,epoch_s_mean,epoch_s_std,literal_visits,speedup"]
    assert read_report_csv(path) == []


def _grid_report():
    records = []
    for o in (784, 1568, 2352, 3136):
        for n in (1000, 2000, 5000, 10000, 20000):
            for phase in ("train", "test"):
                for backend, t in (("direct", 2.0), ("indexed", 0.5)):
                    records.append(Record("mnist", o, n, backend, phase, t, 0.01, 7, 4.0))
    return BenchReport(records)


def test_markdown_layout(tmp_path):
    text = emit_report(_grid_report(), tmp_path / "r.md", "markdown").read_text()
    rows = [line for line in text.splitlines() if line.startswith("| ")]
    header, sub, body = rows[0], rows[1], rows[2:]
    assert all(str(o) in header for o in (784, 1568, 2352, 3136))
    assert sub.count("Train | Test") == 4
    assert [r.split("|")[1].strip() for r in body] == ["1000", "2000", "5000", "10000", "20000"]
    assert all(r.count("4.00") == 8 for r in body)


def test_csv_round_trip(tmp_path):
    report = _grid_report()
    report.records[0].speedup = None
    report.records[1].epoch_s_mean = 1 / 3
    path = emit_report(report, tmp_path / "r.csv")
    assert read_report_csv(path) == report.records


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(BenchReport(), tmp_path / "r", "xml")


# --- verify -----------------------------------------------------------------


def test_verify_passes():
    result = verify_mode(seed=0, instances=30)
    assert result.ok, result.failures
    assert result.checks == 120


def test_verify_catches_corruption():
    result = verify_mode(seed=0, instances=5, corrupt=True)
    assert not result.ok
    assert all("seed=" in f for f in result.failures)
    assert any("class=" in f for f in result.failures)


def test_verify_is_deterministic():
    a = verify_mode(seed=7, instances=5, corrupt=True)
    b = verify_mode(seed=7, instances=5, corrupt=True)
    assert a.failures == b.failures


# --- command line -----------------------------------------------------------


def test_cli_verify(capsys):
    assert main(["verify", "--instances", "10"], environ={}) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify", "--instances", "3", "--inject-corruption"], environ={}) == 1
    assert "seed=" in capsys.readouterr().out


def test_cli_train_writes_bank(tmp_path, capsys):
    out = tmp_path / "xor.tmbk"
    assert main(["train", "--dataset", "noisy-xor", "--clauses", "10", "--epochs", "2",
                 "--out", str(out)], environ={}) == 0
    assert capsys.readouterr().out.count("epoch ") == 2
    bank, idx = load_bank(out)
    assert (bank.m, bank.n, bank.o) == (2, 10, 12)


def test_cli_env_and_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nclauses = 8\nepochs = 3\n")
    out = tmp_path / "b.tmbk"
    argv = ["--config", str(cfg), "train", "--dataset", "noisy-xor", "--out", str(out)]
    assert main(argv, environ={"TSETLIN_INDEX_EPOCHS": "1"}) == 0
    assert capsys.readouterr().out.count("epoch ") == 1
    assert load_bank(out)[0].n == 8
    assert main(argv + ["--epochs", "2"], environ={"TSETLIN_INDEX_EPOCHS": "1"}) == 0
    assert capsys.readouterr().out.count("epoch ") == 2


def test_cli_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(SystemExit):
        main(["--config", str(cfg), "verify"], environ={})


def test_cli_bench_markdown(tmp_path, capsys):
    out = tmp_path / "r.md"
    assert main(["bench", "--dataset", "noisy-xor", "--clauses", "4,8", "--features", "4,6",
                 "--epochs", "1", "--format", "markdown", "--out", str(out)], environ={}) == 0
    assert "### noisy-xor" in out.read_text()


def test_cli_binarize_images_then_bench(tmp_path, rng):
    images = rng.integers(0, 256, (30, 4, 4)).astype(np.uint8)
    labels = rng.integers(0, 3, 30).astype(np.uint8)
    write_idx_images(tmp_path / "img.idx.gz", images)
    write_idx_labels(tmp_path / "lab.idx", labels)
    out = tmp_path / "d.tmds"
    assert main(["binarize", "--images", str(tmp_path / "img.idx.gz"), "--labels", str(tmp_path / "lab.idx"),
                 "--bits", "2", "--classes", "3", "--out", str(out)], environ={}) == 0
    ds = load_dataset(out)
    assert ds == binarize_images(images, BinarizeSpec(2), labels, 3, source=str(tmp_path / "img.idx.gz"))
    report = tmp_path / "r.csv"
    assert main(["bench", "--dataset", str(out), "--clauses", "4", "--out", str(report)], environ={}) == 0
    assert {r.features for r in read_report_csv(report)} == {32}


def test_cli_binarize_text(tmp_path):
    corpus = tmp_path / "reviews.tsv"
    corpus.write_text("1\tgreat film\n0\tdull film\n\n1\tgreat\n", encoding="utf-8")
    out, vocab = tmp_path / "t.tmds", tmp_path / "vocab.txt"
    assert main(["binarize", "--text", str(corpus), "--features", "2", "--vocab-out", str(vocab),
                 "--out", str(out)], environ={}) == 0
    ds = load_dataset(out)
    assert vocab.read_text().split() == ["film", "great"]
    assert ds.features.tolist() == [[1, 1], [1, 0], [0, 1]]
    assert ds.labels.tolist() == [1, 0, 1]


def test_cli_missing_inputs(tmp_path):
    with pytest.raises(SystemExit):
        main(["binarize", "--out", str(tmp_path / "x")], environ={})
    with pytest.raises(SystemExit):
        main(["train", "--dataset", str(tmp_path / "missing.tmds")], environ={})


def test_train_on_saved_dataset(tmp_path, capsys):
    path = tmp_path / "x.tmds"
    save_dataset(path, noisy_xor(100, o=5, rng=0))
    assert main(["train", "--dataset", str(path), "--clauses", "6", "--epochs", "1",
                 "--backend", "direct"], environ={}) == 0
    assert "accuracy" in capsys.readouterr().out
