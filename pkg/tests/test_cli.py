import json

import numpy as np
import pytest

from clustext.cli import main
from clustext.embed import load_embeddings
from conftest import four_blobs


AGNEWS_CSV = "".join(
    f'"{i % 4 + 1}","Title number {i} about ai","description {i}"\n' for i in range(24)
)


@pytest.fixture
def agnews_path(tmp_path):
    p = tmp_path / "ag.csv"
    p.write_text(AGNEWS_CSV, encoding="utf-8")
    return p


def write_train_config(tmp_path, data_path, fmt, extra_train="", labels_path=None):
    labels_line = f'labels_path = "{labels_path}"\n' if labels_path else ""
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        f"""
[data]
path = "{data_path}"
format = "{fmt}"
{labels_line}
[train]
epochs = 3
batch_size = 24
tau = 0.5
lr = 0.001
lr_scale = 50.0
head = "kmeans"
n_clusters = 4
seed = 5
provider = "bow"
dim = 32
{extra_train}
""",
        encoding="utf-8",
    )
    return cfg


class TestPreprocessCommand:
    def test_writes_cleaned_jsonl(self, agnews_path, tmp_path, capsys):
        out = tmp_path / "clean.jsonl"
        rc = main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
                   "--output", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 25  # header + 24 docs
        rec = json.loads(lines[1])
        assert rec["text"] == rec["text"].lower()

    def test_keyword_filter_and_dedup(self, tmp_path):
        src = tmp_path / "ag.csv"
        src.write_text('"1","AI in school","d"\n"1","AI in school","d"\n'
                       '"2","cooking pasta","d"\n', encoding="utf-8")
        out = tmp_path / "c.jsonl"
        rc = main(["preprocess", "--input", str(src), "--format", "agnews",
                   "--output", str(out), "--keywords", "ai"])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2  # header + the single surviving unique doc


class TestEmbedCommand:
    def test_emits_loadable_emb1(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        out = tmp_path / "c.emb"
        rc = main(["embed", "--input", str(clean), "--output", str(out),
                   "--dim", "16", "--seed", "3"])
        assert rc == 0
        emb = load_embeddings(out)
        assert emb.d == 16
        assert emb.n == 24

    def test_missing_input_exits_one(self, tmp_path, capsys):
        rc = main(["embed", "--input", str(tmp_path / "nope.jsonl"),
                   "--output", str(tmp_path / "x.emb")])
        assert rc == 1
        assert "nope.jsonl" in capsys.readouterr().err


class TestTrainCommand:
    def test_train_from_config_writes_report(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        cfg = write_train_config(tmp_path, clean, "jsonl")
        out = tmp_path / "run.json"
        rc = main(["train", "--config", str(cfg), "--output", str(out)])
        assert rc == 0
        result = json.loads(out.read_text())
        assert set(result) == {"config", "labels", "report", "trace", "wall_time"}
        assert len(result["trace"]) == 3
        # the echoed config re-parses to an equal, valid config
        from clustext.trainer import TrainConfig
        echoed = TrainConfig.from_dict(result["config"]).validate()
        assert echoed.to_dict() == result["config"]

    def test_repeat_runs_identical_modulo_wall_time(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        cfg = write_train_config(tmp_path, clean, "jsonl")
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert main(["train", "--config", str(cfg), "--output", str(out),
                         "--seed", "7"]) == 0
            d = json.loads(out.read_text())
            d.pop("wall_time")
            outs.append(json.dumps(d, sort_keys=True))
        assert outs[0] == outs[1]

    def test_flag_overrides_config(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        cfg = write_train_config(tmp_path, clean, "jsonl")
        out = tmp_path / "r.json"
        assert main(["train", "--config", str(cfg), "--output", str(out),
                     "--epochs", "1"]) == 0
        assert len(json.loads(out.read_text())["trace"]) == 1

    def test_emb1_data_with_labels_file(self, tmp_path):
        X, y, _ = four_blobs(n_per=10)
        from clustext.embed import EmbeddingSet, save_embeddings
        emb_path = tmp_path / "blobs.emb"
        save_embeddings(EmbeddingSet(data=X.astype(np.float32)), emb_path)
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("".join(f"{v}\n" for v in y))
        cfg = write_train_config(tmp_path, emb_path, "emb1",
                                 extra_train='', labels_path=labels_path)
        text = cfg.read_text().replace('provider = "bow"', 'provider = "file"')
        text = text.replace("batch_size = 24", "batch_size = 40")
        cfg.write_text(text)
        out = tmp_path / "r.json"
        assert main(["train", "--config", str(cfg), "--output", str(out)]) == 0
        assert json.loads(out.read_text())["report"]["acc"] >= 0.99

    def test_unknown_config_key_exits_one(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[train]\nbanana = 1\n", encoding="utf-8")
        rc = main(["train", "--config", str(cfg)])
        assert rc == 1
        assert "banana" in capsys.readouterr().err

    def test_missing_config_exits_one(self, tmp_path, capsys):
        rc = main(["train", "--config", str(tmp_path / "none.toml")])
        assert rc == 1
        assert "none.toml" in capsys.readouterr().err


class TestSweepCommand:
    def test_tau_grid_csv_shape(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        cfg = write_train_config(tmp_path, clean, "jsonl")
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", "--config", str(cfg), "--axis", "tau",
                   "--values", "0.4,0.5,0.6,0.7,0.8,0.9", "--output", str(out),
                   "--epochs", "1"])
        assert rc == 0
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert header == ["dataset", "head", "metric", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"]
        assert len(lines) == 1 + 2  # one head x two metrics

    def test_bad_axis_flag_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--config", "x.toml", "--axis", "alpha", "--values", "1"])
        assert exc.value.code == 2


class TestEvaluateCommand:
    def test_identical_files_give_perfect_scores(self, tmp_path, capsys):
        p = tmp_path / "p.txt"
        t = tmp_path / "t.txt"
        p.write_text("0\n1\n2\n0\n")
        t.write_text("0\n1\n2\n0\n")
        rc = main(["evaluate", "--pred", str(p), "--truth", str(t)])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["acc"] == 1.0
        assert report["nmi"] == 1.0

    def test_length_mismatch_exits_one(self, tmp_path, capsys):
        p = tmp_path / "p.txt"
        t = tmp_path / "t.txt"
        p.write_text("0\n1\n")
        t.write_text("0\n")
        assert main(["evaluate", "--pred", str(p), "--truth", str(t)]) == 1
        assert "mismatch" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point_runs(self, tmp_path):
        import subprocess
        import sys
        p = tmp_path / "p.txt"
        t = tmp_path / "t.txt"
        p.write_text("0\n1\n")
        t.write_text("1\n0\n")
        proc = subprocess.run(
            [sys.executable, "-m", "clustext.cli", "evaluate",
             "--pred", str(p), "--truth", str(t)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["acc"] == 1.0

    def test_sweep_jobs_flag_matches_serial(self, agnews_path, tmp_path):
        clean = tmp_path / "c.jsonl"
        main(["preprocess", "--input", str(agnews_path), "--format", "agnews",
              "--output", str(clean)])
        cfg = write_train_config(tmp_path, clean, "jsonl")
        outs = []
        for jobs, name in (("1", "s.csv"), ("2", "p.csv")):
            out = tmp_path / name
            assert main(["sweep", "--config", str(cfg), "--axis", "tau",
                         "--values", "0.5,0.9", "--jobs", jobs,
                         "--output", str(out), "--epochs", "1"]) == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]


class TestUsageErrors:
    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_bad_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--config", "c.toml", "--no-such-flag"])
        assert exc.value.code == 2

    def test_selftest_passes(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "FAIL" not in out
