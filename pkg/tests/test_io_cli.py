import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nohub.cli import main
from nohub.fslbench import run_benchmark, synthetic_source
from nohub.io import (
    FileFormatError,
    ResultRow,
    read_features,
    read_result_table,
    write_features,
    write_result_table,
)
from nohub.objective import NoHubConfig

any_float = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestFeatureFiles:
    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=any_float))
    def test_csv_round_trip_exact(self, tmp_path_factory, X):
        path = tmp_path_factory.mktemp("csv") / "x.csv"
        write_features(path, X)
        Y, labels, _ = read_features(path)
        assert np.array_equal(X, Y)
        assert np.all(labels == -1)

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=any_float))
    def test_binary_round_trip_exact(self, tmp_path_factory, X):
        path = tmp_path_factory.mktemp("bin") / "x.bin"
        labels = np.arange(len(X)) - 1
        write_features(path, X, labels)
        Y, lab, _ = read_features(path)
        assert X.tobytes() == Y.tobytes()
        assert np.array_equal(lab, labels)

    def test_binary_layout(self, tmp_path):
        path = tmp_path / "x.nhub"
        write_features(path, np.array([[1.5, -2.0]]))
        raw = path.read_bytes()
        assert raw[:4] == b"NHUB"
        assert struct.unpack_from("<HQQB", raw, 4) == (1, 1, 2, 0)
        assert np.frombuffer(raw[23:], "<f8").tolist() == [1.5, -2.0]

    def test_binary_detected_by_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        write_features(path, np.eye(2), [0, 1])
        renamed = path.rename(tmp_path / "x.dat")
        X, y, _ = read_features(renamed)
        assert np.array_equal(X, np.eye(2)) and y.tolist() == [0, 1]

    def test_binary_truncated(self, tmp_path):
        path = tmp_path / "x.bin"
        write_features(path, np.eye(3))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FileFormatError):
            read_features(path)

    def test_comments(self, tmp_path):
        for name in ("a.csv", "a.bin"):
            write_features(tmp_path / name, np.eye(2), comments={"seed": 3})
            assert read_features(tmp_path / name)[2] == {"seed": "3"}

    def test_csv_header(self, tmp_path):
        write_features(tmp_path / "a.csv", np.ones((1, 3)), [2])
        assert (tmp_path / "a.csv").read_text().splitlines() == ["f0,f1,f2,label", "1.0,1.0,1.0,2"]

    def test_parse_error_has_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# note=x\nf0,f1,label\n1,2,0\n1,oops,0\n")
        with pytest.raises(FileFormatError, match=r"bad\.csv:4"):
            read_features(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,label\n1,2\n")
        with pytest.raises(FileFormatError, match=":2"):
            read_features(path)

    def test_result_table_round_trip(self, tmp_path):
        rows = [ResultRow("nohub", "alpha=0.2", 1, 0.1 + 0.2, 0.01, 0.3, 0.02, 10, 4)]
        write_result_table(tmp_path / "r.csv", rows, {"seed": 4})
        back, comments = read_result_table(tmp_path / "r.csv")
        assert back == rows and comments == {"seed": "4"}


def run(*argv):
    return main([str(a) for a in argv])


FAST = ("--episodes", 4, "--iterations", 5, "--dim", 16, "--perplexity", 10,
        "--feature-dim", 32, "--threads", 1)


class TestSynthCommand:
    def test_shape_contract(self, tmp_path):
        out = tmp_path / "pool.csv"
        assert run("synth", "--classes", 20, "--per-class", 50, "--dim", 512, "--seed", 1, "-o", out) == 0
        X, y, comments = read_features(out)
        assert X.shape == (1000, 512)
        assert np.bincount(y).tolist() == [50] * 20
        assert comments["seed"] == "1" and comments["dim"] == "512"

    def test_rerun_is_byte_identical(self, tmp_path):
        out = tmp_path / "p.csv"
        run("synth", "--classes", 3, "--per-class", 4, "--dim", 8, "-o", out)
        first = out.read_bytes()
        run("synth", "--classes", 3, "--per-class", 4, "--dim", 8, "-o", out)
        assert out.read_bytes() == first

    def test_bad_dim_creates_nothing(self, tmp_path):
        out = tmp_path / "p.csv"
        assert run("synth", "--dim", 0, "-o", out) == 2
        assert not out.exists()

    def test_unwritable_output(self, tmp_path):
        assert run("synth", "--classes", 2, "--per-class", 2, "--dim", 4, "-o", tmp_path / "no" / "p.csv") == 4

    def test_usage_error(self):
        assert run("synth") == 2


@pytest.fixture
def pool(tmp_path):
    path = tmp_path / "pool.csv"
    run("synth", "--classes", 6, "--per-class", 10, "--dim", 24, "--separation", 5, "-o", path)
    return path


class TestEmbedCommand:
    def test_verify_and_trace(self, tmp_path, pool):
        out = tmp_path / "z.csv"
        assert run("embed", "-i", pool, "-o", out, "--dim", 8, "--perplexity", 10,
                   "--iterations", 7, "--verify") == 0
        Z, y, comments = read_features(out)
        np.testing.assert_allclose(np.linalg.norm(Z, axis=1), 1.0, atol=1e-12)
        assert Z.shape == (60, 8) and np.bincount(y).tolist() == [10] * 6
        assert comments["iterations"] == "7" and comments["alpha"] == "0.2"
        trace = (tmp_path / "z.trace.csv").read_text().splitlines()
        body = [line for line in trace if not line.startswith("#")]
        assert body[0] == "iteration,lsp,unif,total" and len(body) == 8

    def test_binary_output_keeps_header(self, pool, tmp_path):
        assert run("embed", "-i", pool, "-o", tmp_path / "z.bin", "--perplexity", 10,
                   "--iterations", 2, "--dim", 4) == 0
        assert read_features(tmp_path / "z.bin")[2]["perplexity"] == "10.0"

    def test_table_defaults(self):
        from nohub.cli import build_parser
        args = build_parser().parse_args(["embed", "-i", "x", "-o", "y"])
        assert (args.perplexity, args.alpha, args.learning_rate, args.kappa, args.dim) == (45, 0.2, 0.1, 0.5, 400)
        assert NoHubConfig(variant=args.variant).iterations == 50
        assert NoHubConfig(variant="nohub-s").iterations == 150

    def test_nohub_s_needs_labels(self, tmp_path):
        path = tmp_path / "u.csv"
        write_features(path, np.random.default_rng(0).standard_normal((20, 5)))
        assert run("embed", "-i", path, "-o", tmp_path / "z.csv", "--variant", "nohub-s",
                   "--perplexity", 5, "--dim", 4) == 2
        assert not (tmp_path / "z.csv").exists()

    def test_nohub_s_with_labels(self, tmp_path, pool):
        assert run("embed", "-i", pool, "-o", tmp_path / "z.csv", "--variant", "nohub-s",
                   "--perplexity", 10, "--dim", 6, "--iterations", 3) == 0

    def test_parse_error_is_io_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("f0,label\n1,0\nx,0\n")
        assert run("embed", "-i", path, "-o", tmp_path / "z.csv") == 4
        assert "bad.csv:3" in capsys.readouterr().err

    def test_nonfinite_is_runtime_error(self, tmp_path, pool, capsys):
        assert run("embed", "-i", pool, "-o", tmp_path / "z.csv", "--lr", "inf",
                   "--perplexity", 10, "--dim", 4) == 3
        assert "iteration 1" in capsys.readouterr().err

    def test_perplexity_out_of_range(self, tmp_path, pool):
        assert run("embed", "-i", pool, "-o", tmp_path / "z.csv", "--perplexity", 60) == 2

    def test_missing_input(self, tmp_path):
        assert run("embed", "-i", tmp_path / "nope.csv", "-o", tmp_path / "z.csv") == 4


class TestEvalCommand:
    def test_rows_per_method_and_shot(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run("eval", "--methods", "none,l2,nohub", "--shots", "1,5", *FAST, "-o", out) == 0
        rows, comments = read_result_table(out)
        assert [(r.method, r.shots) for r in rows] == [
            ("none", 1), ("l2", 1), ("nohub", 1), ("none", 5), ("l2", 5), ("nohub", 5)]
        assert all(np.isfinite([r.accuracy_mean, r.accuracy_ci, r.sk_mean, r.ho_mean]).all() for r in rows)
        assert comments["seed"] == "0" and comments["methods"] == "none,l2,nohub"

    def test_from_pool(self, tmp_path, pool):
        out = tmp_path / "r.csv"
        assert run("eval", "--pool", pool, "--methods", "zn,cl2", "--shots", 2, "--ways", 3,
                   "--queries", 4, *FAST, "-o", out) == 0
        assert len(read_result_table(out)[0]) == 2

    def test_pool_too_small(self, tmp_path, pool):
        assert run("eval", "--pool", pool, "--methods", "l2", "--shots", 5, "--queries", 15,
                   *FAST, "-o", tmp_path / "r.csv") == 3

    @pytest.mark.parametrize("methods", ["", "l2,pca"])
    def test_bad_methods(self, tmp_path, methods):
        assert run("eval", "--methods", methods, "-o", tmp_path / "r.csv") == 2

    def test_nohub_lowers_skewness(self, tmp_path):
        out = tmp_path / "r.csv"
        run("eval", "--methods", "none,nohub", "--shots", 1, "--episodes", 40,
            "--separation", 4, "--threads", 1, "-o", out)
        none, nohub = read_result_table(out)[0]
        assert nohub.sk_mean < none.sk_mean


class TestSweepCommand:
    def test_one_row_per_value(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--param", "alpha", "--values", "0.0,0.2,0.5,0.9,1.0", *FAST, "-o", out) == 0
        rows, _ = read_result_table(out)
        assert [r.variant for r in rows] == ["alpha=0.0", "alpha=0.2", "alpha=0.5", "alpha=0.9", "alpha=1.0"]

    def test_rows_match_library(self, tmp_path):
        out = tmp_path / "s.csv"
        run("sweep", "--param", "kappa", "--values", "1.0", *FAST, "--seed", 3, "-o", out)
        row = read_result_table(out)[0][0]
        cfg = NoHubConfig(kappa=1.0, iterations=5, dim=16, perplexity=10, seed=3)
        stats = run_benchmark(synthetic_source(dim=32, separation=7.0), "nohub", 4, cfg, seed=3)
        assert row.accuracy_mean == stats.mean_accuracy and row.sk_mean == stats.mean_skewness

    def test_empty_grid(self, tmp_path):
        assert run("sweep", "--param", "alpha", "--values", "", "-o", tmp_path / "s.csv") == 2

    def test_out_of_range_value(self, tmp_path):
        assert run("sweep", "--param", "alpha", "--values", "2.0", *FAST, "-o", tmp_path / "s.csv") == 2

    @pytest.mark.slow
    def test_pure_lsp_has_more_hubness(self, tmp_path):
        out = tmp_path / "s.csv"
        run("sweep", "--param", "alpha", "--values", "0.2,1.0", "--episodes", 200,
            "--seed", 5, "--threads", 1, "-o", out)
        low, high = read_result_table(out)[0]
        print(f"sk alpha=0.2: {low.sk_mean:.4f}  alpha=1.0: {high.sk_mean:.4f}")
        assert high.sk_mean > low.sk_mean


class TestHubnessCommand:
    def test_stdout(self, pool, capsys):
        assert run("hubness", "-i", pool, "--k", 3) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,k,hub_threshold,skewness,hub_occurrence"
        assert lines[1].startswith("60,3,6.0,")

    def test_file(self, tmp_path, pool):
        out = tmp_path / "h.csv"
        assert run("hubness", "-i", pool, "-o", out, "--metric", "euclidean") == 0
        assert "# metric=euclidean" in out.read_text()

    def test_bad_k(self, pool):
        assert run("hubness", "-i", pool, "--k", 60) == 2


class TestEnvironment:
    def test_env_sets_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NOHUB_CLASSES", "2")
        monkeypatch.setenv("NOHUB_PER_CLASS", "3")
        out = tmp_path / "p.csv"
        assert run("synth", "--dim", 4, "-o", out) == 0
        assert read_features(out)[0].shape == (6, 4)

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NOHUB_CLASSES", "2")
        out = tmp_path / "p.csv"
        run("synth", "--classes", 3, "--per-class", 1, "--dim", 4, "-o", out)
        assert read_features(out)[0].shape == (3, 4)

    def test_bad_env_value(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NOHUB_CLASSES", "many")
        assert run("synth", "-o", tmp_path / "p.csv") == 2

    def test_bad_env_for_other_command_is_ignored(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NOHUB_KAPPA", "abc")
        assert run("synth", "--classes", 2, "--per-class", 1, "--dim", 4, "-o", tmp_path / "p.csv") == 0
