"""File formats and the command-line surface."""

import numpy as np
import pytest

from ttspectral import fileio
from ttspectral.cli import main
from ttspectral.errors import FileFormatError
from ttspectral.planner import decompress
from ttspectral.sampling import random_sttp_params, random_svdp_params
from ttspectral.spectrum_modes import IDENTITY, LEARNED
from ttspectral.sttp import init_sttp_params
from ttspectral.svdp import init_svdp_params


class TestMatrixFile:
    def test_header_format(self, tmp_path):
        path = tmp_path / "m.mat"
        fileio.write_matrix(path, np.zeros((3, 2)))
        header = path.read_bytes().split(b"\n", 1)[0]
        assert header == b"STTPMAT v1 rows=3 cols=2 dtype=f64 order=row-major"

    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((7, 5))
        a, b = tmp_path / "a.mat", tmp_path / "b.mat"
        fileio.write_matrix(a, m)
        back = fileio.read_matrix(a)
        assert np.array_equal(back, m)
        fileio.write_matrix(b, back)
        assert a.read_bytes() == b.read_bytes()

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "m.mat"
        fileio.write_matrix(path, np.zeros((3, 2)))
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(FileFormatError):
            fileio.read_matrix(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.mat"
        path.write_bytes(b"NOTMAT v1 rows=1 cols=1 dtype=f64 order=row-major\n"
                         + b"\x00" * 8)
        with pytest.raises(FileFormatError):
            fileio.read_matrix(path)


class TestParamsFile:
    @pytest.mark.parametrize("maker,mode", [
        (lambda: random_svdp_params(6, 5, 3, LEARNED, 0), LEARNED),
        (lambda: random_svdp_params(6, 5, 3, IDENTITY, 1), IDENTITY),
        (lambda: random_sttp_params(16, 72, 4, LEARNED, 2), LEARNED),
        (lambda: random_sttp_params(12, 18, 3, IDENTITY, 3), IDENTITY),
        (lambda: random_svdp_params(6, 5, 3, "learned_regularized", 4,
                                    lam=0.1), "learned_regularized"),
        (lambda: random_sttp_params(12, 18, 3, "learned_regularized", 5,
                                    lam=0.25), "learned_regularized"),
    ])
    def test_round_trip_bit_identical(self, tmp_path, maker, mode):
        params = maker()
        a, b = tmp_path / "a.params", tmp_path / "b.params"
        fileio.write_params(a, params)
        back = fileio.read_params(a)
        assert np.allclose(decompress(back), decompress(params), atol=0)
        assert back.spectrum.lam == params.spectrum.lam
        fileio.write_params(b, back)
        assert a.read_bytes() == b.read_bytes()

    def test_declared_counts_equal_dof(self, tmp_path):
        from ttspectral.sttp import sttp_dof

        params = random_sttp_params(16, 72, 4, LEARNED, 5)
        path = tmp_path / "p.params"
        fileio.write_params(path, params)
        manifest = path.read_bytes().split(b"\n\n", 1)[0].decode()
        counts = [int(line.rsplit(" ", 1)[1])
                  for line in manifest.splitlines()
                  if line.startswith("block=")]
        assert sum(counts) == sttp_dof(16, 72, 4, LEARNED)

    def test_payload_length_checked(self, tmp_path):
        params = random_svdp_params(6, 5, 3, LEARNED, 0)
        path = tmp_path / "p.params"
        fileio.write_params(path, params)
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(FileFormatError):
            fileio.read_params(path)

    def test_tampered_schedule_rejected(self, tmp_path):
        params = random_sttp_params(16, 72, 4, LEARNED, 2)
        path = tmp_path / "p.params"
        fileio.write_params(path, params)
        raw = path.read_bytes()
        path.write_bytes(raw.replace(b"rank_schedule=1,2,4",
                                     b"rank_schedule=1,1,4"))
        with pytest.raises(FileFormatError):
            fileio.read_params(path)


class TestCli:
    def test_dof_sttp_worked_instance(self, capsys):
        assert main(["dof", "--scheme", "sttp", "--dout", "16", "--din", "72",
                     "--rank", "4", "--spectrum", "learned"]) == 0
        out = capsys.readouterr().out
        assert "dof=128" in out
        assert "numel=1152" in out

    def test_dof_svdp_worked_instance(self, capsys):
        assert main(["dof", "--scheme", "svdp", "--dout", "16", "--din", "72",
                     "--rank", "4", "--spectrum", "learned"]) == 0
        assert "dof=336" in capsys.readouterr().out

    def test_dof_rank_violation_exit_2(self, capsys):
        assert main(["dof", "--scheme", "svdp", "--dout", "16", "--din", "72",
                     "--rank", "100", "--spectrum", "learned"]) == 2

    def test_factorize(self, capsys):
        assert main(["factorize", "--dim", "72"]) == 0
        assert capsys.readouterr().out.strip() == "2 2 2 3 3"

    def test_plan_prints_708(self, capsys):
        assert main(["plan", "--scheme", "svdp", "--dout", "16", "--din", "72",
                     "--rank", "4", "--dx", "1", "--naive"]) == 0
        out = capsys.readouterr().out
        assert "total_flops=708" in out
        assert "naive_flops=11584" in out

    def test_build_then_apply_matches_dense(self, tmp_path, capsys):
        w_path = tmp_path / "w.mat"
        p_path = tmp_path / "p.params"
        x_path = tmp_path / "x.mat"
        y_path = tmp_path / "y.mat"
        assert main(["build", "--scheme", "sttp", "--dout", "16", "--din",
                     "72", "--rank", "4", "--spectrum", "learned", "--seed",
                     "9", "--out", str(w_path),
                     "--params-out", str(p_path)]) == 0
        rng = np.random.default_rng(1)
        x = rng.standard_normal((72, 3))
        fileio.write_matrix(x_path, x)
        assert main(["apply", "--params", str(p_path), "--in", str(x_path),
                     "--out", str(y_path)]) == 0
        w = fileio.read_matrix(w_path)
        y = fileio.read_matrix(y_path)
        want = w @ x
        assert np.linalg.norm(y - want) <= 1e-10 * np.linalg.norm(want)

    def test_apply_malformed_file_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.params"
        bad.write_bytes(b"garbage")
        assert main(["apply", "--params", str(bad), "--in", str(bad),
                     "--out", str(tmp_path / "y.mat")]) == 3

    def test_gradcheck_passes(self, capsys):
        assert main(["gradcheck", "--scheme", "svdp", "--dout", "8", "--din",
                     "6", "--rank", "3", "--spectrum", "learned", "--seed",
                     "0"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "dof=33" in out

    def test_fit_writes_trace_and_params(self, tmp_path, capsys):
        t_path = tmp_path / "t.mat"
        p_path = tmp_path / "p.params"
        trace_path = tmp_path / "trace.txt"
        target = decompress(init_svdp_params(6, 5, 2, LEARNED, 3))
        fileio.write_matrix(t_path, target)
        assert main(["fit", "--target", str(t_path), "--scheme", "svdp",
                     "--rank", "2", "--spectrum", "learned", "--steps", "200",
                     "--seed", "0", "--params-out", str(p_path),
                     "--out", str(trace_path)]) == 0
        lines = trace_path.read_text().strip().splitlines()
        assert lines[0].startswith("0,")
        steps = [int(line.split(",")[0]) for line in lines]
        assert steps == list(range(len(lines)))
        losses = [float(line.split(",")[1]) for line in lines]
        assert losses[-1] < losses[0]
        back = fileio.read_params(p_path)
        assert decompress(back).shape == (6, 5)

    def test_inspect(self, tmp_path, capsys):
        p_path = tmp_path / "p.params"
        fileio.write_params(p_path, init_sttp_params(16, 72, 4, LEARNED, 0))
        assert main(["inspect", "--params", str(p_path)]) == 0
        out = capsys.readouterr().out
        assert "dof=128" in out
        assert "stable_rank=" in out
        assert "lipschitz_bound=" in out

    def test_demo_train_runs(self, capsys):
        assert main(["demo-train", "--scheme", "svdp", "--rank", "3",
                     "--spectrum", "learned", "--steps", "60", "--seed",
                     "0"]) == 0
        out = capsys.readouterr().out
        assert "max_sigma_over_run=1.0" in out

    def test_seed_required_for_randomized_commands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gradcheck", "--scheme", "svdp", "--dout", "8", "--din",
                  "6", "--rank", "3", "--spectrum", "learned"])
        assert exc.value.code == 2

    def test_reproducible_output(self, tmp_path):
        out1, out2 = tmp_path / "a.mat", tmp_path / "b.mat"
        args = ["build", "--scheme", "svdp", "--dout", "8", "--din", "6",
                "--rank", "3", "--spectrum", "learned", "--seed", "4"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_fit_trace_on_stdout_when_no_out(self, tmp_path, capsys):
        t_path = tmp_path / "t.mat"
        fileio.write_matrix(t_path, decompress(init_svdp_params(6, 5, 2,
                                                                LEARNED, 3)))
        assert main(["fit", "--target", str(t_path), "--scheme", "svdp",
                     "--rank", "2", "--spectrum", "learned", "--steps", "20",
                     "--seed", "0"]) == 0
        out_lines = capsys.readouterr().out.strip().splitlines()
        assert out_lines[0].startswith("0,")
        assert all("," in line for line in out_lines)

    def test_fit_divergence_exit_4(self, tmp_path, capsys):
        t_path = tmp_path / "huge.mat"
        rng = np.random.default_rng(0)
        fileio.write_matrix(t_path, 1e7 * rng.standard_normal((6, 5)))
        assert main(["fit", "--target", str(t_path), "--scheme", "svdp",
                     "--rank", "2", "--spectrum", "learned", "--steps", "50",
                     "--seed", "0"]) == 4
