import csv
import json
import math

import numpy as np
import pytest
import yaml

from husimi_tomo import __version__
from husimi_tomo.cli import main
from husimi_tomo.config import build_state, load_config, parse_config, state_hash
from husimi_tomo.errors import ConfigError, TruncationError
from husimi_tomo.states import PhasePoint, husimi_direct, make_coherent_state


def write_config(tmp_path, **body):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(body))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SMALL_GRID = {"q_min": -2, "q_max": 2, "p_min": -1, "p_max": 1, "nq": 3, "np": 2}


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({"subcommand": "husimi-direct"})
        assert cfg.state == {"kind": "number", "n": 0, "dim": 64}
        assert cfg.grid.nq == 21
        assert cfg.scheme.x_limit == pytest.approx(math.sqrt(128) + 6)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config({"subcommand": "sample", "bogus": 1})

    def test_unknown_state_key(self):
        with pytest.raises(ConfigError, match="nn"):
            parse_config({"subcommand": "sample", "state": {"kind": "number", "nn": 1}})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            parse_config({"subcommand": "sample", "state": {"kind": "squeezed"}})

    def test_bad_subcommand(self):
        with pytest.raises(ConfigError):
            parse_config({"subcommand": "frobnicate"})

    def test_bad_types(self):
        with pytest.raises(ConfigError):
            parse_config({"subcommand": "sample", "seed": "x"})
        with pytest.raises(ConfigError):
            parse_config({"subcommand": "sample", "n_samples": 1})
        with pytest.raises(ConfigError):
            parse_config({"subcommand": "sample", "scheme": {"theta_nodes": 4}})

    def test_overrides_win(self):
        cfg = parse_config({"subcommand": "sample", "seed": 1}, seed=9, output=None)
        assert cfg.seed == 9 and cfg.output_path == "out.csv"

    def test_mixture_and_superposition(self):
        mix = parse_config(
            {
                "subcommand": "sample",
                "state": {
                    "kind": "mixture",
                    "dim": 8,
                    "components": [
                        {"weight": 1, "state": {"kind": "number", "n": 0}},
                        {"weight": 1, "state": {"kind": "thermal", "nbar": 0.5}},
                    ],
                },
            }
        )
        rho = build_state(mix.state)
        assert rho.dim == 8 and abs(np.trace(rho.elems) - 1) < 1e-12
        sup = parse_config(
            {
                "subcommand": "sample",
                "state": {"kind": "pure_superposition", "dim": 4, "amplitudes": [{"n": 0, "re": 1}, {"n": 2, "im": 1}]},
            }
        )
        assert build_state(sup.state).elems[0, 2] == pytest.approx(-0.5j)

    def test_nested_dim_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(
                {
                    "subcommand": "sample",
                    "state": {"kind": "mixture", "components": [{"weight": 1, "state": {"kind": "number", "n": 0, "dim": 3}}]},
                }
            )

    def test_truncation_kept_distinct(self):
        cfg = parse_config({"subcommand": "sample", "state": {"kind": "coherent", "z_re": 3.0, "dim": 16}})
        with pytest.raises(TruncationError):
            build_state(cfg.state)

    def test_state_hash_stable(self):
        a = parse_config({"subcommand": "sample", "state": {"kind": "coherent", "z_re": 1, "z_im": 0.5}})
        b = parse_config({"subcommand": "sample", "state": {"z_im": 0.5, "kind": "coherent", "z_re": 1.0}})
        assert state_hash(a.state) == state_hash(b.state)

    def test_load_yaml(self, tmp_path):
        path = write_config(tmp_path, subcommand="sample", seed=4)
        assert load_config(path).seed == 4
        bad = tmp_path / "bad.yaml"
        bad.write_text("subcommand: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(bad)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml")


class TestCli:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_husimi_direct(self, tmp_path):
        out = tmp_path / "direct.csv"
        cfg = write_config(tmp_path, state={"kind": "coherent", "z_re": 1.0, "z_im": 0.5}, grid=SMALL_GRID)
        assert main(["husimi-direct", "-c", str(cfg), "-o", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["q", "p", "value"] and len(rows) == 7
        q, p, v = map(float, rows[2])
        assert (q, p) == (-2.0, 1.0)
        assert v == husimi_direct(make_coherent_state(1 + 0.5j, 64), PhasePoint(q, p))
        meta = json.loads((tmp_path / "direct.csv.meta.json").read_text())
        assert meta["version"] == __version__
        assert meta["config"]["grid"]["nq"] == 3
        assert len(meta["state_hash"]) == 64 and meta["wall_time_s"] >= 0

    def test_husimi_kernel_compare(self, tmp_path):
        out = tmp_path / "kernel.csv"
        cfg = write_config(tmp_path, state={"kind": "number", "n": 1}, grid=SMALL_GRID)
        assert main(["husimi-kernel", "-c", str(cfg), "-o", str(out), "--compare"]) == 0
        meta = json.loads((tmp_path / "kernel.csv.meta.json").read_text())
        assert meta["compare"]["max_abs_diff"] <= 1e-5

    def test_husimi_mc_reproducible(self, tmp_path):
        cfg = write_config(tmp_path, state={"kind": "thermal", "nbar": 0.5}, grid=SMALL_GRID, n_samples=20_000)
        outs = []
        for name, threads in (("a.csv", "1"), ("b.csv", "3")):
            out = tmp_path / name
            assert main(["husimi-mc", "-c", str(cfg), "-o", str(out), "--seed", "11", "--threads", threads]) == 0
            outs.append(out)
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert (tmp_path / "a.stderr.csv").read_bytes() == (tmp_path / "b.stderr.csv").read_bytes()
        errs = [float(r[2]) for r in read_csv(tmp_path / "a.stderr.csv")[1:]]
        assert max(errs) <= 2 / math.sqrt(20_000)

    def test_sample_full_precision(self, tmp_path):
        out = tmp_path / "s.csv"
        cfg = write_config(tmp_path, n_samples=50, seed=3)
        assert main(["sample", "-c", str(cfg), "-o", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["theta", "x"] and len(rows) == 51
        from husimi_tomo.quadrature import sample_eht
        from husimi_tomo.states import make_number_state

        ref = sample_eht(make_number_state(0, 64), 50, seed=3)
        np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], ref.x)

    def test_kernel_eval(self, tmp_path):
        out = tmp_path / "k.csv"
        cfg = write_config(
            tmp_path,
            kernel_eval={"q": 0.5, "p": -0.5, "n_theta": 3, "n_x": 5, "x_min": -8, "x_max": 2},
        )
        assert main(["kernel-eval", "-c", str(cfg), "-o", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["theta", "x", "M_closed", "M_series", "abs_diff"] and len(rows) == 16
        diffs = [float(r[4]) for r in rows[1:]]
        assert any(math.isnan(d) for d in diffs)
        assert max(d for d in diffs if not math.isnan(d)) <= 1e-6

    def test_check_identities(self, tmp_path, capsys):
        out = tmp_path / "ids.csv"
        cfg = write_config(tmp_path, state={"kind": "number", "n": 0, "dim": 32}, checks={"n_pairs": 4})
        assert main(["check-identities", "-c", str(cfg), "-o", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["check", "case", "value", "threshold", "pass"]
        assert {r[0] for r in rows[1:]} == {"coherent_identity", "hermite_gaussian_moment", "radon_wigner"}
        assert all(r[4] == "yes" for r in rows[1:])
        assert capsys.readouterr().out.count("PASS") == 3

    def test_inverse_divergence(self, tmp_path):
        out = tmp_path / "inv.csv"
        assert main(["inverse-divergence", "-o", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["R", "magnitude", "log_magnitude_minus_half_R_squared"]
        mags = [float(r[1]) for r in rows[1:]]
        assert len(mags) == 5 and mags == sorted(mags)

    def test_inverse_radius_cap(self, tmp_path, capsys):
        cfg = write_config(tmp_path, inverse={"radii": [1, 9]})
        assert main(["inverse-divergence", "-c", str(cfg), "-o", str(tmp_path / "x.csv")]) == 2
        assert capsys.readouterr().err.startswith("error[config]")

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write_config(tmp_path, nonsense=True)
        assert main(["sample", "-c", str(cfg)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("error[config]:") and err.count("\n") == 1

    def test_truncation_error_exit(self, tmp_path, capsys):
        cfg = write_config(tmp_path, state={"kind": "coherent", "z_re": 5.0, "dim": 16})
        assert main(["sample", "-c", str(cfg), "-o", str(tmp_path / "t.csv")]) == 3
        assert capsys.readouterr().err.startswith("error[truncation]:")

    def test_numeric_error_exit(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            state={"kind": "coherent", "z_re": 2.0, "dim": 16},
            scheme={"x_limit": 6.0, "x_nodes": 32},
            grid=SMALL_GRID,
        )
        assert main(["husimi-kernel", "-c", str(cfg), "-o", str(tmp_path / "n.csv")]) == 4
        assert capsys.readouterr().err.startswith("error[numeric]:")
