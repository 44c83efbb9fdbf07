import json
from pathlib import Path

import pytest

from preypred.cli import (
    DEFAULTS,
    EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigError,
    main,
    parse_config,
    render_config,
)
from preypred.model import PUBLISHED_PARAMS, ModelParams

PUBLISHED_INI = """\
[model]
r = 1.5
gamma = 12
omega = 15
e = 0.4
m1 = 0.15
m2 = 0.01

[noise]
sigma1 = 0.02
sigma2 = 0.02
jump1 = 1
jump2 = 1
"""


def write(tmp_path, text, name="run.ini"):
    f = tmp_path / name
    f.write_text(text)
    return str(f)


class TestParseConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, ""))
        assert cfg == parse_config()
        assert cfg.model == ModelParams()
        assert cfg.seed == 42 and cfg.paths == 10_000
        assert cfg.sim.dt == 1e-3 and cfg.sim.horizon == 50.0
        assert cfg.alpha_bounds == (0.0, 10.0) and cfg.target.epsilon == 0.5

    def test_published_file_matches_model_params(self, tmp_path):
        cfg = parse_config(write(tmp_path, PUBLISHED_INI))
        assert cfg.model == PUBLISHED_PARAMS
        assert (cfg.model.r, cfg.model.gamma, cfg.model.omega) == (1.5, 12.0, 15.0)
        assert cfg.noise.sigma1 == cfg.noise.sigma2 == 0.02

    def test_shipped_config_files(self):
        root = Path(__file__).resolve().parents[1] / "configs"
        assert parse_config(root / "published.ini").model == PUBLISHED_PARAMS
        assert parse_config(root / "conservation.ini") == parse_config(
            preset="conservation", overrides={"sweep": {"paths": "200"}, "run": {"paths": "1000"}})
        assert parse_config(root / "pest.ini") == parse_config(
            preset="pest", overrides={"sweep": {"paths": "200"}, "run": {"paths": "1000"}})

    def test_negative_gamma_names_the_key(self, tmp_path):
        with pytest.raises(ConfigError, match="gamma"):
            parse_config(write(tmp_path, "[model]\ngamma = -1\n"))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="model.kappa"):
            parse_config(write(tmp_path, "[model]\nkappa = 1\n"))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="plot"):
            parse_config(write(tmp_path, "[plot]\ncolor = red\n"))

    def test_parse_error_reports_line(self, tmp_path):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(write(tmp_path, "[model]\nr = 1.5\nthis line is junk\n"))

    def test_key_before_section(self, tmp_path):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config(write(tmp_path, "r = 1.5\n"))

    @pytest.mark.parametrize("text,key", [
        ("[sim]\ndt = fast\n", "sim.dt"),
        ("[noise]\nshared_jumps = maybe\n", "noise.shared_jumps"),
        ("[control]\nalpha_max = -1\n", "control.alpha_max"),
        ("[sweep]\nrelaxation = 2\n", "sweep.relaxation"),
        ("[run]\npaths = 0\n", "run.paths"),
        ("[target]\nkind = moon\n", "target.kind"),
        ("[target]\nepsilon = 0\n", "target.epsilon"),
        ("[noise]\njump2 = -1.5\n", "jump2"),
    ])
    def test_constraint_errors_name_the_key(self, tmp_path, text, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            parse_config(write(tmp_path, text))

    def test_round_trip(self, tmp_path):
        cfg = parse_config(write(tmp_path, PUBLISHED_INI + "\n[run]\nseed = 123\n"), preset="pest",
                           overrides={"sim": {"dt": "0.02"}})
        again = parse_config(write(tmp_path, render_config(cfg), "echo.ini"))
        assert again == cfg
        assert render_config(again) == render_config(cfg)

    def test_layering(self, tmp_path):
        f = write(tmp_path, "[model]\nxi = 3\n")
        cfg = parse_config(f, preset="conservation", overrides={"model": {"xi": "4"}})
        assert cfg.model.alpha == 0.25 and cfg.model.xi == 4.0

    def test_defaults_table_is_complete(self):
        text = render_config(parse_config())
        for section, keys in DEFAULTS.items():
            for key in keys:
                assert f"\n{key} = " in text or text.startswith(f"[{section}]\n{key} = ")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="scenario"):
            parse_config(preset="garden")


class TestMain:
    def test_equilibria(self, tmp_path, capsys):
        assert main(["equilibria", "--out", str(tmp_path)]) == EXIT_OK
        rows = (tmp_path / "equilibria.csv").read_text().splitlines()
        assert rows[0] == "x,y,kind,drift_residual"
        assert "axial-predator" in capsys.readouterr().out
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 42
        assert manifest["flagged_defaults"] == {"control.alpha_max": 10.0, "control.xi_max": 10.0,
                                                "noise.lam": 1.0, "target.epsilon": 0.5}
        assert set(manifest["outputs"]) == {"equilibria.csv"}

    def test_config_error_exit(self, tmp_path):
        cfg = write(tmp_path, "[model]\ngamma = -1\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.ini"),
                     "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_scenario_needs_name(self, tmp_path):
        assert main(["scenario", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["scenario", "orchard", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_numerical_failure_exit(self, tmp_path):
        cfg = write(tmp_path, "[run]\ny0 = 1e300\n")
        assert main(["simulate", "--config", cfg, "--horizon", "1", "--dt", "0.01",
                     "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL

    def test_non_convergence_exit(self, tmp_path):
        cfg = write(tmp_path, "[noise]\nsigma1 = 0\nsigma2 = 0\nlam = 0\n"
                              "[sweep]\nmax_iters = 1\ntol = 1e-12\npaths = 1\n[run]\npaths = 1\n")
        code = main(["optimize-quality", "--config", cfg, "--horizon", "5", "--dt", "0.01",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_NOT_CONVERGED
        summary = json.loads((tmp_path / "o" / "manifest.json").read_text())["summary"]
        assert summary["converged"] is False

    def test_simulate_rerun_from_echo_is_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--horizon", "2", "--dt", "0.01", "--seed", "9",
                     "--out", str(a)]) == EXIT_OK
        assert main(["simulate", "--config", str(a / "config.ini"), "--out", str(b)]) == EXIT_OK
        for name in ("trajectory.csv", "phase.csv", "config.ini", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_deterministic_scenario_is_byte_identical(self, tmp_path):
        cfg = write(tmp_path, "[noise]\nsigma1 = 0\nsigma2 = 0\nlam = 0\n"
                              "[sweep]\npaths = 1\n[run]\npaths = 1\n")
        outs = [tmp_path / "r1", tmp_path / "r2"]
        codes = [main(["scenario", "conservation", "--config", cfg, "--horizon", "10",
                       "--out", str(o)]) for o in outs]
        assert codes[0] == codes[1] and codes[0] in (EXIT_OK, EXIT_NOT_CONVERGED)
        names = sorted(p.name for p in outs[0].iterdir())
        assert {"trajectory.csv", "controls.csv", "adjoint.csv", "phase.csv", "stats.csv",
                "manifest.json", "config.ini"} <= set(names)
        for name in names:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_ensemble_worker_count_invariance(self, tmp_path):
        runs = {}
        for w in (1, 2):
            out = tmp_path / f"w{w}"
            assert main(["ensemble", "--paths", "300", "--horizon", "3", "--dt", "0.01",
                         "--workers", str(w), "--out", str(out)]) == EXIT_OK
            runs[w] = out
        for name in ("stats.csv", "hitting.csv", "config.ini", "manifest.json"):
            assert (runs[1] / name).read_bytes() == (runs[2] / name).read_bytes()
