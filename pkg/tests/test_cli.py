import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dequant.cli import main
from dequant.config import ConfigError, RunConfig, bundled_configs, load_config
from dequant.moyal import DequantReport


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def column(path, name):
    with open(path, newline="") as fh:
        return np.array([float(r[name]) for r in csv.DictReader(fh)])


def small_config(tmp_path, **over):
    cfg = {
        "hamiltonian": "1/2*p^2 + 1/2*q^2",
        "grid": {"n_points": 65, "box_length": 20.2, "hbar": 1.0},
        "initial_state": {"q0": 1.0, "p0": 0.0},
        "t_final": 0.5,
        "dt": 0.01,
        "snapshot_stride": 10,
    }
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


# -- verify-dequant ------------------------------------------------------------------

def test_verify_harmonic(capsys):
    code, out, _ = run(capsys, "verify-dequant", "--hamiltonian", "0.5*q^2+0.5*p^2")
    assert code == 0
    assert "verdict: exact-equal" in out
    assert out.count("lq*p - lp*q") >= 3  # Marinov, Berezin and classical forms


def test_verify_quartic_shows_hbar_term(capsys):
    code, out, _ = run(capsys, "verify-dequant", "--hamiltonian", "q^4")
    assert code == 0
    marinov = next(line for line in out.splitlines() if line.startswith("Marinov"))
    berezin = next(line for line in out.splitlines() if line.startswith("Berezin"))
    assert "h^2" in marinov and "h" not in berezin.split("=", 1)[1]


def test_verify_random_batch(capsys):
    code, out, _ = run(capsys, "verify-dequant", "--random", "200", "--max-degree", "6", "--dim", "2", "--seed", "7")
    assert code == 0 and "200/200 exact-equal" in out


def test_verify_json_roundtrip(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-dequant", "--hamiltonian", "q^3*p", "--hamiltonian", "p^4",
                       "--json", "--out", str(tmp_path / "r.json"))
    assert code == 0
    reports = [DequantReport.from_dict(d) for d in json.loads(out)]
    assert all(r.exact for r in reports) and len(reports) == 2
    assert json.loads((tmp_path / "r.json").read_text()) == json.loads(out)


def test_verify_mutation_fails(capsys):
    from dequant.selftest import mutation
    with mutation("berezin-sign"):
        code, out, _ = run(capsys, "verify-dequant", "--hamiltonian", "q^4")
    assert code == 1 and "mismatch" in out


@pytest.mark.parametrize("argv", [
    ["verify-dequant", "--hamiltonian", "q^-1"],
    ["verify-dequant"],
    ["verify-dequant", "--hamiltonian", "q", "--random", "3"],
])
def test_verify_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


# -- symbolic commands -----------------------------------------------------------------

def test_star(capsys):
    assert run(capsys, "star", "q", "p")[1].strip() == "q*p + 1/2*i*h"
    assert run(capsys, "star", "--a", "p", "--b", "q")[1].strip() == "q*p - 1/2*i*h"


def test_brackets(capsys):
    assert run(capsys, "bracket", "q", "p", "--kind", "moyal")[1].strip() == "1"
    assert run(capsys, "bracket", "q", "q", "--kind", "poisson")[1].strip() == "0"
    assert run(capsys, "bracket", "q^3", "p^3")[1].strip() == "9*q^2*p^2 - 3/2*h^2"
    assert run(capsys, "bracket", "q1", "p1", "--dim", "2", "--kind", "poisson")[1].strip() == "1"


def test_symbolic_parse_errors(capsys):
    code, _, err = run(capsys, "star", "q", "p^")
    assert code == 2 and "position" in err
    assert run(capsys, "bracket", "q")[0] == 2


def test_marinov(capsys):
    code, out, _ = run(capsys, "marinov", "--hamiltonian", "q^4")
    assert code == 0
    assert "marinov   = -4*lp*q^3 - 4*lp^3*q*h^2" in out or "-4*" in out
    assert "classical = -4*lp*q^3" in out


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["bracket", "q", "p", "--kind", "lie"])
    assert info.value.code == 2


# -- configs -----------------------------------------------------------------------------

def test_bundled_configs():
    assert {"harmonic", "quartic"} <= set(bundled_configs())
    cfg = RunConfig.from_dict(load_config("quartic"))
    assert cfg.spatial_grid().n_points == 129
    assert RunConfig.from_dict(json.loads(cfg.to_json())) == cfg


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"hamiltonian": "q", "bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"hamiltonian": "q", "grid": {"n_points": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"hamiltonian": "q", "engines": ["rk"]})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"hamiltonian": "q", "boundary": "ignore"})
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "bad.json"))


# -- evolve ------------------------------------------------------------------------------

def test_evolve_writes_outputs(capsys, tmp_path):
    out = tmp_path / "run"
    code, text, _ = run(capsys, "evolve", "--config", small_config(tmp_path), "--out", str(out), "--snapshots")
    assert code == 0
    for f in ("moyal.csv", "liouville.csv", "config.json"):
        assert (out / f).exists()
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["dt"] == 0.01 and echoed["keep_snapshots"] is True
    assert len(list((out / "snapshots_moyal").glob("*.bin"))) == 6
    assert np.max(np.abs(column(out / "moyal.csv", "mean_q") - column(out / "liouville.csv", "mean_q"))) <= 1e-10
    assert "max |<q>_moyal - <q>_liouville|" in text


def test_evolve_is_byte_reproducible(capsys, tmp_path):
    cfg = small_config(tmp_path)
    for d in ("a", "b"):
        assert run(capsys, "evolve", "--config", cfg, "--out", str(tmp_path / d), "--engine", "moyal")[0] == 0
    assert (tmp_path / "a" / "moyal.csv").read_bytes() == (tmp_path / "b" / "moyal.csv").read_bytes()


def test_output_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DEQUANT_OUT", str(tmp_path / "env"))
    assert run(capsys, "evolve", "--config", small_config(tmp_path), "--engine", "liouville")[0] == 0
    assert (tmp_path / "env" / "liouville.csv").exists()


def test_flags_override_config(capsys, tmp_path):
    out = tmp_path / "o"
    run(capsys, "evolve", "--config", small_config(tmp_path), "--out", str(out), "--engine", "moyal",
        "--t-final", "0.2", "--q0", "0.5")
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["t_final"] == 0.2 and echoed["initial_state"]["q0"] == 0.5 and echoed["engines"] == ["moyal"]
    assert column(out / "moyal.csv", "mean_q")[0] == pytest.approx(0.5, abs=1e-12)


def test_evolve_missing_config(capsys, tmp_path):
    assert run(capsys, "evolve", "--config", str(tmp_path / "nope.json"))[0] == 2


def test_evolve_boundary_failure(capsys, tmp_path):
    cfg = small_config(tmp_path, initial_state={"q0": 8.5, "p0": 0.0})
    code, _, err = run(capsys, "evolve", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 1 and "boundary mass" in err


def test_evolve_harmonic_config(capsys, tmp_path):
    out = tmp_path / "h"
    assert run(capsys, "evolve", "--config", "harmonic", "--out", str(out))[0] == 0
    assert np.max(np.abs(column(out / "moyal.csv", "mean_q") - column(out / "liouville.csv", "mean_q"))) <= 1e-6


@pytest.mark.slow
def test_evolve_quartic_config(capsys, tmp_path):
    out = tmp_path / "q"
    assert run(capsys, "evolve", "--config", "quartic", "--out", str(out))[0] == 0
    mq, lq = column(out / "moyal.csv", "mean_q"), column(out / "liouville.csv", "mean_q")
    assert np.max(np.abs(mq - lq)) > 1e-2
    neg_m, neg_l = column(out / "moyal.csv", "negativity"), column(out / "liouville.csv", "negativity")
    assert neg_m[0] <= 1e-10 and neg_m[-1] > 0.05
    # the classical density picks up only grid-level negativity, an order of magnitude less
    assert np.max(neg_m) > 5 * np.max(neg_l)


# -- oracle-compare ------------------------------------------------------------------------

def test_oracle_compare_harmonic(capsys, tmp_path):
    out = tmp_path / "o"
    code, text, _ = run(capsys, "oracle-compare", "--config", "harmonic", "--out", str(out))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["rho_sup_diff_rel"] <= 1e-5 and report["within_tolerance"]
    assert (out / "oracle.csv").exists() and (out / "moyal.csv").exists()


@pytest.mark.slow
def test_oracle_compare_quartic(capsys, tmp_path):
    out = tmp_path / "o"
    code, _, _ = run(capsys, "oracle-compare", "--config", "quartic", "--out", str(out))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["rho_sup_diff_rel"] <= 1e-3 and report["mean_q_sup_diff"] <= 1e-3


def test_oracle_compare_tolerance_breach(capsys, tmp_path):
    cfg = small_config(tmp_path, dt=0.05)
    code, text, _ = run(capsys, "oracle-compare", "--config", cfg, "--out", str(tmp_path / "o"),
                        "--tolerance", "1e-14", "--dt", "0.01")
    assert code == 1 and "FAIL" in text


def test_oracle_compare_non_split(capsys, tmp_path):
    code, _, err = run(capsys, "oracle-compare", "--config", small_config(tmp_path),
                       "--hamiltonian", "1/2*p^2 + q*p + 1/2*q^2", "--out", str(tmp_path / "o"))
    assert code == 2 and "p^2/2m + V(q)" in err


# -- wigner and selftest ------------------------------------------------------------------------

def test_wigner_command(capsys, tmp_path):
    code, out, _ = run(capsys, "wigner", "--state", "eigenstate", "--level", "1", "--n-points", "65",
                       "--box-length", "20.2", "--out", str(tmp_path))
    assert code == 0
    obs = json.loads(out)
    assert obs["min_value"] < 0 and obs["norm"] == pytest.approx(1.0)
    assert (tmp_path / "wigner.bin").exists() and (tmp_path / "state.json").exists()


def test_wigner_even_grid(capsys, tmp_path):
    assert run(capsys, "wigner", "--n-points", "64", "--out", str(tmp_path))[0] == 2


def test_selftest_filter(capsys):
    code, out, _ = run(capsys, "selftest", "--filter", "grassmann")
    assert code == 0
    assert "grassmann" in out and "parser" not in out


def test_selftest_unknown_filter(capsys):
    assert run(capsys, "selftest", "--filter", "nothing-matches")[0] == 2


@pytest.mark.parametrize("kind", ["berezin-sign", "marinov-factor"])
def test_selftest_mutation_names_failing_suite(capsys, kind):
    code, out, _ = run(capsys, "selftest", "--filter", "dequantisation", "--mutate", kind)
    assert code == 1 and "FAIL dequantisation" in out


def test_full_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "selftest passed" in out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "dequant", "bracket", "q", "p"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "1"
