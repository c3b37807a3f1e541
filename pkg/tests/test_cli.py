"""Command-line interface: exit codes, output formats, config-file
expansion, and agreement with the library calculators."""

import math

import pytest

from robustlab.cli import cli_dispatch
from robustlab.network import NetworkConfig, load_checkpoint
from robustlab.theory import classify_regime, gamma, nonlazy_bound, stability_bound

TRAIN_ARGS = [
    "train",
    "--scheme", "he",
    "--width", "16",
    "--depth", "2",
    "--data", "sphere",
    "--d", "8",
    "--n-train", "64",
    "--n-eval", "32",
    "--seed", "0",
    "--epochs", "2",
    "--batch", "16",
    "--lr", "0.05",
]


def run_cli(capsys, argv):
    code = cli_dispatch(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# usage errors
# ---------------------------------------------------------------------------


def test_no_arguments_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, [])
    assert code == 2


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, ["frobnicate"])
    assert code == 2


def test_missing_required_flag_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, ["kappa"])
    assert code == 2


def test_runtime_error_exits_one(capsys):
    code, _, err = run_cli(capsys, ["kappa", "--ckpt", "/nonexistent/net.ckpt"])
    assert code == 1
    assert "error:" in err


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def parse_table(out):
    head, vals = [ln.split("  ") for ln in out.strip().splitlines()[:2]]
    return dict(zip(head, vals))


def test_bounds_matches_library(capsys):
    code, out, _ = run_cli(
        capsys, ["bounds", "--scheme", "he", "--width", "16", "--depth", "2", "--d", "784", "--o", "10"]
    )
    assert code == 0
    table = parse_table(out)
    cfg = NetworkConfig.he(784, 16, 10, 2)
    rep = stability_bound(cfg)
    assert math.isclose(float(table["general"]), rep.general, rel_tol=1e-10)
    assert math.isclose(float(table["scheme_form"]), rep.specialized, rel_tol=1e-10)
    assert math.isclose(float(table["gamma"]), gamma(cfg), rel_tol=1e-10)
    assert math.isclose(float(table["poly_cmp"]), rep.depth_poly_comparator, rel_tol=1e-10)
    assert math.isclose(float(table["exp_cmp"]), rep.depth_exp_comparator, rel_tol=1e-10)
    assert table["regime"] == classify_regime(cfg).label
    assert abs(float(table["scheme_form"]) - 1.0685) < 5e-5


def test_bounds_nonlazy_two_layer_column(capsys):
    code, out, _ = run_cli(
        capsys,
        ["bounds", "--scheme", "nonlazy", "--width", "256", "--depth", "2", "--d", "16", "--o", "1", "--c", "2.0", "--n", "4"],
    )
    assert code == 0
    table = parse_table(out)
    assert math.isclose(float(table["twolayer"]), nonlazy_bound(4, 256, 2.0), rel_tol=1e-10)
    cfg = NetworkConfig.nonlazy(16, 256, 1, 2, c=2.0)
    assert math.isclose(float(table["rho"]), classify_regime(cfg).rho, rel_tol=1e-10)


def test_bounds_rejects_bad_exponent(capsys):
    code, _, err = run_cli(
        capsys,
        ["bounds", "--scheme", "nonlazy", "--width", "256", "--depth", "2", "--d", "16", "--o", "1", "--c", "1.2"],
    )
    assert code == 1
    assert "error:" in err


# ---------------------------------------------------------------------------
# train / stability / kappa pipeline
# ---------------------------------------------------------------------------


def test_train_stability_kappa_pipeline(tmp_path, capsys):
    ckpt = str(tmp_path / "net.ckpt")
    csv = str(tmp_path / "epochs.csv")
    code, out, _ = run_cli(capsys, TRAIN_ARGS + ["--out", ckpt, "--epoch-csv", csv])
    assert code == 0
    assert "final:" in out and "epoch" in out
    assert (tmp_path / "net.ckpt").exists()
    header = (tmp_path / "epochs.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "epoch,loss,accuracy,kappa,elapsed_s"

    net = load_checkpoint(ckpt)
    assert net.config.scheme == "he" and net.config.m == 16

    code, out, _ = run_cli(
        capsys,
        ["stability", "--ckpt", ckpt, "--data", "sphere", "--n-eval", "32", "--seed", "0", "--points", "16", "--dirs", "4", "--drift-points", "8"],
    )
    assert code == 0
    assert "stability mean" in out and "gradient drift" in out

    code, out, _ = run_cli(capsys, ["kappa", "--ckpt", ckpt])
    assert code == 0
    assert out.startswith("kappa ")
    assert float(out.split()[1]) > 0.0


def test_train_divergence_exits_one(tmp_path, capsys):
    argv = [a if a != "0.05" else "1e12" for a in TRAIN_ARGS]
    code, _, err = run_cli(capsys, argv + ["--loss", "squared"])
    assert code == 1
    assert "non-finite loss" in err


# ---------------------------------------------------------------------------
# gram / flow
# ---------------------------------------------------------------------------


def test_gram_command(capsys):
    code, out, _ = run_cli(capsys, ["gram", "--width", "256", "--n", "4", "--d", "8", "--seed", "0"])
    assert code == 0
    assert "lambda0" in out and "spectral gap" in out
    assert out.count("min eigenvalue") == 4


def test_flow_command(capsys):
    code, out, _ = run_cli(
        capsys, ["flow", "--width", "64", "--n", "4", "--d", "8", "--t-max", "0.5", "--seed", "0"]
    )
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln.startswith("t ")]
    assert len(lines) >= 2
    assert "residual ratio" in out
    ratio = float(out.strip().splitlines()[-1].split()[2])
    assert 0.0 <= ratio <= 1.0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_command(tmp_path, capsys):
    out_dir = str(tmp_path / "sweep")
    code, out, _ = run_cli(
        capsys,
        [
            "sweep",
            "--out", out_dir,
            "--widths", "8,16",
            "--depths", "2",
            "--schemes", "he",
            "--seeds", "0",
            "--data", "sphere",
            "--d", "8",
            "--n-train", "48",
            "--n-eval", "24",
            "--epochs", "1",
            "--batch", "16",
            "--lr", "0.05",
            "--points", "16",
            "--dirs", "4",
        ],
    )
    assert code == 0
    assert "2/2 runs ok" in out
    assert (tmp_path / "sweep" / "sweep.csv").exists()


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_single_lemma(capsys):
    code, out, _ = run_cli(capsys, ["validate", "--lemma", "relu-square", "--seed", "1", "--n", "20000"])
    assert code == 0
    assert "relu-square-law" in out
    assert out.splitlines()[0].startswith("lemma")


def test_validate_all(capsys):
    code, out, _ = run_cli(capsys, ["validate", "--lemma", "all", "--seed", "1", "--n", "20000"])
    assert code == 0
    body = out.strip().splitlines()[1:]
    assert len(body) == 6
    assert all(ln.rstrip().endswith("True") for ln in body)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def test_config_file_expansion(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# architecture\nscheme = he\nwidth = 16\ndepth = 2\n"
        "data = sphere\nd = 8\nn_train = 64\nn_eval = 32\n"
        "seed = 0\nepochs = 2\nbatch = 16\nlr = 0.05\n",
        encoding="utf-8",
    )
    code, out_a, _ = run_cli(capsys, ["train", "--config", str(cfg)])
    assert code == 0
    # explicit flags override config values (argparse last-wins)
    code, out_b, _ = run_cli(capsys, ["train", "--config", str(cfg), "--epochs", "1"])
    assert code == 0
    assert out_a.count("epoch ") > out_b.count("epoch ")


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not a key value line\n", encoding="utf-8")
    code, _, err = run_cli(capsys, ["train", "--config", str(bad)])
    assert code == 2
    assert "key=value" in err
    code, _, _ = run_cli(capsys, ["--config", str(bad)])
    assert code == 2
    code, _, _ = run_cli(capsys, ["train", "--config"])
    assert code == 2
    code, _, _ = run_cli(capsys, ["train", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2


def test_config_boolean_key(tmp_path, capsys):
    cfg = tmp_path / "flag.cfg"
    cfg.write_text("no_unit_norm = true\n", encoding="utf-8")
    # boolean true injects the bare flag; parsing succeeds and the run then
    # fails at runtime because idx paths are missing
    code, _, err = run_cli(
        capsys,
        ["train", "--config", str(cfg), "--scheme", "he", "--width", "8", "--depth", "2", "--seed", "0", "--data", "idx"],
    )
    assert code == 1
    assert "error:" in err
