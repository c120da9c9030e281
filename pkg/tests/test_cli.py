import json
import math

import click
import numpy as np
import pandas as pd
import pytest

from app.main import main, parse_args
from app.internal.ellipgen import UniformGrid


def write_exponential(path):
    """exp(-t) on [0, 10] as a t,value CSV without a sidecar."""
    t = UniformGrid.span(0.0, 10.0, 0.01).nodes
    pd.DataFrame({"t": t, "value": np.exp(-t)}).to_csv(path, index=False, float_format="%.17g")
    return path


@pytest.fixture
def raw_generator(tmp_path):
    return write_exponential(tmp_path / "g.csv")


@pytest.fixture
def normalized_generator(tmp_path, raw_generator):
    out = tmp_path / "gnorm.csv"
    assert main(["normalize", "--in", str(raw_generator), "--b", "1", "--dim", "2", "--out", str(out)]) == 0
    return out


@pytest.fixture
def sample_file(tmp_path, normalized_generator):
    out = tmp_path / "data.csv"
    args = ["sample", "--generator", str(normalized_generator), "--n", "200", "--rho", "0.3", "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    return out


# =============================================================================
# Parsing
# =============================================================================

def test_parse_normalize(raw_generator):
    config = parse_args(["normalize", "--in", str(raw_generator), "--b", "1", "--dim", "2", "--out", "gnorm.csv"])

    assert config.subcommand == "normalize"
    assert config.input == raw_generator
    assert str(config.output) == "gnorm.csv"
    assert config.params["b"] == 1.0
    assert config.params["dim"] == 2


def test_parse_estimate_defaults(sample_file):
    config = parse_args(["estimate", "--in", str(sample_file), "--out", "ghat.csv", "--seed", "4"])
    assert config.seed == 4
    assert config.na_token == "NA"
    assert config.params["n_max"] == 10
    assert config.params["h"] is None


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["normalize", "--b", "1", "--dim", "2", "--out", "gnorm.csv"],
        ["frobnicate"],
        ["normalize", "--bogus"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(click.UsageError):
        parse_args(argv)


def test_option_callbacks_reject_bad_values(sample_file):
    with pytest.raises(click.UsageError):
        parse_args(["estimate", "--in", str(sample_file), "--out", "ghat.csv", "--h", "-0.1"])
    with pytest.raises(click.UsageError):
        parse_args(["experiment", "--out", "r.csv", "--rho12", "1.5"])
    with pytest.raises(click.UsageError):
        parse_args(["sample", "--generator", str(sample_file), "--n", "-1", "--out", "x.csv"])


# =============================================================================
# Exit codes
# =============================================================================

def test_usage_error_exits_with_two(tmp_path):
    assert main(["normalize", "--out", str(tmp_path / "x.csv")]) == 2
    assert main([]) == 2


def test_computational_failure_exits_with_one(tmp_path):
    path = tmp_path / "zero.csv"
    pd.DataFrame({"t": [0.0, 0.5, 1.0], "value": [0.0, 0.0, 0.0]}).to_csv(path, index=False)
    assert main(["normalize", "--in", str(path), "--dim", "2", "--out", str(tmp_path / "out.csv")]) == 1


def test_help_exits_with_zero():
    assert main(["--help"]) == 0


# =============================================================================
# Commands
# =============================================================================

def test_normalize_writes_sidecar_and_provenance(normalized_generator):
    sidecar = json.loads(normalized_generator.with_name("gnorm.csv.json").read_text(encoding="utf-8"))
    assert sidecar["dim"] == 2
    assert sidecar["normalized"] is True
    assert sidecar["b"] == 1.0

    provenance = json.loads(normalized_generator.with_name("gnorm.csv.provenance.json").read_text(encoding="utf-8"))
    assert provenance["command"] == "normalize"

    frame = pd.read_csv(normalized_generator)
    assert np.max(np.abs(frame["value"] - np.exp(-math.pi * frame["t"]))) <= 1e-3


def test_normalize_is_idempotent_at_the_file_level(tmp_path, normalized_generator):
    again = tmp_path / "again.csv"
    assert main(["normalize", "--in", str(normalized_generator), "--out", str(again)]) == 0
    assert again.read_bytes() == normalized_generator.read_bytes()


def test_sample_of_size_zero_writes_a_header(tmp_path, normalized_generator):
    out = tmp_path / "empty.csv"
    assert main(["sample", "--generator", str(normalized_generator), "--n", "0", "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8").strip() == "x1,x2"


def test_sample_is_reproducible(tmp_path, normalized_generator, sample_file):
    again = tmp_path / "again.csv"
    args = ["sample", "--generator", str(normalized_generator), "--n", "200", "--rho", "0.3", "--seed", "7", "--out", str(again)]
    assert main(args) == 0
    assert again.read_bytes() == sample_file.read_bytes()


def test_sample_with_margins(tmp_path, normalized_generator):
    out = tmp_path / "trans.csv"
    args = ["sample", "--generator", str(normalized_generator), "--n", "50", "--margin", "expon", "--margin", "-", "--out", str(out)]
    assert main(args) == 0

    frame = pd.read_csv(out)
    assert (frame["x1"] > 0).all()
    assert ((frame["x2"] > 0) & (frame["x2"] < 1)).all()


def test_density_prints_to_stdout(capsys, normalized_generator):
    assert main(["density", "--generator", str(normalized_generator), "--at", "0", "--at", "0.5"]) == 0

    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "x,pdf"
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0, abs=1e-3)


def test_copula_density_to_file(tmp_path, normalized_generator):
    points = tmp_path / "points.csv"
    pd.DataFrame({"u1": [0.5, 0.2], "u2": [0.5, 0.7]}).to_csv(points, index=False)
    out = tmp_path / "c.csv"

    args = ["density", "--generator", str(normalized_generator), "--kind", "copula", "--points", str(points), "--out", str(out)]
    assert main(args) == 0
    frame = pd.read_csv(out)
    # independence copula at rho = 0
    np.testing.assert_allclose(frame["value"], 1.0, atol=1e-3)


def test_estimate_writes_every_output(tmp_path, sample_file):
    out = tmp_path / "ghat.csv"
    assert main(["estimate", "--in", str(sample_file), "--out", str(out), "--n-max", "2"]) == 0

    for suffix in (".json", ".sigma.csv", ".diagnostics.json", ".provenance.json"):
        assert out.with_name(out.name + suffix).exists()

    diagnostics = json.loads(out.with_name("ghat.csv.diagnostics.json").read_text(encoding="utf-8"))
    assert 1 <= diagnostics["iterations"] <= 2
    sigma = pd.read_csv(out.with_name("ghat.csv.sigma.csv")).to_numpy()
    assert sigma[0, 1] == pytest.approx(0.3, abs=0.15)


def test_simfit_prints_the_best_parameters(tmp_path, capsys, sample_file):
    out = tmp_path / "fit.csv"
    args = [
        "simfit", "--in", str(sample_file), "--family", "pearson7",
        "--first", "3", "--second", "2", "--second", "3", "--n-sim", "200", "--out", str(out),
    ]
    assert main(args) == 0

    assert capsys.readouterr().out.strip() == "m=3 N=3"
    table = pd.read_csv(out)
    assert len(table) == 2
    assert list(table["admissible"]) == [False, True]


def test_experiment_from_a_spec_file(tmp_path):
    spec = tmp_path / "study.yaml"
    spec.write_text("truth: exponential\nn: [100]\nreplications: 3\nn_max: 1\nmaster_seed: 2\n", encoding="utf-8")
    out = tmp_path / "results.csv"

    assert main(["experiment", "--spec", str(spec), "--replications", "2", "--out", str(out)]) == 0

    results = pd.read_csv(out)
    assert list(results["replication"]) == [0, 1]
    summary = pd.read_csv(out.with_name("results.csv.summary.csv"))
    assert summary["replications"].tolist() == [2]

    provenance = json.loads(out.with_name("results.csv.provenance.json").read_text(encoding="utf-8"))
    assert provenance["options"]["experiment"]["replications"] == 2


def test_experiment_rejects_an_invalid_study(tmp_path):
    out = tmp_path / "results.csv"
    assert main(["experiment", "--sigma-kind", "sigma3", "--d", "2", "--out", str(out)]) == 2
