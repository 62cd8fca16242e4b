import os
import sys

# Ensure project root is on sys.path
CURRENT_DIR = os.path.dirname(__file__)
PROJECT_ROOT = os.path.dirname(CURRENT_DIR)
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from main import cli
from models.interval import Interval
from models.modelset import ModelSet
from services.dataset_io import load_csv

runner = CliRunner()

PLOT_FILES = ("roc.csv", "roc_band.csv", "roc3d.csv", "scatter.csv", "envelope.csv")


def invoke(*args, expect=0):
    result = runner.invoke(cli, [str(a) for a in args])
    assert result.exit_code == expect, result.output
    return result


def synth(out: Path, *extra, n=40, seed=7):
    invoke("synth", "--n", n, "--seed", seed, "--truth-beta=-5,1", "--out", out, *extra)
    return out


def read_csv(path: Path):
    with open(path, "rb") as f:
        return load_csv(f)


# ----------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------

def test_synth_is_reproducible(tmp_path):
    first = synth(tmp_path / "a.csv")
    second = synth(tmp_path / "b.csv")
    other = synth(tmp_path / "c.csv", seed=8)
    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes() != other.read_bytes()
    assert first.read_bytes().startswith(b"# run: ")
    assert read_csv(first).n == 40


def test_synth_json_output(tmp_path):
    out = synth(tmp_path / "train.json", "--intervalize", "symmetric", "--epsilon", "0.375")
    payload = json.loads(out.read_text())
    assert payload["run"]["command"] == "synth"
    assert len(payload["points"]) == 40


def test_synth_censors_labels_near_the_boundary(tmp_path):
    d = read_csv(synth(tmp_path / "train.csv", "--censor-labels", "5"))
    assert len(d.unknown_rows) == 5


def test_synth_split_intervals(tmp_path):
    d = read_csv(synth(tmp_path / "train.csv", "--intervalize", "split", "--epsilon", "0.5", "--split-point", "5"))
    for p in d.points:
        iv = p.features[0]
        assert iv.width == pytest.approx(1.0)
        assert (iv.hi <= 5.0) or (iv.lo >= 5.0)


@pytest.mark.parametrize(
    "extra",
    [
        ["--split-point", "5"],
        ["--intervalize", "split", "--epsilon", "0.5"],
        ["--epsilon", "0.5"],
        ["--x-range", "10,0"],
        ["--truth-beta", "a,b"],
        ["--n", "0"],
    ],
)
def test_synth_usage_errors(tmp_path, extra):
    result = runner.invoke(cli, ["synth", "--out", str(tmp_path / "x.csv"), *extra])
    assert result.exit_code == 1
    assert not (tmp_path / "x.csv").exists()


def test_synth_burn_standin(tmp_path):
    out = tmp_path / "burn.csv"
    invoke("synth-burn", "--n", 300, "--seed", 2, "--out", out)
    data = read_csv(out)
    assert data.feature_names == ("age", "tbsa", "inhalation", "flame")
    assert len(data.unknown_rows) == 10
    assert sum(p.features[2] == Interval(lo=0.0, hi=1.0) for p in data.points) == 20
    assert all(p.features[0].degenerate or p.features[0] == Interval(lo=80.0, hi=90.0) for p in data.points)
    assert json.loads(out.read_text().splitlines()[0][len("# run: "):])["command"] == "synth-burn"


def test_synth_burn_precise_draw(tmp_path):
    out = tmp_path / "burn_test.csv"
    invoke("synth-burn", "--n", 50, "--seed", 3, "--precise", "--out", out)
    assert read_csv(out).is_precise


def test_synth_burn_usage_errors(tmp_path):
    invoke("synth-burn", "--n", 5, "--dunno-cells", 6, "--out", tmp_path / "b.csv", expect=1)
    invoke("synth-burn", "--age-cutoff", 95, "--out", tmp_path / "b.csv", expect=1)


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------

def test_fit_precise(tmp_path):
    data = synth(tmp_path / "train.csv", n=100)
    invoke("fit", "--data", data, "--mode", "precise", "--out", tmp_path / "model.json")
    model = json.loads((tmp_path / "model.json").read_text())
    assert len(model["beta"]) == 2
    assert model["feature_names"] == ["x"]
    assert model["report"]["converged"] is True
    assert model["run"]["command"] == "fit"
    assert model["run"]["seed"] == 0


def test_fit_records_the_given_seed(tmp_path):
    data = synth(tmp_path / "train.csv")
    invoke("fit", "--data", data, "--seed", 11, "--out", tmp_path / "model.json")
    assert json.loads((tmp_path / "model.json").read_text())["run"]["seed"] == 11


def test_fit_precise_refuses_uncertain_data(tmp_path):
    data = synth(tmp_path / "train.csv", "--censor-labels", "2")
    result = invoke("fit", "--data", data, "--out", tmp_path / "model.json", expect=2)
    assert "Offending rows" in result.output


def test_fit_midpoint_accepts_uncertain_data(tmp_path):
    data = synth(tmp_path / "train.csv", "--intervalize", "symmetric", "--epsilon", "0.375", "--censor-labels", "2")
    invoke("fit", "--data", data, "--mode", "midpoint", "--out", tmp_path / "model.json")
    assert len(json.loads((tmp_path / "model.json").read_text())["beta"]) == 2


def test_fit_nonconverged_is_a_numerical_error(tmp_path):
    data = synth(tmp_path / "train.csv", n=100)
    out = tmp_path / "model.json"
    invoke("fit", "--data", data, "--max-iterations", "1", "--out", out, expect=3)
    assert not out.exists()
    invoke("fit", "--data", data, "--max-iterations", "1", "--allow-nonconverged", "--out", out)
    assert json.loads(out.read_text())["report"]["converged"] is False


def test_fit_brute_force_enumerates_labels(tmp_path):
    data = synth(tmp_path / "train.csv", "--censor-labels", "3")
    invoke("fit", "--data", data, "--mode", "brute-force", "--out", tmp_path / "set.json")
    ms = ModelSet.model_validate_json((tmp_path / "set.json").read_text())
    assert len(ms.models) == 8


def test_fit_brute_force_refuses_large_lattice(tmp_path):
    data = synth(tmp_path / "train.csv", "--censor-labels", "25")
    result = invoke("fit", "--data", data, "--mode", "brute-force", "--out", tmp_path / "set.json", expect=2)
    assert "2^25" in result.output


def test_fit_imprecise_on_precise_data_matches_precise_fit(tmp_path):
    data = synth(tmp_path / "train.csv", n=60)
    invoke("fit", "--data", data, "--out", tmp_path / "model.json")
    invoke("fit", "--data", data, "--mode", "imprecise", "--out", tmp_path / "set.json")
    beta = json.loads((tmp_path / "model.json").read_text())["beta"]
    ms = ModelSet.model_validate_json((tmp_path / "set.json").read_text())
    for candidate in ms.models:
        assert candidate.beta == pytest.approx(beta, abs=1e-6)


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "synth.env"
    config.write_text("n=20\nseed=3\n")
    out = tmp_path / "train.csv"
    invoke("--config", config, "synth", "--out", out)
    assert read_csv(out).n == 20


# ----------------------------------------------------------------------
# predict, eval and containment
# ----------------------------------------------------------------------

@pytest.fixture
def imprecise_model(tmp_path):
    train = synth(tmp_path / "train.csv", "--intervalize", "symmetric", "--epsilon", "0.375", n=30)
    out = tmp_path / "set.json"
    invoke("fit", "--data", train, "--mode", "imprecise", "--refine-budget", "20", "--out", out)
    return train, out


def test_predict_without_labels(tmp_path, imprecise_model):
    _, model = imprecise_model
    features = tmp_path / "features.csv"
    features.write_text("x\n0.0\n5.0\n\"[0,10]\"\n10.0\n")
    out = tmp_path / "pred.csv"
    invoke("predict", "--model", model, "--data", features, "--out", out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# run: ")
    assert json.loads(lines[0][len("# run: "):])["seed"] == 0
    assert lines[1] == "row,p_lo,p_hi,decision"
    assert len(lines) == 6
    assert lines[2].endswith("negative") and lines[5].endswith("positive")
    assert lines[4].endswith("dunno")


def test_eval_writes_report_and_plot_data(tmp_path, imprecise_model):
    _, model = imprecise_model
    test = synth(tmp_path / "test.csv", seed=99)
    result = invoke(
        "eval", "--model", model, "--data", test, "--out", tmp_path / "report.json",
        "--plot-data", tmp_path / "plots",
    )
    assert result.output.startswith("a=")
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["auc_interval"] is not None
    assert report["stats"]["s"] is None or report["ternary"]["e"] + report["ternary"]["f"] == 0
    for name in PLOT_FILES:
        assert (tmp_path / "plots" / name).exists()
    roc3d = (tmp_path / "plots" / "roc3d.csv").read_text().splitlines()
    assert roc3d[1] == "C,fpr_prime,s_prime,sigma,tau"
    assert len(roc3d) == 2 + 101


def test_eval_dimension_mismatch_is_a_data_error(tmp_path):
    train = tmp_path / "train2.csv"
    invoke("synth", "--n", "60", "--truth-beta=-5,1,0.5", "--out", train)
    invoke("fit", "--data", train, "--out", tmp_path / "model.json")
    test = synth(tmp_path / "test.csv")
    invoke("eval", "--model", tmp_path / "model.json", "--data", test, "--out", tmp_path / "r.json", expect=2)


def test_eval_rejects_threshold_outside_unit_interval(tmp_path, imprecise_model):
    train, model = imprecise_model
    invoke("eval", "--model", model, "--data", train, "--threshold", "1.0", "--out", tmp_path / "r.json", expect=1)


def test_containment_command(tmp_path, imprecise_model):
    train, model = imprecise_model
    result = invoke(
        "containment", "--model", model, "--data", train, "--n-datasets", "20", "--out", tmp_path / "c.json"
    )
    assert result.output.startswith("violation rate: ")
    assert json.loads((tmp_path / "c.json").read_text())["n_datasets"] == 20


def test_version():
    assert "0.1.0" in invoke("--version").output


# ----------------------------------------------------------------------
# End to end
# ----------------------------------------------------------------------

def pipeline(directory: Path, seed: int = 7):
    directory.mkdir()
    train = synth(directory / "train.csv", "--intervalize", "symmetric", "--epsilon", "0.375", n=30, seed=seed)
    test = synth(directory / "test.csv", n=30, seed=seed + 1000)
    invoke("fit", "--data", train, "--mode", "imprecise", "--refine-budget", "20", "--out", directory / "set.json")
    invoke(
        "eval", "--model", directory / "set.json", "--data", test, "--seed", seed,
        "--out", directory / "report.json", "--plot-data", directory / "plots",
    )
    return sorted(p for p in directory.rglob("*") if p.is_file())


def test_pipeline_is_byte_identical_across_runs(tmp_path):
    first = pipeline(tmp_path / "one")
    second = pipeline(tmp_path / "two")
    assert [p.relative_to(tmp_path / "one") for p in first] == [p.relative_to(tmp_path / "two") for p in second]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes(), a.name


def test_pipeline_seed_changes_training_digest(tmp_path):
    pipeline(tmp_path / "one", seed=7)
    pipeline(tmp_path / "two", seed=8)
    one = ModelSet.model_validate_json((tmp_path / "one" / "set.json").read_text())
    two = ModelSet.model_validate_json((tmp_path / "two" / "set.json").read_text())
    assert one.digest != two.digest
