from __future__ import annotations

import io
import json
import logging
from pathlib import Path
from typing import Optional, Tuple

import click

from middleware.error_handling import ErrorHandlingGroup
from models.coefficients import Coefficients, FitOptions, PreciseModel
from models.dataset import CensorMode, CollapseStrategy, Dataset
from models.evaluation import DecisionRule
from models.interval import Interval
from models.modelset import BruteForceLimits, CandidateModel, EnvelopeOptions, ModelSet
from models.run import RunStamp
from services import classify_eval, envelope_fit, glm_fit, plot_data, transforms
from services.dataset_io import CsvSchema, dataset_from_json, dataset_to_json, load_csv, save_csv
from utils.config import VERSION, configure_logging, get_settings, read_config_file
from utils.digest import digest_bytes
from utils.errors import DataError, NumericalError
from utils.rng import SEED_MAX, derive_seed

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------------
# Utility
# -----------------------------------------------------------------------------
def parse_floats(ctx, param, value) -> Optional[Tuple[float, ...]]:
    if value is None or isinstance(value, tuple):
        return value
    try:
        return tuple(float(v) for v in str(value).split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def make_run(command: str, seed: int, **inputs: str) -> RunStamp:
    return RunStamp(version=VERSION, command=command, seed=seed, inputs=dict(sorted(inputs.items())))


def read_dataset(path: Path, label_column: str = "y", require_label: bool = True) -> Tuple[Dataset, str]:
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        data = dataset_from_json(raw.decode("utf-8"))
    else:
        data = load_csv(io.BytesIO(raw), CsvSchema(label_column=label_column, require_label=require_label))
    logger.info("Read %d rows from %s", data.n, path)
    return data, digest_bytes(raw)


def read_model(path: Path) -> Tuple[ModelSet, str]:
    """A ModelSet, or a precise model wrapped as a one-candidate ModelSet."""
    raw = path.read_bytes()
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as e:
        raise DataError(f"{path} is not valid JSON: {e}")
    if isinstance(payload, dict) and "models" in payload:
        return ModelSet.model_validate(payload), digest_bytes(raw)
    if isinstance(payload, dict) and "beta" in payload:
        precise = PreciseModel.model_validate(payload)
        ms = ModelSet(
            models=(
                CandidateModel(
                    beta=precise.beta,
                    provenance="precise",
                    separation=precise.report.separation_detected,
                ),
            ),
            feature_names=precise.feature_names,
            digest=precise.run.inputs.get("data", "") if precise.run else "",
        )
        return ms, digest_bytes(raw)
    raise DataError(f"{path} holds neither a model nor a model set")


def write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def write_json(path: Path, document) -> None:
    write_bytes(path, (document.model_dump_json(indent=2) + "\n").encode("utf-8"))


def write_dataset(path: Path, data: Dataset, run: RunStamp) -> None:
    """Dataset JSON for a .json path, CSV otherwise."""
    if path.suffix.lower() == ".json":
        write_bytes(path, (dataset_to_json(data, run) + "\n").encode("utf-8"))
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as sink:
        save_csv(data, sink, run)


# -----------------------------------------------------------------------------
# CLI Setup
# -----------------------------------------------------------------------------
@click.group(cls=ErrorHandlingGroup)
@click.version_option(VERSION, prog_name="imprecise-logit")
@click.option(
    "--config",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="key=value file of defaults for the subcommand's long options.",
)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Overrides IMPRECISE_LOG_LEVEL.",
)
@click.pass_context
def cli(ctx: click.Context, config: Optional[Path], log_level: Optional[str]):
    """Imprecise logistic regression: fit envelopes of models, predict intervals, evaluate with abstention."""
    settings = get_settings()
    configure_logging(log_level or settings.log_level)
    ctx.obj = settings
    defaults = read_config_file(config)
    if defaults and ctx.invoked_subcommand:
        ctx.default_map = {ctx.invoked_subcommand: defaults}


def resolve_jobs(ctx: click.Context, n_jobs: Optional[int]) -> int:
    return n_jobs if n_jobs is not None else ctx.obj.n_jobs


# -----------------------------------------------------------------------------
# Synth
# -----------------------------------------------------------------------------
INTERVALIZE_MODES = {
    "symmetric": CensorMode.SYMMETRIC,
    "left": CensorMode.LEFT_BIASED,
    "right": CensorMode.RIGHT_BIASED,
    "split": CensorMode.SPLIT_BIASED,
}


@cli.command()
@click.option("--n", "n", type=click.IntRange(min=1), default=50, show_default=True, help="Number of rows.")
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True)
@click.option("--truth-beta", callback=parse_floats, default="-5,1", show_default=True,
              help="Ground-truth coefficients, intercept first.")
@click.option("--x-range", callback=parse_floats, default="0,10", show_default=True,
              help="lo,hi of the uniform covariate draw.")
@click.option("--intervalize", type=click.Choice(["none", *INTERVALIZE_MODES]), default="none", show_default=True)
@click.option("--epsilon", type=click.FloatRange(min=0.0), default=0.0, show_default=True,
              help="Half-width of the produced intervals.")
@click.option("--split-point", type=float, default=None, help="Switch point of split intervalization.")
@click.option("--censor-labels", type=click.IntRange(min=0), default=0, show_default=True,
              help="Mark the k rows nearest the ground-truth decision boundary as unknown.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="Output dataset (.csv, or .json for dataset JSON).")
def synth(n, seed, truth_beta, x_range, intervalize, epsilon, split_point, censor_labels, out):
    """Draw a synthetic dataset, optionally intervalized and label-censored."""
    if split_point is not None and intervalize != "split":
        raise click.UsageError("--split-point requires --intervalize split")
    if intervalize == "split" and split_point is None:
        raise click.UsageError("--intervalize split requires --split-point")
    if intervalize == "none" and epsilon > 0:
        raise click.UsageError("--epsilon requires an --intervalize mode")
    if len(x_range) != 2 or x_range[0] > x_range[1]:
        raise click.BadParameter("expected lo,hi with lo <= hi", param_hint="--x-range")

    truth = Coefficients(beta=truth_beta)
    data = transforms.synthesize(n, seed, truth, Interval(lo=x_range[0], hi=x_range[1]))
    censored = transforms.nearest_boundary_rows(data, truth, censor_labels) if censor_labels else []
    if intervalize != "none":
        data = transforms.intervalize(
            data, INTERVALIZE_MODES[intervalize], epsilon, seed=derive_seed(seed, 1), split_point=split_point
        )
    data = transforms.censor_labels(data, censored)

    write_dataset(out, data, make_run("synth", seed))
    click.echo(f"wrote {data.n} rows to {out}")


# -----------------------------------------------------------------------------
# Burn stand-in
# -----------------------------------------------------------------------------
@cli.command(name="synth-burn")
@click.option("--n", "n", type=click.IntRange(min=1), default=1000, show_default=True, help="Number of patients.")
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True)
@click.option("--age-cutoff", type=float, default=80.0, show_default=True,
              help="Ages above this become [cutoff, cap].")
@click.option("--age-cap", type=float, default=90.0, show_default=True)
@click.option("--dunno-cells", type=click.IntRange(min=0), default=20, show_default=True,
              help="Inhalation cells replaced by [0,1].")
@click.option("--unknown-labels", type=click.IntRange(min=0), default=10, show_default=True)
@click.option("--precise", is_flag=True, default=False, help="Write the draw before any censoring.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="Output dataset (.csv, or .json for dataset JSON).")
def synth_burn(n, seed, age_cutoff, age_cap, dunno_cells, unknown_labels, precise, out):
    """Draw the burn-mortality stand-in: age, tbsa, inhalation, flame."""
    if precise:
        data = transforms.synthesize_mixed(n, seed, transforms.BURN_TRUTH, transforms.BURN_COVARIATES)
    else:
        data = transforms.burn_standin(n, seed, age_cutoff, age_cap, dunno_cells, unknown_labels)
    write_dataset(out, data, make_run("synth-burn", seed))
    click.echo(f"wrote {data.n} rows to {out}")


# -----------------------------------------------------------------------------
# Fit
# -----------------------------------------------------------------------------
FIT_MODES = ["precise", "midpoint", "drop-uncertain", "imprecise", "brute-force"]


@cli.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--mode", type=click.Choice(FIT_MODES), default="precise", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--label-column", default="y", show_default=True)
@click.option("--ridge", type=click.FloatRange(min=0.0), default=0.0, show_default=True)
@click.option("--tolerance", type=click.FloatRange(min=0.0, min_open=True), default=1e-8, show_default=True)
@click.option("--max-iterations", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--separation-cap", type=click.FloatRange(min=0.0, min_open=True), default=30.0, show_default=True)
@click.option("--refine-budget", type=click.IntRange(min=1), default=500, show_default=True)
@click.option("--exact-threshold", type=click.IntRange(0, 24), default=12, show_default=True)
@click.option("--line-search-iterations", type=click.IntRange(min=0), default=6, show_default=True)
@click.option("--threshold-cuts", type=click.IntRange(min=0), default=64, show_default=True,
              help="Most midpoint cuts tried as split-orientation candidates.")
@click.option("--corners/--no-corners", default=True, show_default=True,
              help="Keep mixed-orientation corner fits in the model set.")
@click.option("--max-label-combos", type=click.IntRange(min=1), default=4096, show_default=True)
@click.option("--max-feature-corners", type=click.IntRange(min=1), default=4096, show_default=True)
@click.option("--n-jobs", type=int, default=None, help="joblib workers; default IMPRECISE_N_JOBS.")
@click.option("--allow-nonconverged", is_flag=True, default=False,
              help="Write a precise fit even when Newton iterations did not converge.")
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True,
              help="Run seed recorded in the output; fitting draws no randomness.")
@click.pass_context
def fit(ctx, data_path, mode, out, label_column, ridge, tolerance, max_iterations, separation_cap,
        refine_budget, exact_threshold, line_search_iterations, threshold_cuts, corners, max_label_combos,
        max_feature_corners, n_jobs, allow_nonconverged, seed):
    """Fit a precise model or an imprecise model set."""
    data, digest = read_dataset(data_path, label_column)
    fit_opts = FitOptions(
        tolerance=tolerance, max_iterations=max_iterations, ridge=ridge, separation_cap=separation_cap
    )
    n_jobs = resolve_jobs(ctx, n_jobs)
    run = make_run("fit", seed, data=digest)

    if mode in ("precise", "midpoint", "drop-uncertain"):
        if mode == "midpoint":
            data = transforms.collapse(data, CollapseStrategy.MIDPOINT)
        elif mode == "drop-uncertain":
            data = transforms.collapse(data, CollapseStrategy.DROP_UNCERTAIN)
        coeffs, report = glm_fit.fit_mle(data, fit_opts)
        if report.separation_detected:
            logger.warning("Separation detected: coefficients are capped")
        elif not report.converged and not allow_nonconverged:
            raise NumericalError(
                f"Fit did not converge after {report.iterations} iterations "
                f"(gradient norm {report.gradient_norm:.3g}); rerun with --allow-nonconverged to keep it."
            )
        write_json(out, PreciseModel(beta=coeffs.beta, feature_names=data.feature_names, report=report, run=run))
        click.echo(f"wrote precise model to {out}")
        return

    if mode == "imprecise":
        opts = EnvelopeOptions(
            refine_budget=refine_budget,
            exact_threshold=exact_threshold,
            line_search_iterations=line_search_iterations,
            threshold_cuts=threshold_cuts,
            include_corners=corners,
            fit=fit_opts,
            n_jobs=n_jobs,
        )
        ms = envelope_fit.fit_imprecise(data, opts)
    else:
        limits = BruteForceLimits(
            max_label_combos=max_label_combos, max_feature_corners=max_feature_corners, fit=fit_opts, n_jobs=n_jobs
        )
        ms = envelope_fit.fit_imprecise_bruteforce(data, limits)
    write_json(out, ms.model_copy(update={"run": run}))
    click.echo(f"wrote {len(ms.models)} candidate models to {out}")


# -----------------------------------------------------------------------------
# Predict
# -----------------------------------------------------------------------------
@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Feature rows; a label column is optional and ignored.")
@click.option("--threshold", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.5,
              show_default=True)
@click.option("--rule", type=click.Choice([r.value for r in DecisionRule]), default="abstain", show_default=True)
@click.option("--label-column", default="y", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True,
              help="Run seed recorded in the output; prediction draws no randomness.")
def predict(model_path, data_path, threshold, rule, label_column, out, seed):
    """Interval probability and decision for every row."""
    ms, model_digest = read_model(model_path)
    data, data_digest = read_dataset(data_path, label_column, require_label=False)
    p_lo, p_hi = envelope_fit.predict_interval_matrix(ms, data.lower(), data.upper())
    decisions = classify_eval.classify_many(p_lo, p_hi, threshold, DecisionRule(rule))
    run = make_run("predict", seed, model=model_digest, data=data_digest)
    write_bytes(out, plot_data.predictions_csv(p_lo, p_hi, decisions, run))
    click.echo(f"wrote {data.n} predictions to {out}")


# -----------------------------------------------------------------------------
# Eval
# -----------------------------------------------------------------------------
def write_plot_data(directory: Path, ms: ModelSet, test: Dataset, seed: int, run: RunStamp) -> None:
    p_lo, p_hi = envelope_fit.predict_interval_matrix(ms, test.lower(), test.upper())
    truth = test.labels().astype(int).tolist()
    if 0 < sum(truth) < len(truth):
        curves = {"lower": classify_eval.roc(p_lo, truth), "upper": classify_eval.roc(p_hi, truth)}
        write_bytes(directory / "roc.csv", plot_data.roc_csv(curves, run))
        if test.has_interval_features:
            logger.warning("Test features carry intervals; roc_band.csv is skipped")
        else:
            write_bytes(directory / "roc_band.csv", plot_data.roc_band_csv(classify_eval.roc_band(ms, test), run))
        write_bytes(directory / "roc3d.csv", plot_data.roc3d_csv(classify_eval.roc3d(ms, test), run))
    else:
        logger.warning("Test labels hold a single class; ROC tables are skipped")
    scatter = classify_eval.discrimination_scatter(ms, test, seed)
    write_bytes(directory / "scatter.csv", plot_data.scatter_csv(scatter, run))
    if ms.dimension >= 1:
        grid = envelope_fit.feature_grid(test, size=101)
        env_lo, env_hi = envelope_fit.envelope_on_grid(ms, grid)
        column = ms.feature_names[0] if ms.feature_names else test.feature_names[0]
        write_bytes(directory / "envelope.csv", plot_data.envelope_csv(column, grid[:, 0], env_lo, env_hi, run))


@cli.command(name="eval")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--threshold", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.5,
              show_default=True)
@click.option("--rule", type=click.Choice([r.value for r in DecisionRule]), default="abstain", show_default=True)
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True, help="Scatter jitter seed.")
@click.option("--label-column", default="y", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Report JSON.")
@click.option("--plot-data", "plot_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for roc.csv, roc_band.csv, roc3d.csv, scatter.csv and envelope.csv.")
def eval_command(model_path, data_path, threshold, rule, seed, label_column, out, plot_dir):
    """Confusion matrices, uncertainty statistics and AUC on a labeled test set."""
    ms, model_digest = read_model(model_path)
    test, data_digest = read_dataset(data_path, label_column)
    run = make_run("eval", seed, model=model_digest, data=data_digest)
    report = classify_eval.evaluate(ms, test, threshold, DecisionRule(rule), run=run)
    write_json(out, report)
    if plot_dir is not None:
        write_plot_data(plot_dir, ms, test, seed, run)
    t = report.ternary
    click.echo(f"a={t.a} b={t.b} c={t.c} d={t.d} e={t.e} f={t.f}")


# -----------------------------------------------------------------------------
# Containment
# -----------------------------------------------------------------------------
@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="The training data the model set was fitted to.")
@click.option("--n-datasets", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=0, show_default=True)
@click.option("--tolerance", type=click.FloatRange(min=0.0), default=1e-6, show_default=True)
@click.option("--grid-size", type=click.IntRange(min=2), default=21, show_default=True)
@click.option("--label-column", default="y", show_default=True)
@click.option("--n-jobs", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Report JSON.")
@click.pass_context
def containment(ctx, model_path, data_path, n_datasets, seed, tolerance, grid_size, label_column, n_jobs, out):
    """Refit random interior datasets and report how often they leave the envelope."""
    ms, model_digest = read_model(model_path)
    data, data_digest = read_dataset(data_path, label_column)
    grid = envelope_fit.feature_grid(data, size=grid_size)
    report = envelope_fit.empirical_containment(
        ms, data, grid, n_datasets=n_datasets, seed=seed, tolerance=tolerance, n_jobs=resolve_jobs(ctx, n_jobs)
    )
    report = report.model_copy(update={"run": make_run("containment", seed, model=model_digest, data=data_digest)})
    if out is not None:
        write_json(out, report)
    click.echo(f"violation rate: {report.violation_rate:.4f} ({report.violations}/{report.n_datasets})")


if __name__ == "__main__":
    cli()
