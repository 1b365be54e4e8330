"""Command-line entry point.

Commands: generate, train, compare, predict, explain, report, serve.
Exit codes: 0 success, 2 data error, 3 configuration error, 4 internal
invariant violation.  All commands honor --seed (default 42); identical
invocations write byte-identical artifacts (pin SOURCE_DATE_EPOCH to fix
the bundle timestamp).
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import exceptions as errs
from .bundle import BUNDLE_EXTENSION, bundle_info, load_bundle, save_bundle
from .data import generate_synthetic, impute_missing, load_csv, write_csv
from .pipeline import FAMILIES, default_grids
from .server import create_app, two_decimals
from .stats import pearson_correlation, summary_stats
from .util import canonical_json, write_canonical_json
from .workflows import explain_instance, run_compare, train_bundle

_DATA_ERRORS = (errs.MissingColumn, errs.ParseError, errs.EmptyDataset,
                errs.AllMissingColumn, errs.EmptyAfterFilter, errs.ShapeMismatch,
                FileNotFoundError, PermissionError)
_CONFIG_ERRORS = (errs.UnknownFamily, errs.InvalidHyperparameter, errs.KTooLarge,
                  errs.UnknownFormatVersion, errs.SchemaViolation, errs.CorruptPayload,
                  json.JSONDecodeError, ValueError)


def _fail(stage: str, exc: Exception, code: int):
    click.echo(f"error [{stage}]: {exc}", err=True)
    sys.exit(code)


def _load_data(path, stage="load data"):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return load_csv(f)
    except _DATA_ERRORS as e:
        _fail(stage, e, 2)


def _load_grid_file(path, family=None):
    with open(path, "r", encoding="utf-8") as f:
        grids = json.load(f)
    if not isinstance(grids, dict):
        raise ValueError("grid file must be a JSON object {family: {param: [values]}}")
    if family is None:
        return grids
    if family not in grids:
        raise ValueError(f"grid file has no entry for family {family!r}")
    return grids[family]


@click.group()
def main():
    """Rack-column capacity prediction toolkit."""


@main.command()
@click.option("--n", default=261, show_default=True, help="Rows to generate.")
@click.option("--seed", default=42, show_default=True)
@click.option("--noise-sigma", default=0.05, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
def generate(n, seed, noise_sigma, out):
    """Write a synthetic rack-column dataset."""
    d = generate_synthetic(n, seed=seed, noise_sigma=noise_sigma)
    with open(out, "w", encoding="utf-8", newline="") as f:
        write_csv(d, f)
    click.echo(f"wrote {d.n} rows to {out}")


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--family", default="gradient_boosting", show_default=True)
@click.option("--grid", "grid_path", type=click.Path(), default=None,
              help="JSON grid file {family: {param: [values]}}; default built-in grids.")
@click.option("--seed", default=42, show_default=True)
@click.option("--test-fraction", default=0.2, show_default=True)
@click.option("--cv-k", default=5, show_default=True)
@click.option("--iqr-k", default=1.5, show_default=True)
@click.option("--out", required=True, type=click.Path(), help=f"Bundle path ({BUNDLE_EXTENSION}).")
@click.option("--metrics-out", type=click.Path(), default=None, help="Optional metrics JSON path.")
def train(data, family, grid_path, seed, test_fraction, cv_k, iqr_k, out, metrics_out):
    """Train one family end to end and save the model bundle."""
    if family not in FAMILIES:
        _fail("config", errs.UnknownFamily(family, FAMILIES), 3)
    grid = None
    if grid_path is not None:
        try:
            grid = _load_grid_file(grid_path, family)
        except _CONFIG_ERRORS as e:
            _fail("config", e, 3)
    d = _load_data(data)
    try:
        bundle, details = train_bundle(d, family, grid=grid, seed=seed,
                                       test_fraction=test_fraction, cv_k=cv_k, iqr_k=iqr_k)
    except _DATA_ERRORS as e:
        _fail("clean/split", e, 2)
    except _CONFIG_ERRORS as e:
        _fail("config", e, 3)
    except errs.RackmlError as e:
        _fail("train", e, 4)
    save_bundle(bundle, out)
    gs = details["grid_search"]
    click.echo(f"family: {family}")
    click.echo(f"best config: {canonical_json(gs.best_config)}")
    click.echo(f"cv mean rmse: {gs.best_cv.mean_rmse:.6f} (+/- {gs.best_cv.std_rmse:.6f})")
    tm, sm = details["train_metrics"], details["test_metrics"]
    click.echo("split          r2        rmse        mae      n")
    for name, m in (("train", tm), ("test", sm)):
        r2 = "n/a" if m.r2 is None else f"{m.r2:.6f}"
        click.echo(f"{name:<5} {r2:>11} {m.rmse:>11.4f} {m.mae:>10.4f} {m.n:>6}")
    if metrics_out:
        write_canonical_json({"train": tm.to_dict(), "test": sm.to_dict(),
                              "best_config": gs.best_config,
                              "cv": gs.best_cv.to_dict()}, metrics_out)
    click.echo(f"bundle saved to {out}")


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--grid", "grid_path", type=click.Path(), default=None)
@click.option("--families", "families_opt", default=None,
              help="Comma-separated subset (default: all 14).")
@click.option("--seed", default=42, show_default=True)
@click.option("--test-fraction", default=0.2, show_default=True)
@click.option("--cv-k", default=5, show_default=True)
@click.option("--iqr-k", default=1.5, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Report JSON path.")
@click.option("--pairs-dir", type=click.Path(), default=None,
              help="Directory for per-family actual-vs-predicted CSVs.")
def compare(data, grid_path, families_opt, seed, test_fraction, cv_k, iqr_k, out, pairs_dir):
    """Run the model bake-off and write the comparison report."""
    grids = default_grids()
    if grid_path is not None:
        try:
            for fam, g in _load_grid_file(grid_path).items():
                if fam not in FAMILIES:
                    raise ValueError(f"grid file names unknown family {fam!r}")
                grids[fam] = g
        except _CONFIG_ERRORS as e:
            _fail("config", e, 3)
    if families_opt:
        names = [f.strip() for f in families_opt.split(",") if f.strip()]
        for fam in names:
            if fam not in FAMILIES:
                _fail("config", errs.UnknownFamily(fam, FAMILIES), 3)
        grids = {fam: grids[fam] for fam in names}
    d = _load_data(data)
    try:
        report, train_ds, test_ds = run_compare(d, grids=grids, seed=seed,
                                                test_fraction=test_fraction,
                                                cv_k=cv_k, iqr_k=iqr_k)
    except _DATA_ERRORS as e:
        _fail("clean/split", e, 2)
    except _CONFIG_ERRORS as e:
        _fail("config", e, 3)
    if not report.outcomes:
        _fail("compare", RuntimeError(f"every family failed: {report.failures}"), 4)
    write_canonical_json(report.to_dict(), out)
    if pairs_dir:
        os.makedirs(pairs_dir, exist_ok=True)
        for o in report.outcomes:
            path = os.path.join(pairs_dir, f"pairs_{o.family}.csv")
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write("actual,predicted\n")
                for a, p in o.pairs:
                    f.write(f"{a!r},{p!r}\n")
    click.echo(f"{'rank':<5} {'family':<22} {'test r2':>10} {'rmse':>10} {'cv rmse':>10}")
    by_name = {o.family: o for o in report.outcomes}
    for rank, fam in enumerate(report.ranking, 1):
        o = by_name[fam]
        r2 = "n/a" if o.test_metrics.r2 is None else f"{o.test_metrics.r2:.4f}"
        click.echo(f"{rank:<5} {fam:<22} {r2:>10} {o.test_metrics.rmse:>10.3f} "
                   f"{o.cv.mean_rmse:>10.3f}")
    for fam, msg in report.failures.items():
        click.echo(f"failed: {fam}: {msg}", err=True)
    click.echo(f"report saved to {out}")


def _feature_options(fn):
    from .schema import RACK_SCHEMA
    for spec in reversed(RACK_SCHEMA.features):
        fn = click.option(f"--{spec.name}", spec.name, type=float, default=None,
                          help=f"{spec.description} ({spec.unit})")(fn)
    return fn


def _predict_rows(bundle, d, explain, seed):
    preds = bundle.predict(d.X)
    rows = []
    for i in range(d.n):
        row = {"p": float(preds[i])}
        if explain:
            ex = explain_instance(bundle, d.X[i], seed=seed)
            row["base"] = ex.base_value
            row["phi"] = ex.phi
        rows.append(row)
    return rows


def _emit_predictions(bundle, d, rows, out, explain):
    names = list(d.schema.names)
    header = names + ["P_pred", "P_pred_display"]
    if explain:
        header += ["shap_base"] + [f"phi_{n}" for n in names]
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        cells = [repr(float(v)) for v in d.X[i]] + [repr(row["p"]), two_decimals(row["p"])]
        if explain:
            cells += [repr(float(row["base"]))] + [repr(float(v)) for v in row["phi"]]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


def _run_predict(bundle_path, data, out, explain, seed, feature_values):
    try:
        bundle = load_bundle(bundle_path)
    except _CONFIG_ERRORS as e:
        _fail("load bundle", e, 3)
    given = {k: v for k, v in feature_values.items() if v is not None}
    if data is None and len(given) == len(bundle.schema.names):
        x = np.array([given[n] for n in bundle.schema.names])
        p = float(bundle.predict(x[None, :])[0])
        line = f"P_pred={p!r} P_pred_display={two_decimals(p)}"
        if explain:
            ex = explain_instance(bundle, x, seed=seed)
            phis = " ".join(f"phi_{n}={v!r}" for n, v in zip(bundle.schema.names, ex.phi))
            line += f" shap_base={ex.base_value!r} {phis}"
        click.echo(line)
        return
    if data is None:
        _fail("input", ValueError("provide --data CSV or all 10 feature flags"), 3)
    try:
        with open(data, "r", encoding="utf-8") as f:
            d = load_csv(f, require_target=False)
    except _DATA_ERRORS as e:
        _fail("load data", e, 2)
    rows = _predict_rows(bundle, d, explain, seed)
    _emit_predictions(bundle, d, rows, out, explain)


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--data", type=click.Path(), default=None, help="CSV of rows to predict.")
@click.option("--out", type=click.Path(), default=None, help="Output CSV (default stdout).")
@click.option("--explain", is_flag=True, default=False)
@click.option("--seed", default=42, show_default=True)
@_feature_options
def predict(bundle_path, data, out, explain, seed, **feature_values):
    """Predict capacity for a CSV or a single flag-specified row."""
    _run_predict(bundle_path, data, out, explain, seed, feature_values)


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--data", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--seed", default=42, show_default=True)
@click.option("--importance-out", type=click.Path(), default=None,
              help="Also write global mean-|SHAP| importance to <path>.json and <path>.csv.")
@_feature_options
def explain(bundle_path, data, out, seed, importance_out, **feature_values):
    """Predict with per-feature SHAP attribution columns."""
    _run_predict(bundle_path, data, out, True, seed, feature_values)
    if importance_out:
        if data is None:
            _fail("config", ValueError("--importance-out needs --data"), 3)
        from .shapley import shap_summary
        from .transform import apply_power_transform
        try:
            bundle = load_bundle(bundle_path)
            with open(data, "r", encoding="utf-8") as f:
                d = load_csv(f, require_target=False)
            Z = apply_power_transform(bundle.transform, d.X)
            imp = shap_summary(bundle.model, Z, display_values=d.X,
                               feature_names=list(d.schema.names))
        except _DATA_ERRORS as e:
            _fail("load data", e, 2)
        except errs.RackmlError as e:
            _fail("importance", e, 4)
        write_canonical_json(imp.to_dict(), f"{importance_out}.json")
        with open(f"{importance_out}.csv", "w", encoding="utf-8", newline="") as f:
            f.write(imp.to_csv())
        click.echo(f"importance written to {importance_out}.json / .csv")


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--bins", default=20, show_default=True)
def report(data, out_dir, bins):
    """Emit distribution, correlation and scatter data files."""
    d = _load_data(data)
    try:
        d = impute_missing(d)
        stats = summary_stats(d, bins=bins)
        corr = pearson_correlation(d)
    except _DATA_ERRORS as e:
        _fail("analyze", e, 2)
    os.makedirs(out_dir, exist_ok=True)
    write_canonical_json(stats.to_dict(), os.path.join(out_dir, "summary_stats.json"))
    write_canonical_json(corr.to_dict(), os.path.join(out_dir, "correlation.json"))
    with open(os.path.join(out_dir, "correlation_lower.csv"), "w", encoding="utf-8", newline="") as f:
        f.write("," + ",".join(corr.labels) + "\n")
        for i, label in enumerate(corr.labels):
            cells = [repr(float(corr.values[i, j])) for j in range(i + 1)]
            f.write(label + "," + ",".join(cells) + "\n")
    for j, name in enumerate(d.schema.names):
        with open(os.path.join(out_dir, f"scatter_{name}.csv"), "w", encoding="utf-8", newline="") as f:
            f.write(f"{name},P\n")
            for i in range(d.n):
                f.write(f"{float(d.X[i, j])!r},{float(d.y[i])!r}\n")
    click.echo(f"report files written to {out_dir}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
def info(bundle_path):
    """Print a bundle summary."""
    try:
        b = load_bundle(bundle_path)
    except _CONFIG_ERRORS as e:
        _fail("load bundle", e, 3)
    click.echo(bundle_info(b))


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8099, show_default=True)
@click.option("--batch-limit", default=10000, show_default=True)
@click.option("--cors/--no-cors", default=False, show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Directory with the built web UI.")
def serve(bundle_path, host, port, batch_limit, cors, static_dir):
    """Serve the prediction API (and optionally the web UI)."""
    try:
        app = create_app(bundle_path=bundle_path, batch_limit=batch_limit,
                         cors=cors, static_dir=static_dir)
    except _CONFIG_ERRORS as e:
        _fail("load bundle", e, 3)
    import uvicorn
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
