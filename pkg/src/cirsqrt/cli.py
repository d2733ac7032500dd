"""Command-line harness: one subcommand per experiment tag.

Usage: cirsqrt <tag> --config run.json [--set key=value]... [--workers N]

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
1 anything else.  Failures print a one-line JSON error record to stderr.
All tabular output is CSV (comma, '.' decimal, LF, headers); config and
manifest are JSON.  CIRSQRT_OUT_ROOT overrides the output root.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENT_TAGS, ExperimentConfig, RunManifest
from .convergence import converge_from_left, converge_from_right
from .engine import Scheme, simulate_cir, simulate_rou
from .errors import CirSqrtError, ConfigError, IoFailure, NumericError
from .localtime import (
    SingularTermEvaluations,
    default_bin_edges,
    drift_residual,
    excursion_decrement_check,
    normalize_ell,
    occupation_density,
    singular_term_local_time,
    singular_term_regularized,
)
from .ncx2 import KS_CRITICAL_1PCT, ks_test_exact_transition
from .params import ModelParams, sqrt_path
from .transform import ScaleMap, cir_to_rbm, rbm_to_cir

__all__ = ["main", "run_experiment"]


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class _OutputSink:
    """Collects output files and their digests for the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.records: list[dict] = []
        root.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> None:
        path = self.root / name
        data = text.encode()
        try:
            path.write_bytes(data)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        self.records.append({"path": name, "sha256": hashlib.sha256(data).hexdigest()})

    def write_csv(self, name: str, writer_fn) -> None:
        buf = io.StringIO()
        writer_fn(buf)
        self.write_text(name, buf.getvalue())


def _forced_increments(cfg: ExperimentConfig):
    if cfg.increments_file is None:
        return None
    import csv as _csv

    path = Path(cfg.increments_file)
    if not path.exists():
        raise IoFailure(f"increments file {path} does not exist")
    with path.open() as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header != ["dW"]:
            raise ConfigError(f"increments file must have single column dW, got {header}")
        vals = [float(row[0]) for row in reader]
    return np.asarray(vals)


def _eval_indices(cfg: ExperimentConfig) -> np.ndarray:
    grid = cfg.grid
    idx = np.unique(np.round(np.linspace(0, grid.steps, cfg.eval_times)).astype(int))
    return idx[idx > 0]


def _csv_rows(fh, header: list[str], rows) -> None:
    import csv as _csv

    w = _csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def run_experiment(cfg: ExperimentConfig, out_root: str | None = None, workers: int = 1) -> RunManifest:
    """Dispatch one experiment and write its outputs plus manifest.json."""
    started = _utcnow()
    root_env = out_root or os.environ.get("CIRSQRT_OUT_ROOT")
    out_dir = Path(cfg.output_dir)
    if root_env and not out_dir.is_absolute():
        out_dir = Path(root_env) / out_dir
    sink = _OutputSink(out_dir)

    fn = {
        "simulate": _run_simulate,
        "verify-main": _run_verify_main,
        "regime-check": _run_regime_check,
        "transform-roundtrip": _run_transform_roundtrip,
        "converge-right": _run_converge_right,
        "converge-left": _run_converge_left,
        "dist-test": _run_dist_test,
    }[cfg.tag]
    fn(cfg, sink, workers)

    manifest = RunManifest(
        config_sha256=cfg.sha256(),
        code_version=__version__,
        started_utc=started,
        finished_utc=_utcnow(),
        outputs=tuple(sink.records),
    )
    sink.root.joinpath("manifest.json").write_text(manifest.to_json())
    return manifest


def _run_simulate(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    scheme = Scheme(cfg.scheme)
    forced = _forced_increments(cfg)
    for r in range(cfg.replications):
        path = simulate_cir(
            cfg.params, cfg.grid, cfg.seed, scheme=scheme, increments=forced, rep=r
        )
        sink.write_csv(f"path_r{r:03d}.csv", path.to_csv)
    sink.write_text("params.json", cfg.params.to_json() + "\n")


def _run_verify_main(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    forced = _forced_increments(cfg)
    x = simulate_cir(cfg.params, cfg.grid, cfg.seed, increments=forced)
    y = sqrt_path(x)
    r_series = drift_residual(y, cfg.params)
    idx = _eval_indices(cfg)
    times = cfg.grid.times[idx]
    reg = {
        eps: singular_term_regularized(x, cfg.params, eps)[idx] for eps in cfg.eps_ladder
    }
    lhat = np.empty(times.size)
    dens_last = None
    for j, (i, t) in enumerate(zip(idx, times)):
        edges = default_bin_edges(
            float(np.max(y.values[: i + 1])) * (1 + 1e-12),
            dt=cfg.grid.dt,
            params=cfg.params,
            n_geometric=cfg.bins.n_geometric,
            n_uniform=cfg.bins.n_uniform,
            switch_frac=cfg.bins.switch_frac,
        )
        dens = occupation_density(y, float(t), bins=edges, params=cfg.params)
        ell = normalize_ell(dens, cfg.params.k, params=cfg.params)
        lhat[j] = singular_term_local_time(ell, cfg.params)
        dens_last = dens
    evals = SingularTermEvaluations(times, r_series[idx], reg, lhat)
    sink.write_csv("singular_terms.csv", evals.to_csv)
    if dens_last is not None:
        sink.write_csv("occupation.csv", dens_last.to_csv)
    sink.write_text(
        "diagnostics.json",
        json.dumps(
            {
                "min_x": float(np.min(x.values)),
                "zero_fraction": float(np.mean(x.values == 0.0)),
                "clamp_count": x.clamp_count,
                "clamp_mass": x.clamp_mass,
            },
            sort_keys=True,
        )
        + "\n",
    )


def _run_regime_check(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    p = cfg.params
    forced = _forced_increments(cfg)
    if p.k < 1.0:
        x = simulate_cir(p, cfg.grid, cfg.seed, increments=forced)
        rows = [
            (t1, t2, lhs, rhs, lhs - rhs)
            for t1, t2, lhs, rhs in excursion_decrement_check(x, p, cfg.floor)
        ]
        sink.write_csv(
            "excursions.csv",
            lambda fh: _csv_rows(fh, ["t1", "t2", "lhs", "rhs", "diff"], rows),
        )
        return
    idx = _eval_indices(cfg)
    if p.k == 1.0:
        rou = simulate_rou(p, cfg.grid, cfg.seed, increments=forced)
        r_series = drift_residual(rou.y, p)
        rows = [
            (float(cfg.grid.times[i]), float(r_series[i]), float(rou.regulator.values[i]))
            for i in idx
        ]
        sink.write_csv(
            "regime.csv", lambda fh: _csv_rows(fh, ["t", "R", "L0"], rows)
        )
        return
    x = simulate_cir(p, cfg.grid, cfg.seed, increments=forced)
    y = sqrt_path(x)
    r_series = drift_residual(y, p)
    dlt = p.a - p.sigma**2 / 4.0
    f = 0.5 * dlt / np.maximum(y.values, 1e-300)
    F = np.empty(f.size)
    F[0] = 0.0
    np.cumsum(0.5 * (f[1:] + f[:-1]) * cfg.grid.dt, out=F[1:])
    rows = [(float(cfg.grid.times[i]), float(r_series[i]), float(F[i])) for i in idx]
    sink.write_csv("regime.csv", lambda fh: _csv_rows(fh, ["t", "R", "F"], rows))


def _run_transform_roundtrip(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    p = cfg.params
    forced = _forced_increments(cfg)
    x = simulate_cir(p, cfg.grid, cfg.seed, increments=forced)
    m = ScaleMap(p)
    w, pair = cir_to_rbm(x, m)
    sink.write_csv(
        "transformed_w.csv",
        lambda fh: _csv_rows(
            fh,
            ["tau_or_phi", "value"],
            zip(map(float, w.grid.times), map(float, w.values)),
        ),
    )
    x_rt = rbm_to_cir(w, m)
    sink.write_csv(
        "roundtrip_x.csv",
        lambda fh: _csv_rows(
            fh,
            ["tau_or_phi", "value"],
            zip(map(float, x_rt.grid.times), map(float, x_rt.values)),
        ),
    )
    err_vals = float(np.max(np.abs(x_rt.values - x.values)))
    err_time = float(np.max(np.abs(x_rt.grid.times - x.grid.times)))
    sink.write_text(
        "roundtrip.json",
        json.dumps(
            {"sup_value_error": err_vals, "sup_time_error": err_time},
            sort_keys=True,
        )
        + "\n",
    )


def _run_converge_right(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    table = converge_from_right(
        cfg.sigma,
        cfg.b,
        cfg.x0,
        cfg.delta_ladder,
        cfg.grid,
        cfg.seed,
        cfg.replications,
        workers=workers,
    )
    sink.write_csv("converge_right.csv", table.to_csv)
    sink.write_text("metadata.json", json.dumps(table.metadata, sort_keys=True) + "\n")


def _run_converge_left(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    ty, tl = converge_from_left(
        cfg.sigma,
        cfg.b,
        cfg.x0,
        cfg.delta_ladder,
        cfg.grid,
        cfg.seed,
        cfg.replications,
        workers=workers,
    )
    sink.write_csv("converge_left_Y.csv", ty.to_csv)
    sink.write_csv("converge_left_L.csv", tl.to_csv)
    sink.write_text("metadata.json", json.dumps(tl.metadata, sort_keys=True) + "\n")


def _run_dist_test(cfg: ExperimentConfig, sink: _OutputSink, workers: int) -> None:
    rows = []
    threshold = 1.5 * KS_CRITICAL_1PCT / np.sqrt(cfg.ks.n_samples)
    for k in cfg.ks.k_values:
        for b in cfg.ks.b_values:
            for dt in cfg.ks.dt_values:
                a = k * cfg.sigma**2 / 4.0
                p = ModelParams(a, b, cfg.sigma, cfg.x0)
                stat, ok = ks_test_exact_transition(
                    p, cfg.x0, dt, cfg.ks.n_samples, cfg.seed
                )
                rows.append((k, b, dt, cfg.ks.n_samples, stat, float(threshold), ok))
    sink.write_csv(
        "ks.csv",
        lambda fh: _csv_rows(
            fh, ["k", "b", "dt", "n", "ks_stat", "threshold", "passed"], rows
        ),
    )


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cirsqrt", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="tag", required=True)
    for tag in EXPERIMENT_TAGS:
        sp = sub.add_parser(tag, help=f"run the {tag} experiment")
        sp.add_argument("--config", required=True, help="path to the JSON config")
        sp.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a scalar config field (dotted for subsections)",
        )
        sp.add_argument("--out-root", default=None, help="output root directory")
        sp.add_argument("--workers", type=int, default=1, help="parallel replications")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = ExperimentConfig.from_json(text)
        if cfg.tag != args.tag:
            cfg = ExperimentConfig.from_json_dict({**cfg.to_json_dict(), "tag": args.tag})
        cfg = cfg.apply_overrides(args.set)
        manifest = run_experiment(cfg, out_root=args.out_root, workers=args.workers)
    except CirSqrtError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        if isinstance(exc, ConfigError):
            return 2
        if isinstance(exc, NumericError):
            return 3
        return 1
    print(f"wrote {len(manifest.outputs)} files to {cfg.output_dir} (config {manifest.config_sha256[:12]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
