"""Experiment surface: ingestion, k-fold cross-validation, error
metrics and report emission.

A run is described by an ExperimentConfig (validated against a JSON
schema before any work starts), produces a CVReport holding per
(bandwidth, fold, target) error curves, and is written out as CSV
files plus a JSON metadata sidecar.  Reports are byte-deterministic
given config and seed, except for the single timestamp field of the
sidecar.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
import os
import warnings
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__ as _pkg_version
from .errors import (
    AllNodesFailedError,
    ConfigError,
    DegenerateWindowError,
    EmptyFileError,
    EmptyReportError,
    EmptyWindowError,
    InvalidFoldCountError,
    MalformedRowError,
    NonConvergenceError,
    NonMonotoneTimeError,
)
from .extrinsic import (
    BandwidthSpec,
    bandwidth_from_log_model,
    bandwidth_from_power_model,
    extrinsic_predict,
)
from .frechet import DEFAULT_OPTIONS, SolverOptions
from .geometry import ManifoldCurve, TimeGrid, dist_arr, require_shared_grid
from .intrinsic import GeodesicKernel, predict_curve
from .simulation import BivariateCurveSample, SimulationConfig, generate_dataset, save_dataset
from .tangent import fit_tangent_basis, log_map_sample

POLAR_CONVENTION = "colatitude-from-north"

HISTOGRAM_BIN_WIDTH = 0.05

_PREDICTOR_FAILURES = (
    AllNodesFailedError,
    DegenerateWindowError,
    EmptyWindowError,
    NonConvergenceError,
)

MAGSAT_HEADER = ["time", "lat_deg", "lon_deg", "b_theta_deg", "b_phi_deg"]


@dataclass(frozen=True)
class MagsatRecord:
    """One ingested satellite row: position and magnetic-field angles
    in degrees."""

    timestamp: float
    lat_deg: float
    lon_deg: float
    b_theta_deg: float
    b_phi_deg: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude {self.lat_deg} out of range")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude {self.lon_deg} out of range")


def _latlon_to_unit(lat_deg, lon_deg) -> np.ndarray:
    lat, lon = np.radians(lat_deg), np.radians(lon_deg)
    return np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)]).T


def _polar_to_unit(theta_deg, phi_deg) -> np.ndarray:
    """Spherical angles with the polar angle measured from north."""
    th, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]).T


def ingest_magsat_csv(path, nodes_per_curve: int) -> BivariateCurveSample:
    """Cut a satellite CSV into consecutive curve pairs.

    Consecutive blocks of ``nodes_per_curve`` rows become one
    (regressor, response) pair; a trailing partial block is dropped
    with a warning.  Times are affinely rescaled to [0, 1] using the
    first block's spacing.
    """
    if nodes_per_curve < 2:
        raise ValueError("nodes_per_curve must be >= 2")
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path} is empty") from None
        if [h.strip() for h in header] != MAGSAT_HEADER:
            raise MalformedRowError(
                f"expected header {','.join(MAGSAT_HEADER)}", line=1
            )
        prev_t = -math.inf
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRowError(f"expected 5 columns, got {len(row)}", line=lineno)
            try:
                rec = MagsatRecord(*(float(v) for v in row))
            except ValueError as exc:
                raise MalformedRowError(str(exc), line=lineno) from exc
            if rec.timestamp <= prev_t:
                raise NonMonotoneTimeError(
                    f"time {rec.timestamp} does not increase", line=lineno
                )
            prev_t = rec.timestamp
            records.append(rec)
    if not records:
        raise EmptyFileError(f"{path} has no data rows")

    n_curves, remainder = divmod(len(records), nodes_per_curve)
    if n_curves == 0:
        raise EmptyFileError(
            f"{path}: {len(records)} rows cannot fill one {nodes_per_curve}-node curve"
        )
    if remainder:
        warnings.warn(f"dropping trailing partial block of {remainder} rows")

    first = records[:nodes_per_curve]
    grid = TimeGrid.from_times([r.timestamp for r in first])
    regressors, responses = [], []
    for b in range(n_curves):
        block = records[b * nodes_per_curve : (b + 1) * nodes_per_curve]
        reg = _latlon_to_unit(
            np.array([r.lat_deg for r in block]), np.array([r.lon_deg for r in block])
        )
        resp = _polar_to_unit(
            np.array([r.b_theta_deg for r in block]), np.array([r.b_phi_deg for r in block])
        )
        regressors.append(ManifoldCurve(grid, reg))
        responses.append(ManifoldCurve(grid, resp))
    metadata = {
        "source": str(path),
        "polar_convention": POLAR_CONVENTION,
        "nodes_per_curve": nodes_per_curve,
        "dropped_rows": remainder,
    }
    return BivariateCurveSample(grid, regressors, responses, np.arange(n_curves), metadata)


def synthetic_magsat_csv(path, n_curves=12, nodes_per_curve=80, seed=0, kappa=2.0):
    """Write a satellite-shaped CSV fixture built from the simulation
    pipeline (regressor angles from the regressor curves, field angles
    from the responses, colatitude-from-north convention)."""
    cfg = SimulationConfig(
        n=n_curves, n_nodes=nodes_per_curve, seed=seed, kappa=kappa, K_gen=3
    )
    ds = generate_dataset(cfg)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(MAGSAT_HEADER)
        t_global = 0.0
        for i in range(ds.n):
            reg, resp = ds.regressors[i].points, ds.responses[i].points
            for j in range(nodes_per_curve):
                lat = math.degrees(math.asin(min(1.0, max(-1.0, reg[j, 2]))))
                lon = math.degrees(math.atan2(reg[j, 1], reg[j, 0]))
                theta = math.degrees(math.acos(min(1.0, max(-1.0, resp[j, 2]))))
                phi = math.degrees(math.atan2(resp[j, 1], resp[j, 0]))
                wr.writerow(
                    [repr(t_global), repr(lat), repr(lon), repr(theta), repr(phi)]
                )
                t_global += 0.5
    return path


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded uniform shuffle cut into k contiguous chunks (ignoring
    any temporal order, per the evaluation protocol)."""
    if k < 2 or k > n:
        raise InvalidFoldCountError(f"fold count {k} invalid for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, k)]


def angular_error_curve(pred: ManifoldCurve, truth: ManifoldCurve, squared=False) -> np.ndarray:
    """Node-wise geodesic distance between prediction and truth."""
    require_shared_grid(pred.grid, truth.grid)
    d = dist_arr(pred.points, truth.points)
    return d * d if squared else d


def tangent_cv_error(
    pred: ManifoldCurve,
    truth: ManifoldCurve,
    mu: ManifoldCurve,
    basis=None,
    component=None,
) -> float:
    """Squared H-norm of the log-mapped difference at the mean curve.

    With ``component`` in {0, 1, 2} the norm is restricted to that
    ambient coordinate of the tangent curves.  ``basis`` (when given)
    only pins the expected grid.
    """
    if basis is not None:
        require_shared_grid(pred.grid, basis.grid)
    lp = log_map_sample([pred], mu)[0]
    lt = log_map_sample([truth], mu)[0]
    diff = lp.vecs - lt.vecs
    w = mu.grid.trapezoid_weights
    if component is None:
        return float(w @ np.sum(diff * diff, axis=1))
    return float(w @ (diff[:, component] * diff[:, component]))


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

_SIMULATION_PROPS = {
    "n": {"type": "integer", "minimum": 1},
    "n_nodes": {"type": "integer", "minimum": 2},
    "theta_ou": {"type": "number", "minimum": 0},
    "sigma_ou": {"type": "number", "minimum": 0},
    "rho_s": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "kappa": {"type": "number", "exclusiveMinimum": 0},
    "gamma": {"type": "array", "items": {"type": "number"}},
    "sigma_eps": {"type": "number", "minimum": 0},
    "K_gen": {"type": "integer", "minimum": 1},
    "seed": {"type": "integer"},
    "basis": {"enum": ["rfpca", "sinusoid"]},
}

EXPERIMENT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["mode", "predictor", "folds", "output_dir", "seed"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["simulate", "ingest"]},
        "predictor": {"enum": ["NW", "LL", "EXTRINSIC"]},
        "bandwidths": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "number", "exclusiveMinimum": 0},
        },
        "bandwidth_model": {
            "type": "object",
            "required": ["model", "beta"],
            "additionalProperties": False,
            "properties": {
                "model": {"enum": ["log", "power"]},
                "beta": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "curve_duration_minutes": {"type": "number", "exclusiveMinimum": 0},
        "folds": {"type": "integer", "minimum": 2},
        "component_set": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 0},
        },
        "n_basis_components": {"type": "integer", "minimum": 1},
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": _SIMULATION_PROPS,
        },
        "data_path": {"type": "string"},
        "nodes_per_curve": {"type": "integer", "minimum": 2},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer"},
    },
}


@dataclass
class ExperimentConfig:
    """A validated experiment description (see EXPERIMENT_SCHEMA)."""

    mode: str
    predictor: str
    folds: int
    output_dir: str
    seed: int
    bandwidths: list = None
    bandwidth_model: dict = None
    curve_duration_minutes: float = 50.0
    component_set: list = None
    n_basis_components: int = 6
    simulation: dict = None
    data_path: str = None
    nodes_per_curve: int = None

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, EXPERIMENT_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config schema violation: {exc.message}") from exc
        cfg = ExperimentConfig(**raw)
        if (cfg.bandwidths is None) == (cfg.bandwidth_model is None):
            raise ConfigError("exactly one of bandwidths / bandwidth_model must be set")
        if cfg.mode == "simulate":
            if cfg.simulation is None or cfg.data_path is not None:
                raise ConfigError("simulate mode needs 'simulation' and no 'data_path'")
        else:
            if cfg.data_path is None or cfg.simulation is not None:
                raise ConfigError("ingest mode needs 'data_path' and no 'simulation'")
            if cfg.nodes_per_curve is None:
                raise ConfigError("ingest mode needs 'nodes_per_curve'")
        if cfg.predictor == "EXTRINSIC" and cfg.component_set is None:
            raise ConfigError("extrinsic runs need 'component_set'")
        return cfg

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return ExperimentConfig.from_dict(raw)

    def to_dict(self) -> dict:
        out = {}
        for key in (
            "mode", "predictor", "folds", "output_dir", "seed", "bandwidths",
            "bandwidth_model", "curve_duration_minutes", "component_set",
            "n_basis_components", "simulation", "data_path", "nodes_per_curve",
        ):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


def load_sample(cfg: ExperimentConfig) -> BivariateCurveSample:
    if cfg.mode == "simulate":
        return generate_dataset(SimulationConfig(**cfg.simulation))
    return ingest_magsat_csv(cfg.data_path, cfg.nodes_per_curve)


def resolve_bandwidths(cfg: ExperimentConfig, fold_train_sizes) -> list[dict]:
    """Bandwidth settings: explicit values, or one per-fold parametric
    setting whose label is the interval the model spans over folds."""
    if cfg.bandwidths is not None:
        return [
            {"label": repr(float(bw)), "per_fold": [float(bw)] * len(fold_train_sizes)}
            for bw in cfg.bandwidths
        ]
    model, beta = cfg.bandwidth_model["model"], cfg.bandwidth_model["beta"]
    if model == "log":
        per_fold = [bandwidth_from_log_model(m, beta) for m in fold_train_sizes]
    else:
        per_fold = [
            bandwidth_from_power_model(m * cfg.curve_duration_minutes, beta)
            for m in fold_train_sizes
        ]
    lo, hi = min(per_fold), max(per_fold)
    return [{"label": f"({lo:.4f}, {hi:.4f})", "per_fold": per_fold}]


# ---------------------------------------------------------------------------
# CV driver and report
# ---------------------------------------------------------------------------

@dataclass
class CVRecord:
    """Errors of one validation target under one bandwidth setting."""

    bandwidth_label: str
    bandwidth_value: float
    fold: int
    target: int
    errors: np.ndarray          # node-wise geodesic distance, NaN when failed
    statuses: tuple             # per node: ok | interpolated | failed
    tangent_components: np.ndarray = None   # (3,) squared H-norms (extrinsic)
    tangent_total: float = None
    failed: bool = False


@dataclass
class CVReport:
    predictor: str
    grid: TimeGrid
    records: list = field(default_factory=list)
    table: list = field(default_factory=list)   # extrinsic: per-bandwidth rows
    config: dict = field(default_factory=dict)
    n_samples: int = 0

    def bandwidth_labels(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.bandwidth_label not in seen:
                seen.append(r.bandwidth_label)
        return seen

    def node_mean_squared_errors(self, label: str) -> np.ndarray:
        """Per-node mean (over targets) of squared geodesic errors."""
        rows = [r.errors for r in self.records if r.bandwidth_label == label and not r.failed]
        if not rows:
            raise EmptyReportError(f"no successful records for bandwidth {label}")
        return np.mean(np.stack(rows) ** 2, axis=0)

    def temporal_means(self, label: str) -> dict[int, float]:
        """Per-target mean over nodes of squared geodesic errors."""
        out = {}
        for r in self.records:
            if r.bandwidth_label == label and not r.failed:
                out[r.target] = float(np.mean(r.errors**2))
        if not out:
            raise EmptyReportError(f"no successful records for bandwidth {label}")
        return out


def _fit_extrinsic_fold(train: BivariateCurveSample, cfg, opts):
    return fit_tangent_basis(
        train.regressors, train.responses, cfg.n_basis_components, opts
    )


def run_cv(
    cfg: ExperimentConfig,
    sample: BivariateCurveSample = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> CVReport:
    """k-fold cross-validation of the configured predictor.

    Per fold, the predictor is fit on the training indices and each
    validation curve is predicted from its regressor.  Predictor
    failures are recorded per (fold, target) without aborting the run.
    """
    if sample is None:
        sample = load_sample(cfg)
    folds = kfold_split(sample.n, cfg.folds, cfg.seed)
    train_sizes = [sample.n - len(f) for f in folds]
    settings = resolve_bandwidths(cfg, train_sizes)
    report = CVReport(cfg.predictor, sample.grid, config=cfg.to_dict(), n_samples=sample.n)
    n_nodes = sample.grid.n_nodes

    fold_training = []
    for f, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(sample.n), val_idx)
        train = sample.subset(train_idx)
        basis = _fit_extrinsic_fold(train, cfg, opts) if cfg.predictor == "EXTRINSIC" else None
        fold_training.append((train, val_idx, basis))

    for setting in settings:
        sup_errors = np.full((len(folds), 3), np.nan)  # extrinsic per-component sups
        for f, (train, val_idx, basis) in enumerate(fold_training):
            bw = setting["per_fold"][f]
            comp_sups = np.full(3, np.nan)
            for v in val_idx:
                x0 = sample.regressors[v]
                truth = sample.responses[v]
                rec = CVRecord(
                    setting["label"], bw, f, int(v),
                    np.full(n_nodes, np.nan), ("failed",) * n_nodes,
                )
                try:
                    if cfg.predictor == "EXTRINSIC":
                        pred = extrinsic_predict(
                            train, x0, basis, cfg.component_set, BandwidthSpec(bw)
                        )
                        rec.errors = angular_error_curve(pred.curve, truth)
                        rec.statuses = tuple(
                            "clipped" if c else "ok" for c in pred.clipped
                        )
                        rec.tangent_components = np.array(
                            [
                                tangent_cv_error(pred.curve, truth, basis.base, component=j)
                                for j in range(3)
                            ]
                        )
                        rec.tangent_total = float(np.sum(rec.tangent_components))
                        comp_sups = np.fmax(comp_sups, rec.tangent_components)
                    else:
                        pred = predict_curve(
                            cfg.predictor, train, x0, GeodesicKernel(bw), opts
                        )
                        rec.errors = angular_error_curve(pred.curve, truth)
                        rec.statuses = pred.statuses
                except _PREDICTOR_FAILURES:
                    rec.failed = True
                report.records.append(rec)
            if cfg.predictor == "EXTRINSIC":
                sup_errors[f] = comp_sups
        if cfg.predictor == "EXTRINSIC":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cve = np.nanmean(sup_errors, axis=0)
            report.table.append(
                {
                    "bandwidth_label": setting["label"],
                    "cve": [float(c) for c in cve],
                    "mean": float(np.mean(cve)),
                }
            )
    return report


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _versions() -> dict:
    import scipy

    return {"locfrechet": _pkg_version, "numpy": np.__version__, "scipy": scipy.__version__}


def write_report(report: CVReport, outdir, timestamp=None):
    """One errors CSV per (predictor, bandwidth), the extrinsic table
    when present, and a JSON metadata sidecar."""
    os.makedirs(outdir, exist_ok=True)
    t = report.grid.nodes
    for label in report.bandwidth_labels():
        safe = label.replace(" ", "").replace("(", "").replace(")", "").replace(",", "_")
        path = os.path.join(outdir, f"errors_{report.predictor}_bw{safe}.csv")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(
                ["fold", "target", "node_index", "t", "error", "squared_error", "status"]
            )
            for r in report.records:
                if r.bandwidth_label != label:
                    continue
                for j in range(t.size):
                    e = r.errors[j]
                    wr.writerow(
                        [
                            r.fold, r.target, j, repr(float(t[j])),
                            "nan" if np.isnan(e) else repr(float(e)),
                            "nan" if np.isnan(e) else repr(float(e * e)),
                            r.statuses[j],
                        ]
                    )
    if report.table:
        with open(os.path.join(outdir, "tangent_cv_table.csv"), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["bandwidth", "cve_y1", "cve_y2", "cve_y3", "mean"])
            for row in report.table:
                wr.writerow(
                    [row["bandwidth_label"]]
                    + [repr(c) for c in row["cve"]]
                    + [repr(row["mean"])]
                )
    meta = {
        "config": report.config,
        "predictor": report.predictor,
        "n_samples": report.n_samples,
        "versions": _versions(),
        "created_at": timestamp if timestamp is not None else _now_iso(),
    }
    with open(os.path.join(outdir, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def read_report(outdir) -> CVReport:
    """Rebuild a report from the errors CSVs in a report directory
    (bandwidth labels are the filename-mangled forms)."""
    import glob
    import re as _re

    files = sorted(glob.glob(os.path.join(outdir, "errors_*_bw*.csv")))
    if not files:
        raise EmptyReportError(f"no errors files found in {outdir}")
    records = []
    predictor, grid = None, None
    for path in files:
        m = _re.match(r"errors_(\w+)_bw(.+)\.csv$", os.path.basename(path))
        predictor, label = m.group(1), m.group(2)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        per_target: dict[tuple, list] = {}
        for row in rows:
            per_target.setdefault((int(row[0]), int(row[1])), []).append(row)
        for (fold, target), trows in sorted(per_target.items()):
            if grid is None:
                grid = TimeGrid(np.array([float(r[3]) for r in trows]))
            errors = np.array([float(r[4]) for r in trows])
            statuses = tuple(r[6] for r in trows)
            records.append(
                CVRecord(
                    label, math.nan, fold, target, errors, statuses,
                    failed=bool(np.all(np.isnan(errors))),
                )
            )
    report = CVReport(predictor, grid, records=records)
    targets = {r.target for r in records}
    report.n_samples = len(targets)
    return report


def error_histogram(values, width=HISTOGRAM_BIN_WIDTH):
    """Counts over bins of fixed width spanning [0, max(values)]."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise EmptyReportError("no values to histogram")
    top = max(float(v.max()), width)
    n_bins = int(math.ceil(top / width - 1e-12))
    edges = np.arange(n_bins + 1) * width
    edges[-1] = max(edges[-1], top)
    counts, _ = np.histogram(v, bins=edges)
    return edges, counts


def histogram_mode_bin(values, width=HISTOGRAM_BIN_WIDTH):
    """(low, high) of the most populated bin; ties go to the lowest."""
    edges, counts = error_histogram(values, width)
    b = int(np.argmax(counts))
    return float(edges[b]), float(edges[b + 1])


def summarize(report: CVReport, outdir):
    """Emit histogram bins, per-target temporal means and per-bandwidth
    sup-norm maxima as CSV files."""
    if not report.records:
        raise EmptyReportError("report holds no records")
    labels = report.bandwidth_labels()
    os.makedirs(outdir, exist_ok=True)

    with open(os.path.join(outdir, "histogram.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bandwidth", "bin_low", "bin_high", "count"])
        for label in labels:
            edges, counts = error_histogram(report.node_mean_squared_errors(label))
            for i, c in enumerate(counts):
                wr.writerow([label, repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])

    with open(os.path.join(outdir, "temporal_means.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bandwidth", "target", "temporal_mean_squared_error"])
        for label in labels:
            for target, m in sorted(report.temporal_means(label).items()):
                wr.writerow([label, target, repr(m)])

    with open(os.path.join(outdir, "bandwidth_sup.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bandwidth", "sup_error"])
        for label in labels:
            sups = [
                float(np.max(r.errors))
                for r in report.records
                if r.bandwidth_label == label and not r.failed
            ]
            if not sups:
                raise EmptyReportError(f"no successful records for bandwidth {label}")
            wr.writerow([label, repr(max(sups))])
