"""Declarative experiment runner: synthetic sweeps, decoupled baseline, real data, scaling.

Every run is keyed by ``seed = base_seed + run_index`` and draws its random
streams from that seed alone, so results do not depend on how jobs are
scheduled across workers.  Runs that raise a solver or domain error count
as failures and never enter the means.
"""
import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from .admm import SolverConfig, Status, run
from .errors import ConfigError, DataError, DomainError, NumericalFailure, UnobservedColumnError
from .fusion import beta_heuristic, build_fusion_matrix
from .graphs import GraphGeneratorSpec, read_matrix_csv
from .metrics import DEFAULT_EDGE_THRESHOLD, evaluate, signal_metrics_per_graph
from .signals import Observation, corrupt, generate_smooth_signals

METRICS = ("fscore", "rel_err", "nmse", "nmse_col_mean", "snr_db")
SIGNAL_METRICS = ("nmse", "nmse_col_mean", "snr_db")
RUN_ERRORS = (NumericalFailure, DomainError, UnobservedColumnError, np.linalg.LinAlgError)

# tuned on the synthetic protocol at N=50, K=3 (see README)
DEFAULT_SOLVER = {"alpha": 1.0, "beta": 0.03, "rho": 0.05, "max_iter": 2000,
                  "tol_primal": 1e-5, "tol_dual": 1e-5, "column_ridge": 0.0}

_STREAM_SIGNALS, _STREAM_CORRUPT, _STREAM_HOLDOUT = 1, 2, 3


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class RealDatasetSpec:
    """N x T data file split column-wise into K segments.

    ``boundaries`` are K+1 increasing cut points from 0 to T; without them
    the columns are split into ``n_segments`` near-equal blocks.
    """

    path: str
    n_segments: int = 3
    boundaries: tuple = None
    normalize: bool = True
    holdout_fraction: float = 0.2

    @classmethod
    def from_dict(cls, d, base_dir=None):
        _check_keys(d, ("path", "n_segments", "boundaries", "normalize", "holdout_fraction"), "real")
        if "path" not in d:
            raise ConfigError("real.path is required")
        path = d["path"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        b = d.get("boundaries")
        spec = cls(path=path, n_segments=int(d.get("n_segments", 3)),
                   boundaries=None if b is None else tuple(int(x) for x in b),
                   normalize=bool(d.get("normalize", True)),
                   holdout_fraction=float(d.get("holdout_fraction", 0.2)))
        return spec.validate()

    def validate(self):
        if self.boundaries is None and self.n_segments < 1:
            raise ConfigError(f"n_segments must be >= 1, got {self.n_segments}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError(f"holdout_fraction must lie in [0, 1), got {self.holdout_fraction}")
        return self

    def segments(self, T):
        if T < 1:
            raise DataError("dataset has no columns")
        if self.boundaries is not None:
            b = list(self.boundaries)
            if len(b) < 2 or b[0] != 0 or b[-1] != T or any(x >= y for x, y in zip(b, b[1:])):
                raise ConfigError(f"segment boundaries {b} do not partition {T} columns")
            return [(x, y) for x, y in zip(b, b[1:])]
        if self.n_segments > T:
            raise ConfigError(f"{self.n_segments} segments requested for {T} columns")
        cuts = np.linspace(0, T, self.n_segments + 1).round().astype(int)
        return [(int(x), int(y)) for x, y in zip(cuts, cuts[1:])]


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description; see README for the JSON schema."""

    generator: dict = field(default_factory=lambda: {"model": "BA", "n_nodes": 50, "params": {}, "perturb_rate": 0.1})
    K: int = 3
    n_samples: tuple = (80, 120)
    sampling_rates: tuple = (0.8,)
    noise_stds: tuple = (0.1,)
    signal: dict = field(default_factory=lambda: {"mode": "filter", "alpha": 0.5})
    fusion: dict = field(default_factory=lambda: {"kind": "temporal", "loading": None, "matrix": None})
    solver: dict = field(default_factory=lambda: dict(DEFAULT_SOLVER))
    monte_carlo_runs: int = 50
    base_seed: int = 0
    edge_rel_threshold: float = DEFAULT_EDGE_THRESHOLD
    trace_dir: str = None
    real: RealDatasetSpec = None
    scaling: dict = None

    _KEYS = ("generator", "K", "n_samples", "sampling_rates", "noise_stds", "signal", "fusion", "solver",
             "monte_carlo_runs", "base_seed", "edge_rel_threshold", "trace_dir", "real", "scaling")

    @classmethod
    def from_dict(cls, d, base_dir=None):
        _check_keys(d, cls._KEYS, "config")
        base = cls()
        gen = dict(base.generator)
        gen.update(d.get("generator", {}))
        _check_keys(gen, ("model", "n_nodes", "params", "perturb_rate"), "generator")
        sig = dict(base.signal)
        sig.update(d.get("signal", {}))
        _check_keys(sig, ("mode", "alpha"), "signal")
        fus = dict(base.fusion)
        fus.update(d.get("fusion", {}))
        _check_keys(fus, ("kind", "loading", "matrix"), "fusion")
        sol = dict(base.solver)
        sol.update(d.get("solver", {}))
        _check_keys(sol, tuple(DEFAULT_SOLVER), "solver")
        ns = d.get("n_samples", base.n_samples)
        ns = tuple(int(x) for x in ns) if isinstance(ns, (list, tuple)) else int(ns)
        real = d.get("real")
        scaling = d.get("scaling")
        if scaling is not None:
            _check_keys(scaling, ("n_grid", "sr_grid"), "scaling")
            scaling = {k: [float(x) if k == "sr_grid" else int(x) for x in v] for k, v in scaling.items()}
        try:
            cfg = cls(
                generator=gen, K=int(d.get("K", base.K)), n_samples=ns,
                sampling_rates=tuple(float(x) for x in d.get("sampling_rates", base.sampling_rates)),
                noise_stds=tuple(float(x) for x in d.get("noise_stds", base.noise_stds)),
                signal=sig, fusion=fus, solver=sol,
                monte_carlo_runs=int(d.get("monte_carlo_runs", base.monte_carlo_runs)),
                base_seed=int(d.get("base_seed", base.base_seed)),
                edge_rel_threshold=float(d.get("edge_rel_threshold", base.edge_rel_threshold)),
                trace_dir=d.get("trace_dir"),
                real=None if real is None else RealDatasetSpec.from_dict(real, base_dir),
                scaling=scaling,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed config value: {exc}") from None
        return cfg.validate()

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
        return cls.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))

    def validate(self):
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.monte_carlo_runs < 1:
            raise ConfigError("monte_carlo_runs must be >= 1")
        if not self.sampling_rates or not self.noise_stds:
            raise ConfigError("sampling_rates and noise_stds must be nonempty")
        for sr in self.sampling_rates:
            if not 0.0 <= sr <= 1.0:
                raise ConfigError(f"sampling rate {sr} outside [0, 1]")
        for s in self.noise_stds:
            if s < 0:
                raise ConfigError(f"noise std {s} is negative")
        ns = self.n_samples
        if isinstance(ns, tuple):
            if len(ns) != 2 or not 1 <= ns[0] <= ns[1]:
                raise ConfigError(f"n_samples range must be [lo, hi] with 1 <= lo <= hi, got {list(ns)}")
        elif ns < 1:
            raise ConfigError(f"n_samples must be >= 1, got {ns}")
        if self.signal["mode"] not in ("filter", "gmrf"):
            raise ConfigError(f"unknown signal mode {self.signal['mode']!r}")
        self.generator_spec(0).validate()
        self.fusion_spec(self.K)
        b = self.solver["beta"]
        if not (b == "heuristic" or isinstance(b, (int, float))):
            raise ConfigError(f"solver.beta must be a number or 'heuristic', got {b!r}")
        self.solver_config(1.0)
        return self

    def generator_spec(self, seed):
        g = self.generator
        return GraphGeneratorSpec(g["model"], int(g["n_nodes"]), dict(g.get("params") or {}),
                                  float(g.get("perturb_rate", 0.1)), int(seed))

    def fusion_spec(self, K):
        f = self.fusion
        return build_fusion_matrix(f["kind"], K, loading=f.get("loading"), matrix=f.get("matrix"))

    def solver_config(self, beta, **overrides):
        s = {k: v for k, v in self.solver.items() if k != "beta"}
        s.update(overrides)
        return SolverConfig(beta=float(beta), **s).validate()

    def resolved(self):
        """Plain-dict echo including every defaulted field."""
        d = asdict(self)
        d["n_samples"] = list(self.n_samples) if isinstance(self.n_samples, tuple) else self.n_samples
        d["sampling_rates"] = list(self.sampling_rates)
        d["noise_stds"] = list(self.noise_stds)
        d["generator"]["params"] = self.generator_spec(0).resolved_params()
        if self.real is not None:
            d["real"] = asdict(self.real)
            if self.real.boundaries is not None:
                d["real"]["boundaries"] = list(self.real.boundaries)
        return d


def with_config(cfg, **changes):
    return replace(cfg, **changes).validate()


# ---------------------------------------------------------------- per-run work

def _sample_sizes(cfg, rng):
    if isinstance(cfg.n_samples, tuple):
        lo, hi = cfg.n_samples
        return [int(x) for x in rng.integers(lo, hi + 1, size=cfg.K)]
    return [int(cfg.n_samples)] * cfg.K


def synthetic_instance(cfg, seed):
    """Ground-truth Laplacians and clean signals for one Monte-Carlo run."""
    Ls = _generate(cfg, seed)
    rng = _rng(seed, _STREAM_SIGNALS)
    sizes = _sample_sizes(cfg, rng)
    Xs = [generate_smooth_signals(L, n, mode=cfg.signal["mode"], alpha=cfg.signal["alpha"], rng=rng)
          for L, n in zip(Ls, sizes)]
    return Ls, Xs


def _generate(cfg, seed):
    from .graphs import generate_graph_sequence
    return generate_graph_sequence(cfg.generator_spec(seed), cfg.K)


def corrupt_all(Xs, sr, sigma, seed):
    # one uniform stream per run, so masks are nested across sampling rates
    rng = _rng(seed, _STREAM_CORRUPT)
    return [corrupt(X, sr, sigma, rng) for X in Xs]


def mean_impute(o):
    """Fill unobserved entries with the node's observed mean (0 for never-observed nodes)."""
    counts = o.mask.sum(axis=1)
    means = np.divide(o.observed.sum(axis=1), counts, out=np.zeros(o.n_nodes), where=counts > 0)
    filled = np.where(o.mask > 0, o.observed, means[:, None])
    return Observation(filled, np.ones_like(o.mask), o.noise_std)


def _resolve_beta(cfg, spec, n_nodes, n_total):
    b = cfg.solver["beta"]
    return beta_heuristic(spec, n_nodes, n_total) if b == "heuristic" else float(b)


def _trace_path(cfg, tag):
    if not cfg.trace_dir:
        return None
    os.makedirs(cfg.trace_dir, exist_ok=True)
    return os.path.join(cfg.trace_dir, f"trace_{tag}.csv")


def solve_joint(cfg, obs, tag=None):
    spec = cfg.fusion_spec(len(obs))
    beta = _resolve_beta(cfg, spec, obs[0].n_nodes, sum(o.n_samples for o in obs))
    return run(obs, spec, cfg.solver_config(beta, trace_path=_trace_path(cfg, tag) if tag else None)), beta


def solve_decoupled(cfg, obs, tag=None):
    """Mean imputation, then one unfused single-graph solve per snapshot."""
    spec = build_fusion_matrix("temporal", 1)
    laps, sigs, its, ok = [], [], [], True
    for k, o in enumerate(obs):
        path = _trace_path(cfg, f"{tag}_g{k}") if tag else None
        res = run([mean_impute(o)], spec, cfg.solver_config(0.0, trace_path=path))
        laps.append(res.laplacians[0])
        sigs.append(res.signals[0])
        its.append(res.iterations)
        ok &= res.status == Status.CONVERGED
    return laps, sigs, int(max(its)), ok


def _run_synthetic_job(cfg, method, sr, sigma, run_index):
    seed = cfg.base_seed + run_index
    tag = f"{method}_sr{sr:g}_s{sigma:g}_r{run_index}"
    with threadpool_limits(1):
        try:
            Ls, Xs = synthetic_instance(cfg, seed)
            obs = corrupt_all(Xs, sr, sigma, seed)
            if method == "baseline":
                laps, sigs, its, ok = solve_decoupled(cfg, obs, tag)
            else:
                res, _ = solve_joint(cfg, obs, tag)
                laps, sigs, its, ok = res.laplacians, res.signals, res.iterations, res.status == Status.CONVERGED
            rep = evaluate(laps, Ls, sigs, Xs, cfg.edge_rel_threshold)
        except RUN_ERRORS as exc:
            return {"run": run_index, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    out = {"run": run_index, "seed": seed, "iterations": its, "converged": bool(ok)}
    out.update(rep.as_dict())
    return out


# ---------------------------------------------------------------- aggregation

def _summ(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"mean": None, "std": None}
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0}


def _cell(cfg, method, sr, sigma, records, metric_names=METRICS, extra=None):
    records = sorted(records, key=lambda r: r["run"])
    good = [r for r in records if "error" not in r]
    cell_cfg = cfg.resolved()
    cell_cfg.pop("scaling", None)
    cell_cfg.update(sampling_rates=[sr], noise_stds=[sigma])
    out = {
        "method": method,
        "sampling_rate": sr,
        "noise_std": sigma,
        "runs": len(records),
        "failures": len(records) - len(good),
        "not_converged": sum(1 for r in good if not r.get("converged", True)),
        "metrics": {m: _summ([r[m] for r in good]) for m in metric_names},
        "iterations": _summ([r["iterations"] for r in good if "iterations" in r]),
        "errors": [r["error"] for r in records if "error" in r],
        "per_run": records,
        "config": cell_cfg,
    }
    if extra:
        out.update(extra)
    return out


def _parallel(fn, jobs, workers):
    if int(workers) <= 1:
        return [fn(*j) for j in jobs]
    return Parallel(n_jobs=int(workers))(delayed(fn)(*j) for j in jobs)


def _sweep(cfg, method, workers):
    jobs = [(cfg, method, sr, s, r) for sr in cfg.sampling_rates for s in cfg.noise_stds
            for r in range(cfg.monte_carlo_runs)]
    results = _parallel(_run_synthetic_job, jobs, workers)
    cells = []
    for sr in cfg.sampling_rates:
        for s in cfg.noise_stds:
            recs = [res for (_, _, jsr, js, _), res in zip(jobs, results) if jsr == sr and js == s]
            cells.append(_cell(cfg, method, sr, s, recs))
    return cells


def _report(kind, cfg, cells, **extra):
    out = {"kind": kind, "config": cfg.resolved(), "edge_rule": {
        "relative_threshold": cfg.edge_rel_threshold,
        "note": "edge predicted when -L_ij exceeds threshold * max |L_ij| off the diagonal"}}
    out.update(extra)
    out["cells"] = cells
    return out


def run_synthetic(cfg, workers=1):
    """Monte-Carlo sweep over the sampling-rate x noise grid with the joint solver."""
    return _report("synthetic", cfg, _sweep(cfg, "ltvg", workers))


def run_decoupled_baseline(cfg, workers=1, include_joint=True):
    """Mean-impute then learn each graph alone; by default the joint method is run alongside."""
    cells = _sweep(cfg, "baseline", workers)
    if include_joint:
        cells = _sweep(cfg, "ltvg", workers) + cells
    return _report("baseline", cfg, cells)


# ---------------------------------------------------------------- real data

def load_real_dataset(spec):
    """Read, optionally normalise, and split an N x T table into segment matrices."""
    data = read_matrix_csv(spec.path, allow_header=True)
    if data.shape[0] < 2:
        raise DataError(f"{spec.path}: need at least 2 rows (nodes), got {data.shape[0]}")
    if spec.normalize:
        data = data - data.mean(axis=1, keepdims=True)
        scale = data.std(axis=1, keepdims=True)
        data = np.divide(data, scale, out=np.zeros_like(data), where=scale > 0)
    return [data[:, a:b].copy() for a, b in spec.segments(data.shape[1])]


def _holdout(obs, fraction, seed):
    """Hide a random ``fraction`` of observed entries; returns solver input and scoring masks."""
    if fraction == 0:
        return obs, [o.mask.copy() for o in obs]
    rng = _rng(seed, _STREAM_HOLDOUT)
    fit, score = [], []
    for o in obs:
        hide = (rng.random(o.mask.shape) < fraction) & (o.mask > 0)
        m = o.mask * ~hide
        fit.append(Observation(o.observed * m, m, o.noise_std))
        score.append(hide.astype(float))
    return fit, score


def _run_real_job(cfg, segments, sr, sigma, run_index):
    seed = cfg.base_seed + run_index
    with threadpool_limits(1):
        try:
            obs = corrupt_all(segments, sr, sigma, seed)
            fit, score = _holdout(obs, cfg.real.holdout_fraction, seed)
            res, _ = solve_joint(cfg, fit, f"real_sr{sr:g}_s{sigma:g}_r{run_index}")
            est = [x * m for x, m in zip(res.signals, score)]
            ref = [x * m for x, m in zip(segments, score)]
            nmse, nmse_mean, snr, excluded = signal_metrics_per_graph(est, ref)
        except RUN_ERRORS as exc:
            return {"run": run_index, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    return {"run": run_index, "seed": seed, "iterations": res.iterations,
            "converged": res.status == Status.CONVERGED, "nmse": float(nmse.mean()),
            "nmse_col_mean": float(np.nanmean(nmse_mean)), "snr_db": float(snr.mean()),
            "excluded_columns": int(excluded)}


def run_real(spec, cfg, workers=1):
    """Signal-recovery scores on a user dataset, judged on held-out observed entries."""
    spec = spec or cfg.real
    if spec is None:
        raise ConfigError("no real dataset configured")
    cfg = replace(cfg, real=spec)
    segments = load_real_dataset(spec)
    jobs = [(cfg, segments, sr, s, r) for sr in cfg.sampling_rates for s in cfg.noise_stds
            for r in range(cfg.monte_carlo_runs)]
    results = _parallel(_run_real_job, jobs, workers)
    cells = []
    for sr in cfg.sampling_rates:
        for s in cfg.noise_stds:
            recs = [res for (_, _, jsr, js, _), res in zip(jobs, results) if jsr == sr and js == s]
            c = _cell(cfg, "ltvg", sr, s, recs, SIGNAL_METRICS)
            c["config"].update(K=len(segments), n_samples=[int(x.shape[1]) for x in segments],
                               generator={"model": "real", "n_nodes": int(segments[0].shape[0]),
                                          "params": {}, "perturb_rate": None})
            cells.append(c)
    scoring = ("held-out observed entries" if spec.holdout_fraction > 0 else "observed entries")
    return _report("real", cfg, cells, n_nodes=int(segments[0].shape[0]),
                   segment_sizes=[int(s.shape[1]) for s in segments], scored_on=scoring)


# ---------------------------------------------------------------- scaling

def count_increases(values):
    return int(sum(1 for a, b in zip(values, values[1:]) if b > a))


def loglog_slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2 or np.unique(x[ok]).size < 2:
        return "undefined"
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _series(cells, x_values):
    return [{"x": x, "mean": c["metrics"]["rel_err"]["mean"], "std": c["metrics"]["rel_err"]["std"],
             "failures": c["failures"]} for x, c in zip(x_values, cells)]


def run_scaling_study(cfg, n_grid=None, sr_grid=None, workers=1):
    """RelErr against per-graph sample count and against sampling rate.

    The sample-count sweep uses the first configured sampling rate; the
    sampling-rate sweep keeps the configured sample policy.
    """
    sc = cfg.scaling or {}
    n_grid = list(n_grid if n_grid is not None else sc.get("n_grid", [50, 100, 200, 400]))
    sr_grid = list(sr_grid if sr_grid is not None else sc.get("sr_grid", [0.5, 0.65, 0.8, 0.95]))
    if not n_grid or not sr_grid:
        raise ConfigError("scaling grids must be nonempty")
    sr0, s0 = cfg.sampling_rates[0], cfg.noise_stds[0]
    n_cells = []
    for n in n_grid:
        c = _sweep(with_config(cfg, n_samples=int(n), sampling_rates=(sr0,), noise_stds=(s0,)), "ltvg", workers)[0]
        c["n_samples_point"] = int(n)
        n_cells.append(c)
    sr_cells = _sweep(with_config(cfg, sampling_rates=tuple(float(x) for x in sr_grid), noise_stds=(s0,)),
                      "ltvg", workers)
    n_series = _series(n_cells, n_grid)
    sr_series = _series(sr_cells, sr_grid)
    n_means = [p["mean"] for p in n_series]
    sr_means = [p["mean"] for p in sr_series]
    trend = {
        "n_slope": loglog_slope(n_grid, n_means) if None not in n_means else "undefined",
        "n_increases": count_increases(n_means) if None not in n_means else None,
        "sr_slope": loglog_slope(sr_grid, sr_means) if None not in sr_means else "undefined",
        "sr_increases": count_increases(sr_means) if None not in sr_means else None,
    }
    trend["n_non_increasing"] = trend["n_increases"] is not None and trend["n_increases"] <= 1
    trend["sr_non_increasing"] = trend["sr_increases"] is not None and trend["sr_increases"] <= 1
    return _report("scaling", cfg, n_cells + sr_cells, n_series=n_series, sr_series=sr_series, trend=trend)


# ---------------------------------------------------------------- output

def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def report_json(report):
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


CSV_FIELDS = ["method", "model", "n_nodes", "K", "n_samples", "sampling_rate", "noise_std", "fusion",
              "alpha", "beta", "rho", "runs", "failures", "not_converged"]


def report_csv(report):
    """Flat table: one row per cell, metric mean/std columns, resolved config as JSON."""
    names = [m for m in METRICS if any(m in c["metrics"] for c in report["cells"])]
    header = CSV_FIELDS + [f"{m}_{s}" for m in names for s in ("mean", "std")] + ["iterations_mean", "config"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for c in report["cells"]:
        conf = c["config"]
        gen = conf["generator"]
        ns = c.get("n_samples_point", conf["n_samples"])
        row = [c["method"], gen["model"], gen["n_nodes"], conf["K"],
               ns if isinstance(ns, int) else "-".join(map(str, ns)),
               repr(c["sampling_rate"]), repr(c["noise_std"]), conf["fusion"]["kind"],
               repr(float(conf["solver"]["alpha"])), conf["solver"]["beta"] if c["method"] != "baseline" else 0.0,
               repr(float(conf["solver"]["rho"])), c["runs"], c["failures"], c["not_converged"]]
        for m in names:
            s = c["metrics"].get(m, {"mean": None, "std": None})
            row += ["" if s["mean"] is None else repr(s["mean"]), "" if s["std"] is None else repr(s["std"])]
        it = c["iterations"]["mean"]
        row.append("" if it is None else repr(it))
        row.append(json.dumps(_clean(conf), sort_keys=True, separators=(",", ":")))
        w.writerow(row)
    return buf.getvalue()


def write_report(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report_json(report))
    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write(report_csv(report))
    series = [(name, report[name]) for name in ("n_series", "sr_series") if name in report]
    if series:
        with open(os.path.join(out_dir, "series.csv"), "w") as fh:
            fh.write("series,x,mean,std,failures\n")
            for name, pts in series:
                for p in pts:
                    fh.write(f"{name[:-7]},{p['x']!r},{p['mean']!r},{p['std']!r},{p['failures']}\n")
