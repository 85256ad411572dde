"""Edge-recovery and signal-recovery scores for a Laplacian sequence."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidDimensionError

DEFAULT_EDGE_THRESHOLD = 1e-4
SNR_CAP_DB = 300.0


@dataclass
class MetricsReport:
    """Averaged scores plus per-graph breakdowns.

    ``nmse`` sums column errors within a graph; ``nmse_col_mean`` averages
    them instead so graphs with different sample counts are comparable.
    """

    fscore: float = float("nan")
    rel_err: float = float("nan")
    nmse: float = float("nan")
    nmse_col_mean: float = float("nan")
    snr_db: float = float("nan")
    per_graph: dict = field(default_factory=dict)
    excluded_columns: int = 0

    def as_dict(self):
        return {
            "fscore": self.fscore,
            "rel_err": self.rel_err,
            "nmse": self.nmse,
            "nmse_col_mean": self.nmse_col_mean,
            "snr_db": self.snr_db,
        }


def _pair(est, truth):
    est = [np.asarray(e, dtype=float) for e in est]
    truth = [np.asarray(t, dtype=float) for t in truth]
    if len(est) != len(truth):
        raise InvalidDimensionError(f"{len(est)} estimates vs {len(truth)} references")
    for k, (e, t) in enumerate(zip(est, truth)):
        if e.shape != t.shape:
            raise InvalidDimensionError(f"graph {k}: estimate {e.shape} vs reference {t.shape}")
    return est, truth


def predicted_edges(L, edge_rel_threshold=DEFAULT_EDGE_THRESHOLD):
    """Upper-triangle edge indicator: ``-L_ij`` above a fraction of the largest ``|L_ij|``."""
    L = np.asarray(L, dtype=float)
    iu = np.triu_indices(L.shape[0], 1)
    off = L[iu]
    scale = np.abs(off).max() if off.size else 0.0
    if scale == 0:
        return np.zeros(off.shape, dtype=bool)
    return -off > edge_rel_threshold * scale


def fscore_per_graph(est, truth, edge_rel_threshold=DEFAULT_EDGE_THRESHOLD):
    est, truth = _pair(est, truth)
    out = []
    for e, t in zip(est, truth):
        pred = predicted_edges(e, edge_rel_threshold)
        iu = np.triu_indices(t.shape[0], 1)
        true = t[iu] < 0
        tp = int(np.sum(pred & true))
        fp = int(np.sum(pred & ~true))
        fn = int(np.sum(~pred & true))
        denom = 2 * tp + fp + fn
        out.append(1.0 if denom == 0 else 2.0 * tp / denom)
    return np.array(out)


def fscore(est, truth, edge_rel_threshold=DEFAULT_EDGE_THRESHOLD):
    """Mean over graphs of ``2TP / (2TP + FP + FN)`` on the upper-triangle edge set."""
    return float(fscore_per_graph(est, truth, edge_rel_threshold).mean())


def rel_err_per_graph(est, truth):
    est, truth = _pair(est, truth)
    out = []
    for k, (e, t) in enumerate(zip(est, truth)):
        denom = np.linalg.norm(t)
        if denom == 0:
            raise DomainError(f"reference Laplacian {k} has zero norm")
        out.append(np.linalg.norm(t - e) / denom)
    return np.array(out)


def rel_err(est, truth):
    """Mean over graphs of ``||L*_k - L_k||_F / ||L*_k||_F``."""
    return float(rel_err_per_graph(est, truth).mean())


def signal_metrics_per_graph(est_signals, true_signals):
    """Per-graph columnwise NMSE sum, NMSE column mean, SNR (dB) and excluded-column count."""
    est, truth = _pair(est_signals, true_signals)
    nmse, nmse_mean, snr, excluded = [], [], [], 0
    for e, t in zip(est, truth):
        col_norm = (t * t).sum(axis=0)
        keep = col_norm > 0
        excluded += int((~keep).sum())
        err = ((t - e) ** 2).sum(axis=0)
        ratios = err[keep] / col_norm[keep]
        nmse.append(float(ratios.sum()))
        nmse_mean.append(float(ratios.mean()) if ratios.size else float("nan"))
        num = np.linalg.norm(t)
        den = np.linalg.norm(t - e)
        if den == 0:
            snr.append(SNR_CAP_DB)
        elif num == 0:
            snr.append(-SNR_CAP_DB)
        else:
            snr.append(min(SNR_CAP_DB, 20.0 * np.log10(num / den)))
    return np.array(nmse), np.array(nmse_mean), np.array(snr), excluded


def signal_metrics(est_signals, true_signals):
    """Return ``(nmse, snr_db)`` averaged over graphs.

    Zero-norm reference columns are skipped; use
    :func:`signal_metrics_per_graph` to see how many were.
    """
    nmse, _, snr, _ = signal_metrics_per_graph(est_signals, true_signals)
    return float(nmse.mean()), float(snr.mean())


def evaluate(est_laplacians=None, true_laplacians=None, est_signals=None, true_signals=None,
             edge_rel_threshold=DEFAULT_EDGE_THRESHOLD):
    """Assemble a :class:`MetricsReport`; either half may be omitted."""
    rep = MetricsReport()
    if est_laplacians is not None and true_laplacians is not None:
        f = fscore_per_graph(est_laplacians, true_laplacians, edge_rel_threshold)
        r = rel_err_per_graph(est_laplacians, true_laplacians)
        rep.fscore, rep.rel_err = float(f.mean()), float(r.mean())
        rep.per_graph["fscore"] = f.tolist()
        rep.per_graph["rel_err"] = r.tolist()
    if est_signals is not None and true_signals is not None:
        nmse, nmse_mean, snr, excluded = signal_metrics_per_graph(est_signals, true_signals)
        rep.nmse = float(nmse.mean())
        rep.nmse_col_mean = float(np.nanmean(nmse_mean))
        rep.snr_db = float(snr.mean())
        rep.excluded_columns = excluded
        rep.per_graph["nmse"] = nmse.tolist()
        rep.per_graph["nmse_col_mean"] = nmse_mean.tolist()
        rep.per_graph["snr_db"] = snr.tolist()
    return rep
