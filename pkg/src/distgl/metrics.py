"""Accuracy of a learned weight matrix against the ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import UpperWeights


class UndefinedMetric(ValueError):
    """Raised when a metric is not defined for its input (e.g. a zero matrix)."""


def _upper(a) -> np.ndarray:
    return a.values if isinstance(a, UpperWeights) else np.asarray(a, dtype=np.float64)


def frobenius_error(a, b) -> float:
    """||A - B||_F of the full symmetric matrices: each off-diagonal pair counts twice."""
    d = _upper(a) - _upper(b)
    return math.sqrt(2.0 * float(np.dot(d, d)))


def normalized_frobenius_error(a, b) -> float:
    ua, ub = _upper(a), _upper(b)
    sa, sb = float(np.max(np.abs(ua), initial=0.0)), float(np.max(np.abs(ub), initial=0.0))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedMetric("normalized Frobenius error is undefined for a zero matrix")
    # rescale first so tiny or huge weights do not under/overflow the norms
    ua, ub = ua / sa, ub / sb
    na = math.sqrt(2.0 * float(np.dot(ua, ua)))
    nb = math.sqrt(2.0 * float(np.dot(ub, ub)))
    d = ua / na - ub / nb
    return math.sqrt(2.0 * float(np.dot(d, d)))


def wasserstein_1d(u, v, p: int = 2) -> float:
    """Order-p Wasserstein distance between two empirical distributions on the line.

    Integrates |F_u^{-1}(t) - F_v^{-1}(t)|^p over t in (0, 1] by merging the
    two quantile step functions. For equal sample counts this is the mean of
    |sorted(u) - sorted(v)|^p.
    """
    u = np.sort(np.asarray(u, dtype=np.float64).ravel())
    v = np.sort(np.asarray(v, dtype=np.float64).ravel())
    if u.size == 0 or v.size == 0:
        raise UndefinedMetric("Wasserstein distance needs nonempty samples")
    if u.size == v.size:
        return float(np.mean(np.abs(u - v) ** p) ** (1.0 / p))
    cuts = np.union1d(np.arange(1, u.size + 1) / u.size, np.arange(1, v.size + 1) / v.size)
    cuts[-1] = 1.0
    widths = np.diff(np.concatenate([[0.0], cuts]))
    # quantile index for the interval ending at each cut
    iu = np.minimum(np.ceil(cuts * u.size - 1e-9).astype(np.int64) - 1, u.size - 1)
    iv = np.minimum(np.ceil(cuts * v.size - 1e-9).astype(np.int64) - 1, v.size - 1)
    return float(np.sum(widths * np.abs(u[iu] - v[iv]) ** p) ** (1.0 / p))


def wasserstein_distance(a, b, support=None) -> float:
    """W2 between the multisets of weights on ``support`` (flat upper indices).

    Structural zeros inside the support are included. Without a support all
    upper-triangular entries are used.
    """
    ua, ub = _upper(a), _upper(b)
    if support is not None:
        ua, ub = ua[support], ub[support]
    return wasserstein_1d(ua, ub)


def wasserstein_nonzero(a, b, support=None) -> float:
    """W2 between the strictly positive weights only (surviving edges)."""
    ua, ub = _upper(a), _upper(b)
    if support is not None:
        ua, ub = ua[support], ub[support]
    return wasserstein_1d(ua[ua > 0], ub[ub > 0])


@dataclass
class MetricsReport:
    frobenius: float
    normalized_frobenius: float
    wasserstein: float
    wasserstein_nonzero: float
    total_messages: int
    phase_breakdown: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "frobenius": self.frobenius,
            "normalized_frobenius": self.normalized_frobenius,
            "wasserstein": self.wasserstein,
            "wasserstein_nonzero": self.wasserstein_nonzero,
            "total_messages": self.total_messages,
        }
        row.update(self.phase_breakdown)
        return row


def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except UndefinedMetric:
        return float("nan")


def build_report(learned: UpperWeights, truth: UpperWeights, ledger, support=None,
                 config: dict | None = None) -> MetricsReport:
    """Undefined metrics (zero matrices, empty supports) are reported as NaN."""
    return MetricsReport(
        frobenius=frobenius_error(learned, truth),
        normalized_frobenius=_safe(normalized_frobenius_error, learned, truth),
        wasserstein=_safe(wasserstein_distance, learned, truth, support),
        wasserstein_nonzero=_safe(wasserstein_nonzero, learned, truth, support),
        total_messages=ledger.total,
        phase_breakdown=ledger.snapshot(),
        config=dict(config or {}),
    )
