"""Correlation and hypothesis-testing kernel.

Pearson r, the lagged correlation sweep between an outage series and an
access series, Student-t and F tail probabilities built on a hand-rolled
regularized incomplete beta, one-way ANOVA, and seeded permutation tests
used as independent oracles for the analytic p-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "UndefinedCorrelationError",
    "LagRow",
    "LagCorrelationTable",
    "AnovaResult",
    "regularized_incomplete_beta",
    "student_t_sf_two_tailed",
    "f_sf",
    "pearson_r",
    "pearson_p_value",
    "lagged_correlation",
    "one_way_anova",
    "permutation_pvalue_pearson",
    "permutation_pvalue_anova",
]

_EPS = 1e-300
_CF_TOL = 1e-15
_CF_MAX_ITER = 10_000


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation is undefined (constant input or too few points)."""


def _betacf(x: float, a: float, b: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _EPS:
        d = _EPS
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _EPS:
            d = _EPS
        c = 1.0 + aa / c
        if abs(c) < _EPS:
            c = _EPS
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _EPS:
            d = _EPS
        c = 1.0 + aa / c
        if abs(c) < _EPS:
            c = _EPS
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Evaluated with a continued fraction on whichever side of the mean
    ``a / (a + b)`` converges fastest, using the reflection
    ``I_x(a, b) = 1 - I_{1-x}(b, a)`` for the other side.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _betacf(x, a, b) / a)
    return max(0.0, 1.0 - front * _betacf(1.0 - x, b, a) / b)


def student_t_sf_two_tailed(t: float, df: float) -> float:
    """P(|T| >= |t|) for a Student-t variable with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail P(F >= f) of the F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson product-moment correlation of two equal-length sequences."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError(f"x and y must be 1-d and equal length, got {xa.shape} and {ya.shape}")
    if xa.size < 3:
        raise UndefinedCorrelationError(f"need at least 3 points, got {xa.size}")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_p_value(r: float, n: int) -> float:
    """Two-tailed p-value of a Pearson r from ``n`` pairs via the t statistic."""
    if n < 3:
        raise UndefinedCorrelationError(f"p-value needs n >= 3, got {n}")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [-1, 1], got {r}")
    if abs(r) == 1.0:
        return 0.0
    if r == 0.0:
        return 1.0
    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return student_t_sf_two_tailed(t, df)


@dataclass(frozen=True)
class LagRow:
    lag: int
    r: float
    p_value: float
    n: int
    significant: bool


@dataclass
class LagCorrelationTable:
    """One row per lag; ``r(lag) = corr(x[d], y[d + lag])`` (x leads)."""

    outage_metric: str
    access_metric: str
    alpha: float
    rows: list[LagRow] = field(default_factory=list)

    @property
    def tau_star(self) -> int:
        valid = [row for row in self.rows if not math.isnan(row.r)]
        if not valid:
            raise UndefinedCorrelationError("no defined correlation in table")
        # ties resolved toward the smaller lag
        return max(valid, key=lambda row: (abs(row.r), -row.lag)).lag

    def r_at(self, lag: int) -> float:
        return self.rows[lag].r

    def as_records(self) -> list[dict]:
        return [
            {
                "outage_metric": self.outage_metric,
                "access_metric": self.access_metric,
                "lag": row.lag,
                "r": row.r,
                "p": row.p_value,
                "n": row.n,
                "significant": row.significant,
            }
            for row in self.rows
        ]


def lagged_correlation(
    x: Sequence[float],
    y: Sequence[float],
    max_lag: int = 7,
    alpha: float = 0.01,
    outage_metric: str = "x",
    access_metric: str = "y",
    on_degenerate: str = "raise",
) -> LagCorrelationTable:
    """Sweep ``corr(x[d], y[d + lag])`` over ``lag = 0..max_lag``.

    Only pairs inside both series are used (no padding or wraparound), so
    the sample size at lag ``tau`` is ``len(x) - tau``.

    ``on_degenerate="nan"`` records undefined correlations (constant
    windows) as NaN rows instead of raising.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("x and y must be 1-d and equal length")
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if on_degenerate not in ("raise", "nan"):
        raise ValueError("on_degenerate must be 'raise' or 'nan'")
    table = LagCorrelationTable(outage_metric, access_metric, alpha)
    length = xa.size
    for lag in range(max_lag + 1):
        n = length - lag
        if n < 3:
            raise UndefinedCorrelationError(
                f"window too short at lag {lag}: {n} overlapping days (need >= 3)"
            )
        try:
            r = pearson_r(xa[:n], ya[lag:])
            p = pearson_p_value(r, n)
        except UndefinedCorrelationError:
            if on_degenerate == "raise":
                raise
            r, p = math.nan, math.nan
        table.rows.append(LagRow(lag, r, p, n, bool(p < alpha)))
    return table


@dataclass(frozen=True)
class AnovaResult:
    labels: tuple[str, ...]
    sizes: tuple[int, ...]
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


def _f_statistic(values: np.ndarray, codes: np.ndarray, k: int) -> np.ndarray:
    # vectorized over leading axis of `codes` (one permutation per row)
    codes = np.atleast_2d(codes)
    n = values.size
    grand = values.mean()
    sst = float(((values - grand) ** 2).sum())
    onehot_counts = np.stack([(codes == g).sum(axis=1) for g in range(k)], axis=1)
    sums = np.stack([np.where(codes == g, values, 0.0).sum(axis=1) for g in range(k)], axis=1)
    ssb = (sums**2 / onehot_counts).sum(axis=1) - n * grand**2
    ssb = np.maximum(ssb, 0.0)
    ssw = np.maximum(sst - ssb, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (ssb / (k - 1)) / (ssw / (n - k))


def one_way_anova(groups: Sequence[Sequence[float]], labels: Sequence[str] | None = None) -> AnovaResult:
    """One-way ANOVA across two or more groups."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("ANOVA needs at least 2 groups")
    if labels is None:
        labels = [str(i) for i in range(len(arrays))]
    for label, arr in zip(labels, arrays):
        if arr.size < 2:
            raise ValueError(f"group {label!r} has {arr.size} member(s); need >= 2")
    values = np.concatenate(arrays)
    n = values.size
    k = len(arrays)
    grand = values.mean()
    ssb = sum(arr.size * (arr.mean() - grand) ** 2 for arr in arrays)
    ssw = sum(float(((arr - arr.mean()) ** 2).sum()) for arr in arrays)
    df_b, df_w = k - 1, n - k
    if ssw == 0.0:
        if ssb == 0.0:
            raise ValueError("pooled variance is zero; F undefined")
        f_stat, p = math.inf, 0.0
    else:
        f_stat = (ssb / df_b) / (ssw / df_w)
        p = f_sf(f_stat, df_b, df_w)
    return AnovaResult(tuple(labels), tuple(a.size for a in arrays), float(f_stat), df_b, df_w, p)


def permutation_pvalue_pearson(
    x: Sequence[float], y: Sequence[float], n_perm: int = 10_000, seed: int = 0, chunk: int = 10_000
) -> float:
    """Two-tailed permutation p-value for Pearson r by shuffling ``y``."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    r_obs = abs(pearson_r(xa, ya))
    rng = np.random.default_rng(seed)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    norm = math.sqrt(float(dx @ dx) * float(dy @ dy))
    hits = 0
    done = 0
    while done < n_perm:
        m = min(chunk, n_perm - done)
        perms = rng.permuted(np.broadcast_to(dy, (m, dy.size)), axis=1)
        r_perm = np.abs(perms @ dx) / norm
        hits += int((r_perm >= r_obs - 1e-12).sum())
        done += m
    return (hits + 1) / (n_perm + 1)


def permutation_pvalue_anova(
    groups: Sequence[Sequence[float]], n_perm: int = 10_000, seed: int = 0, chunk: int = 5_000
) -> float:
    """Permutation p-value for the one-way ANOVA F by shuffling group labels."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    values = np.concatenate(arrays)
    codes = np.concatenate([np.full(a.size, i) for i, a in enumerate(arrays)])
    k = len(arrays)
    f_obs = float(_f_statistic(values, codes, k)[0])
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_perm:
        m = min(chunk, n_perm - done)
        perms = rng.permuted(np.broadcast_to(codes, (m, codes.size)), axis=1)
        f_perm = _f_statistic(values, perms, k)
        hits += int((f_perm >= f_obs * (1 - 1e-12)).sum())
        done += m
    return (hits + 1) / (n_perm + 1)
