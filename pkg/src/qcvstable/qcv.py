"""Quantile conditional variances and the ratio estimators of alpha.

The quantile conditional variance (QCV) of a law with quantile function Q
on the window ``(a, b)`` is the variance of X given Q(a) < X < Q(b):

    s2(a, b) = mean of Q**2 over [a, b] - (mean of Q over [a, b])**2.

For symmetric stable laws the ratio

    N(alpha) = (s2(a, b) + s2(1-b, 1-a)) / s2(d, 1-d)

is monotone in alpha for suitable ``(a, b, d)``, so a sample version of it
can be inverted through a precomputed table to estimate alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from . import stable
from .errors import (DataError, NonMonotoneTableError, WindowTooSmallError,
                     ZeroDenominatorError)
from .stable import DEFAULT_CONFIG, IntegrationConfig
from .tables import MonotoneTable, alpha_grid, cache_dir

__all__ = [
    "QuantileSplit", "RatioSpec", "N1", "N2", "BUILTIN_SPECS", "QcvValue",
    "EstimateResult", "RatioTable", "sample_qcv", "theoretical_qcv",
    "gaussian_qcv_closed", "cauchy_qcv_closed", "ratio_value", "build_table",
    "sample_ratio", "invert", "estimate_alpha", "get_table",
]

_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class QuantileSplit:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a < self.b < 1.0):
            raise ValueError(f"need 0 < a < b < 1, got ({self.a}, {self.b})")

    def mirrored(self) -> "QuantileSplit":
        return QuantileSplit(1.0 - self.b, 1.0 - self.a)


@dataclass(frozen=True)
class RatioSpec:
    """Window triple ``(a, b, d)`` of a ratio statistic."""

    a: float
    b: float
    d: float
    name: str = "custom"

    def __post_init__(self):
        QuantileSplit(self.a, self.b)
        if not (0.0 < self.d < 0.5):
            raise ValueError(f"need 0 < d < 1/2, got {self.d}")

    @property
    def tail(self) -> QuantileSplit:
        return QuantileSplit(self.a, self.b)

    @property
    def central(self) -> QuantileSplit:
        return QuantileSplit(self.d, 1.0 - self.d)

    def key(self) -> str:
        return f"a={self.a!r};b={self.b!r};d={self.d!r}"


N1 = RatioSpec(0.015, 0.25, 0.25, "N1")
N2 = RatioSpec(0.01, 0.17, 0.1, "N2")
BUILTIN_SPECS = {"n1": N1, "n2": N2}

# default table ranges; wide enough that heavy-tailed data rarely clamps
DEFAULT_RANGES = {"N1": (0.6, 2.0), "N2": (0.6, 2.0)}
TABLE_STEP = 0.0025


@dataclass(frozen=True)
class QcvValue:
    value: float
    window: QuantileSplit


@dataclass
class EstimateResult:
    """An estimate of alpha.

    ``statistic`` is the sample statistic that was inverted (if any);
    ``ci`` holds bootstrap interval fields when requested.
    """

    method: str
    alpha_hat: float
    clamped: bool = False
    n: int = 0
    statistic: float | None = None
    seed: int | None = None
    ci: dict | None = None
    failures: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"method": self.method, "alpha_hat": self.alpha_hat,
               "clamped": self.clamped, "n": self.n, "seed": self.seed}
        if self.ci is not None:
            out["ci"] = dict(self.ci)
        if self.failures is not None:
            out["failures"] = self.failures
        return out


# -- sample side ------------------------------------------------------------

def _window_bounds(n: int, a: float, b: float) -> tuple[int, int]:
    lo = math.floor(n * a + _FLOOR_EPS)
    hi = math.floor(n * b + _FLOOR_EPS)
    if hi - lo < 2:
        raise WindowTooSmallError(
            f"window ({a}, {b}) holds {hi - lo} order statistics for n={n}; need at least 2")
    return lo, hi


def _window_var(sorted_x: np.ndarray, a: float, b: float) -> float:
    lo, hi = _window_bounds(sorted_x.size, a, b)
    # measuring from the window's first point keeps exact shifts exact
    w = sorted_x[lo:hi] - sorted_x[lo]
    m = w.mean()
    return float(np.mean((w - m) ** 2))


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise DataError("need at least two observations")
    if not np.all(np.isfinite(x)):
        raise DataError("data contain non-finite values")
    return x


def sample_qcv(data, a: float, b: float) -> QcvValue:
    """Variance of the order statistics ``floor(na)+1 .. floor(nb)`` (1-based).

    The divisor is the window size.
    """
    split = QuantileSplit(a, b)
    x = np.sort(_as_data(data))
    return QcvValue(_window_var(x, a, b), split)


def sample_ratio(data, spec: RatioSpec, presorted: bool = False) -> float:
    """Sample ratio ``(s2(a,b) + s2(1-b,1-a)) / s2(d,1-d)`` on one sort of the data."""
    x = np.asarray(data, dtype=float) if presorted else np.sort(_as_data(data))
    tail = _window_var(x, spec.a, spec.b) + _window_var(x, 1.0 - spec.b, 1.0 - spec.a)
    central = _window_var(x, spec.d, 1.0 - spec.d)
    if not central > 0.0:
        raise ZeroDenominatorError("central window has zero dispersion")
    return tail / central


# -- population side --------------------------------------------------------

def theoretical_qcv(alpha: float, split: QuantileSplit,
                    cfg: IntegrationConfig = DEFAULT_CONFIG) -> QcvValue:
    """QCV of the standard symmetric stable law on a quantile window.

    Trapezoidal rule in p with spacing at most ``cfg.step`` and the first
    Euler-Maclaurin end correction, using ``dQ/dp = 1/f(Q)``.
    """
    a, b = split.a, split.b
    m = max(2, int(math.ceil((b - a) / cfg.step - 1e-9)))
    p = np.linspace(a, b, m + 1)
    h = (b - a) / m
    q = np.asarray(stable.quantile(alpha, p, cfg))
    ends = np.array([q[0], q[-1]])
    dens = np.asarray(stable.pdf(alpha, ends, cfg))
    dq = 1.0 / dens
    i1 = h * (q.sum() - 0.5 * (q[0] + q[-1])) - h * h / 12.0 * (dq[1] - dq[0])
    q2 = q * q
    d2 = 2.0 * ends * dq
    i2 = h * (q2.sum() - 0.5 * (q2[0] + q2[-1])) - h * h / 12.0 * (d2[1] - d2[0])
    mean = i1 / (b - a)
    var = i2 / (b - a) - mean * mean
    return QcvValue(max(float(var), 0.0), split)


def gaussian_qcv_closed(split: QuantileSplit) -> QcvValue:
    """QCV of N(0, 2), the alpha = 2 member, from truncated-normal moments."""
    a, b = split.a, split.b
    za, zb = ndtri(a), ndtri(b)
    pa = math.exp(-za * za / 2) / math.sqrt(2 * math.pi)
    pb = math.exp(-zb * zb / 2) / math.sqrt(2 * math.pi)
    w = b - a
    var = 1.0 + (za * pa - zb * pb) / w - ((pa - pb) / w) ** 2
    return QcvValue(2.0 * var, split)


def cauchy_qcv_closed(split: QuantileSplit) -> QcvValue:
    """QCV of the standard Cauchy law.

    With ``D = arctan Q(b) - arctan Q(a)`` the conditional moments are
    ``E X**2 = (Q(b) - Q(a))/D - 1`` and
    ``E X = log((1 + Q(b)**2)/(1 + Q(a)**2)) / (2 D)``.
    """
    a, b = split.a, split.b
    qa, qb = math.tan(math.pi * (a - 0.5)), math.tan(math.pi * (b - 0.5))
    D = math.atan(qb) - math.atan(qa)
    m2 = (qb - qa) / D - 1.0
    m1 = math.log((1 + qb * qb) / (1 + qa * qa)) / (2 * D)
    return QcvValue(m2 - m1 * m1, split)


def ratio_value(alpha: float, spec: RatioSpec, cfg: IntegrationConfig = DEFAULT_CONFIG) -> float:
    """Population ratio ``2 s2(a, b) / s2(d, 1-d)`` (the two tails are equal by symmetry)."""
    tail = theoretical_qcv(alpha, spec.tail, cfg).value
    central = theoretical_qcv(alpha, spec.central, cfg).value
    if not central > 0.0:
        raise ZeroDenominatorError("central QCV vanished")
    return 2.0 * tail / central


# -- tables -------------------------------------------------------------------

class RatioTable(MonotoneTable):
    """Tabulated ``alpha -> N(alpha)`` for one ratio spec."""

    def __init__(self, spec: RatioSpec, alphas, values, step: float,
                 cfg_digest: str = DEFAULT_CONFIG.digest()):
        self.spec = spec
        self.step = step
        self.cfg_digest = cfg_digest
        meta = {"spec": spec.name, "a": repr(spec.a), "b": repr(spec.b), "d": repr(spec.d),
                "lo": repr(float(alphas[0])), "hi": repr(float(alphas[-1])),
                "step": repr(step), "cfg": cfg_digest}
        super().__init__(alphas, values, meta)

    @classmethod
    def from_csv(cls, path) -> "RatioTable":
        alphas, values, meta = MonotoneTable.read_csv(path)
        spec = RatioSpec(float(meta["a"]), float(meta["b"]), float(meta["d"]), meta.get("spec", "custom"))
        return cls(spec, alphas, values, float(meta["step"]), meta.get("cfg", ""))


def build_table(spec: RatioSpec, alpha_lo: float | None = None, alpha_hi: float | None = None,
                step: float = TABLE_STEP, cfg: IntegrationConfig = DEFAULT_CONFIG) -> RatioTable:
    """Tabulate N over an alpha grid; raises NonMonotoneTableError if it is not strictly monotone."""
    lo_def, hi_def = DEFAULT_RANGES.get(spec.name, (1.0, 2.0))
    lo = lo_def if alpha_lo is None else alpha_lo
    hi = hi_def if alpha_hi is None else alpha_hi
    alphas = alpha_grid(lo, hi, step)
    values = np.array([ratio_value(float(a), spec, cfg) for a in alphas])
    try:
        return RatioTable(spec, alphas, values, step, cfg.digest())
    except NonMonotoneTableError as exc:
        raise NonMonotoneTableError(f"{spec.name} {spec.key()} on [{lo}, {hi}]: {exc}") from None


def _cache_path(spec: RatioSpec, lo: float, hi: float, step: float, cfg: IntegrationConfig):
    import hashlib
    key = f"{spec.key()}|{lo!r}|{hi!r}|{step!r}|{cfg.digest()}"
    tag = hashlib.sha256(key.encode()).hexdigest()[:16]
    return cache_dir() / f"ratio-{spec.name}-{tag}.csv"


@lru_cache(maxsize=16)
def get_table(spec: RatioSpec, alpha_lo: float | None = None, alpha_hi: float | None = None,
              step: float = TABLE_STEP, cfg: IntegrationConfig = DEFAULT_CONFIG) -> RatioTable:
    """Ratio table from the on-disk cache, building and storing it on a miss."""
    lo_def, hi_def = DEFAULT_RANGES.get(spec.name, (1.0, 2.0))
    lo = lo_def if alpha_lo is None else alpha_lo
    hi = hi_def if alpha_hi is None else alpha_hi
    path = _cache_path(spec, lo, hi, step, cfg)
    if path.exists():
        try:
            return RatioTable.from_csv(path)
        except (ValueError, KeyError, IndexError, NonMonotoneTableError):
            pass
    table = build_table(spec, lo, hi, step, cfg)
    try:
        table.to_csv(path)
    except OSError:
        pass
    return table


def invert(table: MonotoneTable, n_hat: float, method: str = "qcv") -> EstimateResult:
    """Plug-in estimate: the alpha whose tabulated statistic equals ``n_hat``."""
    inv = table.invert(n_hat)
    return EstimateResult(method=method, alpha_hat=inv.alpha, clamped=inv.clamped,
                          statistic=float(n_hat))


def estimate_alpha(data, spec: RatioSpec = N1, table: RatioTable | None = None) -> EstimateResult:
    """Estimate alpha by inverting the sample ratio statistic."""
    x = np.sort(_as_data(data))
    table = table if table is not None else get_table(spec)
    n_hat = sample_ratio(x, spec, presorted=True)
    res = invert(table, n_hat, method=spec.name.lower())
    res.n = x.size
    return res
