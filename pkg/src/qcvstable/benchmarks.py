"""Reference estimators of alpha: McCulloch quantile ratio, empirical
characteristic-function regression, maximum likelihood, and the averages of
a QCV estimate with the regression estimate."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import stable
from .errors import (DegenerateSampleError, EstimationError, NonFiniteLikelihoodError,
                     NonMonotoneTableError)
from .qcv import N1, N2, EstimateResult, estimate_alpha, get_table, _as_data
from .stable import DEFAULT_CONFIG, IntegrationConfig
from .tables import MonotoneTable, alpha_grid, cache_dir

__all__ = [
    "NuTable", "RegConfig", "MleConfig", "mcculloch_nu", "build_nu_table", "get_nu_table",
    "mcculloch_estimate", "sample_char_function", "reg_fit", "reg_estimate",
    "log_likelihood", "golden_section_max", "mle_estimate", "ensemble_estimate",
]

# -- McCulloch ---------------------------------------------------------------

MCH_LEVELS = (0.05, 0.25, 0.75, 0.95)


def mcculloch_nu(alpha: float, cfg: IntegrationConfig = DEFAULT_CONFIG) -> float:
    """Population ratio of the 5-95% spread to the interquartile range."""
    q05, q25, q75, q95 = stable.quantile(alpha, np.array(MCH_LEVELS), cfg)
    return float((q95 - q05) / (q75 - q25))


class NuTable(MonotoneTable):
    """Tabulated ``alpha -> nu(alpha)`` for the McCulloch estimator."""

    def __init__(self, alphas, values, step: float, cfg_digest: str = DEFAULT_CONFIG.digest()):
        self.step = step
        meta = {"estimator": "mcculloch", "lo": repr(float(alphas[0])),
                "hi": repr(float(alphas[-1])), "step": repr(step), "cfg": cfg_digest}
        super().__init__(alphas, values, meta)

    @classmethod
    def from_csv(cls, path) -> "NuTable":
        alphas, values, meta = MonotoneTable.read_csv(path)
        if meta.get("estimator") != "mcculloch":
            raise ValueError(f"{path} is not a McCulloch table")
        return cls(alphas, values, float(meta["step"]), meta.get("cfg", ""))


def build_nu_table(alpha_lo: float = 0.5, alpha_hi: float = 2.0, step: float = 0.0025,
                   cfg: IntegrationConfig = DEFAULT_CONFIG) -> NuTable:
    alphas = alpha_grid(alpha_lo, alpha_hi, step)
    values = np.array([mcculloch_nu(float(a), cfg) for a in alphas])
    try:
        return NuTable(alphas, values, step, cfg.digest())
    except NonMonotoneTableError as exc:
        raise NonMonotoneTableError(f"McCulloch table on [{alpha_lo}, {alpha_hi}]: {exc}") from None


@lru_cache(maxsize=4)
def get_nu_table(alpha_lo: float = 0.5, alpha_hi: float = 2.0, step: float = 0.0025,
                 cfg: IntegrationConfig = DEFAULT_CONFIG) -> NuTable:
    key = f"mch|{alpha_lo!r}|{alpha_hi!r}|{step!r}|{cfg.digest()}"
    path = cache_dir() / f"nu-{hashlib.sha256(key.encode()).hexdigest()[:16]}.csv"
    if path.exists():
        try:
            return NuTable.from_csv(path)
        except (ValueError, KeyError, IndexError, NonMonotoneTableError):
            pass
    table = build_nu_table(alpha_lo, alpha_hi, step, cfg)
    try:
        table.to_csv(path)
    except OSError:
        pass
    return table


def mcculloch_estimate(data, nu_table: NuTable | None = None) -> EstimateResult:
    """Invert the sample quantile-spread ratio through the McCulloch table.

    Sample quantiles interpolate linearly between order statistics.
    """
    x = _as_data(data)
    if x.size < 20:
        raise EstimationError("McCulloch estimator needs at least 20 observations")
    table = nu_table if nu_table is not None else get_nu_table()
    q05, q25, q75, q95 = np.quantile(x, MCH_LEVELS)
    iqr = q75 - q25
    if not iqr > 0:
        raise DegenerateSampleError("interquartile range is zero")
    nu = (q95 - q05) / iqr
    inv = table.invert(nu)
    return EstimateResult("mch", inv.alpha, inv.clamped, x.size, statistic=float(nu))


# -- characteristic-function regression -----------------------------------------

def _default_u_grid():
    return tuple(i * math.pi / 25 for i in range(1, 11))


@dataclass(frozen=True)
class RegConfig:
    """Frequencies for the log-log regression and whether to fit an intercept.

    Without an intercept the line passes through the origin, which assumes
    unit scale (standardized or simulated data). An intercept absorbs
    ``alpha * log(scale)``. ``standardize`` first maps the data to zero
    median and a fixed interquartile range, which makes the estimate
    invariant to affine changes of the data.
    """

    u_grid: tuple = field(default_factory=_default_u_grid)
    fit_intercept: bool = False
    alpha_floor: float = 0.1
    standardize: bool = False

    def __post_init__(self):
        u = np.asarray(self.u_grid, dtype=float)
        if u.size < 2 or np.any(u <= 0) or np.unique(u).size != u.size:
            raise ValueError("u_grid needs at least two distinct positive frequencies")


def sample_char_function(data, u):
    """Empirical characteristic function ``mean(exp(i u X))``."""
    x = np.asarray(data, dtype=float).ravel()
    u = np.asarray(u, dtype=float)
    ux = np.multiply.outer(u, x)
    out = np.cos(ux).mean(axis=-1) + 1j * np.sin(ux).mean(axis=-1)
    return out[()] if out.ndim == 0 else out


def reg_fit(u, modulus, cfg: RegConfig = RegConfig()) -> EstimateResult:
    """Least-squares slope of ``log(-log|phi|)`` against ``log u``.

    Points with ``|phi|`` outside (0, 1) are dropped. The slope is clamped
    to ``[cfg.alpha_floor, 2]``.
    """
    u = np.asarray(u, dtype=float)
    m = np.asarray(modulus, dtype=float)
    keep = (m > 0) & (m < 1)
    if keep.sum() < 2:
        raise EstimationError("fewer than two usable frequencies for the regression")
    xs = np.log(u[keep])
    ys = np.log(-np.log(m[keep]))
    if cfg.fit_intercept:
        xc = xs - xs.mean()
        slope = float(np.dot(xc, ys - ys.mean()) / np.dot(xc, xc))
    else:
        slope = float(np.dot(xs, ys) / np.dot(xs, xs))
    if not math.isfinite(slope):
        raise EstimationError("regression slope is not finite")
    clamped = not (cfg.alpha_floor <= slope <= 2.0)
    return EstimateResult("reg", min(max(slope, cfg.alpha_floor), 2.0), clamped,
                          statistic=slope)


def reg_estimate(data, cfg: RegConfig = RegConfig()) -> EstimateResult:
    """Characteristic-function regression estimate of alpha."""
    x = _as_data(data)
    if cfg.standardize:
        x = _standardize(x)
    u = np.asarray(cfg.u_grid, dtype=float)
    phi = sample_char_function(x, u)
    res = reg_fit(u, np.abs(phi), cfg)
    res.n = x.size
    return res


# -- maximum likelihood --------------------------------------------------------

@dataclass(frozen=True)
class MleConfig:
    """Settings for the likelihood maximization.

    The log-density is pre-tabulated on an alpha grid of spacing
    ``node_step`` and interpolated linearly in between; set ``exact=True``
    to evaluate the density directly at every trial alpha instead (slow).
    """

    alpha_bracket: tuple = (0.5, 2.0)
    tolerance: float = 1e-4
    pdf_cfg: IntegrationConfig = DEFAULT_CONFIG
    standardize: bool = False
    node_step: float = 0.0025
    exact: bool = False

    def __post_init__(self):
        lo, hi = self.alpha_bracket
        if not (0 < lo < hi <= 2):
            raise ValueError("alpha_bracket must satisfy 0 < lo < hi <= 2")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


def log_likelihood(data, alpha: float, cfg: IntegrationConfig = DEFAULT_CONFIG) -> float:
    """Sum of ``log f_alpha`` over the data, evaluated directly."""
    x = np.asarray(data, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.sum(stable.logpdf(alpha, x, cfg)))


def golden_section_max(func, lo: float, hi: float, tol: float = 1e-4):
    """Maximize a unimodal function on ``[lo, hi]``; returns ``(x, f(x))``.

    The bracket end points are compared against the interior optimum, so a
    monotone objective returns the better end.
    """
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = func(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    for end in (lo, hi):
        fe = func(end)
        if fe > fx:
            x, fx = end, fe
    return x, fx


class _LogDensityNodes:
    """Log-density of the standard law on an alpha grid.

    Each node stores a cubic spline of ``log f`` in ``u = asinh|x|`` up to
    ``|x| = X_MAX``; beyond that the power-law tail (or the Gaussian) is
    used in closed form.
    """

    U_STEP = 0.005
    X_MAX = 1000.0

    def __init__(self, step: float, cfg: IntegrationConfig):
        self.alphas = alpha_grid(0.5, 2.0, step)
        self.cfg = cfg
        n_u = int(math.ceil(math.asinh(self.X_MAX) / self.U_STEP))
        self.u = np.arange(n_u + 1) * self.U_STEP
        self.u_max = self.u[-1]
        self._coef: dict[int, np.ndarray] = {}
        self._tail: dict[int, tuple] = {}

    def coef(self, k: int) -> np.ndarray:
        c = self._coef.get(k)
        if c is None:
            a = float(self.alphas[k])
            logf = stable.logpdf(a, np.sinh(self.u), self.cfg)
            c = CubicSpline(self.u, logf).c  # shape (4, n_u)
            self._coef[k] = c
            if a < 2.0:
                self._tail[k] = (math.log(a * stable.tail_constants(a).c_alpha), a + 1.0)
        return c


@lru_cache(maxsize=4)
def _nodes(step: float, cfg: IntegrationConfig) -> _LogDensityNodes:
    return _LogDensityNodes(step, cfg)


class _TabulatedLikelihood:
    """Log-likelihood of one sample as a function of alpha, from the node tables."""

    def __init__(self, x: np.ndarray, nodes: _LogDensityNodes):
        self.nodes = nodes
        ax = np.abs(x)
        u = np.arcsinh(ax)
        inner = u < nodes.u_max
        ui = u[inner]
        self.j = np.minimum((ui / nodes.U_STEP).astype(np.intp), nodes.u.size - 2)
        s = ui - nodes.u[self.j]
        self.basis = np.stack([s**3, s**2, s, np.ones_like(s)])
        xo = ax[~inner]
        self.n_out = xo.size
        self.sum_log_out = float(np.log(xo).sum()) if xo.size else 0.0
        self.sum_sq_out = float((xo * xo).sum()) if xo.size else 0.0
        self._memo: dict[int, float] = {}

    def at_node(self, k: int) -> float:
        v = self._memo.get(k)
        if v is None:
            c = self.nodes.coef(k)
            v = float(np.einsum("ij,ij->", c[:, self.j], self.basis))
            if self.n_out:
                a = self.nodes.alphas[k]
                if a == 2.0:
                    v += -self.sum_sq_out / 4.0 - self.n_out * math.log(2 * math.sqrt(math.pi))
                else:
                    logc, expo = self.nodes._tail[k]
                    v += self.n_out * logc - expo * self.sum_log_out
            self._memo[k] = v
        return v

    def __call__(self, alpha: float) -> float:
        al = self.nodes.alphas
        k = int(np.searchsorted(al, alpha, side="right")) - 1
        k = min(max(k, 0), al.size - 2)
        w = (alpha - al[k]) / (al[k + 1] - al[k])
        if w <= 0.0:
            return self.at_node(k)
        if w >= 1.0:
            return self.at_node(k + 1)
        return (1 - w) * self.at_node(k) + w * self.at_node(k + 1)


_IQR_REF = None


def _standardize(x: np.ndarray) -> np.ndarray:
    global _IQR_REF
    if _IQR_REF is None:
        q = stable.quantile(1.5, np.array([0.25, 0.75]))
        _IQR_REF = float(q[1] - q[0])
    q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75])
    if not q75 > q25:
        raise DegenerateSampleError("interquartile range is zero")
    return (x - med) / ((q75 - q25) / _IQR_REF)


def mle_estimate(data, cfg: MleConfig = MleConfig()) -> EstimateResult:
    """Maximum-likelihood alpha for the standard (unit scale, zero location) law."""
    x = _as_data(data)
    if cfg.standardize:
        x = _standardize(x)
    lo, hi = cfg.alpha_bracket
    if cfg.exact:
        def func(a):
            return log_likelihood(x, a, cfg.pdf_cfg)
    else:
        if lo < 0.5:
            raise ValueError("tabulated likelihood covers alpha >= 0.5 only; use exact=True")
        func = _TabulatedLikelihood(x, _nodes(cfg.node_step, cfg.pdf_cfg))
    a_hat, best = golden_section_max(func, lo, hi, cfg.tolerance)
    if not math.isfinite(best):
        raise NonFiniteLikelihoodError("log-likelihood is not finite on the bracket")
    clamped = a_hat - lo < cfg.tolerance or hi - a_hat < cfg.tolerance
    return EstimateResult("mle", float(a_hat), bool(clamped), x.size, statistic=best)


# -- averages ------------------------------------------------------------------

def ensemble_estimate(data, which: str = "M1", tables=None, reg_cfg: RegConfig = RegConfig()) -> EstimateResult:
    """Mean of a QCV ratio estimate (N1 for M1, N2 for M2) and the regression estimate."""
    which = which.upper()
    if which not in ("M1", "M2"):
        raise ValueError("which must be 'M1' or 'M2'")
    spec = N1 if which == "M1" else N2
    table = None
    if tables is not None:
        table = tables.get(spec.name) if isinstance(tables, dict) else tables
    if table is None:
        table = get_table(spec)
    q = estimate_alpha(data, spec, table)
    r = reg_estimate(data, reg_cfg)
    return EstimateResult(which.lower(), 0.5 * (q.alpha_hat + r.alpha_hat), q.clamped or r.clamped,
                          q.n, extra={"qcv": q.alpha_hat, "reg": r.alpha_hat})
