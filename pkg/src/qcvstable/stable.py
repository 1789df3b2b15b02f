"""Symmetric alpha-stable distribution functions.

The density of the standardized symmetric law S(alpha, 0, 1, 0) is the
cosine transform

    f(x) = (1/pi) * int_0^inf cos(x t) exp(-t**alpha) dt,

which is evaluated here with the trapezoidal rule in ``t``. The rule is
applied on a whole uniform ``x`` grid at once (the trapezoid sum over a
uniform ``t`` grid is a discrete cosine transform), the cumulative
distribution function is obtained by integrating that density from 0, and
quantiles are found by inverting the tabulated CDF. Far tails fall back to
the power-law asymptotes.

Closed forms are used for alpha = 1 (Cauchy) and alpha = 2 (Gaussian with
variance 2).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gamma, ndtr, ndtri, zeta

from .errors import BracketError, QuadratureError

__all__ = [
    "StableParams",
    "IntegrationConfig",
    "TailConstants",
    "DEFAULT_CONFIG",
    "char_function",
    "pdf",
    "logpdf",
    "cdf",
    "sf",
    "quantile",
    "tail_constants",
    "tail_quantile_approx",
    "density_trapezoid",
    "sample",
]

PARAMETRIZATION = "0-parametrization"


@dataclass(frozen=True)
class StableParams:
    """Parameters (alpha, beta, c, mu) of S(alpha, beta, c, mu) in the
    0-parametrization."""

    alpha: float
    beta: float = 0.0
    scale: float = 1.0
    location: float = 0.0
    parametrization: str = field(default=PARAMETRIZATION, init=False)

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not math.isfinite(self.location):
            raise ValueError("location must be finite")


@dataclass(frozen=True)
class IntegrationConfig:
    """Numerical settings shared by the density, CDF and quantile routines.

    Parameters
    ----------
    step : float
        Trapezoid spacing, used both for the ``t`` grid of the density
        integral and for the ``p`` grid of quantile integrals.
    truncation : float or None
        Upper limit of the ``t`` integral. ``None`` picks the point where
        ``exp(-t**alpha)`` drops below ``envelope_tol``.
    envelope_tol : float
        Largest admissible value of the integrand envelope at the
        truncation point.
    tail_switch_p : float
        Quantile level above which the power-law quantile asymptote replaces
        inversion of the CDF. ``1.0`` disables the switch.
    grid_size : int
        Minimal FFT length; sets the spacing of the tabulated ``x`` grid.
    density_floor : float
        Density level below which the tabulated density hands over to the
        tail asymptote.
    """

    step: float = 1e-3
    truncation: float | None = None
    envelope_tol: float = 1e-12
    tail_switch_p: float = 0.9999
    grid_size: int = 2**18
    density_floor: float = 1e-9

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.truncation is not None and not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if not (0.0 < self.envelope_tol < 1.0):
            raise ValueError("envelope_tol must lie in (0, 1)")
        if not (0.5 < self.tail_switch_p <= 1.0):
            raise ValueError("tail_switch_p must lie in (0.5, 1]")
        if self.grid_size < 1024:
            raise ValueError("grid_size too small")

    def digest(self) -> str:
        """Short stable hash identifying these settings (used in cache keys)."""
        text = "|".join(
            f"{name}={getattr(self, name)!r}"
            for name in ("step", "truncation", "envelope_tol", "tail_switch_p",
                         "grid_size", "density_floor")
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def t_max(self, alpha: float) -> float:
        if self.truncation is not None:
            if math.exp(-self.truncation**alpha) > self.envelope_tol * (1 + 1e-9):
                raise QuadratureError(
                    f"truncation {self.truncation} leaves envelope "
                    f"{math.exp(-self.truncation ** alpha):.3g} > {self.envelope_tol:g} "
                    f"at alpha={alpha}"
                )
            return self.truncation
        return (-math.log(self.envelope_tol)) ** (1.0 / alpha)


DEFAULT_CONFIG = IntegrationConfig()

# largest t-grid accepted before we give up on the quadrature
_MAX_NODES = 2**24


@dataclass(frozen=True)
class TailConstants:
    c_alpha: float
    c_bar_alpha: float


def tail_constants(alpha: float) -> TailConstants:
    """Constants of the power-law tails for 0 < alpha < 2.

    ``P[X > x] ~ c_alpha x**-alpha`` and ``Q(p) ~ c_bar_alpha (1-p)**(-1/alpha)``.
    """
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"tail constants need 0 < alpha < 2, got {alpha}")
    c = math.sin(math.pi * alpha / 2.0) * gamma(alpha) / math.pi
    return TailConstants(c_alpha=c, c_bar_alpha=c ** (1.0 / alpha))


def tail_quantile_approx(alpha: float, p):
    """Power-law approximation ``c_bar (1-p)**(-1/alpha)`` of the upper quantile."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.5) | (p >= 1.0)):
        raise ValueError("p must lie in (0.5, 1)")
    out = tail_constants(alpha).c_bar_alpha * (1.0 - p) ** (-1.0 / alpha)
    return out[()] if out.ndim == 0 else out


def char_function(params: StableParams, u):
    """Characteristic function E exp(iuX) of S(alpha, beta, c, mu)."""
    u = np.asarray(u, dtype=float)
    a, b, c, mu = params.alpha, params.beta, params.scale, params.location
    au = np.abs(u)
    s = np.sign(u)
    if a == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(au > 0, np.log(c * au), 0.0)
        expo = -c * au * (1.0 + 1j * b * (2.0 / np.pi) * s * log_term) + 1j * mu * u
    else:
        with np.errstate(divide="ignore"):
            corr = np.where(au > 0, np.abs(c * u) ** (1.0 - a) - 1.0, 0.0)
        expo = -(c**a) * au**a * (1.0 + 1j * b * s * math.tan(math.pi * a / 2.0) * corr) + 1j * mu * u
    out = np.exp(expo)
    return out[()] if out.ndim == 0 else out


def density_trapezoid(alpha: float, x, step: float = 1e-3, truncation: float | None = None,
                      envelope_tol: float = 1e-12):
    """Plain trapezoidal rule for the cosine-transform density, point by point.

    Slow (one pass over the ``t`` grid per point) and without any tail
    treatment; kept as a reference for the tabulated density.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tmax = truncation if truncation is not None else (-math.log(envelope_tol)) ** (1 / alpha)
    if math.exp(-tmax**alpha) > envelope_tol * (1 + 1e-9):
        raise QuadratureError(f"truncation {tmax} too short for alpha={alpha}")
    t = np.arange(int(math.ceil(tmax / step)) + 1) * step
    w = np.exp(-t**alpha)
    w[0] *= 0.5
    w[-1] *= 0.5
    out = np.empty_like(x)
    for i0 in range(0, x.size, 64):
        chunk = x[i0:i0 + 64]
        out[i0:i0 + 64] = np.cos(np.outer(chunk, t)) @ w
    return out * step / np.pi


class _DensityGrid:
    """Trapezoid density, its derivative and the CDF on a uniform x grid.

    The trapezoid sum over ``t_k = k h`` is periodic in ``x`` with period
    ``2 pi / h``; it equals the sum of the true density over all shifts by
    that period. The shifted copies are removed with the tail asymptote
    (a Hurwitz zeta sum), so the grid is trusted up to a quarter period.
    """

    def __init__(self, alpha: float, cfg: IntegrationConfig):
        self.alpha = alpha
        h = cfg.step
        tmax = cfg.t_max(alpha)
        n_t = int(math.ceil(tmax / h)) + 1
        if n_t > _MAX_NODES:
            raise QuadratureError(
                f"alpha={alpha} needs {n_t} quadrature nodes with step={h}; "
                "increase the step or the envelope tolerance"
            )
        m = cfg.grid_size
        while m < n_t:
            m *= 2
        t = np.arange(n_t) * h
        env = np.exp(-t**alpha)
        env[0] *= 0.5
        period = 2.0 * math.pi / h
        j_max = m // 4
        f = np.fft.rfft(env, n=m)[: j_max + 1]
        df = np.fft.rfft(t * env, n=m)[: j_max + 1]
        f = f.real * (h / math.pi)
        df = df.imag * (h / math.pi)
        dx = period / m
        x = np.arange(j_max + 1) * dx

        if alpha < 2.0:
            tc = tail_constants(alpha)
            self.c_alpha = tc.c_alpha
            s = alpha + 1.0
            xs = np.linspace(0.0, x[-1], 1025)
            q = xs / period
            pre = alpha * tc.c_alpha * period**-s
            corr = pre * (zeta(s, 1 + q) + zeta(s, 1 - q))
            dcorr = -pre * s / period * (zeta(s + 1, 1 + q) - zeta(s + 1, 1 - q))
            f -= np.interp(x, xs, corr)
            df -= np.interp(x, xs, dcorr)
            # hand-over point: where the tail asymptote reaches the density floor
            x_floor = (alpha * tc.c_alpha / cfg.density_floor) ** (1.0 / s)
            x_sw = min(x[-1], max(x_floor, 40.0))
            bad = np.nonzero(f < 10 * cfg.density_floor * 1e-3)[0]
            if bad.size:
                x_sw = min(x_sw, x[bad[0]])
            j_sw = int(x_sw / dx)
        else:
            self.c_alpha = 0.0
            j_sw = j_max
        x, f, df = x[: j_sw + 1], f[: j_sw + 1], df[: j_sw + 1]

        inc = dx * (f[:-1] + f[1:]) / 2 + dx**2 * (df[:-1] - df[1:]) / 12
        F = np.empty_like(f)
        F[0] = 0.5
        np.cumsum(inc, out=F[1:])
        F[1:] += 0.5
        if np.any(np.diff(F) <= 0) and alpha < 2.0:
            raise QuadratureError(f"tabulated CDF not increasing for alpha={alpha}")
        self.x, self.f, self.df, self.F = x, f, df, F
        self.dx = dx
        self.x_sw = x[-1]
        self.sf_sw = 1.0 - F[-1]

    # -- evaluation -----------------------------------------------------
    def _locate(self, ax):
        j = np.minimum((ax / self.dx).astype(np.intp), self.x.size - 2)
        s = ax / self.dx - j
        return j, s

    def pdf(self, ax):
        out = np.empty_like(ax)
        inside = ax <= self.x_sw
        j, s = self._locate(ax[inside])
        f0, f1 = self.f[j], self.f[j + 1]
        d0, d1 = self.df[j] * self.dx, self.df[j + 1] * self.dx
        s2, s3 = s * s, s * s * s
        out[inside] = ((2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0
                       + (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * d1)
        xt = ax[~inside]
        out[~inside] = self.alpha * self.c_alpha * xt ** (-self.alpha - 1.0)
        return out

    def sf(self, ax):
        """Survival function P[X > x] for x >= 0."""
        out = np.empty_like(ax)
        inside = ax <= self.x_sw
        j, s = self._locate(ax[inside])
        out[inside] = 1.0 - self._hermite_cdf(j, s)
        xt = ax[~inside]
        out[~inside] = self.sf_sw * (self.x_sw / xt) ** self.alpha
        return out

    def _hermite_cdf(self, j, s):
        F0, F1 = self.F[j], self.F[j + 1]
        m0, m1 = self.f[j] * self.dx, self.f[j + 1] * self.dx
        s2, s3 = s * s, s * s * s
        return ((2 * s3 - 3 * s2 + 1) * F0 + (s3 - 2 * s2 + s) * m0
                + (-2 * s3 + 3 * s2) * F1 + (s3 - s2) * m1)

    def upper_quantile(self, p):
        """Invert the CDF for p in [0.5, 1)."""
        out = np.empty_like(p)
        inside = p <= self.F[-1]
        pi = p[inside]
        j = np.searchsorted(self.F, pi, side="right") - 1
        j = np.clip(j, 0, self.F.size - 2)
        F0, F1 = self.F[j], self.F[j + 1]
        if np.any((pi < F0) | (pi > F1)):
            raise BracketError("quantile level outside its bracketing panel")
        # Newton on the cubic Hermite panel, started from the linear guess
        s = (pi - F0) / (F1 - F0)
        for _ in range(6):
            g = self._hermite_cdf(j, s) - pi
            f0, f1 = self.f[j] * self.dx, self.f[j + 1] * self.dx
            dg = (6 * s * s - 6 * s) * (F0 - F1) + (3 * s * s - 4 * s + 1) * f0 + (3 * s * s - 2 * s) * f1
            s = np.clip(s - g / np.where(dg > 0, dg, 1.0), 0.0, 1.0)
        out[inside] = (j + s) * self.dx
        tail = ~inside
        out[tail] = self.x_sw * (self.sf_sw / (1.0 - p[tail])) ** (1.0 / self.alpha)
        return out


@lru_cache(maxsize=32)
def _grid(alpha: float, cfg: IntegrationConfig) -> _DensityGrid:
    return _DensityGrid(float(alpha), cfg)


def _check_alpha(alpha):
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")


def _finish(arr):
    return arr[()] if arr.ndim == 0 else arr


def pdf(alpha: float, x, cfg: IntegrationConfig = DEFAULT_CONFIG):
    """Density of the standardized symmetric alpha-stable law."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if alpha == 2.0:
        out = np.exp(-ax * ax / 4.0) / (2.0 * math.sqrt(math.pi))
    elif alpha == 1.0:
        out = 1.0 / (math.pi * (1.0 + ax * ax))
    else:
        out = _grid(alpha, cfg).pdf(ax.ravel()).reshape(ax.shape)
    return _finish(out)


def logpdf(alpha: float, x, cfg: IntegrationConfig = DEFAULT_CONFIG):
    """Log-density; exact in log space for the Gaussian case."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if alpha == 2.0:
        return _finish(-x * x / 4.0 - math.log(2.0 * math.sqrt(math.pi)))
    return _finish(np.log(pdf(alpha, x, cfg)))


def sf(alpha: float, x, cfg: IntegrationConfig = DEFAULT_CONFIG):
    """Survival function P[X > x]."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if alpha == 2.0:
        upper = ndtr(-ax / math.sqrt(2.0))
    elif alpha == 1.0:
        # arctan(1/x)/pi keeps relative accuracy in the far tail
        with np.errstate(divide="ignore"):
            upper = np.where(ax > 0, np.arctan(1.0 / ax) / math.pi, 0.5)
    else:
        upper = _grid(alpha, cfg).sf(ax.ravel()).reshape(ax.shape)
    out = np.where(x >= 0, upper, 1.0 - upper)
    return _finish(out)


def cdf(alpha: float, x, cfg: IntegrationConfig = DEFAULT_CONFIG):
    """Distribution function; ``F(0) = 1/2`` and ``F(-x) = 1 - F(x)``."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if alpha == 2.0:
        lower = ndtr(-ax / math.sqrt(2.0))
    elif alpha == 1.0:
        with np.errstate(divide="ignore"):
            lower = np.where(ax > 0, np.arctan(1.0 / ax) / math.pi, 0.5)
    else:
        lower = _grid(alpha, cfg).sf(ax.ravel()).reshape(ax.shape)
    out = np.where(x >= 0, 1.0 - lower, lower)
    return _finish(out)


def quantile(alpha: float, p, cfg: IntegrationConfig = DEFAULT_CONFIG):
    """Quantile function, antisymmetric about p = 1/2.

    Levels above ``cfg.tail_switch_p`` use the power-law asymptote (except
    for the closed-form cases). Near alpha = 2 that asymptote is poor at
    moderate levels; set ``tail_switch_p=1.0`` to always invert the CDF.
    """
    _check_alpha(alpha)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)) or np.any(np.isnan(p)):
        raise ValueError("p must lie in (0, 1)")
    hi = np.maximum(p, 1.0 - p)  # upper level in [0.5, 1)
    flat = hi.ravel()
    if alpha == 2.0:
        mag = math.sqrt(2.0) * ndtri(flat)
    elif alpha == 1.0:
        mag = np.tan(math.pi * (flat - 0.5))
    else:
        mag = np.empty_like(flat)
        far = flat > cfg.tail_switch_p
        if np.any(far):
            mag[far] = tail_quantile_approx(alpha, flat[far])
        if np.any(~far):
            mag[~far] = _grid(alpha, cfg).upper_quantile(flat[~far])
    mag = mag.reshape(hi.shape)
    out = np.where(p >= 0.5, mag, -mag)
    return _finish(out)


def _cms_standard(alpha, beta, v, w):
    """Chambers-Mallows-Stuck draw from the 1-parametrization S1(alpha, beta, 1, 0)."""
    if alpha == 1.0:
        hb = math.pi / 2 + beta * v
        return (2 / math.pi) * (hb * np.tan(v) - beta * np.log((math.pi / 2) * w * np.cos(v) / hb))
    zeta_ = beta * math.tan(math.pi * alpha / 2)
    b = math.atan(zeta_) / alpha
    s = (1 + zeta_**2) ** (1 / (2 * alpha))
    av = alpha * (v + b)
    return (s * np.sin(av) / np.cos(v) ** (1 / alpha)
            * (np.cos(v - av) / w) ** ((1 - alpha) / alpha))


def sample(params: StableParams, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. values from S(alpha, beta, c, mu) (0-parametrization).

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    a, b, c, mu = params.alpha, params.beta, params.scale, params.location
    if abs(a - 2.0) < 1e-4:
        return mu + c * math.sqrt(2.0) * rng.standard_normal(n)
    v = rng.uniform(-math.pi / 2, math.pi / 2, n)
    w = rng.standard_exponential(n)
    if abs(a - 1.0) < 1e-4:
        return mu + c * _cms_standard(1.0, b, v, w)
    z = _cms_standard(a, b, v, w)
    return mu + c * (z - b * math.tan(math.pi * a / 2))
