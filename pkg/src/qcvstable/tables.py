"""Monotone lookup tables alpha -> statistic, with inversion and CSV storage."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonMonotoneTableError

CACHE_ENV = "QCVSTABLE_CACHE"


def cache_dir() -> Path:
    """Directory for cached tables (``$QCVSTABLE_CACHE`` or ``~/.cache/qcvstable``)."""
    root = os.environ.get(CACHE_ENV)
    path = Path(root) if root else Path.home() / ".cache" / "qcvstable"
    return path


@dataclass(frozen=True)
class Inversion:
    alpha: float
    clamped: bool


class MonotoneTable:
    """Strictly monotone tabulation of a statistic against alpha.

    Parameters
    ----------
    alphas : array_like
        Strictly increasing alpha grid.
    values : array_like
        Statistic at each grid point; must be strictly monotone.
    meta : dict
        Key/value pairs written to the ``#`` header line of the CSV form.
    """

    def __init__(self, alphas, values, meta: dict | None = None):
        alphas = np.asarray(alphas, dtype=float)
        values = np.asarray(values, dtype=float)
        if alphas.ndim != 1 or alphas.shape != values.shape or alphas.size < 2:
            raise ValueError("alphas and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(alphas) <= 0):
            raise ValueError("alphas must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise NonMonotoneTableError("table contains non-finite values")
        dv = np.diff(values)
        if np.all(dv < 0):
            self.direction = "decreasing"
        elif np.all(dv > 0):
            self.direction = "increasing"
        else:
            bad = np.nonzero(np.sign(dv) != np.sign(dv[0]))[0]
            where = alphas[bad[0] + 1] if bad.size else alphas[0]
            raise NonMonotoneTableError(f"statistic is not strictly monotone near alpha={where:.4f}")
        self.alphas = alphas
        self.values = values
        self.meta = dict(meta or {})
        if self.direction == "decreasing":
            self._xp, self._fp = values[::-1], alphas[::-1]
        else:
            self._xp, self._fp = values, alphas

    @property
    def alpha_range(self) -> tuple[float, float]:
        return float(self.alphas[0]), float(self.alphas[-1])

    def __len__(self):
        return self.alphas.size

    def invert(self, value: float) -> Inversion:
        """Alpha whose tabulated statistic equals ``value``.

        Linear interpolation between grid points; values outside the
        tabulated range map to the nearest end with ``clamped=True``.
        """
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("cannot invert a non-finite statistic")
        lo, hi = self._xp[0], self._xp[-1]
        if value < lo:
            return Inversion(float(self._fp[0]), True)
        if value > hi:
            return Inversion(float(self._fp[-1]), True)
        return Inversion(float(np.interp(value, self._xp, self._fp)), False)

    def value_at(self, alpha):
        """Linear interpolation of the statistic at ``alpha``."""
        return np.interp(alpha, self.alphas, self.values)

    # -- persistence ------------------------------------------------------
    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        head = "#" + ";".join(f"{k}={v}" for k, v in self.meta.items())
        lines = [head, "alpha,N"]
        lines += [f"{a:.17g},{v:.17g}" for a, v in zip(self.alphas, self.values)]
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, path)

    @staticmethod
    def read_csv(path):
        """Return ``(alphas, values, meta)`` from a table file."""
        text = Path(path).read_text().splitlines()
        if not text or not text[0].startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = {}
        for item in text[0][1:].split(";"):
            if item:
                k, _, v = item.partition("=")
                meta[k] = v
        if text[1].strip() != "alpha,N":
            raise ValueError(f"{path}: unexpected header {text[1]!r}")
        rows = np.array([[float(c) for c in ln.split(",")] for ln in text[2:] if ln.strip()])
        return rows[:, 0], rows[:, 1], meta

    def digest(self) -> str:
        import hashlib
        h = hashlib.sha256(self.alphas.tobytes() + self.values.tobytes())
        return h.hexdigest()[:12]


def alpha_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Grid from ``lo`` to ``hi`` inclusive whose spacing does not exceed ``step``."""
    if not (0 < lo < hi <= 2):
        raise ValueError("need 0 < lo < hi <= 2")
    if step <= 0:
        raise ValueError("step must be positive")
    m = int(np.ceil((hi - lo) / step - 1e-9))
    grid = lo + (hi - lo) * np.arange(m + 1) / m
    grid[-1] = hi
    # snap to 1e-12 so grid points like 1.5 are represented exactly
    return np.round(grid, 12)
