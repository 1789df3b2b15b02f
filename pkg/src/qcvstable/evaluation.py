"""Monte Carlo harness: RMSE tables, bias grids over (alpha, beta), and
bootstrap confidence intervals.

Every replication draws its sample from a seed derived from the master
seed and the cell coordinates, so results do not depend on how the work is
split across processes. All requested methods see the same samples.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import benchmarks, qcv, stable
from .errors import EstimationError, StableError

log = logging.getLogger(__name__)

METHODS = ("n1", "n2", "mch", "reg", "mle", "m1", "m2")
REPORT_COLUMNS = ("alpha", "beta", "n", "method", "metric", "value", "failures")
TABLE_ALPHAS = tuple(round(1.0 + 0.1 * i, 1) for i in range(11))
ROBUSTNESS_ALPHAS = tuple(round(1.1 + 0.1 * i, 1) for i in range(10))
ROBUSTNESS_BETAS = tuple(round(0.1 * i, 1) for i in range(11))
FULL_SCALE_K = 100_000
DESK_SCALE_K = 1000


@dataclass(frozen=True)
class MonteCarloConfig:
    """One Monte Carlo experiment.

    ``sample_sizes`` lists every n to run; the default ``k`` is desk scale.
    """

    k: int = DESK_SCALE_K
    sample_sizes: tuple = (250, 500, 1000)
    alphas: tuple = TABLE_ALPHAS
    betas: tuple = (0.0,)
    methods: tuple = ("n1", "n2", "mch", "reg", "mle")
    master_seed: int = 20240101
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.sample_sizes or min(self.sample_sizes) < 50:
            raise ValueError("every sample size must be at least 50")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        for a in self.alphas:
            stable.StableParams(a)
        for b in self.betas:
            stable.StableParams(1.5, b)
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def full_scale(cls, **kw) -> "MonteCarloConfig":
        """The 100 000-replication setting; hours of CPU time."""
        kw.setdefault("k", FULL_SCALE_K)
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def cell_seed(master_seed: int, alpha: float, beta: float, n: int, j: int) -> np.random.SeedSequence:
    """Seed of replication ``j`` in cell ``(alpha, beta, n)``."""
    key = (int(round(alpha * 10000)), int(round(beta * 10000)) + 10000, int(n), int(j))
    return np.random.SeedSequence(int(master_seed), spawn_key=key)


def rmse(alpha_true: float, estimates) -> float:
    """Root mean squared deviation of ``estimates`` from ``alpha_true``."""
    e = np.asarray(estimates, dtype=float)
    if e.size == 0:
        raise ValueError("no estimates")
    return float(np.sqrt(np.mean((e - alpha_true) ** 2)))


# -- estimation context --------------------------------------------------------

class Estimators:
    """Callable bundle of every method, sharing prebuilt tables.

    ``estimate(x, methods)`` returns a dict method -> alpha_hat (NaN on failure)
    and evaluates each underlying estimator once, so the averages reuse
    their components.
    """

    def __init__(self, mle_cfg: benchmarks.MleConfig | None = None,
                 reg_cfg: benchmarks.RegConfig | None = None):
        self.tables = {"n1": qcv.get_table(qcv.N1), "n2": qcv.get_table(qcv.N2)}
        self.nu = benchmarks.get_nu_table()
        self.mle_cfg = mle_cfg or benchmarks.MleConfig()
        self.reg_cfg = reg_cfg or benchmarks.RegConfig()

    def digests(self) -> dict:
        return {"n1": self.tables["n1"].digest(), "n2": self.tables["n2"].digest(),
                "mch": self.nu.digest()}

    def one(self, x: np.ndarray, method: str) -> qcv.EstimateResult:
        if method in ("n1", "n2"):
            spec = qcv.N1 if method == "n1" else qcv.N2
            return qcv.estimate_alpha(x, spec, self.tables[method])
        if method == "mch":
            return benchmarks.mcculloch_estimate(x, self.nu)
        if method == "reg":
            return benchmarks.reg_estimate(x, self.reg_cfg)
        if method == "mle":
            return benchmarks.mle_estimate(x, self.mle_cfg)
        if method in ("m1", "m2"):
            return benchmarks.ensemble_estimate(x, method.upper(), self.tables[f"n{method[1]}"], self.reg_cfg)
        raise ValueError(f"unknown method {method!r}")

    def estimate(self, x: np.ndarray, methods) -> dict:
        base: dict = {}

        def get(m):
            if m not in base:
                try:
                    base[m] = self.one(x, m).alpha_hat
                except (StableError, ValueError, ZeroDivisionError, FloatingPointError):
                    base[m] = math.nan
            return base[m]

        out = {}
        for m in methods:
            if m in ("m1", "m2"):
                out[m] = 0.5 * (get(f"n{m[1]}") + get("reg"))
            else:
                out[m] = get(m)
        return out


_WORKER_EST: Estimators | None = None


def _worker_chunk(args):
    global _WORKER_EST
    alpha, beta, n, js, methods, master_seed = args
    if _WORKER_EST is None:
        _WORKER_EST = Estimators()
    return _run_chunk(_WORKER_EST, alpha, beta, n, js, methods, master_seed)


def _run_chunk(est: Estimators, alpha, beta, n, js, methods, master_seed):
    params = stable.StableParams(alpha, beta)
    out = np.empty((len(js), len(methods)))
    for i, j in enumerate(js):
        x = stable.sample(params, n, cell_seed(master_seed, alpha, beta, n, j))
        r = est.estimate(x, methods)
        out[i] = [r[m] for m in methods]
    return out


def simulate_estimates(alpha: float, beta: float, n: int, k: int, methods, master_seed: int,
                       workers: int = 1, estimators: Estimators | None = None) -> dict:
    """Estimates from ``k`` replications of one cell; dict method -> array (NaN = failure)."""
    methods = tuple(methods)
    js = list(range(k))
    if workers > 1 and k > 1:
        chunks = [js[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_worker_chunk, [(alpha, beta, n, c, methods, master_seed) for c in chunks]))
        arr = np.empty((k, len(methods)))
        for c, part in zip(chunks, parts):
            arr[c] = part
    else:
        est = estimators or Estimators()
        arr = _run_chunk(est, alpha, beta, n, js, methods, master_seed)
    return {m: arr[:, i] for i, m in enumerate(methods)}


# -- reports -------------------------------------------------------------------

@dataclass
class RmseReport:
    """RMSE per (alpha, n, method); failures are excluded and counted."""

    config: dict
    rows: list = field(default_factory=list)

    def add(self, alpha, beta, n, method, value, failures):
        self.rows.append({"alpha": float(alpha), "beta": float(beta), "n": int(n), "method": method,
                          "metric": "rmse", "value": float(value), "failures": int(failures)})

    def value(self, alpha: float, n: int, method: str, beta: float = 0.0) -> float:
        for r in self.rows:
            if (math.isclose(r["alpha"], alpha) and r["n"] == n and r["method"] == method
                    and math.isclose(r["beta"], beta)):
                return r["value"]
        raise KeyError((alpha, n, method))

    def matrix(self, n: int, methods=None):
        """Rows ordered by alpha, columns by method (a Table-1-shaped block)."""
        methods = methods or sorted({r["method"] for r in self.rows}, key=METHODS.index)
        alphas = sorted({r["alpha"] for r in self.rows if r["n"] == n})
        return alphas, methods, np.array([[self.value(a, n, m) for m in methods] for a in alphas])

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "rows": self.rows}, indent=2, sort_keys=True)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r["alpha"])), repr(float(r["beta"])), int(r["n"]), r["method"], r["metric"],
                    f"{r['value']:.17g}", r["failures"]])
    return buf.getvalue()


def run_rmse_experiment(cfg: MonteCarloConfig, estimators: Estimators | None = None,
                        keep_estimates: bool = False):
    """RMSE report over every (alpha, beta, n) cell and method in ``cfg``.

    With ``keep_estimates`` also returns the raw per-replication estimates,
    keyed by ``(alpha, beta, n)``.
    """
    est = estimators if estimators is not None else (Estimators() if cfg.workers == 1 else None)
    report = RmseReport(config=cfg.to_dict())
    raw = {}
    for n in cfg.sample_sizes:
        for beta in cfg.betas:
            for alpha in cfg.alphas:
                res = simulate_estimates(alpha, beta, n, cfg.k, cfg.methods, cfg.master_seed,
                                         cfg.workers, est)
                for m in cfg.methods:
                    e = res[m]
                    ok = np.isfinite(e)
                    val = rmse(alpha, e[ok]) if ok.any() else math.nan
                    report.add(alpha, beta, n, m, val, int((~ok).sum()))
                if keep_estimates:
                    raw[(alpha, beta, n)] = res
                log.info("cell alpha=%s beta=%s n=%s done", alpha, beta, n)
    return (report, raw) if keep_estimates else report


@dataclass
class BiasGrid:
    """Mean estimate per (method, alpha, beta) at one sample size."""

    config: dict
    methods: tuple
    alphas: tuple
    betas: tuple
    n: int
    means: np.ndarray      # shape (methods, alphas, betas)
    counts: np.ndarray     # successful replications per cell
    failures: np.ndarray

    def mean(self, method: str, alpha: float, beta: float) -> float:
        return float(self.means[self.methods.index(method), _index(self.alphas, alpha),
                                _index(self.betas, beta)])

    def rows(self, with_diff: bool = True) -> list:
        out = []
        diffs = {m: robustness_diff(self, m) for m in self.methods} if with_diff and 0.0 in self.betas else {}
        for mi, m in enumerate(self.methods):
            for ai, a in enumerate(self.alphas):
                for bi, b in enumerate(self.betas):
                    f = int(self.failures[mi, ai, bi])
                    out.append({"alpha": a, "beta": b, "n": self.n, "method": m, "metric": "mean",
                                "value": float(self.means[mi, ai, bi]), "failures": f})
                    if m in diffs:
                        out.append({"alpha": a, "beta": b, "n": self.n, "method": m, "metric": "absdiff",
                                    "value": float(diffs[m][ai, bi]), "failures": f})
        return out

    def to_csv(self) -> str:
        return rows_to_csv(self.rows())

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "rows": self.rows()}, indent=2, sort_keys=True)


def _index(values, v) -> int:
    for i, x in enumerate(values):
        if math.isclose(x, v, abs_tol=1e-12):
            return i
    raise KeyError(v)


def run_bias_grid(cfg: MonteCarloConfig, estimators: Estimators | None = None) -> BiasGrid:
    """Mean estimates over the (alpha, beta) grid at the first sample size in ``cfg``."""
    n = cfg.sample_sizes[0]
    est = estimators if estimators is not None else (Estimators() if cfg.workers == 1 else None)
    shape = (len(cfg.methods), len(cfg.alphas), len(cfg.betas))
    means = np.full(shape, np.nan)
    counts = np.zeros(shape, dtype=int)
    fails = np.zeros(shape, dtype=int)
    for ai, alpha in enumerate(cfg.alphas):
        for bi, beta in enumerate(cfg.betas):
            res = simulate_estimates(alpha, beta, n, cfg.k, cfg.methods, cfg.master_seed, cfg.workers, est)
            for mi, m in enumerate(cfg.methods):
                e = res[m]
                ok = np.isfinite(e)
                counts[mi, ai, bi] = ok.sum()
                fails[mi, ai, bi] = (~ok).sum()
                if ok.any():
                    means[mi, ai, bi] = e[ok].mean()
            log.info("bias cell alpha=%s beta=%s done", alpha, beta)
    return BiasGrid(cfg.to_dict(), tuple(cfg.methods), tuple(cfg.alphas), tuple(cfg.betas), n,
                    means, counts, fails)


def robustness_diff(grid: BiasGrid, method: str | None = None) -> np.ndarray:
    """``|mean(alpha, beta) - mean(alpha, 0)|`` for every cell, shape (alphas, betas)."""
    method = method or grid.methods[0]
    try:
        b0 = _index(grid.betas, 0.0)
    except KeyError:
        raise KeyError("grid has no beta = 0 column") from None
    m = grid.means[grid.methods.index(method)]
    return np.abs(m - m[:, [b0]])


# -- bootstrap -----------------------------------------------------------------

@dataclass
class BootstrapResult:
    point_estimate: float
    ci_low: float
    ci_high: float
    level: float
    resamples: int
    failures: int = 0

    def to_dict(self) -> dict:
        return {"low": self.ci_low, "high": self.ci_high, "level": self.level, "B": self.resamples}


def bootstrap_ci(data, method: str = "n1", B: int = 10_000, level: float = 0.95, seed: int = 0,
                 estimators: Estimators | None = None, chunk: int = 500) -> BootstrapResult:
    """Percentile bootstrap interval for the chosen estimator.

    Failed resamples are dropped; more than 5% failures is an error.
    """
    if B < 100:
        raise ValueError("B must be at least 100")
    if not (0 < level < 1):
        raise ValueError("level must lie in (0, 1)")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(data, dtype=float).ravel()
    est = estimators or Estimators()
    point = est.one(x, method).alpha_hat
    rng = np.random.default_rng(seed)
    vals = np.empty(B)
    n = x.size
    done = 0
    while done < B:
        m = min(chunk, B - done)
        idx = rng.integers(0, n, size=(m, n))
        for i in range(m):
            vals[done + i] = est.estimate(x[idx[i]], (method,))[method]
        done += m
    ok = np.isfinite(vals)
    fails = int((~ok).sum())
    if fails > 0.05 * B:
        raise EstimationError(f"{fails} of {B} bootstrap resamples failed")
    tail = (1 - level) / 2
    lo, hi = np.quantile(vals[ok], [tail, 1 - tail])
    return BootstrapResult(float(point), float(lo), float(hi), level, B, fails)
