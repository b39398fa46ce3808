"""Synthetic sweeps on Gaussian data: KL tracking, MI tracking, convergence.

Each sweep returns a list of row dicts in deterministic grid order. All
randomness derives from one master seed; see :func:`derive_seed`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .bounds import bounds_from_stats, product_marginal_sample
from .errors import InputError
from .estimators import EstimatorConfig, LambdaPolicy, estimate, estimate_many, lb_statistic, ub_statistic_sq
from .gaussian_oracle import (
    GaussianSpec,
    JointGaussianSpec,
    kl_gaussian,
    mi_gaussian,
    sample_gaussian,
    sample_joint_gaussian,
)
from .kernels import DEFAULT_GAMMA_GRID, KernelFamily, KernelSpec, rbf_family

MEAN_SHIFT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
CROSS_COV_GRID = (0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9)
SWEEP_GAMMA_GRID = (0.1, 0.3, 1.0)
COV_SCALE_FLOOR = 0.05


def derive_seed(master: int, *path) -> int:
    """Counter-based child seed: ``SeedSequence(master, spawn_key=path)`` -> 63-bit int.

    String path components are folded to integers through their UTF-8 bytes
    so stream names stay stable across runs and platforms.
    """
    key = tuple(
        int.from_bytes(p.encode("utf-8"), "little") if isinstance(p, str) else int(p) for p in path
    )
    ss = np.random.SeedSequence(int(master), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    # results come back in input order regardless of completion order
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or np.all(a == a[0]) or np.all(b == b[0]):
        return float("nan")
    return float(spearmanr(a, b).statistic)


def kernel_spec(family: str, gamma: float) -> KernelSpec:
    return KernelSpec(KernelFamily(family), gamma)


# --- KL sweep -------------------------------------------------------------------------


def kl_sweep_specs(kind: str, epsilon: float, dim: int) -> tuple[float, GaussianSpec, GaussianSpec]:
    """Return ``(effective_epsilon, p, q)`` for one sweep point.

    ``mean_shift``: ``p = N(eps 1, I)``, ``q = N(0, I)``.
    ``cov_scale``: ``p = N(0, eps I)``, ``q = N(0, I)``, with ``eps`` floored at 0.05.
    """
    q = GaussianSpec.isotropic(dim)
    if kind == "mean_shift":
        return epsilon, GaussianSpec.isotropic(dim, mean_value=epsilon), q
    if kind == "cov_scale":
        eff = max(epsilon, COV_SCALE_FLOOR)
        return eff, GaussianSpec.isotropic(dim, variance=eff), q
    raise InputError(f"unknown sweep kind {kind!r}; use 'mean_shift' or 'cov_scale'")


def kl_sweep(
    kind: str = "mean_shift",
    epsilons: Sequence[float] = MEAN_SHIFT_GRID,
    gammas: Sequence[float] = SWEEP_GAMMA_GRID,
    kernel: str = "rbf",
    lambda_policy: LambdaPolicy = LambdaPolicy("fixed", 1e-3),
    n: int = 2000,
    dim: int = 3,
    master_seed: int = 0,
    lb_scale: float = 1.0,
    jobs: int = 1,
) -> list[dict]:
    """One row per ``(epsilon, gamma)``; every gamma at a point sees the same samples.

    Summary rows (``row == "spearman"``) carry the rank correlation of each
    bound with the true KL across the epsilon grid, per gamma.
    """
    if len(epsilons) < 1 or len(gammas) < 1:
        raise InputError("epsilon and gamma grids must be non-empty")
    configs = [
        EstimatorConfig(family=(kernel_spec(kernel, g),), lambda_policy=lambda_policy)
        for g in gammas
    ]

    def point(indexed):
        i, eps = indexed
        eff, p, q = kl_sweep_specs(kind, float(eps), dim)
        seed = derive_seed(master_seed, "kl", kind, i)
        x = sample_gaussian(p, n, derive_seed(seed, 0))
        y = sample_gaussian(q, n, derive_seed(seed, 1))
        kl_true = kl_gaussian(p, q)
        rows = []
        for g, stats in zip(gammas, estimate_many(configs, x, y)):
            est = bounds_from_stats(stats, lb_scale)
            raw = bounds_from_stats(stats, 1.0)
            rows.append(
                {
                    "row": "point",
                    "sweep": kind,
                    "epsilon": eff,
                    "gamma": float(g),
                    "kl_true": kl_true,
                    "lb_statistic": stats.lb_statistic,
                    "ub_statistic_sq": stats.ub_statistic_sq,
                    "kl_lower": est.kl_lower,
                    "kl_lower_raw": raw.kl_lower,
                    "kl_upper": est.kl_upper,
                    "lb_scale": float(lb_scale),
                    "lambda_used": stats.lambda_used,
                    "seed": seed,
                }
            )
        return rows

    rows = [r for chunk in _map(point, list(enumerate(epsilons)), jobs) for r in chunk]
    for g in gammas:
        sel = [r for r in rows if r["gamma"] == float(g)]
        truth = [r["kl_true"] for r in sel]
        rows.append(
            {
                "row": "spearman",
                "sweep": kind,
                "gamma": float(g),
                "kl_lower": spearman(truth, [r["kl_lower"] for r in sel]),
                "kl_upper": spearman(truth, [r["kl_upper"] for r in sel]),
            }
        )
    return rows


# --- MI sweep -------------------------------------------------------------------------


@dataclass(frozen=True)
class MiSetting:
    kernel: str
    gamma: float
    lam: float

    def config(self) -> EstimatorConfig:
        return EstimatorConfig(
            family=(kernel_spec(self.kernel, self.gamma),),
            lambda_policy=LambdaPolicy("fixed", self.lam),
        )

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "gamma": self.gamma, "lambda": self.lam}


# RBF gamma 0.3 with lambda 1e-4, inverse polynomial gamma 0.7 with lambda 2e-4
DEFAULT_MI_SETTINGS = (MiSetting("rbf", 0.3, 1e-4), MiSetting("invpoly", 0.7, 2e-4))


def mi_sweep(
    epsilons: Sequence[float] = CROSS_COV_GRID,
    settings: Sequence[MiSetting] = DEFAULT_MI_SETTINGS,
    n: int = 4000,
    dim: int = 3,
    master_seed: int = 0,
    lb_scale: float = 1.0,
    jobs: int = 1,
) -> list[dict]:
    """One row per ``(epsilon, setting)`` on joint Gaussians with cross block ``eps U``.

    ``U`` is drawn once per master seed and shared by the whole grid. At each
    epsilon the joint sample and its product-of-marginals permutation are
    fixed, so settings differing only in lambda see identical data.
    """
    if len(epsilons) < 1 or len(settings) < 1:
        raise InputError("epsilon grid and kernel settings must be non-empty")
    unitary_seed = derive_seed(master_seed, "unitary")
    configs = [s.config() for s in settings]

    def point(indexed):
        i, eps = indexed
        joint = JointGaussianSpec.unitary_cross(dim, float(eps), unitary_seed)
        seed = derive_seed(master_seed, "mi", i)
        data = sample_joint_gaussian(joint, n, derive_seed(seed, 0))
        product = product_marginal_sample(data, dim, np.random.default_rng(derive_seed(seed, 1)))
        mi_true = mi_gaussian(joint)
        rows = []
        for s, stats in zip(settings, estimate_many(configs, data, product)):
            est = bounds_from_stats(stats, lb_scale)
            rows.append(
                {
                    "row": "point",
                    "epsilon": float(eps),
                    "kernel": s.kernel,
                    "gamma": s.gamma,
                    "lambda": s.lam,
                    "mi_true": mi_true,
                    "lb_statistic": stats.lb_statistic,
                    "ub_statistic_sq": stats.ub_statistic_sq,
                    "mi_lower": est.kl_lower,
                    "mi_lower_raw": bounds_from_stats(stats, 1.0).kl_lower,
                    "mi_upper": est.kl_upper,
                    "lb_scale": float(lb_scale),
                    "seed": seed,
                    "unitary_seed": unitary_seed,
                }
            )
        return rows

    rows = [r for chunk in _map(point, list(enumerate(epsilons)), jobs) for r in chunk]
    for s in settings:
        sel = [
            r for r in rows if (r["kernel"], r["gamma"], r["lambda"]) == (s.kernel, s.gamma, s.lam)
        ]
        truth = [r["mi_true"] for r in sel]
        rows.append(
            {
                "row": "spearman",
                "kernel": s.kernel,
                "gamma": s.gamma,
                "lambda": s.lam,
                "mi_lower": spearman(truth, [r["mi_lower"] for r in sel]),
                "mi_upper": spearman(truth, [r["mi_upper"] for r in sel]),
            }
        )
    return rows


# --- convergence ----------------------------------------------------------------------


def relative_spread(values: Iterable[float]) -> float:
    values = np.asarray(list(values), dtype=float)
    med = float(np.median(values))
    if med == 0.0:
        return math.inf
    return float((values.max() - values.min()) / med)


def convergence(
    lb_sizes: Sequence[int] = (100, 400, 1600),
    ub_sizes: Sequence[int] = (200, 800, 3200),
    n_seeds: int = 20,
    gammas: Sequence[float] = DEFAULT_GAMMA_GRID,
    ub_gamma: float = 0.3,
    kernel: str = "rbf",
    lambda_policy: LambdaPolicy = LambdaPolicy("decay", 0.1),
    shift: float = 1.0,
    dim: int = 3,
    master_seed: int = 0,
    jobs: int = 1,
) -> list[dict]:
    """Finite-sample trends of both statistics as the sample size grows.

    Cases: ``same`` (p = q = N(0, I)) and ``shifted`` (p = N(shift 1, I),
    q = N(0, I)). The lower-bound statistic is maximized over the ``gammas``
    family; the upper-bound statistic uses ``ub_gamma`` and ``lambda_policy``.
    """
    if n_seeds < 1:
        raise InputError("n_seeds must be >= 1")
    family = tuple(kernel_spec(kernel, g) for g in gammas)
    ub_kernel = kernel_spec(kernel, ub_gamma)
    q = GaussianSpec.isotropic(dim)
    cases = {"same": q, "shifted": GaussianSpec.isotropic(dim, mean_value=shift)}

    tasks = []
    for case in cases:
        for stat, sizes in (("lb_statistic", lb_sizes), ("ub_statistic_sq", ub_sizes)):
            for n in sizes:
                for s in range(n_seeds):
                    tasks.append((case, stat, int(n), s))

    def run(task):
        case, stat, n, s = task
        seed = derive_seed(master_seed, "conv", case, n, s)
        x = sample_gaussian(cases[case], n, derive_seed(seed, 0))
        y = sample_gaussian(q, n, derive_seed(seed, 1))
        if stat == "lb_statistic":
            value, lam = lb_statistic(family, x, y)[0], None
        else:
            lam = lambda_policy.resolve(n)
            value = ub_statistic_sq(ub_kernel, x, y, lam)
        return {
            "row": "point",
            "case": case,
            "statistic": stat,
            "n": n,
            "seed": seed,
            "value": value,
            "lambda_used": lam,
        }

    rows = _map(run, tasks, jobs)
    summary = []
    for case in cases:
        for stat, sizes in (("lb_statistic", lb_sizes), ("ub_statistic_sq", ub_sizes)):
            for n in sizes:
                vals = [
                    r["value"]
                    for r in rows
                    if (r["case"], r["statistic"], r["n"]) == (case, stat, int(n))
                ]
                summary.append(
                    {
                        "row": "summary",
                        "case": case,
                        "statistic": stat,
                        "n": int(n),
                        "median": float(np.median(vals)),
                        "rel_spread": relative_spread(vals),
                    }
                )
    return rows + summary
