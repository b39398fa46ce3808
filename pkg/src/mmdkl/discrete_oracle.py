"""Exact divergences and MMDs on a finite alphabet, and the inequality chain linking them.

On a finite alphabet every function is continuous, so the sup-norm MMD is
exactly the total variation ``sum |p - q|`` and the ``L^2(nu)`` MMD is
``||dP/dnu - dQ/dnu||_nu``. That makes every KL/MMD inequality checkable
to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .bounds import tv_bounds_from_kl
from .errors import InputError

SUM_TOL = 1e-12
CHAIN_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise InputError("probability vector must be 1-D and non-empty")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise InputError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise InputError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size


def _as_dist(d) -> DiscreteDist:
    return d if isinstance(d, DiscreteDist) else DiscreteDist(d)


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = _as_dist(p), _as_dist(q)
    if len(p) != len(q):
        raise InputError(f"alphabet sizes differ: {len(p)} vs {len(q)}")
    return p.probs, q.probs


class AbsoluteContinuityError(InputError):
    pass


def _check_abs_continuity(p: np.ndarray, q: np.ndarray) -> None:
    bad = np.flatnonzero((p > 0.0) & (q == 0.0))
    if bad.size:
        raise AbsoluteContinuityError(
            f"p is not absolutely continuous w.r.t. q: p > 0 = q at symbols {bad.tolist()}"
        )


def kl_discrete(p, q) -> float:
    p, q = _pair(p, q)
    _check_abs_continuity(p, q)
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tv_discrete(p, q) -> float:
    """``sum |p - q|``, i.e. twice the largest event-probability gap."""
    p, q = _pair(p, q)
    return float(np.sum(np.abs(p - q)))


def exact_mmd_sup(p, q) -> float:
    """MMD over functions bounded by 1 in sup norm; the maximizer is ``sign(p - q)``."""
    return tv_discrete(p, q)


Nu = Union[str, DiscreteDist, np.ndarray]


def _nu_weights(p: np.ndarray, q: np.ndarray, nu: Nu) -> np.ndarray:
    if isinstance(nu, str):
        if nu == "q":
            return q
        if nu == "p+q":
            return p + q
        if nu == "counting":
            return np.ones_like(p)
        raise InputError(f"unknown reference measure {nu!r}; use 'q', 'p+q' or 'counting'")
    weights = np.asarray(nu.probs if isinstance(nu, DiscreteDist) else nu, dtype=float)
    if weights.shape != p.shape or np.any(weights < 0.0):
        raise InputError("reference measure must be a non-negative vector on the same alphabet")
    return weights


def _density_diff(p: np.ndarray, q: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = p - q
    active = diff != 0.0
    if np.any(active & (weights == 0.0)):
        raise InputError("reference measure vanishes where p and q differ")
    return diff[active] / weights[active], weights[active]


def exact_mmd_l2(p, q, nu: Nu = "q") -> float:
    """MMD over the unit ball of ``L^2(nu)``: ``sqrt(sum (p - q)^2 / nu)``."""
    p, q = _pair(p, q)
    dens, w = _density_diff(p, q, _nu_weights(p, q, nu))
    return math.sqrt(float(np.sum(dens * dens * w)))


def alpha_ratio(p, q) -> float:
    """``max_x p(x) / q(x)`` over the support of ``q``."""
    p, q = _pair(p, q)
    _check_abs_continuity(p, q)
    mask = q > 0.0
    return float(np.max(p[mask] / q[mask]))


def beta_gap(p, q, nu: Nu = "counting") -> float:
    """``max_x |dP/dnu - dQ/dnu|``."""
    p, q = _pair(p, q)
    dens, _ = _density_diff(p, q, _nu_weights(p, q, nu))
    return float(np.max(np.abs(dens), initial=0.0))


@dataclass
class ChainReport:
    kl: float
    tv: float
    alpha: float
    beta: float
    beta_pq: float
    mmd_sup: float
    mmd_l2_q: float
    mmd_l2_pq: float
    mmd_l2_counting: float
    lb_thm1: float
    ub_thm1: float
    lb_thm2: float
    ub_thm2: float
    lb_thm3: float
    ub_thm3: float
    margins: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k not in ("margins", "violations")}
        out["margins"] = dict(self.margins)
        out["violations"] = list(self.violations)
        out["all_hold"] = self.all_hold
        return out


def _pinsker_upper(kl: float) -> float:
    return 2.0 * math.sqrt(-math.expm1(-kl))


def _quarter_root(kl: float) -> float:
    return (-math.expm1(-kl)) ** 0.25


def verify_chain(p, q, slack: float = CHAIN_SLACK, kl_bias: float = 0.0) -> ChainReport:
    """Evaluate every KL/MMD inequality for the pair and record the margins.

    A margin is ``rhs - lhs`` of an inequality ``lhs <= rhs``; any margin
    below ``-slack`` is reported as a violation. ``kl_bias`` is added to the
    computed KL and exists only to exercise the failure path.
    """
    pv, qv = _pair(p, q)
    _check_abs_continuity(pv, qv)
    k = pv.size

    kl = kl_discrete(pv, qv) + kl_bias
    tv = tv_discrete(pv, qv)
    alpha = alpha_ratio(pv, qv)
    beta = beta_gap(pv, qv, "counting")
    beta_pq = beta_gap(pv, qv, "p+q")
    mmd_sup = exact_mmd_sup(pv, qv)
    mmd_l2_q = exact_mmd_l2(pv, qv, "q")
    mmd_l2_pq = exact_mmd_l2(pv, qv, "p+q")
    mmd_l2_counting = exact_mmd_l2(pv, qv, "counting")
    q_min = float(np.min(qv))

    tv_lower, tv_upper = tv_bounds_from_kl(kl, alpha)
    pinsker_coef = tv_lower / kl if kl > 0.0 else 2.0

    report = ChainReport(
        kl=kl,
        tv=tv,
        alpha=alpha,
        beta=beta,
        beta_pq=beta_pq,
        mmd_sup=mmd_sup,
        mmd_l2_q=mmd_l2_q,
        mmd_l2_pq=mmd_l2_pq,
        mmd_l2_counting=mmd_l2_counting,
        lb_thm1=kl / alpha,
        ub_thm1=_pinsker_upper(kl),
        lb_thm2=math.sqrt(math.expm1(kl)),
        ub_thm2=math.sqrt(2.0) * _quarter_root(kl),
        lb_thm3=-math.log1p(-(mmd_sup * mmd_sup) / 4.0),
        ub_thm3=math.log1p(mmd_l2_q * mmd_l2_q),
    )

    checks = {
        "alpha_at_least_one": (1.0, alpha),
        "beta_pq_at_most_one": (beta_pq, 1.0),
        "sup_mmd_lower": (report.lb_thm1, mmd_sup),
        "sup_mmd_upper": (mmd_sup, report.ub_thm1),
        "tv_pinsker_lower": (tv_lower, tv),
        "tv_pinsker_upper": (tv, tv_upper),
        "l2q_mmd_lower": (report.lb_thm2, mmd_l2_q),
        "l2pq_mmd_upper": (mmd_l2_pq, report.ub_thm2),
        "l2count_mmd_lower": (pinsker_coef * kl / math.sqrt(k), mmd_l2_counting),
        "l2count_mmd_upper": (mmd_l2_counting, math.sqrt(2.0 * beta) * _quarter_root(kl)),
        "kl_bracket_lower": (report.lb_thm3, kl),
        "kl_bracket_upper": (kl, report.ub_thm3),
        "qmin_sup_mmd_lower": (q_min * kl, mmd_sup),
        "qmin_l2count_mmd_lower": (2.0 * q_min / math.sqrt(k) * kl, mmd_l2_counting),
        "l2count_mmd_upper_beta1": (mmd_l2_counting, math.sqrt(2.0) * _quarter_root(kl)),
    }
    for name, (lhs, rhs) in checks.items():
        margin = rhs - lhs
        report.margins[name] = margin
        if margin < -slack:
            report.violations.append({"check": name, "lhs": lhs, "rhs": rhs, "margin": margin})
    return report


def random_pair(rng: np.random.Generator, k: int, floor: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Two Dirichlet(1, ..., 1) vectors with entries floored at ``floor`` and renormalized."""
    out = []
    for _ in range(2):
        v = np.maximum(rng.dirichlet(np.ones(k)), floor)
        out.append(v / v.sum())
    return out[0], out[1]


def run_suite(
    n_pairs: int = 1000, k_min: int = 2, k_max: int = 10, seed: int = 0, kl_bias: float = 0.0
) -> dict:
    """Randomized ``verify_chain`` over Dirichlet pairs; returns pass counts and worst margins."""
    if n_pairs < 1 or k_min < 2 or k_max < k_min:
        raise InputError("need n_pairs >= 1 and 2 <= k_min <= k_max")
    rng = np.random.default_rng(seed)
    passes: dict[str, int] = {}
    worst: dict[str, float] = {}
    failures = []
    for i in range(n_pairs):
        k = int(rng.integers(k_min, k_max + 1))
        p, q = random_pair(rng, k)
        report = verify_chain(p, q, kl_bias=kl_bias)
        for name, margin in report.margins.items():
            passes[name] = passes.get(name, 0) + (margin >= -CHAIN_SLACK)
            worst[name] = min(worst.get(name, math.inf), margin)
        if not report.all_hold:
            failures.append({"index": i, "k": k, "violations": report.violations})
    return {
        "pairs": n_pairs,
        "seed": seed,
        "alphabet_range": [k_min, k_max],
        "pairs_all_hold": n_pairs - len(failures),
        "pass_counts": passes,
        "worst_margins": worst,
        "failures": failures,
        "all_hold": not failures,
    }
