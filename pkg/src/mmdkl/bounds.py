"""KL-divergence bounds from MMD statistics, and mutual-information proxies.

For ``P`` absolutely continuous w.r.t. ``Q`` with continuous density ratio::

    -log(1 - MMD_inf^2 / 4) <= KL(P || Q) <= log(MMD_2q^2 + 1)

where ``MMD_inf`` is the discrepancy over the sup-norm unit ball and
``MMD_2q`` the one over the ``L^2(Q)`` unit ball. The sample-based
statistics of :mod:`mmdkl.estimators` stand in for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .estimators import EstimatorConfig, MmdStatistics, estimate
from .kernels import as_samples

MMD_MAX = 2.0
SATURATION_RTOL = 1e-12
MMD_OVERSHOOT = 1e-9


def _is_saturated(mmd: float) -> bool:
    return mmd >= MMD_MAX * (1.0 - SATURATION_RTOL)


def kl_lower_from_mmd(mmd: float) -> float:
    """``-log(1 - mmd^2 / 4)``; ``math.inf`` once ``mmd`` reaches 2."""
    mmd = float(mmd)
    if not (0.0 <= mmd <= MMD_MAX + MMD_OVERSHOOT):
        raise InputError(f"sup-norm MMD must lie in [0, 2], got {mmd!r}")
    mmd = min(mmd, MMD_MAX)
    if _is_saturated(mmd):
        return math.inf
    return -math.log1p(-(mmd * mmd) / 4.0)


def kl_upper_from_mmd_sq(mmd_sq: float) -> float:
    mmd_sq = float(mmd_sq)
    if not mmd_sq >= 0.0:
        raise InputError(f"squared MMD must be non-negative, got {mmd_sq!r}")
    return math.log1p(mmd_sq)


def tv_bounds_from_kl(kl: float, alpha: float) -> tuple[float, float]:
    """Two-sided bounds on ``sum |p - q|`` given KL and ``alpha = max dP/dQ``."""
    kl, alpha = float(kl), float(alpha)
    if not kl >= 0.0:
        raise InputError(f"KL must be non-negative, got {kl!r}")
    if not alpha >= 1.0:
        raise InputError(f"alpha must be >= 1, got {alpha!r}")
    if abs(alpha - 1.0) < 1e-9:
        coef = 2.0
    else:
        coef = (2.0 - 2.0 / alpha) / math.log(alpha)
    return coef * kl, 2.0 * math.sqrt(-math.expm1(-kl))


@dataclass(frozen=True)
class BoundEstimate:
    kl_lower: float
    kl_upper: float
    stats: MmdStatistics
    lb_scale: float = 1.0
    notes: tuple[str, ...] = ()

    @property
    def lb_saturated(self) -> bool:
        return "lb_saturated" in self.notes

    def to_dict(self) -> dict:
        return {
            "kl_lower": "inf" if math.isinf(self.kl_lower) else self.kl_lower,
            "kl_upper": self.kl_upper,
            "lb_scale": self.lb_scale,
            "notes": list(self.notes),
            "stats": self.stats.to_dict(),
        }


def bounds_from_stats(stats: MmdStatistics, lb_scale: float = 1.0) -> BoundEstimate:
    if not (lb_scale > 0.0 and math.isfinite(lb_scale)):
        raise InputError(f"lb_scale must be positive, got {lb_scale!r}")
    notes = []
    scaled = min(lb_scale * stats.lb_statistic, MMD_MAX)
    kl_lower = kl_lower_from_mmd(scaled)
    if math.isinf(kl_lower):
        notes.append("lb_saturated")
    if lb_scale != 1.0:
        notes.append("lb_scaled")
    if stats.clamped:
        notes.append("clamped")
    if stats.jitter_applied > 0.0:
        notes.append("jitter")
    return BoundEstimate(
        kl_lower=kl_lower,
        kl_upper=kl_upper_from_mmd_sq(stats.ub_statistic_sq),
        stats=stats,
        lb_scale=float(lb_scale),
        notes=tuple(notes),
    )


def kl_bounds(config: EstimatorConfig, x, y, lb_scale: float = 1.0) -> BoundEstimate:
    """Estimated lower and upper bounds on ``KL(p || q)`` from ``X ~ p``, ``Y ~ q``.

    These bound the population divergence; at finite ``n`` and positive
    ``lambda`` the upper estimate can land below the true value.
    """
    return bounds_from_stats(estimate(config, x, y), lb_scale)


@dataclass(frozen=True)
class ClassBound:
    label: int
    weight: float
    estimate: BoundEstimate


@dataclass(frozen=True)
class MiProxy:
    mi_lower: float
    mi_upper: float
    mode: str
    per_class: Optional[tuple[ClassBound, ...]] = None
    estimates: tuple[BoundEstimate, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "mi_lower": "inf" if math.isinf(self.mi_lower) else self.mi_lower,
            "mi_upper": self.mi_upper,
            "mode": self.mode,
        }
        if self.per_class is not None:
            out["per_class"] = [
                {"label": c.label, "weight": c.weight, "estimate": c.estimate.to_dict()}
                for c in self.per_class
            ]
        else:
            out["estimates"] = [e.to_dict() for e in self.estimates]
        return out


def product_marginal_sample(joint: np.ndarray, split_index: int, rng: np.random.Generator):
    """Pair the X-block with a row-permuted Y-block (derangement not enforced)."""
    perm = rng.permutation(joint.shape[0])
    return np.hstack([joint[:, :split_index], joint[perm, split_index:]])


def mi_bounds_continuous(
    joint,
    split_index: int,
    seed: int,
    config: EstimatorConfig = EstimatorConfig(),
    lb_scale: float = 1.0,
    n_permutations: int = 1,
) -> MiProxy:
    """MI proxy: KL bounds between the joint sample and a product-of-marginals sample.

    With ``n_permutations > 1`` the bounds are averaged over independent
    permutations drawn from the same seeded generator.
    """
    joint = as_samples(joint, "joint")
    n, dim = joint.shape
    if not (1 <= split_index < dim):
        raise InputError(f"split_index must lie in [1, {dim - 1}], got {split_index}")
    if n < 4:
        raise InputError(f"need at least 4 joint samples, got {n}")
    if n_permutations < 1:
        raise InputError("n_permutations must be >= 1")
    rng = np.random.default_rng(seed)
    estimates = tuple(
        kl_bounds(config, joint, product_marginal_sample(joint, split_index, rng), lb_scale)
        for _ in range(n_permutations)
    )
    return MiProxy(
        mi_lower=float(np.mean([e.kl_lower for e in estimates])),
        mi_upper=float(np.mean([e.kl_upper for e in estimates])),
        mode="continuous_joint",
        estimates=estimates,
    )


def mi_bounds_discrete(
    x,
    labels: Sequence[int],
    config: EstimatorConfig = EstimatorConfig(),
    lb_scale: float = 1.0,
) -> MiProxy:
    """MI proxy for a discrete label: class-conditional vs pooled marginal, weighted by frequency."""
    x = as_samples(x, "X")
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != x.shape[0]:
        raise InputError(f"labels must be a vector of length {x.shape[0]}")
    classes, counts = np.unique(labels, return_counts=True)
    for label, count in zip(classes, counts):
        if count < 2:
            raise InputError(f"class {label.item()!r} has a single sample; need at least 2 per class")

    total = int(counts.sum())
    per_class = []
    lower_acc, upper_acc = 0.0, 0.0
    for label, count in zip(classes, counts):
        est = kl_bounds(config, x[labels == label], x, lb_scale)
        per_class.append(ClassBound(label=label.item(), weight=int(count) / total, estimate=est))
        lower_acc += int(count) * est.kl_lower
        upper_acc += int(count) * est.kl_upper
    return MiProxy(
        mi_lower=lower_acc / total,
        mi_upper=upper_acc / total,
        mode="discrete_conditional",
        per_class=tuple(per_class),
    )
