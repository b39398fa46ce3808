"""Plug-in MMD statistics computed from Gram matrices.

Everything here works in Gram coordinates: the empirical mean embeddings and
the regularized second-moment operator of the ``q`` sample are never formed
explicitly. The regularized inverse is reduced to one ``n x n`` SPD solve
through the Woodbury identity::

    (lam I + Phi Phi^T / n)^{-1} = I / lam - Phi (n lam I + K_qq)^{-1} Phi^T / lam
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NumericalError
from .kernels import DEFAULT_GAMMA_GRID, KernelSpec, as_samples, rbf_family, sq_dists, sup_bound
from .numerics import JitterPolicy, quadratic_form, spd_factor

MMD_CLAMP = 1e-12
UB_CLAMP = 1e-9


def _clamp(raw: float, slack: float, what: str) -> tuple[float, bool]:
    if raw >= 0.0:
        return raw, False
    if raw >= -slack:
        return 0.0, True
    raise NumericalError(f"{what} is {raw:.3e}, below the round-off slack -{slack:g}")


def _check_grams(gram_pp, gram_qq, gram_pq) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gram_pp, gram_qq, gram_pq = (np.asarray(g, dtype=float) for g in (gram_pp, gram_qq, gram_pq))
    m, n = gram_pq.shape if gram_pq.ndim == 2 else (-1, -1)
    if gram_pp.shape != (m, m) or gram_qq.shape != (n, n) or m < 1 or n < 1:
        raise InputError(
            f"inconsistent Gram shapes: pp {gram_pp.shape}, qq {gram_qq.shape}, pq {gram_pq.shape}"
        )
    return gram_pp, gram_qq, gram_pq


def _mmd_sq_with_flag(gram_pp, gram_qq, gram_pq) -> tuple[float, bool]:
    gram_pp, gram_qq, gram_pq = _check_grams(gram_pp, gram_qq, gram_pq)
    m, n = gram_pq.shape
    raw = gram_pp.sum() / m**2 + gram_qq.sum() / n**2 - 2.0 * gram_pq.sum() / (m * n)
    return _clamp(float(raw), MMD_CLAMP, "plug-in MMD^2")


def mmd_sq_plugin(gram_pp, gram_qq, gram_pq) -> float:
    """Squared RKHS distance between the two empirical mean embeddings (V-statistic)."""
    return _mmd_sq_with_flag(gram_pp, gram_qq, gram_pq)[0]


def _ub_from_grams(
    gram_qq: np.ndarray, gram_pq: np.ndarray, mmd_sq: float, lam: float
) -> tuple[float, bool, float]:
    """Regularized ``C_2(q)`` statistic from Gram blocks.

    Returns ``(value, clamped, jitter_applied)``.
    """
    if not lam > 0.0:
        raise InputError(f"lambda must be positive, got {lam!r}")
    m, n = gram_pq.shape
    theta = gram_pq.sum(axis=0) / m - gram_qq.sum(axis=1) / n
    system = gram_qq + (n * lam) * np.eye(n)
    # Gram matrices are symmetric up to the last ulp; enforce it before factoring
    system = 0.5 * (system + system.T)
    factor = spd_factor(system, JitterPolicy())
    raw = (mmd_sq - quadratic_form(theta, factor)) / lam
    value, clamped = _clamp(raw, UB_CLAMP, "upper-bound statistic")
    return value, clamped, factor.jitter_applied


def ub_statistic_sq_from_grams(gram_pp, gram_qq, gram_pq, lam: float) -> float:
    gram_pp, gram_qq, gram_pq = _check_grams(gram_pp, gram_qq, gram_pq)
    mmd_sq = mmd_sq_plugin(gram_pp, gram_qq, gram_pq)
    return _ub_from_grams(gram_qq, gram_pq, mmd_sq, float(lam))[0]


class _GramCache:
    """Squared distances per pre-transform, so a kernel grid shares one pass."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        if x.shape[1] != y.shape[1]:
            raise InputError(
                f"dimension mismatch: X has {x.shape[1]} columns, Y has {y.shape[1]}"
            )
        self.x = x
        self.y = y
        self._dists: dict = {}
        # last evaluated kernel only; n x n blocks are too large to keep a grid of them
        self._last: Optional[tuple] = None

    def grams(self, spec: KernelSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._last is not None and self._last[0] == spec:
            return self._last[1]
        key = spec.pre_transform
        if key not in self._dists:
            self._dists[key] = (
                sq_dists(key, self.x, self.x),
                sq_dists(key, self.y, self.y),
                sq_dists(key, self.x, self.y),
            )
        out = tuple(spec.from_sq_dists(d) for d in self._dists[key])
        self._last = (spec, out)
        return out


def _lb_over_family(
    family: Sequence[KernelSpec], cache: _GramCache
) -> tuple[float, KernelSpec, bool]:
    if len(family) == 0:
        raise InputError("kernel family is empty")
    best_value, best_spec, any_clamped = -math.inf, None, False
    for spec in family:
        mmd_sq, clamped = _mmd_sq_with_flag(*cache.grams(spec))
        any_clamped |= clamped
        value = math.sqrt(mmd_sq) / math.sqrt(sup_bound(spec))
        # strict comparison keeps the first maximizer
        if value > best_value:
            best_value, best_spec = value, spec
    return best_value, best_spec, any_clamped


def lb_statistic(family: Sequence[KernelSpec], x, y) -> tuple[float, KernelSpec]:
    """Largest ``||mu_p - mu_q|| / sqrt(M(k))`` over the kernel family."""
    x = as_samples(x, "X")
    y = as_samples(y, "Y")
    value, spec, _ = _lb_over_family(list(family), _GramCache(x, y))
    return value, spec


def ub_statistic_sq(kernel: KernelSpec, x, y, lam: float) -> float:
    """Estimate of the squared ``C_2(Omega, q)`` MMD with ridge ``lam``."""
    if not lam > 0.0:
        raise InputError(f"lambda must be positive, got {lam!r}")
    x = as_samples(x, "X")
    y = as_samples(y, "Y")
    gram_pp, gram_qq, gram_pq = _GramCache(x, y).grams(kernel)
    mmd_sq = mmd_sq_plugin(gram_pp, gram_qq, gram_pq)
    return _ub_from_grams(gram_qq, gram_pq, mmd_sq, float(lam))[0]


@dataclass(frozen=True)
class LambdaPolicy:
    """Ridge weight: ``fixed`` uses ``c``; ``decay`` uses ``c / sqrt(n)``."""

    kind: str = "fixed"
    c: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("fixed", "decay"):
            raise InputError(f"unknown lambda policy {self.kind!r}")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise InputError(f"lambda constant must be positive, got {self.c!r}")

    @classmethod
    def parse(cls, text) -> "LambdaPolicy":
        """Parse ``"1e-3"`` or ``"decay:0.1"``."""
        if isinstance(text, LambdaPolicy):
            return text
        if isinstance(text, (int, float)):
            return cls("fixed", float(text))
        text = str(text).strip()
        try:
            if text.startswith("decay:"):
                return cls("decay", float(text[len("decay:"):]))
            return cls("fixed", float(text))
        except ValueError:
            raise InputError(f"cannot parse lambda {text!r}; use a number or 'decay:<c>'") from None

    def resolve(self, n: int) -> float:
        if self.kind == "fixed":
            return self.c
        return self.c / math.sqrt(n)

    def __str__(self) -> str:
        return repr(self.c) if self.kind == "fixed" else f"decay:{self.c!r}"


@dataclass(frozen=True)
class EstimatorConfig:
    """Kernel grid for the lower bound, kernel for the upper bound, ridge policy.

    ``ub_kernel=None`` reuses whichever kernel maximized the lower-bound
    statistic.
    """

    family: tuple[KernelSpec, ...] = field(default_factory=lambda: rbf_family(DEFAULT_GAMMA_GRID))
    ub_kernel: Optional[KernelSpec] = None
    lambda_policy: LambdaPolicy = LambdaPolicy()

    def __post_init__(self):
        object.__setattr__(self, "family", tuple(self.family))
        if not self.family:
            raise InputError("kernel family is empty")


@dataclass(frozen=True)
class MmdStatistics:
    mmd_sq_plugin: float
    chosen_kernel: KernelSpec
    lb_statistic: float
    ub_statistic_sq: float
    ub_kernel: KernelSpec
    lambda_used: float
    m: int
    n: int
    clamped: bool = False
    jitter_applied: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mmd_sq_plugin": self.mmd_sq_plugin,
            "chosen_kernel": self.chosen_kernel.to_dict(),
            "lb_statistic": self.lb_statistic,
            "ub_statistic_sq": self.ub_statistic_sq,
            "ub_kernel": self.ub_kernel.to_dict(),
            "lambda_used": self.lambda_used,
            "m": self.m,
            "n": self.n,
            "clamped": self.clamped,
            "jitter_applied": self.jitter_applied,
        }


def estimate(config: EstimatorConfig, x, y) -> MmdStatistics:
    """Run both statistics on ``X ~ p`` (m rows) and ``Y ~ q`` (n rows)."""
    return estimate_many([config], x, y)[0]


def estimate_many(configs: Sequence[EstimatorConfig], x, y) -> list[MmdStatistics]:
    """``estimate`` for several configs on the same data, sharing pairwise distances."""
    x = as_samples(x, "X")
    y = as_samples(y, "Y")
    cache = _GramCache(x, y)
    return [_estimate_cached(config, cache) for config in configs]


def _estimate_cached(config: EstimatorConfig, cache: _GramCache) -> MmdStatistics:
    x, y = cache.x, cache.y
    lb, chosen, lb_clamped = _lb_over_family(config.family, cache)

    ub_kernel = config.ub_kernel if config.ub_kernel is not None else chosen
    gram_pp, gram_qq, gram_pq = cache.grams(ub_kernel)
    mmd_sq, mmd_clamped = _mmd_sq_with_flag(gram_pp, gram_qq, gram_pq)
    lam = config.lambda_policy.resolve(y.shape[0])
    ub, ub_clamped, jitter = _ub_from_grams(gram_qq, gram_pq, mmd_sq, lam)

    return MmdStatistics(
        mmd_sq_plugin=mmd_sq,
        chosen_kernel=chosen,
        lb_statistic=lb,
        ub_statistic_sq=ub,
        ub_kernel=ub_kernel,
        lambda_used=lam,
        m=x.shape[0],
        n=y.shape[0],
        clamped=lb_clamped or mmd_clamped or ub_clamped,
        jitter_applied=jitter,
    )
