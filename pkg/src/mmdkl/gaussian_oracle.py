"""Closed-form Gaussian KL / MI and seeded Gaussian sampling for the synthetic sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .numerics import JitterPolicy, SpdFactor, half_solve, logdet, random_unitary, spd_factor


def _factor_cov(cov: np.ndarray, what: str) -> SpdFactor:
    try:
        return spd_factor(cov, JitterPolicy.none())
    except Exception as exc:
        raise InputError(f"{what} is not symmetric positive definite: {exc}") from None


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InputError(f"mean has shape {mean.shape} but cov has shape {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_factor", _factor_cov(cov, "covariance"))

    @classmethod
    def isotropic(cls, dim: int, mean_value: float = 0.0, variance: float = 1.0) -> "GaussianSpec":
        return cls(np.full(dim, float(mean_value)), variance * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def factor(self) -> SpdFactor:
        return self._factor


@dataclass(frozen=True, eq=False)
class JointGaussianSpec:
    """Zero-mean joint Gaussian of ``(X, Y)`` with covariance ``[[Sx, Sxy], [Sxy^T, Sy]]``."""

    cov_x: np.ndarray
    cov_y: np.ndarray
    cross: np.ndarray
    epsilon: Optional[float] = None
    unitary_seed: Optional[int] = None

    def __post_init__(self):
        cov_x = np.atleast_2d(np.asarray(self.cov_x, dtype=float))
        cov_y = np.atleast_2d(np.asarray(self.cov_y, dtype=float))
        cross = np.atleast_2d(np.asarray(self.cross, dtype=float))
        if cross.shape != (cov_x.shape[0], cov_y.shape[0]):
            raise InputError(
                f"cross block has shape {cross.shape}, expected {(cov_x.shape[0], cov_y.shape[0])}"
            )
        object.__setattr__(self, "cov_x", cov_x)
        object.__setattr__(self, "cov_y", cov_y)
        object.__setattr__(self, "cross", cross)
        object.__setattr__(self, "_factor", _factor_cov(self.joint_cov, "joint covariance"))

    @classmethod
    def unitary_cross(cls, dim: int, epsilon: float, unitary_seed: int) -> "JointGaussianSpec":
        """Identity marginals with cross block ``epsilon * U``, ``U`` Haar-orthogonal."""
        if not abs(epsilon) < 1.0:
            raise InputError(f"|epsilon| must be < 1 for identity marginals, got {epsilon!r}")
        u = random_unitary(dim, unitary_seed)
        return cls(np.eye(dim), np.eye(dim), epsilon * u, float(epsilon), int(unitary_seed))

    @property
    def dim_x(self) -> int:
        return self.cov_x.shape[0]

    @property
    def dim_y(self) -> int:
        return self.cov_y.shape[0]

    @property
    def joint_cov(self) -> np.ndarray:
        return np.block([[self.cov_x, self.cross], [self.cross.T, self.cov_y]])


def kl_gaussian(p: GaussianSpec, q: GaussianSpec) -> float:
    """``KL(N(mu_p, S_p) || N(mu_q, S_q))`` via Cholesky factors."""
    if p.dim != q.dim:
        raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
    lq = q.factor
    # tr(S_q^{-1} S_p) = ||L_q^{-1} L_p||_F^2
    w = half_solve(lq, p.factor.lower)
    trace_term = float(np.sum(w * w))
    z = half_solve(lq, p.mean - q.mean)
    maha = float(np.dot(z, z))
    value = 0.5 * (logdet(lq) - logdet(p.factor) + trace_term + maha - p.dim)
    return max(value, 0.0)


def mi_gaussian(joint: JointGaussianSpec) -> float:
    """``I(X; Y) = 0.5 log(det Sy / det(Sy - Sxy^T Sx^{-1} Sxy))``."""
    fx = _factor_cov(joint.cov_x, "cov_x")
    fy = _factor_cov(joint.cov_y, "cov_y")
    w = half_solve(fx, joint.cross)
    schur = joint.cov_y - w.T @ w
    schur = 0.5 * (schur + schur.T)
    fs = _factor_cov(schur, "Schur complement of the joint covariance")
    return max(0.5 * (logdet(fy) - logdet(fs)), 0.0)


def mi_unitary_closed_form(dim: int, epsilon: float) -> float:
    """``-(dim / 2) log(1 - epsilon^2)``, the MI for identity marginals and cross ``epsilon * U``."""
    return -0.5 * dim * math.log1p(-epsilon * epsilon)


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise InputError(f"sample count must be a positive integer, got {n!r}")
    return int(n)


def sample_gaussian(spec: GaussianSpec, n: int, seed: int) -> np.ndarray:
    n = _check_n(n)
    z = np.random.default_rng(seed).standard_normal((n, spec.dim))
    return spec.mean + z @ spec.factor.lower.T


def sample_joint_gaussian(joint: JointGaussianSpec, n: int, seed: int) -> np.ndarray:
    """Rows are ``(x, y)`` with the X-block in the first ``dim_x`` columns."""
    n = _check_n(n)
    dim = joint.dim_x + joint.dim_y
    z = np.random.default_rng(seed).standard_normal((n, dim))
    return z @ joint._factor.lower.T
