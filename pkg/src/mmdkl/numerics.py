"""Dense SPD factorization, solves, and a seeded random-orthogonal generator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal-jitter escalation for near-singular SPD matrices.

    ``auto=False`` means factor as-is. With ``auto=True`` the plain matrix is
    tried first, then ``base * 10**t`` for ``t = 0 .. max_tries - 1``. A
    ``base`` of ``None`` resolves to ``1e-12 * trace(A) / dim``.
    """

    auto: bool = True
    max_tries: int = 6
    base: Optional[float] = None

    @classmethod
    def none(cls) -> "JitterPolicy":
        return cls(auto=False)


@dataclass(frozen=True, eq=False)
class SpdFactor:
    lower: np.ndarray
    jitter_applied: float = 0.0

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def _check_symmetric(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise InputError("matrix is not symmetric")


def _cholesky(a: np.ndarray) -> Optional[np.ndarray]:
    try:
        return scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None


def spd_factor(a, jitter_policy: JitterPolicy = JitterPolicy()) -> SpdFactor:
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    lower = _cholesky(a)
    if lower is not None:
        return SpdFactor(lower, 0.0)
    if not jitter_policy.auto:
        raise NumericalError("matrix is not positive definite")

    n = a.shape[0]
    base = jitter_policy.base
    if base is None:
        base = 1e-12 * np.trace(a) / n
    if not base > 0.0:
        # zero or negative trace: no meaningful relative scale
        base = 1e-12
    jitter = base
    eye = np.eye(n)
    for t in range(jitter_policy.max_tries):
        jitter = base * 10.0**t
        lower = _cholesky(a + jitter * eye)
        if lower is not None:
            return SpdFactor(lower, float(jitter))
    err = NumericalError(
        f"Cholesky factorization failed after {jitter_policy.max_tries} jitter attempts "
        f"(last jitter {jitter:.3e})"
    )
    err.last_jitter = jitter
    raise err


def _as_rhs(factor: SpdFactor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.dim:
        raise InputError(f"dimension mismatch: factor is {factor.dim}, vector has {b.shape[0]}")
    return b


def spd_solve(factor: SpdFactor, b) -> np.ndarray:
    """Solve ``(A + jitter I) x = b`` with two triangular solves."""
    b = _as_rhs(factor, b)
    return scipy.linalg.cho_solve((factor.lower, True), b, check_finite=False)


def half_solve(factor: SpdFactor, v) -> np.ndarray:
    """Solve ``L y = v`` for the lower factor ``L``."""
    v = _as_rhs(factor, v)
    return scipy.linalg.solve_triangular(factor.lower, v, lower=True, check_finite=False)


def quadratic_form(v, factor: SpdFactor) -> float:
    """``v^T (A + jitter I)^{-1} v``, computed as ``||L^{-1} v||^2``."""
    y = half_solve(factor, v)
    value = float(np.dot(y, y))
    return max(value, 0.0)


def logdet(factor: SpdFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor.lower))))


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed real orthogonal matrix, deterministic in ``seed``.

    QR of a standard-normal matrix, with each column of Q multiplied by the
    sign of the matching diagonal entry of R.
    """
    if int(dim) != dim or dim < 1:
        raise InputError(f"dim must be a positive integer, got {dim!r}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(dim), int(dim)))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs
