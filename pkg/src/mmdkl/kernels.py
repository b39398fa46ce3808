"""Universal kernels, Gram matrices and the kernel sup bound.

Two families are supported, both with ``k(x, x) = 1``:

* Gaussian RBF: ``exp(-gamma * ||g(x) - g(y)||^2)``
* inverse polynomial: ``(1 + ||g(x) - g(y)||^2) ** -gamma``

where ``g`` is an optional bijective affine-diagonal pre-transform.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError


class KernelFamily(str, enum.Enum):
    RBF = "rbf"
    INVERSE_POLYNOMIAL = "invpoly"


@dataclass(frozen=True)
class Transform:
    """Per-coordinate affine map ``g(x) = scale * x + offset``.

    ``Transform()`` is the identity. Scale entries must be nonzero so the
    map is a bijection, which keeps the composed kernel universal.
    """

    scale: Optional[tuple[float, ...]] = None
    offset: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        scale = None if self.scale is None else tuple(float(s) for s in self.scale)
        offset = None if self.offset is None else tuple(float(o) for o in self.offset)
        if scale is not None and offset is not None and len(scale) != len(offset):
            raise InputError(
                f"transform scale has {len(scale)} entries but offset has {len(offset)}"
            )
        if scale is not None and any(s == 0.0 or not np.isfinite(s) for s in scale):
            raise InputError("transform scale entries must be finite and nonzero")
        if offset is not None and not all(np.isfinite(o) for o in offset):
            raise InputError("transform offset entries must be finite")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "offset", offset)

    @property
    def is_identity(self) -> bool:
        return self.scale is None and self.offset is None

    @property
    def dim(self) -> Optional[int]:
        if self.scale is not None:
            return len(self.scale)
        if self.offset is not None:
            return len(self.offset)
        return None

    def apply(self, samples: np.ndarray) -> np.ndarray:
        if self.is_identity:
            return samples
        if samples.shape[1] != self.dim:
            raise InputError(
                f"transform expects dimension {self.dim}, samples have {samples.shape[1]}"
            )
        out = samples
        if self.scale is not None:
            out = out * np.asarray(self.scale)
        if self.offset is not None:
            out = out + np.asarray(self.offset)
        return out


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    gamma: float
    pre_transform: Transform = Transform()

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        gamma = float(self.gamma)
        if not (gamma > 0.0 and np.isfinite(gamma)):
            raise InputError(f"kernel gamma must be a positive finite number, got {self.gamma!r}")
        object.__setattr__(self, "gamma", gamma)
        if self.pre_transform is None:
            object.__setattr__(self, "pre_transform", Transform())

    @classmethod
    def rbf(cls, gamma: float, pre_transform: Optional[Transform] = None) -> "KernelSpec":
        return cls(KernelFamily.RBF, gamma, pre_transform or Transform())

    @classmethod
    def inverse_polynomial(
        cls, gamma: float, pre_transform: Optional[Transform] = None
    ) -> "KernelSpec":
        return cls(KernelFamily.INVERSE_POLYNOMIAL, gamma, pre_transform or Transform())

    @property
    def label(self) -> str:
        tag = f"{self.family.value}(gamma={self.gamma:g})"
        if not self.pre_transform.is_identity:
            tag += "+affine"
        return tag

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "gamma": self.gamma}
        if not self.pre_transform.is_identity:
            out["scale"] = self.pre_transform.scale
            out["offset"] = self.pre_transform.offset
        return out

    def from_sq_dists(self, sq_dists: np.ndarray) -> np.ndarray:
        """Kernel values given squared distances between (transformed) points."""
        if self.family is KernelFamily.RBF:
            return np.exp(-self.gamma * sq_dists)
        return (1.0 + sq_dists) ** (-self.gamma)


def as_samples(data, name: str = "samples") -> np.ndarray:
    """Validate and return a 2-D float array with one sample per row.

    A 1-D input is read as ``m`` scalar samples.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array (samples x dimensions), got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} is empty (shape {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def _as_point(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"{name} must be a vector")
    return arr


def eval_kernel(spec: KernelSpec, x, y) -> float:
    x = _as_point(x, "x")
    y = _as_point(y, "y")
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    gx = spec.pre_transform.apply(x[None, :])[0]
    gy = spec.pre_transform.apply(y[None, :])[0]
    diff = gx - gy
    return float(spec.from_sq_dists(np.dot(diff, diff)))


def sq_dists(spec_or_transform, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances after the pre-transform."""
    transform = (
        spec_or_transform.pre_transform
        if isinstance(spec_or_transform, KernelSpec)
        else spec_or_transform
    )
    left = as_samples(left, "left")
    right = as_samples(right, "right")
    if left.shape[1] != right.shape[1]:
        raise InputError(
            f"dimension mismatch: left has {left.shape[1]} columns, right has {right.shape[1]}"
        )
    return cdist(transform.apply(left), transform.apply(right), "sqeuclidean")


def gram(spec: KernelSpec, left, right) -> np.ndarray:
    """Dense Gram matrix ``G[i, j] = k(left[i], right[j])``."""
    return spec.from_sq_dists(sq_dists(spec, left, right))


def sup_bound(spec: KernelSpec, domain_hint=None) -> float:
    """``M(k) = max_x k(x, x)``, which is 1 for both supported families on any domain."""
    # k(x, x) = k'(g(x), g(x)) = 1 for RBF and inverse polynomial alike
    return 1.0


def rbf_family(gammas: Sequence[float]) -> tuple[KernelSpec, ...]:
    return tuple(KernelSpec.rbf(g) for g in gammas)


DEFAULT_GAMMA_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)
