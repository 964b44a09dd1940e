"""Mercer kernels: evaluation, Gram matrices, and expansion inner products.

Two kernel families are supported:

    gaussian     k(u, v) = exp(-||u - v||^2 / sigma^2)
    polynomial   k(u, v) = (u . v + 1)^degree

Note the Gaussian width enters as sigma^2, not the also-common 2*sigma^2
convention; callers using the latter should pass sigma * sqrt(2).

All evaluation is pure and stateless, safe for unsynchronized concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import as_input, as_points
from .exceptions import DimensionMismatchError, ValidationError

FAMILIES = ("gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its hyperparameters.

    `sigma` is the Gaussian width (same units as the input coordinates) and
    is ignored by the polynomial family; `degree` is the polynomial order
    and is ignored by the Gaussian family.
    """

    family: str
    sigma: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(
                f"kernel.family must be one of {FAMILIES}, got {self.family!r}"
            )
        if self.family == "gaussian":
            if not (np.isfinite(self.sigma) and self.sigma > 0):
                raise ValidationError("kernel.sigma must be a positive finite real")
        else:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValidationError("kernel.degree must be an integer >= 1")

    def to_json(self) -> dict:
        return {"family": self.family, "sigma": float(self.sigma), "degree": int(self.degree)}

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise ValidationError("kernel spec must be an object with a 'family' key")
        return cls(
            family=obj["family"],
            sigma=float(obj.get("sigma", 1.0)),
            degree=int(obj.get("degree", 2)),
        )


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """Evaluate k(u, v). Symmetric in its arguments; Gaussian values lie in (0, 1]."""
    uu = as_input(u)
    vv = as_input(v, dim=uu.shape[0])
    if spec.family == "gaussian":
        diff = uu - vv
        return float(np.exp(-np.dot(diff, diff) / (spec.sigma * spec.sigma)))
    return float((np.dot(uu, vv) + 1.0) ** spec.degree)


def kernel_vector(spec: KernelSpec, centers: np.ndarray, u: np.ndarray) -> np.ndarray:
    """k(c_i, u) for every row c_i of `centers`. Hot path: inputs assumed validated."""
    if spec.family == "gaussian":
        diff = centers - u
        return np.exp(-np.einsum("ij,ij->i", diff, diff) / (spec.sigma * spec.sigma))
    return (centers @ u + 1.0) ** spec.degree


def kernel_matrix(spec: KernelSpec, x, z) -> np.ndarray:
    """Cross-kernel matrix K[i, j] = k(x_i, z_j)."""
    xx = as_points(x)
    zz = as_points(z, dim=xx.shape[1])
    if spec.family == "gaussian":
        # Explicit differences keep K(x, x) exactly symmetric, which the
        # expanded ||x||^2 + ||z||^2 - 2 x.z form does not guarantee.
        diff = xx[:, None, :] - zz[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        return np.exp(-sq / (spec.sigma * spec.sigma))
    return (xx @ zz.T + 1.0) ** spec.degree


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix of a point set (PSD up to eigenvalue roundoff)."""
    pts = as_points(points)
    return kernel_matrix(spec, pts, pts)


def expansion_inner_product(spec: KernelSpec, h, g) -> float:
    """Inner product of two kernel expansions h = (coeffs, centers), g likewise.

    For h(.) = sum_i a_i k(c_i, .) and g(.) = sum_j b_j k(e_j, .) this is
    sum_ij a_i b_j k(c_i, e_j): symmetric, bilinear, and nonnegative on the
    diagonal up to roundoff.
    """
    a, ca = h
    b, cb = g
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ca = as_points(ca)
    cb = as_points(cb, dim=ca.shape[1])
    if a.ndim != 1 or a.shape[0] != ca.shape[0]:
        raise DimensionMismatchError(
            f"expansion has {ca.shape[0]} centers but {a.shape} coefficients"
        )
    if b.ndim != 1 or b.shape[0] != cb.shape[0]:
        raise DimensionMismatchError(
            f"expansion has {cb.shape[0]} centers but {b.shape} coefficients"
        )
    return float(a @ kernel_matrix(spec, ca, cb) @ b)
