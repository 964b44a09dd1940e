"""ALD center dictionary: kernel Gram matrix and its recursively updated inverse.

The dictionary holds the ordered centers c_1..c_K admitted so far, the Gram
matrix G[i, j] = k(c_i, c_j), and G^-1 maintained incrementally via the
block-inverse identity, so admission tests cost O(K^2) instead of O(K^3).

A Dictionary is a single-writer value: `grow` needs exclusive access, while
`ald_test` and `kernel_vector` are read-only.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .base import as_input
from .exceptions import (
    NearSingularGrowthError,
    NumericalError,
    ValidationError,
)
from .kernels import KernelSpec, gram as full_gram, kernel_eval, kernel_vector

# Residuals below this cannot be admitted: the inverse update divides by d2.
GROWTH_FLOOR = 1e-12


@dataclass(frozen=True)
class AldResult:
    """Outcome of the approximate-linear-dependency test for one input.

    `a` solves G a = h for the current Gram matrix G and kernel vector
    h_i = k(c_i, u); `d2` is the squared residual of approximating the
    feature vector of u by the span of the current centers, clamped to 0
    (the raw value is kept in `d2_raw`). `admitted` is d2 > delta.
    """

    a: np.ndarray
    d2: float
    h: np.ndarray
    admitted: bool
    d2_raw: float


class Dictionary:
    """Ordered center set with incrementally maintained Gram inverse."""

    def __init__(self, spec: KernelSpec, first_center):
        c = as_input(first_center)
        k11 = kernel_eval(spec, c, c)
        if not np.isfinite(k11) or k11 <= GROWTH_FLOOR:
            raise ValidationError(
                f"degenerate first center: k(u, u) = {k11!r} is not invertible"
            )
        self.spec = spec
        self.gram = np.array([[k11]])
        self.gram_inv = np.array([[1.0 / k11]])
        self._centers = np.empty((4, c.shape[0]))
        self._centers[0] = c
        self._size = 1

    @property
    def size(self) -> int:
        return self._size

    @property
    def dim(self) -> int:
        return self._centers.shape[1]

    @property
    def centers(self) -> np.ndarray:
        """Read-only (K, L) view of the admitted centers, in admission order."""
        view = self._centers[: self._size]
        view.flags.writeable = False
        return view

    def kernel_vector(self, u: np.ndarray) -> np.ndarray:
        """h_i = k(c_i, u) against every stored center."""
        return kernel_vector(self.spec, self._centers[: self._size], u)

    def ald_test(self, u, delta: float) -> AldResult:
        """Test whether u's feature vector is within residual `delta` of the span.

        Does not mutate the dictionary. Raises NumericalError when the
        maintained Gram inverse produces non-finite results (ill-conditioned
        Gram matrix), reporting a condition-number diagnostic.
        """
        uu = as_input(u, dim=self.dim)
        if np.isnan(delta) or delta < 0:
            raise ValidationError(f"delta must be a nonnegative real, got {delta!r}")
        h = self.kernel_vector(uu)
        a = self.gram_inv @ h
        d2_raw = float(kernel_eval(self.spec, uu, uu) - h @ a)
        if not (np.isfinite(d2_raw) and np.all(np.isfinite(a))):
            cond = float(np.linalg.cond(self.gram))
            raise NumericalError(
                f"ALD test produced non-finite values; Gram matrix is "
                f"ill-conditioned (cond ~ {cond:.3e}, size {self._size})"
            )
        d2 = max(d2_raw, 0.0)
        return AldResult(a=a, d2=d2, h=h, admitted=d2 > delta, d2_raw=d2_raw)

    def grow(self, u, ald: AldResult) -> None:
        """Admit u as a new center, extending the Gram matrix and its inverse.

        Requires an admitted AldResult computed against the current contents.
        Refuses near-singular extensions (d2 below GROWTH_FLOOR) before any
        mutation, so a raised error leaves the dictionary untouched.
        """
        uu = as_input(u, dim=self.dim)
        if not ald.admitted:
            raise ValidationError("grow requires an admitted ALD result")
        k = self._size
        if ald.a.shape[0] != k:
            raise ValidationError(
                f"stale ALD result: computed for size {ald.a.shape[0]}, dictionary has {k}"
            )
        if ald.d2 < GROWTH_FLOOR:
            raise NearSingularGrowthError(
                f"refusing near-singular dictionary extension: d2 = {ald.d2:.3e} "
                f"< {GROWTH_FLOOR:.0e}"
            )

        a, h, d2 = ald.a, ald.h, ald.d2
        kuu = kernel_eval(self.spec, uu, uu)

        new_gram = np.empty((k + 1, k + 1))
        new_gram[:k, :k] = self.gram
        new_gram[:k, k] = h
        new_gram[k, :k] = h
        new_gram[k, k] = kuu

        # Block-inverse of [[G, h], [h^T, kuu]] with Schur complement d2,
        # reusing a = G^-1 h from the admission test.
        new_inv = np.empty((k + 1, k + 1))
        new_inv[:k, :k] = self.gram_inv + np.outer(a, a) / d2
        new_inv[:k, k] = -a / d2
        new_inv[k, :k] = -a / d2
        new_inv[k, k] = 1.0 / d2

        if k == self._centers.shape[0]:
            bigger = np.empty((2 * k, self._centers.shape[1]))
            bigger[:k] = self._centers
            self._centers = bigger
        self._centers[k] = uu
        self.gram = new_gram
        self.gram_inv = new_inv
        self._size = k + 1

    # -- serialization ----------------------------------------------------

    def centers_checksum(self) -> str:
        c = np.ascontiguousarray(self._centers[: self._size])
        digest = hashlib.sha256()
        digest.update(repr(c.shape).encode())
        digest.update(c.tobytes())
        return digest.hexdigest()

    def to_snapshot(self, store_matrices: bool = False) -> dict:
        snap = {
            "kernel": self.spec.to_json(),
            "centers": self._centers[: self._size].tolist(),
            "centers_sha256": self.centers_checksum(),
        }
        if store_matrices:
            snap["gram"] = self.gram.tolist()
            snap["gram_inv"] = self.gram_inv.tolist()
        return snap

    @classmethod
    def from_snapshot(cls, snap: dict) -> "Dictionary":
        """Rebuild from a snapshot; Gram matrices are recomputed unless stored.

        The stored center checksum is always verified.
        """
        spec = KernelSpec.from_json(snap["kernel"])
        centers = np.asarray(snap["centers"], dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] == 0:
            raise ValidationError("snapshot centers must be a nonempty list of vectors")
        d = cls(spec, centers[0])
        d._centers = np.ascontiguousarray(centers)
        d._size = centers.shape[0]
        want = snap.get("centers_sha256")
        if want is not None and d.centers_checksum() != want:
            raise ValidationError("snapshot center checksum mismatch")
        if "gram" in snap and "gram_inv" in snap:
            d.gram = np.asarray(snap["gram"], dtype=np.float64)
            d.gram_inv = np.asarray(snap["gram_inv"], dtype=np.float64)
        else:
            d.gram = full_gram(spec, centers)
            d.gram_inv = np.linalg.inv(d.gram)
        resid = np.linalg.norm(d.gram @ d.gram_inv - np.eye(d._size), ord=np.inf)
        if not resid <= 1e-8:
            raise NumericalError(
                f"snapshot Gram inverse fails the identity check (residual {resid:.3e})"
            )
        return d
