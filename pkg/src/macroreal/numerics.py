"""Dense complex matrix kernel for small (dim <= 5) Hermitian problems.

All functions accept stacked arrays (``(..., d, d)``) where that makes sense,
so batches of random instances can be processed without Python loops.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, NotHermitian

TOL = 1e-10


class EigenSystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_cmatrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimMismatch(f"expected square matrix, got shape {a.shape}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_error(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def check_hermitian(a, tol: float = TOL) -> np.ndarray:
    a = as_cmatrix(a)
    err = hermiticity_error(a)
    if err > tol:
        raise NotHermitian(f"matrix not Hermitian: max|a - a^dag| = {err:.3e} > {tol:g}")
    return a


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    # rotate each column so its first non-negligible component is real positive
    mags = np.abs(vectors)
    first = np.argmax(mags > 1e-12 * mags.max(axis=-2, keepdims=True), axis=-2)
    pivot = np.take_along_axis(vectors, first[..., None, :], axis=-2)
    phase = pivot / np.abs(pivot)
    return vectors / phase


def herm_eig(a) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix (or stack of them).

    Eigenvalues come back ascending. Each eigenvector has its first nonzero
    component made real and positive so repeated runs give identical output.
    """
    a = check_hermitian(a)
    h = 0.5 * (a + dagger(a))
    values, vectors = np.linalg.eigh(h)
    return EigenSystem(values, _fix_phases(vectors))


def evolve_unitary(h, t) -> np.ndarray:
    """``exp(-i h t)`` built from the eigendecomposition of ``h``.

    ``t`` may be an array; the result then gains leading axes of ``t``'s shape.
    """
    values, vectors = herm_eig(h)
    t = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(t, values))
    return (vectors * phases[..., None, :]) @ dagger(vectors)


def anticomm(a, b) -> np.ndarray:
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[-1] != b.shape[-1]:
        raise DimMismatch(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    return a @ b + b @ a


def expval(rho, a) -> np.ndarray | float:
    """``Re tr(rho a)``; broadcasts over leading axes."""
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    a = as_cmatrix(a)
    if rho.shape[-1] != a.shape[-1]:
        raise DimMismatch(f"dimension mismatch: state {rho.shape[-1]} vs operator {a.shape[-1]}")
    val = np.einsum("...ij,...ji->...", rho, a).real
    return float(val) if np.ndim(val) == 0 else val


def is_unitary(u, tol: float = TOL) -> bool:
    u = as_cmatrix(u)
    eye = np.eye(u.shape[-1])
    return bool(np.max(np.abs(dagger(u) @ u - eye)) <= tol)
