"""Measurement operators, spin Hamiltonians and Heisenberg evolution.

Times are dimensionless (``omega * t``); Hamiltonians are returned in units of
``omega``. Basis kets of the sigma_z basis are labelled ``1..N`` in the public
API, matching the case table below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadCase, BadDim, DimMismatch, NotDichotomic, NotNormalized, NotOrthogonal
from .numerics import TOL, as_cmatrix, check_hermitian, dagger, evolve_unitary, herm_eig

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)

# case id -> (dim, sigma_z basis labels of the projected kets)
CASES = {
    1: (2, (1,)),
    2: (2, (2,)),
    3: (3, (1,)),
    4: (3, (2,)),
    5: (3, (3,)),
    6: (4, (1,)),
    7: (4, (2,)),
    8: (4, (3,)),
    9: (4, (4,)),
    10: (4, (1, 2)),
    11: (4, (1, 3)),
    12: (4, (1, 4)),
    13: (4, (2, 3)),
    14: (4, (2, 4)),
    15: (4, (3, 4)),
}


def basis_ket(label: int, dim: int) -> np.ndarray:
    if not 1 <= label <= dim:
        raise BadDim(f"basis label {label} outside 1..{dim}")
    ket = np.zeros(dim, dtype=complex)
    ket[label - 1] = 1.0
    return ket


def spin_x_hamiltonian(dim: int) -> np.ndarray:
    """Spin-j x generator ``S_x`` for ``dim = 2j + 1`` (so ``H = omega S_x``).

    Rows are ordered ``m = j, j-1, ..., -j``. The eigenvalues are the spin
    projections, e.g. ``+-3/2, +-1/2`` for ``dim = 4``.
    """
    if dim not in (2, 3, 4, 5):
        raise BadDim(f"spin Hamiltonian dimension must be 2..5, got {dim}")
    j = (dim - 1) / 2
    m = j - np.arange(dim - 1) - 1
    off = 0.5 * np.sqrt(j * (j + 1) - m * (m + 1))
    return (np.diag(off, 1) + np.diag(off, -1)).astype(complex)


def spin1_hamiltonian() -> np.ndarray:
    """The three-level Hamiltonian used by the spin-1 dichotomic/trichotomic models.

    This is ``sigma_x / 2`` with the three-level Pauli matrix
    ``sigma_x = [[0,1,0],[1,0,1],[0,1,0]] / sqrt(2)`` (eigenvalues ``-1, 0, 1``),
    i.e. half of :func:`spin_x_hamiltonian` for ``dim = 3``.
    """
    return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / (2 * SQ2)


def sigma_x3() -> np.ndarray:
    return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQ2


@dataclass(frozen=True)
class EigenKet:
    label: str
    energy: float
    vector: np.ndarray = field(repr=False)


def eigenbasis(dim: int) -> list[EigenKet]:
    """Fixed-phase eigenkets of :func:`spin_x_hamiltonian`.

    Ordered as in the pure-state parameterization: highest projection first.
    The phases are the ones the closed-form overlap tables are written in, which
    differ from :func:`~macroreal.numerics.herm_eig`'s convention for ``dim = 4``.
    """
    if dim == 2:
        return [
            EigenKet("+", 0.5, np.array([1, 1]) / SQ2 + 0j),
            EigenKet("-", -0.5, np.array([1, -1]) / SQ2 + 0j),
        ]
    if dim == 3:
        return [
            EigenKet("+", 1.0, np.array([1, SQ2, 1]) / 2 + 0j),
            EigenKet("0", 0.0, np.array([1, 0, -1]) / SQ2 + 0j),
            EigenKet("-", -1.0, np.array([1, -SQ2, 1]) / 2 + 0j),
        ]
    if dim == 4:
        c = 1 / (2 * SQ2)
        return [
            EigenKet("+3", 1.5, c * np.array([1, SQ3, SQ3, 1]) + 0j),
            EigenKet("+1", 0.5, c * np.array([-SQ3, -1, 1, SQ3]) + 0j),
            EigenKet("-1", -0.5, c * np.array([SQ3, -1, -1, SQ3]) + 0j),
            EigenKet("-3", -1.5, c * np.array([-1, SQ3, -SQ3, 1]) + 0j),
        ]
    raise BadDim(f"tabulated eigenbasis only for dim 2..4, got {dim}")


def cyclic_hamiltonian_5() -> np.ndarray:
    """Five-level Hamiltonian whose unit-time evolution cycles the basis.

    ``exp(-i H) |e_{k+1}> = |e_k>`` (indices mod 5); eigenvalues ``2 pi k / 5``.
    """
    n = np.arange(1, 6)
    h = np.zeros((5, 5), dtype=complex)
    for k in range(5):
        f = np.exp(-2j * np.pi * k * n / 5) / np.sqrt(5)
        h += (2 * np.pi * k / 5) * np.outer(f, f.conj())
    return 0.5 * (h + dagger(h))


def cycle_unitary_5() -> np.ndarray:
    u = np.zeros((5, 5), dtype=complex)
    for i in range(5):
        u[i, (i + 1) % 5] = 1.0
    return u


def _unit(ket, name="ket") -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).ravel()
    norm = np.linalg.norm(ket)
    if abs(norm - 1) > TOL:
        raise NotNormalized(f"{name} has norm {norm:.12g}, expected 1")
    return ket


@dataclass(frozen=True)
class DichotomicObservable:
    """Hermitian operator with eigenvalues +-1."""

    matrix: np.ndarray = field(repr=False)
    construction: str = "explicit"
    kets: tuple = field(default=(), repr=False)

    def __post_init__(self):
        m = check_hermitian(self.matrix)
        err = np.max(np.abs(m @ m - np.eye(m.shape[-1])))
        if err > TOL:
            raise NotDichotomic(f"Q^2 != 1 (max deviation {err:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[-1]

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(self.dim)
        return (eye + self.matrix) / 2, (eye - self.matrix) / 2


def dichotomic_single(a_ket) -> DichotomicObservable:
    """``Q = 1 - 2|A><A|``."""
    a = _unit(a_ket, "|A>")
    q = np.eye(a.size) - 2 * np.outer(a, a.conj())
    return DichotomicObservable(q, "single_projector", (a,))


def dichotomic_double(a_ket, b_ket) -> DichotomicObservable:
    """``Q = 1 - 2|A><A| - 2|B><B|`` for orthonormal ``|A>, |B>``."""
    a = _unit(a_ket, "|A>")
    b = _unit(b_ket, "|B>")
    if a.size != b.size:
        raise DimMismatch("|A> and |B> have different dimensions")
    ov = abs(np.vdot(a, b))
    if ov > TOL:
        raise NotOrthogonal(f"|<A|B>| = {ov:.3e}")
    q = np.eye(a.size) - 2 * np.outer(a, a.conj()) - 2 * np.outer(b, b.conj())
    return DichotomicObservable(q, "two_projector", (a, b))


def dichotomic_explicit(matrix) -> DichotomicObservable:
    return DichotomicObservable(as_cmatrix(matrix), "explicit")


def case_observable(case_id: int) -> DichotomicObservable:
    if case_id not in CASES:
        raise BadCase(f"unknown case {case_id}; cases are 1..15")
    dim, labels = CASES[case_id]
    kets = [basis_ket(lab, dim) for lab in labels]
    return dichotomic_single(*kets) if len(kets) == 1 else dichotomic_double(*kets)


def spin1_dichotomic() -> DichotomicObservable:
    """``diag(-1, 1, -1)``, which anticommutes with the spin-1 Hamiltonian."""
    return DichotomicObservable(np.diag([-1.0, 1.0, -1.0]).astype(complex), "explicit")


@dataclass(frozen=True)
class TrichotomicTriple:
    """Three dichotomic operators with ``q + r + s = -1``."""

    q: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)

    def __post_init__(self):
        eye = np.eye(self.q.shape[-1])
        for name in "qrs":
            m = check_hermitian(getattr(self, name))
            if np.max(np.abs(m @ m - eye)) > TOL:
                raise NotDichotomic(f"{name}^2 != 1")
        if np.max(np.abs(self.q + self.r + self.s + eye)) > 1e-12:
            raise NotDichotomic("q + r + s != -1")

    @property
    def dim(self) -> int:
        return self.q.shape[-1]

    @property
    def matrix(self) -> np.ndarray:
        # the standard-data-set variable is Q
        return self.q

    def members(self) -> dict[str, np.ndarray]:
        return {"Q": self.q, "R": self.r, "S": self.s}


def trichotomic_spin1() -> TrichotomicTriple:
    """Q, R, S built from the eigenkets of the three-level Hamiltonian.

    With ``|A> = (|E+> - |E->)/sqrt2``, ``|B> = (|E+> + |E->)/sqrt2``,
    ``|C> = |E0>`` each operator is ``-(1 - 2|X><X|)``, so it has two ``-1``
    eigenvalues. S commutes with H; Q and R anticommute with it.
    """
    ep, e0, em = (k.vector for k in eigenbasis(3))
    proj = lambda x, y: np.outer(x, y.conj())  # noqa: E731
    q = -proj(e0, e0) - proj(ep, em) - proj(em, ep)
    r = -proj(e0, e0) + proj(ep, em) + proj(em, ep)
    s = proj(e0, e0) - proj(ep, ep) - proj(em, em)
    return TrichotomicTriple(q, r, s)


def heisenberg(obs, h, t) -> np.ndarray:
    """``exp(iHt) obs exp(-iHt)``; ``t`` may be an array of times."""
    obs = as_cmatrix(getattr(obs, "matrix", obs))
    h = check_hermitian(h)
    if obs.shape[-1] != h.shape[-1]:
        raise DimMismatch(f"observable dim {obs.shape[-1]} vs Hamiltonian dim {h.shape[-1]}")
    u = evolve_unitary(h, t)
    return dagger(u) @ obs @ u


def v_vectors(h, a_ket, times) -> np.ndarray:
    """Evolved kets ``|v_i> = sum_n exp(-i E_n t_i) |E_n><E_n|A>``, one row per time."""
    a = _unit(a_ket, "|A>")
    values, vectors = herm_eig(h)
    if vectors.shape[0] != a.size:
        raise DimMismatch("ket and Hamiltonian dimensions differ")
    amps = vectors.conj().T @ a
    phases = np.exp(-1j * np.multiply.outer(np.asarray(times, dtype=float), values))
    return (phases * amps) @ vectors.T
