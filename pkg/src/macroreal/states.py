"""Initial states: Bloch qubits, Gell-Mann qutrits and eigenbasis pure states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadCase, InvalidBloch, InvalidState, NotHermitian, NotPSD, TraceNotOne
from .numerics import TOL, as_cmatrix, dagger, hermiticity_error
from .observables import CASES, eigenbasis

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

ANGLE_NAMES = {
    2: ("theta", "phi"),
    3: ("theta", "alpha", "phi1", "phi2"),
    4: ("theta", "alpha", "beta", "phi1", "phi2", "phi3"),
}


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray = field(repr=False)
    provenance: dict | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[-1]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }
        if self.provenance is not None:
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if m.shape != (obj["dim"], obj["dim"]):
            raise InvalidState(f"matrix shape {m.shape} does not match dim {obj['dim']}")
        return validate_density(m, provenance=obj.get("provenance"))


def validate_density(m, provenance: dict | None = None) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity; report every failure."""
    m = as_cmatrix(m)
    violations = []
    herr = hermiticity_error(m)
    if herr > TOL:
        violations.append(("NotHermitian", herr))
    terr = abs(np.trace(m) - 1)
    if terr > TOL:
        violations.append(("TraceNotOne", float(terr)))
    lam_min = float(np.linalg.eigvalsh(0.5 * (m + dagger(m))).min())
    if lam_min < -TOL:
        violations.append(("NotPSD", -lam_min))
    if violations:
        msg = "; ".join(f"{name} (magnitude {mag:.3e})" for name, mag in violations)
        kind = violations[0][0]
        if kind == "NotHermitian":
            err = NotHermitian(f"invalid density matrix: {msg}")
            err.violations = violations
            raise err
        cls = TraceNotOne if kind == "TraceNotOne" else NotPSD
        raise cls(f"invalid density matrix: {msg}", violations)
    return DensityMatrix(0.5 * (m + dagger(m)), provenance)


def bloch_state(v) -> DensityMatrix:
    """``rho = (I + v . sigma) / 2``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise InvalidBloch(f"Bloch vector must have 3 components, got shape {v.shape}")
    if v @ v > 1 + 1e-12:
        raise InvalidBloch(f"|v|^2 = {v @ v:.6g} exceeds 1")
    m = 0.5 * (np.eye(2) + sum(c * p for c, p in zip(v, PAULI)))
    return validate_density(m, {"type": "bloch", "params": v.tolist()})


def gellmann_matrix(a) -> np.ndarray:
    a1, a2, a3, a4, a5, a6, a7, a8 = np.asarray(a, dtype=float)
    r3 = np.sqrt(3.0)
    return np.array(
        [
            [1 / 3 + a3 + a8 / r3, a1 - 1j * a2, a4 - 1j * a5],
            [a1 + 1j * a2, 1 / 3 - a3 + a8 / r3, a6 - 1j * a7],
            [a4 + 1j * a5, a6 + 1j * a7, 1 / 3 - 2 * a8 / r3],
        ]
    )


def gellmann_state(a) -> DensityMatrix:
    """Three-level state from eight real parameters.

    Bounds: ``a . a <= 1/3`` and ``det(rho) >= 0``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (8,):
        raise InvalidState(f"need 8 Gell-Mann parameters, got shape {a.shape}")
    violations = []
    if a @ a > 1 / 3 + 1e-12:
        violations.append(("norm", float(a @ a - 1 / 3)))
    m = gellmann_matrix(a)
    det = float(np.linalg.det(m).real)
    if det < -TOL:
        violations.append(("det", -det))
    if violations:
        raise InvalidState(
            "Gell-Mann parameters out of bounds: "
            + ", ".join(f"{k} exceeded by {v:.3e}" for k, v in violations),
            violations,
        )
    return validate_density(m, {"type": "gellmann", "params": a.tolist()})


def pure_state(case_id: int, angles: dict, dim: int | None = None, basis: str = "z") -> np.ndarray:
    """Pure state from the eigenbasis angle parameterization.

    ``angles`` holds ``theta`` and, depending on the dimension, ``alpha``,
    ``beta``, ``phi`` / ``phi1..phi3`` (radians, any real value). The returned
    ket has components ``<E_n|psi>`` when ``basis="eigen"``, otherwise it is
    expressed in the sigma_z basis.
    """
    if case_id not in CASES:
        raise BadCase(f"unknown case {case_id}")
    case_dim = CASES[case_id][0]
    if dim is not None and dim != case_dim:
        raise BadCase(f"case {case_id} is a {case_dim}-level case, not {dim}")
    dim = case_dim
    g = {k: float(np.mod(v, 2 * np.pi)) for k, v in angles.items()}
    th = g.get("theta", 0.0)
    if dim == 2:
        bra = [np.cos(th), np.exp(1j * g.get("phi", 0.0)) * np.sin(th)]
    elif dim == 3:
        al = g.get("alpha", 0.0)
        bra = [
            np.cos(th),
            np.exp(1j * g.get("phi1", 0.0)) * np.sin(th) * np.cos(al),
            np.exp(1j * g.get("phi2", 0.0)) * np.sin(th) * np.sin(al),
        ]
    else:
        al, be = g.get("alpha", 0.0), g.get("beta", 0.0)
        bra = [
            np.cos(th),
            np.exp(1j * g.get("phi1", 0.0)) * np.sin(th) * np.cos(al),
            np.exp(1j * g.get("phi2", 0.0)) * np.sin(th) * np.sin(al) * np.cos(be),
            np.exp(1j * g.get("phi3", 0.0)) * np.sin(th) * np.sin(al) * np.sin(be),
        ]
    # table entries are <psi|E_n>; the ket's eigen-components are their conjugates
    coeffs = np.conj(np.asarray(bra, dtype=complex))
    if basis == "eigen":
        return coeffs
    vecs = np.stack([k.vector for k in eigenbasis(dim)], axis=1)
    return vecs @ coeffs


def pure_density(ket, provenance: dict | None = None) -> DensityMatrix:
    ket = np.asarray(ket, dtype=complex).ravel()
    norm = np.linalg.norm(ket)
    if abs(norm - 1) > TOL:
        raise InvalidState(f"ket norm {norm:.12g} != 1", [("norm", abs(norm - 1))])
    return validate_density(np.outer(ket, ket.conj()), provenance)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim, {"type": "mixed"})
