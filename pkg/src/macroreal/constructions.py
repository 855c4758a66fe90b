"""Analytic equal-overlap models with maximal pentagon violation.

Five measurement kets ``|v_i>`` with a common pairwise overlap ``alpha`` give
equal correlators. Two variants:

* five-level: the kets are rotated towards the centre ``|u>`` of an
  orthonormal basis, the state is ``|u>``; at ``alpha = 3/8`` every ``C_ij`` is
  ``-1/4`` and every ``<Q_i>`` is ``0``. A cyclic Hamiltonian realizes the
  five kets as one ket evolved over unit time steps.
* four-level: four rotated kets plus their normalized sum, which is also the
  state; at ``alpha = 1/6`` every correlator is ``-1/4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlators import MRDataset, overlap_correlators
from .model import SpinModel
from .observables import cyclic_hamiltonian_5, dichotomic_single
from .states import pure_density


def overlap_n5(theta, phi):
    return 0.75 * np.sin(theta) ** 2 + 0.5 * np.sin(2 * theta) * np.cos(2 * phi)


def overlap_n4(theta, phi):
    return (2 / 3) * np.sin(theta) ** 2 + np.sin(2 * theta) * np.cos(2 * phi) / np.sqrt(3)


OVERLAP_FORMS = {5: overlap_n5, 4: overlap_n4}


def rotated_kets(theta: float, phi: float, m: int) -> np.ndarray:
    """Rows ``e^{i phi} cos(theta) e_i + c e^{-i phi} sin(theta) sum_{j != i} e_j`` in ``m`` dims.

    ``c = 1/sqrt(m - 1)`` keeps each ket normalized (``1/2`` for ``m = 5``).
    """
    c = 1 / np.sqrt(m - 1)
    off = c * np.exp(-1j * phi) * np.sin(theta)
    return off * (np.ones((m, m)) - np.eye(m)) + np.exp(1j * phi) * np.cos(theta) * np.eye(m)


@dataclass(frozen=True)
class Construction:
    n_dim: int
    alpha: float
    theta: float
    phi: float
    psi: np.ndarray = field(repr=False)
    kets: np.ndarray = field(repr=False)
    dataset: MRDataset = field(repr=False)

    def to_json(self) -> dict:
        return {
            "dim": self.n_dim,
            "alpha": self.alpha,
            "theta": self.theta,
            "phi": self.phi,
            "psi": {"re": self.psi.real.tolist(), "im": self.psi.imag.tolist()},
            "kets": {"re": self.kets.real.tolist(), "im": self.kets.imag.tolist()},
        }


def construction_n5(alpha: float = 3 / 8) -> Construction:
    from .search import solve_alpha

    theta, phi = solve_alpha(alpha, 5)
    kets = rotated_kets(theta, phi, 5)
    psi = np.ones(5, dtype=complex) / np.sqrt(5)
    ds = overlap_correlators(psi, kets)
    return Construction(5, alpha, theta, phi, psi, kets, ds)


def construction_n4(alpha: float = 1 / 6) -> Construction:
    from .search import solve_alpha

    theta, phi = solve_alpha(alpha, 4)
    others = rotated_kets(theta, phi, 4)
    v1 = others.sum(axis=0)
    v1 = v1 / np.linalg.norm(v1)
    kets = np.vstack([v1, others])
    ds = overlap_correlators(v1, kets)
    return Construction(4, alpha, theta, phi, v1, kets, ds)


def construction(n: int, alpha: float | None = None) -> Construction:
    if n == 5:
        return construction_n5(3 / 8 if alpha is None else alpha)
    if n == 4:
        return construction_n4(1 / 6 if alpha is None else alpha)
    raise ValueError(f"constructions exist for n = 4 and n = 5, not {n}")


def cyclic_realization(c: Construction) -> SpinModel:
    """Five-level construction as a Hamiltonian model: ``Q = 1 - 2|v_1><v_1|``, times ``0..4``."""
    if c.n_dim != 5:
        raise ValueError("the cyclic realization exists for the five-level construction only")
    q = dichotomic_single(c.kets[0])
    cfg = {
        "dim": 5,
        "hamiltonian": "cyclic5",
        "observable": {"type": "single", "a": {"re": c.kets[0].real.tolist(), "im": c.kets[0].imag.tolist()}},
        "state": {"type": "ket", "re": c.psi.real.tolist(), "im": c.psi.imag.tolist()},
        "times": [0.0, 1.0, 2.0, 3.0, 4.0],
    }
    return SpinModel(cyclic_hamiltonian_5(), q, pure_density(c.psi), (0.0, 1.0, 2.0, 3.0, 4.0), cfg)
