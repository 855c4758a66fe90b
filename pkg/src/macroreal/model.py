"""SpinModel: Hamiltonian, observable, initial state and measurement times.

Models round-trip through plain dicts (the JSON model config)::

    {"dim": 2,
     "hamiltonian": "spin_x" | "spin1" | "cyclic5" | {"re": [[..]], "im": [[..]]},
     "hamiltonian_scale": 1.0,
     "observable": {"type": "basis", "label": 2} | {"type": "case", "case": 6} | ...,
     "state": {"type": "bloch", "v": [..]} | {"type": "gellmann", "a": [..]} | ...,
     "times": [0.0, 3.14159, ...]}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, InvalidSpec, MacrorealError
from .numerics import check_hermitian
from .observables import (
    DichotomicObservable,
    TrichotomicTriple,
    basis_ket,
    case_observable,
    cyclic_hamiltonian_5,
    dichotomic_double,
    dichotomic_explicit,
    dichotomic_single,
    heisenberg,
    spin1_dichotomic,
    spin1_hamiltonian,
    spin_x_hamiltonian,
    trichotomic_spin1,
)
from .states import (
    DensityMatrix,
    bloch_state,
    gellmann_state,
    maximally_mixed,
    pure_density,
    pure_state,
    validate_density,
)


@dataclass(frozen=True)
class SpinModel:
    hamiltonian: np.ndarray = field(repr=False)
    observable: DichotomicObservable | TrichotomicTriple
    initial: DensityMatrix
    times: tuple[float, ...]
    config: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian)
        object.__setattr__(self, "hamiltonian", h)
        dims = {h.shape[-1], self.observable.dim, self.initial.dim}
        if len(dims) != 1:
            raise DimMismatch(f"component dimensions disagree: {sorted(dims)}")
        times = tuple(float(t) for t in self.times)
        if not all(np.isfinite(times)):
            raise InvalidSpec("times must be finite")
        object.__setattr__(self, "times", times)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[-1]

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def trichotomic(self) -> bool:
        return isinstance(self.observable, TrichotomicTriple)

    def evolved(self, var: str = "Q") -> np.ndarray:
        """Heisenberg operators at every model time, shape ``(n, d, d)``."""
        if self.trichotomic:
            op = self.observable.members()[var]
        elif var == "Q":
            op = self.observable.matrix
        else:
            raise InvalidSpec(f"dichotomic model has no variable {var!r}")
        return heisenberg(op, self.hamiltonian, np.asarray(self.times))

    def with_times(self, times) -> "SpinModel":
        cfg = None
        if self.config is not None:
            cfg = copy.deepcopy(self.config)
            cfg["times"] = [float(t) for t in times]
        return SpinModel(self.hamiltonian, self.observable, self.initial, tuple(times), cfg)


def _matrix(obj) -> np.ndarray:
    return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)


def _ket(obj, dim: int) -> np.ndarray:
    if isinstance(obj, int):
        return basis_ket(obj, dim)
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
    return np.asarray(obj, dtype=complex)


def build_hamiltonian(spec, dim: int, scale: float = 1.0) -> np.ndarray:
    if spec == "spin_x":
        h = spin_x_hamiltonian(dim)
    elif spec == "spin1":
        h = spin1_hamiltonian()
    elif spec == "cyclic5":
        h = cyclic_hamiltonian_5()
    elif isinstance(spec, dict):
        h = _matrix(spec)
    else:
        raise InvalidSpec(f"unknown hamiltonian {spec!r}")
    return scale * h


def build_observable(spec, dim: int):
    kind = spec.get("type")
    if kind == "sigma_z":
        return dichotomic_explicit(np.diag([1.0, -1.0]))
    if kind == "basis":
        return dichotomic_single(basis_ket(int(spec["label"]), dim))
    if kind == "case":
        return case_observable(int(spec["case"]))
    if kind == "single":
        return dichotomic_single(_ket(spec["a"], dim))
    if kind == "double":
        return dichotomic_double(_ket(spec["a"], dim), _ket(spec["b"], dim))
    if kind == "diag":
        return dichotomic_explicit(np.diag(np.asarray(spec["values"], dtype=float)))
    if kind == "spin1_dichotomic":
        return spin1_dichotomic()
    if kind == "explicit":
        return dichotomic_explicit(_matrix(spec))
    if kind == "trichotomic_spin1":
        return trichotomic_spin1()
    raise InvalidSpec(f"unknown observable type {kind!r}")


def build_state(spec, dim: int) -> DensityMatrix:
    kind = spec.get("type")
    if kind == "bloch":
        return bloch_state(spec["v"])
    if kind == "gellmann":
        return gellmann_state(spec["a"])
    if kind == "pure_case":
        ket = pure_state(int(spec["case"]), spec["angles"], dim)
        return pure_density(ket, {"type": "pure_case", "params": spec})
    if kind == "ket":
        return pure_density(_ket(spec, dim), {"type": "ket"})
    if kind == "matrix":
        return validate_density(_matrix(spec))
    if kind == "mixed":
        return maximally_mixed(dim)
    raise InvalidSpec(f"unknown state type {kind!r}")


def model_from_config(cfg: dict) -> SpinModel:
    """Build a model from a JSON-style config; errors name the offending field."""
    try:
        dim = int(cfg["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"model config: bad or missing field 'dim' ({exc})") from None
    parts = {}
    for name, builder in (
        ("hamiltonian", lambda s: build_hamiltonian(s, dim, float(cfg.get("hamiltonian_scale", 1.0)))),
        ("observable", lambda s: build_observable(s, dim)),
        ("state", lambda s: build_state(s, dim)),
    ):
        if name not in cfg:
            raise InvalidSpec(f"model config: missing field {name!r}")
        try:
            parts[name] = builder(cfg[name])
        except MacrorealError as exc:
            raise type(exc)(f"model config field {name!r}: {exc}") from None
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidSpec(f"model config field {name!r}: {exc!r}") from None
    if "times" not in cfg:
        raise InvalidSpec("model config: missing field 'times'")
    try:
        times = tuple(float(t) for t in cfg["times"])
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"model config field 'times': {exc}") from None
    return SpinModel(parts["hamiltonian"], parts["observable"], parts["state"], times, copy.deepcopy(cfg))
