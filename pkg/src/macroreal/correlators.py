"""Temporal correlators and macrorealism data sets.

Three independent routes to the same numbers:

* nested anticommutators, ``2^(1-m) <{Q_1,{Q_2,...{Q_m-1,Q_m}}}>``
  (:func:`corr1` .. :func:`corr4`, :func:`correlator_table`);
* explicit sequential projective measurement with Lüders collapse
  (:func:`seq_probs`), used as the oracle for the first route;
* overlap formulas for ``Q = 1 - 2|v><v|`` type observables
  (:func:`overlap_correlators`).

Data set entries are keyed by tuples of ``(variable, time_label)`` factors
with 1-based, strictly increasing time labels, e.g. ``(("Q", 1), ("R", 3))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import BadProjectors, DimMismatch, InvalidSpec, MissingData, NotNormalized
from .numerics import TOL, anticomm, as_cmatrix, dagger, expval

Key = tuple[tuple[str, int], ...]

ORDER_KIND = {1: "avg", 2: "C", 3: "D", 4: "E"}
KIND_ORDER = {v: k for k, v in ORDER_KIND.items()}
RANGE_TOL = 1e-9


def key(*times: int, vars: Iterable[str] | None = None) -> Key:
    """``key(1, 3)`` -> ``(("Q", 1), ("Q", 3))``; ``vars`` overrides the letters."""
    vars = tuple(vars) if vars is not None else ("Q",) * len(times)
    if len(vars) != len(times):
        raise ValueError("vars and times differ in length")
    return tuple(zip(vars, (int(t) for t in times)))


def key_label(k: Key, kind: str = "dichotomic") -> str:
    if kind == "dichotomic":
        return ",".join(str(t) for _, t in k)
    return ",".join(f"{v}{t}" for v, t in k)


def parse_key_label(text: str) -> Key:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part[:1].isalpha():
            out.append((part[0].upper(), int(part[1:])))
        else:
            out.append(("Q", int(part)))
    return tuple(out)


def expand(k: Key) -> list[tuple[float, Key]]:
    """Rewrite a correlator containing S factors in terms of Q and R ones.

    Uses ``S = -1 - Q - R`` factor by factor (correlators are multilinear);
    a ``1`` factor simply drops out of the product.
    """
    for pos, (var, t) in enumerate(k):
        if var == "S":
            rest = k[:pos] + k[pos + 1 :]
            out = []
            for coef, sub in expand(rest):
                out.append((-coef, sub))
            for repl in ("Q", "R"):
                for coef, sub in expand(k[:pos] + ((repl, t),) + k[pos + 1 :]):
                    out.append((-coef, sub))
            return out
    return [(1.0, k)]


@dataclass(frozen=True)
class MRDataset:
    """Averages and correlators measured at ``n`` times.

    ``subset`` is ``"full"`` (every available pair) or ``"cycle"``, in which
    case ``cycle`` lists the time labels around the cycle and only its edges
    carry second-order correlators.
    """

    n: int
    values: Mapping[Key, float]
    kind: str = "dichotomic"
    subset: str = "full"
    cycle: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("dichotomic", "trichotomic"):
            raise InvalidSpec(f"unknown dataset kind {self.kind!r}")
        if self.subset not in ("full", "cycle"):
            raise InvalidSpec(f"unknown subset tag {self.subset!r}")
        vals = {}
        for k, v in self.values.items():
            k = tuple((str(var), int(t)) for var, t in k)
            times = [t for _, t in k]
            if not k or any(not 1 <= t <= self.n for t in times) or times != sorted(set(times)):
                raise InvalidSpec(f"bad key {k} for n = {self.n}")
            if self.kind == "dichotomic" and any(var != "Q" for var, _ in k):
                raise InvalidSpec(f"dichotomic dataset with non-Q key {k}")
            v = float(v)
            if not abs(v) <= 1 + RANGE_TOL:
                raise InvalidSpec(f"entry {k} = {v} outside [-1, 1]")
            vals[k] = v
        object.__setattr__(self, "values", vals)
        if self.subset == "cycle":
            if self.cycle is None or sorted(self.cycle) != list(range(1, self.n + 1)):
                raise InvalidSpec("cycle subset needs a cycle visiting every time once")
            edges = {tuple(sorted(e)) for e in self.cycle_edges()}
            for k in vals:
                if len(k) == 2 and tuple(t for _, t in k) not in edges:
                    raise InvalidSpec(f"pair {k} is not an edge of cycle {self.cycle}")
            object.__setattr__(self, "cycle", tuple(int(c) for c in self.cycle))

    def cycle_edges(self) -> list[tuple[int, int]]:
        c = list(self.cycle)
        return [(c[i], c[(i + 1) % len(c)]) for i in range(len(c))]

    def __contains__(self, k) -> bool:
        return all(not sub or sub in self.values for _, sub in expand(tuple(k)))

    def value(self, k: Key) -> float:
        """Entry for ``k``; S-containing keys are derived from Q/R entries."""
        total = 0.0
        for coef, sub in expand(tuple(k)):
            if not sub:
                total += coef
                continue
            if sub not in self.values:
                raise MissingData(f"dataset lacks entry {key_label(sub, 'trichotomic')}")
            total += coef * self.values[sub]
        return total

    def _order(self, m: int) -> dict:
        return {
            tuple(t for _, t in k): v
            for k, v in self.values.items()
            if len(k) == m and all(var == "Q" for var, _ in k)
        }

    @property
    def averages(self) -> dict:
        return {t[0]: v for t, v in self._order(1).items()}

    @property
    def c2(self) -> dict:
        return self._order(2)

    @property
    def c3(self) -> dict:
        return self._order(3)

    @property
    def c4(self) -> dict:
        return self._order(4)

    def rows(self) -> list[tuple[str, str, float]]:
        order = sorted(self.values, key=lambda k: (len(k), [t for _, t in k], [v for v, _ in k]))
        return [(ORDER_KIND[len(k)], key_label(k, self.kind), self.values[k]) for k in order]

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "kind": self.kind,
            "subset": self.subset,
            "entries": [{"kind": kd, "indices": idx, "value": v} for kd, idx, v in self.rows()],
        }
        if self.cycle is not None:
            out["cycle"] = list(self.cycle)
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_rows(cls, n, rows, kind="dichotomic", subset="full", cycle=None, meta=None) -> "MRDataset":
        values = {}
        for kd, idx, v in rows:
            k = parse_key_label(str(idx))
            if kd in KIND_ORDER and KIND_ORDER[kd] != len(k):
                raise InvalidSpec(f"row kind {kd!r} does not match indices {idx!r}")
            values[k] = float(v)
        return cls(int(n), values, kind, subset, tuple(cycle) if cycle else None, meta or {})

    @classmethod
    def from_json(cls, obj: dict) -> "MRDataset":
        for name in ("n", "entries"):
            if name not in obj:
                raise InvalidSpec(f"dataset JSON missing field {name!r}")
        rows = [(e["kind"], e["indices"], e["value"]) for e in obj["entries"]]
        return cls.from_rows(
            obj["n"], rows, obj.get("kind", "dichotomic"), obj.get("subset", "full"),
            obj.get("cycle"), obj.get("meta"),
        )


def _rho(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho), dtype=complex)


def nested(ops: list) -> np.ndarray:
    """``2^(1-m) {A_1,{A_2,...{A_m-1,A_m}}}`` for operators ordered earliest first."""
    acc = as_cmatrix(ops[-1])
    for op in reversed(ops[:-1]):
        acc = 0.5 * anticomm(op, acc)
    return acc


def corr1(rho, q_i):
    return expval(_rho(rho), q_i)


def corr2(rho, q_i, q_j):
    return expval(_rho(rho), nested([q_i, q_j]))


def corr3(rho, q_i, q_j, q_k):
    return expval(_rho(rho), nested([q_i, q_j, q_k]))


def corr4(rho, q_i, q_j, q_k, q_l):
    return expval(_rho(rho), nested([q_i, q_j, q_k, q_l]))


def correlator_table(rho, ops: Mapping[str, np.ndarray], orders: Iterable[int], pairs=None):
    """All correlators of the requested orders, batched.

    ``ops`` maps a variable letter to Heisenberg operators of shape
    ``(..., n, d, d)``; ``rho`` has shape ``(..., d, d)``. Mixed-variable keys
    are produced for every letter combination (only second order is mixed
    in practice). Returns ``(keys, values)`` with ``values.shape == (..., len(keys))``.
    """
    rho = _rho(rho)
    letters = list(ops)
    n = next(iter(ops.values())).shape[-3]
    cache: dict[Key, np.ndarray] = {}

    def op_for(k: Key) -> np.ndarray:
        if k not in cache:
            var, t = k[0]
            head = ops[var][..., t - 1, :, :]
            cache[k] = head if len(k) == 1 else 0.5 * anticomm(head, op_for(k[1:]))
        return cache[k]

    keys = []
    for m in sorted(set(orders)):
        if m < 1 or m > 4:
            raise InvalidSpec(f"correlator order must be 1..4, got {m}")
        subsets = itertools.combinations(range(1, n + 1), m)
        if m == 2 and pairs is not None:
            subsets = sorted(tuple(sorted(p)) for p in pairs)
        for times in subsets:
            for vs in itertools.product(letters, repeat=m) if m <= 2 else [("Q",) * m]:
                keys.append(key(*times, vars=vs))
    values = np.stack([np.einsum("...ij,...ji->...", rho, op_for(k)).real for k in keys], axis=-1)
    return keys, values


def dataset_from_model(model, include_orders=(1, 2), cycle=None) -> MRDataset:
    """Exact data set of a :class:`~macroreal.model.SpinModel`.

    Dichotomic models may request orders up to 4. Trichotomic models produce
    first and second order Q/R entries; S entries are derived on access.
    ``cycle`` restricts the pairs to the edges of a cycle of time labels.
    """
    orders = set(include_orders)
    if not orders <= {1, 2, 3, 4}:
        raise InvalidSpec(f"orders must be a subset of 1..4, got {sorted(orders)}")
    if model.trichotomic:
        if orders - {1, 2}:
            raise InvalidSpec("trichotomic data sets hold first and second order entries only")
        ops = {"Q": model.evolved("Q"), "R": model.evolved("R")}
        kind = "trichotomic"
    else:
        ops = {"Q": model.evolved("Q")}
        kind = "dichotomic"
    pairs = None
    if cycle is not None:
        c = list(cycle)
        pairs = [(c[i], c[(i + 1) % len(c)]) for i in range(len(c))]
    keys, vals = correlator_table(model.initial.matrix, ops, orders, pairs)
    return MRDataset(
        model.n,
        dict(zip(keys, vals.tolist())),
        kind,
        "cycle" if cycle is not None else "full",
        tuple(cycle) if cycle is not None else None,
    )


@dataclass(frozen=True)
class JointProbabilityTable:
    """Sequential-measurement outcome probabilities, one axis per time."""

    probs: np.ndarray = field(repr=False)
    outcomes: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != len(self.outcomes) or p.shape != tuple(len(o) for o in self.outcomes):
            raise InvalidSpec("table shape does not match outcome labels")
        if p.min() < -1e-12 or abs(p.sum() - 1) > TOL:
            raise BadProjectors(f"invalid probability table (min {p.min():.3e}, sum {p.sum():.12g})")
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return self.probs.ndim

    def marginal(self, keep: Iterable[int]) -> "JointProbabilityTable":
        """Marginal over the 0-based time axes not in ``keep``."""
        keep = sorted(keep)
        drop = tuple(i for i in range(self.n) if i not in keep)
        return JointProbabilityTable(self.probs.sum(axis=drop), tuple(self.outcomes[i] for i in keep))

    def correlator(self, axes: Iterable[int] | None = None) -> float:
        """``sum s_a s_b ... p`` over the given axes (default: all)."""
        axes = list(range(self.n)) if axes is None else sorted(axes)
        m = self.marginal(axes)
        weights = np.ones(m.probs.shape)
        for ax, vals in enumerate(m.outcomes):
            shape = [1] * m.n
            shape[ax] = len(vals)
            weights = weights * np.asarray(vals, dtype=float).reshape(shape)
        return float((weights * m.probs).sum())


def check_projectors(projs, dim: int) -> list[np.ndarray]:
    projs = [as_cmatrix(p) for p in projs]
    eye = np.eye(dim)
    if any(p.shape != (dim, dim) for p in projs):
        raise DimMismatch("projector dimension does not match state")
    for p in projs:
        if np.max(np.abs(p - dagger(p))) > TOL or np.max(np.abs(p @ p - p)) > TOL:
            raise BadProjectors("operator is not an orthogonal projector")
    if np.max(np.abs(sum(projs) - eye)) > TOL:
        raise BadProjectors("projectors do not sum to identity")
    return projs


def dichotomic_projectors(q) -> tuple[list[np.ndarray], tuple[float, float]]:
    q = as_cmatrix(getattr(q, "matrix", q))
    eye = np.eye(q.shape[-1])
    return [(eye + q) / 2, (eye - q) / 2], (1.0, -1.0)


def seq_probs(rho, projector_sets, outcomes=None) -> JointProbabilityTable:
    """Probabilities of outcome strings for successive projective measurements.

    ``projector_sets[i]`` is the complete set of (Heisenberg-picture)
    projectors measured at the i-th time; after each outcome the state is
    collapsed with the Lüders rule. Outcome values default to ``+1, -1`` for
    two-element sets and ``0, 1, 2, ...`` otherwise.
    """
    rho = _rho(rho)
    dim = rho.shape[-1]
    sets = [check_projectors(ps, dim) for ps in projector_sets]
    if outcomes is None:
        outcomes = tuple((1.0, -1.0) if len(ps) == 2 else tuple(float(i) for i in range(len(ps))) for ps in sets)
    branches = rho[None]
    for ps in sets[:-1]:
        stacked = np.stack(ps)
        branches = np.einsum("aij,bjk,akl->bail", stacked, branches, stacked)
        branches = branches.reshape(-1, dim, dim)
    last = np.stack(sets[-1])
    p = np.einsum("aij,bji->ba", last, branches).real
    p = p.reshape(tuple(len(ps) for ps in sets))
    return JointProbabilityTable(np.clip(p, 0.0, None) if p.min() > -1e-12 else p, tuple(outcomes))


def seq_correlator(rho, ops) -> float:
    """``sum prod(s) p`` from the sequential-measurement table of ``ops`` (earliest first)."""
    sets = [dichotomic_projectors(q)[0] for q in ops]
    return seq_probs(rho, sets).correlator()


def _unit_rows(vs, name) -> np.ndarray:
    vs = np.atleast_2d(np.asarray(vs, dtype=complex))
    norms = np.linalg.norm(vs, axis=-1)
    if np.max(np.abs(norms - 1)) > TOL:
        raise NotNormalized(f"{name} vectors must be unit norm (norms {np.round(norms, 12)})")
    return vs


def overlap_correlators(psi, v_list, u_list=None) -> MRDataset:
    """Averages and pair correlators for ``Q_i = 1 - 2|v_i><v_i| [- 2|u_i><u_i|]``.

    Computed purely from inner products, independent of any Hamiltonian.
    """
    psi = _unit_rows(psi, "state")[0]
    vs = _unit_rows(v_list, "v")
    groups = [vs]
    if u_list is not None:
        us = _unit_rows(u_list, "u")
        if us.shape != vs.shape:
            raise InvalidSpec("u_list must match v_list in shape")
        groups.append(us)
    n = vs.shape[0]
    amp = [g.conj() @ psi for g in groups]  # <x_i|psi>
    gram = {(a, b): groups[a].conj() @ groups[b].T for a in range(len(groups)) for b in range(len(groups))}
    weight = sum(np.abs(a) ** 2 for a in amp)
    values = {}
    for i in range(1, n + 1):
        values[key(i)] = 1 - 2 * weight[i - 1]
    for i, j in itertools.combinations(range(1, n + 1), 2):
        c = 1 - 2 * weight[i - 1] - 2 * weight[j - 1]
        for a in range(len(groups)):
            for b in range(len(groups)):
                # <psi|x_i><x_i|y_j><y_j|psi>
                c += 4 * (np.conj(amp[a][i - 1]) * gram[a, b][i - 1, j - 1] * amp[b][j - 1]).real
        values[key(i, j)] = c
    return MRDataset(n, values)
