"""Finite-statistics simulation of sequential projective measurements.

Outcome strings are drawn with the Born rule and Lüders collapse. Counts are
sampled branch by branch: a multinomial over the first outcome, then over the
next outcome inside each collapsed branch, so cost grows with the number of
outcome strings rather than with the number of shots.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conditions import EPS, ConditionReport, family_forms, report_from_values
from .correlators import Key, MRDataset, check_projectors, dataset_from_model, dichotomic_projectors, key_label
from .errors import BadProjectors, InvalidSpec, MissingData
from .model import SpinModel, model_from_config

SIGNIFICANT = 5.0
INCONCLUSIVE = 3.0


def _branch_counts(state, sets, shots, rng):
    """Counts of every outcome string, shape ``(k_1, ..., k_n)``."""
    ps = sets[0]
    probs = np.array([np.trace(p @ state @ p).real for p in ps])
    total = probs.sum()
    probs = np.clip(probs / total, 0.0, None)
    probs /= probs.sum()
    first = rng.multinomial(shots, probs)
    if len(sets) == 1:
        return first
    out = np.zeros((len(ps),) + tuple(len(s) for s in sets[1:]), dtype=np.int64)
    for a, c in enumerate(first):
        if c:
            collapsed = ps[a] @ state @ ps[a]
            out[a] = _branch_counts(collapsed / np.trace(collapsed).real, sets[1:], int(c), rng)
    return out


def sample_counts(rho, projector_sets, shots: int, rng) -> np.ndarray:
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    if shots < 1:
        raise InvalidSpec("shots must be at least 1")
    sets = [check_projectors(ps, rho.shape[-1]) for ps in projector_sets]
    if not sets:
        raise BadProjectors("need at least one measurement")
    return _branch_counts(rho, sets, int(shots), rng)


def sample_sequence(rho, projector_sets, rng, shots: int | None = None, outcomes=None) -> np.ndarray:
    """Outcome vector(s) of successive measurements.

    Returns shape ``(n,)`` when ``shots`` is None, otherwise ``(shots, n)``
    in random order. Outcome values default to ``+1, -1`` for two-projector
    sets and ``0, 1, ...`` otherwise.
    """
    counts = sample_counts(rho, projector_sets, 1 if shots is None else shots, rng)
    if outcomes is None:
        outcomes = [(1.0, -1.0) if len(ps) == 2 else tuple(float(i) for i in range(len(ps)))
                    for ps in projector_sets]
    idx = np.repeat(np.arange(counts.size), counts.ravel())
    rng.shuffle(idx)
    multi = np.stack(np.unravel_index(idx, counts.shape), axis=-1)
    vals = np.stack([np.asarray(outcomes[i])[multi[:, i]] for i in range(counts.ndim)], axis=-1)
    return vals[0] if shots is None else vals


@dataclass(frozen=True)
class Experiment:
    """Sequential measurement at ``times`` (1-based labels) of the variables ``vars``.

    Each order in ``orders`` estimates every product of that many outcomes.
    """

    times: tuple
    orders: tuple | None = None
    vars: tuple | None = None

    def __post_init__(self):
        times = tuple(int(t) for t in self.times)
        if not times or list(times) != sorted(set(times)):
            raise InvalidSpec(f"experiment times must be strictly increasing labels, got {self.times}")
        object.__setattr__(self, "times", times)
        orders = tuple(self.orders) if self.orders is not None else (len(times),)
        if any(not 1 <= o <= len(times) for o in orders):
            raise InvalidSpec(f"orders {orders} do not fit {len(times)} times")
        object.__setattr__(self, "orders", orders)
        vars_ = tuple(self.vars) if self.vars is not None else ("Q",) * len(times)
        if len(vars_) != len(times) or any(v not in ("Q", "R", "S") for v in vars_):
            raise InvalidSpec(f"bad variables {vars_} for times {times}")
        object.__setattr__(self, "vars", vars_)

    def keys(self) -> list[Key]:
        out = []
        for m in self.orders:
            for sub in itertools.combinations(range(len(self.times)), m):
                out.append(tuple((self.vars[i], self.times[i]) for i in sub))
        return out

    def to_json(self) -> dict:
        return {"times": list(self.times), "orders": list(self.orders), "vars": list(self.vars)}


@dataclass(frozen=True)
class ShotPlan:
    model: SpinModel
    experiments: tuple
    shots: int
    seed: int = 0

    def __post_init__(self):
        if int(self.shots) < 1:
            raise InvalidSpec("shots must be at least 1")
        exps = tuple(e if isinstance(e, Experiment) else Experiment(**e) for e in self.experiments)
        if not exps:
            raise InvalidSpec("plan has no experiments")
        for e in exps:
            if e.times[-1] > self.model.n:
                raise InvalidSpec(f"experiment times {e.times} exceed the model's {self.model.n} times")
            if not self.model.trichotomic and set(e.vars) != {"Q"}:
                raise InvalidSpec("dichotomic model: experiments may only measure Q")
        object.__setattr__(self, "experiments", exps)

    def covered(self) -> set:
        return {k for e in self.experiments for k in e.keys()}

    def to_json(self) -> dict:
        return {
            "model": self.model.config,
            "experiments": [e.to_json() for e in self.experiments],
            "shots": int(self.shots),
            "seed": int(self.seed),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ShotPlan":
        for name in ("model", "shots"):
            if name not in obj:
                raise InvalidSpec(f"shot plan: missing field {name!r}")
        model = model_from_config(obj["model"])
        try:
            shots = int(obj["shots"])
            seed = int(obj.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise InvalidSpec(f"shot plan: {exc}") from None
        if "experiments" not in obj:
            orders = tuple(obj.get("orders", (1, 2)))
            return default_plan(model, shots, seed, orders, obj.get("cycle"))
        return cls(model, tuple(Experiment(**e) for e in obj["experiments"]), shots, seed)


def default_plan(model: SpinModel, shots: int, seed: int = 0, orders=(1, 2), cycle=None) -> ShotPlan:
    """One experiment per data set entry (time subset and variable choice)."""
    exact = dataset_from_model(model, orders, cycle)
    exps = [Experiment(tuple(t for _, t in k), (len(k),), tuple(v for v, _ in k)) for k in
            sorted(exact.values, key=lambda k: (len(k), [t for _, t in k], [v for v, _ in k]))]
    return ShotPlan(model, tuple(exps), shots, seed)


@dataclass(frozen=True)
class EstimatedDataset:
    dataset: MRDataset
    stderr: dict = field(repr=False)
    shots: dict = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        for k, s in self.stderr.items():
            if not s > 0:
                raise InvalidSpec(f"standard error of {k} must be positive")

    def rows(self):
        for kind, idx, v in self.dataset.rows():
            k = next(key for key in self.dataset.values if key_label(key, self.dataset.kind) == idx)
            yield kind, idx, v, self.stderr[k], self.shots[k]

    def to_json(self) -> dict:
        out = self.dataset.to_json()
        for e, row in zip(out["entries"], self.rows()):
            e["stderr"], e["shots"] = row[3], row[4]
        out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EstimatedDataset":
        ds = MRDataset.from_json(obj)
        stderr, shots = {}, {}
        for e in obj["entries"]:
            k = next(key for key in ds.values if key_label(key, ds.kind) == str(e["indices"]))
            stderr[k] = float(e["stderr"])
            shots[k] = int(e.get("shots", 0))
        return cls(ds, stderr, shots, int(obj.get("seed", 0)))


def _experiment_stream(seed: int, index: int) -> np.random.Generator:
    # counter-based split: stream i depends only on (seed, i)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_experiment(model: SpinModel, exp: Experiment, shots: int, seed: int, index: int):
    rng = _experiment_stream(seed, index)
    sets = []
    for var, t in zip(exp.vars, exp.times):
        op = model.evolved(var)[t - 1]
        sets.append(dichotomic_projectors(op)[0])
    counts = sample_counts(model.initial.matrix, sets, shots, rng)
    out = {}
    signs = np.array([1.0, -1.0])
    for k in exp.keys():
        axes = [exp.times.index(t) for _, t in k]
        marg = counts.sum(axis=tuple(i for i in range(counts.ndim) if i not in axes))
        weights = np.ones(marg.shape)
        for ax in range(marg.ndim):
            shape = [1] * marg.ndim
            shape[ax] = 2
            weights = weights * signs.reshape(shape)
        mean = float((weights * marg).sum() / shots)
        var = max(1.0 - mean * mean, 0.0) * (shots / (shots - 1) if shots > 1 else 1.0)
        # an all-equal sample has zero spread; floor the error at one count
        err = max(math.sqrt(var / shots), 1.0 / shots)
        out[k] = (mean, err)
    return out


def estimate_dataset(plan: ShotPlan, workers: int = 1) -> EstimatedDataset:
    """Empirical means of signed outcome products with standard errors ``std / sqrt(shots)``.

    A key measured in several experiments is pooled by inverse variance.
    """
    args = [(plan.model, e, int(plan.shots), int(plan.seed), i) for i, e in enumerate(plan.experiments)]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_experiment, *zip(*args)))
    else:
        results = [_run_experiment(*a) for a in args]
    acc: dict = {}
    for res in results:
        for k, (m, s) in res.items():
            acc.setdefault(k, []).append((m, s))
    values, stderr, shots = {}, {}, {}
    for k, items in acc.items():
        w = np.array([1 / s**2 for _, s in items])
        values[k] = float(np.clip(np.dot(w, [m for m, _ in items]) / w.sum(), -1.0, 1.0))
        stderr[k] = float(1 / math.sqrt(w.sum()))
        shots[k] = int(plan.shots) * len(items)
    m = plan.model
    ds = MRDataset(m.n, values, "trichotomic" if m.trichotomic else "dichotomic")
    return EstimatedDataset(ds, stderr, shots, int(plan.seed))


@dataclass(frozen=True)
class UncertainReport:
    report: ConditionReport
    stderr: float
    near_degenerate: bool
    sigma_level: float = SIGNIFICANT

    @property
    def significance(self) -> float:
        """Distance of the minimum from zero in standard errors (negative when violated)."""
        return self.report.min_value / self.stderr if self.stderr > 0 else math.copysign(math.inf, self.report.min_value)

    @property
    def significant_violation(self) -> bool:
        return self.significance < -self.sigma_level

    @property
    def inconclusive(self) -> bool:
        return abs(self.significance) < INCONCLUSIVE

    def to_json(self) -> dict:
        out = self.report.to_json()
        out.update({
            "stderr": self.stderr,
            "significance": self.significance,
            "significant_violation": self.significant_violation,
            "inconclusive": self.inconclusive,
            "near_degenerate_argmin": self.near_degenerate,
        })
        return out


def evaluate_with_errors(est: EstimatedDataset | MRDataset, family: str, eps: float = EPS,
                         stderr: dict | None = None, **kw) -> UncertainReport:
    """Family minimum with its propagated standard error.

    The minimizing bracket is held fixed; it is linear in the entries, so
    its variance is exactly ``sum coef^2 sigma^2`` for independent entries.
    Another bracket within two standard errors of the minimum marks the
    argmin as near-degenerate.
    """
    if isinstance(est, EstimatedDataset):
        ds, stderr = est.dataset, est.stderr
    else:
        ds, stderr = est, stderr or {}
    forms = family_forms(ds, family, **kw)
    try:
        sig = np.array([stderr.get(k, 0.0) for k in forms.keys])
    except AttributeError:
        raise MissingData("stderr must map entries to errors") from None
    values = forms.evaluate(forms.vector(ds))
    report = report_from_values(forms, values, eps, ds.n)
    var = (forms.coef**2) @ sig**2
    idx = int(np.argmin(values))
    err = float(np.sqrt(var[idx]))
    others = np.delete(values, idx)
    close = others.size > 0 and bool(np.any(others - values[idx] < 2 * max(err, 1e-300)))
    return UncertainReport(report, err, close)
