"""Parameter scans and randomized searches over states, observables and times.

Scans vary one or two parameters of a model config on a grid. Time
parameters are named ``t1 .. tn`` and are evaluated in one vectorized batch;
any other numeric config field can be scanned by its dotted path (e.g.
``state.v.0``) and is evaluated point by point.
"""

from __future__ import annotations

import copy
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conditions import (
    EPS,
    STANDARD,
    ConditionReport,
    classify_regime,
    evaluate,
    family_forms,
    luders_bound,
)
from .constructions import OVERLAP_FORMS
from .correlators import MRDataset, correlator_table
from .errors import InvalidSpec, MacrorealError, Unattainable
from .model import model_from_config
from .numerics import dagger, herm_eig
from .observables import CASES, case_observable, eigenbasis, spin_x_hamiltonian

DEFAULT_POINTS = 1000
BISECT_TOL = 1e-6

FAMILY_ORDERS = {
    "LG2": {1, 2}, "LG3": {2}, "HO3": {1, 2, 3}, "HO4": {1, 2, 3, 4},
    "NFULL": {2}, "PI": {2}, "TRI_LG2": {1, 2}, "TRI_LG3": {1, 2},
}


def orders_for(families) -> tuple[int, ...]:
    orders = set()
    for fam in families:
        orders |= FAMILY_ORDERS.get(fam, {2})
    return tuple(sorted(orders))


# --- solve_alpha -----------------------------------------------------------


def solve_alpha(target: float, dim_case: int, tol: float = 1e-12) -> tuple[float, float]:
    """Angles ``(theta, phi)`` whose equal-overlap value equals ``target``.

    ``dim_case`` selects the five-level (5) or four-level (4) overlap form.
    Bisection on theta along ``phi = 0`` first; otherwise the best sign change
    on a 2-D grid is bisected along theta.
    """
    if dim_case not in OVERLAP_FORMS:
        raise Unattainable(f"no overlap form for dim_case {dim_case}; use 4 or 5")
    f = OVERLAP_FORMS[dim_case]
    # f(theta, phi) = a - a cos 2theta + b sin 2theta cos 2phi; full range a +- sqrt(a^2 + b^2)
    a = 0.375 if dim_case == 5 else 1 / 3
    b = 0.5 if dim_case == 5 else 1 / np.sqrt(3)
    lo, hi = a - np.hypot(a, b), a + np.hypot(a, b)
    if not lo - tol <= target <= hi + tol:
        raise Unattainable(f"overlap {target} outside attainable range [{lo:.6g}, {hi:.6g}]")
    if target == 0:
        return 0.0, 0.0

    def bisect(phi, t0, t1):
        g0 = f(t0, phi) - target
        for _ in range(200):
            tm = 0.5 * (t0 + t1)
            gm = f(tm, phi) - target
            if (gm > 0) == (g0 > 0):
                t0, g0 = tm, gm
            else:
                t1 = tm
            if t1 - t0 < 1e-16:
                break
        return 0.5 * (t0 + t1)

    # phi = 0 branch rises monotonically from 0 to its maximum at theta*
    theta_star = 0.5 * (np.pi - np.arctan2(a, b))
    if 0 <= target <= f(theta_star, 0.0):
        theta = bisect(0.0, 0.0, theta_star)
        return float(theta), 0.0
    thetas = np.linspace(0, np.pi, 721)
    phis = np.linspace(0, np.pi, 361)
    grid = f(thetas[:, None], phis[None, :]) - target
    best = None
    for j, phi in enumerate(phis):
        col = grid[:, j]
        idx = np.nonzero(np.sign(col[:-1]) != np.sign(col[1:]))[0]
        if idx.size:
            best = (phi, thetas[idx[0]], thetas[idx[0] + 1])
            break
    if best is None:
        j = np.unravel_index(np.argmin(np.abs(grid)), grid.shape)
        theta, phi = thetas[j[0]], phis[j[1]]
        if abs(f(theta, phi) - target) > 1e-10:
            raise Unattainable(f"no root found for overlap {target}")
        return float(theta), float(phi)
    phi, t0, t1 = best
    theta = bisect(phi, t0, t1)
    if abs(f(theta, phi) - target) > 1e-10:
        raise Unattainable(f"refinement failed for overlap {target}")
    return float(theta), float(phi)


# --- scans ------------------------------------------------------------------


@dataclass(frozen=True)
class ScanParam:
    name: str
    lo: float
    hi: float
    points: int = DEFAULT_POINTS

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class ScanSpec:
    model: dict
    params: tuple
    families: tuple | None = None
    epsilon: float = EPS
    cycle: tuple | None = None
    preset: str | None = None

    def __post_init__(self):
        params = tuple(p if isinstance(p, ScanParam) else ScanParam(**p) for p in self.params)
        object.__setattr__(self, "params", params)
        if not 1 <= len(params) <= 2:
            raise InvalidSpec(f"scan needs one or two free parameters, got {len(params)}")
        for p in params:
            if not (np.isfinite(p.lo) and np.isfinite(p.hi)) or p.hi <= p.lo:
                raise InvalidSpec(f"parameter {p.name!r}: range [{p.lo}, {p.hi}] must be finite and increasing")
            if int(p.points) < 2:
                raise InvalidSpec(f"parameter {p.name!r}: resolution must be at least 2")
        n = len(self.model.get("times", ()))
        for p in params:
            _check_param(self.model, p.name, n)
        if self.families is not None:
            object.__setattr__(self, "families", tuple(self.families))
        if self.cycle is not None:
            object.__setattr__(self, "cycle", tuple(self.cycle))

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "params": [vars(p) for p in self.params],
            "families": list(self.families) if self.families else None,
            "epsilon": self.epsilon,
            "cycle": list(self.cycle) if self.cycle else None,
            "preset": self.preset,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScanSpec":
        for name in ("model", "params"):
            if name not in obj:
                raise InvalidSpec(f"scan spec: missing field {name!r}")
        try:
            params = [ScanParam(str(p["name"]), float(p["lo"]), float(p["hi"]), int(p.get("points", DEFAULT_POINTS)))
                      for p in obj["params"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"scan spec field 'params': {exc!r}") from None
        return cls(obj["model"], tuple(params), obj.get("families"), float(obj.get("epsilon", EPS)),
                   obj.get("cycle"), obj.get("preset"))

    def with_points(self, points: int) -> "ScanSpec":
        params = tuple(ScanParam(p.name, p.lo, p.hi, points) for p in self.params)
        return ScanSpec(self.model, params, self.families, self.epsilon, self.cycle, self.preset)


def _time_index(name: str, n: int) -> int | None:
    if len(name) > 1 and name[0] == "t" and name[1:].isdigit():
        k = int(name[1:])
        if not 1 <= k <= n:
            raise InvalidSpec(f"time parameter {name!r} outside t1..t{n}")
        return k - 1
    return None


def _path(name: str) -> list:
    return [int(p) if p.lstrip("-").isdigit() else p for p in name.split(".")]


def _check_param(model: dict, name: str, n: int):
    if _time_index(name, n) is not None:
        return
    node = model
    try:
        for part in _path(name):
            node = node[part]
    except (KeyError, IndexError, TypeError):
        raise InvalidSpec(f"scan parameter {name!r} does not name a field of the model config") from None
    if not isinstance(node, (int, float)):
        raise InvalidSpec(f"scan parameter {name!r} is not numeric")


def _set_param(cfg: dict, name: str, value: float):
    n = len(cfg["times"])
    idx = _time_index(name, n)
    if idx is not None:
        cfg["times"][idx] = float(value)
        return
    parts = _path(name)
    node = cfg
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = float(value)


@dataclass
class _Evaluator:
    """Compiled pieces shared by every point of a scan."""

    spec: ScanSpec
    families: tuple = ()
    forms: dict = field(default_factory=dict)
    orders: tuple = ()

    def __post_init__(self):
        model = model_from_config(self.spec.model)
        fams = self.spec.families or default_families(model.n, model.trichotomic, self.spec.cycle)
        self.families = tuple(fams)
        self.orders = orders_for(self.families)
        if model.trichotomic:
            self.orders = tuple(o for o in self.orders if o <= 2)
        ds = self.dataset_for(model)
        for fam in self.families:
            self.forms[fam] = family_forms(ds, fam, cycle=self.spec.cycle) if fam.endswith("_cycle") \
                else family_forms(ds, fam)
        self.model = model

    def dataset_for(self, model) -> MRDataset:
        keys, vals = self._table(model, np.asarray(model.times)[None, :])
        return self._dataset(model, keys, vals[0])

    def _pairs(self):
        c = self.spec.cycle
        return None if c is None else [(c[i], c[(i + 1) % len(c)]) for i in range(len(c))]

    def _dataset(self, model, keys, vals) -> MRDataset:
        return MRDataset(model.n, dict(zip(keys, np.asarray(vals).tolist())),
                         "trichotomic" if model.trichotomic else "dichotomic",
                         "cycle" if self.spec.cycle else "full", self.spec.cycle)

    def _table(self, model, times: np.ndarray):
        values, vectors = herm_eig(model.hamiltonian)
        u = (vectors * np.exp(-1j * np.multiply.outer(times, values))[..., None, :]) @ dagger(vectors)
        letters = ("Q", "R") if model.trichotomic else ("Q",)
        ops = {}
        for var in letters:
            op = model.observable.members()[var] if model.trichotomic else model.observable.matrix
            ops[var] = dagger(u) @ op @ u
        return correlator_table(model.initial.matrix, ops, self.orders, self._pairs())

    def minima(self, keys, vals):
        index = {k: i for i, k in enumerate(keys)}
        out, arg = {}, {}
        for fam, forms in self.forms.items():
            x = vals[..., [index[k] for k in forms.keys]]
            v = forms.evaluate(x)
            out[fam] = v.min(axis=-1)
            arg[fam] = v.argmin(axis=-1)
        return out, arg

    def evaluate_points(self, points: np.ndarray):
        """Per-family minima at ``points`` (shape ``(G, len(params))``)."""
        names = [p.name for p in self.spec.params]
        n = self.model.n
        idx = [_time_index(nm, n) for nm in names]
        if all(i is not None for i in idx):
            times = np.tile(np.asarray(self.model.times), (len(points), 1))
            for col, i in enumerate(idx):
                times[:, i] = points[:, col]
            keys, vals = self._table(self.model, times)
            return self.minima(keys, vals)
        rows = []
        keys = None
        for pt in points:
            cfg = copy.deepcopy(self.spec.model)
            for nm, v in zip(names, pt):
                _set_param(cfg, nm, v)
            m = model_from_config(cfg)
            keys, vals = self._table(m, np.asarray(m.times)[None, :])
            rows.append(vals[0])
        return self.minima(keys, np.array(rows))

    def point_labels(self, points: np.ndarray) -> list[str]:
        mins, _ = self.evaluate_points(points)
        eps = self.spec.epsilon
        return [_regime(mins, g, eps) for g in range(len(points))]


def _regime(mins: dict, g: int, eps: float) -> str:
    std_ok = all(v[g] >= -eps for f, v in mins.items() if f in STANDARD or f.endswith("_cycle"))
    ext_ok = all(v[g] >= -eps for f, v in mins.items() if not (f in STANDARD or f.endswith("_cycle")))
    return "STD_VIOL" if not std_ok else ("STD_SAT_EXT_VIOL" if not ext_ok else "ALL_SAT")


def default_families(n: int, trichotomic: bool, cycle=None) -> list[str]:
    fams = ["LG2"] + (["LG3"] if n >= 3 else [])
    if cycle is not None:
        return ["LG2", f"LG{len(cycle)}_cycle"]
    if n == 5:
        fams.append("PI")
    if trichotomic:
        fams += ["TRI_LG2"] + (["TRI_LG3"] if n >= 3 else [])
    return fams


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    label: str

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "label": self.label}


@dataclass
class ScanResult:
    spec: ScanSpec
    axes: list
    minima: dict
    argmin: dict
    regimes: np.ndarray
    intervals: list | None = None
    windows: dict | None = None

    @property
    def families(self) -> list[str]:
        return list(self.minima)

    def grid(self) -> np.ndarray:
        """Grid points as rows, shape ``(G, len(params))``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def regime_windows(self, label: str) -> list[Interval]:
        return [iv for iv in self.intervals or [] if iv.label == label]

    def satisfied_windows(self, family: str) -> list[Interval]:
        return [iv for iv in (self.windows or {}).get(family, []) if iv.label == "satisfied"]

    def to_json(self) -> dict:
        out = {
            "spec": self.spec.to_json(),
            "params": [p.name for p in self.spec.params],
            "axes": [a.tolist() for a in self.axes],
            "minima": {f: v.tolist() for f, v in self.minima.items()},
            "regimes": self.regimes.tolist(),
            "convention": "bracket",
        }
        if self.intervals is not None:
            out["intervals"] = [iv.to_json() for iv in self.intervals]
            out["windows"] = {f: [iv.to_json() for iv in ivs] for f, ivs in self.windows.items()}
        return out

    def rows(self):
        g = self.grid()
        for i in range(len(g)):
            yield [*g[i].tolist(), *(float(self.minima[f].ravel()[i]) for f in self.families),
                   str(self.regimes.ravel()[i])]

    def header(self) -> list[str]:
        return [p.name for p in self.spec.params] + [f"{f}_min" for f in self.families] + ["regime"]


def _eval_chunk(spec_json: dict, points: np.ndarray):
    ev = _Evaluator(ScanSpec.from_json(spec_json))
    return ev.evaluate_points(points)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("MACROREAL_WORKERS", "1") or 1)
    return max(1, int(workers))


def _bisect_boundary(f, a: float, b: float, la, tol: float = BISECT_TOL) -> float:
    # f(a) == la and f(b) != la; shrink [a, b] around the switch
    while b - a > tol:
        m = 0.5 * (a + b)
        if f(m) == la:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _runs(xs, labels, f, refine: bool) -> list[Interval]:
    out = []
    start = xs[0]
    for i in range(1, len(xs)):
        if labels[i] != labels[i - 1]:
            edge = _bisect_boundary(f, xs[i - 1], xs[i], labels[i - 1]) if refine else 0.5 * (xs[i - 1] + xs[i])
            out.append(Interval(float(start), float(edge), labels[i - 1]))
            start = edge
    out.append(Interval(float(start), float(xs[-1]), labels[-1]))
    return out


def scan(spec: ScanSpec, workers: int | None = None, refine: bool = True) -> ScanResult:
    """Evaluate every family on the grid; for 1-D scans map regime intervals.

    Interval boundaries are located by bisection to ``1e-6`` in the scanned
    parameter when ``refine`` is set, otherwise placed at grid midpoints.
    """
    ev = _Evaluator(spec)
    axes = [p.grid() for p in spec.params]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    workers = resolve_workers(workers)
    if workers > 1 and len(points) >= 2 * workers:
        chunks = np.array_split(points, workers)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_eval_chunk, [spec.to_json()] * len(chunks), chunks))
        mins = {f: np.concatenate([p[0][f] for p in parts]) for f in ev.families}
        args = {f: np.concatenate([p[1][f] for p in parts]) for f in ev.families}
    else:
        mins, args = ev.evaluate_points(points)
    eps = spec.epsilon
    labels = np.array([_regime(mins, g, eps) for g in range(len(points))], dtype=object)
    shape = tuple(len(a) for a in axes)
    result = ScanResult(
        spec, axes,
        {f: v.reshape(shape) for f, v in mins.items()},
        {f: v.reshape(shape) for f, v in args.items()},
        labels.reshape(shape),
    )
    if len(axes) == 1:
        xs = axes[0]

        def regime_at(x):
            return ev.point_labels(np.array([[x]]))[0]

        result.intervals = _runs(xs, list(labels), regime_at, refine)
        result.windows = {}
        for fam in ev.families:
            sat = ["satisfied" if v >= -eps else "violated" for v in mins[fam]]

            def sat_at(x, fam=fam):
                m, _ = ev.evaluate_points(np.array([[x]]))
                return "satisfied" if m[fam][0] >= -eps else "violated"

            result.windows[fam] = _runs(xs, sat, sat_at, refine)
    return result


def evaluate_at(spec: ScanSpec, values) -> dict[str, ConditionReport]:
    """Single-point evaluation from scratch (used to re-validate scan output)."""
    cfg = copy.deepcopy(spec.model)
    for p, v in zip(spec.params, np.atleast_1d(values)):
        _set_param(cfg, p.name, v)
    model = model_from_config(cfg)
    ev = _Evaluator(ScanSpec(cfg, spec.params, spec.families, spec.epsilon, spec.cycle))
    ds = ev.dataset_for(model)
    return {fam: evaluate(ds, fam, spec.epsilon, cycle=spec.cycle) if fam.endswith("_cycle")
            else evaluate(ds, fam, spec.epsilon) for fam in ev.families}


# --- random search -----------------------------------------------------------

# brackets never exceed 2^5 in magnitude, so this separates infeasible scores
INFEASIBLE = 1e3

FAMILY_TIMES = {"LG2": 2, "LG3": 3, "HO3": 3, "HO4": 4, "NFULL": 5, "PI": 5, "LG4_cycle": 4, "LG5_cycle": 5}


def _haar_like(raw: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(raw)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.where(np.abs(d) > 0, np.abs(d), 1))[..., None, :]


def _cplx(x: np.ndarray, shape) -> np.ndarray:
    half = x.shape[-1] // 2
    return (x[..., :half] + 1j * x[..., half:]).reshape(x.shape[:-1] + tuple(shape))


class GenericSampler:
    """Random pure state and ``n`` unitarily rotated copies of ``diag(-1..-1, 1..1)``.

    Equivalent to arbitrary Hamiltonian evolution of one observable, so any
    value found is quantum mechanically realizable. Parameters are raw
    Gaussian entries; the unitary comes from a QR decomposition.
    """

    name = "generic"

    def __init__(self, dim: int, n: int, rank: int | None = None):
        self.dim, self.n, self.rank = dim, n, rank

    @property
    def size(self) -> int:
        return 2 * self.dim + 2 * self.n * self.dim * self.dim

    def sample(self, rng, count):
        params = rng.standard_normal((count, self.size))
        ranks = rng.integers(1, self.dim, size=count) if self.rank is None else np.full(count, self.rank)
        return params, ranks

    def perturb(self, params, rng, sigma):
        return params + sigma[:, None] * rng.standard_normal(params.shape)

    def valid(self, params):
        return np.ones(len(params), dtype=bool)

    def build(self, params, ranks):
        d, n = self.dim, self.n
        psi = _cplx(params[:, : 2 * d], (d,))
        psi = psi / np.linalg.norm(psi, axis=-1, keepdims=True)
        rho = psi[:, :, None] * psi.conj()[:, None, :]
        w = _haar_like(_cplx(params[:, 2 * d :], (n, d, d)))
        diag = np.where(np.arange(d)[None, :] < ranks[:, None], -1.0, 1.0)
        q = (w * diag[:, None, None, :]) @ dagger(w)
        return rho, {"Q": q}


class SpinSampler:
    """Spin-j model ``H = S_x`` with a case observable and an angle-parameterized pure state."""

    name = "spin"
    ANGLES = {2: 2, 3: 4, 4: 6}

    def __init__(self, dim: int, n: int, case: int | None = None):
        if dim not in self.ANGLES:
            raise InvalidSpec(f"spin sampler supports dims 2..4, got {dim}")
        self.dim, self.n = dim, n
        self.cases = [case] if case is not None else [c for c, (dd, _) in CASES.items() if dd == dim]
        self.h = spin_x_hamiltonian(dim)
        self.eig = herm_eig(self.h)
        self.basis = np.stack([k.vector for k in eigenbasis(dim)], axis=1)

    @property
    def size(self) -> int:
        return self.ANGLES[self.dim] + self.n

    def sample(self, rng, count):
        params = rng.uniform(0, 2 * np.pi, (count, self.size))
        return params, rng.integers(0, len(self.cases), size=count)

    def perturb(self, params, rng, sigma):
        return params + sigma[:, None] * rng.standard_normal(params.shape)

    def valid(self, params):
        return np.ones(len(params), dtype=bool)

    def _coeffs(self, ang):
        th = ang[:, 0]
        if self.dim == 2:
            bra = [np.cos(th), np.exp(1j * ang[:, 1]) * np.sin(th)]
        elif self.dim == 3:
            al = ang[:, 1]
            bra = [np.cos(th), np.exp(1j * ang[:, 2]) * np.sin(th) * np.cos(al),
                   np.exp(1j * ang[:, 3]) * np.sin(th) * np.sin(al)]
        else:
            al, be = ang[:, 1], ang[:, 2]
            bra = [np.cos(th), np.exp(1j * ang[:, 3]) * np.sin(th) * np.cos(al),
                   np.exp(1j * ang[:, 4]) * np.sin(th) * np.sin(al) * np.cos(be),
                   np.exp(1j * ang[:, 5]) * np.sin(th) * np.sin(al) * np.sin(be)]
        return np.conj(np.stack(bra, axis=-1))

    def build(self, params, which):
        k = self.ANGLES[self.dim]
        psi = self._coeffs(params[:, :k]) @ self.basis.T
        rho = psi[:, :, None] * psi.conj()[:, None, :]
        values, vectors = self.eig
        times = params[:, k:]
        u = (vectors * np.exp(-1j * np.multiply.outer(times, values))[..., None, :]) @ dagger(vectors)
        obs = np.stack([case_observable(c).matrix for c in self.cases])[which]
        q = dagger(u) @ obs[:, None] @ u
        return rho, {"Q": q}


class GellMannSampler:
    """Mixed three-level states by rejection sampling inside the Gell-Mann bounds.

    The observable is a random rank-1 dichotomic operator under ``H = S_x``.
    """

    name = "gellmann"

    def __init__(self, dim: int, n: int):
        if dim != 3:
            raise InvalidSpec("Gell-Mann sampler is three-level only")
        self.dim, self.n = 3, n
        self.eig = herm_eig(spin_x_hamiltonian(3))

    @property
    def size(self) -> int:
        return 8 + 6 + self.n

    def _rho(self, a):
        r3 = np.sqrt(3.0)
        z = np.zeros(len(a))
        m = np.empty((len(a), 3, 3), dtype=complex)
        m[:, 0] = np.stack([1 / 3 + a[:, 2] + a[:, 7] / r3, a[:, 0] - 1j * a[:, 1], a[:, 3] - 1j * a[:, 4]], -1)
        m[:, 1] = np.stack([a[:, 0] + 1j * a[:, 1], 1 / 3 - a[:, 2] + a[:, 7] / r3, a[:, 5] - 1j * a[:, 6]], -1)
        m[:, 2] = np.stack([a[:, 3] + 1j * a[:, 4], a[:, 5] + 1j * a[:, 6], 1 / 3 - 2 * a[:, 7] / r3 + z], -1)
        return m

    def valid(self, params):
        a = params[:, :8]
        ok = np.einsum("ij,ij->i", a, a) <= 1 / 3
        lam = np.linalg.eigvalsh(self._rho(a))
        return ok & (lam[:, 0] >= -1e-12)

    def sample(self, rng, count):
        out = np.empty((0, self.size))
        bound = 1 / np.sqrt(3)
        while len(out) < count:
            cand = rng.uniform(-bound, bound, (4 * count, self.size))
            cand[:, 8:] = rng.uniform(0, 2 * np.pi, (4 * count, self.size - 8))
            out = np.vstack([out, cand[self.valid(cand)]])
        return out[:count], np.zeros(count, dtype=int)

    def perturb(self, params, rng, sigma):
        return params + sigma[:, None] * rng.standard_normal(params.shape)

    def build(self, params, _):
        rho = self._rho(params[:, :8])
        ang = params[:, 8:14]
        a = np.stack([np.cos(ang[:, 0]), np.sin(ang[:, 0]) * np.cos(ang[:, 1]) * np.exp(1j * ang[:, 2]),
                      np.sin(ang[:, 0]) * np.sin(ang[:, 1]) * np.exp(1j * ang[:, 3])], -1)
        obs = np.eye(3) - 2 * a[:, :, None] * a.conj()[:, None, :]
        values, vectors = self.eig
        u = (vectors * np.exp(-1j * np.multiply.outer(params[:, 14:], values))[..., None, :]) @ dagger(vectors)
        return rho, {"Q": dagger(u) @ obs[:, None] @ u}


SAMPLERS = {"generic": GenericSampler, "spin": SpinSampler, "gellmann": GellMannSampler}


@dataclass(frozen=True)
class SearchHit:
    score: float
    dim: int
    family: str
    sampler: str
    index: int
    rho: np.ndarray = field(repr=False)
    ops: np.ndarray = field(repr=False)
    report: ConditionReport = field(repr=False)
    standard: dict = field(default_factory=dict, repr=False)

    def dataset(self) -> MRDataset:
        return instance_dataset(self.rho, self.ops, orders_for([self.family]))

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "dim": self.dim,
            "family": self.family,
            "sampler": self.sampler,
            "index": self.index,
            "report": self.report.to_json(),
            "standard": {f: r.to_json() for f, r in self.standard.items()},
            "rho": {"re": self.rho.real.tolist(), "im": self.rho.imag.tolist()},
            "ops": {"re": self.ops.real.tolist(), "im": self.ops.imag.tolist()},
        }


@dataclass
class SearchResult:
    family: str
    seed: int
    hits: list
    evaluated: int
    min_seen: dict
    bound: float

    @property
    def best(self) -> SearchHit | None:
        return self.hits[0] if self.hits else None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "seed": self.seed,
            "evaluated": self.evaluated,
            "bound": self.bound,
            "min_seen": self.min_seen,
            "hits": [h.to_json() for h in self.hits],
        }


def instance_dataset(rho, q_ops, orders) -> MRDataset:
    keys, vals = correlator_table(rho, {"Q": q_ops}, orders)
    return MRDataset(q_ops.shape[-3], dict(zip(keys, vals.tolist())))


class _Scorer:
    def __init__(self, sampler, family: str, eps: float, constrained: bool):
        self.sampler, self.family, self.eps, self.constrained = sampler, family, eps, constrained
        self.std = [f for f in ("LG2", "LG3") if constrained and f != family]
        fams = [family] + self.std
        self.orders = orders_for(fams)
        ops = {"Q": np.zeros((1, sampler.n, sampler.dim, sampler.dim))}
        keys, vals = correlator_table(np.eye(sampler.dim)[None] / sampler.dim, ops, self.orders)
        template = MRDataset(sampler.n, dict(zip(keys, vals[0].tolist())))
        index = {k: i for i, k in enumerate(keys)}
        self.forms = {f: family_forms(template, f, cycle=tuple(range(1, sampler.n + 1)))
                      if f.endswith("_cycle") else family_forms(template, f) for f in fams}
        self.cols = {f: [index[k] for k in fm.keys] for f, fm in self.forms.items()}

    def __call__(self, params, extra):
        rho, ops = self.sampler.build(params, extra)
        _, vals = correlator_table(rho, ops, self.orders)
        score = self.forms[self.family].evaluate(vals[:, self.cols[self.family]]).min(axis=-1)
        # infeasible points rank after every feasible one, ordered by how far they miss
        miss = np.zeros_like(score)
        for f in self.std:
            m = self.forms[f].evaluate(vals[:, self.cols[f]]).min(axis=-1)
            miss += np.maximum(0.0, -m - self.eps)
        score = np.where(miss > 0, INFEASIBLE + miss, score)
        score = np.where(self.sampler.valid(params), score, np.inf)
        return score


def _search_dim(family, dim, iterations, seed_seq, sampler, top_k, refine_steps, refine_pop, eps,
                constrained, batch=4096):
    n = FAMILY_TIMES.get(family)
    if n is None:
        raise InvalidSpec(f"random search does not support family {family!r}")
    smp = SAMPLERS[sampler](dim, n)
    scorer = _Scorer(smp, family, eps, constrained)
    rng = np.random.default_rng(seed_seq)
    params, extra, scores = [], [], []
    done = 0
    while done < iterations:
        m = min(batch, iterations - done)
        p, e = smp.sample(rng, m)
        params.append(p)
        extra.append(e)
        scores.append(scorer(p, e))
        done += m
    params = np.vstack(params)
    extra = np.concatenate(extra)
    scores = np.concatenate(scores)
    min_uniform = float(scores.min()) if scores.min() < INFEASIBLE else float("inf")
    if refine_steps > 0:
        pop = np.argsort(scores, kind="stable")[:refine_pop]
        p, e, s = params[pop].copy(), extra[pop], scores[pop].copy()
        sigma = np.full(len(pop), 0.3)
        for _ in range(refine_steps):
            trial = smp.perturb(p, rng, sigma)
            ts = scorer(trial, e)
            better = ts < s
            p[better], s[better] = trial[better], ts[better]
            sigma = np.clip(np.where(better, sigma * 1.3, sigma * 0.85), 1e-4, 1.0)
        params = np.vstack([params, p])
        extra = np.concatenate([extra, e])
        scores = np.concatenate([scores, s])
    order = np.argsort(scores, kind="stable")[:top_k]
    rho, ops = smp.build(params[order], extra[order])
    hits = []
    for rank, i in enumerate(order):
        if not scores[i] < INFEASIBLE:
            continue
        ds = instance_dataset(rho[rank], ops["Q"][rank], scorer.orders)
        report = evaluate(ds, family, eps)
        std = {f: evaluate(ds, f, eps) for f in scorer.std}
        hits.append(SearchHit(float(report.min_value), dim, family, smp.name, int(i), rho[rank],
                              ops["Q"][rank], report, std))
    return hits, len(scores), min_uniform


def random_search(family_target: str, dims=(2,), iterations: int = 10_000, seed: int = 0,
                  sampler: str = "generic", top_k: int = 5, refine_steps: int = 300,
                  refine_pop: int = 32, eps: float = EPS, constrained: bool = False,
                  workers: int | None = None) -> SearchResult:
    """Most negative brackets of ``family_target`` over random quantum instances.

    Uniform sampling of ``iterations`` instances per dimension is followed by
    a stochastic hill climb on the best ``refine_pop`` of them. With
    ``constrained`` every LG2/LG3 must hold (violators score above every feasible point),
    which searches for the standard-satisfied, extended-violated regime.
    Every hit is re-evaluated from scratch through the conditions module.
    """
    if iterations < 1:
        raise InvalidSpec("iterations must be at least 1")
    if sampler not in SAMPLERS:
        raise InvalidSpec(f"unknown sampler {sampler!r}; choose from {sorted(SAMPLERS)}")
    dims = list(dims)
    seqs = np.random.SeedSequence(seed).spawn(len(dims))
    args = [(family_target, d, iterations, s, sampler, top_k, refine_steps, refine_pop, eps, constrained)
            for d, s in zip(dims, seqs)]
    workers = resolve_workers(workers)
    if workers > 1 and len(dims) > 1:
        with ProcessPoolExecutor(min(workers, len(dims))) as pool:
            parts = list(pool.map(_search_dim, *zip(*args)))
    else:
        parts = [_search_dim(*a) for a in args]
    hits = sorted(itertools.chain.from_iterable(p[0] for p in parts), key=lambda h: (h.score, h.dim, h.index))
    try:
        bound = luders_bound(family_target, FAMILY_TIMES.get(family_target))
    except MacrorealError:
        bound = float("nan")
    return SearchResult(
        family_target, seed, hits[:top_k], sum(p[1] for p in parts),
        {d: p[2] for d, p in zip(dims, parts)}, bound,
    )


def random_instances(family: str, dim: int, count: int, seed: int, sampler: str = "generic") -> np.ndarray:
    """Exact minima of ``family`` on ``count`` uniformly sampled instances (no refinement)."""
    n = FAMILY_TIMES[family]
    smp = SAMPLERS[sampler](dim, n)
    scorer = _Scorer(smp, family, EPS, False)
    rng = np.random.default_rng(np.random.SeedSequence([seed, dim]))
    out = []
    done = 0
    while done < count:
        m = min(4096, count - done)
        p, e = smp.sample(rng, m)
        out.append(scorer(p, e))
        done += m
    return np.concatenate(out)
