"""Macrorealism condition families evaluated on an :class:`MRDataset`.

Every inequality is linear in the data set entries, so each family is compiled
to a set of linear forms ``const + coef @ x`` (one row per sign/variable
choice). Exact minima come from exhaustive enumeration; the same forms give
batched evaluation and exact error propagation for shot-noise estimates.

Reported values are the unnormalized brackets: the displayed left-hand sides
for LG2/LG3/cycle/NFULL/PI/trichotomic families and ``2^n p`` for the higher
order families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .correlators import Key, MRDataset, expand, key, key_label
from .errors import MissingData, UnknownFamily, WrongKind, WrongSubset

EPS = 1e-9

STANDARD = ("LG2", "LG3", "LG4_cycle", "LG5_cycle")
EXTENDED = ("HO3", "HO4", "NFULL", "PI", "TRI_LG2", "TRI_LG3")
FAMILIES = STANDARD + EXTENDED
TRI_VARS = ("Q", "R", "S")


def luders_bound(family: str, n: int | None = None) -> float:
    """Quantum lower bound of a family's bracket under projective measurements."""
    if family in ("LG2", "LG3", "PI", "TRI_LG2", "TRI_LG3"):
        return -0.5
    if family == "HO3":
        return -1.0
    if family == "HO4":
        return -2.0
    if family == "NFULL":
        # n + 2 sum s_i s_j C_ij = <(sum s_i Q_i)^2>, minus 1 for odd n
        return -1.0 if n is None or n % 2 else 0.0
    if family.startswith("LG") and family.endswith("_cycle"):
        m = int(family[2:-6])
        return (m - 2) - m * np.cos(np.pi / m)
    raise UnknownFamily(f"no Lüders bound known for family {family!r}")


@dataclass(frozen=True)
class Forms:
    family: str
    keys: list
    const: np.ndarray = field(repr=False)
    coef: np.ndarray = field(repr=False)
    labels: list = field(repr=False)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Values for entry vector(s) ``x`` aligned with ``self.keys``."""
        return self.const + np.asarray(x) @ self.coef.T

    def vector(self, ds: MRDataset) -> np.ndarray:
        return np.array([ds.values[k] for k in self.keys])


class _Builder:
    def __init__(self, family):
        self.family = family
        self.rows = []

    def add(self, terms, label, const=1.0):
        row = {"": const}
        for coef, k in terms:
            for c, sub in expand(k):
                tag = sub if sub else ""
                row[tag] = row.get(tag, 0.0) + coef * c
        self.rows.append((row, label))

    def build(self) -> Forms:
        if not self.rows:
            raise MissingData(f"dataset has no entries usable by {self.family}")
        keys = sorted({k for row, _ in self.rows for k in row if k != ""}, key=lambda k: (len(k), k))
        index = {k: i for i, k in enumerate(keys)}
        const = np.array([row[""] for row, _ in self.rows])
        coef = np.zeros((len(self.rows), len(keys)))
        for r, (row, _) in enumerate(self.rows):
            for k, c in row.items():
                if k != "":
                    coef[r, index[k]] = c
        return Forms(self.family, keys, const, coef, [lab for _, lab in self.rows])


def _signs(m: int, fix_first: bool = False):
    for s in itertools.product((1, -1), repeat=m):
        if fix_first and s[0] != 1:
            continue
        yield s


def _pairs(ds: MRDataset):
    return [p for p in itertools.combinations(range(1, ds.n + 1), 2) if key(*p) in ds]


def _lg2(ds: MRDataset) -> Forms:
    b = _Builder("LG2")
    for i, j in _pairs(ds):
        if key(i) not in ds or key(j) not in ds:
            continue
        for si, sj in _signs(2):
            b.add([(si, key(i)), (sj, key(j)), (si * sj, key(i, j))], {"times": [i, j], "signs": [si, sj]})
    return b.build()


def _triples(ds: MRDataset):
    return [
        t for t in itertools.combinations(range(1, ds.n + 1), 3)
        if all(key(*p) in ds for p in itertools.combinations(t, 2))
    ]


def _lg3(ds: MRDataset, full_enumeration=False) -> Forms:
    b = _Builder("LG3")
    for t in _triples(ds):
        for s in _signs(3, fix_first=not full_enumeration):
            terms = [(s[a] * s[c], key(t[a], t[c])) for a, c in itertools.combinations(range(3), 2)]
            b.add(terms, {"times": list(t), "signs": list(s)})
    return b.build()


def _cycle(ds: MRDataset, cycle=None) -> Forms:
    cycle = tuple(cycle) if cycle is not None else ds.cycle
    if cycle is None:
        raise MissingData("no cycle given and the dataset carries none")
    m = len(cycle)
    edges = [(cycle[i], cycle[(i + 1) % m]) for i in range(m)]
    for e in edges:
        if key(*sorted(e)) not in ds:
            raise MissingData(f"cycle edge {e} has no correlator")
    b = _Builder(f"LG{m}_cycle")
    parity = (-1) ** (m + 1)
    for eps in _signs(m):
        if np.prod(eps) != parity:
            continue
        b.add([(g, key(*sorted(e))) for g, e in zip(eps, edges)],
              {"cycle": list(cycle), "edge_signs": list(eps)}, const=m - 2.0)
    return b.build()


def _higher_order(ds: MRDataset, order: int) -> Forms:
    b = _Builder(f"HO{order}")
    for t in itertools.combinations(range(1, ds.n + 1), order):
        subs = [u for m in range(1, order + 1) for u in itertools.combinations(t, m)]
        if not all(key(*u) in ds for u in subs):
            continue
        for s in _signs(order):
            sign = dict(zip(t, s))
            b.add([(int(np.prod([sign[x] for x in u])), key(*u)) for u in subs],
                  {"times": list(t), "signs": list(s)})
    return b.build()


def _require_full_pairs(ds: MRDataset, family: str):
    if ds.subset != "full":
        raise WrongSubset(f"{family} needs the full set of pair correlators, dataset is tagged {ds.subset!r}")
    missing = [p for p in itertools.combinations(range(1, ds.n + 1), 2) if key(*p) not in ds]
    if missing:
        raise MissingData(f"{family} needs every C_ij; missing {missing}")


def _nfull(ds: MRDataset, full_enumeration=False) -> Forms:
    _require_full_pairs(ds, "NFULL")
    n = ds.n
    b = _Builder("NFULL")
    for s in _signs(n, fix_first=not full_enumeration):
        terms = [(2 * s[i - 1] * s[j - 1], key(i, j)) for i, j in itertools.combinations(range(1, n + 1), 2)]
        b.add(terms, {"signs": list(s)}, const=float(n - (n % 2)))
    return b.build()


def _pentagon(ds: MRDataset, full_enumeration=False) -> Forms:
    if ds.n != 5:
        raise WrongSubset(f"pentagon inequalities need n = 5, dataset has n = {ds.n}")
    _require_full_pairs(ds, "PI")
    b = _Builder("PI")
    for s in _signs(5, fix_first=not full_enumeration):
        terms = [(s[i - 1] * s[j - 1], key(i, j)) for i, j in itertools.combinations(range(1, 6), 2)]
        b.add(terms, {"signs": list(s)}, const=2.0)
    return b.build()


def _require_tri(ds: MRDataset, family: str):
    if ds.kind != "trichotomic":
        raise WrongKind(f"{family} needs a trichotomic dataset")


def _tri_lg2(ds: MRDataset) -> Forms:
    _require_tri(ds, "TRI_LG2")
    b = _Builder("TRI_LG2")
    for i, j in itertools.combinations(range(1, ds.n + 1), 2):
        for x, y in itertools.product(TRI_VARS, repeat=2):
            k = key(i, j, vars=(x, y))
            if k not in ds or key(i, vars=x) not in ds or key(j, vars=y) not in ds:
                continue
            b.add([(1, key(i, vars=x)), (1, key(j, vars=y)), (1, k)], {"times": [i, j], "vars": [x, y]})
    return b.build()


def _tri_lg3(ds: MRDataset) -> Forms:
    _require_tri(ds, "TRI_LG3")
    b = _Builder("TRI_LG3")
    for t in itertools.combinations(range(1, ds.n + 1), 3):
        for vs in itertools.product(TRI_VARS, repeat=3):
            ks = [key(t[a], t[c], vars=(vs[a], vs[c])) for a, c in itertools.combinations(range(3), 2)]
            if all(k in ds for k in ks):
                b.add([(1, k) for k in ks], {"times": list(t), "vars": list(vs)})
    return b.build()


def family_forms(ds: MRDataset, family: str, **kw) -> Forms:
    if family == "LG2":
        return _lg2(ds)
    if family == "LG3":
        return _lg3(ds, **kw)
    if family in ("HO3", "HO4"):
        return _higher_order(ds, int(family[2]))
    if family == "NFULL":
        return _nfull(ds, **kw)
    if family == "PI":
        return _pentagon(ds, **kw)
    if family == "TRI_LG2":
        return _tri_lg2(ds)
    if family == "TRI_LG3":
        return _tri_lg3(ds)
    if family.startswith("LG") and family.endswith("_cycle"):
        forms = _cycle(ds, kw.get("cycle"))
        if forms.family != family:
            raise WrongSubset(f"{family} requested but cycle has {len(forms.labels[0]['cycle'])} times")
        return forms
    raise UnknownFamily(f"unknown condition family {family!r}")


@dataclass(frozen=True)
class ConditionReport:
    family: str
    min_value: float
    argmin: dict
    satisfied: bool
    epsilon: float = EPS
    bound: float | None = None
    n: int | None = None
    all_values: list | None = field(default=None, repr=False)

    @property
    def margin(self) -> float | None:
        """Distance above the Lüders bound (negative means the bound is beaten)."""
        return None if self.bound is None else self.min_value - self.bound

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "min": self.min_value,
            "argmin": self.argmin,
            "satisfied": self.satisfied,
            "bound": self.bound,
            "margin": self.margin,
            "epsilon": self.epsilon,
            "convention": "bracket",
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConditionReport":
        return cls(obj["family"], float(obj["min"]), obj.get("argmin", {}), bool(obj["satisfied"]),
                   float(obj.get("epsilon", EPS)), obj.get("bound"))


def report_from_values(forms: Forms, values: np.ndarray, eps: float, n: int, keep_all=False) -> ConditionReport:
    idx = int(np.argmin(values))
    try:
        bound = luders_bound(forms.family, n)
    except UnknownFamily:
        bound = None
    vmin = float(values[idx])
    return ConditionReport(forms.family, vmin, forms.labels[idx], vmin >= -eps, eps, bound, n,
                           values.tolist() if keep_all else None)


def evaluate(ds: MRDataset, family: str, eps: float = EPS, keep_all: bool = False, **kw) -> ConditionReport:
    forms = family_forms(ds, family, **kw)
    return report_from_values(forms, forms.evaluate(forms.vector(ds)), eps, ds.n, keep_all)


def lg2_min(ds, eps=EPS, **kw):
    return evaluate(ds, "LG2", eps, **kw)


def lg3_min(ds, eps=EPS, **kw):
    return evaluate(ds, "LG3", eps, **kw)


def lgn_cycle_min(ds, cycle=None, eps=EPS, **kw):
    cycle = tuple(cycle) if cycle is not None else ds.cycle
    if cycle is None:
        raise MissingData("no cycle given and the dataset carries none")
    return evaluate(ds, f"LG{len(cycle)}_cycle", eps, cycle=cycle, **kw)


def higher_order_min(ds, order, eps=EPS, **kw):
    if order not in (3, 4):
        raise UnknownFamily(f"higher-order LGIs are implemented for order 3 and 4, not {order}")
    return evaluate(ds, f"HO{order}", eps, **kw)


def nfull_min(ds, eps=EPS, **kw):
    return evaluate(ds, "NFULL", eps, **kw)


def pentagon_min(ds, eps=EPS, **kw):
    return evaluate(ds, "PI", eps, **kw)


def tri_lg2_min(ds, eps=EPS, **kw):
    return evaluate(ds, "TRI_LG2", eps, **kw)


def tri_lg3_min(ds, eps=EPS, **kw):
    return evaluate(ds, "TRI_LG3", eps, **kw)


def applicable_families(ds: MRDataset) -> list[str]:
    fams = []
    if _pairs(ds) and any(key(i) in ds for i in range(1, ds.n + 1)):
        fams.append("LG2")
    if _triples(ds):
        fams.append("LG3")
    if ds.subset == "cycle" and ds.n in (4, 5):
        fams.append(f"LG{ds.n}_cycle")
    for order in (3, 4):
        if ds.n >= order and any(len(k) == order for k in ds.values):
            fams.append(f"HO{order}")
    if ds.subset == "full" and ds.n >= 3 and len(_pairs(ds)) == ds.n * (ds.n - 1) // 2:
        fams.append("NFULL")
        if ds.n == 5:
            fams.append("PI")
    if ds.kind == "trichotomic":
        fams += ["TRI_LG2", "TRI_LG3"] if ds.n >= 3 else ["TRI_LG2"]
    return fams


def evaluate_all(ds: MRDataset, eps: float = EPS, families=None) -> dict[str, ConditionReport]:
    families = applicable_families(ds) if families is None else families
    out = {}
    for fam in families:
        out[fam] = evaluate(ds, fam, eps, cycle=ds.cycle) if fam.endswith("_cycle") else evaluate(ds, fam, eps)
    return out


def luders_check(report: ConditionReport, eps: float | None = None) -> tuple[bool, float]:
    """``(min_value >= bound - eps, min_value - bound)`` for the report's family."""
    eps = report.epsilon if eps is None else eps
    bound = luders_bound(report.family, report.n)
    return report.min_value >= bound - eps, report.min_value - bound


@dataclass(frozen=True)
class RegimeLabel:
    satisfied: dict
    regime: str

    def to_json(self) -> dict:
        return {"regime": self.regime, "satisfied": self.satisfied}


def classify_regime(reports, eps: float = EPS) -> RegimeLabel:
    """ALL_SAT, STD_SAT_EXT_VIOL or STD_VIOL.

    Standard families are the LG2s, LG3s and cycle LGIs; everything else is
    extended. With no standard report present the standard side counts as
    satisfied.
    """
    reports = list(reports.values()) if isinstance(reports, dict) else list(reports)
    flags = {r.family: r.min_value >= -eps for r in reports}
    std_ok = all(ok for fam, ok in flags.items() if fam in STANDARD or fam.endswith("_cycle"))
    ext_ok = all(ok for fam, ok in flags.items() if not (fam in STANDARD or fam.endswith("_cycle")))
    if not std_ok:
        regime = "STD_VIOL"
    elif not ext_ok:
        regime = "STD_SAT_EXT_VIOL"
    else:
        regime = "ALL_SAT"
    return RegimeLabel(flags, regime)


def describe(report: ConditionReport, kind: str = "dichotomic") -> str:
    arg = ", ".join(f"{k}={v}" for k, v in report.argmin.items())
    state = "satisfied" if report.satisfied else "VIOLATED"
    return f"{report.family:<10} min={report.min_value:+.10f}  {state:<9} at {arg}"


__all__ = [
    "ConditionReport", "Forms", "RegimeLabel", "FAMILIES", "STANDARD", "EXTENDED", "EPS",
    "luders_bound", "family_forms", "evaluate", "evaluate_all", "applicable_families",
    "lg2_min", "lg3_min", "lgn_cycle_min", "higher_order_min", "nfull_min", "pentagon_min",
    "tri_lg2_min", "tri_lg3_min", "luders_check", "classify_regime", "describe", "key_label", "Key",
]
