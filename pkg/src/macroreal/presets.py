"""Named scan presets for the figure reproductions.

Each preset fixes a model and scans the last measurement time over
``[0, 2 pi]``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpec
from .search import ScanParam, ScanSpec

PI = float(np.pi)
TWO_PI = 2 * PI
R2 = float(np.sqrt(2.0))
R27 = 3 * float(np.sqrt(3.0))

# case 7 (|A> = |2>) is the first single-projector case showing the preset 3 regime
FIG3_CASE = 7
# 1001 points put every multiple of pi/500 on the grid, including 3 pi / 2
PRESET_POINTS = 1001


def _spin_half(v, times):
    return {
        "dim": 2,
        "hamiltonian": "spin_x",
        "observable": {"type": "sigma_z"},
        "state": {"type": "bloch", "v": list(v)},
        "times": list(times),
    }


def _fig2a():
    model = _spin_half([1 / R2, 1 / R2, 0.0], [0.0, PI, 0.0])
    return model, "t3", ["LG2", "LG3", "HO3"]


def _fig2b():
    model = _spin_half([1 / R2, 0.0, 1 / R2], [0.0, PI / 2, PI, 0.0])
    return model, "t4", ["LG2", "LG3", "HO4"]


def _fig2c():
    model = _spin_half([1.0, 0.0, 0.0], [0.0, PI / 2, PI, 0.0])
    return model, "t4", ["HO3", "HO4"]


def _fig3():
    angles = {"theta": 9 * PI / 5, "alpha": 9 * PI / 5, "beta": 0.0,
              "phi1": 3 * PI / 5, "phi2": 6 * PI / 5, "phi3": 9 * PI / 5}
    model = {
        "dim": 4,
        "hamiltonian": "spin_x",
        "observable": {"type": "case", "case": FIG3_CASE},
        "state": {"type": "pure_case", "case": FIG3_CASE, "angles": angles},
        "times": [0.0, PI / 5, 2 * PI / 5, 3 * PI / 5, 0.0],
    }
    return model, "t5", ["LG3", "PI"]


def _fig4():
    a = [x / R27 for x in (0, 0, 1, 2, 1, 0, 0, -1)]
    model = {
        "dim": 3,
        "hamiltonian": "spin1",
        "observable": {"type": "trichotomic_spin1"},
        "state": {"type": "gellmann", "a": a},
        "times": [0.0, 3 * PI / 4, 0.0],
    }
    return model, "t3", ["LG2", "LG3", "TRI_LG2", "TRI_LG3"]


PRESETS = {"2a": _fig2a, "2b": _fig2b, "2c": _fig2c, "3": _fig3, "4": _fig4}

# regime each figure is meant to exhibit: families that must hold / must fail somewhere together
TARGETS = {
    "2a": (("LG2", "LG3"), ("HO3",)),
    "2b": (("LG2", "LG3"), ("HO4",)),
    "2c": (("HO3",), ("HO4",)),
    "3": (("LG3",), ("PI",)),
    "4": (("LG2", "LG3"), ("TRI_LG3",)),
}


def preset_spec(figure: str, points: int = PRESET_POINTS, epsilon: float = 1e-9) -> ScanSpec:
    figure = str(figure).lower().lstrip("fig").strip()
    if figure not in PRESETS:
        raise InvalidSpec(f"unknown figure {figure!r}; choose from {sorted(PRESETS)}")
    model, param, families = PRESETS[figure]()
    return ScanSpec(model, (ScanParam(param, 0.0, TWO_PI, points),), tuple(families), epsilon,
                    preset=f"fig{figure}")


def target_mask(result, figure: str) -> np.ndarray:
    """Grid points where the figure's regime holds (listed families satisfied, the others violated)."""
    hold, fail = TARGETS[str(figure)]
    eps = result.spec.epsilon
    mask = np.ones(result.regimes.shape, dtype=bool)
    for f in hold:
        mask &= result.minima[f] >= -eps
    for f in fail:
        mask &= result.minima[f] < -eps
    return mask


def target_windows(result, figure: str) -> list[tuple[float, float]]:
    """Maximal runs of grid points where :func:`target_mask` holds (1-D scans)."""
    mask = target_mask(result, figure)
    xs = result.axes[0]
    out, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        if not m and start is not None:
            out.append((float(xs[start]), float(xs[i - 1])))
            start = None
    if start is not None:
        out.append((float(xs[start]), float(xs[-1])))
    return out
