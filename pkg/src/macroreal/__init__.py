"""Numerical toolkit for macrorealism tests on spin models.

Builds exact temporal correlators of dichotomic and trichotomic variables,
evaluates Leggett-Garg style condition families on them, scans and searches
parameter space for regimes, and simulates finite-shot experiments.
"""

from .conditions import (
    ConditionReport,
    RegimeLabel,
    classify_regime,
    evaluate,
    evaluate_all,
    higher_order_min,
    lg2_min,
    lg3_min,
    lgn_cycle_min,
    luders_bound,
    luders_check,
    nfull_min,
    pentagon_min,
    tri_lg2_min,
    tri_lg3_min,
)
from .constructions import construction, cyclic_realization
from .correlators import MRDataset, dataset_from_model, key, overlap_correlators, seq_probs
from .model import SpinModel, model_from_config
from .search import ScanParam, ScanSpec, random_search, scan, solve_alpha
from .shots import ShotPlan, default_plan, estimate_dataset, evaluate_with_errors

__version__ = "0.1.0"
