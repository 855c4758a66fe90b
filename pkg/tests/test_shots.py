import numpy as np
import pytest

from macroreal.conditions import evaluate
from macroreal.constructions import construction_n5, cyclic_realization
from macroreal.correlators import dataset_from_model, dichotomic_projectors, key, seq_probs
from macroreal.errors import BadProjectors, InvalidSpec
from macroreal.model import model_from_config
from macroreal.shots import (
    EstimatedDataset,
    Experiment,
    ShotPlan,
    default_plan,
    estimate_dataset,
    evaluate_with_errors,
    sample_counts,
    sample_sequence,
)

SZ = np.diag([1.0, -1.0])
UP = np.diag([1.0, 0.0])


def spin_half(times, v=(2**-0.5, 2**-0.5, 0.0)):
    return model_from_config({"dim": 2, "hamiltonian": "spin_x", "observable": {"type": "sigma_z"},
                              "state": {"type": "bloch", "v": list(v)}, "times": list(times)})


def fig2a_model(t3=1.1):
    return spin_half([0.0, np.pi, t3])


def n5_model():
    return cyclic_realization(construction_n5())


def within(est, exact, k=5.0):
    return np.array([abs(est.dataset.value(key_) - exact.value(key_)) <= k * est.stderr[key_]
                     for key_ in exact.values])


class TestSampling:
    def test_deterministic_alignment(self, rng):
        sets = [dichotomic_projectors(SZ)[0]] * 3
        out = sample_sequence(UP, sets, rng, shots=100)
        assert np.all(out == 1.0)

    def test_single_draw_shape(self, rng):
        out = sample_sequence(UP, [dichotomic_projectors(SZ)[0]] * 2, rng)
        assert out.shape == (2,) and set(out) <= {1.0, -1.0}

    def test_two_time_correlator(self):
        m = spin_half([0.0, 0.7])
        sets = [dichotomic_projectors(q)[0] for q in m.evolved("Q")]
        shots = 10**6
        out = sample_sequence(m.initial, sets, np.random.default_rng(1), shots=shots)
        prod = out[:, 0] * out[:, 1]
        err = prod.std(ddof=1) / np.sqrt(shots)
        assert abs(prod.mean() - np.cos(0.7)) < 5 * err

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_total_variation(self, seed):
        m = fig2a_model()
        sets = [dichotomic_projectors(q)[0] for q in m.evolved("Q")]
        shots = 10**6
        counts = sample_counts(m.initial, sets, shots, np.random.default_rng(seed))
        exact = seq_probs(m.initial, sets).probs
        tv = 0.5 * np.abs(counts / shots - exact).sum()
        assert tv < 5 * np.sqrt(2**3 / shots)

    def test_first_time_marginal(self):
        m = n5_model()
        sets = [dichotomic_projectors(q)[0] for q in m.evolved("Q")]
        shots = 4 * 10**5
        counts = sample_counts(m.initial, sets, shots, np.random.default_rng(3))
        first = counts.sum(axis=tuple(range(1, 5))) / shots
        born = [np.trace(p @ m.initial.matrix).real for p in sets[0]]
        err = np.sqrt(born[0] * born[1] / shots)
        assert abs(first[0] - born[0]) < 5 * err
        # later measurements cannot shift the first-time statistics
        alone = sample_counts(m.initial, sets[:1], shots, np.random.default_rng(4)) / shots
        assert abs(alone[0] - born[0]) < 5 * err

    def test_bad_projectors(self, rng):
        with pytest.raises(BadProjectors):
            sample_sequence(UP, [[UP]], rng)

    def test_zero_shots(self, rng):
        with pytest.raises(InvalidSpec):
            sample_counts(UP, [dichotomic_projectors(SZ)[0]], 0, rng)

    def test_three_outcomes(self, rng):
        ps = [np.diag(row) for row in np.eye(3)]
        rho = np.diag([0.2, 0.3, 0.5])
        out = sample_sequence(rho, [ps], rng, shots=1000)
        assert set(np.unique(out)) <= {0.0, 1.0, 2.0}


class TestEstimate:
    def test_single_shot(self):
        est = estimate_dataset(default_plan(fig2a_model(), 1, seed=4))
        for v in est.dataset.values.values():
            assert v in (-1.0, 1.0)
        assert all(s > 0 for s in est.stderr.values())

    def test_same_seed(self):
        a = estimate_dataset(default_plan(fig2a_model(), 5000, seed=8))
        b = estimate_dataset(default_plan(fig2a_model(), 5000, seed=8))
        assert a.dataset.values == b.dataset.values and a.stderr == b.stderr

    def test_adding_experiments_keeps_streams(self):
        plan = default_plan(fig2a_model(), 3000, seed=2)
        more = ShotPlan(plan.model, plan.experiments + (Experiment((1, 2, 3), (3,)),), plan.shots, plan.seed)
        a, b = estimate_dataset(plan), estimate_dataset(more)
        for k, v in a.dataset.values.items():
            assert b.dataset.values[k] == v

    def test_workers_equivalent(self):
        plan = default_plan(fig2a_model(), 2000, seed=5)
        a, b = estimate_dataset(plan, workers=1), estimate_dataset(plan, workers=2)
        assert a.dataset.values == b.dataset.values

    def test_fig2a_converges(self):
        m = fig2a_model()
        exact = dataset_from_model(m)
        est = estimate_dataset(default_plan(m, 10**7, seed=0))
        assert within(est, exact).all()

    def test_repeated_trials_coverage(self):
        m = fig2a_model(2.3)
        exact = dataset_from_model(m)
        hits = []
        for seed in range(1000):
            hits.append(within(estimate_dataset(default_plan(m, 500, seed=seed)), exact))
        assert np.mean(hits) >= 0.99

    def test_values_in_range(self):
        est = estimate_dataset(default_plan(n5_model(), 200, seed=1))
        for k, v in est.dataset.values.items():
            assert -1 - 3 * est.stderr[k] <= v <= 1 + 3 * est.stderr[k]

    def test_json_round_trip(self):
        est = estimate_dataset(default_plan(fig2a_model(), 100, seed=1))
        back = EstimatedDataset.from_json(est.to_json())
        assert back.dataset.values == est.dataset.values
        assert back.stderr == est.stderr and back.shots == est.shots and back.seed == est.seed

    def test_plan_json(self):
        plan = default_plan(fig2a_model(), 100, seed=6)
        back = ShotPlan.from_json(plan.to_json())
        assert back.experiments == plan.experiments and back.shots == 100 and back.seed == 6

    def test_plan_validation(self):
        m = fig2a_model()
        with pytest.raises(InvalidSpec):
            ShotPlan(m, (Experiment((1, 4)),), 10)
        with pytest.raises(InvalidSpec):
            ShotPlan(m, (Experiment((1, 2)),), 0)
        with pytest.raises(InvalidSpec):
            ShotPlan(m, (Experiment((1, 2), vars=("Q", "R")),), 10)
        with pytest.raises(InvalidSpec):
            Experiment((2, 1))
        with pytest.raises(InvalidSpec):
            ShotPlan.from_json({"model": m.config})

    def test_trichotomic_plan(self):
        m = model_from_config({"dim": 3, "hamiltonian": "spin1", "observable": {"type": "trichotomic_spin1"},
                               "state": {"type": "mixed"}, "times": [0.0, 0.9, 2.0]})
        exact = dataset_from_model(m)
        est = estimate_dataset(default_plan(m, 20000, seed=3))
        assert est.dataset.kind == "trichotomic"
        assert within(est, exact).all()


class TestErrors:
    def test_exact_dataset(self):
        ds = construction_n5().dataset
        r = evaluate_with_errors(ds, "PI")
        assert r.report.min_value == evaluate(ds, "PI").min_value
        assert r.stderr == 0.0 and r.significant_violation

    def test_n5_significant(self):
        est = estimate_dataset(default_plan(n5_model(), 10**5, seed=0))
        r = evaluate_with_errors(est, "PI")
        assert abs(r.report.min_value + 0.5) < 5 * r.stderr
        assert r.stderr < 0.02
        assert r.significant_violation and not r.inconclusive
        # flipping any one sign raises the bracket to 3/2, so the minimizer is isolated
        assert not r.near_degenerate

    def test_tiny_shots_inconclusive(self):
        est = estimate_dataset(default_plan(n5_model(), 10, seed=0))
        r = evaluate_with_errors(est, "PI")
        assert r.inconclusive and not r.significant_violation

    def test_propagation(self):
        ds = dataset_from_model(fig2a_model())
        stderr = {k: 0.01 for k in ds.values}
        r = evaluate_with_errors(ds, "LG2", stderr=stderr)
        # three entries with unit coefficients
        assert abs(r.stderr - 0.01 * np.sqrt(3)) < 1e-15

    def test_json(self):
        est = estimate_dataset(default_plan(n5_model(), 1000, seed=0))
        obj = evaluate_with_errors(est, "PI").to_json()
        assert {"stderr", "significance", "significant_violation", "inconclusive"} <= set(obj)
