import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from macroreal import io as mio
from macroreal.cli import main
from macroreal.constructions import construction_n5, cyclic_realization
from macroreal.correlators import MRDataset, dataset_from_model, key
from macroreal.errors import InvalidSpec
from macroreal.model import model_from_config
from macroreal.shots import default_plan

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_GRID = 41
BLOCH = {"2a": ([2**-0.5, 2**-0.5, 0.0], [0.0, np.pi]), "2b": ([2**-0.5, 0.0, 2**-0.5], [0.0, np.pi / 2, np.pi]),
         "2c": ([1.0, 0.0, 0.0], [0.0, np.pi / 2, np.pi])}


def spin_half_oracle(v, times):
    """Brackets from Bloch vectors: c_i = (0, sin t_i, cos t_i), D_ijk = <Q_i> C_jk, E_ijkl = C_ij C_kl."""
    v = np.asarray(v)
    c = [np.array([0.0, np.sin(t), np.cos(t)]) for t in times]
    n = len(times)
    a = [ci @ v for ci in c]

    def corr(idx):
        if len(idx) == 1:
            return a[idx[0]]
        if len(idx) == 2:
            return c[idx[0]] @ c[idx[1]]
        if len(idx) == 3:
            return a[idx[0]] * (c[idx[1]] @ c[idx[2]])
        return (c[idx[0]] @ c[idx[1]]) * (c[idx[2]] @ c[idx[3]])

    def bracket(sub, orders):
        best = np.inf
        for s in itertools.product((1, -1), repeat=len(sub)):
            total = 1.0
            for m in orders:
                for pick in itertools.combinations(range(len(sub)), m):
                    total += np.prod([s[p] for p in pick]) * corr([sub[p] for p in pick])
            best = min(best, total)
        return best

    out = {
        "LG2": min(bracket(p, (1, 2)) for p in itertools.combinations(range(n), 2)),
        "LG3": min(bracket(p, (2,)) for p in itertools.combinations(range(n), 3)),
        "HO3": min(bracket(p, (1, 2, 3)) for p in itertools.combinations(range(n), 3)),
    }
    if n >= 4:
        out["HO4"] = min(bracket(p, (1, 2, 3, 4)) for p in itertools.combinations(range(n), 4))
    return out


def run(args):
    return main([str(a) for a in args])


class TestDatasetCsv:
    def test_round_trip(self):
        ds = construction_n5().dataset
        back, stderr = mio.parse_dataset_csv(mio.dataset_csv(ds))
        assert back.values == ds.values and stderr is None

    def test_round_trip_with_errors(self):
        m = model_from_config({"dim": 2, "hamiltonian": "spin_x", "observable": {"type": "sigma_z"},
                               "state": {"type": "mixed"}, "times": [0.0, 1.0, 2.0]})
        ds = dataset_from_model(m, (1, 2, 3))
        err = {k: 0.01 * (i + 1) for i, k in enumerate(ds.values)}
        back, stderr = mio.parse_dataset_csv(mio.dataset_csv(ds, err))
        assert back.values == ds.values and stderr == err

    def test_cycle_metadata(self):
        ds = MRDataset(4, {key(1, 2): 0.1, key(2, 3): 0.2, key(3, 4): 0.3, key(1, 4): 0.4},
                       subset="cycle", cycle=(1, 2, 3, 4))
        back, _ = mio.parse_dataset_csv(mio.dataset_csv(ds))
        assert back.subset == "cycle" and back.cycle == (1, 2, 3, 4)

    def test_trichotomic(self):
        m = model_from_config({"dim": 3, "hamiltonian": "spin1", "observable": {"type": "trichotomic_spin1"},
                               "state": {"type": "mixed"}, "times": [0.0, 1.0, 2.0]})
        ds = dataset_from_model(m)
        back, _ = mio.parse_dataset_csv(mio.dataset_csv(ds))
        assert back.kind == "trichotomic" and back.values == ds.values

    def test_missing_header(self):
        with pytest.raises(InvalidSpec, match=":1:"):
            mio.parse_dataset_csv("kind,indices,value\n", "data.csv")

    def test_bad_value_names_line(self):
        text = mio.SCHEMA + "\n# n=2\nkind,indices,value\navg,1,0.1\ncorr,\"1,2\",abc\n"
        with pytest.raises(InvalidSpec, match="data.csv:5"):
            mio.parse_dataset_csv(text, "data.csv")

    def test_missing_column(self):
        text = mio.SCHEMA + "\nkind,value\n"
        with pytest.raises(InvalidSpec, match="indices"):
            mio.parse_dataset_csv(text, "data.csv")

    def test_json_error_location(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"model": \n  oops}')
        with pytest.raises(InvalidSpec, match="bad.json:2:"):
            mio.read_json(p)


class TestExitCodes:
    def test_construct_six_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["construct", "6"])
        assert info.value.code == 2

    def test_missing_file(self, tmp_path):
        assert run(["audit", tmp_path / "none.csv"]) == 2
        assert run(["scan", tmp_path / "none.json"]) == 2
        assert run(["shots", tmp_path / "none.json"]) == 2

    def test_bad_spec(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps({"model": {"dim": 2}, "params": [{"name": "t1", "lo": 1, "hi": 0}]}))
        assert run(["scan", p]) == 2


class TestConstruct:
    def test_n5_outputs(self, tmp_path):
        assert run(["construct", 5, "--out", tmp_path]) == 0
        ds, _ = mio.load_dataset(tmp_path / "dataset.csv")
        assert all(abs(ds.value(key(i, j)) + 0.25) < 1e-12 for i, j in itertools.combinations(range(1, 6), 2))
        reports = json.loads((tmp_path / "reports.json").read_text())["reports"]
        assert abs(reports["PI"]["min"] + 0.5) < 1e-9
        assert abs(reports["LG3"]["min"] - 0.25) < 1e-9
        assert abs(reports["LG2"]["min"] - 0.75) < 1e-9
        info = json.loads((tmp_path / "construction.json").read_text())
        assert info["hamiltonian_realization"]["max_deviation"] < 1e-10

    def test_n4_boundary(self, tmp_path):
        assert run(["construct", 4, "--out", tmp_path, "--format", "json"]) == 0
        reports = json.loads((tmp_path / "reports.json").read_text())["reports"]
        assert abs(reports["LG2"]["min"]) < 1e-9

    def test_audit_round_trip(self, tmp_path):
        assert run(["construct", 5, "--out", tmp_path / "c"]) == 0
        assert run(["audit", tmp_path / "c" / "dataset.csv", "--out", tmp_path / "a"]) == 0
        emitted = json.loads((tmp_path / "c" / "reports.json").read_text())
        audited = json.loads((tmp_path / "a" / "audit.json").read_text())
        assert audited["reports"] == emitted["reports"] and audited["regime"] == emitted["regime"]


class TestAudit:
    def test_all_zero(self, tmp_path, capsys):
        ds = MRDataset(5, {k: 0.0 for k in construction_n5().dataset.values})
        p = tmp_path / "zero.csv"
        p.write_text(mio.dataset_csv(ds))
        assert run(["audit", p, "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["regime"]["regime"] == "ALL_SAT"

    def test_json_input_with_errors(self, tmp_path):
        ds = construction_n5().dataset
        obj = ds.to_json()
        for e in obj["entries"]:
            e["stderr"] = 0.01
        p = tmp_path / "ds.json"
        p.write_text(json.dumps(obj))
        assert run(["audit", p, "--out", tmp_path / "o"]) == 0
        audit = json.loads((tmp_path / "o" / "audit.json").read_text())
        assert audit["uncertainty"]["PI"]["significant_violation"]


class TestReproduce:
    @pytest.mark.parametrize("fig", ["2a", "2b", "2c"])
    def test_matches_spin_half_oracle(self, fig, tmp_path):
        assert run(["reproduce", fig, "--grid", GOLDEN_GRID, "--out", tmp_path]) == 0
        header, rows = mio.parse_scan_csv((tmp_path / f"fig{fig}.csv").read_text())
        v, fixed = BLOCH[fig]
        for row in rows:
            want = spin_half_oracle(v, fixed + [row[0]])
            for col, val in zip(header[1:-1], row[1:-1]):
                assert abs(val - want[col.removesuffix("_min")]) < 1e-12

    @pytest.mark.parametrize("fig", ["2a", "2b", "2c", "3", "4"])
    def test_golden(self, fig, tmp_path):
        assert run(["reproduce", fig, "--grid", GOLDEN_GRID, "--out", tmp_path]) == 0
        got_header, got = mio.parse_scan_csv((tmp_path / f"fig{fig}.csv").read_text())
        want_header, want = mio.parse_scan_csv((GOLDEN / f"fig{fig}_grid{GOLDEN_GRID}.csv").read_text())
        assert got_header == want_header and len(got) == len(want)
        for g, w in zip(got, want):
            np.testing.assert_allclose(g[:-1], w[:-1], atol=1e-12)
            assert g[-1] == w[-1]

    @pytest.mark.parametrize("fig", ["2a", "2b", "2c", "3", "4"])
    def test_regime_found(self, fig, tmp_path):
        assert run(["reproduce", fig, "--out", tmp_path]) == 0
        report = json.loads((tmp_path / f"fig{fig}_regime.json").read_text())
        assert report["regime_found"]

    def test_replay_bit_identical(self, tmp_path):
        assert run(["reproduce", "2a", "--grid", 101, "--out", tmp_path / "a"]) == 0
        assert run(["replay", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b"]) == 0
        for name in ("fig2a.csv", "fig2a_regime.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_workers_identical(self, tmp_path):
        assert run(["reproduce", "3", "--grid", 201, "--out", tmp_path / "a", "--workers", 1]) == 0
        assert run(["reproduce", "3", "--grid", 201, "--out", tmp_path / "b", "--workers", 2]) == 0
        for name in ("fig3.csv", "fig3_regime.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_json_format(self, tmp_path):
        assert run(["reproduce", "2c", "--grid", 21, "--format", "json", "--out", tmp_path]) == 0
        obj = json.loads((tmp_path / "fig2c.json").read_text())
        assert obj["convention"] == "bracket" and len(obj["axes"][0]) == 21


class TestScanCommand:
    def test_spec_file(self, tmp_path):
        spec = {"model": {"dim": 2, "hamiltonian": "spin_x", "observable": {"type": "sigma_z"},
                          "state": {"type": "bloch", "v": [2**-0.5, 2**-0.5, 0.0]}, "times": [0.0, np.pi, 0.0]},
                "params": [{"name": "t3", "lo": 0.0, "hi": 2 * np.pi, "points": 33}],
                "families": ["LG2", "LG3", "HO3"]}
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec))
        assert run(["scan", p, "--out", tmp_path / "o"]) == 0
        header, rows = mio.parse_scan_csv((tmp_path / "o" / "scan.csv").read_text())
        assert header[0] == "t3" and len(rows) == 33
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["command"] == "scan" and "scan.csv" in manifest["outputs"]


class TestLudersCommand:
    def test_ho3_dim2(self, tmp_path):
        assert run(["luders", "HO3", "--dims", 2, "--trials", 20000, "--seed", 1, "--out", tmp_path]) == 0
        report = json.loads((tmp_path / "luders.json").read_text())
        assert -1 - 1e-9 <= report["search_best"] <= -0.95
        assert report["bound_respected"]

    def test_ho3_dim3_reports_exceeded_bound(self, tmp_path, capsys):
        assert run(["luders", "HO3", "--dims", 3, "--trials", 5000, "--seed", 1, "--out", tmp_path]) == 0
        report = json.loads((tmp_path / "luders.json").read_text())
        assert not report["bound_respected"]
        assert "EXCEEDED" in capsys.readouterr().out


class TestShotsCommand:
    def test_n5_plan(self, tmp_path):
        plan = default_plan(cyclic_realization(construction_n5()), 10**5, seed=0)
        p = tmp_path / "plan.json"
        p.write_text(mio.dumps(plan.to_json()))
        assert run(["shots", p, "--out", tmp_path / "o"]) == 0
        reports = json.loads((tmp_path / "o" / "reports.json").read_text())["reports"]
        assert reports["PI"]["significant_violation"]
        est, stderr = mio.load_dataset(tmp_path / "o" / "estimates.csv")
        assert stderr is not None and set(stderr) == set(est.values)

    def test_seed_override(self, tmp_path):
        plan = default_plan(model_from_config({"dim": 2, "hamiltonian": "spin_x", "observable": {"type": "sigma_z"},
                                                "state": {"type": "mixed"}, "times": [0.0, 1.0]}), 100, seed=0)
        p = tmp_path / "plan.json"
        p.write_text(mio.dumps(plan.to_json()))
        assert run(["shots", p, "--seed", 3, "--out", tmp_path / "a"]) == 0
        assert run(["shots", p, "--seed", 3, "--out", tmp_path / "b"]) == 0
        assert (tmp_path / "a" / "estimates.csv").read_bytes() == (tmp_path / "b" / "estimates.csv").read_bytes()
