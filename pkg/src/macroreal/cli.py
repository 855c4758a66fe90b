"""``macroreal`` command line.

Exit codes: 0 ran (including scans that find no regime), 2 bad input,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as mio
from .conditions import EPS, applicable_families, classify_regime, describe, evaluate_all, luders_bound
from .constructions import construction, cyclic_realization
from .correlators import dataset_from_model
from .errors import InvariantBreach, MacrorealError
from .presets import PRESETS, TARGETS, preset_spec, target_windows
from .search import FAMILY_TIMES, ScanSpec, evaluate_at, random_instances, random_search, resolve_workers, scan
from .shots import ShotPlan, estimate_dataset, evaluate_with_errors

EXIT_OK, EXIT_INPUT, EXIT_BREACH = 0, 2, 3
AGREE_TOL = 1e-9


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


class Output:
    """Collects files under ``--out``; without it, the main result goes to stdout."""

    def __init__(self, args, command: str, config: dict):
        self.dir = Path(args.out) if args.out else None
        self.manifest = mio.RunManifest(command, list(args.argv), config, args.seed, version())
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, main: bool = False):
        if self.dir is None:
            if main:
                sys.stdout.write(text)
            return
        (self.dir / name).write_text(text)
        self.manifest.outputs.append(name)

    def close(self):
        if self.dir is not None:
            self.manifest.outputs.append("manifest.json")
            (self.dir / "manifest.json").write_text(mio.dumps(self.manifest.to_json()))


def _say(args, text: str):
    if args.out:
        print(text)
    else:
        print(text, file=sys.stderr)


def _scan_outputs(args, out: Output, result, stem: str):
    if args.format == "json":
        out.write(f"{stem}.json", mio.dumps(result.to_json()), main=True)
    else:
        out.write(f"{stem}.csv", mio.scan_csv(result), main=True)


def _revalidate(spec: ScanSpec, result, points):
    """Recompute minima from scratch at grid points and compare with the scan."""
    xs = result.axes[0]
    for x in points:
        i = int(np.argmin(np.abs(xs - x)))
        fresh = evaluate_at(spec, [xs[i]])
        for fam, rep in fresh.items():
            stored = float(result.minima[fam][i])
            if abs(rep.min_value - stored) > AGREE_TOL:
                raise InvariantBreach(f"{fam} at {xs[i]}: scan {stored} vs direct {rep.min_value}")


def _regime_summary(result) -> dict:
    summary = {"families": result.families, "epsilon": result.spec.epsilon}
    if result.intervals is not None:
        summary["intervals"] = [iv.to_json() for iv in result.intervals]
        summary["windows"] = {f: [iv.to_json() for iv in ivs] for f, ivs in result.windows.items()}
        summary["global_minima"] = {f: float(np.min(v)) for f, v in result.minima.items()}
    return summary


def cmd_reproduce(args) -> int:
    spec = preset_spec(args.figure, **({"points": args.grid} if args.grid else {}), epsilon=args.epsilon)
    out = Output(args, "reproduce", spec.to_json())
    result = scan(spec, workers=args.workers)
    wins = target_windows(result, args.figure)
    _revalidate(spec, result, [0.5 * (a + b) for a, b in wins])
    hold, fail = TARGETS[args.figure]
    report = _regime_summary(result)
    report.update({
        "figure": args.figure,
        "target": {"satisfied": list(hold), "violated": list(fail)},
        "target_windows": [{"lo": a, "hi": b} for a, b in wins],
        "regime_found": bool(wins),
    })
    _scan_outputs(args, out, result, f"fig{args.figure}")
    out.write(f"fig{args.figure}_regime.json", mio.dumps(report))
    out.close()
    state = "found" if wins else "NOT found"
    _say(args, f"fig {args.figure}: target regime ({'+'.join(hold)} hold, {'+'.join(fail)} fail) {state}; "
               f"{len(wins)} window(s) on {len(result.axes[0])} points")
    for a, b in wins[:5]:
        _say(args, f"  [{a:.6f}, {b:.6f}]")
    return EXIT_OK


def _dataset_text(ds, fmt, stderr=None, extra=None) -> tuple[str, str]:
    if fmt == "json":
        obj = ds.to_json()
        if stderr is not None:
            for e in obj["entries"]:
                e["stderr"] = next(s for k, s in stderr.items() if _label(k, ds) == e["indices"])
        if extra:
            obj.update(extra)
        return "json", mio.dumps(obj)
    return "csv", mio.dataset_csv(ds, stderr)


def _label(k, ds):
    from .correlators import key_label

    return key_label(k, ds.kind)


def _reports_json(reports: dict, regime) -> dict:
    return {"reports": {f: r.to_json() for f, r in reports.items()}, "regime": regime.to_json()}


def cmd_construct(args) -> int:
    c = construction(args.n)
    info = c.to_json()
    ds = c.dataset
    if args.n == 5:
        model = cyclic_realization(c)
        realized = dataset_from_model(model)
        worst = max(abs(realized.values[k] - ds.values[k]) for k in ds.values)
        if worst > AGREE_TOL:
            raise InvariantBreach(f"cyclic Hamiltonian realization deviates from the overlap data set by {worst:.3e}")
        info["hamiltonian_realization"] = {
            "hamiltonian": {"re": model.hamiltonian.real.tolist(), "im": model.hamiltonian.imag.tolist()},
            "times": list(model.times),
            "model": model.config,
            "max_deviation": worst,
        }
    out = Output(args, "construct", {"n": args.n})
    reports = evaluate_all(ds, args.epsilon)
    regime = classify_regime(reports, args.epsilon)
    ext, text = _dataset_text(ds, args.format)
    out.write(f"dataset.{ext}", text, main=True)
    out.write("construction.json", mio.dumps(info))
    out.write("reports.json", mio.dumps(_reports_json(reports, regime)))
    out.close()
    _say(args, f"{args.n}-level construction, alpha = {c.alpha:.6g}, theta = {c.theta:.12f}, phi = {c.phi:.6g}")
    for r in reports.values():
        _say(args, "  " + describe(r))
    _say(args, f"  regime: {regime.regime}")
    return EXIT_OK


def cmd_scan(args) -> int:
    spec = ScanSpec.from_json(mio.read_json(args.spec_file))
    if args.grid:
        spec = spec.with_points(args.grid)
    if args.epsilon != EPS:
        spec = ScanSpec(spec.model, spec.params, spec.families, args.epsilon, spec.cycle, spec.preset)
    out = Output(args, "scan", spec.to_json())
    result = scan(spec, workers=args.workers)
    _scan_outputs(args, out, result, "scan")
    out.write("scan_regime.json", mio.dumps(_regime_summary(result)))
    out.close()
    if result.intervals is not None:
        for iv in result.intervals:
            _say(args, f"  [{iv.lo:.6f}, {iv.hi:.6f}] {iv.label}")
    return EXIT_OK


def cmd_luders(args) -> int:
    seed = 0 if args.seed is None else args.seed
    fam = args.family
    if fam not in FAMILY_TIMES:
        raise MacrorealError(f"Lüders runs support {sorted(FAMILY_TIMES)}, not {fam!r}")
    bound = luders_bound(fam, FAMILY_TIMES[fam])
    config = {"family": fam, "dims": args.dims, "trials": args.trials, "refine_steps": args.refine_steps,
              "sampler": args.sampler}
    out = Output(args, "luders", config)
    per_dim = {}
    for d in args.dims:
        vals = random_instances(fam, d, args.trials, seed, args.sampler)
        per_dim[d] = {"min": float(vals.min()), "below_bound": int(np.sum(vals < bound - args.epsilon))}
    res = random_search(fam, args.dims, args.trials, seed, args.sampler, refine_steps=args.refine_steps,
                        eps=args.epsilon, workers=args.workers)
    best = res.best.score if res.best else float("nan")
    report = {
        "family": fam,
        "bound": bound,
        "uniform": per_dim,
        "search_best": best,
        "search_min_by_dim": res.min_seen,
        "bound_respected": all(v["below_bound"] == 0 for v in per_dim.values()) and best >= bound - args.epsilon,
        "best": res.best.to_json() if res.best else None,
    }
    out.write("luders.json", mio.dumps(report), main=True)
    out.close()
    _say(args, f"{fam}: bound {bound:+.6f}, most negative found {best:+.6f} "
               f"({'respected' if report['bound_respected'] else 'EXCEEDED'})")
    for d, v in per_dim.items():
        _say(args, f"  dim {d}: uniform min {v['min']:+.6f}, below bound {v['below_bound']} of {args.trials}")
    return EXIT_OK


def cmd_shots(args) -> int:
    obj = mio.read_json(args.plan_file)
    if args.seed is not None:
        obj = dict(obj, seed=args.seed)
    plan = ShotPlan.from_json(obj)
    out = Output(args, "shots", plan.to_json())
    est = estimate_dataset(plan, workers=resolve_workers(args.workers))
    fams = applicable_families(est.dataset)
    unc = {f: evaluate_with_errors(est, f, args.epsilon) for f in fams}
    regime = classify_regime({f: u.report for f, u in unc.items()}, args.epsilon)
    ext, text = _dataset_text(est.dataset, args.format, est.stderr)
    out.write(f"estimates.{ext}", text, main=True)
    out.write("reports.json", mio.dumps({"reports": {f: u.to_json() for f, u in unc.items()},
                                        "regime": regime.to_json()}))
    out.close()
    for f, u in unc.items():
        flag = "significant violation" if u.significant_violation else ("inconclusive" if u.inconclusive else "")
        _say(args, f"  {f:<8} min {u.report.min_value:+.5f} +- {u.stderr:.5f}  {flag}")
    return EXIT_OK


def cmd_audit(args) -> int:
    ds, stderr = mio.load_dataset(args.dataset_file)
    reports = evaluate_all(ds, args.epsilon)
    regime = classify_regime(reports, args.epsilon)
    out = Output(args, "audit", {"dataset": str(args.dataset_file)})
    payload = _reports_json(reports, regime)
    if stderr:
        payload["uncertainty"] = {f: evaluate_with_errors(ds, f, args.epsilon, stderr).to_json() for f in reports}
    out.write("audit.json", mio.dumps(payload), main=args.format == "json")
    out.close()
    if args.format != "json" or args.out:
        for r in reports.values():
            print("  " + describe(r, ds.kind))
        print(f"  regime: {regime.regime}")
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = mio.RunManifest.from_json(mio.read_json(args.manifest))
    argv = list(manifest.argv)
    if args.out:
        if "--out" in argv:
            argv[argv.index("--out") + 1] = args.out
        else:
            argv += ["--out", args.out]
    return main(argv)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", help="output directory (default: main result to stdout)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $MACROREAL_WORKERS or 1)")
    p.add_argument("--epsilon", type=float, default=EPS, help="satisfaction tolerance (default 1e-9)")
    p.add_argument("--grid", type=int, default=None, help="grid points per scanned parameter")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="data output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="macroreal", description="Macrorealism condition toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", parents=[common], help="scan a figure preset")
    p.add_argument("figure", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("construct", parents=[common], help="equal-overlap analytic construction")
    p.add_argument("n", type=int, choices=(4, 5))
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("scan", parents=[common], help="scan from a JSON spec file")
    p.add_argument("spec_file")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("luders", parents=[common], help="random search against a family's Lüders bound")
    p.add_argument("family", choices=sorted(FAMILY_TIMES))
    p.add_argument("--dims", type=int, nargs="+", default=[2])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--refine-steps", type=int, default=300)
    p.add_argument("--sampler", choices=("generic", "spin", "gellmann"), default="generic")
    p.set_defaults(func=cmd_luders)

    p = sub.add_parser("shots", parents=[common], help="finite-shot estimate from a JSON plan")
    p.add_argument("plan_file")
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("audit", parents=[common], help="evaluate every applicable family on a data set file")
    p.add_argument("dataset_file")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("replay", parents=[common], help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    if args.workers is None and os.environ.get("MACROREAL_WORKERS"):
        args.workers = resolve_workers(None)
    try:
        return args.func(args)
    except InvariantBreach as exc:
        print(f"macroreal: invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except MacrorealError as exc:
        print(f"macroreal: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
