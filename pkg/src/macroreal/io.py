"""File formats: versioned CSV for data sets and scans, JSON for everything else."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .correlators import MRDataset, key_label
from .errors import InvalidSpec

SCHEMA = "# macroreal-schema v1"


def _meta_line(ds: MRDataset) -> str:
    cycle = "-".join(str(c) for c in ds.cycle) if ds.cycle else ""
    return f"# n={ds.n} kind={ds.kind} subset={ds.subset} cycle={cycle}"


def dataset_csv(ds: MRDataset, stderr: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n" + _meta_line(ds) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "indices", "value"] + (["stderr"] if stderr is not None else []))
    by_label = {key_label(k, ds.kind): k for k in ds.values}
    for kind, idx, v in ds.rows():
        row = [kind, idx, repr(float(v))]
        if stderr is not None:
            row.append(repr(float(stderr[by_label[idx]])))
        w.writerow(row)
    return buf.getvalue()


def parse_dataset_csv(text: str, source: str = "<csv>") -> tuple[MRDataset, dict | None]:
    """Parse a data set CSV; errors name the file and line."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA:
        raise InvalidSpec(f"{source}:1: expected header comment {SCHEMA!r}")
    meta = {"n": None, "kind": "dichotomic", "subset": "full", "cycle": ""}
    body_start = 1
    while body_start < len(lines) and lines[body_start].startswith("#"):
        for tok in lines[body_start][1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
        body_start += 1
    reader = csv.reader(lines[body_start:])
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidSpec(f"{source}: no column header") from None
    cols = [h.strip() for h in header]
    for need in ("kind", "indices", "value"):
        if need not in cols:
            raise InvalidSpec(f"{source}:{body_start + 1}: missing column {need!r}")
    rows, errs = [], {}
    max_t = 0
    for lineno, rec in enumerate(reader, start=body_start + 2):
        if not rec or not "".join(rec).strip():
            continue
        if len(rec) != len(cols):
            raise InvalidSpec(f"{source}:{lineno}: expected {len(cols)} fields, got {len(rec)}")
        r = dict(zip(cols, rec))
        try:
            v = float(r["value"])
            times = [int("".join(ch for ch in p if ch.isdigit())) for p in r["indices"].split(",")]
            e = float(r["stderr"]) if "stderr" in r else None
        except ValueError as exc:
            raise InvalidSpec(f"{source}:{lineno}: {exc}") from None
        max_t = max(max_t, *times)
        rows.append((r["kind"], r["indices"], v))
        if e is not None:
            errs[r["indices"]] = e
    n = int(meta["n"]) if meta.get("n") not in (None, "", "None") else max_t
    cycle = tuple(int(c) for c in meta["cycle"].split("-")) if meta.get("cycle") else None
    try:
        ds = MRDataset.from_rows(n, rows, meta["kind"], meta["subset"], cycle)
    except InvalidSpec as exc:
        raise InvalidSpec(f"{source}: {exc}") from None
    stderr = None
    if errs:
        labels = {key_label(k, ds.kind): k for k in ds.values}
        stderr = {labels[lab]: e for lab, e in errs.items() if lab in labels}
    return ds, stderr


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise InvalidSpec(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def load_dataset(path) -> tuple[MRDataset, dict | None]:
    path = Path(path)
    if path.suffix.lower() == ".json":
        obj = read_json(path)
        try:
            ds = MRDataset.from_json(obj)
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"{path}: malformed dataset entry ({exc!r})") from None
        if any("stderr" in e for e in obj.get("entries", [])):
            labels = {key_label(k, ds.kind): k for k in ds.values}
            return ds, {labels[str(e["indices"])]: float(e["stderr"]) for e in obj["entries"] if "stderr" in e}
        return ds, None
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise InvalidSpec(f"{path}: no such file") from None
    return parse_dataset_csv(text, str(path))


def scan_csv(result) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    if result.spec.preset:
        buf.write(f"# preset={result.spec.preset} convention=bracket\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header())
    for row in result.rows():
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def parse_scan_csv(text: str) -> tuple[list[str], list[list]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header = rows[0]
    out = [[float(x) for x in r[:-1]] + [r[-1]] for r in rows[1:]]
    return header, out


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    seed: int | None
    version: str
    outputs: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "outputs": self.outputs,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunManifest":
        for name in ("command", "argv"):
            if name not in obj:
                raise InvalidSpec(f"manifest: missing field {name!r}")
        return cls(obj["command"], list(obj["argv"]), obj.get("config", {}), obj.get("seed"),
                   obj.get("version", ""), obj.get("outputs", []))
