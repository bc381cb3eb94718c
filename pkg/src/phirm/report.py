"""Trace files: CSV output, the offline verifier, metadata and SVG plots."""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BLACKWELL_SLACK, COLUMNS, seed_average, theorem_rhs
from .config import parse_config
from .experiment import ExperimentResult, make_link
from .transforms import build_family

HEADER = ("t",) + COLUMNS
POTENTIAL_SLACK = 1e-6
DOMINATION_SLACK = 1e-8
METADATA = "metadata.json"


class SchemaError(ValueError):
    pass


def _fmt(x) -> str:
    # repr is the shortest string that round-trips to the same double
    return repr(float(x))


def write_csv(path, columns: dict) -> None:
    """``columns`` maps each name in :data:`COLUMNS` to a length-T array."""
    n = len(columns[COLUMNS[0]])
    cols = [np.asarray(columns[c], dtype=float).tolist() for c in COLUMNS]
    lines = [",".join(HEADER)]
    for i in range(n):
        lines.append(str(i + 1) + "," + ",".join(_fmt(c[i]) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> dict:
    text = Path(path).read_text()
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = tuple(h.strip() for h in rows[0].split(","))
    if header != HEADER:
        raise SchemaError(f"{path}: header {header} does not match {HEADER}")
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    data = []
    for i, row in enumerate(rows[1:], 1):
        cells = row.split(",")
        if len(cells) != len(HEADER):
            raise SchemaError(f"{path}: row {i} has {len(cells)} cells, expected {len(HEADER)}")
        try:
            data.append([float(c) for c in cells])
        except ValueError:
            raise SchemaError(f"{path}: row {i} has a non-numeric cell") from None
    arr = np.array(data)
    if not np.array_equal(arr[:, 0], np.arange(1, len(arr) + 1)):
        raise SchemaError(f"{path}: column t must run 1, 2, ..., T")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{path}: non-finite values")
    return {name: arr[:, j] for j, name in enumerate(HEADER)}


@dataclass
class CheckResult:
    name: str
    ok: bool | None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else ("SKIP" if self.ok is None else "FAIL")
        return f"{self.name}: {status}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class VerifyReport:
    path: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok is not False for c in self.checks)

    def lines(self):
        return [f"{self.path}"] + ["  " + c.line() for c in self.checks]


def _first_failure(name, bad, detail):
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return CheckResult(name, True)
    row = int(idx[0]) + 1
    return CheckResult(name, False, f"row {row} (t={row}): {detail(int(idx[0]))}; {idx.size} rows fail")


def _load_metadata(csv_path):
    meta_path = Path(csv_path).parent / METADATA
    if not meta_path.exists():
        return None
    return json.loads(meta_path.read_text())


def verify_csv(path) -> VerifyReport:
    """Re-check every logged inequality in a trace CSV from the file alone.

    Blackwell rows are checked on every file. Bound domination and the
    potential recursion are statements about expectations, so when the
    directory's metadata marks the file as a single seed they are skipped in
    favour of the seed-averaged file. With metadata present, ``theorem_rhs`` is
    also recomputed from ``t`` and ``g_error_sum``.
    """
    d = read_csv(path)
    rep = VerifyReport(str(path))
    lhs, rhs = d["blackwell_lhs"], d["blackwell_rhs"]
    rep.checks.append(_first_failure(
        "blackwell", lhs > rhs + BLACKWELL_SLACK, lambda i: f"lhs {float(lhs[i])!r} > rhs {float(rhs[i])!r}"))
    err = d["g_error_sum"]
    rep.checks.append(_first_failure(
        "g_error_sum_monotone", np.concatenate([[err[0] < 0], np.diff(err) < 0]),
        lambda i: f"g_error_sum decreases to {float(err[i])!r}"))

    meta = _load_metadata(path)
    entry = None
    if meta is not None:
        entry = meta.get("files", {}).get(Path(path).name)
    per_seed = entry is not None and entry.get("kind") == "seed"
    obj, bound = d["realized_objective"], d["theorem_rhs"]
    pot, pbound = d["potential"], d["potential_bound"]
    if per_seed:
        rep.checks.append(CheckResult("domination", None, "single seed; bound holds in expectation"))
        rep.checks.append(CheckResult("potential", None, "single seed; bound holds in expectation"))
    else:
        rep.checks.append(_first_failure(
            "domination", obj > bound + DOMINATION_SLACK,
            lambda i: f"objective {float(obj[i])!r} > theorem_rhs {float(bound[i])!r}"))
        rep.checks.append(_first_failure(
            "potential", pot > pbound + POTENTIAL_SLACK,
            lambda i: f"potential {float(pot[i])!r} > bound {float(pbound[i])!r}"))

    if entry is not None:
        cfg = parse_config(meta["config"], METADATA)
        family = build_family(cfg.family, entry["num_actions"])
        expect = theorem_rhs(make_link(cfg), family, cfg.reward_bound, d["t"], err)
        rep.checks.append(_first_failure(
            "theorem_rhs_consistency",
            ~np.isclose(bound, expect, rtol=1e-9, atol=1e-12),
            lambda i: f"logged {float(bound[i])!r}, recomputed {float(expect[i])!r}"))
    return rep


def player_tag(result: ExperimentResult, i: int) -> str:
    return "" if len(result.players) == 1 else f"_p{i + 1}"


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write per-seed and mean CSVs, the SVG summary and ``metadata.json``.

    Returns the mapping of file name to metadata entry.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    files = {}
    for i, pl in enumerate(result.players):
        tag = player_tag(result, i)
        n = pl.family.num_actions
        for j, seed in enumerate(cfg.seeds):
            name = f"seed_{seed}{tag}.csv"
            write_csv(out / name, {c: pl.columns[c][:, j] for c in COLUMNS})
            files[name] = {"kind": "seed", "seed": seed, "player": i + 1, "num_actions": n}
        avg = seed_average(pl.columns, pl.link, pl.family, cfg.reward_bound)
        name = f"mean{tag}.csv"
        write_csv(out / name, avg)
        files[name] = {"kind": "mean", "player": i + 1, "num_actions": n}
        write_svg(out / f"summary{tag}.svg", avg, title=_title(cfg, pl))
    meta = {
        "config": cfg.to_text(),
        "config_sha256": cfg.digest(),
        "versions": {
            "phirm": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "normalization": None if result.normalization is None else [
            {"player": i + 1, "scale": s, "offset": o} for i, (s, o) in enumerate(result.normalization)
        ],
        "files": files,
    }
    if result.ce_gaps:
        meta["ce_gap"] = {
            "per_seed": {str(s): g for s, g in zip(cfg.seeds, result.ce_gaps)},
            "mean": float(np.mean(result.ce_gaps)),
        }
    (out / METADATA).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return files


def _title(cfg, pl):
    link = f"p={cfg.p:g}" if cfg.link == "polynomial" else f"eta={cfg.eta:g}"
    return f"{cfg.family.upper()} |A|={pl.family.num_actions} {cfg.link} {link} {cfg.estimator}"


def write_svg(path, avg: dict, title: str = "", width: int = 640, height: int = 400) -> None:
    """Seed-averaged objective against the bound, log-scaled t axis."""
    t = np.arange(1, len(avg["realized_objective"]) + 1, dtype=float)
    series = [("realized objective", avg["realized_objective"], "#1f77b4"),
              ("bound", avg["theorem_rhs"], "#d62728")]
    # a few hundred log-spaced points are plenty for a polyline
    idx = np.unique(np.geomspace(1, len(t), num=min(len(t), 400)).astype(int) - 1)
    lo = min(0.0, float(min(s[idx].min() for _, s, _ in series)))
    hi = float(max(s[idx].max() for _, s, _ in series))
    hi = hi if hi > lo else lo + 1.0
    ml, mr, mt, mb = 60, 20, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    lx_max = max(np.log10(t[-1]), 1e-12)

    def xy(ti, v):
        return ml + pw * np.log10(ti) / lx_max, mt + ph * (1 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for k in range(int(np.floor(lx_max)) + 1):
        x, _ = xy(10.0**k, lo)
        parts.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">1e{k}</text>')
    for v in np.linspace(lo, hi, 5):
        _, y = xy(1.0, v)
        parts.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{v:.3g}</text>')
    parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">t</text>')
    for j, (label, s, color) in enumerate(series):
        pts = " ".join("{:.2f},{:.2f}".format(*xy(t[i], s[i])) for i in idx)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{ml + pw - 4}" y="{mt + 14 + 14 * j}" text-anchor="end" fill="{color}" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def find_violation(result: ExperimentResult):
    """First bound violation as ``(player, seed, t, what)``, or ``None``.

    Blackwell is checked per seed and step; domination and the potential
    recursion on the seed average.
    """
    cfg = result.config
    for i, pl in enumerate(result.players):
        c = pl.columns
        bad = c["blackwell_lhs"] > c["blackwell_rhs"] + BLACKWELL_SLACK
        if bad.any():
            ti, si = np.argwhere(bad)[0]
            return i + 1, cfg.seeds[si], int(ti) + 1, "blackwell"
        avg = seed_average(c, pl.link, pl.family, cfg.reward_bound)
        for what, a, b, slack in (
            ("domination", avg["realized_objective"], avg["theorem_rhs"], DOMINATION_SLACK),
            ("potential", avg["potential"], avg["potential_bound"], POTENTIAL_SLACK),
        ):
            bad = a > b + slack
            if bad.any():
                return i + 1, "mean", int(np.flatnonzero(bad)[0]) + 1, what
    return None
