"""Command-line front end: ``pingpong-qkd {sweep,table,simulability,gad,witness}``.

Settings come from flags, optionally layered over a ``key=value`` file
given with ``--config``; flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .channels import DampingParams, GadParams, gad_kraus, jc_damping, nonmarkov_witness, unitality_deviation
from .classical_sim import algebraic_witness, feasibility_search
from .info import key_rates
from .protocol import (BELL_LABELS, ProtocolScenario, Variant, closed_form_joint,
                       measure_joint)

log = logging.getLogger("pingpong_qkd")

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3

CSV_HEADER = ["scenario", "gt", "gamma", "lambda", "i_ab", "i_ae", "chi_ae",
              "chi_ab", "k_min", "k_max"]

DEFAULTS = {
    "scenario": "case1",
    "g": 1.0,
    "gamma": [0.1, 4.0, 15.0],
    "t_max": 4.0,
    "points": 401,
    "lambda": None,
    "p": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
    "out": None,
    "format": "csv",
    "grid_step": 0.01,
    "tol": 1e-6,
    "jobs": 1,
}


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class SweepConfig:
    scenario: Variant = Variant.CASE1
    g: float = 1.0
    gammas: tuple[float, ...] = (0.1, 4.0, 15.0)
    t_max: float = 4.0
    n_points: int = 401
    output_path: str | None = None
    format: str = "csv"
    p: float = 0.0
    jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", Variant(self.scenario))
        if self.n_points < 2:
            raise UsageError("--points must be at least 2")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise UsageError("--t-max must be positive")
        if not self.gammas:
            raise UsageError("need at least one --gamma")
        if self.format not in ("csv", "svg"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        try:
            DampingParams(self.g, 0.0)
            for gm in self.gammas:
                DampingParams(self.g, gm)
            if self.scenario is Variant.GAD:
                GadParams(self.p, 0.0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


@dataclass(frozen=True)
class SweepRow:
    gt: float
    gamma: float
    lam: float
    i_ab: float
    i_ae: float
    chi_ae: float
    chi_ab: float
    k_min: float
    k_max: float
    problems: tuple[str, ...] = field(default=(), compare=False)

    def cells(self, scenario: str) -> list[str]:
        return [scenario] + [fmt(v) for v in (self.gt, self.gamma, self.lam, self.i_ab,
                                              self.i_ae, self.chi_ae, self.chi_ab,
                                              self.k_min, self.k_max)]


def _scenario(variant: Variant, lam: float, p: float) -> ProtocolScenario:
    return ProtocolScenario(variant, lam, p if variant is Variant.GAD else 0.0)


def _row(job: tuple[Variant, float, float, float, float]) -> SweepRow:
    variant, g, gamma, gt, p = job
    lam = jc_damping(DampingParams(g, gamma), gt / g)
    rep = key_rates(_scenario(variant, lam, p))
    return SweepRow(gt, gamma, lam, rep.i_ab, rep.i_ae, rep.chi_ae, rep.chi_ab,
                    rep.k_min, rep.k_max, tuple(rep.violations()))


def sweep_rows(cfg: SweepConfig) -> list[SweepRow]:
    gts = np.linspace(0.0, cfg.t_max, cfg.n_points)
    jobs = [(cfg.scenario, cfg.g, gm, float(gt), cfg.p) for gm in cfg.gammas for gt in gts]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(_row, jobs, chunksize=32))
    return [_row(j) for j in jobs]


def rows_to_csv(rows: Sequence[SweepRow], scenario: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.cells(scenario))
    return buf.getvalue()


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def rows_to_svg(rows: Sequence[SweepRow], title: str) -> str:
    """Plain 800x600 line chart of k_max against gt, one polyline per gamma."""
    width, height = 800, 600
    left, right, top, bottom = 80, 160, 50, 60
    xs = [r.gt for r in rows]
    ys = [r.k_max for r in rows]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def py(y: float) -> float:
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for k in range(6):
        xv = x0 + k * (x1 - x0) / 5
        yv = y0 + k * (y1 - y0) / 5
        out.append(f'<text x="{px(xv):.1f}" y="{height - bottom + 20}" text-anchor="middle" '
                   f'font-size="12">{xv:.3g}</text>')
        out.append(f'<text x="{left - 8}" y="{py(yv) + 4:.1f}" text-anchor="end" '
                   f'font-size="12">{yv:.3g}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{left}" y1="{py(0):.2f}" x2="{width - right}" y2="{py(0):.2f}" '
                   f'stroke="#999" stroke-dasharray="4 4"/>')
    out.append(f'<text x="{(left + width - right) / 2:.1f}" y="{height - 15}" '
               f'text-anchor="middle" font-size="14">gt</text>')
    out.append(f'<text x="20" y="{(top + height - bottom) / 2:.1f}" font-size="14" '
               f'transform="rotate(-90 20 {(top + height - bottom) / 2:.1f})" '
               f'text-anchor="middle">k_max (bits)</text>')
    gammas = list(dict.fromkeys(r.gamma for r in rows))
    for i, gm in enumerate(gammas):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(r.gt):.2f},{py(r.k_max):.2f}" for r in rows if r.gamma == gm)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = top + 20 + 22 * i
        out.append(f'<line x1="{width - right + 15}" y1="{ly}" x2="{width - right + 45}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - right + 52}" y="{ly + 4}" font-size="12">'
                   f'gamma = {gm:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def cmd_sweep(cfg: SweepConfig) -> int:
    rows = sweep_rows(cfg)
    bad = [r for r in rows if r.problems]
    if bad:
        r = bad[0]
        raise InvariantViolation(f"row gt={r.gt:g}, gamma={r.gamma:g}: " + "; ".join(r.problems))
    if cfg.format == "csv":
        text = rows_to_csv(rows, cfg.scenario.value)
    else:
        text = rows_to_svg(rows, f"k_max vs gt ({cfg.scenario.value}, g = {cfg.g:g})")
    _emit(text, cfg.output_path)
    return EXIT_OK


def cmd_table(variant: Variant, lam: float, p: float = 0.0) -> int:
    scenario = _scenario(variant, lam, p)
    measured = measure_joint(scenario)
    try:
        closed = closed_form_joint(scenario)
    except ValueError:
        closed = None
    print(f"# scenario={variant.value} lambda={fmt(lam)}"
          + (f" p={fmt(p)}" if variant is Variant.GAD else ""))
    print("A E B     simulated        published")
    for a in range(2):
        for e in range(3):
            for b in range(4):
                ref = "-" if closed is None else f"{closed[a, e, b]:.12f}"
                print(f"{a} {e} {BELL_LABELS[b]:<5} {measured[a, e, b]:.12f}   {ref}")
    if closed is not None:
        print(f"max deviation: {measured.max_deviation(closed):.3e}")
    return EXIT_OK


def cmd_simulability(lam: float, grid_step: float, tol: float) -> int:
    source = measure_joint(ProtocolScenario.noiseless())
    target = closed_form_joint(ProtocolScenario(Variant.CASE2, lam))
    rep = feasibility_search(source, target, grid_step, tol)
    cert = algebraic_witness(lam)
    verdict = "FEASIBLE" if rep.feasible else "INFEASIBLE"
    print(f"# target: case2 table at lambda={fmt(lam)}; grid_step={grid_step:g} tol={tol:g}")
    print(f"min residual (L-inf): {rep.min_residual:.6e}  over {rep.evaluated} Alice maps")
    print("best a:", np.array2string(rep.best_a.rows, precision=4))
    print("best b:", np.array2string(rep.best_b.rows, precision=4))
    print("algebraic certificate:")
    for i, step in enumerate(cert.steps, 1):
        print(f"  {i}. {step}")
    print(verdict)
    if cert.infeasible == rep.feasible:
        raise InvariantViolation("grid search and algebraic certificate disagree")
    return EXIT_OK


def cmd_gad(lam: float, p_list: Sequence[float], out: str | None = None) -> int:
    rows = []
    for p in p_list:
        params = GadParams(p, lam)
        rep = key_rates(ProtocolScenario(Variant.GAD, lam, p))
        rows.append((p, unitality_deviation(gad_kraus(params)), rep.k_max))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "unitality_deviation", "k_max"])
    for row in rows:
        w.writerow([fmt(v) for v in row])
    ordered = sorted(rows)
    for (p1, _, k1), (p2, _, k2) in zip(ordered, ordered[1:]):
        if k2 > k1 + 1e-9:
            log.warning("k_max rises from %.6g to %.6g between p=%g and p=%g", k1, k2, p1, p2)
    _emit(buf.getvalue(), out)
    return EXIT_OK


def cmd_witness(g: float, gamma: float, t_max: float, n: int) -> int:
    rep = nonmarkov_witness(DampingParams(g, gamma), t_max / g, n)
    print("gt,lambda")
    for t, lam in zip(rep.times, rep.lambdas):
        print(f"{fmt(g * t)},{fmt(lam)}")
    print(f"# non-markovian: {'yes' if rep.non_markovian else 'no'}")
    for a, b in rep.revival_intervals:
        print(f"# revival: gt in [{fmt(g * a)}, {fmt(g * b)}]")
    return EXIT_OK


# ---------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "lam":
            key = "lambda"
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in ("gamma", "p"):
            if isinstance(value, str):
                return [float(v) for v in value.replace(",", " ").split()]
            return [float(v) for v in value]
        if key in ("points", "jobs"):
            return int(value)
        if key in ("g", "t_max", "lambda", "grid_step", "tol"):
            return float(value)
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", choices=[v.value for v in Variant])
    common.add_argument("--g", type=float)
    common.add_argument("--gamma", type=float, action="append")
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--points", type=int)
    common.add_argument("--lambda", dest="lambda", type=float)
    common.add_argument("--p", type=float, action="append",
                        help="GAD mixing parameter (repeatable)")
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "svg"])
    common.add_argument("--grid-step", dest="grid_step", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--jobs", type=int)
    common.add_argument("--config")

    parser = _Parser(prog="pingpong-qkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sweep", parents=[common], help="key rates over gt for each gamma")
    sub.add_parser("table", parents=[common], help="simulated vs published P_AEB")
    sub.add_parser("simulability", parents=[common], help="local classical post-processing test")
    sub.add_parser("gad", parents=[common], help="finite-temperature (GAD) study")
    sub.add_parser("witness", parents=[common], help="non-Markovianity of lambda(t)")
    return parser


def resolve(ns: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if ns.config:
        settings.update({k: _coerce(k, v) for k, v in read_config(ns.config).items()})
    for key in DEFAULTS:
        val = getattr(ns, key, None)
        if val is not None:
            settings[key] = val
    return settings


def _need_lambda(s: dict) -> float:
    lam = s["lambda"]
    if lam is None:
        raise UsageError("--lambda is required")
    if not 0.0 <= lam <= 1.0:
        raise UsageError(f"--lambda must lie in [0, 1], got {lam}")
    return lam


def run(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    s = resolve(ns)
    cmd = ns.command
    variant = Variant(s["scenario"])
    p_values = s["p"]
    for p in p_values:
        if not 0.0 <= p <= 0.5:
            raise UsageError(f"--p must lie in [0, 1/2], got {p}")
    if cmd == "sweep":
        if variant is Variant.GAD and len(p_values) != 1:
            raise UsageError("sweep over the gad scenario needs exactly one --p")
        cfg = SweepConfig(variant, s["g"], tuple(s["gamma"]), s["t_max"], s["points"],
                          s["out"], s["format"], p_values[0] if variant is Variant.GAD else 0.0,
                          s["jobs"])
        return cmd_sweep(cfg)
    if cmd == "table":
        p = p_values[0] if variant is Variant.GAD else 0.0
        lam = 0.0 if variant is Variant.NOISELESS and s["lambda"] is None else _need_lambda(s)
        return cmd_table(variant, lam, p)
    if cmd == "simulability":
        if not 0 < s["grid_step"] <= 0.5:
            raise UsageError("--grid-step must lie in (0, 0.5]")
        if s["tol"] <= 0:
            raise UsageError("--tol must be positive")
        return cmd_simulability(_need_lambda(s), s["grid_step"], s["tol"])
    if cmd == "gad":
        return cmd_gad(_need_lambda(s), p_values, s["out"])
    if len(s["gamma"]) != 1:
        raise UsageError("witness takes exactly one --gamma")
    if s["points"] < 10 or s["t_max"] <= 0:
        raise UsageError("witness needs --points >= 10 and --t-max > 0")
    try:
        params = DampingParams(s["g"], s["gamma"][0])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cmd_witness(params.g, params.gamma, s["t_max"], s["points"])


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return run(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
