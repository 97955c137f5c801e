"""Command-line front end: ``solve``, ``sweep`` and ``verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Sequence

import numpy as np

from .kernel import GridSpec
from .model import EquilibriumResult, StrategyProfile, Tag, ValidationError
from .variants import PARAM_KEYS, VARIANTS, params_from_mapping, read_config, solve, verify

EXIT_OK, EXIT_FAIL, EXIT_NO_EQ, EXIT_INVALID = 0, 1, 2, 3

COLUMNS = (
    "value", "i_l", "i_f", "p_l", "p_f", "n_l", "n_f", "pi_l", "pi_f",
    "degree", "eu_resource_cost", "tag", "oracle", "price_lo", "price_hi",
)


def fmt(x: float | None) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def _load_params(args: argparse.Namespace, overrides: dict[str, float] | None = None):
    values: dict[str, str | float] = {}
    if args.config:
        values.update(read_config(args.config))
    for item in args.set or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        values[key.strip()] = val.strip()
    if overrides:
        values.update(overrides)
    return params_from_mapping(values)


def _grid(args: argparse.Namespace) -> GridSpec | None:
    n = getattr(args, "oracle_grid", None)
    if n is None or n == 0:
        return GridSpec() if n is None else None
    return GridSpec(n_points=n)


def _result_json(res: EquilibriumResult) -> dict:
    out = {
        "tag": res.tag.value,
        "profiles": [asdict(p) for p in res.profiles],
        "price_interval": res.price_interval,
        "interval_price": res.interval_price,
        "outcome": asdict(res.outcome) if res.outcome else None,
        "metrics": asdict(res.metrics) if res.metrics else None,
        "diagnostics": res.diagnostics,
    }
    return out


def _oracle_verdict(params, variant, res: EquilibriumResult, grid, epsilon) -> str:
    if grid is None:
        return "skipped"
    if not res.profiles:
        return "n/a"
    reports = [verify(params, variant, prof, grid, epsilon) for prof in res.profiles]
    return "pass" if all(r.passed for r in reports) else "fail"


def cmd_solve(args: argparse.Namespace) -> int:
    params = _load_params(args)
    res = solve(params, args.variant)
    payload = _result_json(res)
    grid = _grid(args)
    if grid is not None and res.profiles:
        payload["oracle"] = [
            _report_json(verify(params, args.variant, prof, grid, args.epsilon)) for prof in res.profiles
        ]
    json.dump(payload, sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")
    return EXIT_NO_EQ if res.tag is Tag.NO_EQUILIBRIUM else EXIT_OK


def _report_json(rep) -> dict:
    return {
        "profile": asdict(rep.profile),
        "gains": {f"stage{k + 1}": g for k, g in enumerate(rep.gains)},
        "epsilon": rep.epsilon,
        "verdict": rep.verdict,
    }


def cmd_verify(args: argparse.Namespace) -> int:
    params = _load_params(args)
    grid = _grid(args) or GridSpec()
    if args.profile:
        try:
            vals = [float(v) for v in args.profile.split(",")]
        except ValueError:
            raise ValidationError(f"--profile expects four numbers, got {args.profile!r}") from None
        if len(vals) != 4:
            raise ValidationError("--profile expects i_l,i_f,p_l,p_f")
        profiles = [StrategyProfile(*vals)]
    else:
        res = solve(params, args.variant)
        if res.tag is Tag.NO_EQUILIBRIUM:
            print(f"no equilibrium: {res.diagnostics.get('reason', '')}")
            return EXIT_NO_EQ
        profiles = res.profiles
    ok = True
    for prof in profiles:
        rep = verify(params, args.variant, prof, grid, args.epsilon)
        ok &= rep.passed
        gains = " ".join(f"stage{k + 1}={fmt(g)}" for k, g in enumerate(rep.gains))
        print(f"{rep.verdict} i_l={fmt(prof.i_l)} i_f={fmt(prof.i_f)} p_l={fmt(prof.p_l)} "
              f"p_f={fmt(prof.p_f)} {gains} epsilon={fmt(rep.epsilon)}")
    return EXIT_OK if ok else EXIT_FAIL


def sweep_row(task: tuple) -> list[str]:
    """One CSV row; failures land in the tag column instead of aborting."""
    base_values, variant, param, value, n_oracle, epsilon = task
    row = [fmt(value)] + [""] * (len(COLUMNS) - 1)
    try:
        params = params_from_mapping({**base_values, param: value})
        res = solve(params, variant)
        grid = None if n_oracle == 0 else GridSpec(n_points=n_oracle)
        verdict = _oracle_verdict(params, variant, res, grid, epsilon)
    except (ValidationError, RuntimeError, ArithmeticError) as exc:
        row[COLUMNS.index("tag")] = f"error: {type(exc).__name__}: {exc}"
        return row
    prof, out, met = res.profile, res.outcome, res.metrics
    if prof is not None:
        row[1:5] = [fmt(prof.i_l), fmt(prof.i_f), fmt(prof.p_l), fmt(prof.p_f)]
    if out is not None:
        row[5:9] = [fmt(out.n_l), fmt(out.n_f), fmt(out.pi_l), fmt(out.pi_f)]
    if met is not None:
        row[9:11] = [fmt(met.degree), fmt(met.eu_resource_cost)]
    row[11] = res.tag.value
    row[12] = verdict
    if res.price_interval is not None:
        row[13:15] = [fmt(res.price_interval[0]), fmt(res.price_interval[1])]
    return row


def _workers() -> int:
    cap = os.environ.get("SPNE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValidationError(f"SPNE_THREADS must be an integer, got {cap!r}") from None
    return n


def _is_full(degree: float) -> bool:
    return abs(degree - 1.0) <= 1e-9


def locate_threshold(base_values: dict, variant: str, param: str, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Bisect between a full-lease point ``lo`` and a partial-lease point ``hi``."""
    def full(v: float) -> bool:
        res = solve(params_from_mapping({**base_values, param: v}), variant)
        return res.metrics is not None and _is_full(res.metrics.degree)

    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if full(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detect_threshold(rows: list[list[str]]) -> tuple[float, float] | None:
    """Bracket ``(last full, first partial)`` where the degree first drops below 1."""
    k = COLUMNS.index("degree")
    last_full = None
    for row in rows:
        if not row[k]:
            continue
        deg = float(row[k])
        if _is_full(deg):
            last_full = float(row[0])
        elif last_full is not None:
            return last_full, float(row[0])
    return None


def render_csv(rows: list[list[str]], footer: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    writer.writerows(rows)
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def render_svg(rows: list[list[str]], column: str, param: str, width: int = 640, height: int = 400) -> str:
    """Single-series line chart of ``column`` against the swept parameter."""
    k = COLUMNS.index(column)
    pts = [(float(r[0]), float(r[k])) for r in rows if r[k] not in ("", "nan")]
    pad = 50
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    x1 = x1 if x1 > x0 else x0 + 1.0
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(x: float) -> float:
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="14">{param}</text>\n'
        f'<text x="15" y="{height / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {height / 2})">{column}</text>\n'
        f'<text x="{pad}" y="{height - pad + 18}" font-size="11" text-anchor="middle">{fmt(x0)}</text>\n'
        f'<text x="{width - pad}" y="{height - pad + 18}" font-size="11" text-anchor="middle">{fmt(x1)}</text>\n'
        f'<text x="{pad - 5}" y="{height - pad}" font-size="11" text-anchor="end">{fmt(y0)}</text>\n'
        f'<text x="{pad - 5}" y="{pad + 4}" font-size="11" text-anchor="end">{fmt(y1)}</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>\n'
        "</svg>\n"
    )


def run_sweep(base_values: dict, variant: str, param: str, lo: float, hi: float, steps: int,
              n_oracle: int = 2001, epsilon: float | None = None, workers: int = 1) -> tuple[list[list[str]], list[str]]:
    if param not in PARAM_KEYS and param != "delta":
        raise ValidationError(f"cannot sweep unknown parameter {param!r}")
    if steps < 2 or not hi > lo:
        raise ValidationError("a sweep needs steps >= 2 and hi > lo")
    values = np.linspace(lo, hi, steps)
    tasks = [(base_values, variant, param, float(v), n_oracle, epsilon) for v in values]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [sweep_row(t) for t in tasks]
    footer = []
    bracket = detect_threshold(rows)
    if bracket is not None:
        thr = locate_threshold(base_values, variant, param, *bracket)
        footer.append(f"threshold {param}={fmt(thr)} bracket=[{fmt(bracket[0])}, {fmt(bracket[1])}]")
    else:
        footer.append(f"threshold {param}=none")
    return rows, footer


def cmd_sweep(args: argparse.Namespace) -> int:
    base_values: dict[str, str | float] = {}
    if args.config:
        base_values.update(read_config(args.config))
    for item in args.set or []:
        key, _, val = item.partition("=")
        base_values[key.strip()] = val.strip()
    n_oracle = 2001 if args.oracle_grid is None else args.oracle_grid
    rows, footer = run_sweep(base_values, args.variant, args.sweep_param, args.lo, args.hi, args.steps,
                             n_oracle, args.epsilon, _workers())
    text = render_csv(rows, footer)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_svg(rows, args.svg_column, args.sweep_param))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spne-market", description="Equilibria of leader/follower spectrum markets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="file of 'key = value' lines ('#' comments)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter (repeatable)")
        p.add_argument("--variant", default="base", choices=sorted(VARIANTS))
        p.add_argument("--oracle-grid", type=int, default=None, help="oracle points per decision (0 disables)")
        p.add_argument("--epsilon", type=float, default=None, help="oracle tolerance (default scales with the grid)")

    p_solve = sub.add_parser("solve", help="solve one market")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve, oracle_grid=0)

    p_sweep = sub.add_parser("sweep", help="solve along a parameter grid and write CSV")
    common(p_sweep)
    p_sweep.add_argument("--sweep-param", required=True)
    p_sweep.add_argument("--lo", type=float, required=True)
    p_sweep.add_argument("--hi", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, default=100, help="number of grid points, ends included")
    p_sweep.add_argument("--out", help="CSV path (stdout when omitted)")
    p_sweep.add_argument("--svg", help="also write a line chart here")
    p_sweep.add_argument("--svg-column", default="degree", choices=[c for c in COLUMNS if c not in ("tag", "oracle")])
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="check a profile (or the solver's) with the deviation oracle")
    common(p_verify)
    p_verify.add_argument("--profile", help="i_l,i_f,p_l,p_f to check instead of the solver's output")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
