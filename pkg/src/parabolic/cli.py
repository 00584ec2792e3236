"""Command line entry point: ``parabolic <subcommand> [options]``.

Every run writes its artifacts and a ``<name>.json`` record (containing the
full configuration) under ``--out``.  Exit codes: 0 when every invariant
checked by the run holds, 1 when one fails, 2 for usage errors and 3 when
a numerical method did not converge (details in ``error.json``).

The thread count for the renderers is read from ``PARABOLIC_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import NonConvergenceError, NotInBasinError

THREADS_ENV = "PARABOLIC_THREADS"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {"command": self.command, "options": _jsonable(self.options)}


# -- parsing helpers ------------------------------------------------------------


def exact_rational(text: str) -> Fraction:
    """``p/q`` or an integer; decimals are refused so angles stay exact."""
    t = text.strip()
    if any(ch in t for ch in ".eE"):
        raise argparse.ArgumentTypeError(f"{text!r}: give angles as exact rationals p/q")
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational") from exc


def mcf_string(text: str):
    from .mcf import Mcf

    try:
        return Mcf.from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def complex_pair(text: str) -> complex:
    try:
        re_, im_ = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r}: expected 're,im'") from exc
    return complex(re_, im_)


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r}: expected comma-separated integers") from exc


def window_arg(text: str):
    from .raster import Window

    try:
        vals = [float(x) for x in text.split(",")]
        return Window(*vals)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"{text!r}: expected xmin,xmax,ymin,ymax") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "entries") and hasattr(obj, "height"):
        return str(obj)
    if hasattr(obj, "as_list"):
        return obj.as_list()
    return obj


def _write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _germ(args):
    from .germ import UnicriticalGerm

    return UnicriticalGerm(args.d, args.omega)


# -- subcommands ----------------------------------------------------------------


def cmd_mcf_check(args, out: Path) -> tuple[bool, dict]:
    from .mcf import geometry_bound_defect, identity_report, random_mcf

    rng = np.random.default_rng(args.seed)
    counts: dict[str, int] = {}
    failures = []
    for _ in range(args.trials):
        omega = random_mcf(rng, args.max_height, args.max_entry)
        z = Fraction(int(rng.integers(-100, 101)), int(rng.integers(1, 101)))
        for name, ok in identity_report(omega, z).items():
            counts[name] = counts.get(name, 0) + int(ok)
            if not ok and len(failures) < 20:
                failures.append({"omega": str(omega), "z": z, "identity": name})
    worst = -math.inf
    for _ in range(args.geometry_samples):
        omega = random_mcf(rng, args.max_height, args.max_entry, min_height=1)
        z = math.sqrt(rng.uniform()) * complex(np.exp(2j * math.pi * rng.uniform()))
        worst = max(worst, geometry_bound_defect(omega, z))
    geometry_ok = worst <= 1e-12
    ok = all(c == args.trials for c in counts.values()) and geometry_ok
    result = {"trials": args.trials, "passed": counts, "failures": failures,
              "geometry_samples": args.geometry_samples, "geometry_worst_excess": worst,
              "geometry_ok": geometry_ok}
    return ok, result


def cmd_expand(args, out: Path) -> tuple[bool, dict]:
    from .mcf import eval_mu, expand_rational

    if abs(args.x) >= 1:
        raise UsageError("|x| must be < 1")
    omega = expand_rational(args.x)
    print(str(omega))
    ok = eval_mu(omega, Fraction(0)) == args.x
    return ok, {"x": args.x, "omega": str(omega), "round_trip": ok}


def cmd_valley_tower(args, out: Path) -> tuple[bool, dict]:
    from .valley import (McfStream, ValleyParams, build_tower, is_valley_type, synthetic_stream,
                         tower_to_json)
    from .mcf import Mcf

    if args.stream:
        stream = McfStream(Mcf.from_string(args.stream).entries, "given")
    else:
        rng = np.random.default_rng(args.seed)
        stream = synthetic_stream(args.big, args.small, args.length, args.period, rng)
    params = ValleyParams(args.N, args.M, args.horizon or len(stream) - args.M)
    valley = is_valley_type(stream, params)
    levels = build_tower(stream, params, args.depth)
    (out / "tower.json").write_text(tower_to_json(levels) + "\n")
    bound = 1 / (args.N - 1) if args.N > 1 else math.inf
    ok = valley and all(lv.alpha_bound <= bound for lv in levels)
    return ok, {"valley_type": valley, "depth": len(levels), "alpha_bound_max":
                max((lv.alpha_bound for lv in levels), default=0.0), "bound": bound}


def cmd_series(args, out: Path) -> tuple[bool, dict]:
    from .fatou import FatouSeries

    germ = _germ(args)
    fs = FatouSeries.from_germ(germ, args.order)
    s, a = germ.q_fold_series()
    return True, {"germ": germ.descriptor(), "leading_coefficient": complex(a),
                  "log_coefficient": fs.log_coefficient,
                  "fold_coefficients": [complex(c) for c in s.coeffs],
                  "fatou_negative": [complex(c) for c in fs.neg],
                  "fatou_positive": [complex(c) for c in fs.pos]}


def cmd_fatou_check(args, out: Path) -> tuple[bool, dict]:
    from .fatou import fatou_chart, petal_samples, write_samples_csv

    germ = _germ(args)
    chart = fatou_chart(germ, args.petal, args.tilt, args.tol)
    rng = np.random.default_rng(args.seed)
    pts = petal_samples(chart.petal, args.samples, rng)
    rows = write_samples_csv(out / "fatou_samples.csv", chart, pts)
    worst = max(r[4] for r in rows)
    threshold = args.threshold if args.threshold is not None else (1e-8 if args.tilt == 0 else 1e-6)
    return worst < threshold, {"germ": germ.descriptor(), "petal": args.petal, "tilt": args.tilt,
                               "margin": chart.petal.margin, "max_residual": worst,
                               "threshold": threshold}


def cmd_horn_sample(args, out: Path) -> tuple[bool, dict]:
    from .horn import build_sampler

    sampler = build_sampler(_germ(args), args.tol)
    ws = [complex(k / args.n, args.im) for k in range(args.n)]
    sampler.write_samples_csv(out / "horn_samples.csv", ws)
    defect = sampler.periodicity_defect(ws)
    summary = sampler.summary()
    summary["periodicity_defect"] = defect
    cps = sampler.critical_points() if args.critical else []
    summary["critical_points"] = [{"w": c.w, "z": c.z, "value": c.value,
                                   "preimage_order": c.preimage_order, "degree": c.degree}
                                  for c in cps]
    return defect < 1e-6, summary


def _render_outputs(raster, out: Path, stem: str, extra: dict) -> dict:
    from .raster import write_ppm, write_sidecar

    write_ppm(out / f"{stem}.ppm", raster)
    return write_sidecar(out / f"{stem}.json", raster, extra)


def cmd_renorm_render(args, out: Path) -> tuple[bool, dict]:
    from .horn import build_sampler
    from .raster import component_of, has_holes, render_renorm_domain

    sampler = build_sampler(_germ(args))
    raster = render_renorm_domain(sampler, args.window, args.res, args.budget)
    comp = component_of(raster.pixels == 1, raster.pixel_of(0j))
    info = {"component_fraction": float(comp.mean()), "inside_fraction": raster.fraction([1]),
            "component_has_holes": has_holes(comp)}
    _render_outputs(raster, out, "renorm_domain", info)
    return bool(comp.any()), {**info, "threads": _threads()}


def cmd_basin_render(args, out: Path) -> tuple[bool, dict]:
    from .raster import render_basin

    germ = _germ(args)
    raster = render_basin(germ, args.window, args.res, args.budget)
    info = {"basin_fraction": raster.fraction(range(germ.q))}
    _render_outputs(raster, out, "basin", info)
    return True, {**info, "threads": _threads()}


def cmd_lavaurs(args, out: Path) -> tuple[bool, dict]:
    from .implosion import lavaurs_experiment, write_ladder_csv

    rows = lavaurs_experiment(args.d, args.omega, args.delta, args.ks)
    write_ladder_csv(out / "lavaurs.csv", rows)
    errs = [r["sup_error"] for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    return decreasing, {"delta": args.delta, "ladder": rows, "strictly_decreasing": decreasing}


def cmd_gate(args, out: Path) -> tuple[bool, dict]:
    from .germ import UnicriticalGerm
    from .horn import ExtendedCoordinates
    from .implosion import conjugate_symmetry, gate_start_points, gate_transit, write_jsonl
    from .valley import MINUS, sector_side

    alpha = args.alpha
    try:
        flipped = sector_side(alpha) == MINUS
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    base = UnicriticalGerm(args.d, args.omega, alpha)
    if flipped:
        base = conjugate_symmetry(base)
    coords = ExtendedCoordinates(UnicriticalGerm(args.d, base.omega))
    starts = gate_start_points(coords, base.alpha, args.starts)
    records = []
    for z in starts:
        z0 = z.conjugate() if flipped else z
        res = gate_transit(args.d, args.omega, alpha, z0, None if flipped else coords, args.budget)
        records.append({"germ": {"d": args.d, "omega": str(args.omega)}, "alpha": alpha,
                        "z_start": z0, "m": res.m, "k": res.k, "steps": res.steps,
                        "window": list(res.window), "in_window": res.in_window})
    write_jsonl(out / "gate.jsonl", [_jsonable(r) for r in records])
    ok = bool(records) and all(r["in_window"] for r in records)
    return ok, {"alpha": alpha, "transits": len(records), "all_in_window": ok}


def cmd_skew_step(args, out: Path) -> tuple[bool, dict]:
    from .implosion import skew_step

    if (args.x is None) == (args.alpha is None):
        raise UsageError("give exactly one of --x and --alpha")
    step = skew_step(args.omega, x=args.x, alpha=args.alpha, d=args.d, numeric=args.numeric)
    data = step.as_dict()
    ok = True
    if step.numeric and "periodic" in step.numeric:
        ok = bool(step.numeric["periodic"])
    return ok, data


# -- parser ---------------------------------------------------------------------


def _alpha_arg(text: str):
    if "," in text:
        return complex_pair(text)
    return exact_rational(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parabolic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.set_defaults(func=func)
        return sp

    def germ_opts(sp):
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--omega", type=mcf_string, default=mcf_string(""))

    sp = add("mcf-check", cmd_mcf_check, "exact identity suite on random fractions")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-height", type=int, default=10)
    sp.add_argument("--max-entry", type=int, default=50)
    sp.add_argument("--geometry-samples", type=int, default=1000)

    sp = add("expand", cmd_expand, "signed expansion of a rational")
    sp.add_argument("--x", type=exact_rational, required=True)

    sp = add("valley-tower", cmd_valley_tower, "renormalization tower of a stream")
    sp.add_argument("--stream", default=None, help="explicit stream as an Mcf string")
    sp.add_argument("--big", type=int_list, default=[10, 12])
    sp.add_argument("--small", type=int, default=2)
    sp.add_argument("--period", type=int, default=2)
    sp.add_argument("--length", type=int, default=80)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--N", type=int, default=9)
    sp.add_argument("--M", type=int, default=1)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--depth", type=int, default=20)

    sp = add("series", cmd_series, "Taylor and formal Fatou series")
    germ_opts(sp)
    sp.add_argument("--order", type=int, default=None)

    sp = add("fatou-check", cmd_fatou_check, "Abel residuals on petal samples")
    germ_opts(sp)
    sp.add_argument("--petal", type=int, default=0)
    sp.add_argument("--tilt", type=float, default=0.0)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--threshold", type=float, default=None)

    sp = add("horn-sample", cmd_horn_sample, "normalized horn map samples")
    germ_opts(sp)
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--im", type=float, default=3.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--critical", action="store_true", help="also locate critical points")

    for name, func, default_window in (
        ("renorm-render", cmd_renorm_render, "-800,800,-800,800"),
        ("basin-render", cmd_basin_render, "-2,1,-1.5,1.5"),
    ):
        sp = add(name, func, "render " + name.split("-")[0])
        germ_opts(sp)
        sp.add_argument("--window", type=window_arg, default=window_arg(default_window))
        sp.add_argument("--res", type=int, default=512)
        sp.add_argument("--budget", type=int, default=20_000)

    sp = add("lavaurs", cmd_lavaurs, "Lavaurs convergence ladder")
    germ_opts(sp)
    sp.add_argument("--delta", type=exact_rational, default=Fraction(0))
    sp.add_argument("--ks", type=int_list, default=[100, 400, 1600])

    sp = add("gate", cmd_gate, "gate transit counts")
    germ_opts(sp)
    sp.add_argument("--alpha", type=exact_rational, required=True)
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--budget", type=int, default=1_000_000)

    sp = add("skew-step", cmd_skew_step, "one step of the skew product")
    germ_opts(sp)
    sp.add_argument("--x", type=exact_rational, default=None)
    sp.add_argument("--alpha", type=_alpha_arg, default=None,
                    help="p/q, or re,im for a complex perturbation")
    sp.add_argument("--numeric", action="store_true")
    return p


def _threads() -> int:
    import numba

    return numba.get_num_threads()


def _apply_threads() -> None:
    val = os.environ.get(THREADS_ENV)
    if val:
        import numba

        numba.set_num_threads(max(1, min(int(val), numba.config.NUMBA_NUM_THREADS)))


_NEGATIVE = re.compile(r"^-\d")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--x -3/5`` into ``--x=-3/5`` so argparse does not read a flag."""
    out: list[str] = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    options = {k: v for k, v in vars(args).items() if k not in ("func", "command", "out")}
    config = RunConfig(args.command, options)
    name = args.command.replace("-", "_")
    try:
        _apply_threads()
        ok, result = args.func(args, out)
    except UsageError as exc:
        print(f"parabolic {args.command}: {exc}", file=sys.stderr)
        return 2
    except NotInBasinError as exc:
        _write_json(out / f"{name}.json", {"config": config.record(), "error": str(exc), "ok": False})
        print(f"parabolic {args.command}: {exc}", file=sys.stderr)
        return 1
    except NonConvergenceError as exc:
        _write_json(out / "error.json", {"config": config.record(), "error": str(exc),
                                         "diagnostics": exc.diagnostics})
        print(f"parabolic {args.command}: no convergence: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"parabolic {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    record = {"config": config.record(), "result": result, "ok": ok}
    _write_json(out / f"{name}.json", record)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
