"""Command-line front end: run diagrams, zigzag curves/surfaces and oracles, write CSV/JSON.

Settings come from built-in per-problem defaults, then an optional JSON
config file, then command-line flags. Every run is deterministic.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from .continuation import PATH_KINDS, freeze
from .core import Bounds, ContinuationConfig, DeflationConfig, NewtonConfig
from .detect import ZigzagConfig, detect_curve, detect_surface
from .diagram import BifurcationDiagram, run_diagram, run_diagram_family
from .oracles import eigen_report, fold_report
from .problems import PROBLEMS, bump_seed, get_problem

log = logging.getLogger("deflarc")

EXIT_OK, EXIT_CONFIG, EXIT_NO_OUTPUT = 0, 1, 2


class ConfigError(ValueError):
    pass


_PI = math.pi
# per-problem defaults; anything here can be overridden by the config file or flags
PROBLEM_DEFAULTS = {
    "bratu1d": {
        "lambda_start": [0.1, 1.0, 0.0], "path": "lambda_2=1", "seed": "zeros",
        "stop": {"bounds": [[0.0, 4.0], [0.0, 10.0], [0.0, 1.5]], "q_max": 10.0},
        "continuation": {"ds": 0.2},
        "zigzag": {"start": [0.5, 0.5], "lambda_bounds": [[0.0, 10.0], [0.5, 2.0]],
                   "start_scale": "exp"},
        "oracle": "fold",
    },
    "bratu2d": {
        "lambda_start": [0.1, 1.0, 0.0], "path": "lambda_2=1", "seed": "zeros",
        "stop": {"bounds": [[0.0, 7.0], [0.0, 6.0], [0.0, 1.5]], "q_max": 10.0},
        "continuation": {"ds": 0.2},
        "zigzag": {"start": [1.0, 0.5], "lambda_bounds": [[0.0, 12.0], [0.5, 1.5]],
                   "start_scale": "exp"},
        "oracle": "fold",
    },
    "allencahn1d": {
        "lambda_start": [0.0, 1.0, _PI], "path": "lambda_2=1", "seed": "bump",
        "stop": {"bounds": [[0.0, 14.0], [1.0, 10.0], [_PI, 3.8]], "q_max": None},
        "continuation": {"ds": 0.01},
        "zigzag": {"start": [0.5, 1.0], "lambda_bounds": [[0.0, 14.0], [1.0, 3.0]]},
        "oracle": "eigen",
    },
    "allencahn2d": {
        "lambda_start": [0.0, 1.0, _PI], "path": "lambda_2=1", "seed": "bump",
        "stop": {"bounds": [[0.0, 12.0], [1.0, 8.0], [_PI, 3.8]], "q_max": None},
        "continuation": {"ds": 0.01},
        "zigzag": {"start": [1.0, 1.0], "lambda_bounds": [[0.0, 12.0], [1.0, 2.0]]},
        "oracle": "eigen",
    },
    "allencahn-mod1d": {
        "lambda_start": [0.0, 1.0], "path": "lambda_2=1", "seed": "bump",
        "stop": {"bounds": [[0.0, 10.0], [0.0, 2.0]], "q_max": None},
        "continuation": {"ds": 0.01},
        "zigzag": {"start": [4.0, 0.2], "lambda_bounds": [[0.0, 10.0], [0.2, 1.8]]},
        "oracle": "eigen",
    },
}

# (a, b, c, d) used when --family is given without --box
DEFAULT_FAMILY_BOX = (1.0, 10.0, 1.0, 5.0)

TOP_KEYS = {
    "problem", "newton", "deflation", "continuation", "path", "family", "lambda_start",
    "stop", "zigzag", "lambda3", "seed", "output_dir", "save_states", "oracle",
}
ZIGZAG_KEYS = {f.name for f in fields(ZigzagConfig)} | {"start", "start_scale"}
# how the zigzag start lambda_1 moves between surface slices
START_SCALES = {
    "none": lambda l3: 1.0,
    "exp": lambda l3: math.exp(-l3),
}
STOP_KEYS = {"bounds", "q_max"}
FAMILY_KEYS = {"kind", "box", "n"}


@dataclass
class RunConfig:
    problem: str
    newton: NewtonConfig
    deflation: DeflationConfig
    continuation: ContinuationConfig
    path: str | None
    family: dict | None
    lambda_start: list
    stop: Bounds
    zigzag: ZigzagConfig
    zigzag_start: list
    start_scale: str
    lambda3: list | None
    seed: str
    output_dir: str
    save_states: bool
    oracle: str


def _check_keys(section: str, given: dict, allowed: set) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_grid(spec: str) -> list[float]:
    """'a:b:n' -> n evenly spaced values from a to b inclusive."""
    try:
        a, b, n = spec.split(":")
        n = int(n)
        if n < 1:
            raise ValueError
        return [float(v) for v in np.linspace(float(a), float(b), n)]
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}; expected a:b:n") from None


def parse_path(spec: str, names) -> tuple[int, float]:
    m = re.fullmatch(r"\s*(\w+)\s*=\s*([-+0-9.eE]+)\s*", spec)
    if not m or m.group(1) not in names:
        raise ConfigError(f"bad path {spec!r}; expected e.g. lambda_2=1")
    idx = names.index(m.group(1))
    if idx == 0:
        raise ConfigError("the path must leave lambda_1 free")
    return idx, float(m.group(2))


def _sub(cls, section: str, data: dict):
    allowed = {f.name for f in fields(cls)}
    _check_keys(section, data, allowed)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def build_config(raw: dict) -> RunConfig:
    """Validate a merged raw dict into a RunConfig; raises ConfigError."""
    _check_keys("config", raw, TOP_KEYS)
    pid = raw.get("problem")
    if pid not in PROBLEMS:
        raise ConfigError(f"unknown problem {pid!r}; choose from {sorted(PROBLEMS)}")
    data = _merge(PROBLEM_DEFAULTS[pid], raw)
    problem = get_problem(pid)
    p = problem.param_count

    zz_raw = dict(data.get("zigzag") or {})
    _check_keys("zigzag", zz_raw, ZIGZAG_KEYS)
    zstart = zz_raw.pop("start")
    scale = zz_raw.pop("start_scale", "none")
    if scale not in START_SCALES:
        raise ConfigError(f"zigzag.start_scale must be one of {sorted(START_SCALES)}")
    if "lambda_bounds" in zz_raw:
        zz_raw["lambda_bounds"] = tuple(tuple(map(float, b)) for b in zz_raw["lambda_bounds"])
    zigzag = _sub(ZigzagConfig, "zigzag", zz_raw)

    stop_raw = data.get("stop") or {}
    _check_keys("stop", stop_raw, STOP_KEYS)
    bounds = stop_raw.get("bounds") or problem.param_bounds
    if len(bounds) != p:
        raise ConfigError(f"stop.bounds needs {p} intervals")
    stop = Bounds(tuple(tuple(map(float, b)) for b in bounds), stop_raw.get("q_max"))

    family = data.get("family")
    if family is not None:
        _check_keys("family", family, FAMILY_KEYS)
        family = {"box": list(DEFAULT_FAMILY_BOX), **family}
        if family.get("kind") not in PATH_KINDS:
            raise ConfigError(f"family.kind must be one of {PATH_KINDS}")
        if len(family.get("box", ())) != 4 or int(family.get("n", 0)) < 1:
            raise ConfigError("family needs box [a,b,c,d] and n >= 1")
    path = data.get("path")
    if path is not None:
        parse_path(path, problem.param_names)

    lam_start = [float(v) for v in data.get("lambda_start")]
    if len(lam_start) != p:
        raise ConfigError(f"lambda_start needs {p} values")
    if data.get("seed") not in ("zeros", "bump"):
        raise ConfigError("seed must be 'zeros' or 'bump'")
    lambda3 = data.get("lambda3")
    if lambda3 is not None:
        lambda3 = parse_grid(lambda3) if isinstance(lambda3, str) else [float(v) for v in lambda3]
    if data.get("oracle") not in ("eigen", "fold"):
        raise ConfigError("oracle must be 'eigen' or 'fold'")
    return RunConfig(
        problem=pid,
        newton=_sub(NewtonConfig, "newton", data.get("newton") or {}),
        deflation=_sub(DeflationConfig, "deflation", data.get("deflation") or {}),
        continuation=_sub(ContinuationConfig, "continuation", data.get("continuation") or {}),
        path=path, family=family, lambda_start=lam_start, stop=stop, zigzag=zigzag,
        zigzag_start=[float(v) for v in zstart], start_scale=scale, lambda3=lambda3, seed=data["seed"],
        output_dir=str(data.get("output_dir") or "out"),
        save_states=bool(data.get("save_states", False)), oracle=data["oracle"],
    )


def fmt(x: float) -> str:
    """Shortest repr that round-trips a double."""
    return repr(float(x))


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def branches_rows(diag: BifurcationDiagram, p: int):
    header = ["branch_id", "step", "s"] + [f"lambda_{i + 1}" for i in range(p)] + ["q"]
    yield ",".join(header)
    for br in diag.branches:
        for bp in br.points:
            yield ",".join([str(br.id), str(bp.step), fmt(bp.point.s)]
                           + [fmt(v) for v in bp.point.lam.values] + [fmt(bp.q)])


def events_payload(diag: BifurcationDiagram) -> list[dict]:
    return [{"id": e.id, "kind": e.kind.value,
             "bracket_lo": [float(v) for v in e.bracket_lo.values],
             "bracket_hi": [float(v) for v in e.bracket_hi.values],
             "branch_ids": list(e.branch_ids)} for e in diag.events]


def write_diagram(diag: BifurcationDiagram, outdir: str, p: int, save_states: bool) -> None:
    os.makedirs(outdir, exist_ok=True)
    _write_lines(os.path.join(outdir, "branches.csv"), branches_rows(diag, p))
    with open(os.path.join(outdir, "events.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(events_payload(diag), fh, indent=1)
        fh.write("\n")
    if save_states:
        sdir = os.path.join(outdir, "states")
        os.makedirs(sdir, exist_ok=True)
        for br in diag.branches:
            for bp in br.points:
                _write_lines(os.path.join(sdir, f"branch_{br.id}_step_{bp.step}.csv"),
                             (fmt(v) for v in bp.point.u))


CURVE_HEADER = ["crossing_id", "lambda_1_mid", "lambda_2_mid", "lambda_1_lo", "lambda_2_lo",
                "lambda_1_hi", "lambda_2_hi", "label_lo", "label_hi"]


def crossing_rows(trace, prefix=()):
    for i, c in enumerate(trace.crossings, 1):
        yield ",".join(list(prefix) + [str(i)] + [
            fmt(v) for v in (c.midpoint[0], c.midpoint[1], c.bracket_lo[0], c.bracket_lo[1],
                             c.bracket_hi[0], c.bracket_hi[1])]
            + [str(c.label_lo.solution_count), str(c.label_hi.solution_count)])


def read_csv(path: str) -> list[dict]:
    """Read any of the CSV outputs back into a list of dicts (values as strings)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:] if ln]


def _seed(cfg: RunConfig, problem):
    base = bump_seed(problem) if cfg.seed == "bump" else np.zeros(problem.dof_count)
    return lambda lam: problem.boundary_lift(lam) + base


def cmd_diagram(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    p = problem.param_count
    lam0 = problem.params(cfg.lambda_start)
    u0 = problem.boundary_lift(lam0)
    seed = _seed(cfg, problem)(lam0)
    if cfg.family:
        fam = cfg.family
        results = run_diagram_family(
            problem, fam["kind"], fam["box"], int(fam["n"]), u0, cfg.lambda_start,
            cfg.continuation, cfg.deflation, cfg.newton, cfg.stop, seed)
        usable = 0
        for i, res in enumerate(results):
            if res.diagram is None or not res.diagram.branches:
                log.warning("%s: %s", res.constraint.label, res.error)
                continue
            usable += 1
            write_diagram(res.diagram, os.path.join(cfg.output_dir, f"path_{i}"), p,
                          cfg.save_states)
            _summary(res.diagram)
        return EXIT_OK if usable else EXIT_NO_OUTPUT
    idx, val = parse_path(cfg.path, problem.param_names)
    lam0 = lam0.with_value(idx, val)
    diag = run_diagram(problem, freeze(idx, val, cfg.path), u0, lam0, cfg.continuation,
                       cfg.deflation, cfg.newton, cfg.stop, seed)
    if not diag.branches:
        log.error("no branch point accepted: %s", diag.failure)
        return EXIT_NO_OUTPUT
    write_diagram(diag, cfg.output_dir, p, cfg.save_states)
    _summary(diag)
    return EXIT_OK


def _summary(diag: BifurcationDiagram) -> None:
    print(f"{diag.problem} [{diag.path_label}]: {len(diag.branches)} branches, "
          f"{len(diag.events)} events")
    for e in diag.events:
        print(f"  event {e.id} {e.kind.value}: lambda_1 in [{e.bracket_lo[0]:.6g}, "
              f"{e.bracket_hi[0]:.6g}] branches {e.branch_ids}")


def _curve_start(cfg: RunConfig, problem, l3=None):
    vals = list(cfg.lambda_start)
    vals[0], vals[1] = cfg.zigzag_start
    if l3 is not None:
        vals[2] = l3
    return problem.params(vals)


def cmd_curve(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    start = _curve_start(cfg, problem)
    trace = detect_curve(problem, cfg.zigzag, start, problem.boundary_lift(start), cfg.deflation,
                         cfg.newton, _seed(cfg, problem)(start))
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write_lines(os.path.join(cfg.output_dir, "curve.csv"),
                 [",".join(CURVE_HEADER), *crossing_rows(trace)])
    if not trace.crossings:
        log.warning("no crossings found; curve.csv has only a header")
    print(f"{cfg.problem}: {len(trace.crossings)} crossings ({trace.stop_reason})")
    return EXIT_OK


def cmd_surface(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    if problem.param_count < 3:
        raise ConfigError("surface needs a problem with three parameters")
    grid = cfg.lambda3 or parse_grid(f"{cfg.stop.intervals[2][0]}:{cfg.stop.intervals[2][1]}:4")
    a, b = cfg.zigzag_start
    scale = START_SCALES[cfg.start_scale]
    slices = detect_surface(problem, cfg.zigzag, grid, lambda l3: (a * scale(l3), b),
                            problem.boundary_lift, cfg.deflation, cfg.newton,
                            _seed(cfg, problem))
    rows = [",".join(["lambda_3"] + CURVE_HEADER)]
    ok = 0
    for l3, trace, err in slices:
        if trace is None:
            log.warning("slice lambda_3=%s failed: %s", fmt(l3), err)
            continue
        ok += 1
        rows.extend(crossing_rows(trace, prefix=(fmt(l3),)))
        print(f"lambda_3={l3:.6g}: {len(trace.crossings)} crossings ({trace.stop_reason})")
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write_lines(os.path.join(cfg.output_dir, "surface.csv"), rows)
    return EXIT_OK if ok else EXIT_NO_OUTPUT


def cmd_oracle(cfg: RunConfig) -> int:
    problem = get_problem(cfg.problem)
    lam = problem.params(cfg.lambda_start)
    report = eigen_report(problem, lam) if cfg.oracle == "eigen" else fold_report(problem, lam)
    print(json.dumps(report.to_dict(), indent=1))
    return EXIT_OK


COMMANDS = {"diagram": cmd_diagram, "curve": cmd_curve, "surface": cmd_surface,
            "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deflarc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--problem", help=f"one of {', '.join(sorted(PROBLEMS))}")
        sp.add_argument("--output-dir", dest="output_dir")
        sp.add_argument("--save-states", dest="save_states", action="store_true", default=None)
        sp.add_argument("--lambda-start", dest="lambda_start",
                        help="comma-separated parameter values")
        sp.add_argument("--ds", type=float)
        sp.add_argument("--shift", type=float, help="deflation shift")
        sp.add_argument("--power", type=float, help="deflation power")
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        if name == "diagram":
            sp.add_argument("--path", help="e.g. lambda_2=1")
            sp.add_argument("--family", choices=PATH_KINDS)
            sp.add_argument("--box", help="a,b,c,d for --family (default 1,10,1,5)")
            sp.add_argument("--n", type=int, help="family size parameter")
        if name in ("curve", "surface"):
            sp.add_argument("--theta", type=float)
            sp.add_argument("--k", type=int)
            sp.add_argument("--start", help="lambda_1,lambda_2 of the first point")
        if name == "surface":
            sp.add_argument("--lambda3", help="grid a:b:n")
        if name == "oracle":
            sp.add_argument("--kind", choices=("eigen", "fold"))
    return ap


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def raw_from_args(args) -> dict:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    over: dict = {}
    for key in ("problem", "output_dir", "save_states"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    if args.lambda_start:
        over["lambda_start"] = _floats(args.lambda_start)
    if args.shift is not None or args.power is not None:
        over["deflation"] = {k: v for k, v in (("shift", args.shift), ("power", args.power))
                             if v is not None}
    if args.max_iter is not None:
        over["newton"] = {"max_iter": args.max_iter}
    zz = {}
    if args.command in ("curve", "surface"):
        if args.ds is not None:
            zz["ds"] = args.ds
        if args.theta is not None:
            zz["theta"] = args.theta
        if args.k is not None:
            zz["k"] = args.k
        if args.start:
            zz["start"] = _floats(args.start)
        if zz:
            over["zigzag"] = zz
        if getattr(args, "lambda3", None):
            over["lambda3"] = args.lambda3
    elif args.ds is not None:
        over["continuation"] = {"ds": args.ds}
    if args.command == "diagram":
        if args.path:
            over["path"] = args.path
        if args.family:
            if args.n is None:
                raise ConfigError("--family needs --n")
            over["family"] = {"kind": args.family, "n": args.n}
            if args.box:
                over["family"]["box"] = _floats(args.box)
    if args.command == "oracle" and args.kind:
        over["oracle"] = args.kind
    return _merge(raw, over)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(raw_from_args(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


def config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["stop"] = {"bounds": [list(b) for b in cfg.stop.intervals], "q_max": cfg.stop.q_max}
    return d


if __name__ == "__main__":
    sys.exit(main())
