"""Command-line front end: ``occplan validate | run | compare | corpus``.

Exit codes: 0 success, 2 usage error, 3 invalid scenario, 4 run failure,
5 file-system error.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus
from .scenario import MODES, ScenarioError, ScenarioParseError, load_scenario, scenario_from_dict
from .simulation import RunResult, Simulation, reduction_percent

EXIT_OK = 0
EXIT_INVALID = 3
EXIT_RUN = 4
EXIT_IO = 5


@dataclass
class RunSpec:
    scenario: str
    modes: list[str] = field(default_factory=list)
    r_max: list[float] = field(default_factory=list)
    out: Path | None = None
    plot: bool = False
    seed: int | None = None
    jobs: int = 1


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _r_max(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "none"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("R_max must be positive")
    return value


def _r_tag(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:g}"


def resolve_document(ref: str, seed: int | None = None) -> dict:
    """Scenario document for a file path or a bundled/corpus name."""
    path = Path(ref)
    if path.suffix in (".yaml", ".yml") or path.exists():
        try:
            return load_scenario(path).raw
        except FileNotFoundError as exc:
            raise _Fail(EXIT_IO, f"{ref}: no such file") from exc
        except OSError as exc:
            raise _Fail(EXIT_IO, f"{ref}: {exc}") from exc
    if seed is not None:
        docs = corpus.documents(seed)
        if ref in docs:
            return docs[ref]
    if ref in corpus.bundled_names():
        return load_scenario(corpus.bundled_path(ref)).raw
    raise _Fail(EXIT_IO, f"{ref}: neither a scenario file nor a bundled scenario name")


def _run_one(doc: dict, mode: str, r_max: float) -> RunResult:
    return Simulation(scenario_from_dict(doc), mode, r_max).run()


def _execute(spec: RunSpec) -> list[RunResult]:
    doc = resolve_document(spec.scenario, spec.seed)
    scenario = scenario_from_dict(doc)
    modes = spec.modes or [scenario.mode]
    r_values = spec.r_max or [scenario.r_max]
    jobs = list(itertools.product(modes, r_values))
    try:
        if spec.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                futures = [pool.submit(_run_one, doc, m, r) for m, r in jobs]
                results = [f.result() for f in futures]
        else:
            results = [_run_one(doc, m, r) for m, r in jobs]
    except Exception as exc:        # anything raised while stepping is a run failure
        raise _Fail(EXIT_RUN, f"run failed: {exc}") from exc
    if spec.out is not None:
        _write_outputs(spec, scenario.name, results, len(r_values) > 1)
    return results


def _write_outputs(spec: RunSpec, name: str, results: list[RunResult], tag_r: bool) -> None:
    from .plotting import plot_csvs

    try:
        spec.out.mkdir(parents=True, exist_ok=True)
        csvs = {}
        for res in results:
            label = res.mode + (f" R_max={_r_tag(res.r_max)}" if tag_r else "")
            stem = f"{name}__{res.mode}__r{_r_tag(res.r_max)}"
            csvs[label] = res.log.write_csv(spec.out / f"{stem}.csv")
            print(f"wrote {csvs[label]}")
        if spec.plot:
            svg = plot_csvs(csvs, spec.out / f"{name}.svg", title=name)
            print(f"wrote {svg}")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write outputs: {exc}") from exc


def _summary_line(res: RunResult) -> str:
    s = res.summary()
    coll = f"yes (t={s['collision_t']:.1f} s, {s['collision_with']})" if s["collision"] else "no"
    return (f"{s['mode']:<22} {_r_tag(s['r_max']):>6} {s['min_velocity']:9.3f} "
            f"{s['max_abs_acceleration']:8.3f} {s['max_risk']:9.4f} {s['sum_area_A_o']:14.1f} "
            f"{s['exceedance_steps']:5d}  {coll}")


_HEADER = (f"{'mode':<22} {'R_max':>6} {'min v':>9} {'max|a|':>8} {'max risk':>9} "
           f"{'sum area A_o':>14} {'flag':>5}  collision")


# --- commands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    code = EXIT_OK
    for ref in args.scenarios:
        try:
            doc = resolve_document(ref, args.seed)
            sc = scenario_from_dict(doc)
            print(f"{ref}: OK ({sc.name}, {len(sc.network.lanelets)} lanelets, "
                  f"{sc.n_steps} steps)")
        except ScenarioParseError as exc:
            print(f"{ref}: parse error at {exc.problems[0][0]}: {exc.problems[0][1]}")
            code = max(code, EXIT_INVALID)
        except ScenarioError as exc:
            print(f"{ref}: INVALID")
            for loc, msg in exc.problems:
                print(f"  {loc}: {msg}")
            code = max(code, EXIT_INVALID)
    return code


def _spec(args) -> RunSpec:
    return RunSpec(args.scenario, list(args.mode or []), list(args.r_max or []),
                   Path(args.out) if args.out else None, args.plot, args.seed, args.jobs)


def cmd_run(args) -> int:
    results = _execute(_spec(args))
    print(_HEADER)
    for res in results:
        print(_summary_line(res))
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _spec(args)
    if len(spec.modes) < 2:
        raise _Fail(2, "compare needs at least two --mode values")
    results = _execute(spec)
    print(_HEADER)
    for res in results:
        print(_summary_line(res))
    print()
    print("occluded-area reduction (second vs first):")
    for r in spec.r_max or [results[0].r_max]:
        group = [res for res in results if res.r_max == r]
        for a, b in itertools.combinations(group, 2):
            red = reduction_percent(b.summary()["sum_area_A_o"], a.summary()["sum_area_A_o"])
            text = "n/a (no occluded area)" if red is None else f"{red:.2f}%"
            print(f"  {b.mode} vs {a.mode} (R_max={_r_tag(r)}): {text}")
    return EXIT_OK


def cmd_corpus(args) -> int:
    try:
        paths = corpus.write_corpus(Path(args.out), args.seed)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write corpus: {exc}") from exc
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occplan",
                                description="Occlusion-aware planning simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check scenario files against the schema")
    v.add_argument("scenarios", nargs="+", help="scenario file(s) or bundled names")
    v.add_argument("--seed", type=int, default=None, help="seed for randomized corpus names")
    v.set_defaults(func=cmd_validate)

    for name, func, helptext in (("run", cmd_run, "simulate one scenario"),
                                 ("compare", cmd_compare, "simulate several modes and compare")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("scenario", help="scenario file or bundled name")
        r.add_argument("--mode", action="append", choices=MODES,
                       help="planner mode; repeat for several (default: scenario's mode)")
        r.add_argument("--r-max", action="append", type=_r_max, metavar="R",
                       help="risk threshold override; repeat for several; 'inf' disables")
        r.add_argument("--out", help="output directory for CSV (and SVG); created if missing")
        r.add_argument("--plot", action="store_true", help="also render an SVG figure")
        r.add_argument("--seed", type=int, default=None,
                       help="regenerate randomized corpus scenarios from this seed")
        r.add_argument("--jobs", type=int, default=1, help="parallel runs")
        r.set_defaults(func=func)

    c = sub.add_parser("corpus", help="write the scenario corpus as YAML files")
    c.add_argument("--out", required=True)
    c.add_argument("--seed", type=int, default=7)
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "plot", False) and not args.out:
        parser.error("--plot requires --out")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ScenarioParseError as exc:
        print(f"error: parse error at {exc.problems[0][0]}: {exc.problems[0][1]}", file=sys.stderr)
        return EXIT_INVALID
    except ScenarioError as exc:
        print("error: invalid scenario", file=sys.stderr)
        for loc, msg in exc.problems:
            print(f"  {loc}: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
