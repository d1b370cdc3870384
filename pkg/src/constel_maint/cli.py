"""Command-line front end: ``constel-maint {evaluate|simulate|validate|optimize}``.

Exit codes: 0 success, 2 parse/schema/usage error, 3 evaluated but infeasible,
4 solver or sampling failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import NoFeasibleSolution, ParseError, SamplingExhausted, SchemaError
from .model import NSGAConfig, evaluate_decision
from .scenario_file import ScenarioFile, parse_scenario, parse_scenario_text, resolve_scenario_path
from .simulator import (
    METRICS,
    SimConfig,
    analytic_metrics,
    estimate,
    sample_validation_instances,
    validation_errors,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_FAILURE = 0, 2, 3, 4
JOBS_ENV = "CONSTEL_MAINT_JOBS"
PROBLEMS = ("p1", "p2", "p3")

# decision keys accepted by --set, mapped to scenario-file names
DECISION_ALIASES = {
    "s": "s", "q": "q", "k_s": "k_s", "k_q": "k_q", "n_oos": "n_oos", "n_parking": "n_parking",
    "h_parking": "parking_altitude_km", "parking_altitude_km": "parking_altitude_km",
    "p_oos": "price_musd", "price_musd": "price_musd", "mttr": "mttr_weeks", "mttr_weeks": "mttr_weeks",
}

log = logging.getLogger("constel_maint")


@dataclass
class RunManifest:
    command: str
    scenario: str | None = None
    scenario_hash: str | None = None
    seeds: dict = field(default_factory=dict)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None
    outputs: list = field(default_factory=list)
    tool_version: str = __version__

    def write(self, out_dir: Path) -> Path:
        self.finished = datetime.now(timezone.utc).isoformat()
        path = out_dir / "manifest.json"
        self.outputs = sorted(set(self.outputs))
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


# --- helpers ------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_with_overrides(path: str, overrides=(), no_oos: bool = False) -> ScenarioFile:
    """Parse a scenario and apply ``--set key=value`` decision overrides and ``--no-oos``."""
    sf = parse_scenario(resolve_scenario_path(path))
    if not overrides and not no_oos:
        return sf
    data = sf.model_dump(mode="json", exclude_none=True)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or key.strip() not in DECISION_ALIASES:
            raise SchemaError(f"bad --set {item!r}; keys: {', '.join(sorted(DECISION_ALIASES))}")
        data.setdefault("decision", {})[DECISION_ALIASES[key.strip()]] = _number(value.strip())
    if no_oos:
        data["oos"]["r_oos"] = 0.0
    return parse_scenario_text(json.dumps(data), str(path))


def _write_json(path: Path, payload, manifest: RunManifest):
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    manifest.outputs.append(str(path))


def _write_csv(path: Path, rows: list[dict], manifest: RunManifest):
    with path.open("w", newline="") as fh:
        if rows:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    manifest.outputs.append(str(path))


def _json_default(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _table(rows, title: str | None = None) -> str:
    """Aligned two-column text table."""
    lines = []
    width = max((len(r[0]) for r in rows if r[1] is not None), default=10)
    if title:
        lines.append(title)
        lines.append("=" * max(len(title), width + 14))
    for label, value in rows:
        if value is None:
            lines.append(f"{label}")
        elif isinstance(value, float):
            lines.append(f"  {label:<{width}}  {value:>12.4f}")
        else:
            lines.append(f"  {label:<{width}}  {value!s:>12}")
    return "\n".join(lines)


def _decision_rows(x) -> list:
    return [("s, satellites", x.s), ("Q, satellites", x.q), ("k_s, batches", x.k_s), ("k_Q, batches", x.k_q),
            ("N_oos, services", x.n_oos), ("N_parking, planes", x.n_parking), ("h_parking, km", x.h_parking),
            ("p_oos, $M", x.p_oos), ("MTTR, weeks", x.mttr)]


def evaluation_report(ev) -> str:
    s = ev.summary()
    rows = [("Decision Variables", None)] + _decision_rows(ev.decision)
    rows += [("Performance Outputs", None),
             ("AMC, $M/year", s["amc"]), ("A_lau, $M/year", s["a_lau"]), ("A_maneuv, $M/year", s["a_maneuv"]),
             ("A_manufac, $M/year", s["a_manufac"]), ("A_hold, $M/year", s["a_hold"]),
             ("A_oos, $M/year", s["a_oos"]), ("AP, $M/year", s["ap"]),
             ("gamma_0, %", 100 * s["gamma0"]), ("beta_plane, %", 100 * s["beta_plane"]),
             ("beta_parking, %", 100 * s["beta_parking"])]
    if "t_d_years" in s:
        rows.append(("t_d / N_t, years", s["t_d_years"]))
    rows = [(k, v) for k, v in rows if not (v is None and k[0].islower())]
    text = _table(rows, "Evaluation")
    if not ev.feasible:
        text += "\n\nINFEASIBLE: violated " + ", ".join(ev.feasibility.violated)
    return text


# --- subcommands ---------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    sf = load_with_overrides(args.scenario, args.set, args.no_oos)
    scenario = sf.to_scenario()
    if scenario.decision is None:
        raise SchemaError(f"{args.scenario}: no decision section; add one or pass --set for every decision key")
    ev = evaluate_decision(scenario, scenario.decision, amc_cap=not args.no_amc_cap)
    payload = {
        "scenario": sf.name, "decision": asdict(ev.decision), "summary": ev.summary(),
        "feasible": ev.feasible,
        "constraints": [asdict(c) | {"passed": c.passed} for c in ev.feasibility.checks],
    }
    print(json.dumps(_clean(payload), indent=2) if args.json else evaluation_report(ev))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest("evaluate", sf.name, sf.digest())
        _write_json(out / "evaluation.json", _clean(payload), manifest)
        manifest.write(out)
    return EXIT_OK if ev.feasible else EXIT_INFEASIBLE


def _sim_config(args, sf: ScenarioFile) -> SimConfig:
    base = sf.simulation
    return SimConfig(
        horizon_years=args.years if args.years is not None else base.horizon_years,
        replications=args.replications if args.replications is not None else base.replications,
        warmup_years=args.warmup_years if args.warmup_years is not None else base.warmup_years,
        rng_seed=args.seed if args.seed is not None else base.seed,
    )


def cmd_simulate(args) -> int:
    sf = load_with_overrides(args.scenario, args.set, args.no_oos)
    scenario = sf.to_scenario()
    if scenario.decision is None:
        raise SchemaError(f"{args.scenario}: no decision section")
    sim = _sim_config(args, sf)
    est = estimate(scenario, scenario.decision, sim, jobs=args.jobs)
    ev = evaluate_decision(scenario, scenario.decision)
    model = analytic_metrics(ev)
    lines = [f"{'metric':<14}{'simulated':>14}{'std.err':>12}{'analytic':>14}"]
    for m in METRICS:
        se = est.stderr[m]
        lines.append(f"{m:<14}{est.mean[m]:>14.5f}{(se if se is not None else float('nan')):>12.5f}{model[m]:>14.5f}")
    print(json.dumps(_clean(est.as_dict() | {"analytic": model}), indent=2) if args.json else "\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest("simulate", sf.name, sf.digest(),
                               {"rng_seed": sim.rng_seed, "replications": [r.seed for r in est.records]})
        _write_json(out / "estimate.json", _clean(est.as_dict() | {"analytic": model,
                                                                      "sim_config": asdict(sim)}), manifest)
        _write_csv(out / "replications.csv", [r.as_dict() for r in est.records], manifest)
        manifest.write(out)
    return EXIT_OK


def _data_file(name: str) -> Path:
    return Path(resources.files("constel_maint") / "data" / name)


def cmd_validate(args) -> int:
    fixed = json.loads(Path(args.fixed or _data_file("validation_fixed.json")).read_text())
    trade = json.loads(Path(args.trade_space or _data_file("validation_trade_space.json")).read_text())
    sim = SimConfig(horizon_years=args.years, replications=args.replications, warmup_years=args.warmup_years,
                    rng_seed=args.seed)
    sampling = sample_validation_instances(args.count, trade, fixed, seed=args.seed, max_attempts=args.max_attempts)
    per_instance, sums = [], {m: [] for m in METRICS}
    for inst in sampling.instances:
        est = estimate(inst.scenario, inst.decision, sim, jobs=args.jobs)
        errs = validation_errors(inst.evaluation, est)
        row = {"instance": inst.index} | inst.params
        for m, e in errs.items():
            row[f"{m}_model"], row[f"{m}_sim"], row[f"{m}_error"] = e.model, e.sim, e.error
            if e.error is not None:
                sums[m].append(e.error)
        per_instance.append(row)
        log.info("instance %d done", inst.index)
    mean_errors = {m: (sum(v) / len(v) if v else None) for m, v in sums.items()}
    lines = [f"Averaged errors over {len(per_instance)} instances "
             f"({sampling.attempts} draws, {sampling.rejections} rejected)",
             "Relative errors (%)"]
    for m in ("s_plane", "s_parking", "s_wait", "f_plane", "f_parking", "f_oos", "t_d", "amc"):
        lines.append(f"  {m:<14}{_fmt(mean_errors[m])}")
    lines.append("Absolute errors (%p)")
    for m in ("beta_plane", "beta_parking"):
        lines.append(f"  {m:<14}{_fmt(mean_errors[m])}")
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest("validate", seeds={"seed": args.seed})
        _write_json(out / "validation.json", _clean({"mean_errors": mean_errors, "attempts": sampling.attempts,
                                                     "count": len(per_instance), "sim_config": asdict(sim)}),
                    manifest)
        _write_csv(out / "validation_instances.csv", per_instance, manifest)
        manifest.write(out)
    return EXIT_OK


def _fmt(v) -> str:
    return f"{v:>10.3f}" if v is not None else f"{'undefined':>10}"


def cmd_optimize(args) -> int:
    from .optimizer import solve_p1, solve_p2, solve_p3

    sf = load_with_overrides(args.scenario, args.set, args.no_oos)
    scenario = sf.to_scenario()
    s = scenario.solver
    config = NSGAConfig(
        population=args.population or s.population, generations=args.generations if args.generations is not None
        else s.generations, crossover_prob=s.crossover_prob, mutation_prob=s.mutation_prob,
        eta_crossover=s.eta_crossover, eta_mutation=s.eta_mutation, seed=args.seed if args.seed is not None
        else s.seed)
    scenario = scenario.replace(solver=config)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(f"optimize {args.problem}", sf.name, sf.digest(), {"seed": config.seed})

    if args.problem == "p1":
        res = solve_p1(scenario, config, jobs=args.jobs)
        print(evaluation_report(res.evaluation))
        payload = {"decision": asdict(res.decision), "summary": res.evaluation.summary(),
                   "ga_amc": res.ga_amc, "evaluations": res.evaluations, "config": asdict(config)}
        if out:
            _write_json(out / "p1.json", _clean(payload), manifest)
    elif args.problem == "p2":
        res = solve_p2(scenario)
        print(_table([("p_oos, $M", res.p_oos), ("MTTR, weeks", res.mttr), ("c_oos, $M", res.service_cost),
                      ("AP, $M/year", res.ap), ("AMC, $M/year", res.evaluation.amc)], "P2 optimum"))
        payload = {"decision": asdict(res.decision), "summary": res.evaluation.summary(),
                   "service_cost": res.service_cost}
        if out:
            _write_json(out / "p2.json", _clean(payload), manifest)
    else:
        front = solve_p3(scenario, config, jobs=args.jobs)
        print(front_summary(front))
        if out:
            rows = front.rows()
            _write_csv(out / "front.csv", rows, manifest)
            _write_csv(out / "front_plot.csv",
                       sorted(({"amc": r["amc"], "ap": r["ap"]} for r in rows), key=lambda r: r["amc"]), manifest)
            _write_json(out / "front.json", _clean({
                "members": rows, "reference_point": list(front.reference_point),
                "hypervolume": front.hypervolume(), "hypervolume_trace": list(front.hypervolume_trace),
                "slope": front.slope() if len(front) > 1 else None, "config": asdict(config),
                "evaluations": front.evaluations}), manifest)
    if out:
        manifest.write(out)
    return EXIT_OK


def _span(values) -> str:
    lo, hi = min(values), max(values)
    return f"{lo:.1f}" if math.isclose(lo, hi, abs_tol=0.05) else f"[{lo:.1f}, {hi:.1f}]"


def front_summary(front) -> str:
    """Ranges over the front in the layout of the paper's solution tables."""
    ms = front.members
    col = lambda f: [f(m) for m in ms]
    rows = [
        ("s, satellites", col(lambda m: m.decision.s)), ("Q, satellites", col(lambda m: m.decision.q)),
        ("k_s, -", col(lambda m: m.decision.k_s)), ("k_Q, -", col(lambda m: m.decision.k_q)),
        ("N_oos, -", col(lambda m: m.decision.n_oos)), ("N_parking, planes", col(lambda m: m.decision.n_parking)),
        ("h_parking, km", col(lambda m: m.decision.h_parking)), ("p_oos, $M", col(lambda m: m.decision.p_oos)),
        ("MTTR, weeks", col(lambda m: m.decision.mttr)),
        ("AMC, $M/year", col(lambda m: m.point.amc)), ("AP, $M/year", col(lambda m: m.point.ap)),
        ("A_lau, $M/year", col(lambda m: m.evaluation.costs.a_lau)),
        ("A_manufac, $M/year", col(lambda m: m.evaluation.costs.a_manufac)),
        ("A_hold, $M/year", col(lambda m: m.evaluation.costs.a_hold)),
        ("A_oos, $M/year", col(lambda m: m.evaluation.costs.a_oos)),
        ("gamma_0, %", col(lambda m: 100 * m.evaluation.result.gamma0)),
        ("beta_plane, %", col(lambda m: 100 * m.evaluation.result.plane.fill_rate)),
        ("beta_parking, %", col(lambda m: 100 * m.evaluation.result.parking.fill_rate)),
    ]
    width = max(len(r[0]) for r in rows)
    lines = [f"Pareto front: {len(ms)} solutions, hypervolume {front.hypervolume():.1f}"
             + (f", slope {front.slope():.4f}" if len(ms) > 1 else ""), "-" * (width + 24)]
    lines += [f"  {label:<{width}}  {_span(vals):>20}" for label, vals in rows]
    return "\n".join(lines)


# --- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="constel-maint", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_opts(p):
        p.add_argument("scenario", help="scenario file or bundled scenario name (e.g. baseline)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a decision variable (s, q, k_s, k_q, n_oos, n_parking, h_parking, "
                            "p_oos, mttr)")
        p.add_argument("--no-oos", action="store_true", help="set the serviceable-failure ratio to 0")
        p.add_argument("--out", help="directory for JSON/CSV outputs and the run manifest")

    def jobs_opt(p):
        p.add_argument("--jobs", type=_positive_int, default=_default_jobs(),
                       help=f"worker processes (default ${JOBS_ENV} or 1); results do not depend on it")

    p = sub.add_parser("evaluate", help="analytic steady-state evaluation of one decision")
    scenario_opts(p)
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")
    p.add_argument("--no-amc-cap", action="store_true", help="do not check AMC against the reference")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of one decision")
    scenario_opts(p)
    jobs_opt(p)
    p.add_argument("--replications", type=_positive_int)
    p.add_argument("--years", type=_positive_float, help="simulated horizon, years")
    p.add_argument("--warmup-years", type=_nonneg_float)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="model-vs-simulation errors over sampled instances")
    jobs_opt(p)
    p.add_argument("--fixed", help="fixed-parameter JSON (default: bundled validation set)")
    p.add_argument("--trade-space", help="trade-space JSON (default: bundled validation set)")
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--replications", type=_positive_int, default=100)
    p.add_argument("--years", type=_positive_float, default=60.0)
    p.add_argument("--warmup-years", type=_nonneg_float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", type=_positive_int, default=100_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("optimize", help="solve P1 (operator), P2 (provider) or P3 (bi-objective)")
    p.add_argument("problem", choices=PROBLEMS)
    scenario_opts(p)
    jobs_opt(p)
    p.add_argument("--population", type=_positive_int)
    p.add_argument("--generations", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "warmup_years", None) is not None and getattr(args, "years", None) is not None \
            and args.warmup_years > args.years:
        parser.error("--warmup-years exceeds --years")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoFeasibleSolution, SamplingExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
