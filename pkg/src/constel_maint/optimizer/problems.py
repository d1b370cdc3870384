"""The three decision problems: operator cost (P1), provider profit (P2) and the bi-objective trade-off (P3)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..economics import oos_service_cost
from ..errors import NoFeasibleSolution
from ..model import GENES, INTEGER_GENES, Bounds, DecisionVector, NSGAConfig, Scenario, SystemEvaluation, \
    evaluate_decision
from .nsga2 import GeneSpace, run_nsga2
from .pareto import DEFAULT_REFERENCE, ObjectivePoint, fast_non_dominated_sort, hypervolume

OPERATOR_GENES = ("s", "q", "k_s", "k_q", "n_oos", "n_parking", "h_parking")
MTTR_MARGIN = 1e-6


def _default_decision(scenario: Scenario) -> DecisionVector:
    if scenario.decision is not None:
        return scenario.decision
    b = scenario.bounds
    return DecisionVector(b.s[0], b.q[0], b.k_s[0], b.k_q[0], b.n_oos[1], b.n_parking[0],
                          b.h_parking[0], 0.0, b.mttr[1])


def gene_space(bounds: Bounds, genes=GENES, mttr_floor: float | None = None) -> GeneSpace:
    lo, hi = [], []
    for g in genes:
        a, b = getattr(bounds, g)
        if g == "mttr" and mttr_floor is not None:
            a = max(a, mttr_floor + MTTR_MARGIN)  # the lower MTTR bound is open
        lo.append(float(a))
        hi.append(float(b))
    return GeneSpace(tuple(genes), np.array(lo), np.array(hi), np.array([g in INTEGER_GENES for g in genes]))


def point_of(ev: SystemEvaluation) -> ObjectivePoint:
    ap = ev.ap if ev.ap is not None else 0.0
    return ObjectivePoint(ev.amc, ap, tuple(c.violation for c in ev.feasibility.checks))


@dataclass(frozen=True)
class DecisionObjective:
    """Picklable genome -> (objectives, violation, payload) map for one problem."""
    scenario: Scenario
    base: DecisionVector
    genes: tuple
    bi_objective: bool
    amc_cap: bool = True

    def decision(self, genome) -> DecisionVector:
        changes = {g: (int(round(v)) if g in INTEGER_GENES else float(v)) for g, v in zip(self.genes, genome)}
        return self.base.replace(**changes)

    def __call__(self, genome):
        ev = evaluate_decision(self.scenario, self.decision(genome), amc_cap=self.amc_cap)
        cv = ev.feasibility.total_violation
        if self.bi_objective:
            ap = ev.ap if ev.ap is not None and math.isfinite(ev.ap) else -1e12
            return (ev.amc, -ap), cv, None
        return (ev.amc,), cv, None


# --- P1 -----------------------------------------------------------------------------

@dataclass(frozen=True)
class P1Result:
    decision: DecisionVector
    evaluation: SystemEvaluation
    ga_amc: float  # incumbent before neighbourhood refinement
    evaluations: int

    @property
    def amc(self) -> float:
        return self.evaluation.amc


H_STEPS = (25.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.2, 0.1)
MTTR_STEPS = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)


def _pattern_search(evaluate, key, x, best, steps: dict, bounds: dict):
    """Coordinate pattern search over real genes with shrinking steps; returns (x, best, calls, improved)."""
    calls, improved = 0, False
    for gene, gene_steps in steps.items():
        lo, hi = bounds[gene]
        for step in gene_steps:
            moved = True
            while moved:
                moved = False
                for v in (getattr(x, gene) - step, getattr(x, gene) + step):
                    v = round(min(max(v, lo), hi), 6)
                    if v == getattr(x, gene):
                        continue
                    cand = x.replace(**{gene: v})
                    ev = evaluate(cand)
                    calls += 1
                    if key(ev) < key(best):
                        best, x, moved, improved = ev, cand, True, True
    return x, best, calls, improved


def local_search(scenario: Scenario, x: DecisionVector, evaluate, key, steps: dict, bounds: dict,
                 screen_margin: float = 0.02, max_reoptimised: int = 40, max_rounds: int = 20):
    """Integer +/-1 neighbourhood search in which promising neighbours get their real genes re-optimised.

    Feasible optima sit where fill-rate and lifespan limits meet, and the feasible
    range of the real genes (parking altitude, MTTR) shifts with every integer
    move, so a neighbour that is infeasible at the incumbent's real genes may be
    the better design once those are re-tuned. Neighbours whose objective (even
    if infeasible) is within ``screen_margin`` of the incumbent get a pattern
    search over the real genes.
    """
    b = scenario.bounds
    best = evaluate(x)
    calls = 1
    x, best, c, _ = _pattern_search(evaluate, key, x, best, steps, bounds)
    calls += c
    for _ in range(max_rounds):
        improved = False
        ranges = [range(max(getattr(b, g)[0], getattr(x, g) - 1), min(getattr(b, g)[1], getattr(x, g) + 1) + 1)
                  for g in INTEGER_GENES]
        promising = []
        incumbent = key(best)
        for combo in itertools.product(*ranges):
            cand = x.replace(**dict(zip(INTEGER_GENES, combo)))
            if cand == x:
                continue
            ev = evaluate(cand)
            calls += 1
            k = key(ev)
            if k < incumbent:
                promising.append((k, cand, ev))
            elif incumbent[0] == 0 and k[0] == 1 and ev.amc_objective < incumbent[1] * (1 + screen_margin):
                promising.append(((1, ev.amc_objective), cand, ev))
        promising.sort(key=lambda t: t[0])
        for _, cand, ev in promising[:max_reoptimised]:
            cand, ev, c, _ = _pattern_search(evaluate, key, cand, ev, steps, bounds)
            calls += c
            if key(ev) < key(best):
                best, x, improved = ev, cand, True
        x, best, c, moved = _pattern_search(evaluate, key, x, best, steps, bounds)
        calls += c
        if not (improved or moved):
            break
    return x, best, calls


def refine_p1(scenario: Scenario, x: DecisionVector, h_steps=H_STEPS,
              max_rounds: int = 20) -> tuple[DecisionVector, SystemEvaluation, int]:
    """Local search around ``x`` over the operator genes, re-tuning the parking altitude per neighbour."""
    def evaluate(d):
        return _Scored(evaluate_decision(scenario, d, amc_cap=False), None)

    x, best, calls = local_search(scenario, x, evaluate, _scored_key, {"h_parking": h_steps},
                                  {"h_parking": scenario.bounds.h_parking}, max_rounds=max_rounds)
    return x, best.ev, calls


@dataclass(frozen=True)
class _Scored:
    """An evaluation with the scalar objective the local search minimises (AMC unless given)."""
    ev: SystemEvaluation
    objective: float | None

    @property
    def amc_objective(self) -> float:
        return self.ev.amc if self.objective is None else self.objective

    @property
    def amc(self) -> float:
        return self.ev.amc


def _scored_key(s: _Scored):
    return (0, s.amc_objective) if s.ev.feasible else (1, s.ev.feasibility.total_violation)


def solve_p1(scenario: Scenario, config: NSGAConfig | None = None, jobs: int = 1,
             refine: bool = True) -> P1Result:
    """Minimise AMC over the operator decisions subject to fill-rate, lifespan, cyclic and capacity limits.

    The OOS price and MTTR stay at the scenario's decision values; set ``r_oos``
    to 0 (``scenario.without_oos()``) for the no-OOS reference.
    """
    config = config or scenario.solver
    base = _default_decision(scenario)
    space = gene_space(scenario.bounds, OPERATOR_GENES)
    objective = DecisionObjective(scenario, base, OPERATOR_GENES, bi_objective=False, amc_cap=False)
    run = run_nsga2(objective, space, config, jobs=jobs)
    pop = run.population
    feasible = np.flatnonzero(pop.cv == 0)
    if feasible.size == 0 and not refine:
        raise NoFeasibleSolution("no feasible P1 solution in the final population")
    pick = feasible[np.argmin(pop.F[feasible, 0])] if feasible.size else int(np.argmin(pop.cv))
    x = objective.decision(pop.X[pick])
    ga_ev = evaluate_decision(scenario, x, amc_cap=False)
    calls = run.evaluations
    if refine:
        x, ev, extra = refine_p1(scenario, x)
        calls += extra
    else:
        ev = ga_ev
    if not ev.feasible:
        raise NoFeasibleSolution(f"no feasible P1 solution; violated: {', '.join(ev.feasibility.violated)}")
    return P1Result(x, ev, ga_ev.amc, calls)


# --- P2 -----------------------------------------------------------------------------

@dataclass(frozen=True)
class P2Result:
    decision: DecisionVector
    evaluation: SystemEvaluation
    service_cost: float

    @property
    def p_oos(self) -> float:
        return self.decision.p_oos

    @property
    def mttr(self) -> float:
        return self.decision.mttr

    @property
    def ap(self) -> float:
        return self.evaluation.ap


def _best_price(scenario: Scenario, x: DecisionVector, mttr: float, amc_ref: float):
    """Closed-form price for a given MTTR: as high as the AMC ceiling and price bound allow."""
    cr = scenario.cost_response
    b = scenario.bounds
    ev0 = evaluate_decision(scenario, x.replace(p_oos=0.0, mttr=mttr), amc_cap=False)
    calls = ev0.result.service_frequency * ev0.result.n_plane
    cost = oos_service_cost(mttr, cr)
    if calls <= 0:
        return None, -math.inf, cost
    price = min(b.p_oos[1], (amc_ref - ev0.amc) / calls)
    if price < max(b.p_oos[0], cost):
        return None, -math.inf, cost
    return price, (price - cost) * calls, cost


def solve_p2(scenario: Scenario, amc_ref: float | None = None, grid: int = 201) -> P2Result:
    """Maximise provider profit over (price, MTTR) with the operator policy fixed.

    Profit is linear in price and AMC increases with price, so the best price for
    a given MTTR sits at the AMC ceiling (or the price bound). MTTR is then
    searched on a grid and refined with a bounded scalar minimiser.
    """
    if scenario.cost_response is None:
        raise ValueError("P2 needs cost-responsiveness parameters")
    if scenario.decision is None:
        raise ValueError("P2 needs a fixed operator policy (scenario decision)")
    amc_ref = amc_ref if amc_ref is not None else scenario.requirements.amc_ref
    if amc_ref is None:
        raise ValueError("P2 needs an AMC ceiling")
    x = scenario.decision
    lo = max(scenario.bounds.mttr[0], scenario.cost_response.mttr_floor + MTTR_MARGIN)
    hi = scenario.bounds.mttr[1]
    mttrs = np.linspace(lo, hi, grid)
    profits = np.array([_best_price(scenario, x, m, amc_ref)[1] for m in mttrs])
    if not np.isfinite(profits).any():
        raise NoFeasibleSolution("service cost exceeds the price ceiling at every MTTR")
    k = int(np.argmax(profits))
    best_m, best_ap = float(mttrs[k]), float(profits[k])
    a, b = float(mttrs[max(k - 1, 0)]), float(mttrs[min(k + 1, grid - 1)])
    if b > a:
        res = minimize_scalar(lambda m: -_best_price(scenario, x, m, amc_ref)[1], bounds=(a, b),
                              method="bounded", options={"xatol": 1e-6})
        if np.isfinite(res.fun) and -res.fun > best_ap:
            best_m, best_ap = float(res.x), float(-res.fun)
    price, _, cost = _best_price(scenario, x, best_m, amc_ref)
    decision = x.replace(p_oos=price, mttr=best_m)
    return P2Result(decision, evaluate_decision(scenario, decision), cost)


# --- P3 -----------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontMember:
    decision: DecisionVector
    point: ObjectivePoint
    evaluation: SystemEvaluation = field(repr=False)


@dataclass(frozen=True)
class ParetoFront:
    members: tuple
    reference_point: tuple = DEFAULT_REFERENCE
    hypervolume_trace: tuple = ()
    config: NSGAConfig | None = None
    evaluations: int = 0

    def __len__(self):
        return len(self.members)

    @property
    def points(self) -> list[ObjectivePoint]:
        return [m.point for m in self.members]

    def amc_range(self) -> tuple[float, float]:
        v = [m.point.amc for m in self.members]
        return min(v), max(v)

    def ap_range(self) -> tuple[float, float]:
        v = [m.point.ap for m in self.members]
        return min(v), max(v)

    def hypervolume(self, reference_point=None) -> float:
        return hypervolume(self.points, reference_point or self.reference_point)

    def slope(self) -> float:
        """Least-squares slope of AP against AMC over the front."""
        amc = np.array([m.point.amc for m in self.members])
        ap = np.array([m.point.ap for m in self.members])
        return float(np.polyfit(amc, ap, 1)[0])

    def rows(self) -> list[dict]:
        out = []
        for m in self.members:
            row = {g: getattr(m.decision, g) for g in GENES}
            row.update(amc=m.point.amc, ap=m.point.ap)
            c = m.evaluation.costs
            row.update(a_lau=c.a_lau, a_maneuv=c.a_maneuv, a_manufac=c.a_manufac, a_hold=c.a_hold, a_oos=c.a_oos,
                       service_cost=m.evaluation.service_cost, gamma0=m.evaluation.result.gamma0,
                       beta_plane=m.evaluation.result.plane.fill_rate,
                       beta_parking=m.evaluation.result.parking.fill_rate,
                       t_d_years=m.evaluation.disposal.t_d_years if m.evaluation.disposal else None)
            out.append(row)
        return out


def _feasible_front(points: list[ObjectivePoint]) -> list[int]:
    feas = [i for i, p in enumerate(points) if p.feasible]
    if not feas:
        return []
    first = fast_non_dominated_sort([points[i] for i in feas])[0]
    return [feas[i] for i in first]


def polish_front(scenario: Scenario, members: list, count: int, ref: tuple) -> list:
    """Sweep price along the best design found by a local search on AMC + AP.

    Price only moves money between operator and provider, so AMC + AP does not
    depend on it and each design traces a slope-one line in the (AMC, AP)
    plane. The member with the lowest AMC + AP seeds a local search over the
    operator genes and MTTR at break-even price; the resulting design is then
    evaluated at ``count`` prices spanning its line up to the AMC ceiling.
    """
    cr, b = scenario.cost_response, scenario.bounds
    mttr_bounds = (max(b.mttr[0], cr.mttr_floor + MTTR_MARGIN), b.mttr[1])

    def break_even(d: DecisionVector) -> DecisionVector:
        return d.replace(p_oos=min(max(oos_service_cost(d.mttr, cr), b.p_oos[0]), b.p_oos[1]))

    def evaluate(d):
        ev = evaluate_decision(scenario, break_even(d))
        return _Scored(ev, ev.amc + ev.ap)

    start = min(members, key=lambda m: m.point.amc + m.point.ap).decision
    x, best, _ = local_search(scenario, start, evaluate, _scored_key,
                              {"h_parking": H_STEPS, "mttr": MTTR_STEPS},
                              {"h_parking": b.h_parking, "mttr": mttr_bounds})
    if not best.ev.feasible:
        return []
    x = break_even(x)
    ev0 = best.ev
    calls = ev0.result.service_frequency * ev0.result.n_plane
    if calls <= 0:
        return [FrontMember(x, point_of(ev0), ev0)]
    top = min(ref[0] * (1 - 1e-12), ev0.amc + (b.p_oos[1] - x.p_oos) * calls)
    out = []
    for amc in np.linspace(ev0.amc, max(top, ev0.amc), count):
        d = x.replace(p_oos=x.p_oos + (amc - ev0.amc) / calls)
        ev = evaluate_decision(scenario, d)
        if ev.feasible:
            out.append(FrontMember(d, point_of(ev), ev))
    return out


def solve_p3(scenario: Scenario, config: NSGAConfig | None = None, jobs: int = 1,
             reference_point=None, polish: bool = True) -> ParetoFront:
    """NSGA-II on (min AMC, max AP) subject to all operator and provider constraints.

    With ``polish`` the GA front is merged with a price sweep of a locally
    optimised design (see :func:`polish_front`) before the final non-dominated filter.
    """
    if scenario.cost_response is None:
        raise ValueError("P3 needs cost-responsiveness parameters")
    if scenario.requirements.amc_ref is None:
        raise ValueError("P3 needs an AMC ceiling")
    config = config or scenario.solver
    ref = tuple(reference_point) if reference_point is not None else (scenario.requirements.amc_ref, 0.0)
    base = _default_decision(scenario)
    space = gene_space(scenario.bounds, GENES, scenario.cost_response.mttr_floor)
    objective = DecisionObjective(scenario, base, GENES, bi_objective=True)

    def trace(pop, ranks):
        feas = pop.cv == 0
        return hypervolume([(f[0], -f[1]) for f in pop.F[feas]], ref)

    run = run_nsga2(objective, space, config, on_generation=trace, jobs=jobs)
    pop = run.population
    candidates = [objective.decision(row) for row in pop.X]
    evaluations = [evaluate_decision(scenario, x) for x in candidates]
    pool = [FrontMember(x, point_of(ev), ev) for x, ev in zip(candidates, evaluations)]
    ga_front = [pool[i] for i in _feasible_front([m.point for m in pool])]
    if polish and ga_front:
        pool = ga_front + polish_front(scenario, ga_front, config.population, ref)
    seen, members = set(), []
    points = [m.point for m in pool]
    for i in sorted(_feasible_front(points), key=lambda i: (points[i].amc, -points[i].ap)):
        key = pool[i].decision.as_tuple()
        if key in seen:
            continue
        seen.add(key)
        members.append(pool[i])
    if not members:
        raise NoFeasibleSolution("NSGA-II found no feasible solution")
    return ParetoFront(tuple(members), ref, tuple(run.history), config, run.evaluations)
