"""Scenario bundle, decision vector and the end-to-end evaluation of one decision."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .economics import (
    CostBreakdown,
    CostParams,
    CostResponsivenessParams,
    DisposalTimeBreakdown,
    FeasibilityReport,
    Requirements,
    annual_maintenance_cost,
    feasibility_check,
    mean_time_to_disposal,
    oos_annual_profit,
    oos_service_cost,
)
from .errors import DomainError, IllPosedScenarioError
from .inventory import (
    ConstellationConfig,
    EvaluationResult,
    LaunchService,
    OOSTerms,
    ReplenishmentPolicy,
    evaluate_steady_state,
)
from .orbital import OrbitGeometry, PropulsionSpec

INTEGER_GENES = ("s", "q", "k_s", "k_q", "n_oos", "n_parking")
REAL_GENES = ("h_parking", "p_oos", "mttr")
GENES = INTEGER_GENES + REAL_GENES


@dataclass(frozen=True)
class DecisionVector:
    s: int
    q: int
    k_s: int
    k_q: int
    n_oos: int
    n_parking: int
    h_parking: float  # km
    p_oos: float = 0.0  # $M per service
    mttr: float = 12.0  # time units

    @property
    def mu_oos(self) -> float:
        return 1.0 / self.mttr

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, g) for g in GENES)

    @classmethod
    def from_sequence(cls, values) -> "DecisionVector":
        vals = list(values)
        ints = [int(round(v)) for v in vals[:6]]
        return cls(*ints, *(float(v) for v in vals[6:]))

    def replace(self, **changes) -> "DecisionVector":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Bounds:
    """Inclusive box bounds per gene; the lower MTTR bound is open at the ideal floor."""
    s: tuple = (1, 20)
    q: tuple = (1, 40)
    k_s: tuple = (1, 20)
    k_q: tuple = (1, 40)
    n_oos: tuple = (1, 4)
    n_parking: tuple = (1, 20)
    h_parking: tuple = (500.0, 1000.0)
    p_oos: tuple = (0.5, 5.5)
    mttr: tuple = (2.0, 12.0)

    def __post_init__(self):
        for g in GENES:
            lo, hi = getattr(self, g)
            if lo > hi:
                raise ValueError(f"bounds for {g} are inverted: [{lo}, {hi}]")

    @classmethod
    def table_defaults(cls, q_max: int = 40, c_min: float = 0.5, mu_ideal: float = 0.5) -> "Bounds":
        return cls(q=(1, q_max), k_q=(1, q_max), p_oos=(c_min, c_min + 5.0), mttr=(1.0 / mu_ideal, 12.0))

    def lower(self):
        return [getattr(self, g)[0] for g in GENES]

    def upper(self):
        return [getattr(self, g)[1] for g in GENES]

    def replace(self, **changes) -> "Bounds":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class NSGAConfig:
    population: int = 200
    generations: int = 300
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # defaults to 1 / number of genes
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0
    seed: int = 1
    # epsilon-constrained selection: violations up to a shrinking epsilon count as
    # feasible for this fraction of the generations (0 disables it)
    epsilon_generations: float = 0.5
    epsilon_exponent: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon_generations <= 1.0:
            raise ValueError("epsilon_generations must be in [0, 1]")
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be an even number >= 4")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass(frozen=True)
class Scenario:
    name: str
    constellation: ConstellationConfig
    propulsion: PropulsionSpec
    launch: LaunchService
    r_oos: float
    costs: CostParams
    requirements: Requirements
    cost_response: CostResponsivenessParams | None = None
    bounds: Bounds = field(default_factory=Bounds)
    solver: NSGAConfig = field(default_factory=NSGAConfig)
    decision: DecisionVector | None = None

    @property
    def inclination(self) -> float:
        return self.constellation.plane_orbit.inclination

    def policy(self, x: DecisionVector) -> ReplenishmentPolicy:
        return ReplenishmentPolicy(
            s=x.s, q=x.q, k_s=x.k_s, k_q=x.k_q, n_oos=x.n_oos, n_parking=x.n_parking,
            parking_orbit=OrbitGeometry(x.h_parking, self.inclination),
        )

    def oos_terms(self, x: DecisionVector) -> OOSTerms:
        return OOSTerms(r_oos=self.r_oos, mu_oos=x.mu_oos, p_oos=x.p_oos)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def without_oos(self) -> "Scenario":
        return self.replace(r_oos=0.0)


@dataclass(frozen=True)
class SystemEvaluation:
    decision: DecisionVector
    result: EvaluationResult
    costs: CostBreakdown
    disposal: DisposalTimeBreakdown | None
    service_cost: float | None
    ap: float | None
    feasibility: FeasibilityReport

    @property
    def amc(self) -> float:
        return self.costs.amc

    @property
    def feasible(self) -> bool:
        return self.feasibility.feasible

    def summary(self) -> dict:
        r, c = self.result, self.costs
        out = {
            "amc": c.amc, "a_lau": c.a_lau, "a_maneuv": c.a_maneuv, "a_manufac": c.a_manufac,
            "a_hold": c.a_hold, "a_oos": c.a_oos,
            "ap": self.ap, "service_cost": self.service_cost,
            "gamma0": r.gamma0, "s_plane": r.plane.mean_stock, "s_parking": r.parking.mean_stock,
            "s_wait": r.s_wait, "f_plane": r.plane.order_frequency, "f_parking": r.parking.order_frequency,
            "f_oos": r.service_frequency, "eps_plane": r.plane.expected_shortage,
            "eps_parking": r.parking.expected_shortage, "beta_plane": r.plane.fill_rate,
            "beta_parking": r.parking.fill_rate, "fuel_mass_kg": r.transfer.fuel_mass,
            "t_trans": r.transfer.t_trans, "lambda_plane": r.lambda_plane, "lambda_parking": r.lambda_parking,
        }
        if self.disposal is not None:
            d = self.disposal
            out.update(t_parking=d.t_parking, t_trans_mean=d.t_trans, t_plane=d.t_plane, t_opr=d.t_opr,
                       t_oos=d.t_oos, t_d=d.t_d, t_d_years=d.t_d_years)
        return out


def evaluate_decision(scenario: Scenario, x: DecisionVector, amc_cap: bool = True) -> SystemEvaluation:
    """Analytic evaluation, costs, lifetime, provider profit and constraint check for one decision.

    The pricing constraint only applies when services are actually sold; ``amc_cap``
    turns the AMC ceiling off for the operator-only problem.
    """
    cfg = scenario.constellation
    policy = scenario.policy(x)
    res = evaluate_steady_state(cfg, policy, scenario.oos_terms(x), scenario.launch, scenario.propulsion)
    costs = dataclasses.replace(scenario.costs, p_oos=x.p_oos)
    breakdown = annual_maintenance_cost(res, costs)
    try:
        disposal = mean_time_to_disposal(res)
    except IllPosedScenarioError:
        disposal = None
    service_cost = ap = None
    if scenario.cost_response is not None:
        try:
            service_cost = oos_service_cost(x.mttr, scenario.cost_response)
        except DomainError:
            service_cost = float("inf")
        ap = oos_annual_profit(res, x.p_oos, service_cost)
    report = feasibility_check(res, cfg.lifespan, policy, costs, scenario.requirements,
                               amc=breakdown.amc if amc_cap else None,
                               service_cost=service_cost if res.service_frequency > 0 else None)
    return SystemEvaluation(x, res, breakdown, disposal, service_cost, ap, report)
