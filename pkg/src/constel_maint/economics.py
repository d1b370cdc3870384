"""Operator cost, satellite lifetime and OOS-provider profit on top of a steady-state evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import DomainError, IllPosedScenarioError
from .inventory import EvaluationResult


@dataclass(frozen=True)
class CostParams:
    c_lau: float  # $M per launch
    c_manufac: float  # $M per satellite
    c_hold: float  # $M per satellite-year
    eps_fuel: float  # $M per kg of propellant
    p_oos: float = 0.0  # $M per service
    q_max: int = 40  # satellites per launch

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")


@dataclass(frozen=True)
class CostBreakdown:
    a_lau: float
    a_maneuv: float
    a_manufac: float
    a_hold: float
    a_oos: float
    amc: float = field(init=False)

    def __post_init__(self):
        total = self.a_lau + self.a_maneuv + self.a_manufac + self.a_hold + self.a_oos
        object.__setattr__(self, "amc", total)


@dataclass(frozen=True)
class DisposalTimeBreakdown:
    t_parking: float
    t_trans: float
    t_plane: float
    t_opr: float
    t_oos: float
    n_t: int = 52
    t_d: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "t_d", self.t_parking + self.t_trans + self.t_plane + self.t_opr + self.t_oos)

    @property
    def t_d_years(self) -> float:
        return self.t_d / self.n_t


@dataclass(frozen=True)
class CostResponsivenessParams:
    c_min: float  # $M
    mu_ideal: float  # per time unit
    alpha1: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        if not (self.c_min > 0 and self.mu_ideal > 0 and self.alpha1 > 0 and self.alpha2 > 0):
            raise ValueError("cost-responsiveness parameters must all be positive")

    @property
    def mttr_floor(self) -> float:
        return 1.0 / self.mu_ideal


@dataclass(frozen=True)
class Requirements:
    beta_plane: float = 0.98
    beta_parking: float = 0.98
    amc_ref: float | None = None


def annual_maintenance_cost(ev: EvaluationResult, costs: CostParams, fuel_mass: float | None = None) -> CostBreakdown:
    """Yearly operator spend split into launch, maneuver, manufacturing, holding and servicing."""
    if fuel_mass is None:
        fuel_mass = ev.transfer.fuel_mass
    n_plane = ev.n_plane
    return CostBreakdown(
        a_lau=costs.c_lau * ev.parking.order_frequency * ev.n_parking,
        a_maneuv=fuel_mass * costs.eps_fuel * ev.plane.order_frequency * n_plane * ev.q,
        a_manufac=costs.c_manufac * ev.lambda_plane * ev.gamma0 * n_plane * ev.n_t,
        a_hold=costs.c_hold * (ev.parking.mean_stock * ev.q * ev.n_parking
                               + ev.plane.mean_stock * n_plane
                               + ev.s_wait * n_plane),
        a_oos=costs.p_oos * ev.service_frequency * n_plane,
    )


def mean_time_to_disposal(ev: EvaluationResult) -> DisposalTimeBreakdown:
    """Mean launch-to-disposal time of a satellite serviced the maximum number of times."""
    for name, rate in (("lambda_parking", ev.lambda_parking), ("lambda_plane", ev.lambda_plane),
                       ("lambda_sat", ev.lambda_sat), ("mu_oos", ev.mu_oos)):
        if rate == 0:
            raise IllPosedScenarioError(f"{name} is zero; mean time to disposal is undefined")
    lives = ev.n_oos + 1
    return DisposalTimeBreakdown(
        t_parking=ev.parking.mean_stock / ev.lambda_parking,
        t_trans=ev.mean_plane_leadtime,
        t_plane=ev.plane.mean_stock * lives / ev.lambda_plane,
        t_opr=lives * ev.n_t / ev.lambda_sat,
        t_oos=ev.n_oos / ev.mu_oos,
        n_t=ev.n_t,
    )


def oos_service_cost(mttr: float, params: CostResponsivenessParams) -> float:
    """Per-service provider cost as a decreasing function of mean time to recovery."""
    gap = mttr - params.mttr_floor
    if not gap > 0:
        raise DomainError(f"mttr {mttr} must exceed the ideal-responsiveness floor {params.mttr_floor}")
    return params.c_min + params.alpha1 / gap ** params.alpha2


def oos_annual_profit(ev: EvaluationResult, p_oos: float, service_cost: float) -> float:
    return (p_oos - service_cost) * ev.service_frequency * ev.n_plane


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    value: float
    limit: float
    violation: float  # normalised, >= 0

    @property
    def passed(self) -> bool:
        return self.violation == 0.0


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple

    @property
    def feasible(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def total_violation(self) -> float:
        return float(sum(c.violation for c in self.checks))

    @property
    def violated(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _at_most(name, value, limit, scale=None):
    excess = value - limit
    scale = scale if scale else max(abs(limit), 1.0)
    return ConstraintCheck(name, value, limit, max(excess, 0.0) / scale)


def _at_least(name, value, limit, scale=None):
    short = limit - value
    scale = scale if scale else max(abs(limit), 1.0)
    return ConstraintCheck(name, value, limit, max(short, 0.0) / scale)


def feasibility_check(ev: EvaluationResult, lifespan: float, policy, costs: CostParams,
                      requirements: Requirements, amc: float | None = None,
                      service_cost: float | None = None) -> FeasibilityReport:
    """Check fill-rate, lifespan, cyclic-policy, launch-capacity, pricing and AMC-cap constraints.

    ``lifespan`` is in years. The pricing and AMC constraints are only checked when
    ``service_cost`` and ``requirements.amc_ref`` (with ``amc``) are supplied.
    Violations are normalised by the constraint limit so they can be summed.
    """
    try:
        td_years = mean_time_to_disposal(ev).t_d_years
    except IllPosedScenarioError:
        td_years = math.inf
    checks = [
        _at_least("beta_plane", ev.plane.fill_rate, requirements.beta_plane),
        _at_least("beta_parking", ev.parking.fill_rate, requirements.beta_parking),
        _at_most("lifespan", td_years if math.isfinite(td_years) else 1e9, lifespan),
        _at_most("s_le_q", policy.s, policy.q),
        _at_most("ks_le_kq", policy.k_s, policy.k_q),
        _at_most("launch_capacity", policy.q * policy.k_q, costs.q_max),
    ]
    if service_cost is not None:
        checks.append(_at_least("price_covers_cost", costs.p_oos, service_cost, scale=max(service_cost, 1e-9)))
    if requirements.amc_ref is not None and amc is not None:
        checks.append(_at_most("amc_cap", amc, requirements.amc_ref))
    return FeasibilityReport(tuple(checks))
