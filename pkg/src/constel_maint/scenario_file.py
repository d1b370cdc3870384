"""JSON scenario files: schema, parsing, serialisation and the bundled case-study scenarios.

Every key carries its unit in the name (``_km``, ``_weeks``, ``_musd`` ...) so that
week/day/year mix-ups are visible in the file itself.
"""
from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .economics import CostParams, CostResponsivenessParams, Requirements
from .errors import ParseError, SchemaError, UnitError
from .inventory import ConstellationConfig, LaunchService
from .model import Bounds, DecisionVector, NSGAConfig, Scenario
from .orbital import OrbitGeometry, PropulsionSpec
from .simulator import SimConfig

SCENARIO_SUFFIX = ".scenario"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstellationSection(_Section):
    n_plane: int = Field(ge=1)
    n_sat: int = Field(ge=1)
    plane_altitude_km: float
    inclination_deg: float = Field(ge=0, le=180)
    eccentricity: float = Field(default=0.0, ge=0, lt=1)
    failure_rate_per_year: float = Field(ge=0)
    n_t_per_year: int = Field(default=52, ge=1)
    lifespan_years: float = Field(gt=0)


class SatelliteSection(_Section):
    dry_mass_kg: float = Field(gt=0)
    specific_impulse_s: float = Field(gt=0)
    mass_flow_rate_kg_per_s: float = Field(gt=0)


class LaunchSection(_Section):
    cost_musd: float = Field(ge=0)
    capacity_sats: int = Field(ge=1)
    processing_time_weeks: float = Field(ge=0)
    mean_delay_weeks: float = Field(gt=0)


class OOSSection(_Section):
    r_oos: float = Field(ge=0, le=1)


class CostSection(_Section):
    manufacturing_musd_per_sat: float = Field(ge=0)
    holding_musd_per_sat_year: float = Field(ge=0)
    fuel_musd_per_kg: float = Field(ge=0)


class CostResponsivenessSection(_Section):
    c_min_musd: float = Field(gt=0)
    mu_ideal_per_week: float = Field(gt=0)
    alpha1: float = Field(gt=0)
    alpha2: float = Field(gt=0)


class RequirementsSection(_Section):
    beta_plane: float = Field(ge=0, le=1)
    beta_parking: float = Field(ge=0, le=1)
    amc_ref_musd_per_year: Optional[float] = None


class DecisionSection(_Section):
    s: int = Field(ge=1)
    q: int = Field(ge=1)
    k_s: int = Field(ge=1)
    k_q: int = Field(ge=1)
    n_oos: int = Field(ge=0)
    n_parking: int = Field(ge=1)
    parking_altitude_km: float
    price_musd: float = Field(default=0.0, ge=0)
    mttr_weeks: float = Field(default=12.0, gt=0)


def _range(lo_type=float):
    return Field(default=None, min_length=2, max_length=2)


class BoundsSection(_Section):
    s: Optional[list[int]] = _range()
    q: Optional[list[int]] = _range()
    k_s: Optional[list[int]] = _range()
    k_q: Optional[list[int]] = _range()
    n_oos: Optional[list[int]] = _range()
    n_parking: Optional[list[int]] = _range()
    parking_altitude_km: Optional[list[float]] = _range()
    price_musd: Optional[list[float]] = _range()
    mttr_weeks: Optional[list[float]] = _range()

    @model_validator(mode="after")
    def _ordered(self):
        for name in type(self).model_fields:
            r = getattr(self, name)
            if r is not None and r[0] > r[1]:
                raise ValueError(f"range for {name} is inverted: {r}")
        return self


class SolverSection(_Section):
    population: int = Field(default=200, ge=4)
    generations: int = Field(default=300, ge=0)
    crossover_prob: float = Field(default=0.9, ge=0, le=1)
    mutation_prob: Optional[float] = Field(default=None, ge=0, le=1)
    eta_crossover: float = Field(default=15.0, gt=0)
    eta_mutation: float = Field(default=20.0, gt=0)
    seed: int = 1


class SimulationSection(_Section):
    horizon_years: float = Field(default=60.0, gt=0)
    step_days: int = Field(default=1, ge=1)
    replications: int = Field(default=100, ge=1)
    warmup_years: float = Field(default=5.0, ge=0)
    seed: int = 12345


class ScenarioFile(_Section):
    name: str = "scenario"
    description: str = ""
    constellation: ConstellationSection
    satellite: SatelliteSection
    launch: LaunchSection
    oos: OOSSection
    costs: CostSection
    requirements: RequirementsSection
    cost_responsiveness: Optional[CostResponsivenessSection] = None
    decision: Optional[DecisionSection] = None
    bounds: Optional[BoundsSection] = None
    solver: SolverSection = SolverSection()
    simulation: SimulationSection = SimulationSection()

    @model_validator(mode="after")
    def _units(self):
        c = self.constellation
        if not c.plane_altitude_km > 0:
            raise UnitError(f"plane_altitude_km must be a positive altitude in km, got {c.plane_altitude_km}")
        if self.decision is not None and not 0 < self.decision.parking_altitude_km < c.plane_altitude_km:
            raise UnitError("decision.parking_altitude_km must be positive and below the plane altitude")
        if self.simulation.warmup_years > self.simulation.horizon_years:
            raise ValueError("simulation.warmup_years exceeds horizon_years")
        return self

    # --- conversion ---------------------------------------------------------------
    def to_scenario(self) -> Scenario:
        c, sat, la = self.constellation, self.satellite, self.launch
        cfg = ConstellationConfig(
            n_plane=c.n_plane, n_sat=c.n_sat,
            plane_orbit=OrbitGeometry(c.plane_altitude_km, c.inclination_deg, c.eccentricity),
            sat_failure_rate=c.failure_rate_per_year, n_t=c.n_t_per_year, lifespan=c.lifespan_years,
        )
        weeks = c.n_t_per_year / 52.0  # model time units per week
        launch = LaunchService(t_lau=la.processing_time_weeks * weeks, psi_lau=1.0 / (la.mean_delay_weeks * weeks),
                               cost=la.cost_musd, capacity=la.capacity_sats)
        costs = CostParams(c_lau=la.cost_musd, c_manufac=self.costs.manufacturing_musd_per_sat,
                           c_hold=self.costs.holding_musd_per_sat_year, eps_fuel=self.costs.fuel_musd_per_kg,
                           p_oos=self.decision.price_musd if self.decision else 0.0, q_max=la.capacity_sats)
        cr = None
        if self.cost_responsiveness is not None:
            r = self.cost_responsiveness
            cr = CostResponsivenessParams(r.c_min_musd, r.mu_ideal_per_week / weeks, r.alpha1, r.alpha2)
        bounds = Bounds.table_defaults(q_max=la.capacity_sats,
                                       c_min=cr.c_min if cr else 0.5,
                                       mu_ideal=cr.mu_ideal if cr else 0.5)
        if self.bounds is not None:
            b = self.bounds
            overrides = {"s": b.s, "q": b.q, "k_s": b.k_s, "k_q": b.k_q, "n_oos": b.n_oos,
                         "n_parking": b.n_parking, "h_parking": b.parking_altitude_km, "p_oos": b.price_musd,
                         "mttr": None if b.mttr_weeks is None else [v * weeks for v in b.mttr_weeks]}
            bounds = bounds.replace(**{k: tuple(v) for k, v in overrides.items() if v is not None})
        decision = None
        if self.decision is not None:
            d = self.decision
            decision = DecisionVector(d.s, d.q, d.k_s, d.k_q, d.n_oos, d.n_parking, d.parking_altitude_km,
                                      d.price_musd, d.mttr_weeks * weeks)
        s = self.solver
        return Scenario(
            name=self.name, constellation=cfg,
            propulsion=PropulsionSpec(sat.dry_mass_kg, sat.specific_impulse_s, sat.mass_flow_rate_kg_per_s),
            launch=launch, r_oos=self.oos.r_oos, costs=costs,
            requirements=Requirements(self.requirements.beta_plane, self.requirements.beta_parking,
                                      self.requirements.amc_ref_musd_per_year),
            cost_response=cr, bounds=bounds,
            solver=NSGAConfig(s.population, s.generations, s.crossover_prob, s.mutation_prob,
                              s.eta_crossover, s.eta_mutation, s.seed),
            decision=decision,
        )

    def sim_config(self) -> SimConfig:
        m = self.simulation
        return SimConfig(horizon_years=m.horizon_years, step=m.step_days, replications=m.replications,
                         warmup_years=m.warmup_years, rng_seed=m.seed)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2) + "\n"

    def digest(self) -> str:
        """Platform-independent hash of the canonical content."""
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


REQUIRED_SECTIONS = [name for name, f in ScenarioFile.model_fields.items() if f.is_required()]


def _line_of(text: str, key) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _format_errors(text: str, exc: ValidationError) -> list[str]:
    msgs = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        keys = [p for p in err["loc"] if isinstance(p, str)]
        line = _line_of(text, keys[-1]) if keys else None
        where = f" (line {line})" if line else ""
        msgs.append(f"{loc or '<root>'}: {err['msg']}{where}")
    return msgs


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioFile:
    if not text.strip():
        raise SchemaError(f"{source}: empty scenario; required sections: {', '.join(REQUIRED_SECTIONS)}",
                          [f"{name}: Field required" for name in REQUIRED_SECTIONS])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object")
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        errors = _format_errors(text, exc)
        cls = UnitError if any("km" in e and "positive" in e for e in errors) else SchemaError
        raise cls(f"{source}: invalid scenario\n  " + "\n  ".join(errors), errors) from None
    except UnitError as exc:
        raise UnitError(f"{source}: {exc}", [str(exc)]) from None


def parse_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_scenario_text(text, str(path))


def bundled_dir() -> Path:
    return Path(resources.files("constel_maint") / "scenarios")


def bundled_scenarios() -> list[Path]:
    return sorted(bundled_dir().glob(f"*{SCENARIO_SUFFIX}"))


def resolve_scenario_path(name_or_path) -> Path:
    """Accept a filesystem path or the stem of a bundled scenario (``baseline``, ``instance_1-1`` ...)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    for cand in (bundled_dir() / p.name, bundled_dir() / f"{p.name}{SCENARIO_SUFFIX}"):
        if cand.exists():
            return cand
    raise ParseError(f"scenario not found: {name_or_path}")


def load_scenario(name_or_path) -> Scenario:
    return parse_scenario(resolve_scenario_path(name_or_path)).to_scenario()
