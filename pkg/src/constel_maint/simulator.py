"""Day-stepped Monte Carlo simulation of the spare supply chain, used to validate the analytic model.

Every state change happens on an integer day. Instead of visiting every day, the
loop jumps between days on which something happens (a failure, an order
arrival, a service completion, a launch), which is equivalent for a 1-day grid.
Within a day, arrivals and service completions are applied before failures.

Satellite failures across the whole constellation are one superposed Poisson
stream; each failure picks a uniform plane and slot and is discarded when that
slot is already empty (thinning), so failure rates scale with the number of
operational satellites. In-plane lead times come from the actual RAAN phases of
the parking orbits, not from the analytic lead-time law.
"""
from __future__ import annotations

import heapq
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import orbital
from .errors import AltitudeOrderError, SamplingExhausted
from .inventory import ConstellationConfig, LaunchService, solve_gamma
from .model import DecisionVector, Scenario, SystemEvaluation, evaluate_decision

DAYS_PER_YEAR = 365.25
DAYS_PER_WEEK = 7.0

METRICS = ("s_plane", "s_parking", "s_wait", "f_plane", "f_parking", "f_oos",
           "beta_plane", "beta_parking", "t_d", "amc")
RELATIVE_METRICS = ("s_plane", "s_parking", "s_wait", "f_plane", "f_parking", "f_oos", "t_d", "amc")
ABSOLUTE_METRICS = ("beta_plane", "beta_parking")

# event kinds, in within-day priority order
_PLANE_ARRIVAL, _SERVICE_DONE, _LAUNCH_ARRIVAL, _FAILURE = range(4)


@dataclass(frozen=True)
class SimConfig:
    horizon_years: float = 60.0
    step: int = 1  # days
    replications: int = 100
    warmup_years: float = 5.0
    rng_seed: int = 12345
    check_invariants: bool = False  # assert conservation after every event (slow)

    def __post_init__(self):
        if not self.horizon_years > 0:
            raise ValueError("horizon_years must be positive")
        if not 0 <= self.warmup_years <= self.horizon_years:
            raise ValueError("warmup_years must lie in [0, horizon_years]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.step != 1:
            raise ValueError("only the 1-day step is supported")


@dataclass(frozen=True)
class ReplicationRecord:
    """Metrics of one replication, in the analytic model's units.

    Stocks are per plane / per parking orbit (parking in batches), frequencies are
    per plane or per parking orbit per year, ``t_d`` is in model time units and
    ``amc`` in $M/year. Fill rates are NaN when no order arrived in the window.
    """
    seed: int
    s_plane: float
    s_parking: float
    s_wait: float
    f_plane: float
    f_parking: float
    f_oos: float
    beta_plane: float
    beta_parking: float
    t_d: float
    amc: float
    failures: int = 0
    services: int = 0
    plane_orders: int = 0
    launches: int = 0
    all_parking_empty: int = 0
    max_service_count: int = 0
    mean_plane_leadtime: float = math.nan  # model time units

    def metrics(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulationEstimate:
    mean: dict
    stderr: dict  # None per metric when fewer than two finite replications
    replications: int
    records: tuple = field(repr=False, default=())

    def as_dict(self) -> dict:
        return {"replications": self.replications, "mean": self.mean, "stderr": self.stderr}


class _TimeAverage:
    """Integral of a piecewise-constant integer quantity over [start, stop] days."""
    __slots__ = ("start", "stop", "value", "last", "area")

    def __init__(self, start: int, stop: int, value: float):
        self.start, self.stop = start, stop
        self.value, self.last, self.area = value, 0, 0.0

    def set(self, day: int, value: float):
        if value != self.value:
            self._advance(day)
            self.value = value

    def _advance(self, day: int):
        lo = min(max(self.last, self.start), self.stop)
        hi = min(max(day, self.start), self.stop)
        self.area += self.value * (hi - lo)
        self.last = day

    def mean(self) -> float:
        self._advance(self.stop)
        span = self.stop - self.start
        return self.area / span if span > 0 else float(self.value)


def replication_seeds(rng_seed: int, replications: int) -> list[int]:
    """Independent 64-bit seeds derived from one master seed (counter-based spawning)."""
    children = np.random.SeedSequence(rng_seed).spawn(replications)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _sample_count(rng: random.Random, cum_weights) -> int:
    return rng.choices(range(len(cum_weights)), cum_weights=cum_weights)[0]


def run_replication(scenario: Scenario, x: DecisionVector, sim: SimConfig, seed: int) -> ReplicationRecord:
    """Simulate one replication; deterministic given ``seed``."""
    rng = random.Random(seed)
    cfg: ConstellationConfig = scenario.constellation
    launch: LaunchService = scenario.launch
    policy = scenario.policy(x)
    s, q, k_s, k_q = x.s, x.q, x.k_s, x.k_q
    n_oos, n_park, n_plane, n_sat = x.n_oos, x.n_parking, cfg.n_plane, cfg.n_sat
    r_oos = scenario.r_oos
    unit_days = DAYS_PER_WEEK * 52.0 / cfg.n_t  # days per model time unit

    transfer = orbital.plan_transfer(policy.parking_orbit, cfg.plane_orbit, scenario.propulsion,
                                     time_unit=orbital.SECONDS_PER_WEEK * 52 / cfg.n_t)
    omega_day = transfer.omega_rel / unit_days  # rad/day, parking node relative to plane node
    t_trans_days = transfer.t_trans * unit_days
    two_pi = 2.0 * math.pi
    plane_phase = [two_pi * p / n_plane for p in range(n_plane)]
    park_phase = [two_pi * k / n_park for k in range(n_park)]
    drift_sign = 1.0 if omega_day > 0 else -1.0
    abs_omega = abs(omega_day)

    fail_rate = cfg.sat_failure_rate * n_sat * n_plane / DAYS_PER_YEAR  # per day, whole constellation
    mttr_days = x.mttr * unit_days
    launch_shift = launch.t_lau * unit_days
    launch_mean_delay = unit_days / launch.psi_lau

    horizon = int(round(sim.horizon_years * DAYS_PER_YEAR))
    warmup = int(round(sim.warmup_years * DAYS_PER_YEAR))
    window_years = (horizon - warmup) / DAYS_PER_YEAR

    # Start from the steady-state mix of service counts so the warm-up only has to settle stocks.
    gamma = solve_gamma(r_oos, n_oos, 1.0, 1.0).gamma
    cum = list(np.cumsum(gamma))
    ops = [[_sample_count(rng, cum) for _ in range(n_sat)] for _ in range(n_plane)]
    # Each plane and parking orbit starts at a uniform point of its reorder cycle (the
    # stationary inventory-position law) so cycles are not synchronised at t = 0.
    stock = [deque(_sample_count(rng, cum) for _ in range(rng.randint(s + 1, s + q))) for _ in range(n_plane)]
    backlog = [0] * n_plane
    outstanding = [False] * n_plane
    park_stock = [rng.randint(k_s + 1, k_s + k_q) for _ in range(n_park)]
    park_order: list[Optional[list]] = [None] * n_park  # [first-choice misses] per open launch order
    pending: deque = deque()  # planes whose order waits for any parking orbit to be restocked

    total_plane, total_park, waiting, total_backlog = sum(map(len, stock)), sum(park_stock), 0, 0
    avg_plane = _TimeAverage(warmup, horizon, total_plane)
    avg_park = _TimeAverage(warmup, horizon, total_park)
    avg_wait = _TimeAverage(warmup, horizon, 0)
    avg_backlog = _TimeAverage(warmup, horizon, 0)

    # window tallies
    w_failures = w_services = w_plane_orders = w_launches = 0
    w_service_time = 0.0
    w_leadtime = 0.0
    plane_short = plane_arrivals = 0
    park_short = park_arrivals = 0
    # lifetime counters
    failures = services = plane_orders = launches = all_empty = max_count = 0
    initial_spares = total_plane + total_park * q
    launched_sats = returned = deployed = in_transit = 0

    heap: list = []
    seq = 0

    def push(day, kind, payload):
        nonlocal seq
        heapq.heappush(heap, (day, kind, seq, payload))
        seq += 1

    def dispatch(p, day, k, t_now):
        nonlocal total_park, in_transit, w_leadtime
        theta = park_phase[k] + omega_day * t_now
        wait = ((plane_phase[p] - theta) * drift_sign) % two_pi / abs_omega
        lead = wait + t_trans_days
        park_stock[k] -= 1
        total_park -= 1
        avg_park.set(day, total_park)
        in_transit += 1
        if day >= warmup:
            w_leadtime += lead
        push(day + max(1, int(round(lead))), _PLANE_ARRIVAL, p)
        maybe_launch(k, day)

    def place_plane_order(p, day):
        nonlocal plane_orders, w_plane_orders, all_empty
        outstanding[p] = True
        plane_orders += 1
        if day >= warmup:
            w_plane_orders += 1
        # parking orbits in the order their nodes will align with this plane's node
        drift = omega_day * day
        waits = sorted(range(n_park),
                       key=lambda k: ((plane_phase[p] - park_phase[k] - drift) * drift_sign) % two_pi)
        first = waits[0]
        if park_stock[first] == 0 and park_order[first] is not None:
            park_order[first][0] += 1
        for k in waits:
            if park_stock[k] > 0:
                dispatch(p, day, k, day)
                return
        all_empty += 1
        pending.append(p)

    def maybe_launch(k, day):
        nonlocal launches, w_launches
        if park_stock[k] <= k_s and park_order[k] is None:
            park_order[k] = [0]
            launches += 1
            if day >= warmup:
                w_launches += 1
            delay = launch_shift + rng.expovariate(1.0 / launch_mean_delay)
            push(day + max(1, int(round(delay))), _LAUNCH_ARRIVAL, k)

    def maybe_order(p, day):
        if not outstanding[p] and len(stock[p]) <= s:
            place_plane_order(p, day)

    def check(day):
        for p in range(n_plane):
            assert len(ops[p]) + backlog[p] == n_sat
            assert backlog[p] == 0 or not stock[p]
        assert sum(outstanding) == in_transit + len(pending)
        assert all(v >= 0 for v in park_stock)
        lhs = initial_spares + launched_sats + returned
        rhs = deployed + total_plane + total_park * q + in_transit * q
        assert lhs == rhs, (day, lhs, rhs)
        assert max_count <= n_oos

    next_failure = rng.expovariate(fail_rate) if fail_rate > 0 else math.inf
    if next_failure < horizon:
        push(int(next_failure), _FAILURE, None)

    while heap:
        day, kind, _, payload = heapq.heappop(heap)
        if day >= horizon:
            break
        in_window = day >= warmup
        if kind == _FAILURE:
            next_failure += rng.expovariate(fail_rate)
            if next_failure < horizon:
                push(int(next_failure), _FAILURE, None)
            p = rng.randrange(n_plane)
            slot = rng.randrange(n_sat)
            sats = ops[p]
            if slot < len(sats):
                failures += 1
                if in_window:
                    w_failures += 1
                m = sats[slot]
                if m < n_oos and rng.random() < r_oos:
                    waiting += 1
                    avg_wait.set(day, waiting)
                    duration = rng.expovariate(1.0 / mttr_days)
                    push(day + max(1, int(round(duration))), _SERVICE_DONE, (p, m + 1, duration))
                if stock[p]:
                    sats[slot] = stock[p].popleft()
                    deployed += 1
                    total_plane -= 1
                    avg_plane.set(day, total_plane)
                else:
                    sats[slot] = sats[-1]
                    sats.pop()
                    backlog[p] += 1
                    total_backlog += 1
                    avg_backlog.set(day, total_backlog)
                maybe_order(p, day)
        elif kind == _SERVICE_DONE:
            p, count, duration = payload
            waiting -= 1
            avg_wait.set(day, waiting)
            services += 1
            returned += 1
            max_count = max(max_count, count)
            if in_window:
                w_services += 1
                w_service_time += duration
            if backlog[p]:
                ops[p].append(count)
                deployed += 1
                backlog[p] -= 1
                total_backlog -= 1
                avg_backlog.set(day, total_backlog)
            else:
                stock[p].append(count)
                total_plane += 1
                avg_plane.set(day, total_plane)
        elif kind == _PLANE_ARRIVAL:
            p = payload
            if in_window:
                plane_short += backlog[p]
                plane_arrivals += 1
            in_transit -= 1
            fill = min(backlog[p], q)
            ops[p].extend([0] * fill)
            deployed += fill
            backlog[p] -= fill
            total_backlog -= fill
            avg_backlog.set(day, total_backlog)
            stock[p].extend([0] * (q - fill))
            total_plane += q - fill
            avg_plane.set(day, total_plane)
            outstanding[p] = False
            maybe_order(p, day)
        else:  # _LAUNCH_ARRIVAL
            k = payload
            if in_window:
                park_short += park_order[k][0]
                park_arrivals += 1
            park_order[k] = None
            park_stock[k] += k_q
            total_park += k_q
            launched_sats += k_q * q
            avg_park.set(day, total_park)
            while pending and park_stock[k] > 0:
                dispatch(pending.popleft(), day, k, day)
            maybe_launch(k, day)
        if sim.check_invariants:
            check(day)
    check(horizon)

    # --- estimates in model units ---------------------------------------------
    s_plane = avg_plane.mean() / n_plane
    s_park = avg_park.mean() / n_park
    s_wait = avg_wait.mean() / n_plane
    f_plane = w_plane_orders / (n_plane * window_years)
    f_park = w_launches / (n_park * window_years)
    f_oos = w_services / (n_plane * window_years)
    beta_plane = 1.0 - plane_short / (q * plane_arrivals) if plane_arrivals else math.nan
    beta_park = 1.0 - park_short / (k_q * park_arrivals) if park_arrivals else math.nan

    window_units = (horizon - warmup) / unit_days
    lives = n_oos + 1
    lam_park = w_plane_orders / (n_park * window_units)  # batches drawn per orbit per time unit
    lam_plane = w_failures / (n_plane * window_units)
    op_sat_years = (n_plane * n_sat - avg_backlog.mean()) * window_years
    lam_sat = w_failures / op_sat_years if op_sat_years > 0 else 0.0
    mean_lead = w_leadtime / w_plane_orders / unit_days if w_plane_orders else transfer.t_trans
    mean_service = w_service_time / w_services / unit_days if w_services else x.mttr
    if lam_park > 0 and lam_plane > 0 and lam_sat > 0:
        t_d = (s_park / lam_park + mean_lead + s_plane * lives / lam_plane
               + lives * cfg.n_t / lam_sat + n_oos * mean_service)
    else:
        t_d = math.nan

    c = scenario.costs
    amc = (c.c_lau * f_park * n_park
           + transfer.fuel_mass * c.eps_fuel * f_plane * n_plane * q
           + c.c_manufac * f_park * n_park * k_q * q
           + c.c_hold * (s_park * q * n_park + s_plane * n_plane + s_wait * n_plane)
           + x.p_oos * f_oos * n_plane)

    return ReplicationRecord(
        seed=seed, s_plane=s_plane, s_parking=s_park, s_wait=s_wait, f_plane=f_plane,
        f_parking=f_park, f_oos=f_oos, beta_plane=beta_plane, beta_parking=beta_park, t_d=t_d, amc=amc,
        failures=failures, services=services, plane_orders=plane_orders, launches=launches,
        all_parking_empty=all_empty, max_service_count=max_count, mean_plane_leadtime=mean_lead,
    )


def _run_one(args):
    return run_replication(*args)


def aggregate(records) -> SimulationEstimate:
    """Mean and standard error per metric; deterministic in the record order."""
    records = tuple(records)
    mean, stderr = {}, {}
    for m in METRICS:
        vals = np.array([getattr(r, m) for r in records], dtype=float)
        vals = vals[np.isfinite(vals)]
        mean[m] = float(vals.mean()) if vals.size else math.nan
        stderr[m] = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else None
    return SimulationEstimate(mean=mean, stderr=stderr, replications=len(records), records=records)


def estimate(scenario: Scenario, x: DecisionVector, sim: SimConfig, jobs: int = 1) -> SimulationEstimate:
    """Run ``sim.replications`` independent replications, optionally on ``jobs`` processes.

    Seeds are fixed per replication index, so results do not depend on ``jobs``.
    """
    seeds = replication_seeds(sim.rng_seed, sim.replications)
    tasks = [(scenario, x, sim, seed) for seed in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        records = [_run_one(t) for t in tasks]
    return aggregate(records)


# --- model-vs-simulation comparison -------------------------------------------------

def analytic_metrics(ev: SystemEvaluation) -> dict:
    r = ev.result
    return {
        "s_plane": r.plane.mean_stock, "s_parking": r.parking.mean_stock, "s_wait": r.s_wait,
        "f_plane": r.plane.order_frequency, "f_parking": r.parking.order_frequency,
        "f_oos": r.service_frequency, "beta_plane": r.plane.fill_rate, "beta_parking": r.parking.fill_rate,
        "t_d": ev.disposal.t_d if ev.disposal is not None else math.nan, "amc": ev.amc,
    }


@dataclass(frozen=True)
class MetricError:
    metric: str
    kind: str  # "relative" (%) or "absolute" (%p)
    model: float
    sim: float
    error: Optional[float]  # None when undefined (simulated mean of 0 for a relative metric)


def validation_errors(analytic, sim) -> dict:
    """Relative errors (%) for value metrics and absolute errors (%p) for fill rates."""
    model = analytic_metrics(analytic) if isinstance(analytic, SystemEvaluation) else dict(analytic)
    simulated = sim.mean if isinstance(sim, SimulationEstimate) else dict(sim)
    out = {}
    for m in RELATIVE_METRICS:
        a, b = model[m], simulated[m]
        err = abs(b - a) / abs(b) * 100.0 if b != 0 and math.isfinite(b) else None
        out[m] = MetricError(m, "relative", a, b, err)
    for m in ABSOLUTE_METRICS:
        a, b = model[m], simulated[m]
        out[m] = MetricError(m, "absolute", a, b, abs(b - a) * 100.0 if math.isfinite(b) else None)
    return out


# --- validation-instance sampling ---------------------------------------------------

@dataclass(frozen=True)
class ValidationInstance:
    index: int
    params: dict  # the sampled trade-space values
    scenario: Scenario
    decision: DecisionVector
    evaluation: SystemEvaluation


@dataclass(frozen=True)
class SamplingResult:
    instances: list
    attempts: int

    @property
    def rejections(self) -> int:
        return self.attempts - len(self.instances)


VALIDATION_CONDITIONS = ("beta_plane", "beta_parking", "lifespan", "s_le_q", "ks_le_kq")


def build_validation_instance(params: Mapping, fixed: Mapping) -> tuple[Scenario, DecisionVector]:
    """Assemble a scenario and decision from sampled trade-space values and fixed parameters."""
    from .economics import CostParams, Requirements
    from .orbital import OrbitGeometry, PropulsionSpec

    capacity = int(fixed.get("launch_capacity_sats", 1600))
    cfg = ConstellationConfig(
        n_plane=int(params["n_plane"]), n_sat=int(params["n_sat"]),
        plane_orbit=OrbitGeometry(params["plane_altitude_km"], params["inclination_deg"]),
        sat_failure_rate=params["failure_rate_per_year"], lifespan=fixed["lifespan_years"],
    )
    scenario = Scenario(
        name="validation",
        constellation=cfg,
        propulsion=PropulsionSpec(fixed["dry_mass_kg"], fixed["specific_impulse_s"],
                                  fixed["mass_flow_rate_kg_per_s"]),
        launch=LaunchService(t_lau=params["processing_time_weeks"], psi_lau=1.0 / params["mean_delay_weeks"],
                             cost=fixed["launch_cost_musd"], capacity=capacity),
        r_oos=params["r_oos"],
        costs=CostParams(c_lau=fixed["launch_cost_musd"], c_manufac=fixed["manufacturing_musd_per_sat"],
                         c_hold=fixed["holding_musd_per_sat_year"], eps_fuel=fixed["fuel_musd_per_kg"],
                         p_oos=fixed["price_musd"], q_max=capacity),
        requirements=Requirements(fixed.get("beta_plane", 0.98), fixed.get("beta_parking", 0.98)),
    )
    x = DecisionVector(int(params["s"]), int(params["q"]), int(params["k_s"]), int(params["k_q"]),
                       int(params["n_oos"]), int(params["n_parking"]), params["parking_altitude_km"],
                       fixed["price_musd"], params["mttr_weeks"])
    return scenario, x


def _draw(rng: np.random.Generator, trade_space: Mapping) -> dict:
    out = {}
    for name, spec in trade_space.items():
        lo, hi = spec
        if isinstance(lo, int) and isinstance(hi, int):
            out[name] = int(rng.integers(lo, hi + 1))
        else:
            out[name] = float(rng.uniform(lo, hi))
    return out


def sample_validation_instances(count: int, trade_space: Mapping, fixed: Mapping, seed: int = 0,
                                max_attempts: int = 100_000) -> SamplingResult:
    """Rejection-sample ``count`` instances satisfying the five validation conditions."""
    rng = np.random.default_rng(seed)
    instances, attempts = [], 0
    while len(instances) < count:
        if attempts >= max_attempts:
            raise SamplingExhausted(
                f"only {len(instances)} of {count} feasible instances after {attempts} attempts",
                attempts=attempts, accepted=len(instances))
        attempts += 1
        params = _draw(rng, trade_space)
        if params["s"] > params["q"] or params["k_s"] > params["k_q"]:
            continue
        if params["parking_altitude_km"] >= params["plane_altitude_km"]:
            continue
        try:
            scenario, x = build_validation_instance(params, fixed)
            ev = evaluate_decision(scenario, x, amc_cap=False)
        except (AltitudeOrderError, ValueError, ArithmeticError):
            continue
        if all(ev.feasibility[name].passed for name in VALIDATION_CONDITIONS):
            instances.append(ValidationInstance(len(instances), params, scenario, x, ev))
    return SamplingResult(instances, attempts)
