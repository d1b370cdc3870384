"""Steady-state (s, Q) inventory model for in-plane and parking spares with OOS recovery.

Time is measured in model time units (weeks by default, ``n_t`` = 52 per year).
The in-plane echelon sees Skellam-distributed net stock drops (failures minus
satellites returned by servicing) over a piecewise-uniform lead time set by
RAAN alignment; the parking echelon sees Poisson batch demand over a shifted
exponential launch lead time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import special

from . import orbital
from .orbital import EARTH, OrbitGeometry, PhysicalConstants, PropulsionSpec, TransferPlan
from .quadrature import integrate_pieces

QUAD_TOL = 1e-8
TAIL_MASS = 1e-12
SHORTAGE_REL_CUTOFF = 1e-14
SHORTAGE_MAX_TERMS = 200


@dataclass(frozen=True)
class ConstellationConfig:
    n_plane: int
    n_sat: int
    plane_orbit: OrbitGeometry
    sat_failure_rate: float  # failures per satellite-year
    n_t: int = 52
    lifespan: float = 30.0  # years

    def __post_init__(self):
        if self.n_plane < 1 or self.n_sat < 1:
            raise ValueError("n_plane and n_sat must be >= 1")
        if self.sat_failure_rate < 0:
            raise ValueError("sat_failure_rate must be non-negative")
        if self.n_t < 1:
            raise ValueError("n_t must be >= 1")
        if not self.lifespan > 0:
            raise ValueError("lifespan must be positive")


@dataclass(frozen=True)
class ReplenishmentPolicy:
    """Operator-side inventory and parking-orbit decisions.

    ``s <= q`` and ``k_s <= k_q`` are feasibility conditions checked by
    :func:`constel_maint.economics.feasibility_check`, not construction errors,
    so that violating candidates can still be evaluated and ranked.
    """
    s: int
    q: int
    k_s: int
    k_q: int
    n_oos: int
    n_parking: int
    parking_orbit: OrbitGeometry

    def __post_init__(self):
        for name in ("s", "q", "k_s", "k_q", "n_parking"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_oos < 0:
            raise ValueError("n_oos must be >= 0")


@dataclass(frozen=True)
class OOSTerms:
    r_oos: float
    mu_oos: float  # per time unit, 1 / MTTR
    p_oos: float = 0.0  # $M per service

    def __post_init__(self):
        if not 0 <= self.r_oos <= 1:
            raise ValueError("r_oos must lie in [0, 1]")
        if not self.mu_oos > 0:
            raise ValueError("mu_oos must be positive")
        if self.p_oos < 0:
            raise ValueError("p_oos must be non-negative")

    @property
    def mttr(self) -> float:
        return 1.0 / self.mu_oos


@dataclass(frozen=True)
class LaunchService:
    t_lau: float  # fixed processing time, time units
    psi_lau: float  # rate of the exponential launch delay, per time unit
    cost: float = 0.0  # $M per launch
    capacity: int = 40  # satellites per launch

    def __post_init__(self):
        if self.t_lau < 0 or not self.psi_lau > 0 or self.cost < 0 or self.capacity < 1:
            raise ValueError("invalid launch service parameters")


@dataclass(frozen=True)
class GammaProfile:
    gamma: tuple  # gamma_0 .. gamma_{n_oos}
    s_wait: tuple  # mean waiting stock per service count m = 1 .. n_oos
    s_wait_total: float

    @property
    def gamma0(self) -> float:
        return self.gamma[0]


@dataclass(frozen=True)
class EchelonMetrics:
    mean_stock: float
    order_frequency: float  # per year
    expected_shortage: float
    fill_rate: float


@dataclass(frozen=True)
class PiecewiseLeadTime:
    """Piecewise-constant lead-time density: mass ``probs[j]`` spread uniformly over [lo_j, hi_j)."""
    lo: np.ndarray
    hi: np.ndarray
    probs: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.probs / (self.hi - self.lo)

    def pdf(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for lo, hi, d in zip(self.lo, self.hi, self.density):
            out = np.where((tau >= lo) & (tau < hi), d, out)
        return out

    def mean(self) -> float:
        return float(np.dot(self.probs, 0.5 * (self.lo + self.hi)))

    def expect(self, f, tol=QUAD_TOL) -> float:
        """E[f(tau)] for a vectorised ``f``."""
        pieces = integrate_pieces(f, self.lo, self.hi, tol=tol)
        return float(np.dot(self.density, pieces))

    def total_mass(self, tol=QUAD_TOL) -> float:
        return self.expect(np.ones_like, tol=tol)


@dataclass(frozen=True)
class ShiftedExponentialLeadTime:
    """Density psi * exp(-psi (tau - shift)) on [shift, inf)."""
    shift: float
    rate: float

    def pdf(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau >= self.shift, self.rate * np.exp(-self.rate * (tau - self.shift)), 0.0)

    def mean(self) -> float:
        return self.shift + 1.0 / self.rate

    @cached_property
    def _edges(self):
        # Geometric-ish split in units of the mean delay, cut where the tail mass drops below TAIL_MASS.
        u = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, -math.log(TAIL_MASS)])
        return self.shift + u / self.rate

    def expect(self, f, tol=QUAD_TOL) -> float:
        e = self._edges
        pieces = integrate_pieces(lambda t: f(t) * self.pdf(t), e[:-1], e[1:], tol=tol / (len(e) - 1))
        return float(pieces.sum())

    def total_mass(self, tol=QUAD_TOL) -> float:
        return self.expect(np.ones_like, tol=tol)


@dataclass(frozen=True)
class EvaluationResult:
    """Every steady-state quantity the cost, lifetime and validation code needs."""
    n_t: int
    n_plane: int
    n_parking: int
    n_oos: int
    q: int
    k_q: int
    lambda_sat: float
    lambda_plane: float
    lambda_parking: float
    mu_oos: float
    gamma: GammaProfile
    plane: EchelonMetrics
    parking: EchelonMetrics
    service_frequency: float  # f_oos, services per plane per year
    transfer: TransferPlan
    plane_leadtime: PiecewiseLeadTime = field(repr=False)
    parking_leadtime: ShiftedExponentialLeadTime = field(repr=False)
    mean_plane_leadtime: float
    negative_stock: bool = False

    @property
    def gamma0(self) -> float:
        return self.gamma.gamma0

    @property
    def s_wait(self) -> float:
        return self.gamma.s_wait_total


def plane_failure_rate(cfg: ConstellationConfig) -> float:
    """Failures per plane per time unit."""
    return cfg.sat_failure_rate * cfg.n_sat / cfg.n_t


def solve_gamma(r_oos: float, n_oos: int, lambda_plane: float, mu_oos: float) -> GammaProfile:
    """Steady-state provenance fractions of in-plane spare inflow and waiting stocks."""
    if not 0 <= r_oos <= 1:
        raise ValueError("r_oos must lie in [0, 1]")
    if n_oos < 0:
        raise ValueError("n_oos must be >= 0")
    if r_oos == 1:
        g0 = 1.0 / (n_oos + 1)
    else:
        g0 = (1 - r_oos) / (1 - r_oos ** (n_oos + 1))
    gamma = [g0]
    for _ in range(n_oos):
        gamma.append(r_oos * gamma[-1])
    s_wait = tuple(lambda_plane * gamma[m - 1] * r_oos / mu_oos for m in range(1, n_oos + 1))
    return GammaProfile(gamma=tuple(gamma), s_wait=s_wait, s_wait_total=float(sum(s_wait)))


def poisson_pmf(k, mean):
    k = np.asarray(k)
    mean = np.asarray(mean, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = k * np.log(mean) - mean - special.gammaln(k + 1)
    return np.where(mean > 0, np.exp(logp), (k == 0).astype(float))


def skellam_pmf(delta, tau, lambda_plane, gamma0):
    """P(net in-plane stock drop over ``tau`` equals ``delta``).

    Demand ~ Poisson(lambda*tau) minus recoveries ~ Poisson(lambda*tau*(1-gamma0)).
    ``delta`` may be negative. ``gamma0 == 1`` reduces to the Poisson demand law.
    """
    delta = np.asarray(delta)
    a = lambda_plane * np.asarray(tau, dtype=float)
    b = a * (1.0 - gamma0)
    if not 0 < gamma0 <= 1:
        raise ValueError("gamma0 must lie in (0, 1]")
    if gamma0 == 1 or np.all(b == 0):
        return np.where(delta >= 0, poisson_pmf(np.maximum(delta, 0), a), 0.0)
    x = 2.0 * np.sqrt(a * b)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        n = np.abs(delta)
        iv = special.ive(n, x)
        # ive underflows for large orders when gamma0 -> 1 (x -> 0); there the
        # leading series term n*log(x/2) - log(n!) is exact to O(x^2/n).
        log_iv = np.where(iv > 1e-280, np.log(iv), n * np.log(x / 2.0) - special.gammaln(n + 1) - x)
        logp = -(a + b) + x + 0.5 * delta * math.log(1.0 / (1.0 - gamma0)) + log_iv
        p = np.exp(logp)
    return np.where(np.isfinite(p), p, 0.0)


def poisson_expected_shortage(k: int, mean):
    """E[(N - k)^+] for N ~ Poisson(mean), via the finite lower sum."""
    mean = np.asarray(mean, dtype=float)
    n = np.arange(k)
    lower = ((k - n) * poisson_pmf(n, mean[..., None])).sum(axis=-1)
    return np.maximum(mean - k + lower, 0.0)


def skellam_expected_shortage(s: int, tau, lambda_plane: float, gamma0: float):
    """E[(D - s)^+] with D the Skellam net drop over each lead time in ``tau``.

    Sums the upper tail delta >= s, stopping once the newest term is below
    1e-14 of the running sum (hard cap s + 200).
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if gamma0 >= 1:
        return poisson_expected_shortage(s, lambda_plane * tau)
    a = lambda_plane * tau
    total = np.zeros_like(tau)
    start = s
    chunk = max(24, int(math.ceil(float(a.max(initial=0.0)) + 8 * math.sqrt(float(a.max(initial=0.0)) + 1))))
    while start <= s + SHORTAGE_MAX_TERMS:
        stop = min(start + chunk, s + SHORTAGE_MAX_TERMS + 1)
        delta = np.arange(start, stop)
        terms = (delta - s)[None, :] * skellam_pmf(delta[None, :], tau[:, None], lambda_plane, gamma0)
        total += terms.sum(axis=1)
        last = terms[:, -1]
        if np.all((last <= SHORTAGE_REL_CUTOFF * total) | (total == 0)):
            break
        start = stop
    return total


def inplane_leadtime_pdf(policy: ReplenishmentPolicy, omega_rel: float, t_trans: float,
                         beta_parking: float) -> PiecewiseLeadTime:
    """Lead-time law of an in-plane order served by the closest stocked parking orbit."""
    if not 0 < beta_parking <= 1:
        raise ValueError(f"beta_parking must lie in (0, 1], got {beta_parking}")
    windows = orbital.alignment_intervals(policy.n_parking, omega_rel, t_trans)
    j = np.arange(policy.n_parking)
    p_av = (1.0 - beta_parking) ** j * beta_parking
    lo, hi = (np.array(v) for v in zip(*windows))
    return PiecewiseLeadTime(lo=lo, hi=hi, probs=p_av / p_av.sum())


def inplane_metrics(cfg: ConstellationConfig, policy: ReplenishmentPolicy, oos: OOSTerms,
                    gamma: GammaProfile, leadtime: PiecewiseLeadTime) -> tuple[EchelonMetrics, float]:
    """In-plane echelon metrics plus the per-plane annual service frequency f_oos."""
    lam = plane_failure_rate(cfg)
    g0 = gamma.gamma0
    s, q = policy.s, policy.q
    mean_stock = s + q / 2 + 0.5 - lam * g0 * leadtime.mean()
    if lam == 0:
        shortage = 0.0
    else:
        shortage = leadtime.expect(lambda t: skellam_expected_shortage(s, t, lam, g0))
    metrics = EchelonMetrics(
        mean_stock=mean_stock,
        order_frequency=lam * g0 * cfg.n_t / q,
        expected_shortage=shortage,
        fill_rate=1.0 - shortage / q,
    )
    return metrics, gamma.s_wait_total * oos.mu_oos * cfg.n_t


def parking_demand_rate(cfg: ConstellationConfig, policy: ReplenishmentPolicy, gamma0: float) -> float:
    """Batches requested from each parking orbit per time unit."""
    return plane_failure_rate(cfg) * gamma0 * cfg.n_plane / (policy.q * policy.n_parking)


def parking_metrics(launch: LaunchService, policy: ReplenishmentPolicy, lambda_parking: float,
                    n_t: int = 52) -> EchelonMetrics:
    lead = ShiftedExponentialLeadTime(launch.t_lau, launch.psi_lau)
    k_s, k_q = policy.k_s, policy.k_q
    mean_stock = k_s - lambda_parking * lead.mean() + k_q / 2 + 0.5
    if lambda_parking == 0:
        shortage = 0.0
    else:
        shortage = lead.expect(lambda t: poisson_expected_shortage(k_s, lambda_parking * t))
    return EchelonMetrics(
        mean_stock=mean_stock,
        order_frequency=lambda_parking * n_t / k_q,
        expected_shortage=shortage,
        fill_rate=1.0 - shortage / k_q,
    )


@lru_cache(maxsize=1 << 15)
def _echelons(cfg, policy, r_oos, launch, prop, constants):
    lam = plane_failure_rate(cfg)
    gamma = solve_gamma(r_oos, policy.n_oos, lam, 1.0)
    lam_park = parking_demand_rate(cfg, policy, gamma.gamma0)
    park = parking_metrics(launch, policy, lam_park, cfg.n_t)
    transfer = orbital.plan_transfer(policy.parking_orbit, cfg.plane_orbit, prop,
                                     time_unit=orbital.SECONDS_PER_WEEK * 52 / cfg.n_t,
                                     constants=constants)
    # A fill rate outside (0, 1] only arises for grossly infeasible policies; keep the
    # lead-time law defined so such candidates can still be ranked.
    beta_for_pdf = min(max(park.fill_rate, 1e-9), 1.0)
    lead = inplane_leadtime_pdf(policy, transfer.omega_rel, transfer.t_trans, beta_for_pdf)
    plane, _ = inplane_metrics(cfg, policy, OOSTerms(r_oos, 1.0), gamma, lead)
    return lam_park, park, transfer, lead, plane


def evaluate_steady_state(cfg: ConstellationConfig, policy: ReplenishmentPolicy, oos: OOSTerms,
                          launch: LaunchService, prop: PropulsionSpec,
                          constants: PhysicalConstants = EARTH) -> EvaluationResult:
    """Full analytic evaluation of one constellation/policy/OOS combination.

    The parking echelon is solved first: its demand depends only on gamma_0 and Q,
    and its fill rate is an input to the in-plane lead-time law. Everything except
    the waiting stock and service frequency is independent of the OOS
    responsiveness and price, and is memoised on that basis.
    """
    lam = plane_failure_rate(cfg)
    gamma = solve_gamma(oos.r_oos, policy.n_oos, lam, oos.mu_oos)
    lam_park, park, transfer, lead, plane = _echelons(cfg, policy, oos.r_oos, launch, prop, constants)
    return EvaluationResult(
        n_t=cfg.n_t,
        n_plane=cfg.n_plane,
        n_parking=policy.n_parking,
        n_oos=policy.n_oos,
        q=policy.q,
        k_q=policy.k_q,
        lambda_sat=cfg.sat_failure_rate,
        lambda_plane=lam,
        lambda_parking=lam_park,
        mu_oos=oos.mu_oos,
        gamma=gamma,
        plane=plane,
        parking=park,
        service_frequency=gamma.s_wait_total * oos.mu_oos * cfg.n_t,
        transfer=transfer,
        plane_leadtime=lead,
        parking_leadtime=ShiftedExponentialLeadTime(launch.t_lau, launch.psi_lau),
        mean_plane_leadtime=lead.mean(),
        negative_stock=plane.mean_stock < 0 or park.mean_stock < 0,
    )
