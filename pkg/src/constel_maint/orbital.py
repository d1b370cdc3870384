"""Astrodynamics helpers for the parking-to-plane supply channel.

J2 nodal precession, low-thrust orbit raising (Edelbaum-style circle-to-circle
delta-v with the rocket equation) and the RAAN alignment windows that define
when a parking orbit can feed an operational plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import AltitudeOrderError, ZeroDriftError

SECONDS_PER_DAY = 86400.0
SECONDS_PER_WEEK = 7 * SECONDS_PER_DAY


@dataclass(frozen=True)
class PhysicalConstants:
    mu_earth: float = 398600.4418  # km^3/s^2
    earth_radius: float = 6378.137  # km
    j2: float = 1.08262668e-3
    g0: float = 9.80665  # m/s^2


EARTH = PhysicalConstants()


@dataclass(frozen=True)
class OrbitGeometry:
    altitude: float  # km
    inclination: float  # deg
    eccentricity: float = 0.0

    def __post_init__(self):
        if not self.altitude > 0:
            raise ValueError(f"altitude must be positive, got {self.altitude}")
        if not 0 <= self.eccentricity < 1:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.eccentricity}")
        if not 0 <= self.inclination <= 180:
            raise ValueError(f"inclination must be in [0, 180] deg, got {self.inclination}")

    def semi_major_axis(self, constants: PhysicalConstants = EARTH) -> float:
        return constants.earth_radius + self.altitude


@dataclass(frozen=True)
class PropulsionSpec:
    dry_mass: float  # kg
    specific_impulse: float  # s
    mass_flow_rate: float  # kg/s
    g0: float = field(default=EARTH.g0, repr=False)

    def __post_init__(self):
        for name in ("dry_mass", "specific_impulse", "mass_flow_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def exhaust_velocity(self) -> float:
        """Effective exhaust velocity in km/s."""
        return self.specific_impulse * self.g0 / 1000.0


def raan_drift_rate(orbit: OrbitGeometry, constants: PhysicalConstants = EARTH) -> float:
    """Secular J2 regression of the ascending node, rad/s."""
    a = orbit.semi_major_axis(constants)
    e2 = orbit.eccentricity ** 2
    n = math.sqrt(constants.mu_earth / a ** 3)
    cos_i = math.cos(math.radians(orbit.inclination))
    if orbit.inclination == 90.0:
        cos_i = 0.0
    return -1.5 * n * constants.earth_radius ** 2 / (a ** 2 * (1 - e2) ** 2) * constants.j2 * cos_i


def relative_raan_drift(parking: OrbitGeometry, plane: OrbitGeometry,
                        constants: PhysicalConstants = EARTH) -> float:
    """Drift of the parking node relative to the plane node, rad/s.

    Negative for prograde orbits because the lower orbit regresses faster.
    """
    if parking.altitude >= plane.altitude:
        raise AltitudeOrderError(
            f"parking altitude {parking.altitude} km must be below plane altitude {plane.altitude} km")
    return raan_drift_rate(parking, constants) - raan_drift_rate(plane, constants)


def transfer_delta_v(r_initial: float, r_final: float, constants: PhysicalConstants = EARTH) -> float:
    """Continuous-thrust coplanar raise between circular orbits of the given radii (km), km/s."""
    if not 0 < r_initial < r_final:
        raise AltitudeOrderError(f"need 0 < r_initial < r_final, got {r_initial}, {r_final}")
    mu = constants.mu_earth
    return math.sqrt(mu / r_initial) - math.sqrt(mu / r_final)


def transfer_fuel_and_time(dv: float, prop: PropulsionSpec) -> tuple[float, float]:
    """Propellant mass (kg) and burn duration (s) for a velocity increment ``dv`` in km/s."""
    if dv < 0:
        raise ValueError("dv must be non-negative")
    fuel = prop.dry_mass * math.expm1(dv / prop.exhaust_velocity)
    return fuel, fuel / prop.mass_flow_rate


def alignment_intervals(n_parking: int, omega_rel: float, t_trans: float) -> list[tuple[float, float]]:
    """Half-open arrival windows [lo, hi) for supply from the j-th closest parking orbit.

    Parking nodes are spaced 2*pi/n_parking apart, so the j-th one to align does so
    somewhere in the j-th slice of the synodic period; the transfer time shifts
    every window. Units follow ``omega_rel`` (rad per time unit) and ``t_trans``.
    """
    if n_parking < 1:
        raise ValueError("n_parking must be >= 1")
    if omega_rel == 0:
        raise ZeroDriftError("relative RAAN drift is zero")
    if t_trans < 0:
        raise ValueError("t_trans must be non-negative")
    width = 2 * math.pi / n_parking / abs(omega_rel)
    return [((j - 1) * width + t_trans, j * width + t_trans) for j in range(1, n_parking + 1)]


@dataclass(frozen=True)
class TransferPlan:
    """Everything the inventory model needs about the parking-to-plane leg.

    Rates and times are expressed in model time units (``time_unit`` seconds each).
    """
    omega_rel: float
    delta_v: float
    fuel_mass: float
    t_trans: float
    time_unit: float = SECONDS_PER_WEEK


def plan_transfer(parking: OrbitGeometry, plane: OrbitGeometry, prop: PropulsionSpec,
                  time_unit: float = SECONDS_PER_WEEK,
                  constants: PhysicalConstants = EARTH) -> TransferPlan:
    omega = relative_raan_drift(parking, plane, constants)
    dv = transfer_delta_v(parking.semi_major_axis(constants), plane.semi_major_axis(constants), constants)
    fuel, tof = transfer_fuel_and_time(dv, prop)
    return TransferPlan(omega_rel=omega * time_unit, delta_v=dv, fuel_mass=fuel,
                        t_trans=tof / time_unit, time_unit=time_unit)
