"""Constrained domination, non-dominated sorting, crowding distance and 2-D hypervolume.

Objective points are (AMC, AP): AMC is minimised and AP maximised. Internally
everything is converted to a minimisation matrix ``F`` with a total-violation
vector ``cv`` (0 for feasible points).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_REFERENCE = (925.1, 0.0)


@dataclass(frozen=True)
class ObjectivePoint:
    amc: float  # $M/year, minimised
    ap: float  # $M/year, maximised
    violations: tuple = ()  # normalised, each >= 0

    @property
    def total_violation(self) -> float:
        return float(sum(self.violations))

    @property
    def feasible(self) -> bool:
        return all(v == 0 for v in self.violations)

    def minimisation(self) -> tuple[float, float]:
        return self.amc, -self.ap


def dominates(a: ObjectivePoint, b: ObjectivePoint) -> bool:
    """Feasibility-first constrained domination."""
    fa, fb = a.feasible, b.feasible
    if fa and not fb:
        return True
    if fb and not fa:
        return False
    if not fa:
        return a.total_violation < b.total_violation
    return a.amc <= b.amc and a.ap >= b.ap and (a.amc < b.amc or a.ap > b.ap)


def _as_arrays(points, violations=None):
    if len(points) and isinstance(points[0], ObjectivePoint):
        F = np.array([p.minimisation() for p in points], dtype=float)
        cv = np.array([p.total_violation for p in points], dtype=float)
    else:
        F = np.asarray(points, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        cv = np.zeros(len(F)) if violations is None else np.asarray(violations, dtype=float)
    return F, cv


def domination_matrix(F: np.ndarray, cv: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when point i constrained-dominates point j (minimisation)."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    feas = cv == 0
    both = feas[:, None] & feas[None, :]
    D = both & le & lt
    D |= feas[:, None] & ~feas[None, :]
    neither = ~feas[:, None] & ~feas[None, :]
    D |= neither & (cv[:, None] < cv[None, :])
    return D


def fast_non_dominated_sort(points, violations=None) -> list[list[int]]:
    """Rank points into successive fronts (lists of indices, best front first).

    ``points`` is a sequence of :class:`ObjectivePoint` or an (n, m) array of
    objectives to minimise, with optional per-point total violations.
    """
    F, cv = _as_arrays(points, violations)
    n = len(F)
    if n == 0:
        return []
    D = domination_matrix(F, cv)
    dominated_by = D.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (dominated_by == 0))
        fronts.append(front.tolist())
        remaining[front] = False
        dominated_by = dominated_by - D[front].sum(axis=0)
    return fronts


def non_dominated_brute_force(points, violations=None) -> list[int]:
    """Indices of points no other point dominates, by explicit pairwise checks."""
    F, cv = _as_arrays(points, violations)
    out = []
    for j in range(len(F)):
        dominated = False
        for i in range(len(F)):
            if i == j:
                continue
            if cv[i] == 0 and cv[j] == 0:
                dom = bool(np.all(F[i] <= F[j]) and np.any(F[i] < F[j]))
            elif cv[i] == 0:
                dom = True
            elif cv[j] == 0:
                dom = False
            else:
                dom = cv[i] < cv[j]
            if dom:
                dominated = True
                break
        if not dominated:
            out.append(j)
    return out


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """Crowding distance of each row of ``F`` within one front; boundary points get inf."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            dist[order[1:-1]] += (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
    return dist


def hypervolume(front, reference_point=DEFAULT_REFERENCE) -> float:
    """Area dominated by (AMC, AP) points and bounded by the reference point.

    Points are objective pairs or :class:`ObjectivePoint`; points that do not
    improve on the reference in both objectives contribute nothing.
    """
    ref_amc, ref_ap = reference_point
    pts = [(p.amc, p.ap) if isinstance(p, ObjectivePoint) else (float(p[0]), float(p[1])) for p in front]
    pts = sorted((a, b) for a, b in pts if a < ref_amc and b > ref_ap)
    area, best_ap = 0.0, ref_ap
    for i, (amc, ap) in enumerate(pts):
        best_ap = max(best_ap, ap)
        right = pts[i + 1][0] if i + 1 < len(pts) else ref_amc
        area += (right - amc) * (best_ap - ref_ap)
    return area
