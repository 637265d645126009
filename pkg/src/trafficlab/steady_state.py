"""Steady-state speed-density relations of acceleration laws.

A steady state has every vehicle at the same speed and spacing, so it solves
``psi(v, 1/k, 0) = 0``. Laws whose acceleration vanishes identically at
zero speed difference (pure stimulus-response families) admit no unique
speed-density relation and are reported as degenerate.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .laws import AccelerationLaw

# |psi| <= DEGENERACY_RTOL * model acceleration scale across the whole
# bracket marks a degenerate (v-independent) equilibrium equation.
DEGENERACY_RTOL = 1e-12
RESIDUAL_RTOL = 1e-12
_SCAN_POINTS = 128


class EquilibriumStatus(enum.Enum):
    OK = "ok"
    DEGENERATE = "degenerate"
    NO_ROOT = "no_root"


@dataclass(frozen=True)
class EquilibriumResult:
    status: EquilibriumStatus
    speed: float = math.nan
    residual: float = math.nan
    multiplicity: int = 0


def _speed_bracket(law: AccelerationLaw) -> float:
    # Generous bracket: IDM-style laws change sign within [0, v_f].
    return 2.0 * law.v_free if law.v_free is not None else 100.0


def acceleration_scale(law: AccelerationLaw, s: float, v_max: float) -> float:
    """Typical |psi| near spacing ``s``, probed over speeds and speed gaps.

    Probing dv != 0 keeps the scale positive for stimulus-response laws whose
    dv = 0 slice vanishes identically; the floor of 1 makes the degeneracy
    threshold unit-independent for desk-scale models.
    """
    v = np.linspace(0.0, v_max, 9)
    scale = 1.0
    for dv in (-0.1 * v_max, 0.0, 0.1 * v_max):
        scale = max(scale, float(np.max(np.abs(law.evaluate(v, s, dv)))))
    return scale


def _bisect(g, lo: float, hi: float, g_lo: float) -> float:
    # Width-based termination: an |g| cutoff scaled by the global bracket
    # can be grossly loose for steep laws (e.g. large speed exponents).
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            return mid
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if (g_lo < 0) == (g_mid < 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_equilibrium_speed(law: AccelerationLaw, k: float,
                            v_max: float | None = None) -> EquilibriumResult:
    """Solve psi(v, 1/k, 0) = 0 for v by bracket scan, bisection, Newton polish.

    Returns DEGENERATE when psi is independent of v on the bracket (the whole
    slice is numerically zero), NO_ROOT when no sign change exists, and the
    smallest nonnegative root otherwise (with the count of sign changes as
    ``multiplicity``).
    """
    if k <= 0:
        raise DomainError("density must be > 0")
    s = 1.0 / k
    if v_max is None:
        v_max = _speed_bracket(law)

    scale = acceleration_scale(law, s, v_max)
    grid = np.linspace(0.0, v_max, _SCAN_POINTS)
    g_grid = np.asarray(law.evaluate(grid, s, 0.0), dtype=float)
    if np.max(np.abs(g_grid)) <= DEGENERACY_RTOL * scale:
        return EquilibriumResult(EquilibriumStatus.DEGENERATE)

    signs = np.sign(g_grid)
    crossings = [i for i in range(len(grid) - 1)
                 if signs[i] != signs[i + 1] and signs[i] != 0]
    exact_hits = np.flatnonzero(signs == 0)
    if not crossings and exact_hits.size == 0:
        return EquilibriumResult(EquilibriumStatus.NO_ROOT)

    # Residual target relative to the acceleration magnitude near standstill,
    # the scale the residual invariant is stated against.
    tol = RESIDUAL_RTOL * max(1.0, abs(float(law.evaluate(0.0, s, 0.0))))
    if exact_hits.size and (not crossings or exact_hits[0] <= crossings[0]):
        v_root = float(grid[exact_hits[0]])
    else:
        i = crossings[0]
        g = lambda v: float(law.evaluate(v, s, 0.0))
        v_root = _bisect(g, float(grid[i]), float(grid[i + 1]), float(g_grid[i]))
        # Newton polish with a finite-difference slope.
        for _ in range(4):
            g_v = g(v_root)
            if abs(g_v) <= 1e-3 * tol:
                break
            h = max(1e-7 * abs(v_root), 1e-9)
            slope = (g(v_root + h) - g(v_root - h)) / (2 * h)
            if slope == 0.0:
                break
            step = g_v / slope
            if not math.isfinite(step) or abs(step) > 0.5 * v_max:
                break
            v_root -= step
        v_root = max(v_root, 0.0)

    multiplicity = max(len(crossings), 1)
    residual = abs(float(law.evaluate(v_root, s, 0.0)))
    return EquilibriumResult(EquilibriumStatus.OK, speed=v_root,
                             residual=residual, multiplicity=multiplicity)


def idm_closed_form_density(v: float, v_f: float, tau: float, d: float,
                            delta: float) -> float:
    """Density at equilibrium speed ``v`` for the IDM family.

    k = (1/(d + tau v)) * (1 - (v/v_f)^delta)^(1/2); gives k = 0 at v = v_f
    and k = 1/d at v = 0. As delta grows it approaches the two-branch form
    v = min(v_f, (1/k - d)/tau).
    """
    if v < 0 or v > v_f:
        raise DomainError("equilibrium speed must lie in [0, v_f]")
    return math.sqrt(max(1.0 - (v / v_f) ** delta, 0.0)) / (d + tau * v)


@dataclass(frozen=True)
class SteadyStateCurve:
    """Equilibrium samples; ``monotone_violations`` counts grid intervals
    where the speed increases with density (reported, not rejected)."""

    law_name: str
    k: np.ndarray
    v: np.ndarray
    q: np.ndarray
    degenerate: bool
    statuses: tuple[EquilibriumStatus, ...]
    monotone_violations: int = 0

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "v", "q"])
            for k, v, q in zip(self.k, self.v, self.q):
                writer.writerow([repr(float(k)), repr(float(v)), repr(float(q))])


def fundamental_diagram_of(law: AccelerationLaw, k_grid) -> SteadyStateCurve:
    """Equilibrium (k, v, q) samples; flagged degenerate if any point is."""
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(np.diff(k_grid) <= 0):
        raise DomainError("k_grid must be sorted strictly increasing")
    speeds = np.full(k_grid.shape, math.nan)
    statuses = []
    for i, k in enumerate(k_grid):
        res = solve_equilibrium_speed(law, float(k))
        statuses.append(res.status)
        if res.status is EquilibriumStatus.OK:
            speeds[i] = res.speed
    degenerate = any(st is EquilibriumStatus.DEGENERATE for st in statuses)
    dv = np.diff(speeds)
    violations = int(np.count_nonzero(dv[np.isfinite(dv)] > 1e-9))
    return SteadyStateCurve(
        law_name=law.name, k=k_grid, v=speeds, q=k_grid * speeds,
        degenerate=degenerate, statuses=tuple(statuses),
        monotone_violations=violations,
    )
