"""Paired vehicle/continuum experiments on matched scenarios.

Two harnesses quantify how closely the two representations of one model
agree:

* :func:`compare_lwr` -- spacing-rule platoon vs Godunov on the first-order
  model, measured against the analytic Riemann/advection solution where one
  exists.
* :func:`compare_second_order` -- RK4 ring platoon vs the upwind continuum
  solver for one acceleration law, with matched initial fields, terminal
  error norms, and growth rates of the fundamental perturbation mode.

Ring topology is used for the second-order comparison so that neither arm
needs a boundary condition, which would otherwise dominate the discrepancy.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .continuum import (EulerianScenario, Periodic, InflowOutflow,
                        solve_lwr_godunov, solve_second_order)
from .errors import (CollisionError, ConfigurationError, DomainError,
                     EvaluationError, SolverFault)
from .fundamental import FundamentalDiagram, GreenshieldsDiagram, TriangularDiagram
from .laws import AccelerationLaw
from .platoon import (ConstantLeader, PlatoonState, Ring, simulate_continuous,
                      simulate_newell)
from .steady_state import EquilibriumStatus, solve_equilibrium_speed
from .transforms import (EulerianField, SpatialGrid, TrajectorySurface,
                         to_eulerian, to_trajectories)


# ---------------------------------------------------------------------------
# Initial profiles and analytic first-order solutions


@dataclass(frozen=True)
class UniformProfile:
    k0: float

    def density(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.k0)


@dataclass(frozen=True)
class RiemannProfile:
    k_left: float
    k_right: float
    x_jump: float

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.x_jump, self.k_left, self.k_right)


@dataclass(frozen=True)
class GaussianBumpProfile:
    k0: float
    amplitude: float
    center: float
    sigma: float

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.k0 + self.amplitude * np.exp(-((x - self.center) / self.sigma) ** 2)


def rankine_hugoniot_speed(fd: FundamentalDiagram, k_l: float, k_r: float) -> float:
    """Jump speed (q_r - q_l) / (k_r - k_l) between two equilibrium states."""
    if k_l == k_r:
        raise DomainError("states coincide: no jump")
    return (fd.phi(k_r) - fd.phi(k_l)) / (k_r - k_l)


def lwr_riemann_density(fd: FundamentalDiagram, k_l: float, k_r: float,
                        x_jump: float, t: float, x) -> np.ndarray:
    """Entropy solution of the first-order Riemann problem at time ``t``.

    k_l < k_r gives a shock at the jump speed; k_l > k_r a rarefaction,
    which for the triangular diagram collapses to two fronts around a
    capacity-density plateau.
    """
    x = np.asarray(x, dtype=float)
    if k_l == k_r:
        return np.full_like(x, k_l)
    if t == 0.0:
        return np.where(x < x_jump, k_l, k_r)
    if k_l < k_r:
        s = rankine_hugoniot_speed(fd, k_l, k_r)
        return np.where(x < x_jump + s * t, k_l, k_r)
    xi = (x - x_jump) / t
    if isinstance(fd, TriangularDiagram):
        k_mid = fd.critical_density
        out = np.full_like(x, k_mid)
        out[xi <= -fd.w] = k_l
        out[xi >= fd.v_f] = k_r
        return out
    if isinstance(fd, GreenshieldsDiagram):
        c_l = fd.v_f * (1.0 - 2.0 * k_l / fd.k_j)
        c_r = fd.v_f * (1.0 - 2.0 * k_r / fd.k_j)
        fan = (1.0 - xi / fd.v_f) * fd.k_j / 2.0
        return np.where(xi <= c_l, k_l, np.where(xi >= c_r, k_r, fan))
    raise ConfigurationError("analytic rarefaction implemented for built-in diagrams only")


def analytic_lwr_density(fd, profile, t: float, x) -> np.ndarray | None:
    """Closed-form first-order solution where one exists, else None."""
    if isinstance(profile, UniformProfile):
        return np.full_like(np.asarray(x, dtype=float), profile.k0)
    if isinstance(profile, RiemannProfile):
        return lwr_riemann_density(fd, profile.k_left, profile.k_right,
                                   profile.x_jump, t, x)
    if isinstance(profile, GaussianBumpProfile) and isinstance(fd, TriangularDiagram):
        k = profile.density(np.asarray(x, dtype=float) + fd.w * t)
        # Pure backward advection holds only while the profile stays congested.
        if np.min(profile.density(x)) >= fd.critical_density:
            return k
    return None


def front_position(x_centers: np.ndarray, k: np.ndarray, k_mid: float) -> float:
    """Interpolated position of the first upward crossing of ``k_mid``."""
    below = k < k_mid
    for i in range(len(k) - 1):
        if below[i] and not below[i + 1]:
            w = (k_mid - k[i]) / (k[i + 1] - k[i])
            return float(x_centers[i] + w * (x_centers[i + 1] - x_centers[i]))
    raise DomainError("no density crossing found")


# ---------------------------------------------------------------------------
# First-order comparison


@dataclass(frozen=True)
class LwrResolutionEntry:
    dx: float
    l1_godunov: float
    l1_newell: float
    l1_inter_arm: float
    front_godunov: float
    front_newell: float


@dataclass(frozen=True)
class LwrEquivalenceReport:
    scenario: str
    horizon: float
    rh_speed: float
    front_predicted: float
    entries: tuple[LwrResolutionEntry, ...]

    def front_error_rel(self, front: float) -> float:
        travel = abs(self.rh_speed) * self.horizon
        return abs(front - self.front_predicted) / travel


def _seed_platoon_from_profile(fd, profile, x_lo: float, x_hi: float,
                               horizon: float, seed_dx: float) -> PlatoonState:
    ext_x = np.arange(x_lo, x_hi + seed_dx, seed_dx)
    k_row = profile.density(ext_x[:-1] + 0.5 * seed_dx)
    grid_field = EulerianField(x0=x_lo, dx=seed_dx, t0=0.0, dt=1.0,
                               density=k_row[None, :],
                               speed=np.zeros_like(k_row)[None, :])
    total = float(np.sum(k_row) * seed_dx)
    n_veh = int(math.floor(total))
    surface = to_trajectories(grid_field, n_veh)
    x0_positions = surface.positions[0]
    speeds = fd.eta(profile.density(x0_positions))
    return PlatoonState(time=0.0, positions=x0_positions, speeds=speeds)


def compare_lwr(fd: FundamentalDiagram, profile, x_lo: float, x_hi: float,
                horizon: float, resolutions, seed_dx: float = 0.5,
                ) -> LwrEquivalenceReport:
    """Run the platoon and Godunov arms of the first-order model side by side.

    The platoon is seeded by inverting the initial density over a domain
    extended far enough upstream that vehicles keep feeding the window for
    the whole horizon; the lead vehicle holds the equilibrium speed of the
    initial downstream density. Needs a triangular diagram (the spacing rule
    does). The horizon snaps to a whole number of time gaps.
    """
    fd = fd if isinstance(fd, TriangularDiagram) else None
    if fd is None:
        raise ConfigurationError("compare_lwr needs a triangular diagram")
    tau = fd.time_gap
    steps_newell = max(int(round(horizon / tau)), 1)
    horizon = steps_newell * tau

    riemann = isinstance(profile, RiemannProfile)
    if riemann:
        rh = rankine_hugoniot_speed(fd, profile.k_left, profile.k_right)
        front_pred = profile.x_jump + rh * horizon
        k_mid = 0.5 * (profile.k_left + profile.k_right)
    else:
        rh = math.nan
        front_pred = math.nan
        k_mid = math.nan

    upstream_ext = fd.v_f * horizon + 20.0 * fd.jam_spacing
    initial = _seed_platoon_from_profile(fd, profile, x_lo - upstream_ext,
                                         x_hi, horizon, seed_dx)
    v_lead = float(fd.eta(float(np.atleast_1d(profile.density(x_hi))[0])))
    newell_surface = simulate_newell(fd, initial, ConstantLeader(v_lead),
                                     steps_newell)
    tail = newell_surface.slice_steps(steps_newell - 1)

    entries = []
    for dx in resolutions:
        cells = int(round((x_hi - x_lo) / dx))
        if abs(cells * dx - (x_hi - x_lo)) > 1e-9:
            raise ConfigurationError(f"dx={dx:g} does not tile the domain")
        grid = SpatialGrid(x_lo, dx, cells)
        centers = grid.centers
        k_init = np.asarray(profile.density(centers), dtype=float)
        if isinstance(profile, UniformProfile):
            boundary = Periodic()
        else:
            boundary = InflowOutflow(k_in=float(k_init[0]))
        n_steps = max(int(math.ceil(horizon * fd.max_wave_speed() / (0.45 * dx))), 1)
        dt = horizon / n_steps
        scenario = EulerianScenario(grid=grid, dt=dt, steps=n_steps,
                                    initial_density=k_init, boundary=boundary,
                                    fd=fd, record_every=n_steps)
        field, _ = solve_lwr_godunov(scenario)
        k_god = field.density[-1]

        newell_field = to_eulerian(tail, grid)
        k_new = newell_field.density[-1]

        analytic = analytic_lwr_density(fd, profile, horizon, centers)
        if analytic is not None:
            l1_god = float(np.sum(np.abs(k_god - analytic)) * dx)
            l1_new = float(np.sum(np.abs(k_new - analytic)) * dx)
        else:
            l1_god = l1_new = math.nan
        l1_arm = float(np.sum(np.abs(k_god - k_new)) * dx)
        if riemann:
            f_god = front_position(centers, k_god, k_mid)
            f_new = front_position(centers, k_new, k_mid)
        else:
            f_god = f_new = math.nan
        entries.append(LwrResolutionEntry(dx=float(dx), l1_godunov=l1_god,
                                          l1_newell=l1_new, l1_inter_arm=l1_arm,
                                          front_godunov=f_god, front_newell=f_new))
    return LwrEquivalenceReport(scenario=type(profile).__name__, horizon=horizon,
                                rh_speed=rh, front_predicted=front_pred,
                                entries=tuple(entries))


# ---------------------------------------------------------------------------
# Second-order comparison


@dataclass(frozen=True)
class RingScenario:
    """Ring-road comparison setup shared by both arms.

    ``amplitude`` is the relative spacing perturbation of the fundamental
    (one wavelength per lap) mode; zero gives the equilibrium control case.
    ``threshold`` is the accepted terminal max density discrepancy as a
    fraction of the base density -- a calibration constant of this harness,
    not a property of the models.
    """

    circumference: float
    k0: float
    amplitude: float
    horizon: float
    dt_cf: float
    dt_pde: float
    compare_points: int = 24
    threshold: float = 0.05
    name: str = "ring"


@dataclass(frozen=True)
class EquivalenceReport:
    scenario: str
    model: str
    resolution: str
    l1_k: float
    linf_k: float
    l1_v: float
    linf_v: float
    growth_cf: float
    growth_pde: float
    verdict: str
    fault: str = ""


def _steps_for(total: float, dt: float, what: str) -> int:
    steps = int(round(total / dt))
    if steps < 1 or abs(steps * dt - total) > 1e-9 * max(total, 1.0):
        raise ConfigurationError(f"{what}: dt={dt:g} does not divide horizon {total:g}")
    return steps


def _mode_amplitude(k_row: np.ndarray) -> float:
    return 2.0 * abs(np.fft.rfft(k_row)[1]) / k_row.size


def _fit_growth(times: np.ndarray, amps: np.ndarray, k0: float) -> float:
    mask = (amps > 1e-12 * k0) & (amps < 0.2 * k0)
    if np.count_nonzero(mask) < 4:
        return math.nan
    return float(np.polyfit(times[mask], np.log(amps[mask]), 1)[0])


def ring_initial_state(law: AccelerationLaw, scenario: RingScenario) -> PlatoonState:
    L, k0 = scenario.circumference, scenario.k0
    n = int(round(L * k0))
    if abs(n - L * k0) > 1e-9:
        raise ConfigurationError("circumference * k0 must be a whole vehicle count")
    res = solve_equilibrium_speed(law, n / L)
    if res.status is not EquilibriumStatus.OK:
        raise ConfigurationError(
            f"{law.name} has no unique steady state at k0={k0:g} ({res.status.value})")
    s0 = L / n
    base = (n - 1 - np.arange(n)) * s0
    disp = scenario.amplitude * L / (2.0 * math.pi)
    x = base + disp * np.sin(2.0 * math.pi * base / L)
    return PlatoonState(time=0.0, positions=x, speeds=np.full(n, res.speed))


def compare_second_order(law: AccelerationLaw, scenario: RingScenario,
                         cells: int) -> EquivalenceReport:
    """One paired ring run at the given continuum resolution."""
    L = scenario.circumference
    resolution = f"cells={cells}"
    try:
        initial = ring_initial_state(law, scenario)
        n_cmp = scenario.compare_points
        steps_cf = _steps_for(scenario.horizon, scenario.dt_cf, "dt_cf")
        steps_pde = _steps_for(scenario.horizon, scenario.dt_pde, "dt_pde")
        if steps_cf % n_cmp or steps_pde % n_cmp:
            raise ConfigurationError("compare_points must divide both step counts")

        grid = SpatialGrid(0.0, L / cells, cells)
        seed_surface = TrajectorySurface(
            t0=0.0, dt=1.0, positions=initial.positions[None, :],
            speeds=initial.speeds[None, :], ring_length=L)
        init_field = to_eulerian(seed_surface, grid)

        cf_surface = simulate_continuous(law, initial, Ring(L),
                                         scenario.dt_cf, steps_cf)
        pde_scenario = EulerianScenario(
            grid=grid, dt=scenario.dt_pde, steps=steps_pde,
            initial_density=init_field.density[0],
            initial_speed=init_field.speed[0],
            boundary=Periodic(), law=law,
            record_every=steps_pde // n_cmp)
        pde_field, _ = solve_second_order(pde_scenario)

        stride_cf = steps_cf // n_cmp
        times = scenario.horizon * np.arange(n_cmp + 1) / n_cmp
        amps_cf = np.empty(n_cmp + 1)
        amps_pde = np.empty(n_cmp + 1)
        l1_k = linf_k = l1_v = linf_v = 0.0
        for j in range(n_cmp + 1):
            cf_slice = cf_surface.slice_steps(j * stride_cf, j * stride_cf + 1)
            cf_field = to_eulerian(cf_slice, grid)
            k_cf, v_cf = cf_field.density[0], cf_field.speed[0]
            k_pde, v_pde = pde_field.density[j], pde_field.speed[j]
            amps_cf[j] = _mode_amplitude(k_cf)
            amps_pde[j] = _mode_amplitude(k_pde)
            if j == n_cmp:
                dx = grid.dx
                l1_k = float(np.sum(np.abs(k_cf - k_pde)) * dx)
                linf_k = float(np.max(np.abs(k_cf - k_pde)))
                l1_v = float(np.nansum(np.abs(v_cf - v_pde)) * dx)
                linf_v = float(np.nanmax(np.abs(v_cf - v_pde)))
        growth_cf = _fit_growth(times, amps_cf, scenario.k0)
        growth_pde = _fit_growth(times, amps_pde, scenario.k0)
        verdict = ("within-threshold"
                   if linf_k <= scenario.threshold * scenario.k0
                   else "exceeds-threshold")
        return EquivalenceReport(
            scenario=scenario.name, model=law.name, resolution=resolution,
            l1_k=l1_k, linf_k=linf_k, l1_v=l1_v, linf_v=linf_v,
            growth_cf=growth_cf, growth_pde=growth_pde, verdict=verdict)
    except (CollisionError, SolverFault, DomainError, EvaluationError) as exc:
        return EquivalenceReport(
            scenario=scenario.name, model=law.name, resolution=resolution,
            l1_k=math.nan, linf_k=math.nan, l1_v=math.nan, linf_v=math.nan,
            growth_cf=math.nan, growth_pde=math.nan,
            verdict="incomparable", fault=str(exc))


# ---------------------------------------------------------------------------
# Suite runner


@dataclass(frozen=True)
class SuiteEntry:
    scenario: str
    law: AccelerationLaw
    ring: RingScenario
    cells: int


def run_suite(entries: list[SuiteEntry], jobs: int = 1) -> list[EquivalenceReport]:
    """Execute all suite entries; failures are isolated per report."""

    def run_one(entry: SuiteEntry) -> EquivalenceReport:
        try:
            ring = RingScenario(**{**entry.ring.__dict__, "name": entry.scenario})
            return compare_second_order(entry.law, ring, entry.cells)
        except Exception as exc:  # fault isolation: one entry must not kill the suite
            return EquivalenceReport(
                scenario=entry.scenario, model=entry.law.name,
                resolution=f"cells={entry.cells}",
                l1_k=math.nan, linf_k=math.nan, l1_v=math.nan, linf_v=math.nan,
                growth_cf=math.nan, growth_pde=math.nan,
                verdict="incomparable", fault=str(exc))

    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, entries))
    return [run_one(e) for e in entries]


SUMMARY_COLUMNS = ["scenario", "model", "resolution", "l1_k", "linf_k",
                   "l1_v", "linf_v", "growth_cf", "growth_pde", "verdict"]


def write_summary_csv(reports: list[EquivalenceReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for r in reports:
            writer.writerow([r.scenario, r.model, r.resolution,
                             repr(r.l1_k), repr(r.linf_k), repr(r.l1_v),
                             repr(r.linf_v), repr(r.growth_cf),
                             repr(r.growth_pde), r.verdict])
