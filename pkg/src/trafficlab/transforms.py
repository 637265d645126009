"""Conversions between vehicle-trajectory surfaces and road fields.

A :class:`TrajectorySurface` holds positions X[step][vehicle] with vehicle
index increasing rearward (vehicle n follows n-1). A :class:`EulerianField`
holds density/speed matrices on a fixed spatial grid. ``to_eulerian`` and
``to_trajectories`` convert between them; ``verify_transform_identities`` cross-checks the
derivative transformation identities between the two coordinate systems on a
smooth surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

PAIR_SPEED_MODES = ("trailing", "leading", "mean")


@dataclass(frozen=True)
class SpatialGrid:
    x0: float
    dx: float
    cells: int

    def __post_init__(self):
        if self.dx <= 0 or self.cells <= 0:
            raise ParameterError("grid needs dx > 0 and cells > 0")

    @property
    def span(self) -> float:
        return self.dx * self.cells

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + self.dx * (np.arange(self.cells) + 0.5)


@dataclass(frozen=True)
class TrajectorySurface:
    """Discrete X(t, N) samples on a rectangular (time x vehicle) grid.

    ``ring_length`` marks ring topology: spacings are then taken modulo the
    circumference and the wrap-around pair is a valid leader/follower pair.
    ``clamp_events`` counts speed clamps applied by the simulator that
    produced the surface (zero for constructed/transformed surfaces).
    """

    t0: float
    dt: float
    positions: np.ndarray
    speeds: np.ndarray | None = None
    accels: np.ndarray | None = None
    ring_length: float | None = None
    clamp_events: int = 0

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ParameterError("positions must be a (steps, vehicles) matrix")
        if self.dt <= 0:
            raise ParameterError("dt must be > 0")
        object.__setattr__(self, "positions", x)
        for name in ("speeds", "accels"):
            m = getattr(self, name)
            if m is not None:
                m = np.asarray(m, dtype=float)
                if m.shape != x.shape:
                    raise ParameterError(f"{name} must match positions shape")
                object.__setattr__(self, name, m)
        if x.shape[1] >= 2:
            gaps = x[:, :-1] - x[:, 1:]
            if self.ring_length is not None:
                gaps = np.mod(gaps, self.ring_length)
                if np.any(np.sum(gaps, axis=1) >= self.ring_length):
                    raise ParameterError("platoon does not fit the ring circumference")
            if np.any(gaps <= 0.0):
                raise ParameterError("leader must stay strictly ahead of follower")

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0]

    @property
    def n_vehicles(self) -> int:
        return self.positions.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps)

    def speed_matrix(self) -> np.ndarray:
        """Recorded speeds, or central/one-sided differences of positions."""
        if self.speeds is not None:
            return self.speeds
        if self.n_steps == 1:
            raise DomainError("cannot derive speeds from a single-step surface")
        return np.gradient(self.positions, self.dt, axis=0)

    def spacings(self) -> np.ndarray:
        """Spacing to the leader per (step, follower), follower index from 1."""
        gaps = self.positions[:, :-1] - self.positions[:, 1:]
        if self.ring_length is not None:
            gaps = np.mod(gaps, self.ring_length)
        return gaps

    def slice_steps(self, start: int = 0, stop: int | None = None,
                    stride: int = 1) -> "TrajectorySurface":
        sl = slice(start, stop, stride)
        return TrajectorySurface(
            t0=self.t0 + self.dt * start,
            dt=self.dt * stride,
            positions=self.positions[sl],
            speeds=None if self.speeds is None else self.speeds[sl],
            accels=None if self.accels is None else self.accels[sl],
            ring_length=self.ring_length,
        )


@dataclass(frozen=True)
class EulerianField:
    """Density/speed matrices on a (time x space) grid.

    Cells covered by no vehicle pair carry density 0 and NaN speed.
    """

    x0: float
    dx: float
    t0: float
    dt: float
    density: np.ndarray
    speed: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.density, dtype=float)
        v = np.asarray(self.speed, dtype=float)
        if k.ndim != 2 or k.shape != v.shape:
            raise ParameterError("density and speed must share a (steps, cells) shape")
        if self.dx <= 0 or self.dt <= 0:
            raise ParameterError("dx and dt must be > 0")
        object.__setattr__(self, "density", k)
        object.__setattr__(self, "speed", v)

    @property
    def n_steps(self) -> int:
        return self.density.shape[0]

    @property
    def n_cells(self) -> int:
        return self.density.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps)

    @property
    def cell_centers(self) -> np.ndarray:
        return self.x0 + self.dx * (np.arange(self.n_cells) + 0.5)

    def flow(self) -> np.ndarray:
        return np.where(self.density > 0.0, self.density * self.speed, 0.0)

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.x0, self.dx, self.n_cells)


@dataclass(frozen=True)
class LagrangianDerivatives:
    X_t: float
    X_N: float
    X_tN: float
    X_NN: float
    X_tt: float


def lagrangian_derivatives(surface: TrajectorySurface, step: int, n: int) -> LagrangianDerivatives:
    """Finite-difference derivatives of X(t, N) at one sample.

    Vehicle differences look toward the leader (X_N = X[n] - X[n-1], so
    X_N = -spacing); time derivatives are central, which restricts ``step``
    to the interior. X_NN needs two leaders and is NaN for n == 1.
    """
    x = surface.positions
    last = surface.n_steps - 1
    if not 1 <= n <= surface.n_vehicles - 1:
        raise DomainError(f"vehicle index {n} needs a leader (1 <= n <= {surface.n_vehicles - 1})")
    if not 1 <= step <= last - 1:
        raise DomainError(f"step {step} outside central-difference range [1, {last - 1}]")
    dt = surface.dt
    x_n = x[:, n]
    x_lead = x[:, n - 1]
    X_N = x_n[step] - x_lead[step]
    X_t = (x_n[step + 1] - x_n[step - 1]) / (2 * dt)
    X_tt = (x_n[step + 1] - 2 * x_n[step] + x_n[step - 1]) / dt**2
    xn_diff = x_n - x_lead
    X_tN = (xn_diff[step + 1] - xn_diff[step - 1]) / (2 * dt)
    if n >= 2:
        X_NN = x_n[step] + x[step, n - 2] - 2 * x_lead[step]
    else:
        X_NN = math.nan
    return LagrangianDerivatives(X_t=X_t, X_N=X_N, X_tN=X_tN, X_NN=X_NN, X_tt=X_tt)


def _deposit(mass, flow_mass, lo, hi, k_pair, v_pair, grid: SpatialGrid):
    x_end = grid.x0 + grid.span
    if hi <= grid.x0 or lo >= x_end:
        return
    j_lo = max(int(math.floor((lo - grid.x0) / grid.dx)), 0)
    j_hi = min(int(math.ceil((hi - grid.x0) / grid.dx)), grid.cells)
    if j_hi <= j_lo:
        return
    edges = grid.x0 + grid.dx * np.arange(j_lo, j_hi + 1)
    overlap = np.minimum(hi, edges[1:]) - np.maximum(lo, edges[:-1])
    overlap = np.maximum(overlap, 0.0)
    mass[j_lo:j_hi] += k_pair * overlap
    flow_mass[j_lo:j_hi] += k_pair * v_pair * overlap


def to_eulerian(surface: TrajectorySurface, grid: SpatialGrid,
                fd=None, pair_speed: str = "trailing") -> EulerianField:
    """Reconstruct (density, speed) fields from a trajectory surface.

    Each consecutive pair deposits its reciprocal spacing over the segment
    [X[n], X[n-1]) as a piecewise-constant density (the exact inverse of the
    cumulative-count relation), cell-averaged. Cell speed is the flow-weighted
    vehicle speed over the covering segments; ``pair_speed`` selects which
    vehicle's speed represents a segment (trailing by default). Cells left
    uncovered get density 0 and NaN speed.
    """
    if pair_speed not in PAIR_SPEED_MODES:
        raise ParameterError(f"pair_speed must be one of {PAIR_SPEED_MODES}")
    if surface.n_vehicles < 2:
        raise DomainError("need at least two vehicles to reconstruct density")
    ring = surface.ring_length
    if ring is not None and abs(grid.span - ring) > 1e-9 * ring:
        raise ParameterError("ring reconstruction needs grid span == ring length")

    x = surface.positions
    speeds = surface.speed_matrix()
    n_steps = surface.n_steps
    density = np.zeros((n_steps, grid.cells))
    speed = np.full((n_steps, grid.cells), math.nan)

    for t in range(n_steps):
        mass = np.zeros(grid.cells)
        flow_mass = np.zeros(grid.cells)
        hi_all = x[t, :-1]
        lo_all = x[t, 1:]
        if pair_speed == "trailing":
            v_all = speeds[t, 1:]
        elif pair_speed == "leading":
            v_all = speeds[t, :-1]
        else:
            v_all = 0.5 * (speeds[t, 1:] + speeds[t, :-1])
        gaps = hi_all - lo_all
        if ring is not None:
            gaps = np.mod(gaps, ring)
        pairs = [(lo_all[i], gaps[i], v_all[i]) for i in range(len(gaps))]
        if ring is not None:
            gap0 = (x[t, -1] + ring - x[t, 0]) % ring or ring
            if pair_speed == "trailing":
                v0 = speeds[t, 0]
            elif pair_speed == "leading":
                v0 = speeds[t, -1]
            else:
                v0 = 0.5 * (speeds[t, 0] + speeds[t, -1])
            pairs.append((x[t, 0], gap0, v0))
        for lo, gap, v_pair in pairs:
            k_pair = 1.0 / gap
            if ring is not None:
                lo = grid.x0 + (lo - grid.x0) % ring
                if lo + gap > grid.x0 + ring:
                    _deposit(mass, flow_mass, lo, grid.x0 + ring, k_pair, v_pair, grid)
                    _deposit(mass, flow_mass, grid.x0, lo + gap - ring, k_pair,
                             v_pair, grid)
                    continue
            _deposit(mass, flow_mass, lo, lo + gap, k_pair, v_pair, grid)
        density[t] = mass / grid.dx
        covered = mass > 0.0
        speed[t, covered] = flow_mass[covered] / mass[covered]

    if fd is not None and np.any(density > fd.k_j * (1.0 + 1e-9)):
        raise DomainError("reconstructed density exceeds the diagram's jam density")
    return EulerianField(x0=grid.x0, dx=grid.dx, t0=surface.t0, dt=surface.dt,
                         density=density, speed=speed)


def cumulative_count(field: EulerianField, step: int) -> tuple[np.ndarray, np.ndarray]:
    """Vehicle count downstream of each cell edge: n(t, x) = integral_x^max k.

    Returns (edges, counts); counts decrease with x and reach 0 at the last
    edge.
    """
    k = field.density[step]
    edges = field.x0 + field.dx * np.arange(field.n_cells + 1)
    counts = np.concatenate([np.cumsum((k * field.dx)[::-1])[::-1], [0.0]])
    return edges, counts


def to_trajectories(field: EulerianField, n_vehicles: int,
                    seed_positions: np.ndarray | None = None) -> TrajectorySurface:
    """Invert the cumulative count: X(t, N) is the x where n(t, x) = N.

    ``seed_positions`` (positions at step 0, leader first) anchor the count
    offset of vehicle 0 so that round trips preserve vehicle labels; without
    seeds vehicle 0 sits at the downstream edge of the density support.
    """
    if n_vehicles < 1:
        raise DomainError("need at least one vehicle")
    offset = 0.0
    if seed_positions is not None:
        edges0, counts0 = cumulative_count(field, 0)
        offset = float(np.interp(seed_positions[0], edges0, counts0))
    targets = np.arange(n_vehicles) + offset

    positions = np.empty((field.n_steps, n_vehicles))
    for t in range(field.n_steps):
        edges, counts = cumulative_count(field, t)
        total = counts[0]
        if targets[-1] > total + 1e-6:
            raise DomainError(
                f"field holds {total:.3f} vehicles at step {t}, need {targets[-1]:.3f}")
        # Trim to the density support: flat zero-count plateaus outside it
        # would otherwise make the inversion pick an arbitrary far edge.
        occupied = np.flatnonzero(field.density[t] > 0.0)
        if occupied.size == 0:
            raise DomainError(f"field is empty at step {t}")
        sl = slice(occupied[0], occupied[-1] + 2)
        step_targets = np.clip(targets, counts[sl][-1], counts[sl][0])
        # counts decrease with x; reverse both for an increasing interpolant.
        positions[t] = np.interp(step_targets, counts[sl][::-1], edges[sl][::-1])
    return TrajectorySurface(t0=field.t0, dt=field.dt, positions=positions)


def traveling_wave_surface(n_vehicles: int, steps: int, dt: float, v0: float,
                           s0: float, eps: float, alpha: float, beta: float,
                           lead_x: float = 0.0) -> TrajectorySurface:
    """Smooth synthetic surface X = lead_x + v0 t - s0 N + eps sin(alpha N - beta t).

    All analytic derivatives are known, which makes it the standard oracle for
    the transformation-identity checks. Requires eps*alpha < s0 (no collision)
    and eps*beta < v0 (no reversing).
    """
    if eps * alpha >= s0:
        raise ParameterError("perturbation too large: vehicles would collide")
    if eps * beta >= v0:
        raise ParameterError("perturbation too large: speeds would go negative")
    n = np.arange(n_vehicles)[None, :]
    t = (dt * np.arange(steps))[:, None]
    phase = alpha * n - beta * t
    x = lead_x + v0 * t - s0 * n + eps * np.sin(phase)
    v = v0 - eps * beta * np.cos(phase)
    return TrajectorySurface(t0=0.0, dt=dt, positions=x, speeds=v)


def _sample_linear(values: np.ndarray, x: float, x0: float, dx: float) -> float:
    """Linear interpolation over cell centers; NaN near undefined cells."""
    pos = (x - x0) / dx - 0.5
    i0 = int(math.floor(pos))
    if i0 < 0 or i0 + 1 >= values.shape[0]:
        return math.nan
    w = pos - i0
    return (1.0 - w) * values[i0] + w * values[i0 + 1]


TRANSFORM_IDENTITY_ROWS = (
    "density", "speed", "flow",
    "speed_rate", "speed_gradient", "density_rate", "density_gradient",
    "acceleration", "speed_difference", "spacing_difference",
)


def verify_transform_identities(surface: TrajectorySurface, grid: SpatialGrid,
                  pair_speed: str = "trailing") -> dict[str, float]:
    """Max residual per implemented transformation-identity row.

    One side of each row comes from vehicle/time finite differences of the
    surface; the other from finite differences of the reconstructed field,
    sampled at the vehicle's position. Residuals shrink at first order or
    better as the surface and grid refine together. Rows involving third
    derivatives (speed curvature, jerk) are not implemented.
    """
    field = to_eulerian(surface, grid, pair_speed=pair_speed)
    k = field.density.copy()
    v = field.speed
    k[np.isnan(v)] = math.nan  # exclude uncovered cells from differencing
    for row in range(k.shape[0]):
        covered = np.flatnonzero(np.isfinite(k[row]))
        if covered.size and covered.size < k.shape[1]:
            # Outermost covered cells are only partially covered by the
            # platoon; their averages are biased and would poison gradients.
            k[row, covered[0]] = math.nan
            k[row, covered[-1]] = math.nan
    dx, dt = field.dx, surface.dt
    k_x = np.gradient(k, dx, axis=1)
    k_t = np.gradient(k, dt, axis=0)
    v_x = np.gradient(v, dx, axis=1)
    v_t = np.gradient(v, dt, axis=0)

    residuals = {row: 0.0 for row in TRANSFORM_IDENTITY_ROWS}
    samples = 0
    margin = 2.5 * dx
    x_lo, x_hi = field.x0 + margin, field.x0 + grid.span - margin
    x = surface.positions
    for step in range(1, surface.n_steps - 1):
        for n in range(2, surface.n_vehicles - 1):
            pos = x[step, n]
            if not x_lo <= pos <= x_hi:
                continue
            lp = lagrangian_derivatives(surface, step, n)
            es = {name: _sample_linear(arr[step], pos, field.x0, dx)
                  for name, arr in (("k", k), ("v", v), ("k_x", k_x),
                                    ("k_t", k_t), ("v_x", v_x), ("v_t", v_t))}
            if any(math.isnan(val) for val in es.values()):
                continue
            samples += 1
            pairs = {
                "density": (es["k"], -1.0 / lp.X_N),
                "speed": (es["v"], lp.X_t),
                "flow": (es["k"] * es["v"], -lp.X_t / lp.X_N),
                "speed_rate": (es["v_t"], lp.X_tt - lp.X_t / lp.X_N * lp.X_tN),
                "speed_gradient": (es["v_x"], lp.X_tN / lp.X_N),
                "density_rate": (es["k_t"],
                                 (lp.X_tN * lp.X_N - lp.X_t * lp.X_NN) / lp.X_N**3),
                "density_gradient": (es["k_x"], lp.X_NN / lp.X_N**3),
                "acceleration": (es["v_t"] + es["v"] * es["v_x"], lp.X_tt),
                "speed_difference": (-es["v_x"] / es["k"], lp.X_tN),
                "spacing_difference": (-es["k_x"] / es["k"] ** 3, lp.X_NN),
            }
            for row, (lhs, rhs) in pairs.items():
                residuals[row] = max(residuals[row], abs(lhs - rhs))
    if samples == 0:
        raise DomainError("no interior samples: grid does not cover the platoon")
    return residuals
