"""Equilibrium flow-density relations and their spacing/density forms.

Each diagram exposes the same surface:

* ``phi(k)``        flow at density ``k`` (veh/s)
* ``theta(s)``      speed at spacing ``s`` (m/s), ``theta(s) = s * phi(1/s)``
* ``eta(k)``        speed at density ``k``, ``eta(k) = theta(1/k)``
* ``eta_prime(k)``  d(speed)/d(density)
* ``theta_prime(s)`` d(speed)/d(spacing)

All evaluators accept scalars or numpy arrays and raise
:class:`~trafficlab.errors.DomainError` outside their domain (no clamping:
silent clamps hide simulator blow-ups).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

# Relative slack for floating-point domain boundaries (k = k_j, s = 1/k_j).
_EDGE_TOL = 1e-12


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class TriangularDiagram:
    """Two-branch diagram: free-flow slope ``v_f``, congested slope ``-w``."""

    v_f: float
    w: float
    k_j: float

    kind = "triangular"

    def __post_init__(self):
        if self.v_f <= 0 or self.w <= 0 or self.k_j <= 0:
            raise ParameterError("triangular diagram needs v_f, w, k_j > 0")

    @property
    def jam_spacing(self) -> float:
        return 1.0 / self.k_j

    @property
    def time_gap(self) -> float:
        """Headway increment per vehicle on the congested branch, 1/(w k_j)."""
        return 1.0 / (self.w * self.k_j)

    @property
    def critical_density(self) -> float:
        return self.w * self.k_j / (self.v_f + self.w)

    @property
    def capacity(self) -> float:
        return self.v_f * self.w * self.k_j / (self.v_f + self.w)

    def phi(self, k):
        k, scalar = _as_array(k)
        _check_density_range(k, self.k_j)
        return _ret(np.minimum(self.v_f * k, self.w * (self.k_j - k)), scalar)

    def theta(self, s):
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        return _ret(np.minimum(self.v_f, self.w * (self.k_j * s - 1.0)), scalar)

    def theta_prime(self, s):
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        s_break = (self.v_f / self.w + 1.0) / self.k_j
        # Kink at s_break: report the congested-branch slope there.
        return _ret(np.where(s <= s_break, self.w * self.k_j, 0.0), scalar)

    def eta(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        return _ret(np.minimum(self.v_f, self.w * (self.k_j / k - 1.0)), scalar)

    def eta_prime(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        congested = k >= self.critical_density
        return _ret(np.where(congested, -self.w * self.k_j / k**2, 0.0), scalar)

    def max_theta_slope(self) -> float:
        return self.w * self.k_j

    def max_wave_speed(self) -> float:
        return max(self.v_f, self.w)


@dataclass(frozen=True)
class GreenshieldsDiagram:
    """Parabolic diagram ``phi(k) = v_f k (1 - k/k_j)``."""

    v_f: float
    k_j: float

    kind = "greenshields"

    def __post_init__(self):
        if self.v_f <= 0 or self.k_j <= 0:
            raise ParameterError("greenshields diagram needs v_f, k_j > 0")

    @property
    def jam_spacing(self) -> float:
        return 1.0 / self.k_j

    @property
    def critical_density(self) -> float:
        return self.k_j / 2.0

    @property
    def capacity(self) -> float:
        return self.v_f * self.k_j / 4.0

    def phi(self, k):
        k, scalar = _as_array(k)
        _check_density_range(k, self.k_j)
        return _ret(self.v_f * k * (1.0 - k / self.k_j), scalar)

    def theta(self, s):
        # Analytic extension for every s >= 1/k_j; tends to v_f as s -> inf.
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        return _ret(self.v_f * (1.0 - 1.0 / (s * self.k_j)), scalar)

    def theta_prime(self, s):
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        return _ret(self.v_f / (s**2 * self.k_j), scalar)

    def eta(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        return _ret(self.v_f * (1.0 - k / self.k_j), scalar)

    def eta_prime(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        return _ret(np.full_like(k, -self.v_f / self.k_j), scalar)

    def max_theta_slope(self) -> float:
        # theta'(s) = v_f/(s^2 k_j) is largest at the jam spacing: v_f * k_j.
        return self.v_f * self.k_j

    def max_wave_speed(self) -> float:
        return self.v_f


@dataclass(frozen=True)
class TabulatedDiagram:
    """Monotone piecewise-linear interpolation of sorted (k, q) samples.

    The table must start at (0, 0) and end at (k_j, 0); linear interpolation
    keeps Godunov demand/supply fluxes well defined and makes concavity
    checkable from the samples themselves.
    """

    k_table: np.ndarray
    q_table: np.ndarray

    kind = "tabulated"

    def __post_init__(self):
        k = np.asarray(self.k_table, dtype=float)
        q = np.asarray(self.q_table, dtype=float)
        if k.ndim != 1 or k.shape != q.shape or k.size < 3:
            raise ParameterError("tabulated diagram needs matching 1-d tables, >= 3 rows")
        if np.any(np.diff(k) <= 0):
            raise ParameterError("tabulated densities must be strictly increasing")
        if k[0] != 0.0 or abs(q[0]) > 0 or abs(q[-1]) > 0:
            raise ParameterError("tabulated diagram must run from (0, 0) to (k_j, 0)")
        object.__setattr__(self, "k_table", k)
        object.__setattr__(self, "q_table", q)

    @property
    def v_f(self) -> float:
        return self.q_table[1] / self.k_table[1]

    @property
    def k_j(self) -> float:
        return float(self.k_table[-1])

    @property
    def jam_spacing(self) -> float:
        return 1.0 / self.k_j

    @property
    def critical_density(self) -> float:
        # Piecewise-linear flow peaks at a vertex.
        return float(self.k_table[int(np.argmax(self.q_table))])

    @property
    def capacity(self) -> float:
        return float(np.max(self.q_table))

    def phi(self, k):
        k, scalar = _as_array(k)
        _check_density_range(k, self.k_j)
        return _ret(np.interp(k, self.k_table, self.q_table), scalar)

    def theta(self, s):
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        k = 1.0 / s
        return _ret(s * np.interp(k, self.k_table, self.q_table), scalar)

    def theta_prime(self, s):
        s, scalar = _as_array(s)
        _check_spacing_range(s, self.jam_spacing)
        h = 1e-6 * self.jam_spacing
        lo = np.maximum(s - h, self.jam_spacing)
        return _ret((self.theta(s + h) - self.theta(lo)) / (s + h - lo), scalar)

    def eta(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        return _ret(np.interp(k, self.k_table, self.q_table) / k, scalar)

    def eta_prime(self, k):
        k, scalar = _as_array(k)
        _check_density_positive(k, self.k_j)
        h = 1e-6 * self.k_j
        hi = np.minimum(k + h, self.k_j)
        lo = np.maximum(k - h, self.k_table[1] * 1e-6)
        return _ret((self.eta(hi) - self.eta(lo)) / (hi - lo), scalar)

    def max_theta_slope(self) -> float:
        # On each linear piece q = q_i + m_i (k - k_i), theta(s) = s*phi(1/s)
        # has constant slope q_i - m_i k_i (the piece's intercept at k = 0).
        slopes = np.diff(self.q_table) / np.diff(self.k_table)
        intercepts = self.q_table[:-1] - slopes * self.k_table[:-1]
        return float(np.max(np.abs(intercepts)))

    def max_wave_speed(self) -> float:
        slopes = np.diff(self.q_table) / np.diff(self.k_table)
        return float(np.max(np.abs(slopes)))


FundamentalDiagram = TriangularDiagram | GreenshieldsDiagram | TabulatedDiagram


def _check_density_range(k: np.ndarray, k_j: float):
    if np.any(k < -_EDGE_TOL * k_j) or np.any(k > k_j * (1.0 + _EDGE_TOL)):
        raise DomainError(f"density outside [0, k_j={k_j:g}]")


def _check_density_positive(k: np.ndarray, k_j: float):
    if np.any(k <= 0):
        raise DomainError("density must be > 0 for speed-density evaluation")
    if np.any(k > k_j * (1.0 + _EDGE_TOL)):
        raise DomainError(f"density above jam density {k_j:g}")


def _check_spacing_range(s: np.ndarray, s_j: float):
    if np.any(s < s_j * (1.0 - _EDGE_TOL)):
        raise DomainError(f"spacing below jam spacing {s_j:g}")


def cfl_max_dt(fd: FundamentalDiagram, d_n: float = 1.0) -> float:
    """Largest stable time step for a vehicle-count step ``d_n``.

    Equals ``d_n / max_s |theta'(s)|``; for a triangular diagram with
    ``d_n = 1`` this is the time gap ``1/(w k_j)``.
    """
    if d_n <= 0:
        raise DomainError("vehicle-count step must be > 0")
    slope = fd.max_theta_slope()
    if slope == 0.0:
        return math.inf
    return d_n / slope


def diagram_from_config(cfg: dict) -> FundamentalDiagram:
    """Build a diagram from a scenario-JSON ``fd`` section (already validated)."""
    kind = cfg["kind"]
    if kind == "triangular":
        return TriangularDiagram(v_f=cfg["v_f"], w=cfg["w"], k_j=cfg["k_j"])
    if kind == "greenshields":
        return GreenshieldsDiagram(v_f=cfg["v_f"], k_j=cfg["k_j"])
    if kind == "tabulated":
        table = np.asarray(cfg["table"], dtype=float)
        return TabulatedDiagram(k_table=table[:, 0], q_table=table[:, 1])
    raise ParameterError(f"unknown fundamental diagram kind {kind!r}")
