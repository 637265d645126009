"""Acceleration-law library.

Every law computes a follower's acceleration from ``(v, s, dv)`` where ``v``
is its own speed, ``s`` the spacing to the immediate leader, and
``dv = v_leader - v_follower`` (positive when the gap is opening). The same
sign convention is used everywhere in the package.

Laws are immutable value objects; evaluation is pure and numpy-vectorized,
so evaluators accept scalars or equal-shaped arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import EvaluationError, ParameterError
from .fundamental import FundamentalDiagram


class LawOrder(enum.Enum):
    SECOND = 2
    THIRD = 3


@dataclass(frozen=True)
class AccelerationLaw:
    """A car-following rule ``accel = psi(v, s, dv)`` plus metadata.

    ``partials`` (when present) returns the analytic gradient
    ``(psi_v, psi_s, psi_dv)``; otherwise :func:`partials_at` falls back to
    central differences. ``time_scale`` is the smallest relaxation-like
    time constant, used to guard explicit integrator steps. ``s_min`` is the
    smallest spacing at which the law may be evaluated during a simulation.
    """

    name: str
    params: Mapping[str, float]
    psi: Callable
    partials: Callable | None = None
    order: LawOrder = LawOrder.SECOND
    s_min: float = 0.1
    v_free: float | None = None
    time_scale: float = 1.0
    inner: "AccelerationLaw | None" = None
    t_delay: float | None = None

    def evaluate(self, v, s, dv):
        """Acceleration (m/s^2) at speed ``v``, spacing ``s``, speed gap ``dv``."""
        return self.psi(v, s, dv)

    def jerk(self, v, s, dv, accel):
        """Third-order laws: jerk relaxing ``accel`` toward the inner target."""
        if self.order is not LawOrder.THIRD:
            raise EvaluationError(f"{self.name} is not a third-order law")
        return (self.inner.psi(v, s, dv) - accel) / self.t_delay

    @property
    def has_analytic_partials(self) -> bool:
        return self.partials is not None


def _heaviside(x):
    return np.where(x > 0.0, 1.0, 0.0)


def _check_spacing_positive(s):
    if np.any(np.asarray(s) <= 0.0):
        raise EvaluationError("spacing must be positive")


def _guarded_s_min(fd: FundamentalDiagram | None) -> float:
    # Keep 1/s and theta(s) inside the diagram's domain during transients.
    return 1.01 / fd.k_j if fd is not None else 0.1


def make_linear_gm(T: float) -> AccelerationLaw:
    """Speed-difference relaxation: accel = dv / T."""
    if T <= 0:
        raise ParameterError("linear GM needs T > 0")

    def psi(v, s, dv):
        return dv / T

    def partials(v, s, dv):
        z = np.zeros_like(np.asarray(v, dtype=float))
        return z, z, z + 1.0 / T

    return AccelerationLaw("linear_gm", {"T": T}, psi, partials, time_scale=T)


def make_nonlinear_gm(a: float, m: int, l: int) -> AccelerationLaw:
    """Stimulus-response form: accel = a v^m dv / s^l."""
    if a <= 0:
        raise ParameterError("nonlinear GM needs a > 0")
    if m < 0 or l < 0 or int(m) != m or int(l) != l:
        raise ParameterError("nonlinear GM exponents m, l must be nonnegative integers")
    m, l = int(m), int(l)

    def psi(v, s, dv):
        _check_spacing_positive(s)
        return a * np.power(v, m) * dv / np.power(s, l)

    def partials(v, s, dv):
        _check_spacing_positive(s)
        v = np.asarray(v, dtype=float)
        p_v = a * m * np.power(v, m - 1) * dv / np.power(s, l) if m > 0 else np.zeros_like(v)
        p_s = -a * l * np.power(v, m) * dv / np.power(s, l + 1)
        p_dv = a * np.power(v, m) / np.power(s, l)
        return p_v, p_s + np.zeros_like(v), p_dv + np.zeros_like(v)

    return AccelerationLaw(
        "nonlinear_gm", {"a": a, "m": m, "l": l}, psi, partials, time_scale=1.0 / a
    )


def make_ovm(T: float, fd: FundamentalDiagram) -> AccelerationLaw:
    """Relaxation toward the equilibrium speed-spacing curve theta."""
    if T <= 0:
        raise ParameterError("OVM needs T > 0")

    def psi(v, s, dv):
        return (fd.theta(s) - v) / T

    def partials(v, s, dv):
        z = np.zeros_like(np.asarray(v, dtype=float))
        return z - 1.0 / T, fd.theta_prime(s) / T + z, z

    return AccelerationLaw(
        "ovm", {"T": T}, psi, partials,
        s_min=_guarded_s_min(fd), v_free=fd.v_f, time_scale=T,
    )


def make_gfm(T: float, T_brake: float, d: float, tau: float, R: float,
             fd: FundamentalDiagram) -> AccelerationLaw:
    """Relaxation plus a braking interaction active while the gap closes.

    The braking term -(-dv) * H(-dv) / T_brake * exp(-(s - d - tau*v)/R)
    decelerates only when dv < 0 (closing); with dv >= 0 the law reduces to
    the plain relaxation form.
    """
    if not (0 < T_brake < T):
        raise ParameterError("GFM needs 0 < T_brake < T")
    if d <= 0 or tau <= 0 or R <= 0:
        raise ParameterError("GFM needs d, tau, R > 0")

    def psi(v, s, dv):
        gate = _heaviside(-np.asarray(dv, dtype=float))
        exp_term = np.exp(-(s - (d + tau * v)) / R)
        return (fd.theta(s) - v) / T + dv * gate / T_brake * exp_term

    def partials(v, s, dv):
        # Kinked at dv = 0; the closing-side contribution is gated off there.
        v = np.asarray(v, dtype=float)
        gate = _heaviside(-np.asarray(dv, dtype=float))
        exp_term = np.exp(-(s - (d + tau * v)) / R)
        brake = dv * gate / T_brake * exp_term
        p_v = -1.0 / T + brake * tau / R
        p_s = fd.theta_prime(s) / T - brake / R
        p_dv = gate / T_brake * exp_term
        return p_v + 0 * v, p_s + 0 * v, p_dv + 0 * v

    return AccelerationLaw(
        "gfm", {"T": T, "T_brake": T_brake, "d": d, "tau": tau, "R": R},
        psi, partials, s_min=_guarded_s_min(fd), v_free=fd.v_f, time_scale=T_brake,
    )


def _make_idm(name: str, a: float, b: float, delta: float, v_f: float,
              tau: float, d: float, closing_sign: float) -> AccelerationLaw:
    if a <= 0 or b <= 0 or v_f <= 0 or tau <= 0 or d <= 0:
        raise ParameterError("IDM needs a, b, v_f, tau, d > 0")
    if delta < 1:
        raise ParameterError("IDM needs delta >= 1")
    two_sqrt_ab = 2.0 * math.sqrt(a * b)

    def gap(v, dv):
        return d + tau * v + closing_sign * v * dv / two_sqrt_ab

    def psi(v, s, dv):
        _check_spacing_positive(s)
        return a * (1.0 - np.power(v / v_f, delta) - (gap(v, dv) / s) ** 2)

    def partials(v, s, dv):
        _check_spacing_positive(s)
        v = np.asarray(v, dtype=float)
        g = gap(v, dv)
        p_v = a * (-delta * np.power(v / v_f, delta - 1.0) / v_f
                   - 2.0 * g / s**2 * (tau + closing_sign * dv / two_sqrt_ab))
        p_s = 2.0 * a * g**2 / s**3
        p_dv = -2.0 * a * g / s**2 * (closing_sign * v / two_sqrt_ab)
        return p_v, p_s + 0 * v, p_dv + 0 * v

    return AccelerationLaw(
        name, {"a": a, "b": b, "delta": delta, "v_f": v_f, "tau": tau, "d": d},
        psi, partials, s_min=0.1, v_free=v_f, time_scale=min(tau, v_f / a),
    )


def make_idm(a: float, b: float, delta: float, v_f: float, tau: float,
             d: float) -> AccelerationLaw:
    """IDM with the conventional desired gap d + tau*v - v*dv/(2 sqrt(ab)).

    The closing-rate term shrinks the desired gap while the gap opens
    (dv > 0) and grows it while closing, so approaching a slower leader
    brakes the follower.
    """
    return _make_idm("idm", a, b, delta, v_f, tau, d, closing_sign=-1.0)


def make_idm_alt(a: float, b: float, delta: float, v_f: float, tau: float,
                   d: float) -> AccelerationLaw:
    """IDM variant with the opposite sign on the closing-rate term.

    Kept alongside :func:`make_idm` because the two differ only off
    equilibrium; at dv = 0 they share the same steady states.
    """
    return _make_idm("idm_alt", a, b, delta, v_f, tau, d, closing_sign=1.0)


def make_fvdm(T: float, lam: float, fd: FundamentalDiagram) -> AccelerationLaw:
    """Full velocity difference model: OVM relaxation plus lam * dv."""
    if T <= 0:
        raise ParameterError("FVDM needs T > 0")
    if lam < 0:
        raise ParameterError("FVDM needs lambda >= 0")

    def psi(v, s, dv):
        return (fd.theta(s) - v) / T + lam * dv

    def partials(v, s, dv):
        z = np.zeros_like(np.asarray(v, dtype=float))
        return z - 1.0 / T, fd.theta_prime(s) / T + z, z + lam

    time_scale = min(T, 1.0 / lam) if lam > 0 else T
    return AccelerationLaw(
        "fvdm", {"T": T, "lambda": lam}, psi, partials,
        s_min=_guarded_s_min(fd), v_free=fd.v_f, time_scale=time_scale,
    )


def make_aw_rascle_cf(T_of_k: Callable | float, p_prime: Callable,
                      fd: FundamentalDiagram) -> AccelerationLaw:
    """General anticipation law: relaxation plus p'(1/s) * dv / s^2.

    ``T_of_k`` may be a constant or a function of density; ``p_prime`` is the
    derivative of the pressure-like function of density. Partials come from
    finite differences since both callables are opaque.
    """
    if callable(T_of_k):
        T_fn = T_of_k
    else:
        T_const = float(T_of_k)
        if T_const <= 0:
            raise ParameterError("aw_rascle needs T > 0")
        T_fn = lambda k: T_const

    def psi(v, s, dv):
        _check_spacing_positive(s)
        k = 1.0 / np.asarray(s, dtype=float)
        return (fd.theta(s) - v) / T_fn(k) + p_prime(k) * dv / s**2

    probe_T = float(T_fn(0.5 * fd.k_j))
    if probe_T <= 0:
        raise ParameterError("aw_rascle needs T(k) > 0 on the density domain")
    return AccelerationLaw(
        "aw_rascle", {}, psi, None,
        s_min=_guarded_s_min(fd), v_free=fd.v_f, time_scale=probe_T,
    )


def make_arz_cf(fd: FundamentalDiagram) -> AccelerationLaw:
    """Pure anticipation law -eta'(1/s) * dv / s^2 (no relaxation term).

    Has no unique steady-state speed: any uniform-speed platoon is an
    equilibrium, whatever the spacing.
    """

    def psi(v, s, dv):
        _check_spacing_positive(s)
        k = 1.0 / np.asarray(s, dtype=float)
        return -fd.eta_prime(k) * dv / s**2

    return AccelerationLaw(
        "arz", {}, psi, None,
        s_min=_guarded_s_min(fd), v_free=fd.v_f,
        time_scale=1.0 / fd.max_theta_slope(),
    )


def make_jwz_cf(T: float, c0: float, fd: FundamentalDiagram) -> AccelerationLaw:
    """Relaxation plus a constant-coefficient speed-difference term c0*dv/s."""
    if T <= 0:
        raise ParameterError("JWZ needs T > 0")
    if c0 < 0:
        raise ParameterError("JWZ needs c0 >= 0")

    def psi(v, s, dv):
        return (fd.theta(s) - v) / T + c0 * dv / s

    def partials(v, s, dv):
        z = np.zeros_like(np.asarray(v, dtype=float))
        return z - 1.0 / T, fd.theta_prime(s) / T - c0 * dv / s**2 + z, z + c0 / s

    return AccelerationLaw(
        "jwz", {"T": T, "c0": c0}, psi, partials,
        s_min=_guarded_s_min(fd), v_free=fd.v_f, time_scale=T,
    )


def make_third_order(inner: AccelerationLaw, t_delay: float) -> AccelerationLaw:
    """Wrap a second-order law with an acceleration-relaxation delay.

    The state gains an acceleration component ``a`` with
    jerk = (inner(v, s, dv) - a) / t_delay.
    """
    if t_delay <= 0:
        raise ParameterError("third-order wrapper needs t_delay > 0")
    if inner.order is not LawOrder.SECOND:
        raise ParameterError("cannot nest third-order laws")

    return AccelerationLaw(
        f"{inner.name}+delay", dict(inner.params) | {"t_delay": t_delay},
        inner.psi, inner.partials, order=LawOrder.THIRD,
        s_min=inner.s_min, v_free=inner.v_free,
        time_scale=min(inner.time_scale, t_delay),
        inner=inner, t_delay=t_delay,
    )


def partials_at(law: AccelerationLaw, v, s, dv):
    """Gradient (psi_v, psi_s, psi_dv) at a point, analytic when available.

    Finite-difference steps are relative with absolute floors since model
    scales span several orders of magnitude.
    """
    if law.partials is not None:
        return law.partials(v, s, dv)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    dv = np.asarray(dv, dtype=float)
    h_v = np.maximum(1e-6 * np.abs(v), 1e-8)
    h_s = np.maximum(1e-6 * np.abs(s), 1e-8)
    h_dv = np.maximum(1e-6 * np.maximum(np.abs(dv), np.abs(v)), 1e-8)
    p_v = (law.psi(v + h_v, s, dv) - law.psi(v - h_v, s, dv)) / (2 * h_v)
    p_s = (law.psi(v, s + h_s, dv) - law.psi(v, s - h_s, dv)) / (2 * h_s)
    p_dv = (law.psi(v, s, dv + h_dv) - law.psi(v, s, dv - h_dv)) / (2 * h_dv)
    return p_v, p_s, p_dv


@dataclass(frozen=True)
class ModelCatalogEntry:
    factory: Callable[..., AccelerationLaw]
    needs_fd: bool
    continuum_family: str


MODEL_CATALOG: dict[str, ModelCatalogEntry] = {
    "linear_gm": ModelCatalogEntry(
        make_linear_gm, False, "speed-gradient advection (Aw-Rascle special case)"),
    "nonlinear_gm": ModelCatalogEntry(
        make_nonlinear_gm, False, "nonlinear speed-gradient advection"),
    "ovm": ModelCatalogEntry(
        make_ovm, True, "relaxation continuum (Phillips form)"),
    "gfm": ModelCatalogEntry(
        make_gfm, True, "relaxation with gated braking advection"),
    "idm": ModelCatalogEntry(
        make_idm, False, "nonlinear source without explicit relaxation time"),
    "idm_alt": ModelCatalogEntry(
        make_idm_alt, False, "IDM variant, opposite closing-rate sign"),
    "fvdm": ModelCatalogEntry(
        make_fvdm, True, "relaxation plus speed-gradient (Aw-Rascle-Greenberg form)"),
    "arz": ModelCatalogEntry(
        make_arz_cf, True, "pure anticipation, degenerate steady states"),
    "jwz": ModelCatalogEntry(
        make_jwz_cf, True, "relaxation plus constant-coefficient speed gradient"),
}


def law_from_config(cfg: dict, fd: FundamentalDiagram | None) -> AccelerationLaw:
    """Build a law from a scenario-JSON ``model`` section (already validated)."""
    cfg = dict(cfg)
    name = cfg.pop("name")
    if name == "third_order":
        inner = law_from_config(cfg["inner"], fd)
        return make_third_order(inner, cfg["t_delay"])
    entry = MODEL_CATALOG[name]
    if entry.needs_fd:
        if fd is None:
            raise ParameterError(f"model {name!r} requires an fd section")
        cfg["fd"] = fd
    if name == "fvdm":
        cfg["lam"] = cfg.pop("lambda")
    return entry.factory(**cfg)
