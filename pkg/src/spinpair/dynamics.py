"""Time propagation of the ground density under a constant generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .engine import OBSERVABLES, Generator, GroundDensity
from .errors import NumericError, RateUndefinedError

__all__ = ["Trajectory", "propagate", "propagate_rk", "evolve", "instantaneous_rate", "RATE_FLOOR"]

_EIG_COND_LIMIT = 1e4
RATE_FLOOR = 1e-9


def _matrix(L) -> np.ndarray:
    return L.matrix if isinstance(L, Generator) else np.asarray(L, dtype=complex)


def _rho_vec(rho0) -> np.ndarray:
    if isinstance(rho0, GroundDensity):
        return rho0.vec()
    return np.asarray(rho0, dtype=complex).reshape(16)


def _check_times(times) -> np.ndarray:
    t = np.array(times, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("need at least one time")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    return t


def evolve(L, rho0, times) -> tuple[np.ndarray, str]:
    """exp(L t) vec(rho0) for each t; returns (states as (n, 16), method)."""
    m = _matrix(L)
    v0 = _rho_vec(rho0)
    t = np.asarray(times, dtype=float)
    w, vr = np.linalg.eig(m)
    cond = np.linalg.cond(vr)
    with np.errstate(over="ignore", invalid="ignore"):
        if cond < _EIG_COND_LIMIT:
            c = np.linalg.solve(vr, v0)
            out = (vr @ (np.exp(np.outer(w, t)) * c[:, None])).T
            method = "eig"
        else:
            out = np.array([expm(m * tk) @ v0 for tk in t])
            method = "expm"
    bad = ~np.all(np.isfinite(out), axis=1)
    if bad.any():
        k = int(np.argmax(bad))
        raise NumericError(f"nonfinite state at time index {k} (t = {t[k]!r})")
    return out, method


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution. ``times`` are in units of 1/gamma_op and ``states``
    has shape (n, 4, 4). ``observables`` maps each name in ``OBSERVABLES`` to
    its sampled values."""

    times: np.ndarray
    states: np.ndarray
    observables: dict
    generator: np.ndarray
    rho0: np.ndarray
    method: str

    def __post_init__(self):
        for a in (self.times, self.states, self.generator, self.rho0, *self.observables.values()):
            a.setflags(write=False)

    def state(self, k: int) -> GroundDensity:
        return GroundDensity(self.states[k], atol=1e-8)

    def state_at(self, t: float) -> np.ndarray:
        """Exact state at any time within the span."""
        if not self.times[0] <= t <= self.times[-1]:
            raise ValueError(f"t = {t} outside trajectory span [{self.times[0]}, {self.times[-1]}]")
        out, _ = evolve(self.generator, self.rho0, [t])
        return out[0].reshape(4, 4)


def _observables(states: np.ndarray) -> dict:
    return {name: np.array([f(s) for s in states]) for name, f in OBSERVABLES.items()}


def propagate(L, rho0, times) -> Trajectory:
    """States exp(L t_k) rho0 at each requested time.

    Uses the eigendecomposition of L when its eigenvector matrix has
    condition number below 1e4, otherwise scaling-and-squaring per sample.
    """
    t = _check_times(times)
    m = _matrix(L)
    v0 = _rho_vec(rho0)
    out, method = evolve(m, v0, t)
    states = out.reshape(-1, 4, 4)
    return Trajectory(t, states, _observables(states), m.copy(), v0.copy(), method)


def propagate_rk(L, rho0, times, rtol: float = 1e-12, atol: float = 1e-14) -> Trajectory:
    """Adaptive explicit Runge-Kutta (DOP853) solution, as an independent check."""
    t = _check_times(times)
    m = _matrix(L)
    v0 = _rho_vec(rho0)
    if t[-1] == 0:
        out = np.array([v0])
    else:
        sol = solve_ivp(lambda _, y: m @ y, (0.0, t[-1]), v0, method="DOP853",
                        t_eval=t, rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericError(f"Runge-Kutta integration failed: {sol.message}")
        out = sol.y.T
    states = out.reshape(-1, 4, 4)
    return Trajectory(t, states, _observables(states), m.copy(), v0.copy(), "rk")


def instantaneous_rate(traj: Trajectory, observable: str, t: float) -> float:
    """Decay rate -d ln|O|/dt of an observable at time ``t`` (units of gamma_op).

    The derivative comes from the generator action on the exact state at t.
    For complex observables this is -Re(dO/dt / O).
    """
    f = OBSERVABLES[observable]
    rho = traj.state_at(t)
    value = f(rho)
    if abs(value) < RATE_FLOOR:
        raise RateUndefinedError(f"rate undefined near zero crossing: |{observable}| = {abs(value):.3g} at t = {t}")
    slope = f((traj.generator @ rho.reshape(16)).reshape(4, 4))
    return float(-(slope / value).real)
