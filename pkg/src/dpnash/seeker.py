"""Differentially private push-sum Nash-equilibrium seeking.

One synchronous round, for every player ``i`` with weights ``B = B(l)``::

    s      = sigma_hat + eps                       # perturbed broadcast
    w_hat' = B @ w_hat
    z'     = B @ s
    q'     = P_U[q - mu(l) * g(q, y) + beta * (q - q_prev)]
    sigma_hat' = rho(l) * z' + phi(q') - phi(q)
    y'     = rho(l) * z' / w_hat'
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .game import GameSpec, pseudo_gradient
from .graphs import GraphSchedule, check_d_strong_connectivity
from .noise import make_streams, noise_vector
from .schedules import ScheduleSet, validate_assumptions

__all__ = ["SeekerState", "RunRecord", "WeightUnderflow", "ValidationError",
           "init_state", "step", "run", "compact_form_check", "CompactFormReport",
           "conservation_residuals", "check_preconditions"]

WEIGHT_FLOOR = 1e-300


class WeightUnderflow(RuntimeError):
    """A push-sum weight fell below ``WEIGHT_FLOOR``."""

    def __init__(self, msg, record=None):
        super().__init__(msg)
        self.record = record


class ValidationError(ValueError):
    """Schedules or topology fail the standing assumptions."""


@dataclass(frozen=True)
class SeekerState:
    l: int
    q: np.ndarray
    q_prev: np.ndarray
    w_hat: np.ndarray
    sigma_hat: np.ndarray
    z: np.ndarray
    y: np.ndarray


def init_state(spec: GameSpec, q0) -> SeekerState:
    """State at ``l = 0``: unit weights, ``sigma_hat = z = y = phi(q0)``."""
    q0 = np.broadcast_to(np.asarray(q0, dtype=float), (spec.n,)).copy()
    if np.any(q0 < spec.lo) or np.any(q0 > spec.hi):
        raise ValueError("initial profile lies outside the action sets")
    sig = spec.phi(q0)
    return SeekerState(0, q0, q0.copy(), np.ones(spec.n), sig, sig.copy(), sig.copy())


def step(state: SeekerState, spec: GameSpec, s: ScheduleSet, B: np.ndarray,
         noise: np.ndarray) -> SeekerState:
    l = state.l
    rho = float(s.rho(l))
    sent = state.sigma_hat + noise
    w = B @ state.w_hat
    if np.any(w < WEIGHT_FLOOR):
        raise WeightUnderflow(f"push-sum weight underflow at l={l}: min {w.min():.3e}")
    z = B @ sent
    g = pseudo_gradient(spec, state.q, state.y)
    q = np.clip(state.q - s.mu_at(l) * g + s.beta_vec() * (state.q - state.q_prev),
                spec.lo, spec.hi)
    sigma_hat = rho * z + spec.phi(q) - spec.phi(state.q)
    y = rho * z / w
    return SeekerState(l + 1, q, state.q, w, sigma_hat, z, y)


@dataclass
class RunRecord:
    """Trajectory of one run.

    Arrays indexed by iteration have ``horizon + 1`` rows (row 0 is the
    initial state); ``noise`` and ``rho`` have ``horizon`` rows, row ``l``
    being what round ``l`` consumed.
    """

    q: np.ndarray
    y: np.ndarray
    w_hat: np.ndarray
    sigma_hat: np.ndarray
    z: np.ndarray
    noise: np.ndarray
    rho: np.ndarray
    b: np.ndarray
    err: np.ndarray | None
    wall_clock: np.ndarray
    seed: int
    graph_period: int
    completed: bool = True

    @property
    def horizon(self) -> int:
        return self.q.shape[0] - 1

    @property
    def n(self) -> int:
        return self.q.shape[1]


def check_preconditions(schedules: ScheduleSet, graphs: GraphSchedule) -> None:
    """Raise :class:`ValidationError` unless the run preconditions hold."""
    if not check_d_strong_connectivity(graphs):
        raise ValidationError("graph schedule is not D-strongly connected")
    rep = validate_assumptions(schedules)
    if not rep.passed:
        failed = [c.name for c in rep.checks if not c.passed]
        raise ValidationError(f"schedule assumptions fail: {failed}")


def run(spec: GameSpec, schedules: ScheduleSet, graphs: GraphSchedule, seed: int,
        horizon: int, q_star=None, q0=0.1, zero_noise: bool = False,
        assume_valid: bool = False) -> RunRecord:
    """Run ``horizon`` rounds with fresh noise from ``seed``.

    Unless ``assume_valid`` is set, the graph schedule must be D-strongly
    connected and the schedules must pass :func:`validate_assumptions`.
    """
    if graphs.n != spec.n or schedules.n != spec.n:
        raise ValueError("game, schedules and graphs disagree on the player count")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    if not assume_valid:
        check_preconditions(schedules, graphs)
    n = spec.n
    streams = make_streams(seed, n)
    shape = (horizon + 1, n)
    q, y, w, sh, z = (np.empty(shape) for _ in range(5))
    eps = np.empty((horizon, n))
    b = np.empty((horizon, n))
    ls = np.arange(horizon, dtype=float)
    rho = np.asarray(schedules.rho(ls), dtype=float).reshape(horizon)
    clock = np.empty(horizon + 1)

    state = init_state(spec, q0)
    t0 = time.perf_counter()

    def save(k, st):
        q[k], y[k], w[k], sh[k], z[k] = st.q, st.y, st.w_hat, st.sigma_hat, st.z
        clock[k] = time.perf_counter() - t0

    save(0, state)
    done = horizon
    try:
        for l in range(horizon):
            b[l] = schedules.b_at(l)
            eps[l] = noise_vector(streams, schedules, l, zero_noise=zero_noise)
            state = step(state, spec, schedules, graphs.weight_at(l), eps[l])
            save(l + 1, state)
    except WeightUnderflow as exc:
        done = l
        rec = _record(q, y, w, sh, z, eps, rho, b, q_star, clock, seed, graphs, done, False)
        exc.record = rec
        raise
    return _record(q, y, w, sh, z, eps, rho, b, q_star, clock, seed, graphs, done, True)


def _record(q, y, w, sh, z, eps, rho, b, q_star, clock, seed, graphs, done, ok):
    k = done + 1
    err = None
    if q_star is not None:
        err = np.linalg.norm(q[:k] - np.asarray(q_star, dtype=float), axis=1)
    return RunRecord(q[:k], y[:k], w[:k], sh[:k], z[:k], eps[:done], rho[:done], b[:done],
                     err, clock[:k], seed, graphs.period, ok)


@dataclass
class CompactFormReport:
    max_z_residual: float
    max_sigma_residual: float
    max_weight_residual: float
    worst_iteration: int

    @property
    def max_residual(self) -> float:
        return max(self.max_z_residual, self.max_sigma_residual, self.max_weight_residual)


def compact_form_check(rec: RunRecord, spec: GameSpec, graphs: GraphSchedule) -> CompactFormReport:
    """Recompute the stacked recursions from the logged inputs.

    ``z(l+1) = B(l) (sigma_hat(l) + eps(l))``,
    ``sigma_hat(l+1) = rho(l) z(l+1) + phi(l+1) - phi(l)`` and
    ``w_hat(l+1) = B(l) w_hat(l)``, evaluated as whole-matrix products over
    the horizon rather than player by player.
    """
    T = rec.noise.shape[0]
    if T == 0:
        return CompactFormReport(0.0, 0.0, 0.0, 0)
    Bs = np.stack([graphs.weight_at(l) for l in range(T)])
    z_re = np.einsum("lij,lj->li", Bs, rec.sigma_hat[:T] + rec.noise)
    phi = spec.phi_c * rec.q + spec.phi_d
    sig_re = rec.rho[:, None] * z_re + phi[1:] - phi[:-1]
    w_re = np.einsum("lij,lj->li", Bs, rec.w_hat[:T])
    rz = np.abs(z_re - rec.z[1:]).max(axis=1)
    rs = np.abs(sig_re - rec.sigma_hat[1:]).max(axis=1)
    rw = np.abs(w_re - rec.w_hat[1:]).max(axis=1)
    worst = int(np.argmax(np.maximum(np.maximum(rz, rs), rw)))
    return CompactFormReport(float(rz.max()), float(rs.max()), float(rw.max()), worst)


def conservation_residuals(rec: RunRecord, spec: GameSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-round residuals of the total-mass identities.

    Returns ``(sigma_res, weight_res)`` where
    ``sigma_res[l] = 1'sigma_hat(l+1) - rho(l) 1'(sigma_hat(l) + eps(l)) - 1'(phi(l+1) - phi(l))``
    and ``weight_res[l] = sum_i w_hat_i(l) - n`` for ``l = 0..horizon``.
    """
    T = rec.noise.shape[0]
    phi = spec.phi_c * rec.q + spec.phi_d
    lhs = rec.sigma_hat[1:T + 1].sum(axis=1)
    rhs = rec.rho * (rec.sigma_hat[:T] + rec.noise).sum(axis=1) + (phi[1:] - phi[:-1]).sum(axis=1)
    return lhs - rhs, rec.w_hat.sum(axis=1) - rec.n
