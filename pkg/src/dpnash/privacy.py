"""Per-iteration sensitivity and cumulative privacy budget."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .game import GameSpec
from .schedules import ScheduleSet, SummationReport, summation_oracle

__all__ = ["Convention", "PrivacyLedger", "sensitivity", "accumulate",
           "check_budget_summable", "ledger_for_run"]


class Convention(str, Enum):
    """How the sensitivity bound ``delta(l)`` is obtained.

    THEORETICAL: ``L2_bar * M3 * rho(l)``, an a-priori bound.
    EMPIRICAL: ``2 * L2_bar * max_i |q_i(l) - q_i(l-1)|`` from the recorded trajectory.
    """

    THEORETICAL = "theoretical"
    EMPIRICAL = "empirical"


@dataclass
class PrivacyLedger:
    """Append-only record of ``budget(l) = delta(l) / b_hat(l)``."""

    convention: Convention = Convention.EMPIRICAL
    iters: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    b_hat: list = field(default_factory=list)
    budget: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.epsilon[-1] if self.epsilon else 0.0

    def budget_at(self, l: int) -> float:
        return self.budget[self.iters.index(l)]

    def epsilon_at(self, l: int) -> float:
        """Cumulative budget over iterations ``<= l``."""
        idx = np.searchsorted(np.asarray(self.iters), l, side="right")
        return self.epsilon[idx - 1] if idx else 0.0

    def rows(self):
        return zip(self.iters, self.delta, self.b_hat, self.budget, self.epsilon)


def sensitivity(l: int, run, spec: GameSpec, s: ScheduleSet,
                convention: Convention | str = Convention.EMPIRICAL, m3: float = 1.0) -> float:
    """Sensitivity bound ``delta(l)`` for iteration ``l >= 1``.

    ``run`` is a :class:`~dpnash.seeker.RunRecord` (only its action history
    is read, and only for the empirical convention).
    """
    convention = Convention(convention)
    if l < 1:
        raise ValueError("sensitivity is undefined at l = 0 (no previous action)")
    l2_bar = float(np.max(spec.lipschitz_phi))
    if convention is Convention.THEORETICAL:
        return l2_bar * m3 * float(s.rho(l))
    if l > run.horizon:
        raise ValueError(f"run has no iteration {l}")
    return 2.0 * l2_bar * float(np.max(np.abs(run.q[l] - run.q[l - 1])))


def accumulate(ledger: PrivacyLedger, l: int, delta: float, b_hat: float) -> PrivacyLedger:
    """Append ``delta / b_hat`` for iteration ``l``; returns the same ledger."""
    if b_hat <= 0:
        raise ValueError(f"noise scale must be positive, got {b_hat}")
    if ledger.iters and l <= ledger.iters[-1]:
        raise ValueError(f"ledger is append-only; iteration {l} follows {ledger.iters[-1]}")
    inc = delta / b_hat
    ledger.iters.append(l)
    ledger.delta.append(delta)
    ledger.b_hat.append(b_hat)
    ledger.budget.append(inc)
    ledger.epsilon.append(ledger.total + inc)
    return ledger


def ledger_for_run(run, spec: GameSpec, s: ScheduleSet,
                   convention: Convention | str = Convention.EMPIRICAL,
                   m3: float = 1.0, horizon: int | None = None) -> PrivacyLedger:
    """Budget for iterations ``1..horizon`` (defaults to the run's horizon).

    The theoretical convention does not read the trajectory, so ``run`` may
    be ``None`` when ``horizon`` is given.
    """
    convention = Convention(convention)
    T = run.horizon if horizon is None else horizon
    ledger = PrivacyLedger(convention)
    for l in range(1, T + 1):
        accumulate(ledger, l, sensitivity(l, run, spec, s, convention, m3), float(s.b_hat(l)))
    return ledger


def check_budget_summable(s: ScheduleSet, tol: float = 1e-3, cap: int = 1 << 22) -> SummationReport:
    """Is ``sum rho(l) / b_hat(l)`` finite?  Certifies a finite theoretical budget."""
    return summation_oracle(lambda x: np.asarray(s.rho(x), float) / s.b_hat(x),
                            tol=tol, cap=cap, series="rho / b_hat")
