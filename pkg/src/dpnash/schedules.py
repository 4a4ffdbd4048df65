"""Step-size, weakening-factor, momentum and noise-scale schedules.

Every schedule is a closed-form descriptor ``{"family": ..., "params": {...}}``
so a run is reproducible from its config alone.  Families:

``constant``          ``value``
``rational-power``    ``scale / (offset + c * l**p)``   (offset 1, scale 1 by default)
``gated-exponential`` ``scale / (1 + c * r**(a*l + d))``  (scale 1 by default)
``affine``            ``c * l + d``
``geometric``         ``scale * r**l``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Schedule",
    "ScheduleSet",
    "SummationReport",
    "AssumptionReport",
    "CheckResult",
    "summation_oracle",
    "eval_schedules",
    "validate_assumptions",
    "remark5_preset",
    "section6_preset",
    "SQRT2_OVER_2",
]

SQRT2_OVER_2 = math.sqrt(2.0) / 2.0
WINDOW = 64

_FAMILIES = {
    "constant": ({"value"}, {}),
    "rational-power": ({"c", "p"}, {"offset": 1.0, "scale": 1.0}),
    "gated-exponential": ({"c", "r", "a", "d"}, {"scale": 1.0}),
    "affine": ({"c", "d"}, {}),
    "geometric": ({"r"}, {"scale": 1.0}),
}


@dataclass(frozen=True)
class Schedule:
    """A named closed-form sequence ``l -> value``, vectorised over ``l``."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown schedule family {self.family!r}; "
                             f"expected one of {sorted(_FAMILIES)}")
        required, defaults = _FAMILIES[self.family]
        missing = required - set(self.params)
        if missing:
            raise ValueError(f"{self.family}: missing params {sorted(missing)}")
        unknown = set(self.params) - required - set(defaults)
        if unknown:
            raise ValueError(f"{self.family}: unknown params {sorted(unknown)}")
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    def _p(self, key):
        return self.params.get(key, _FAMILIES[self.family][1].get(key))

    def __call__(self, l):
        l = np.asarray(l, dtype=float)
        p = self._p
        with np.errstate(over="ignore", divide="ignore"):
            if self.family == "constant":
                out = np.full_like(l, p("value"))
            elif self.family == "rational-power":
                out = p("scale") / (p("offset") + p("c") * l ** p("p"))
            elif self.family == "gated-exponential":
                out = p("scale") / (1.0 + p("c") * p("r") ** (p("a") * l + p("d")))
            elif self.family == "affine":
                out = p("c") * l + p("d")
            else:
                out = p("scale") * p("r") ** l
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d) -> "Schedule":
        if isinstance(d, (int, float)):
            return cls("constant", {"value": d})
        try:
            return cls(d["family"], dict(d.get("params", {})))
        except (KeyError, TypeError):
            raise ValueError(f"schedule descriptor needs 'family' and 'params': {d!r}") from None

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls("constant", {"value": value})


def _per_player(x, n, name):
    if isinstance(x, (list, tuple)):
        if len(x) != n:
            raise ValueError(f"{name}: expected {n} entries, got {len(x)}")
        return tuple(x)
    return (x,) * n


@dataclass(frozen=True)
class ScheduleSet:
    """Per-player step sizes, momentum and noise scales plus the shared weakening factor."""

    mu: tuple
    rho: Schedule
    beta: tuple
    noise_b: tuple

    def __post_init__(self):
        n = len(self.mu)
        if len(self.beta) != n or len(self.noise_b) != n:
            raise ValueError("mu, beta and noise_b must have one entry per player")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @classmethod
    def uniform(cls, n: int, mu: Schedule, rho: Schedule, beta: float,
                noise_b: Schedule) -> "ScheduleSet":
        return cls((mu,) * n, rho, (beta,) * n, (noise_b,) * n)

    @property
    def n(self) -> int:
        return len(self.mu)

    def mu_at(self, l) -> np.ndarray:
        """Step sizes, shape ``(n,)`` for scalar ``l`` or ``(n, len(l))``."""
        return np.array([m(l) for m in self.mu])

    def rho_at(self, l):
        return self.rho(l)

    def b_at(self, l) -> np.ndarray:
        return np.array([b(l) for b in self.noise_b])

    def beta_vec(self) -> np.ndarray:
        return np.array(self.beta)

    def b_hat(self, l):
        """Smallest noise scale across players."""
        return self.b_at(l).min(axis=0)

    def b_check(self, l):
        """Largest noise scale across players."""
        return self.b_at(l).max(axis=0)

    def mu_bar(self, l):
        return self.mu_at(l).max(axis=0)

    def mu_under(self, l):
        return self.mu_at(l).min(axis=0)

    def to_dict(self) -> dict:
        def one(seq):
            if all(x == seq[0] for x in seq):
                v = seq[0]
                return v.to_dict() if isinstance(v, Schedule) else v
            return [v.to_dict() if isinstance(v, Schedule) else v for v in seq]
        return {"mu": one(self.mu), "rho": self.rho.to_dict(),
                "beta": one(self.beta), "noise_b": one(self.noise_b)}

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "ScheduleSet":
        missing = {"mu", "rho", "beta", "noise_b"} - set(d)
        if missing:
            raise ValueError(f"schedules: missing {sorted(missing)}")

        def many(x, name):
            items = _per_player(x, n, name)
            return tuple(Schedule.from_dict(v) for v in items)

        return cls(many(d["mu"], "mu"), Schedule.from_dict(d["rho"]),
                   tuple(float(b) for b in _per_player(d["beta"], n, "beta")),
                   many(d["noise_b"], "noise_b"))


def eval_schedules(s: ScheduleSet, i: int, l: int) -> tuple[float, float, float, float]:
    """``(mu_i(l), rho(l), beta_i, b_i(l))`` for player ``i`` (0-indexed)."""
    if l < 0:
        raise ValueError("iteration must be non-negative")
    return float(s.mu[i](l)), float(s.rho(l)), s.beta[i], float(s.noise_b[i](l))


def remark5_preset(n: int = 1) -> ScheduleSet:
    """Step size, weakening factor and noise bound from the worked example.

    ``mu(l) = 1/(1 + 1e-4 * 2**(0.01 l + 2))``, ``rho(l) = 1/(1 + 0.1 l**2.01)``,
    ``b(l) = l + 2``, momentum 0.6.
    """
    mu = Schedule("gated-exponential", {"c": 1e-4, "r": 2.0, "a": 0.01, "d": 2.0})
    rho = Schedule("rational-power", {"c": 0.1, "p": 2.01})
    b = Schedule("affine", {"c": 1.0, "d": 2.0})
    return ScheduleSet.uniform(n, mu, rho, 0.6, b)


def section6_preset(n: int = 6) -> ScheduleSet:
    """Same family as :func:`remark5_preset`; the six-player scenario uses it verbatim."""
    return remark5_preset(n)


# -- summation ----------------------------------------------------------------

@dataclass
class SummationReport:
    """Outcome of :func:`summation_oracle`.

    ``estimate = partial_sum + tail_estimate``; ``tail_bound`` bounds the
    error still carried by ``estimate``.
    """

    series: str
    partial_sum: float
    tail_estimate: float
    tail_bound: float
    converged: bool
    status: str  # "converged" | "diverged" | "inconclusive"
    terms_used: int
    exponent: float = float("nan")

    @property
    def estimate(self) -> float:
        return self.partial_sum + self.tail_estimate


def _local_exponent(t_hi, t_lo, l_hi, l_lo):
    # decay exponent p in t ~ l**-p between two sample points
    if t_hi <= 0 or t_lo <= 0:
        return math.inf if t_hi == 0 else -math.inf
    return 0.0 - math.log(t_hi / t_lo) / math.log(l_hi / l_lo)


def _power_tail(t_last, last, p):
    # sum_{l > L} t_L (L/l)^p  <=  t_L * L / (p - 1)
    if t_last == 0:
        return 0.0
    if p <= 1:
        return math.inf
    return t_last * last / (p - 1)


def summation_oracle(term: Callable, tol: float = 1e-3, cap: int = 1 << 22,
                     series: str = "", start: int = 0) -> SummationReport:
    """Sum ``term(l)`` for ``l >= start`` with a tail estimate.

    ``term`` must be vectorised over numpy arrays, non-negative and eventually
    non-increasing.  Terms are summed in doubling blocks.  At each checkpoint
    ``L`` the decay exponent ``p`` of ``t ~ l**-p`` is measured over the last
    ``WINDOW`` terms; for ``p > 1`` the tail is ``t(L) * L / (p - 1)``, which
    dominates a geometric tail as well.  The uncertainty of ``partial + tail``
    is the larger of twice its change since the previous checkpoint (an
    estimate whose error shrinks like ``1/L`` moves by exactly its remaining
    error per doubling) and the change in the tail when ``p`` is measured
    over ``[L/2, L]`` instead, plus ``t(L)``.  Converged when that uncertainty is below
    ``tol * max(1, |estimate|)``.  At ``cap`` a series whose exponent is at
    most one is reported diverged; otherwise inconclusive.
    """
    total = 0.0
    nxt = start
    checkpoint = start + 2 * WINDOW
    p = float("nan")
    tail = 0.0
    bound = math.inf
    prev_est = None
    while True:
        stop = min(checkpoint, cap + start)
        chunk = np.asarray(term(np.arange(nxt, stop, dtype=float)), dtype=float)
        if np.any(np.isnan(chunk)):
            raise ValueError(f"{series or 'term'}: NaN encountered before l={stop}")
        if np.any(chunk < 0):
            raise ValueError(f"{series or 'term'}: negative term before l={stop}")
        total += math.fsum(chunk)
        nxt = stop
        last = stop - 1
        mid = (start + last) // 2
        t_last, t_win, t_mid = (float(v) for v in np.asarray(
            term(np.array([last, last - WINDOW, mid], dtype=float)), dtype=float))
        l_last = max(last, 1)
        p = _local_exponent(t_last, t_win, l_last, max(last - WINDOW, 1))
        p_wide = _local_exponent(t_last, t_mid, l_last, max(mid, 1))
        tail = _power_tail(t_last, l_last, p)
        est = total + tail
        if math.isfinite(tail) and t_last <= t_win:
            bound = abs(_power_tail(t_last, l_last, p_wide) - tail) + t_last
            if prev_est is not None and math.isfinite(prev_est):
                bound = max(bound, 2.0 * abs(est - prev_est) + t_last)
            else:
                bound = math.inf
        else:
            bound = math.inf
        if bound < tol * max(1.0, abs(est)):
            return SummationReport(series, total, tail, bound, True, "converged",
                                   nxt - start, p)
        prev_est = est
        if nxt >= cap + start:
            break
        checkpoint = start + 2 * (checkpoint - start)
    status = "diverged" if p <= 1 else "inconclusive"
    return SummationReport(series, total, tail if math.isfinite(tail) else math.inf,
                           bound, False, status, nxt - start, p)


# -- assumption checks --------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    summation: SummationReport | None = None


@dataclass
class AssumptionReport:
    checks: list
    notes: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        out += [f"[NOTE] {n}" for n in self.notes]
        return out


def _sum_check(name, term, tol, cap) -> CheckResult:
    try:
        rep = summation_oracle(term, tol=tol, cap=cap, series=name)
    except ValueError as exc:
        return CheckResult(name, False, str(exc))
    if rep.converged:
        detail = f"sum ~ {rep.estimate:.6g} (+/- {rep.tail_bound:.2g}, {rep.terms_used} terms)"
    else:
        detail = f"{rep.status} after {rep.terms_used} terms (partial {rep.partial_sum:.6g}, exponent {rep.exponent:.3g})"
    return CheckResult(name, rep.converged, detail, rep)


def validate_assumptions(s: ScheduleSet, horizon: int = 10_000, tol: float = 1e-2,
                         cap: int = 1 << 22) -> AssumptionReport:
    """Numerically check the step-size, weakening-factor and momentum conditions.

    Range and monotonicity are checked pointwise on ``0..horizon``; the
    summability conditions go through :func:`summation_oracle`.  Whether
    ``sum mu`` is finite is reported as a note, because the convergence
    argument for the algorithm also relies on the same sum being infinite.
    """
    if horizon < 100:
        raise ValueError("horizon must be at least 100")
    l = np.arange(horizon + 1, dtype=float)
    mu = s.mu_at(l)
    rho = np.asarray(s.rho(l), dtype=float)
    checks = []

    in_range = bool(np.all((mu > 0) & (mu < 1)))
    mono = bool(np.all(np.diff(mu, axis=1) <= 0))
    checks.append(CheckResult("A5.1 mu in (0,1), non-increasing", in_range and mono,
                              f"range {'ok' if in_range else 'violated'}, "
                              f"monotone {'ok' if mono else 'violated'}"))

    def mu_sq(x):
        return (s.mu_at(x) ** 2).max(axis=0)

    def mu_over_rho_sq(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return ((s.mu_at(x) / s.rho(x)) ** 2).max(axis=0)

    def spread(x):
        m = s.mu_at(x)
        return m.max(axis=0) - m.min(axis=0)

    def rho_b(x):
        return s.rho(x) * s.b_check(x)

    try:
        sum_mu = summation_oracle(lambda x: s.mu_at(x).max(axis=0), tol=tol, cap=cap,
                                  series="sum mu")
    except ValueError as exc:
        sum_mu = SummationReport("sum mu", math.nan, math.nan, math.inf, False, str(exc), 0)
    checks.append(_sum_check("A5.2 sum mu_i^2 < inf", mu_sq, tol, cap))
    checks.append(_sum_check("A5.3 sum (mu_bar - mu_under) < inf", spread, tol, cap))
    checks.append(_sum_check("A5.4 sum (mu_i/rho)^2 < inf", mu_over_rho_sq, tol, cap))

    rho_ok = bool(np.all((rho > 0) & (rho < 1)) and np.all(np.diff(rho) <= 0))
    if not rho_ok and rho[0] == 1.0 and np.all(rho[1:] < 1) and np.all(np.diff(rho) <= 0):
        rho_detail = "rho(0) = 1 sits on the boundary; rho(l) < 1 for l >= 1"
        rho_ok = True
    else:
        rho_detail = "ok" if rho_ok else "violated"
    checks.append(CheckResult("A6.1 rho in (0,1), non-increasing", rho_ok, rho_detail))
    checks.append(_sum_check("A6.2 sum rho < inf", lambda x: np.asarray(s.rho(x), float), tol, cap))
    checks.append(_sum_check("A6.3 sum rho * b_check < inf", rho_b, tol, cap))

    beta = s.beta_vec()
    beta_ok = bool(np.all((beta > 0) & (beta < SQRT2_OVER_2)))
    checks.append(CheckResult("beta in (0, sqrt(2)/2)", beta_ok,
                              f"beta = {sorted(set(beta.tolist()))}"))

    notes = []
    if sum_mu.converged:
        notes.append(f"sum mu converges (~{sum_mu.estimate:.6g}), satisfying the "
                     "step-size summability condition, whereas the convergence "
                     "argument needs sum mu = inf; the two conditions are contradictory")
    else:
        notes.append(f"sum mu {sum_mu.status} (partial {sum_mu.partial_sum:.6g}); the "
                     "step-size summability condition is not met")
    return AssumptionReport(checks, notes)
