"""Aggregative games on interval action sets.

Each player ``i`` minimises ``J_i(q_i, sigma)`` where
``sigma = (1/N) * sum_j phi_j(q_j)`` and ``phi_j(q) = c_j * q + d_j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

__all__ = [
    "Cost",
    "QuadraticAggCost",
    "CallableCost",
    "GameSpec",
    "OracleFailure",
    "SpecInconsistency",
    "MonotonicityReport",
    "aggregate",
    "partial_gradient",
    "pseudo_gradient",
    "project",
    "solve_ne_oracle",
    "linear_ne",
    "verify_strong_monotonicity_sample",
    "load_game",
    "dump_game",
    "game_from_dict",
    "game_to_dict",
]


class OracleFailure(RuntimeError):
    """The fixed-point iteration hit its cap before reaching the tolerance."""


class SpecInconsistency(RuntimeError):
    """Fixed-point and closed-form equilibria disagree."""


class Cost(Protocol):
    """Per-player cost ``J(q_i, sigma)`` and its two partial derivatives."""

    def value(self, q_i, sigma): ...

    def d_own(self, q_i, sigma): ...

    def d_agg(self, q_i, sigma): ...


@dataclass(frozen=True)
class QuadraticAggCost:
    """``J(q, s) = q*(a*s + b1) + P0*(kappa*(1 - q/b2)**2 + I)``."""

    a: float
    b1: float
    P0: float
    kappa: float
    b2: float
    I: float = 0.0

    def __post_init__(self):
        if self.b2 == 0:
            raise ValueError("b2 must be non-zero")

    @property
    def curvature(self) -> float:
        """Second derivative in the own action at fixed aggregate."""
        return 2.0 * self.P0 * self.kappa / self.b2 ** 2

    @property
    def is_convex(self) -> bool:
        return self.P0 * self.kappa > 0

    def value(self, q_i, sigma):
        return q_i * (self.a * sigma + self.b1) + self.P0 * (
            self.kappa * (1.0 - q_i / self.b2) ** 2 + self.I)

    def d_own(self, q_i, sigma):
        return self.a * sigma + self.b1 - 2.0 * self.P0 * self.kappa / self.b2 * (1.0 - q_i / self.b2)

    def d_agg(self, q_i, sigma):
        return self.a * q_i


@dataclass(frozen=True)
class CallableCost:
    """User-supplied differentiable cost given as three callables."""

    value_fn: Callable
    d_own_fn: Callable
    d_agg_fn: Callable

    def value(self, q_i, sigma):
        return self.value_fn(q_i, sigma)

    def d_own(self, q_i, sigma):
        return self.d_own_fn(q_i, sigma)

    def d_agg(self, q_i, sigma):
        return self.d_agg_fn(q_i, sigma)


def _arr(x, n, name):
    a = np.broadcast_to(np.asarray(x, dtype=float), (n,)).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GameSpec:
    """An N-player aggregative game with affine local maps and box action sets.

    Lipschitz and monotonicity constants default to values computed from the
    costs when every cost is a :class:`QuadraticAggCost`; they must be given
    explicitly otherwise.
    """

    costs: tuple
    lo: np.ndarray
    hi: np.ndarray
    phi_c: np.ndarray = None
    phi_d: np.ndarray = None
    lipschitz_g: np.ndarray = None
    lipschitz_phi: np.ndarray = None
    monotonicity_m: float = None
    name: str = field(default="")

    def __post_init__(self):
        costs = tuple(self.costs)
        n = len(costs)
        if n < 1:
            raise ValueError("a game needs at least one player")
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("costs", costs)
        set_("lo", _arr(self.lo, n, "lo"))
        set_("hi", _arr(self.hi, n, "hi"))
        set_("phi_c", _arr(1.0 if self.phi_c is None else self.phi_c, n, "phi_c"))
        set_("phi_d", _arr(0.0 if self.phi_d is None else self.phi_d, n, "phi_d"))
        if np.any(self.lo >= self.hi):
            raise ValueError("every action interval needs lo < hi")
        quad = self.is_quadratic
        if self.lipschitz_g is None:
            if not quad:
                raise ValueError("lipschitz_g is required for non-quadratic costs")
            # g_i depends on the aggregate only through a*sigma; any positive
            # constant is valid when a == 0
            lg = np.array([abs(c.a) if c.a != 0 else 1.0 for c in costs])
        else:
            lg = self.lipschitz_g
        set_("lipschitz_g", _arr(lg, n, "lipschitz_g"))
        lp = np.abs(self.phi_c) if self.lipschitz_phi is None else self.lipschitz_phi
        set_("lipschitz_phi", _arr(lp, n, "lipschitz_phi"))
        if self.monotonicity_m is None:
            if not quad:
                raise ValueError("monotonicity_m is required for non-quadratic costs")
            set_("monotonicity_m", float(np.linalg.eigvalsh(_sym_jacobian(self)).min()))
        if np.any(self.lipschitz_g <= 0) or np.any(self.lipschitz_phi <= 0):
            raise ValueError("Lipschitz constants must be positive")
        if np.any(self.lipschitz_phi < np.abs(self.phi_c) * (1 - 1e-12)):
            raise ValueError("lipschitz_phi must dominate |phi_c|")

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def is_quadratic(self) -> bool:
        return all(isinstance(c, QuadraticAggCost) for c in self.costs)

    def phi(self, q) -> np.ndarray:
        return self.phi_c * np.asarray(q, dtype=float) + self.phi_d

    def cost(self, i: int, q) -> float:
        """``J_i`` at the full profile ``q`` (0-indexed player)."""
        return float(self.costs[i].value(q[i], aggregate(self, q)))

    def check(self) -> list[str]:
        """Human-readable violations of the standing assumptions, if any."""
        problems = []
        if self.monotonicity_m <= 0:
            problems.append(f"monotonicity constant m={self.monotonicity_m:g} is not positive")
        for i, c in enumerate(self.costs):
            if isinstance(c, QuadraticAggCost) and not c.is_convex:
                problems.append(f"player {i + 1}: P0*kappa <= 0, cost is not convex")
        return problems


def _sym_jacobian(spec: GameSpec) -> np.ndarray:
    # Jacobian of q -> col_i g_i(q_i, sigma(q)) for quadratic costs with affine phi
    n = spec.n
    a = np.array([c.a for c in spec.costs])
    jac = np.diag(np.array([c.curvature for c in spec.costs]) + a * spec.phi_c / n)
    jac += np.outer(a, spec.phi_c) / n
    return 0.5 * (jac + jac.T)


def aggregate(spec: GameSpec, q) -> float:
    """``(1/N) * sum_i phi_i(q_i)``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.n,):
        raise ValueError(f"profile has shape {q.shape}, expected ({spec.n},)")
    return float(spec.phi(q).mean())


def partial_gradient(spec: GameSpec, i: int, q_i: float, y: float) -> float:
    """Pseudo-gradient of player ``i`` (0-indexed) with the aggregate replaced by ``y``."""
    c = spec.costs[i]
    return float(c.d_own(q_i, y) + c.d_agg(q_i, y) * spec.phi_c[i] / spec.n)


def pseudo_gradient(spec: GameSpec, q, y) -> np.ndarray:
    """Vector of ``g_i(q_i, y_i)``; ``y`` may be a scalar or per-player array."""
    q = np.asarray(q, dtype=float)
    y = np.broadcast_to(np.asarray(y, dtype=float), q.shape)
    if spec.is_quadratic:
        a, b1, k2, c2 = _quad_params(spec)
        return a * y + b1 - k2 * (1.0 - q / c2) + a * q * spec.phi_c / spec.n
    return np.array([partial_gradient(spec, i, q[i], y[i]) for i in range(spec.n)])


def _quad_params(spec):
    cache = spec.__dict__.get("_quad")
    if cache is None:
        a = np.array([c.a for c in spec.costs])
        b1 = np.array([c.b1 for c in spec.costs])
        k2 = np.array([2.0 * c.P0 * c.kappa / c.b2 for c in spec.costs])
        c2 = np.array([c.b2 for c in spec.costs])
        cache = (a, b1, k2, c2)
        object.__setattr__(spec, "_quad", cache)
    return cache


def project(spec: GameSpec, i, v):
    """Clamp ``v`` onto ``[lo_i, hi_i]``; ``i`` may be an index or ``slice(None)``."""
    return np.clip(v, spec.lo[i], spec.hi[i])


def linear_ne(spec: GameSpec) -> np.ndarray:
    """Closed-form equilibrium of a quadratic game, ignoring the action bounds."""
    if not spec.is_quadratic:
        raise TypeError("closed form needs QuadraticAggCost players")
    n = spec.n
    a, b1, k2, c2 = _quad_params(spec)
    curv = k2 / c2
    c, d = spec.phi_c, spec.phi_d
    mat = np.diag(curv + a * c / n) + np.outer(a, c) / n
    rhs = k2 - b1 - a * d.sum() / n
    return np.linalg.solve(mat, rhs)


def _oracle_step(spec: GameSpec) -> float:
    if spec.is_quadratic:
        return min(1.0 / (c.curvature + abs(c.a)) for c in spec.costs)
    return 1e-2


def solve_ne_oracle(spec: GameSpec, tol: float = 1e-10, max_iter: int = 2_000_000,
                    q0=None) -> np.ndarray:
    """Nash equilibrium by projected pseudo-gradient iteration.

    Iterates ``q <- P_U[q - gamma * G(q)]`` until the implied distance to the
    fixed point, ``residual / (gamma * m)``, drops below ``tol``.  For
    quadratic games with an interior solution the answer is cross-checked
    against :func:`linear_ne`.

    Raises
    ------
    OracleFailure
        If ``max_iter`` iterations do not reach ``tol``.
    SpecInconsistency
        If the two routes disagree by more than ``10 * tol``.
    """
    gamma = _oracle_step(spec)
    m = spec.monotonicity_m if spec.monotonicity_m > 0 else 1.0
    q = (0.5 * (spec.lo + spec.hi)) if q0 is None else np.asarray(q0, dtype=float).copy()
    for _ in range(max_iter):
        g = pseudo_gradient(spec, q, aggregate(spec, q))
        nxt = np.clip(q - gamma * g, spec.lo, spec.hi)
        resid = np.max(np.abs(nxt - q))
        q = nxt
        if resid / (gamma * m) < tol:
            break
    else:
        raise OracleFailure(f"no fixed point within {max_iter} iterations "
                            f"(last residual {resid:.3e})")
    if spec.is_quadratic:
        q_lin = linear_ne(spec)
        if np.all((q_lin > spec.lo) & (q_lin < spec.hi)):
            gap = np.max(np.abs(q_lin - q))
            if gap > 10 * tol:
                raise SpecInconsistency(f"fixed point and linear solve differ by {gap:.3e}")
    return q


def fixed_point_residual(spec: GameSpec, q, gamma: float | None = None) -> float:
    gamma = _oracle_step(spec) if gamma is None else gamma
    q = np.asarray(q, dtype=float)
    g = pseudo_gradient(spec, q, aggregate(spec, q))
    return float(np.max(np.abs(q - np.clip(q - gamma * g, spec.lo, spec.hi))))


@dataclass
class MonotonicityReport:
    min_ratio: float
    m: float
    samples: int
    passed: bool


def verify_strong_monotonicity_sample(spec: GameSpec, samples: int = 1000,
                                      seed: int = 0) -> MonotonicityReport:
    """Sample ``(G(q) - G(q'))·(q - q') / |q - q'|^2`` over pairs drawn uniformly from U."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    lo, hi = spec.lo, spec.hi
    ratios = np.empty(samples)
    for k in range(samples):
        q = rng.uniform(lo, hi)
        qq = rng.uniform(lo, hi)
        dq = q - qq
        dg = pseudo_gradient(spec, q, aggregate(spec, q)) - pseudo_gradient(spec, qq, aggregate(spec, qq))
        ratios[k] = dg @ dq / (dq @ dq)
    lowest = float(ratios.min())
    return MonotonicityReport(min_ratio=lowest, m=spec.monotonicity_m, samples=samples,
                              passed=spec.monotonicity_m > 0
                              and lowest >= spec.monotonicity_m * (1 - 1e-6))


# -- game files ---------------------------------------------------------------
#
# {"name": "...", "n": 6,
#  "players": [{"a":..,"b1":..,"P0":..,"kappa":..,"b2":..,"I":..,
#               "phi_c": 1, "phi_d": 0, "lo": -20, "hi": 20}, ...],
#  "lipschitz_g": [...], "lipschitz_phi": [...], "monotonicity_m": 0.16}
# The last three keys are optional.

_PLAYER_KEYS = ("a", "b1", "P0", "kappa", "b2", "I", "phi_c", "phi_d", "lo", "hi")


def game_from_dict(d: dict) -> GameSpec:
    players = d["players"]
    if "n" in d and d["n"] != len(players):
        raise ValueError(f"n={d['n']} but {len(players)} player entries")
    costs, lo, hi, pc, pd = [], [], [], [], []
    for k, p in enumerate(players, 1):
        missing = {"a", "b1", "P0", "kappa", "b2", "lo", "hi"} - set(p)
        if missing:
            raise ValueError(f"player {k}: missing fields {sorted(missing)}")
        unknown = set(p) - set(_PLAYER_KEYS)
        if unknown:
            raise ValueError(f"player {k}: unknown fields {sorted(unknown)}")
        costs.append(QuadraticAggCost(p["a"], p["b1"], p["P0"], p["kappa"], p["b2"], p.get("I", 0.0)))
        lo.append(p["lo"])
        hi.append(p["hi"])
        pc.append(p.get("phi_c", 1.0))
        pd.append(p.get("phi_d", 0.0))
    return GameSpec(tuple(costs), lo=lo, hi=hi, phi_c=pc, phi_d=pd,
                    lipschitz_g=d.get("lipschitz_g"), lipschitz_phi=d.get("lipschitz_phi"),
                    monotonicity_m=d.get("monotonicity_m"), name=d.get("name", ""))


def game_to_dict(spec: GameSpec) -> dict:
    if not spec.is_quadratic:
        raise TypeError("only quadratic games have a file representation")
    players = []
    for i, c in enumerate(spec.costs):
        players.append({"a": c.a, "b1": c.b1, "P0": c.P0, "kappa": c.kappa, "b2": c.b2,
                        "I": c.I, "phi_c": float(spec.phi_c[i]), "phi_d": float(spec.phi_d[i]),
                        "lo": float(spec.lo[i]), "hi": float(spec.hi[i])})
    return {"name": spec.name, "n": spec.n, "players": players,
            "lipschitz_g": spec.lipschitz_g.tolist(),
            "lipschitz_phi": spec.lipschitz_phi.tolist(),
            "monotonicity_m": spec.monotonicity_m}


def load_game(path) -> GameSpec:
    return game_from_dict(json.loads(Path(path).read_text()))


def dump_game(spec: GameSpec, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(spec), indent=2) + "\n")
