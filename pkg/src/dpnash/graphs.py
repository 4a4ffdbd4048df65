"""Time-varying directed communication graphs and push-sum weight matrices.

Nodes are 1-indexed in files and in ``Digraph.edges`` (an edge ``(j, i)``
means player ``j`` sends to player ``i``).  Self-loops are implicit and are
never stored.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Digraph",
    "GraphSchedule",
    "MixingEstimate",
    "InsufficientHorizon",
    "build_weight_matrix",
    "is_strongly_connected",
    "check_d_strong_connectivity",
    "backward_product",
    "estimate_mixing",
    "read_topology",
    "write_topology",
    "parse_topology",
    "format_topology",
]

COLUMN_SUM_TOL = 1e-12
# log-deviations below this are floating-point noise
MIXING_FLOOR = 1e-13


class InsufficientHorizon(ValueError):
    """Raised when a mixing horizon is too short to observe any decay."""


@dataclass(frozen=True)
class Digraph:
    """Directed graph on nodes ``1..n``; edges are ``(sender, receiver)``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one node, got n={self.n}")
        cleaned = set()
        for j, i in self.edges:
            j, i = int(j), int(i)
            if not (1 <= j <= self.n and 1 <= i <= self.n):
                raise ValueError(f"edge ({j}, {i}) outside 1..{self.n}")
            if j != i:
                cleaned.add((j, i))
        object.__setattr__(self, "edges", frozenset(cleaned))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Digraph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        return cls(n, frozenset((j, i) for j in range(1, n + 1)
                                for i in range(1, n + 1) if i != j))

    @classmethod
    def cycle(cls, n: int) -> "Digraph":
        return cls(n, frozenset((j, j % n + 1) for j in range(1, n + 1)))

    def in_neighbors(self, i: int) -> set[int]:
        """Senders heard by ``i``, including ``i`` itself."""
        return {j for j, k in self.edges if k == i} | {i}

    def out_neighbors(self, j: int) -> set[int]:
        """Receivers of ``j``, including ``j`` itself."""
        return {i for k, i in self.edges if k == j} | {j}

    def adjacency(self) -> np.ndarray:
        """0/1 matrix ``A[i, j] = 1`` iff ``j -> i`` (0-indexed, no loops)."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for j, i in self.edges:
            a[i - 1, j - 1] = True
        return a

    def union(self, other: "Digraph") -> "Digraph":
        if other.n != self.n:
            raise ValueError("node counts differ")
        return Digraph(self.n, self.edges | other.edges)


@dataclass(frozen=True)
class GraphSchedule:
    """Periodic sequence of digraphs; ``graph_at(l) = graphs[l % period]``."""

    graphs: tuple
    d_window: int = 1

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ValueError("schedule needs at least one graph")
        if len({g.n for g in graphs}) != 1:
            raise ValueError("all graphs in a schedule must share n")
        if self.d_window < 1:
            raise ValueError("d_window must be a positive integer")
        object.__setattr__(self, "graphs", graphs)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def period(self) -> int:
        return len(self.graphs)

    def graph_at(self, l: int) -> Digraph:
        return self.graphs[l % self.period]

    def weight_at(self, l: int) -> np.ndarray:
        return self._weights[l % self.period]

    @property
    def _weights(self) -> tuple:
        # cached on first use; the dataclass is frozen so bypass __setattr__
        try:
            return self.__dict__["_wcache"]
        except KeyError:
            w = tuple(build_weight_matrix(g) for g in self.graphs)
            for m in w:
                m.setflags(write=False)
            object.__setattr__(self, "_wcache", w)
            return w

    @classmethod
    def fixed(cls, g: Digraph) -> "GraphSchedule":
        return cls((g,), d_window=1)


@dataclass(frozen=True)
class MixingEstimate:
    """Empirical mixing summary of the backward products ``B(l:0)``.

    ``psi[k]`` is the limit column for iterations ``l`` with
    ``l % period == k``; ``deviation[l]`` is ``max_ij |B(l:0)_ij - psi_i|``.
    """

    psi: np.ndarray
    lambda_fit: float
    c1_fit: float
    delta_bar: float
    deviation: np.ndarray
    r_squared: float

    def psi_at(self, l: int) -> np.ndarray:
        return self.psi[l % len(self.psi)]

    def bound(self, l) -> np.ndarray:
        return self.c1_fit * self.lambda_fit ** np.asarray(l, dtype=float)


def build_weight_matrix(g: Digraph) -> np.ndarray:
    """Out-degree weights: ``B[i, j] = 1/|N_j^+|`` for ``j`` in ``N_i^-``.

    Every column sums to one because each sender splits its mass evenly over
    its out-neighbours (itself included).
    """
    a = g.adjacency().astype(float)
    np.fill_diagonal(a, 1.0)
    return a / a.sum(axis=0, keepdims=True)


def _reaches_all(adj: np.ndarray, start: int = 0) -> bool:
    # adj[i, j] True means j -> i
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(adj[:, j]):
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return bool(seen.all())


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other node along directed edges."""
    adj = g.adjacency()
    return _reaches_all(adj) and _reaches_all(adj.T)


def check_d_strong_connectivity(s: GraphSchedule) -> bool:
    """Check that every window of ``D`` consecutive graphs has a strongly connected union.

    Windows start at multiples of ``D``.  Because the schedule is periodic,
    window starts ``r*D`` for ``r < period`` cover every distinct window.
    """
    d = s.d_window
    for r in range(s.period):
        start = r * d
        union = s.graph_at(start)
        for k in range(start + 1, start + d):
            union = union.union(s.graph_at(k))
        if not is_strongly_connected(union):
            return False
    return True


def backward_product(s: GraphSchedule, l: int, r: int) -> np.ndarray:
    """Return ``B(l) B(l-1) ... B(r)``."""
    if l < r or r < 0:
        raise ValueError(f"invalid range: need l >= r >= 0, got l={l}, r={r}")
    prod = s.weight_at(r).copy()
    for k in range(r + 1, l + 1):
        prod = s.weight_at(k) @ prod
    return prod


def estimate_mixing(s: GraphSchedule, horizon: int) -> MixingEstimate:
    """Fit ``max_ij |B(l:0)_ij - psi_i| <= c1 * lambda**l`` over ``l <= horizon``.

    ``lambda`` comes from ordinary least squares on the log-deviations above
    ``MIXING_FLOOR``; ``c1`` is then raised to the smallest value that makes
    the fitted curve an envelope of every observed deviation.
    """
    if horizon < 4 * s.d_window:
        raise InsufficientHorizon(
            f"horizon {horizon} < 4*D = {4 * s.d_window}; decay is not observable")
    n, p = s.n, s.period
    prods = np.empty((horizon + 1, n, n))
    prod = np.eye(n)
    for l in range(horizon + 1):
        prod = s.weight_at(l) @ prod
        prods[l] = prod
    # latest product per phase is the best available limit
    psi = np.empty((p, n))
    for k in range(p):
        last = horizon - ((horizon - k) % p)
        if last < 0:
            last = k
        psi[k] = prods[last].mean(axis=1)
    psi /= psi.sum(axis=1, keepdims=True)

    phase = np.arange(horizon + 1) % p
    dev = np.abs(prods - psi[phase][:, :, None]).max(axis=(1, 2))
    delta_bar = float(prods.sum(axis=2).min())

    ls = np.arange(horizon + 1, dtype=float)
    mask = dev > MIXING_FLOOR
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(ls[mask], np.log(dev[mask]), 1)
        resid = np.log(dev[mask]) - (slope * ls[mask] + intercept)
        ss_tot = np.sum((np.log(dev[mask]) - np.log(dev[mask]).mean()) ** 2)
        r2 = 1.0 - resid @ resid / ss_tot if ss_tot > 0 else 1.0
        lam = float(np.exp(slope))
    else:
        # already mixed (e.g. complete graph): any rate fits
        lam, r2 = 0.5, 1.0
    lam = min(max(lam, 1e-12), 1 - 1e-12)
    ratio = dev / lam ** ls
    c1 = float(max(np.exp(intercept) if mask.sum() >= 2 else 0.0,
                   ratio.max(), 1e-300))
    return MixingEstimate(psi=psi, lambda_fit=lam, c1_fit=c1,
                          delta_bar=delta_bar, deviation=dev, r_squared=float(r2))


# -- topology files ---------------------------------------------------------
#
#   # comment
#   n 6 period 4 D 4
#   graph 1
#   edge 1 2
#   ...
#
# Graph blocks are numbered 1..period and may appear in any order; a block
# with no edge lines is an edgeless graph.  Self-loops are never listed.

def parse_topology(text: str, source: str = "<string>") -> GraphSchedule:
    header = None
    blocks: dict[int, list[tuple[int, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        where = f"{source}:{lineno}"
        try:
            if tok[0] == "n":
                if len(tok) != 6 or tok[2] != "period" or tok[4] != "D":
                    raise ValueError("header must read 'n <count> period <p> D <d>'")
                header = (int(tok[1]), int(tok[3]), int(tok[5]))
            elif tok[0] == "graph":
                if header is None:
                    raise ValueError("'graph' before header")
                current = int(tok[1])
                if not 1 <= current <= header[1]:
                    raise ValueError(f"graph index {current} outside 1..{header[1]}")
                if current in blocks:
                    raise ValueError(f"duplicate graph {current}")
                blocks[current] = []
            elif tok[0] == "edge":
                if current is None:
                    raise ValueError("'edge' outside a graph block")
                if len(tok) != 3:
                    raise ValueError("edge line must read 'edge <j> <i>'")
                j, i = int(tok[1]), int(tok[2])
                if not (1 <= j <= header[0] and 1 <= i <= header[0]):
                    raise ValueError(f"edge ({j}, {i}) outside 1..{header[0]}")
                blocks[current].append((j, i))
            else:
                raise ValueError(f"unknown keyword {tok[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{where}: {exc}") from None
    if header is None:
        raise ValueError(f"{source}: missing header line")
    n, period, d = header
    missing = set(range(1, period + 1)) - set(blocks)
    if missing:
        raise ValueError(f"{source}: missing graph blocks {sorted(missing)}")
    graphs = tuple(Digraph.from_edges(n, blocks[k]) for k in range(1, period + 1))
    return GraphSchedule(graphs, d_window=d)


def format_topology(s: GraphSchedule) -> str:
    lines = [f"n {s.n} period {s.period} D {s.d_window}"]
    for k, g in enumerate(s.graphs, 1):
        lines.append(f"graph {k}")
        lines.extend(f"edge {j} {i}" for j, i in sorted(g.edges))
    return "\n".join(lines) + "\n"


def read_topology(path) -> GraphSchedule:
    path = Path(path)
    return parse_topology(path.read_text(), source=str(path))


def write_topology(s: GraphSchedule, path) -> None:
    Path(path).write_text(format_topology(s))


def schedule_from_edge_lists(n: int, graphs: Sequence[Sequence[Sequence[int]]],
                             d_window: int) -> GraphSchedule:
    return GraphSchedule(tuple(Digraph.from_edges(n, map(tuple, g)) for g in graphs),
                         d_window=d_window)
