"""Regenerate the bundled 10-player density topologies.

Each schedule has period 4.  Per-phase edge counts are chosen so that the
densities (edges / 90) span the three published bands: 20/90 in every
phase, 36/90 to 49/90, and 50/90 to 79/90.  Edges are drawn uniformly with
a fixed seed and redrawn until the union of the period is strongly
connected.

    python scripts/make_density_topologies.py src/dpnash/data/topologies
"""

import sys
from pathlib import Path

import numpy as np

from dpnash.graphs import (Digraph, GraphSchedule, check_d_strong_connectivity,
                           write_topology)

COUNTS = {"low": (20, 20, 20, 20), "mid": (36, 40, 45, 49), "high": (50, 60, 70, 79)}
N = 10


def make(counts, rng):
    pairs = [(j, i) for j in range(1, N + 1) for i in range(1, N + 1) if i != j]
    while True:
        graphs = []
        for c in counts:
            idx = rng.choice(len(pairs), size=c, replace=False)
            graphs.append(Digraph.from_edges(N, [pairs[k] for k in idx]))
        sched = GraphSchedule(tuple(graphs), d_window=len(counts))
        if check_d_strong_connectivity(sched):
            return sched


def main(out):
    out = Path(out)
    rng = np.random.default_rng(20240610)
    for level, counts in COUNTS.items():
        write_topology(make(counts, rng), out / f"density-10p-{level}.txt")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/dpnash/data/topologies")
