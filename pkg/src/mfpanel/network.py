"""Correlation-network analysis: distance transform, minimal spanning
trees, and the topology metrics tracked through time.

The distance d = sqrt(2 (1 - rho)) maps correlation to a metric with
independence at sqrt(2); Prim's algorithm with index tie-breaking makes
the tree deterministic for any input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateDataError
from .fluctuation import FORWARD
from .rho import MIN_SEGMENTS, RhoMatrix, _rho_matrices
from .rolling import duration_to_samples, ordered_map, window_positions
from .series import Panel

RHO_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class DistanceMatrix:
    """Metric distances derived entrywise from a rho(q, s) matrix."""

    assets: tuple[str, ...]
    values: np.ndarray
    q: float
    s: int


@dataclass(frozen=True)
class MstResult:
    """A minimal spanning tree: N-1 (parent, child, weight) edges in
    insertion order, per-node degrees, and the total edge weight."""

    assets: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    degrees: np.ndarray
    total_weight: float

    def degree_of(self, asset: str) -> int:
        return int(self.degrees[self.assets.index(asset)])

    def write_edge_csv(self, path) -> None:
        pd.DataFrame(
            [{"parent": p, "child": c, "weight": w} for p, c, w in self.edges],
            columns=["parent", "child", "weight"],
        ).to_csv(path, index=False)

    def write_pajek(self, path) -> None:
        """Pajek .net interchange format: vertex list plus edge list."""
        index = {a: i + 1 for i, a in enumerate(self.assets)}
        lines = [f"*Vertices {len(self.assets)}"]
        lines += [f'{i + 1} "{a}"' for i, a in enumerate(self.assets)]
        lines.append("*Edges")
        lines += [f"{index[p]} {index[c]} {w!r}" for p, c, w in self.edges]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class NetworkMetrics:
    """Topology summary of one tree: mean pairwise hop distance, mean
    correlation over all asset pairs, and the hub's degree and identity."""

    mean_path_length: float
    mean_rho: float
    k_max: int
    hub_id: str


def distance_matrix(rho: RhoMatrix) -> DistanceMatrix:
    """Entrywise sqrt(2 (1 - rho)) with endpoint mapping 1->0, 0->sqrt(2),
    -1->2.

    Entries beyond +-(1 + tolerance) are rejected naming the pair; values
    inside the tolerance band are clamped before the transform.
    """
    if rho.q <= 0:
        raise ValueError("distance transform needs q > 0 so rho lies in [-1, 1]")
    vals = rho.values
    bad = np.abs(vals) > 1.0 + RHO_CLAMP_TOL
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"rho out of range at pair ({rho.assets[i]}, {rho.assets[j]}): {vals[i, j]!r}"
        )
    clamped = np.clip(vals, -1.0, 1.0)
    d = np.sqrt(2.0 * (1.0 - clamped))
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(rho.assets, d, rho.q, rho.s)


def mst(d: DistanceMatrix) -> MstResult:
    """Prim's algorithm over the dense distance matrix.

    Starts from the lexicographically first asset; among equally close
    frontier vertices the smaller asset index wins, and an existing parent
    is kept unless a strictly shorter edge appears.  This pins the tree
    down completely for tie-heavy inputs.
    """
    n = len(d.assets)
    if n < 2:
        raise ValueError("need at least 2 assets")
    w = d.values
    if not np.isfinite(w).all():
        raise DegenerateDataError("distance matrix contains non-finite entries")

    start = min(range(n), key=lambda i: d.assets[i])
    in_tree = np.zeros(n, dtype=bool)
    key = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    in_tree[start] = True
    key[start] = 0.0
    better = w[start] < key
    key = np.where(better, w[start], key)
    parent = np.where(better, start, parent)
    key[start] = 0.0

    edges = []
    degrees = np.zeros(n, dtype=np.int64)
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, key)
        v = int(np.argmin(masked))  # np.argmin returns the first minimum: smaller index wins ties
        u = int(parent[v])
        in_tree[v] = True
        edges.append((d.assets[u], d.assets[v], float(w[u, v])))
        degrees[u] += 1
        degrees[v] += 1
        better = ~in_tree & (w[v] < key)
        key = np.where(better, w[v], key)
        parent = np.where(better, v, parent)
    total = math.fsum(e[2] for e in edges)
    return MstResult(d.assets, tuple(edges), degrees, total)


def _adjacency(tree: MstResult) -> list[list[int]]:
    index = {a: i for i, a in enumerate(tree.assets)}
    adj = [[] for _ in tree.assets]
    for p, c, _ in tree.edges:
        adj[index[p]].append(index[c])
        adj[index[c]].append(index[p])
    return adj


def _hop_distance_total(adj: list[list[int]]) -> int:
    """Sum of hop distances over all unordered node pairs (BFS per node)."""
    n = len(adj)
    total = 0
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        total += sum(dist)
    return total // 2


def _weighted_distance_total(tree: MstResult, adj) -> float:
    index = {a: i for i, a in enumerate(tree.assets)}
    wmap = {}
    for p, c, w in tree.edges:
        wmap[(index[p], index[c])] = w
        wmap[(index[c], index[p])] = w
    n = len(adj)
    total = 0.0
    for src in range(n):
        dist = np.full(n, -1.0)
        dist[src] = 0.0
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + wmap[(u, v)]
                        nxt.append(v)
            queue = nxt
        total += float(dist.sum())
    return total / 2.0


def mst_metrics(
    tree: MstResult,
    rho: RhoMatrix,
    weighted_paths: bool = False,
    rho_edges_only: bool = False,
) -> NetworkMetrics:
    """Topology metrics of a tree plus the matrix it came from.

    The mean path length counts hops along tree edges (a weighted variant
    sits behind ``weighted_paths``); the mean correlation averages all
    n(n-1)/2 matrix pairs unless ``rho_edges_only`` restricts it to tree
    edges.  Hub ties resolve to the lexicographically first asset.
    """
    if tree.assets != rho.assets:
        raise ValueError("tree and rho matrix must cover the same assets in the same order")
    n = len(tree.assets)
    n_pairs = n * (n - 1) // 2
    adj = _adjacency(tree)
    if weighted_paths:
        mean_l = _weighted_distance_total(tree, adj) / n_pairs
    else:
        mean_l = _hop_distance_total(adj) / n_pairs

    if rho_edges_only:
        mean_rho = float(np.mean([rho.pair(p, c) for p, c, _ in tree.edges]))
    else:
        mean_rho = float(np.mean(rho.offdiagonal()))

    k_max = int(tree.degrees.max())
    hubs = [tree.assets[i] for i in np.flatnonzero(tree.degrees == k_max)]
    return NetworkMetrics(
        mean_path_length=float(mean_l), mean_rho=mean_rho, k_max=k_max, hub_id=min(hubs)
    )


@dataclass(frozen=True)
class NetworkTimeline:
    """Per-window MST metrics for every configured (q, s)."""

    window_ends: np.ndarray
    q_values: tuple[float, ...]
    s_values: tuple[int, ...]
    mean_path_length: dict
    mean_rho: dict
    k_max: dict
    hub_id: dict
    flags: tuple[str, ...]
    trees: dict | None = None  # (q, s) -> tuple of MstResult | None, when collected

    def to_csv(self, path) -> None:
        rows = []
        for i, end in enumerate(self.window_ends):
            for q in self.q_values:
                for s in self.s_values:
                    key = (q, s)
                    rows.append(
                        {
                            "window_end": int(end),
                            "q": q,
                            "s": s,
                            "mean_L": self.mean_path_length[key][i],
                            "mean_rho": self.mean_rho[key][i],
                            "k_max": self.k_max[key][i],
                            "hub_id": self.hub_id[key][i],
                        }
                    )
        pd.DataFrame(
            rows, columns=["window_end", "q", "s", "mean_L", "mean_rho", "k_max", "hub_id"]
        ).to_csv(path, index=False)


def rolling_mst(
    panel: Panel,
    window: int,
    step: int,
    q_set=(1.0, 4.0),
    s_set=(10, 60, 360),
    poly_degree: int = 2,
    direction: str = FORWARD,
    collect_trees: bool = False,
    threads: int = 1,
) -> NetworkTimeline:
    """rho matrix -> distances -> MST -> metrics in a moving window.

    Windows whose matrix has degenerate assets are flagged and carry NaN
    metrics for the affected (q, s).
    """
    if panel.kind != "return":
        raise ValueError("rolling_mst needs a return panel")
    w = duration_to_samples(window, panel.interval)
    p = duration_to_samples(step, panel.interval)
    q_set = tuple(float(q) for q in q_set)
    s_set = tuple(int(s) for s in s_set)
    worst = max(s_set)
    if w // worst < MIN_SEGMENTS:
        raise ValueError(
            f"window of {w} samples holds only {w // worst} segments of scale {worst}; "
            f"need at least {MIN_SEGMENTS}"
        )
    positions = window_positions(panel.grid.size, w, p)

    def work(pos):
        lo, hi = pos
        bounds = (int(panel.grid[lo]), int(panel.grid[hi - 1]))
        out, flag = {}, ""
        for s in s_set:
            mats = _rho_matrices(
                panel.values[lo:hi], panel.assets, list(q_set), s, poly_degree, direction, bounds
            )
            for q, mat in zip(q_set, mats):
                if mat.degenerate:
                    out[(q, s)] = (np.nan, np.nan, -1, "", None)
                    flag = "degenerate:" + ",".join(mat.degenerate)
                    continue
                tree = mst(distance_matrix(mat))
                metrics = mst_metrics(tree, mat)
                out[(q, s)] = (
                    metrics.mean_path_length,
                    metrics.mean_rho,
                    metrics.k_max,
                    metrics.hub_id,
                    tree if collect_trees else None,
                )
        return out, flag

    results = ordered_map(work, positions, threads)
    n = len(positions)
    ends = np.array([panel.grid[hi - 1] for _, hi in positions], dtype=np.int64)
    keys = [(q, s) for q in q_set for s in s_set]
    mean_l = {k: np.full(n, np.nan) for k in keys}
    mean_rho = {k: np.full(n, np.nan) for k in keys}
    k_max = {k: np.full(n, -1, dtype=np.int64) for k in keys}
    hub = {k: [""] * n for k in keys}
    trees = {k: [None] * n for k in keys} if collect_trees else None
    flags = []
    for i, (out, flag) in enumerate(results):
        flags.append(flag)
        for key, (l, r, km, h, tree) in out.items():
            mean_l[key][i] = l
            mean_rho[key][i] = r
            k_max[key][i] = km
            hub[key][i] = h
            if collect_trees:
                trees[key][i] = tree
    hub = {k: tuple(v) for k, v in hub.items()}
    if collect_trees:
        trees = {k: tuple(v) for k, v in trees.items()}
    return NetworkTimeline(ends, q_set, s_set, mean_l, mean_rho, k_max, hub, tuple(flags), trees)
