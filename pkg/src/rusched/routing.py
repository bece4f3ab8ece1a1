"""Activity-weighted minimum spanning trees and CNOT path selection.

Bottleneck (minimax) paths between any two ancillas lie on a minimum
spanning tree of the ancilla graph, so one tree serves every CNOT until the
next one is ready.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fabric import EdgeOrientation, Fabric

Edge = tuple[int, int]


class RoutingError(RuntimeError):
    pass


class ActivityTracker:
    """Busy bits of every ancilla over the last ``c`` cycles."""

    def __init__(self, num_ancillas: int, c: int = 100):
        if c < 1:
            raise ValueError("activity window must be at least one cycle")
        self.c = c
        self.n = num_ancillas
        self._ring = np.zeros((c, num_ancillas), dtype=bool)
        self.counts = np.zeros(num_ancillas, dtype=np.int64)
        self.last_cycle: int | None = None

    def record_activity(self, cycle: int, busy) -> "ActivityTracker":
        if self.last_cycle is not None and cycle <= self.last_cycle:
            raise ValueError(f"activity for cycle {cycle} already recorded")
        row = np.zeros(self.n, dtype=bool)
        if isinstance(busy, np.ndarray) and busy.dtype == bool:
            row[:] = busy
        else:
            row[list(busy)] = True
        # cycles skipped since the last call count as idle
        gap = cycle - (self.last_cycle if self.last_cycle is not None else -1) - 1
        for i in range(min(gap, self.c)):
            slot = (cycle - 1 - i) % self.c
            self.counts -= self._ring[slot]
            self._ring[slot] = False
        slot = cycle % self.c
        self.counts -= self._ring[slot]
        self._ring[slot] = row
        self.counts += row
        self.last_cycle = cycle
        return self

    def activity(self) -> np.ndarray:
        return self.counts / self.c


@dataclass
class WeightedAncillaGraph:
    num_nodes: int
    edges: list[Edge]
    weights: np.ndarray

    @classmethod
    def from_activity(cls, fabric: Fabric, activity: Sequence[float] | None = None) -> "WeightedAncillaGraph":
        edges = list(fabric.ancilla_edges())
        if activity is None:
            w = np.zeros(len(edges))
        else:
            act = np.asarray(activity, dtype=float)
            w = np.array([max(act[u], act[v]) for u, v in edges], dtype=float)
        return cls(fabric.num_ancillas, edges, w)

    def weight(self, u: int, v: int) -> float:
        return float(self.weights[self.edge_index[(min(u, v), max(u, v))]])

    @property
    def edge_index(self) -> dict[Edge, int]:
        idx = self.__dict__.get("_edge_index")
        if idx is None:
            idx = {e: i for i, e in enumerate(self.edges)}
            self.__dict__["_edge_index"] = idx
        return idx

    def with_weight(self, edge: Edge, w: float) -> "WeightedAncillaGraph":
        e = (min(edge), max(edge))
        new = WeightedAncillaGraph(self.num_nodes, self.edges, self.weights.copy())
        new.__dict__["_edge_index"] = self.edge_index
        new.weights[self.edge_index[e]] = w
        return new


@dataclass
class MstSnapshot:
    graph: WeightedAncillaGraph
    tree: set[int]                  # indices into graph.edges
    as_of_cycle: int = 0
    ready_at_cycle: int = 0
    _parent: list[int] | None = field(default=None, repr=False)
    _depth: list[int] | None = field(default=None, repr=False)
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def edges(self) -> list[Edge]:
        return [self.graph.edges[i] for i in sorted(self.tree)]

    def total_weight(self) -> float:
        return float(sum(self.graph.weights[i] for i in self.tree))

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.graph.num_nodes)]
        for i in sorted(self.tree):
            u, v = self.graph.edges[i]
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def _root(self):
        n = self.graph.num_nodes
        parent = [-1] * n
        depth = [-1] * n
        adj = self.adjacency()
        for s in range(n):
            if depth[s] >= 0:
                continue
            depth[s] = 0
            todo = deque([s])
            while todo:
                u = todo.popleft()
                for v in adj[u]:
                    if depth[v] < 0:
                        depth[v] = depth[u] + 1
                        parent[v] = u
                        todo.append(v)
        self._parent, self._depth = parent, depth

    def path(self, a: int, b: int) -> list[int]:
        key = (a, b)
        hit = self._paths.get(key)
        if hit is not None:
            return hit
        if self._parent is None:
            self._root()
        parent, depth = self._parent, self._depth
        left, right = [a], [b]
        u, v = a, b
        while depth[u] > depth[v]:
            u = parent[u]
            left.append(u)
        while depth[v] > depth[u]:
            v = parent[v]
            right.append(v)
        while u != v:
            u, v = parent[u], parent[v]
            if u < 0 or v < 0:
                raise RoutingError(f"ancillas {a} and {b} are not connected in the tree")
            left.append(u)
            right.append(v)
        out = left + right[-2::-1]
        self._paths[key] = out
        return out

    def to_dict(self) -> dict:
        return {
            "as_of_cycle": self.as_of_cycle,
            "ready_at_cycle": self.ready_at_cycle,
            "edges": [[u, v, float(self.graph.weights[self.graph.edge_index[(u, v)]])] for u, v in self.edges],
        }


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[rb] = ra
        return True


def compute_mst(g: WeightedAncillaGraph, as_of_cycle: int = 0, ready_at_cycle: int = 0) -> MstSnapshot:
    """Kruskal; equal weights are taken in edge-index order."""
    order = sorted(range(len(g.edges)), key=lambda i: (g.weights[i], i))
    dsu = _DSU(g.num_nodes)
    tree = set()
    for i in order:
        u, v = g.edges[i]
        if dsu.union(u, v):
            tree.add(i)
            if len(tree) == g.num_nodes - 1:
                break
    if len(tree) != max(0, g.num_nodes - 1):
        raise RoutingError("ancilla graph is disconnected")
    return MstSnapshot(g, tree, as_of_cycle, ready_at_cycle)


def incremental_update(snap: MstSnapshot, edge: Edge, new_weight: float) -> MstSnapshot:
    """Re-optimise the tree after one edge weight changes.

    Only two cases move the tree: a non-tree edge getting cheaper (swap it
    for the heaviest edge on the cycle it closes) and a tree edge getting
    dearer (cut it and reconnect with the lightest edge across the cut).
    """
    g = snap.graph
    e = (min(edge), max(edge))
    if e not in g.edge_index:
        raise KeyError(f"{edge} is not an ancilla edge")
    i = g.edge_index[e]
    old = g.weights[i]
    g2 = g.with_weight(e, new_weight)
    tree = set(snap.tree)
    key = lambda j: (g2.weights[j], j)
    if i in tree and new_weight > old:
        tree.discard(i)
        adj: list[list[int]] = [[] for _ in range(g.num_nodes)]
        for j in tree:
            u, v = g.edges[j]
            adj[u].append(v)
            adj[v].append(u)
        side = {e[0]}
        todo = [e[0]]
        while todo:
            u = todo.pop()
            for v in adj[u]:
                if v not in side:
                    side.add(v)
                    todo.append(v)
        cross = [j for j, (u, v) in enumerate(g.edges) if (u in side) != (v in side)]
        tree.add(min(cross, key=key))
    elif i not in tree and new_weight < old:
        nodes = snap.path(e[0], e[1])
        on_path = [g.edge_index[(min(u, v), max(u, v))] for u, v in zip(nodes, nodes[1:])]
        worst = max(on_path, key=key)
        if key(worst) > key(i):
            tree.discard(worst)
            tree.add(i)
    return MstSnapshot(g2, tree, snap.as_of_cycle, snap.ready_at_cycle)


def minimax_path(snap: MstSnapshot, a: int, b: int) -> list[int]:
    """Ancilla sequence from ``a`` to ``b`` along the tree (``[a]`` when a == b)."""
    return snap.path(a, b)


def bottleneck(snap_or_graph, nodes: Sequence[int]) -> float:
    g = snap_or_graph.graph if isinstance(snap_or_graph, MstSnapshot) else snap_or_graph
    if len(nodes) < 2:
        return 0.0
    return max(g.weight(u, v) for u, v in zip(nodes, nodes[1:]))


class MstPipeline:
    """Trees recomputed every ``k`` cycles, each usable ``tau`` cycles after
    the activity it reflects was sampled."""

    def __init__(self, fabric: Fabric, k: int, tau: int):
        if k < 1 or tau < 0:
            raise ValueError("k must be >= 1 and tau >= 0")
        self.k, self.tau = k, tau
        self.fabric = fabric
        base = WeightedAncillaGraph.from_activity(fabric)
        self.bootstrap = compute_mst(base, as_of_cycle=-1, ready_at_cycle=0)
        self.pending: deque[tuple[int, int, np.ndarray]] = deque()
        self.latest: MstSnapshot = self.bootstrap
        self.computed = 0

    def submit(self, cycle: int, activity: np.ndarray):
        self.pending.append((cycle, cycle + self.tau, np.array(activity, dtype=float)))

    def tick(self, cycle: int, activity: np.ndarray):
        if cycle % self.k == 0:
            self.submit(cycle, activity)

    @property
    def in_flight(self) -> int:
        return len(self.pending)

    def query(self, cycle: int) -> MstSnapshot:
        ready = None
        while self.pending and self.pending[0][1] <= cycle:
            ready = self.pending.popleft()
        if ready is not None:
            as_of, ready_at, act = ready
            g = WeightedAncillaGraph.from_activity(self.fabric, act)
            self.latest = compute_mst(g, as_of, ready_at)
            self.computed += 1
        return self.latest


def pipeline_query(pipeline: MstPipeline, cycle: int) -> MstSnapshot:
    return pipeline.query(cycle)


@dataclass
class BestPath:
    path: list[int]
    anc_control: int
    anc_target: int
    rotate_control: bool
    rotate_target: bool
    start_time: float
    expected_completion: float


def select_best_path(control: int, target: int, snap: MstSnapshot, free_time: Callable[[int], float],
                     fabric: Fabric, orient_control: EdgeOrientation | None = None,
                     orient_target: EdgeOrientation | None = None,
                     rotation_cycles: int = 3, cnot_cycles: int = 2) -> BestPath:
    """Pick the neighbour pair and tree path with the earliest expected finish.

    The control must meet the path with a Z edge and the target with an X
    edge; a mismatch costs an edge rotation on that qubit.
    """
    if control == target:
        raise ValueError("control and target must differ")
    oc = orient_control or fabric.orientation[control]
    ot = orient_target or fabric.orientation[target]
    best: BestPath | None = None
    for side_c, a_c in fabric.side_ancillas(control):
        r_c = oc.label(side_c) != "Z"
        for side_t, a_t in fabric.side_ancillas(target):
            r_t = ot.label(side_t) != "X"
            path = snap.path(a_c, a_t)
            busiest = max(free_time(a) for a in path)
            start = 0.0
            if r_c:
                start = max(start, free_time(a_c) + rotation_cycles)
            if r_t:
                start = max(start, free_time(a_t) + rotation_cycles)
            start = max(start, busiest)
            done = rotation_cycles * (r_c + r_t) + cnot_cycles + busiest
            if best is None or done < best.expected_completion:
                best = BestPath(path, a_c, a_t, r_c, r_t, start, done)
    if best is None:
        raise RoutingError(f"no ancilla path between qubits {control} and {target}")
    return best
