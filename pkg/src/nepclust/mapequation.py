"""Two-level map equation on undirected weighted graphs.

Visit rates are weighted degrees over ``2W`` and a module's exit rate is its
cut weight over ``2W``. The codelength of a partition is::

    L = plogp(sum q_m) - 2 sum plogp(q_m) - sum plogp(p_a) + sum plogp(q_m + p_m)

with ``plogp(x) = x log2 x``. :func:`optimize` minimizes it with greedy
local moves and module aggregation.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

logger = logging.getLogger(__name__)

MERGE_RULES = ("mean", "max", "sum")
MIN_IMPROVEMENT = 1e-12
BRUTE_FORCE_MAX_N = 10


def plogp(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _plogp(x):
    return x * np.log2(x) if x > 0 else 0.0


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph stored as unique edges ``u < v`` with positive weights."""

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_edges(cls, n, edges):
        """Build from ``(a, b, w)`` triples; each undirected pair must appear once."""
        if not edges:
            z = np.zeros(0, dtype=np.int64)
            return cls(int(n), z, z, np.zeros(0))
        a, b, w = (np.asarray(c) for c in zip(*edges))
        return cls.from_arrays(n, a, b, w)

    @classmethod
    def from_arrays(cls, n, a, b, w):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if a.size and (min(a.min(), b.min()) < 0 or max(a.max(), b.max()) >= n):
            raise ParameterError(f"edge endpoint out of range for n={n}")
        if np.any(a == b):
            raise ParameterError("self-loops are not allowed")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("edge weights must be finite and > 0")
        u, v = np.minimum(a, b), np.maximum(a, b)
        order = np.lexsort((v, u))
        u, v, w = u[order], v[order], w[order]
        if u.size > 1 and np.any((u[1:] == u[:-1]) & (v[1:] == v[:-1])):
            raise ParameterError("duplicate undirected edge")
        return cls(int(n), u, v, w)

    @property
    def total_weight(self):
        return float(self.w.sum())

    def degrees(self):
        return np.bincount(self.u, self.w, minlength=self.n) + np.bincount(self.v, self.w, minlength=self.n)

    def adjacency(self):
        """Per-node ``{neighbor: weight}``, each edge mirrored in both lists."""
        adj = [dict() for _ in range(self.n)]
        for a, b, w in zip(self.u.tolist(), self.v.tolist(), self.w.tolist()):
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def scaled(self, factor):
        return WeightedGraph(self.n, self.u, self.v, self.w * factor)


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray
    codelength: float

    @property
    def num_clusters(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(f"{int(v)}\n" for v in self.labels)


def canonical_labels(labels):
    """Relabel to ``0, 1, ...`` in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv.ravel()]


def build_transition(des, der_accepted=None, n=None, merge_rule="mean"):
    """Merge directed edge sets into one undirected :class:`WeightedGraph`.

    When both directions of a pair are present (possibly from different
    sets) they combine by ``merge_rule``: the mean of the present weights by
    default, or their max or sum.
    """
    if merge_rule not in MERGE_RULES:
        raise ParameterError(f"merge_rule must be one of {MERGE_RULES}, got {merge_rule!r}")
    sets = [des] + ([der_accepted] if der_accepted is not None else [])
    a = np.concatenate([s.i for s in sets])
    b = np.concatenate([s.j for s in sets])
    w = np.concatenate([s.w for s in sets])
    if n is None:
        n = int(max(a.max(), b.max()) + 1) if a.size else 0
    if a.size == 0:
        return WeightedGraph.from_edges(n, [])
    if min(a.min(), b.min()) < 0 or max(a.max(), b.max()) >= n:
        raise ParameterError(f"edge endpoint out of range for n={n}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ParameterError("edge weights must be finite and > 0")
    if np.any(a == b):
        raise ParameterError("self-loops are not allowed")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys, inv = np.unique(lo * n + hi, return_inverse=True)
    inv = inv.ravel()
    if merge_rule == "max":
        merged = np.full(keys.size, -np.inf)
        np.maximum.at(merged, inv, w)
    else:
        merged = np.bincount(inv, w, minlength=keys.size)
        if merge_rule == "mean":
            merged = merged / np.bincount(inv, minlength=keys.size)
    return WeightedGraph(int(n), keys // n, keys % n, merged)


def codelength(g, labels):
    """Map-equation codelength in bits per step of ``labels`` on ``g``."""
    labels = np.asarray(labels)
    if labels.shape != (g.n,):
        raise ParameterError(f"expected {g.n} labels, got shape {labels.shape}")
    W = g.total_weight
    if W <= 0:
        return 0.0
    T = 2.0 * W
    lab = canonical_labels(labels)
    m = int(lab.max()) + 1
    p = g.degrees() / T
    cross = lab[g.u] != lab[g.v]
    cut = np.bincount(lab[g.u[cross]], g.w[cross], minlength=m) + np.bincount(lab[g.v[cross]], g.w[cross], minlength=m)
    q = cut / T
    pm = np.bincount(lab, p, minlength=m)
    return float(plogp(q.sum()) - 2.0 * plogp(q).sum() - plogp(p).sum() + plogp(q + pm).sum())


class _Level:
    """Local-move state for one aggregation level; all quantities in weight units."""

    def __init__(self, adj, flow, ext, T):
        self.adj = adj
        self.flow = flow
        self.ext = ext
        self.T = T
        m = len(adj)
        self.module = list(range(m))
        self.mod_flow = list(flow)
        self.mod_cut = list(ext)
        self.mod_size = [1] * m
        self.sum_cut = float(sum(ext))
        self.free = []

    def _delta(self, v, A, B, wA, wB):
        T = self.T
        cut, flow = self.mod_cut, self.mod_flow
        empties = self.mod_size[A] == 1
        cA, fA = cut[A], flow[A]
        cB, fB = (cut[B], flow[B]) if B is not None else (0.0, 0.0)
        cA2 = 0.0 if empties else cA - self.ext[v] + 2.0 * wA
        fA2 = 0.0 if empties else fA - self.flow[v]
        cB2 = cB + self.ext[v] - 2.0 * wB
        fB2 = fB + self.flow[v]
        se2 = self.sum_cut - cA - cB + cA2 + cB2
        d = _plogp(se2 / T) - _plogp(self.sum_cut / T)
        d -= 2.0 * (_plogp(cA2 / T) + _plogp(cB2 / T) - _plogp(cA / T) - _plogp(cB / T))
        d += _plogp((cA2 + fA2) / T) + _plogp((cB2 + fB2) / T) - _plogp((cA + fA) / T) - _plogp((cB + fB) / T)
        return d, (cA2, fA2, cB2, fB2, se2)

    def move_pass(self, order, on_move=None):
        moved = 0
        module = self.module
        for v in order:
            A = module[v]
            links = {}
            for nb, w in self.adj[v].items():
                M = module[nb]
                links[M] = links.get(M, 0.0) + w
            wA = links.get(A, 0.0)
            best_d, best_B, best_state = -MIN_IMPROVEMENT, None, None
            for B in sorted(links):
                if B == A:
                    continue
                d, state = self._delta(v, A, B, wA, links[B])
                if d < best_d:
                    best_d, best_B, best_state = d, B, state
            if self.mod_size[A] > 1:
                d, state = self._delta(v, A, None, wA, 0.0)
                if d < best_d:
                    best_d, best_B, best_state = d, "new", state
            if best_B is None:
                continue
            if best_B == "new":
                best_B = self.free.pop()
            cA2, fA2, cB2, fB2, se2 = best_state
            self.mod_cut[A], self.mod_flow[A] = cA2, fA2
            self.mod_cut[best_B], self.mod_flow[best_B] = cB2, fB2
            self.mod_size[A] -= 1
            self.mod_size[best_B] += 1
            if self.mod_size[A] == 0:
                self.free.append(A)
                self.free.sort(reverse=True)
            self.sum_cut = se2
            module[v] = best_B
            moved += 1
            if on_move is not None:
                on_move(best_d)
        return moved


def _aggregate(adj, flow, ext, module):
    ids = canonical_labels(module)
    m = int(ids.max()) + 1
    new_flow = np.bincount(ids, flow, minlength=m).tolist()
    new_adj = [dict() for _ in range(m)]
    for a, nbrs in enumerate(adj):
        A = ids[a]
        row = new_adj[A]
        for b, w in nbrs.items():
            B = ids[b]
            if A != B:
                row[B] = row.get(B, 0.0) + w
    new_ext = [float(sum(row.values())) for row in new_adj]
    return new_adj, new_flow, new_ext, ids


def optimize(g, seed=None, trace=None, check=False):
    """Greedy map-equation minimization.

    Starting from singletons, nodes are visited in ascending order (or a
    seeded shuffle when ``seed`` is given) and moved to the neighboring
    module, or a fresh singleton, that lowers the codelength most; ties go
    to the lowest module id. Only moves improving by more than
    ``MIN_IMPROVEMENT`` are taken. When a pass makes no move, modules are
    collapsed into super-nodes and the process repeats; it ends when a level
    makes no move.

    ``trace``, if a list, receives the codelength after every accepted move.
    ``check=True`` recomputes the codelength from scratch after each move and
    raises if the incremental value drifts.
    """
    n = g.n
    W = g.total_weight
    if W <= 0:
        labels = np.arange(n, dtype=np.int64)
        return Partition(labels, 0.0)
    T = 2.0 * W
    deg = g.degrees()
    adj = g.adjacency()
    flow = deg.tolist()
    ext = deg.tolist()
    assign = np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed) if seed is not None else None
    current = codelength(g, assign)
    level_no = 0
    while True:
        level = _Level(adj, flow, ext, T)
        running = [current]

        def on_move(d, level=level):
            running[0] += d
            if trace is not None:
                trace.append(running[0])
            if check:
                fresh = codelength(g, np.asarray(level.module)[assign])
                if abs(fresh - running[0]) > 1e-9:
                    raise AssertionError(f"incremental codelength {running[0]} drifted from {fresh}")

        moved_total = 0
        while True:
            order = np.arange(len(adj))
            if rng is not None:
                rng.shuffle(order)
            moved = level.move_pass(order.tolist(), on_move)
            moved_total += moved
            if not moved:
                break
        logger.debug("level %d: %d nodes, %d moves", level_no, len(adj), moved_total)
        if not moved_total:
            break
        adj, flow, ext, ids = _aggregate(adj, flow, ext, level.module)
        assign = ids[assign]
        current = codelength(g, assign)
        level_no += 1
        if len(adj) == 1:
            break

    labels = canonical_labels(assign)
    best = codelength(g, labels)
    one = codelength(g, np.zeros(n, dtype=np.int64))
    if one < best - MIN_IMPROVEMENT:
        labels, best = np.zeros(n, dtype=np.int64), one
    return Partition(labels, best)


def set_partitions(n):
    """All set partitions of ``n`` items as restricted growth strings, in lexicographic order."""
    if n == 0:
        yield []
        return

    def grow(prefix, blocks):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(blocks + 1):
            prefix.append(c)
            yield from grow(prefix, max(blocks, c + 1))
            prefix.pop()

    yield from grow([0], 1)


def _batch_codelength(g, labs):
    """Codelengths of many canonical labelings (rows of ``labs``) at once."""
    T = 2.0 * g.total_weight
    p = g.degrees() / T
    cross = labs[:, g.u] != labs[:, g.v]
    q = np.zeros(labs.shape, dtype=np.float64)
    pm = np.zeros(labs.shape, dtype=np.float64)
    for m in range(g.n):
        mask = labs == m
        pm[:, m] = mask.astype(np.float64) @ p
        touches = mask[:, g.u] | mask[:, g.v]
        q[:, m] = (cross & touches).astype(np.float64) @ g.w / T
    return plogp(q.sum(axis=1)) - 2.0 * plogp(q).sum(axis=1) - plogp(p).sum() + plogp(q + pm).sum(axis=1)


def brute_force_optimize(g, chunk=4096):
    """Exhaustive minimum-codelength partition for ``n <= 10``.

    Ties within ``MIN_IMPROVEMENT`` go to the lexicographically first
    canonical labeling.
    """
    if g.n > BRUTE_FORCE_MAX_N:
        raise ParameterError(f"brute force refused for n={g.n} > {BRUTE_FORCE_MAX_N}")
    if g.total_weight <= 0:
        return Partition(np.arange(g.n, dtype=np.int64), 0.0)
    labs = np.asarray(list(set_partitions(g.n)), dtype=np.int64)
    values = np.concatenate([_batch_codelength(g, labs[s : s + chunk]) for s in range(0, len(labs), chunk)])
    best = values.min()
    first = int(np.flatnonzero(values <= best + MIN_IMPROVEMENT)[0])
    return Partition(labs[first], codelength(g, labs[first]))
