"""Classical solvers for minimum vertex cover and maximum independent set.

Every solver comes in two flavors selected by a :class:`Candidates` argument:
the full search space (all nodes) or a restricted space where only a given
"good node" subset may enter the solution. Restricted vertex covers may
legitimately leave some edges uncovered; the coverage metric quantifies that.

All solvers are deterministic given (graph, candidates, seed), and ties are
always broken toward the lowest node id.
"""

from __future__ import annotations

import heapq
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, NodeSet, make_rng

MVC = "mvc"
MIS = "mis"
PROBLEMS = (MVC, MIS)


def _norm_problem(problem: str) -> str:
    p = str(problem).lower()
    if p not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}, expected one of {PROBLEMS}")
    return p


@dataclass(frozen=True)
class Candidates:
    """Search space for a solver: either every node or a fixed good-node set."""

    good: NodeSet | None = None

    @classmethod
    def all(cls) -> "Candidates":
        return cls(None)

    @classmethod
    def restrict(cls, nodes: NodeSet) -> "Candidates":
        return cls(nodes)

    @classmethod
    def from_ids(cls, ids, n: int) -> "Candidates":
        return cls(NodeSet.from_ids(ids, n))

    @property
    def is_all(self) -> bool:
        return self.good is None

    def mask_for(self, g: Graph) -> np.ndarray:
        """Boolean eligibility mask over the graph's nodes."""
        if self.good is None:
            return np.ones(g.n, dtype=bool)
        if self.good.universe != g.n:
            raise ValueError(
                f"candidate set over {self.good.universe} nodes used with a "
                f"{g.n}-node graph"
            )
        return self.good.mask


@dataclass
class Solution:
    """A solver's output node set plus bookkeeping about how it was produced."""

    problem: str
    nodes: NodeSet
    algorithm: str
    runtime: float
    covered_edges: int | None = None  # vertex cover only
    optimal: bool | None = None  # exact solver only
    restricted: bool = False

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass
class ValidationReport:
    """Outcome of checking a solution against the problem's definition."""

    ok: bool
    problem: str
    failures: list[str] = field(default_factory=list)
    coverage: float | None = None


def coverage(g: Graph, s: Solution) -> float:
    """Fraction of edges with at least one endpoint in the solution.

    Defined for vertex-cover solutions only; an edgeless graph counts as
    fully covered.
    """
    if s.problem != MVC:
        raise ValueError("coverage is defined for vertex-cover solutions only")
    if g.m == 0:
        return 1.0
    e = g.edge_array()
    mask = s.nodes.mask
    covered = int(np.count_nonzero(mask[e[:, 0]] | mask[e[:, 1]]))
    return covered / g.m


def validate_solution(g: Graph, s: Solution) -> ValidationReport:
    """Check independence/maximality (MIS) or coverage (MVC).

    Maximality and full coverage are only required of full-space solutions;
    restricted runs may fall short by construction.
    """
    failures: list[str] = []
    mask = s.nodes.mask
    if s.problem == MIS:
        e = g.edge_array()
        if g.m:
            inside = mask[e[:, 0]] & mask[e[:, 1]]
            if inside.any():
                u, v = e[int(np.flatnonzero(inside)[0])]
                failures.append(
                    f"edge ({u}, {v}) has both endpoints in the independent set"
                )
        if not s.restricted and not failures:
            tight = g.count_in_mask(mask)
            addable = ~mask & (tight == 0)
            if addable.any():
                v = int(np.flatnonzero(addable)[0])
                failures.append(f"node {v} could be added: the set is not maximal")
        return ValidationReport(not failures, s.problem, failures)
    cov = coverage(g, s)
    if not s.restricted and s.algorithm in ("greedy", "exact") and cov < 1.0:
        e = g.edge_array()
        uncovered = ~(mask[e[:, 0]] | mask[e[:, 1]])
        u, v = e[int(np.flatnonzero(uncovered)[0])]
        failures.append(f"edge ({u}, {v}) is not covered")
    return ValidationReport(not failures, s.problem, failures, cov)


def format_solution(g: Graph, s: Solution) -> str:
    """Render the text form: a header line followed by sorted node ids."""
    cov = f"{coverage(g, s):.6f}" if s.problem == MVC else "-"
    opt = "-" if s.optimal is None else ("true" if s.optimal else "false")
    lines = [f"{s.problem} {s.algorithm} {s.size} {cov} {s.runtime:.6f} {opt}"]
    lines.extend(str(v) for v in s.nodes.ids())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Greedy


def greedy_mvc(g: Graph, cand: Candidates | None = None) -> Solution:
    """Greedy vertex cover: repeatedly take the eligible node covering the
    most currently uncovered edges.

    Full space stops when every edge is covered; restricted space stops when
    no eligible node covers any remaining edge. Residual degrees are kept
    incrementally in a lazy max-heap.
    """
    cand = cand or Candidates.all()
    t0 = time.perf_counter()
    eligible = cand.mask_for(g)
    in_cover = np.zeros(g.n, dtype=bool)
    resid = g.degrees().astype(np.int64).copy()
    uncovered = g.m
    heap = [(-int(resid[v]), int(v)) for v in np.flatnonzero(eligible & (resid > 0))]
    heapq.heapify(heap)
    while heap and uncovered:
        negd, v = heapq.heappop(heap)
        if in_cover[v] or resid[v] != -negd:
            continue
        if negd == 0:
            break
        in_cover[v] = True
        uncovered -= int(resid[v])
        nbrs = g.neighbors(v)
        alive = nbrs[~in_cover[nbrs]]
        resid[alive] -= 1
        for u in alive:
            if eligible[u]:
                heapq.heappush(heap, (-int(resid[u]), int(u)))
    return Solution(
        problem=MVC,
        nodes=NodeSet(in_cover),
        algorithm="greedy",
        runtime=time.perf_counter() - t0,
        covered_edges=g.m - uncovered,
        restricted=not cand.is_all,
    )


def greedy_mis(g: Graph, cand: Candidates | None = None) -> Solution:
    """Greedy independent set: repeatedly take the minimum-residual-degree
    node of the pool and drop it and its neighbors from the pool.

    Residual degree counts neighbors still in the pool. The pool starts as
    the candidate set, so the result is independent with respect to the full
    edge set and, in full-space mode, maximal.
    """
    cand = cand or Candidates.all()
    t0 = time.perf_counter()
    pool = cand.mask_for(g).copy()
    in_set = np.zeros(g.n, dtype=bool)
    resid = g.count_in_mask(pool)
    heap = [(int(resid[v]), int(v)) for v in np.flatnonzero(pool)]
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if not pool[v] or resid[v] != d:
            continue
        in_set[v] = True
        nbrs = g.neighbors(v)
        removed = [v] + [int(u) for u in nbrs[pool[nbrs]]]
        pool[removed] = False
        for r in removed:
            rn = g.neighbors(r)
            alive = rn[pool[rn]]
            resid[alive] -= 1
            for u in alive:
                heapq.heappush(heap, (int(resid[u]), int(u)))
    return Solution(
        problem=MIS,
        nodes=NodeSet(in_set),
        algorithm="greedy",
        runtime=time.perf_counter() - t0,
        restricted=not cand.is_all,
    )


# ---------------------------------------------------------------------------
# Local search


def local_search_mvc(g: Graph, cand: Candidates | None = None, seed: int = 0) -> Solution:
    """Local search for vertex cover: drop any node whose neighbors are all
    in the solution, first improvement, rescanning in ascending id order.

    Full-space initialization adds both endpoints of uncovered edges in a
    seeded random order until everything is covered; restricted mode starts
    from the candidate set itself. Nodes are only ever removed, so a
    restricted start that is not a cover stays that way.
    """
    cand = cand or Candidates.all()
    t0 = time.perf_counter()
    in_s = np.zeros(g.n, dtype=bool)
    if cand.is_all:
        rng = make_rng(seed)
        edges = g.edge_array()
        for idx in rng.permutation(g.m):
            u, v = edges[idx]
            if not (in_s[u] or in_s[v]):
                in_s[u] = True
                in_s[v] = True
    else:
        in_s = cand.mask_for(g).copy()
    # Removability only ever decays as the solution shrinks, so a rescan from
    # the start after each removal visits the same nodes as continuing the
    # ascending sweep; the outer loop's second pass just confirms fixpoint.
    changed = True
    while changed:
        changed = False
        for v in np.flatnonzero(in_s):
            nbrs = g.neighbors(v)
            if in_s[nbrs].all():
                in_s[v] = False
                changed = True
    covered = g.m
    if g.m:
        e = g.edge_array()
        covered = int(np.count_nonzero(in_s[e[:, 0]] | in_s[e[:, 1]]))
    return Solution(
        problem=MVC,
        nodes=NodeSet(in_s),
        algorithm="local-search",
        runtime=time.perf_counter() - t0,
        covered_edges=covered,
        restricted=not cand.is_all,
    )


def local_search_mis(g: Graph, cand: Candidates | None = None, seed: int = 0) -> Solution:
    """Local search for independent set: seeded random greedy start, then
    (1,2)-swaps until none applies.

    A swap replaces a solution node v by two of its non-adjacent one-tight
    neighbors (nodes whose single solution neighbor is v). First improvement:
    solution nodes are scanned in ascending order and the scan restarts after
    every swap; tightness is recomputed from the current solution at each
    restart. A swap can leave some third neighbor of v with no solution
    neighbor at all, so after each swap freed candidate nodes are re-added
    (ascending), which keeps full-space outputs maximal. In restricted mode
    only candidate nodes may enter, whether by swap or by re-add.
    """
    cand = cand or Candidates.all()
    t0 = time.perf_counter()
    good = cand.mask_for(g)
    rng = make_rng(seed)
    pool = good.copy()
    in_s = np.zeros(g.n, dtype=bool)
    for v in rng.permutation(np.flatnonzero(good)):
        if pool[v]:
            in_s[v] = True
            pool[v] = False
            pool[g.neighbors(v)] = False

    # tightness and swap-candidate counts are only ever read at candidate
    # nodes, so count over the candidate adjacency rows alone
    good_ids = np.flatnonzero(good)
    seg_len = g.degrees()[good_ids]
    if len(good_ids):
        seg_starts = np.concatenate([[0], np.cumsum(seg_len)[:-1]])
        starts = g.offsets[good_ids]
        total = int(seg_len.sum())
        within = np.arange(total) - np.repeat(seg_starts, seg_len)
        good_rows = g.targets[np.repeat(starts, seg_len) + within]
    else:
        seg_starts = np.empty(0, dtype=np.int64)
        good_rows = np.empty(0, dtype=g.targets.dtype)

    def good_neighbor_counts(mask: np.ndarray) -> np.ndarray:
        out = np.zeros(g.n, dtype=np.int64)
        if len(good_ids) and len(good_rows):
            hits = mask[good_rows].astype(np.int64)
            nonempty = seg_len > 0
            sums = np.zeros(len(good_ids), dtype=np.int64)
            if nonempty.any():
                sums[nonempty] = np.add.reduceat(hits, seg_starts[nonempty])
            out[good_ids] = sums
        return out

    tight = good_neighbor_counts(in_s)

    def add_free_nodes() -> None:
        # additions only tighten, so one ascending pass with an inline
        # recheck cannot miss a free node
        for u in np.flatnonzero(good & ~in_s & (tight == 0)):
            if not in_s[u] and tight[u] == 0:
                in_s[u] = True
                nu = g.neighbors(u)
                tight[nu[good[nu]]] += 1

    improved = True
    while improved:
        improved = False
        # one-tight candidate nodes that could swap in
        swap_in = good & ~in_s & (tight == 1)
        cnt = good_neighbor_counts(swap_in)
        # a swap needs two such neighbors, so other solution nodes are
        # skipped without changing which improvement fires first
        for v in np.flatnonzero(in_s & (cnt >= 2)):
            nbrs = g.neighbors(v)
            cands = nbrs[swap_in[nbrs]]
            swap = None
            for a in range(len(cands)):
                for b in range(a + 1, len(cands)):
                    if not g.has_edge(int(cands[a]), int(cands[b])):
                        swap = (int(cands[a]), int(cands[b]))
                        break
                if swap:
                    break
            if swap:
                i, j = swap
                in_s[v] = False
                in_s[i] = True
                in_s[j] = True
                # incremental tightness update, identical to a recount
                nv = g.neighbors(v)
                tight[nv[good[nv]]] -= 1
                for w in (i, j):
                    nw = g.neighbors(w)
                    tight[nw[good[nw]]] += 1
                add_free_nodes()
                improved = True
                break
    return Solution(
        problem=MIS,
        nodes=NodeSet(in_s),
        algorithm="local-search",
        runtime=time.perf_counter() - t0,
        restricted=not cand.is_all,
    )


# ---------------------------------------------------------------------------
# Exact branch and bound


class _Deadline(Exception):
    pass


def _check_time(deadline: float) -> None:
    if time.perf_counter() > deadline:
        raise _Deadline


def _adj_from_mask(g: Graph, mask: np.ndarray) -> dict[int, set[int]]:
    """Adjacency dict of the subgraph induced by ``mask`` (ascending ids)."""
    adj: dict[int, set[int]] = {}
    for v in np.flatnonzero(mask):
        nb = g.neighbors(v)
        adj[int(v)] = {int(u) for u in nb[mask[nb]]}
    return adj


def _greedy_cover_dict(adj: dict[int, set[int]]) -> set[int]:
    """Max-degree greedy cover of a dict graph; used to seed the incumbent."""
    deg = {v: len(s) for v, s in adj.items()}
    live = {v: set(s) for v, s in adj.items()}
    heap = [(-d, v) for v, d in deg.items() if d > 0]
    heapq.heapify(heap)
    cover: set[int] = set()
    while heap:
        negd, v = heapq.heappop(heap)
        if v in cover or deg[v] != -negd:
            continue
        if negd == 0:
            break
        cover.add(v)
        for u in live[v]:
            live[u].discard(v)
            deg[u] -= 1
            if u not in cover and deg[u] > 0:
                heapq.heappush(heap, (-deg[u], u))
        deg[v] = 0
        live[v] = set()
    return cover


def _greedy_is_dict(adj: dict[int, set[int]]) -> set[int]:
    """Min-degree greedy independent set of a dict graph (incumbent seed)."""
    deg = {v: len(s) for v, s in adj.items()}
    live = {v: set(s) for v, s in adj.items()}
    alive = set(adj)
    heap = [(d, v) for v, d in deg.items()]
    heapq.heapify(heap)
    chosen: set[int] = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v not in alive or deg[v] != d:
            continue
        chosen.add(v)
        drop = [v] + sorted(live[v])
        for r in drop:
            alive.discard(r)
        for r in drop:
            for u in live[r]:
                if u in alive:
                    live[u].discard(r)
                    deg[u] -= 1
                    heapq.heappush(heap, (deg[u], u))
            live[r] = set()
    return chosen


def _matching_lb(adj: dict[int, set[int]]) -> int:
    """Size of a greedy maximal matching: a vertex-cover lower bound."""
    used: set[int] = set()
    size = 0
    for v in sorted(adj):
        if v in used:
            continue
        partner = None
        for u in sorted(adj[v]):
            if u not in used:
                partner = u
                break
        if partner is not None:
            used.add(v)
            used.add(partner)
            size += 1
    return size


def _clique_cover_ub(adj: dict[int, set[int]]) -> int:
    """Number of cliques in a greedy clique cover: an independent-set upper
    bound, since any independent set meets each clique at most once."""
    assigned: set[int] = set()
    count = 0
    for v in sorted(adj):
        if v in assigned:
            continue
        clique = [v]
        assigned.add(v)
        for u in sorted(adj[v]):
            if u not in assigned and all(u in adj[w] for w in clique):
                clique.append(u)
                assigned.add(u)
        count += 1
    return count


def _bb_mvc(adj: dict[int, set[int]], deadline: float) -> tuple[set[int], bool]:
    """Branch and bound for minimum vertex cover on a dict graph.

    Consumes ``adj``. Returns (best cover found, proven-optimal flag).
    """
    best = _greedy_cover_dict(adj)
    best_size = len(best)
    chosen: list[int] = []
    undo: list[tuple[int, set[int]]] = []

    def remove_node(v: int) -> None:
        nbrs = adj.pop(v)
        for u in nbrs:
            adj[u].discard(v)
        undo.append((v, nbrs))

    def restore(mark: int) -> None:
        while len(undo) > mark:
            v, nbrs = undo.pop()
            adj[v] = nbrs
            for u in nbrs:
                adj[u].add(v)

    def reduce_() -> None:
        while True:
            _check_time(deadline)
            deg0 = [v for v in adj if not adj[v]]
            if deg0:
                for v in deg0:
                    remove_node(v)
                continue
            leaf = None
            for v in adj:
                if len(adj[v]) == 1:
                    leaf = v
                    break
            if leaf is None:
                return
            u = next(iter(adj[leaf]))
            chosen.append(u)
            remove_node(u)

    def search() -> None:
        nonlocal best, best_size
        _check_time(deadline)
        mark_u = len(undo)
        mark_c = len(chosen)
        reduce_()
        if not adj:
            if len(chosen) < best_size:
                best = set(chosen)
                best_size = len(chosen)
        else:
            lb = len(chosen) + _matching_lb(adj)
            if lb < best_size:
                v = min(adj, key=lambda u: (-len(adj[u]), u))
                # include v in the cover
                chosen.append(v)
                mark2 = len(undo)
                remove_node(v)
                search()
                restore(mark2)
                chosen.pop()
                # exclude v: every neighbor must join the cover
                mark2 = len(undo)
                forced = sorted(adj[v])
                for u in forced:
                    chosen.append(u)
                    remove_node(u)
                remove_node(v)
                search()
                restore(mark2)
                del chosen[len(chosen) - len(forced):]
        restore(mark_u)
        del chosen[mark_c:]

    try:
        search()
        return best, True
    except _Deadline:
        return best, False


def _bb_mis(adj: dict[int, set[int]], deadline: float) -> tuple[set[int], bool]:
    """Branch and bound for maximum independent set on a dict graph."""
    best = _greedy_is_dict(adj)
    best_size = len(best)
    chosen: list[int] = []
    undo: list[tuple[int, set[int]]] = []

    def remove_node(v: int) -> None:
        nbrs = adj.pop(v)
        for u in nbrs:
            adj[u].discard(v)
        undo.append((v, nbrs))

    def restore(mark: int) -> None:
        while len(undo) > mark:
            v, nbrs = undo.pop()
            adj[v] = nbrs
            for u in nbrs:
                adj[u].add(v)

    def reduce_() -> None:
        while True:
            _check_time(deadline)
            deg0 = [v for v in adj if not adj[v]]
            if deg0:
                for v in deg0:
                    chosen.append(v)
                    remove_node(v)
                continue
            leaf = None
            for v in adj:
                if len(adj[v]) == 1:
                    leaf = v
                    break
            if leaf is None:
                return
            u = next(iter(adj[leaf]))
            chosen.append(leaf)
            remove_node(leaf)
            remove_node(u)

    def search() -> None:
        nonlocal best, best_size
        _check_time(deadline)
        mark_u = len(undo)
        mark_c = len(chosen)
        reduce_()
        if not adj:
            if len(chosen) > best_size:
                best = set(chosen)
                best_size = len(chosen)
        else:
            ub = len(chosen) + _clique_cover_ub(adj)
            if ub > best_size:
                v = min(adj, key=lambda u: (-len(adj[u]), u))
                # include v: neighbors drop out
                chosen.append(v)
                mark2 = len(undo)
                nbrs = sorted(adj[v])
                remove_node(v)
                for u in nbrs:
                    remove_node(u)
                search()
                restore(mark2)
                chosen.pop()
                # exclude v
                mark2 = len(undo)
                remove_node(v)
                search()
                restore(mark2)
        restore(mark_u)
        del chosen[mark_c:]

    try:
        search()
        return best, True
    except _Deadline:
        return best, False


def exact_solve(
    g: Graph,
    problem: str,
    cand: Candidates | None = None,
    time_limit: float = 3600.0,
) -> Solution:
    """Exact branch-and-bound solve with reductions and combinatorial bounds.

    Degree-0 and degree-1 reductions run at every search node; branching is
    on the maximum-degree undecided node. A greedy maximal matching bounds
    vertex covers from below and a greedy clique cover bounds independent
    sets from above. Restricted vertex cover is lexicographic: cover every
    edge touching a candidate, then minimize solution size; restricted
    independent set is solved on the candidate-induced subgraph.

    On timeout the best incumbent found so far is returned with
    ``optimal=False``.
    """
    if time_limit <= 0:
        raise ValueError("time_limit must be positive")
    problem = _norm_problem(problem)
    cand = cand or Candidates.all()
    t0 = time.perf_counter()
    deadline = t0 + time_limit
    eligible = cand.mask_for(g)
    restricted = not cand.is_all

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 2 * g.n + 500))
    try:
        if problem == MVC:
            if not restricted:
                adj = _adj_from_mask(g, np.ones(g.n, dtype=bool))
                core, optimal = _bb_mvc(adj, deadline)
                nodes = core
                covered = g.m
            else:
                outside_deg = g.count_in_mask(~eligible)
                forced = eligible & (outside_deg > 0)
                adj = _adj_from_mask(g, eligible & ~forced)
                core, optimal = _bb_mvc(adj, deadline)
                nodes = set(int(v) for v in np.flatnonzero(forced)) | core
                if g.m:
                    e = g.edge_array()
                    covered = int(
                        np.count_nonzero(eligible[e[:, 0]] | eligible[e[:, 1]])
                    )
                else:
                    covered = 0
            sol_nodes = NodeSet.from_ids(sorted(nodes), g.n)
            return Solution(
                problem=MVC,
                nodes=sol_nodes,
                algorithm="exact",
                runtime=time.perf_counter() - t0,
                covered_edges=covered,
                optimal=optimal,
                restricted=restricted,
            )
        adj = _adj_from_mask(g, eligible)
        core, optimal = _bb_mis(adj, deadline)
        return Solution(
            problem=MIS,
            nodes=NodeSet.from_ids(sorted(core), g.n),
            algorithm="exact",
            runtime=time.perf_counter() - t0,
            optimal=optimal,
            restricted=restricted,
        )
    finally:
        sys.setrecursionlimit(old_limit)
