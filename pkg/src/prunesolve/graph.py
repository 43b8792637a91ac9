"""Undirected simple graphs in compressed adjacency form, plus generators and IO.

The :class:`Graph` here is the shared substrate for everything else in the
package: the classical solvers walk its neighbor lists, and the GCN uses its
sparse adjacency for neighborhood aggregation. Graphs are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class EdgeListParseError(ValueError):
    """A line of an edge-list file could not be parsed."""


class EmptyGraphError(ValueError):
    """An edge-list file contained no edges at all."""


def derive_seed(master: int, *parts) -> int:
    """Derive a stable 63-bit sub-seed from a master seed and a label path.

    Hash-based so that independently named streams never collide or overlap,
    and reproducible across platforms and Python processes.
    """
    text = "/".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the one PRNG used everywhere in the package."""
    return np.random.Generator(np.random.PCG64(seed))


class Graph:
    """Immutable undirected simple graph stored as offsets + sorted targets.

    Invariants (see :meth:`validate`):
      * no self-loops, no duplicate neighbor entries,
      * neighbor lists sorted ascending,
      * symmetric: ``u in N(v)`` iff ``v in N(u)``,
      * ``len(targets) == 2 * m``.
    """

    def __init__(self, n: int, edges: np.ndarray):
        """Build from an ``(m, 2)`` integer array of undirected edges.

        ``edges`` must already be clean: endpoints in ``[0, n)``, no
        self-loops, each undirected edge listed once. Use
        :func:`load_edge_list` for dirty input.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loop in edge array")
            canon = np.sort(edges, axis=1)
            if len(np.unique(canon, axis=0)) != len(canon):
                raise ValueError("duplicate edge in edge array")
        m = len(edges)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        targets = dst[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        offsets.setflags(write=False)
        targets.setflags(write=False)
        self.n = n
        self.m = m
        self.offsets = offsets
        self.targets = targets
        self._edges = None
        self._csr = None

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor ids of ``v`` (a read-only view)."""
        return self.targets[self.offsets[v]:self.offsets[v + 1]]

    def degrees(self) -> np.ndarray:
        """Degree of every node; entries sum to ``2 * m``."""
        return np.diff(self.offsets)

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def has_edge(self, u: int, v: int) -> bool:
        """Adjacency test by binary search in the shorter neighbor list."""
        if self.degree(u) > self.degree(v):
            u, v = v, u
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def edge_array(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, cached."""
        if self._edges is None:
            rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
            keep = self.targets > rows
            e = np.column_stack([rows[keep], self.targets[keep]])
            e.setflags(write=False)
            self._edges = e
        return self._edges

    def adjacency_csr(self) -> sp.csr_matrix:
        """Unweighted adjacency as a scipy CSR matrix (cached)."""
        if self._csr is None:
            data = np.ones(len(self.targets), dtype=np.float64)
            self._csr = sp.csr_matrix(
                (data, self.targets, self.offsets), shape=(self.n, self.n)
            )
        return self._csr

    def count_in_mask(self, mask: np.ndarray) -> np.ndarray:
        """Per node, how many of its neighbors fall inside a boolean mask."""
        hits = mask[self.targets].astype(np.int64)
        out = np.zeros(self.n, dtype=np.int64)
        starts = self.offsets[:-1]
        nonempty = starts < self.offsets[1:]
        if hits.size:
            sums = np.add.reduceat(hits, starts[nonempty])
            out[nonempty] = sums
        return out

    def validate(self) -> None:
        """Recheck all structural invariants; raises ValueError on violation."""
        if len(self.offsets) != self.n + 1 or self.offsets[0] != 0:
            raise ValueError("malformed offsets")
        if self.offsets[-1] != len(self.targets) or len(self.targets) != 2 * self.m:
            raise ValueError("neighbor list length does not equal 2m")
        degs = self.degrees()
        if degs.min(initial=0) < 0:
            raise ValueError("negative degree")
        rows = np.repeat(np.arange(self.n, dtype=np.int64), degs)
        if np.any(rows == self.targets):
            raise ValueError("self-loop present")
        if self.n and len(self.targets):
            inner = np.diff(self.targets)
            boundary = np.diff(rows).astype(bool)
            if np.any((inner <= 0) & ~boundary):
                raise ValueError("neighbor list not strictly increasing")
        a = self.adjacency_csr()
        if (a != a.T).nnz != 0:
            raise ValueError("adjacency not symmetric")

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


class NodeSet:
    """A set of node ids over a fixed universe, stored as a boolean mask."""

    __slots__ = ("mask", "size")

    def __init__(self, mask: np.ndarray):
        mask = np.ascontiguousarray(mask, dtype=bool)
        mask.setflags(write=False)
        self.mask = mask
        self.size = int(mask.sum())

    @classmethod
    def from_ids(cls, ids, n: int) -> "NodeSet":
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise ValueError("node id out of range")
        mask = np.zeros(n, dtype=bool)
        mask[ids] = True
        return cls(mask)

    @classmethod
    def empty(cls, n: int) -> "NodeSet":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def full(cls, n: int) -> "NodeSet":
        return cls(np.ones(n, dtype=bool))

    @property
    def universe(self) -> int:
        return len(self.mask)

    def ids(self) -> np.ndarray:
        """Member ids in ascending order."""
        return np.flatnonzero(self.mask)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, v) -> bool:
        return bool(self.mask[v])

    def __eq__(self, other) -> bool:
        return isinstance(other, NodeSet) and np.array_equal(self.mask, other.mask)

    def __repr__(self) -> str:
        return f"NodeSet(size={self.size}, universe={self.universe})"


def generate_ba(n: int, m: int, seed: int) -> Graph:
    """Barabasi-Albert graph: clique on the first ``m`` nodes, then each new
    node attaches to ``m`` distinct existing nodes drawn with probability
    proportional to current degree (duplicate draws rejected).

    Total edge count is always ``m*(m-1)/2 + m*(n-m)``. Deterministic for a
    given seed.
    """
    if m < 1:
        raise ValueError("attachment count m must be >= 1")
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    rng = make_rng(seed)
    edges = []
    # endpoint multiset: drawing uniformly from it is degree-proportional
    repeated = []
    for i in range(m):
        for j in range(i + 1, m):
            edges.append((i, j))
            repeated.append(i)
            repeated.append(j)
    for v in range(m, n):
        chosen = set()
        while len(chosen) < m:
            if repeated:
                pick = repeated[rng.integers(0, len(repeated))]
            else:
                # only possible while m == 1 and no edge exists yet
                pick = int(rng.integers(0, v))
            if pick not in chosen:
                chosen.add(pick)
        for u in sorted(chosen):
            edges.append((u, v))
            repeated.append(u)
            repeated.append(v)
    return Graph(n, np.array(edges, dtype=np.int64))


@dataclass(frozen=True)
class EdgeListResult:
    """A loaded graph plus counts of lines that were silently dropped."""

    graph: Graph
    dropped_self_loops: int
    dropped_duplicates: int


def load_edge_list(path) -> EdgeListResult:
    """Read a whitespace-separated edge list, one ``u v`` pair per line.

    Lines starting with ``#`` (and blank lines) are ignored. Node ids are
    compacted to ``0..n-1`` in order of first appearance. Self-loops and
    repeated edges are dropped, with counts reported in the result.
    """
    ids: dict[int, int] = {}
    edges = []
    seen = set()
    loops = 0
    dups = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListParseError(
                    f"{path}: line {lineno}: expected two integers, got {line!r}"
                )
            try:
                a = int(parts[0])
                b = int(parts[1])
            except ValueError:
                raise EdgeListParseError(
                    f"{path}: line {lineno}: non-integer token in {line!r}"
                ) from None
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
            if u == v:
                loops += 1
                continue
            key = (u, v) if u < v else (v, u)
            if key in seen:
                dups += 1
                continue
            seen.add(key)
            edges.append(key)
    if not ids:
        raise EmptyGraphError(f"{path}: no edges found")
    graph = Graph(len(ids), np.array(edges, dtype=np.int64).reshape(-1, 2))
    return EdgeListResult(graph, loops, dups)


def dump_edge_list(g: Graph, path) -> None:
    """Write one ``u v`` line per edge with ``u < v``."""
    edges = g.edge_array()
    with open(path, "w") as fh:
        for u, v in edges:
            fh.write(f"{u} {v}\n")
