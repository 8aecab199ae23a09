"""Immutable undirected graphs and the structural queries used by augmentation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

Edge = tuple[int, int]


def normalize_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected, unweighted simple graph on vertices ``0 .. n-1``.

    Instances are immutable and hashable; two graphs are equal when they have
    the same vertex count and the same edge set.
    """

    __slots__ = ("_n", "_edges", "_adj", "_hash")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        if n < 0:
            raise ValueError(f"vertex count must be non-negative, got {n}")
        adj: list[set[int]] = [set() for _ in range(n)]
        norm: set[Edge] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            norm.add(normalize_edge(u, v))
            adj[u].add(v)
            adj[v].add(u)
        self._n = n
        self._edges = frozenset(norm)
        self._adj = tuple(frozenset(a) for a in adj)
        self._hash: int | None = None

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> frozenset[Edge]:
        return self._edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self._edges)

    def _check(self, v: int) -> None:
        if not 0 <= v < self._n:
            raise IndexError(f"vertex {v} out of range [0, {self._n})")

    def neighbors(self, v: int) -> frozenset[int]:
        self._check(v)
        return self._adj[v]

    def degree(self, v: int) -> int:
        self._check(v)
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        self._check(u)
        self._check(v)
        return v in self._adj[u]

    def non_edges(self) -> Iterator[Edge]:
        """Distinct non-adjacent pairs ``(i, j)`` with ``i < j``, in lexicographic order."""
        for i in range(self._n):
            adj = self._adj[i]
            for j in range(i + 1, self._n):
                if j not in adj:
                    yield (i, j)

    def with_edits(self, additions: Iterable[Edge] = (), deletions: Iterable[Edge] = ()) -> "Graph":
        """Return ``(V, (E | additions) - deletions)``."""
        edges = set(self._edges)
        edges.update(normalize_edge(u, v) for u, v in additions)
        edges.difference_update(normalize_edge(u, v) for u, v in deletions)
        return Graph(self._n, edges)

    def adjacency_matrix(self):
        import numpy as np

        a = np.zeros((self._n, self._n))
        for u, v in self._edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._n, self._edges))
        return self._hash

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self.m})"


@dataclass(frozen=True)
class Path:
    """Simple path given by its vertex sequence ``(head, ..., tail)``."""

    vertices: tuple[int, ...]

    @property
    def head(self) -> int:
        return self.vertices[0]

    @property
    def tail(self) -> int:
        return self.vertices[-1]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def edges(self) -> list[Edge]:
        vs = self.vertices
        return [normalize_edge(vs[k], vs[k + 1]) for k in range(len(vs) - 1)]


def neighbors(g: Graph, v: int) -> frozenset[int]:
    return g.neighbors(v)


def ra_score(g: Graph, i: int, j: int) -> float:
    """Resource-allocation similarity: sum of ``1/deg(z)`` over common neighbours ``z``."""
    if i == j:
        raise ValueError("resource allocation score needs two distinct vertices")
    common = g.neighbors(i) & g.neighbors(j)
    return sum(1.0 / g.degree(z) for z in sorted(common))


def ra_matrix(g: Graph):
    """All-pairs RA scores ``A diag(1/d) A`` as a dense array (diagonal meaningless)."""
    import numpy as np

    a = g.adjacency_matrix()
    deg = a.sum(axis=1)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return (a * inv) @ a


def _check_pair(g: Graph, i: int, j: int, l: int) -> None:
    g._check(i)
    g._check(j)
    if i == j:
        raise ValueError("path endpoints must differ")
    if l < 1:
        raise ValueError(f"path length must be positive, got {l}")


def _extend(g: Graph, prefix: list[int], target: int, remaining: int) -> Iterator[tuple[int, ...]]:
    last = prefix[-1]
    if remaining == 1:
        if target in g._adj[last]:
            yield (*prefix, target)
        return
    for w in sorted(g._adj[last]):
        if w == target or w in prefix:
            continue
        prefix.append(w)
        yield from _extend(g, prefix, target, remaining - 1)
        prefix.pop()


def find_paths(g: Graph, i: int, j: int, l: int) -> list[Path]:
    """All simple paths with exactly ``l`` edges from ``i`` to ``j``.

    Paths are listed in ascending lexicographic order of their internal vertices.
    """
    _check_pair(g, i, j, l)
    if l == 2:
        return [Path((i, z, j)) for z in sorted(g._adj[i] & g._adj[j])]
    return [Path(vs) for vs in _extend(g, [i], j, l)]


def has_length_l_path(g: Graph, i: int, j: int, l: int) -> bool:
    _check_pair(g, i, j, l)
    if l == 2:
        return not g._adj[i].isdisjoint(g._adj[j])
    return next(_extend(g, [i], j, l), None) is not None


def length_l_endpoints(g: Graph, i: int, l: int) -> set[int]:
    """Vertices ``j`` reachable from ``i`` by at least one simple path of exactly ``l`` edges."""
    g._check(i)
    found: set[int] = set()
    adj = g._adj

    def walk(prefix: list[int], remaining: int) -> None:
        for w in adj[prefix[-1]]:
            if w in prefix:
                continue
            if remaining == 1:
                found.add(w)
                continue
            prefix.append(w)
            walk(prefix, remaining - 1)
            prefix.pop()

    if l >= 1:
        walk([i], l)
    return found


def component_count(g: Graph) -> int:
    seen = [False] * g.n
    count = 0
    for start in range(g.n):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for w in g._adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    return count


def component_count_after(g: Graph, additions: Iterable[Edge], deletions: Iterable[Edge]) -> int:
    """Component count of ``g.with_edits(additions, deletions)`` without building it."""
    parent = list(range(g.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    removed = {normalize_edge(u, v) for u, v in deletions}
    count = g.n
    for u, v in [*(e for e in g._edges if e not in removed), *additions]:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            count -= 1
    return count


def is_connected(g: Graph) -> bool:
    return component_count(g) <= 1
