"""Structural-mapping graph augmentation.

Four mappings turn a labelled graph ``(G, y)`` into ``(G', y)`` by adding and
deleting the same number of edges:

* ``random``: uniform over all non-adjacent pairs / existing edges.
* ``vertex_similarity``: additions weighted by resource-allocation (RA) score,
  deletions weighted by one minus the normalised RA score of the edge.
* ``motif_random``: additions close an open length-``l`` path (motif); the
  deleted edge is drawn uniformly from that path.
* ``motif_similarity``: as ``motif_random`` but with RA-weighted additions and
  RA-weighted deletions inside the path.
"""

from __future__ import annotations

import enum
import logging
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable, Sequence, TypeVar

import numpy as np

from .graph import Edge, Graph, component_count, component_count_after, find_paths, length_l_endpoints, ra_matrix

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Mapping(str, enum.Enum):
    RANDOM = "random"
    VERTEX_SIMILARITY = "vertex_similarity"
    MOTIF_RANDOM = "motif_random"
    MOTIF_SIMILARITY = "motif_similarity"

    @classmethod
    def parse(cls, value: "str | Mapping") -> "Mapping":
        if isinstance(value, Mapping):
            return value
        try:
            return cls(value.replace("-", "_"))
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown mapping {value!r}; choose one of {names}") from None


class AugmentationInfeasible(Exception):
    """Raised when a graph does not admit the requested edit budget."""

    def __init__(self, message: str, side: str) -> None:
        super().__init__(message)
        self.side = side


class SamplingCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    mapping: Mapping = Mapping.MOTIF_SIMILARITY
    beta: float = 0.15
    motif_length: int = 2
    preserve_connectivity: bool = True
    preserve_edge_count: bool = True
    max_resample_attempts: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", Mapping.parse(self.mapping))
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.motif_length < 2:
            raise ValueError(f"motif length must be at least 2, got {self.motif_length}")
        if self.max_resample_attempts < 1:
            raise ValueError("max_resample_attempts must be positive")


@dataclass(frozen=True)
class CandidateSets:
    add: list[Edge]
    delete: list[Edge]


@dataclass(frozen=True)
class EditPlan:
    additions: list[Edge]
    deletions: list[Edge]
    warnings: list[str] = field(default_factory=list)


def edit_budget(m: int, beta: float) -> int:
    """``ceil(m * beta)``, robust to representation error (``20 * 0.15`` gives 3)."""
    return math.ceil(round(m * beta, 9))


_SMALL_TABLE = 64


def weighted_sample_without_replacement(
    items: Sequence[T], weights: Sequence[float], k: int, rng: np.random.Generator
) -> list[T]:
    """Draw ``k`` distinct items by successive proportional draws.

    Each draw picks an item with probability proportional to its weight among
    the items not yet drawn. When every remaining weight is zero the draw is
    uniform over the remaining items.
    """
    n = len(items)
    if n != len(weights):
        raise ValueError("items and weights differ in length")
    if k > n:
        raise SamplingCapacityError(f"cannot draw {k} items from {n}")
    if n <= _SMALL_TABLE:
        w = [float(x) for x in weights]
        if not all(math.isfinite(x) and x >= 0 for x in w):
            raise ValueError("weights must be finite and non-negative")
        picks = _draw_small(w, k, rng)
    else:
        w = np.array(weights, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        picks = _draw_large(w, k, rng)
    return [items[i] for i in picks]


# Small tables use literal successive draws. Large tables use exponential keys
# ``log(u) / w``: ranking items by decreasing key has the same law as successive
# proportional draws, at one pass over the table instead of one per draw.


def _draw_small(w: list[float], k: int, rng: np.random.Generator) -> list[int]:
    alive = [True] * len(w)
    out = []
    for _ in range(k):
        cum = list(accumulate(w))
        total = cum[-1]
        if total > 0:
            idx = min(bisect_right(cum, rng.random() * total), len(w) - 1)
            while w[idx] == 0:
                idx -= 1
        else:
            remaining = [i for i, a in enumerate(alive) if a]
            idx = remaining[int(rng.integers(len(remaining)))]
        alive[idx] = False
        w[idx] = 0.0
        out.append(idx)
    return out


def _draw_large(w: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    u = rng.random(len(w))
    pos = w > 0
    keys = np.full(len(w), -np.inf)
    with np.errstate(divide="ignore"):
        keys[pos] = np.log(u[pos]) / w[pos]
    order = np.argsort(-keys, kind="stable")
    n_pos = int(pos.sum())
    if k <= n_pos:
        return [int(i) for i in order[:k]]
    # positives exhausted: the rest come uniformly from the zero-weight items
    zeros = np.flatnonzero(~pos)
    zeros = zeros[np.argsort(u[zeros], kind="stable")]
    return [int(i) for i in order[:n_pos]] + [int(i) for i in zeros[: k - n_pos]]


def _pair_scores(g: Graph, pairs: Sequence[Edge], ra: np.ndarray | None) -> np.ndarray:
    if not pairs:
        return np.zeros(0)
    if ra is None:
        ra = ra_matrix(g)
    idx = np.asarray(pairs, dtype=int)
    return ra[idx[:, 0], idx[:, 1]]


def similarity_weights(g: Graph, pairs: Sequence[Edge], ra: np.ndarray | None = None) -> np.ndarray:
    """Normalised RA scores ``s / sum(s)``; uniform when every score is zero."""
    s = _pair_scores(g, pairs, ra)
    total = s.sum()
    if total <= 0:
        return np.full(len(pairs), 1.0 / max(len(pairs), 1))
    return s / total


def dissimilarity_weights(g: Graph, pairs: Sequence[Edge], ra: np.ndarray | None = None) -> np.ndarray:
    """``1 - s / sum(s)`` normalised within ``pairs``; uniform when every score is zero."""
    s = _pair_scores(g, pairs, ra)
    total = s.sum()
    if total <= 0:
        return np.ones(len(pairs))
    return np.clip(1.0 - s / total, 0.0, None)


def build_random_candidates(g: Graph) -> CandidateSets:
    return CandidateSets(add=list(g.non_edges()), delete=g.sorted_edges())


def build_motif_candidates(g: Graph, l: int) -> CandidateSets:
    """Non-adjacent pairs joined by a simple path of exactly ``l`` edges."""
    if l == 2:
        a = g.adjacency_matrix()
        closable = np.triu(((a @ a) > 0) & (a == 0), k=1)
        return CandidateSets(add=[(int(i), int(j)) for i, j in zip(*np.nonzero(closable))], delete=g.sorted_edges())
    add: list[Edge] = []
    for i in range(g.n):
        ends = length_l_endpoints(g, i, l)
        add.extend((i, j) for j in sorted(ends) if j > i and not g.has_edge(i, j))
    return CandidateSets(add=add, delete=g.sorted_edges())


def _require_budget(g: Graph, k: int, cands: CandidateSets) -> None:
    if g.m == 0:
        raise AugmentationInfeasible("graph has no edges to modify", side="delete")
    if k > len(cands.add):
        raise AugmentationInfeasible(
            f"budget {k} exceeds {len(cands.add)} addition candidates", side="add"
        )
    if k > len(cands.delete):
        raise AugmentationInfeasible(
            f"budget {k} exceeds {len(cands.delete)} deletion candidates", side="delete"
        )


def _with_connectivity(
    g: Graph,
    cfg: AugmentConfig,
    additions: list[Edge],
    draw_deletions: Callable[[], tuple[list[Edge], list[Edge]]],
) -> EditPlan:
    """Redraw the deletion step until the component count does not grow."""
    base = component_count(g)
    warnings: list[str] = []
    adds, dels = additions, []
    for _ in range(cfg.max_resample_attempts):
        adds, dels = draw_deletions()
        if not cfg.preserve_connectivity:
            break
        if component_count_after(g, adds, dels) <= base:
            break
    else:
        msg = f"connectivity not preserved after {cfg.max_resample_attempts} attempts"
        logger.debug(msg)
        warnings.append(msg)
    return EditPlan(additions=adds, deletions=dels, warnings=warnings)


def plan_random(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> EditPlan:
    k = edit_budget(g.m, cfg.beta)
    cands = build_random_candidates(g)
    _require_budget(g, k, cands)
    adds = weighted_sample_without_replacement(cands.add, np.ones(len(cands.add)), k, rng)
    del_w = np.ones(len(cands.delete))

    def draw():
        return adds, weighted_sample_without_replacement(cands.delete, del_w, k, rng)

    return _with_connectivity(g, cfg, adds, draw)


def plan_vertex_similarity(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> EditPlan:
    k = edit_budget(g.m, cfg.beta)
    cands = build_random_candidates(g)
    _require_budget(g, k, cands)
    ra = ra_matrix(g)
    adds = weighted_sample_without_replacement(cands.add, similarity_weights(g, cands.add, ra), k, rng)
    del_w = dissimilarity_weights(g, cands.delete, ra)

    def draw():
        return adds, weighted_sample_without_replacement(cands.delete, del_w, k, rng)

    return _with_connectivity(g, cfg, adds, draw)


def _plan_motif(g: Graph, cfg: AugmentConfig, rng: np.random.Generator, weighted: bool) -> EditPlan:
    l = cfg.motif_length
    k = edit_budget(g.m, cfg.beta)
    cands = build_motif_candidates(g, l)
    if not cands.add:
        raise AugmentationInfeasible(f"no open length-{l} motifs to close", side="add")
    _require_budget(g, k, cands)
    ra = ra_matrix(g) if weighted else None
    add_w = similarity_weights(g, cands.add, ra) if weighted else np.ones(len(cands.add))
    adds = weighted_sample_without_replacement(cands.add, add_w, k, rng)
    paths = {pair: find_paths(g, pair[0], pair[1], l) for pair in adds}

    def draw():
        kept: list[Edge] = []
        dels: list[Edge] = []
        used: set[Edge] = set()
        for pair in adds:
            options = paths[pair]
            path = options[int(rng.integers(len(options)))]
            free = [e for e in path.edges if e not in used]
            if not free:
                if not cfg.preserve_edge_count:
                    kept.append(pair)
                continue
            w = dissimilarity_weights(g, free, ra) if weighted else np.ones(len(free))
            (edge,) = weighted_sample_without_replacement(free, w, 1, rng)
            used.add(edge)
            kept.append(pair)
            dels.append(edge)
        return kept, dels

    return _with_connectivity(g, cfg, adds, draw)


def plan_motif_random(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> EditPlan:
    return _plan_motif(g, cfg, rng, weighted=False)


def plan_motif_similarity(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> EditPlan:
    return _plan_motif(g, cfg, rng, weighted=True)


PLANNERS: dict[Mapping, Callable[[Graph, AugmentConfig, np.random.Generator], EditPlan]] = {
    Mapping.RANDOM: plan_random,
    Mapping.VERTEX_SIMILARITY: plan_vertex_similarity,
    Mapping.MOTIF_RANDOM: plan_motif_random,
    Mapping.MOTIF_SIMILARITY: plan_motif_similarity,
}


def plan_edits(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> EditPlan:
    return PLANNERS[cfg.mapping](g, cfg, rng)


def augment_graph(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> Graph:
    plan = plan_edits(g, cfg, rng)
    return g.with_edits(plan.additions, plan.deletions)


def _augment_with_plan(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> tuple[Graph, EditPlan]:
    plan = plan_edits(g, cfg, rng)
    return g.with_edits(plan.additions, plan.deletions), plan


def random_mapping(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> Graph:
    return g.with_edits(*_as_pair(plan_random(g, cfg, rng)))


def vertex_similarity_mapping(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> Graph:
    return g.with_edits(*_as_pair(plan_vertex_similarity(g, cfg, rng)))


def motif_random_mapping(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> Graph:
    return g.with_edits(*_as_pair(plan_motif_random(g, cfg, rng)))


def motif_similarity_mapping(g: Graph, cfg: AugmentConfig, rng: np.random.Generator) -> Graph:
    return g.with_edits(*_as_pair(plan_motif_similarity(g, cfg, rng)))


def _as_pair(plan: EditPlan) -> tuple[list[Edge], list[Edge]]:
    return plan.additions, plan.deletions


@dataclass
class SkipRecord:
    index: int
    reason: str
    side: str


@dataclass
class AugmentResult:
    pool: "LabeledDataset"
    skipped: list[SkipRecord]
    sources: list[int] = field(default_factory=list)
    connectivity_warnings: int = 0


def _augment_one(args):
    g, cfg, ss, fn = args
    try:
        return fn(g, cfg, np.random.default_rng(ss))
    except AugmentationInfeasible as exc:
        return exc


def augment_dataset(
    train: "LabeledDataset",
    cfg: AugmentConfig,
    seed: "int | np.random.SeedSequence | None" = None,
    *,
    iteration: int = 1,
    workers: int = 1,
    mapping: Callable[[Graph, AugmentConfig, np.random.Generator], Graph] | None = None,
) -> AugmentResult:
    """Augment every training graph once, producing the pool ``f(D_train)``.

    Graph ``k`` draws from its own substream ``seed.spawn(...)[k]``, so the pool
    does not depend on ``workers``. Graphs that cannot be augmented are left out
    of the pool and listed in ``skipped``. ``mapping`` overrides the configured
    mapping with any callable of the same shape.
    """
    from .datasets import LabeledDataset, Provenance

    if seed is None:
        seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = ss.spawn(len(train))
    jobs = [(g, cfg, s, mapping or _augment_with_plan) for g, s in zip(train.graphs, streams)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_augment_one, jobs, chunksize=16))
    else:
        outcomes = [_augment_one(job) for job in jobs]

    graphs, labels, prov, skipped, sources = [], [], [], [], []
    broken = 0
    for idx, out in enumerate(outcomes):
        if isinstance(out, AugmentationInfeasible):
            skipped.append(SkipRecord(index=idx, reason=str(out), side=out.side))
            continue
        if isinstance(out, tuple):
            out, plan = out
            broken += bool(plan.warnings)
        graphs.append(out)
        labels.append(train.labels[idx])
        prov.append(Provenance(origin=train.provenance[idx].origin, iteration=iteration))
        sources.append(idx)
    if skipped:
        logger.warning("skipped %d of %d graphs as infeasible", len(skipped), len(train))
    if broken:
        logger.warning("%d of %d augmented graphs lost connectivity after %d redraws",
                       broken, len(train), cfg.max_resample_attempts)
    pool = LabeledDataset(graphs, labels, train.class_count, prov)
    return AugmentResult(pool=pool, skipped=skipped, sources=sources, connectivity_warnings=broken)
