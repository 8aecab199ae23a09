"""Labelled graph datasets: TU-format loading, summary statistics and pool files."""

from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .graph import Graph

logger = logging.getLogger(__name__)

POOL_MAGIC = "MEVOLVE-POOL"
POOL_VERSION = 1


class ParseError(ValueError):
    """Malformed TU dataset file; the message carries file name and line number."""


class SchemaError(ValueError):
    """Malformed or incompatible pool file."""


@dataclass(frozen=True)
class Provenance:
    """Where an example came from.

    ``origin`` is the index, in the loaded dataset, of the original graph the
    example descends from. ``iteration`` is ``None`` for original graphs and
    the evolution iteration that produced the example otherwise.
    """

    origin: int
    iteration: int | None = None

    @property
    def augmented(self) -> bool:
        return self.iteration is not None


@dataclass
class LabeledDataset:
    graphs: list[Graph]
    labels: list[int]
    class_count: int
    provenance: list[Provenance] = field(default_factory=list)
    label_values: list[str] | None = None

    def __post_init__(self) -> None:
        self.graphs = list(self.graphs)
        self.labels = [int(y) for y in self.labels]
        if not self.provenance:
            self.provenance = [Provenance(i) for i in range(len(self.graphs))]
        else:
            self.provenance = list(self.provenance)
        if not (len(self.graphs) == len(self.labels) == len(self.provenance)):
            raise ValueError("graphs, labels and provenance must have equal lengths")
        bad = [y for y in self.labels if not 0 <= y < self.class_count]
        if bad:
            raise ValueError(f"label {bad[0]} outside [0, {self.class_count})")

    def __len__(self) -> int:
        return len(self.graphs)

    def subset(self, indices: Iterable[int]) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(
            [self.graphs[i] for i in idx],
            [self.labels[i] for i in idx],
            self.class_count,
            [self.provenance[i] for i in idx],
            self.label_values,
        )

    def __add__(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.class_count != self.class_count:
            raise ValueError("cannot merge datasets with different class counts")
        return LabeledDataset(
            self.graphs + other.graphs,
            self.labels + other.labels,
            self.class_count,
            self.provenance + other.provenance,
            self.label_values,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and self.graphs == other.graphs
            and self.labels == other.labels
            and self.provenance == other.provenance
        )


@dataclass(frozen=True)
class DatasetStats:
    graph_count: int
    class_count: int
    avg_vertices: float
    min_vertices: int
    max_vertices: int
    avg_edges: float
    min_edges: int
    max_edges: int
    bias: float


def dataset_stats(d: LabeledDataset) -> DatasetStats:
    if len(d) == 0:
        raise ValueError("statistics need a non-empty dataset")
    ns = [g.n for g in d.graphs]
    ms = [g.m for g in d.graphs]
    dominant = Counter(d.labels).most_common(1)[0][1]
    return DatasetStats(
        graph_count=len(d),
        class_count=d.class_count,
        avg_vertices=sum(ns) / len(ns),
        min_vertices=min(ns),
        max_vertices=max(ns),
        avg_edges=sum(ms) / len(ms),
        min_edges=min(ms),
        max_edges=max(ms),
        bias=dominant / len(d),
    )


# --- TU benchmark format ---------------------------------------------------

def _read_ints(path: Path, width: int | None) -> list[list[int]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if width is not None and len(parts) != width:
                raise ParseError(f"{path.name}:{lineno}: expected {width} fields, got {len(parts)}")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise ParseError(f"{path.name}:{lineno}: non-integer token in {text!r}") from None
    return rows


def _read_labels(path: Path) -> list[str]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                int(text)
            except ValueError:
                try:
                    float(text)
                except ValueError:
                    raise ParseError(f"{path.name}:{lineno}: non-numeric label {text!r}") from None
            out.append(text)
    return out


def resolve_dataset_dir(root: str | os.PathLike, name: str) -> Path:
    """``root/name`` if it holds the dataset files, else ``root`` itself."""
    root = Path(root)
    for cand in (root / name, root):
        if (cand / f"{name}_A.txt").is_file():
            return cand
    return root / name


def load_tu_dataset(directory: str | os.PathLike, name: str) -> LabeledDataset:
    """Load ``<name>_A.txt``, ``<name>_graph_indicator.txt`` and ``<name>_graph_labels.txt``.

    Vertex ids are renumbered 0-based within each graph (in global id order),
    reciprocal and duplicate edge lines collapse, self-loops are dropped, and
    graph labels are remapped to ``0..K-1`` in ascending order of their value.
    """
    base = resolve_dataset_dir(directory, name)
    files = {k: base / f"{name}_{k}.txt" for k in ("A", "graph_indicator", "graph_labels")}
    for path in files.values():
        if not path.is_file():
            raise FileNotFoundError(f"missing dataset file {path}")
    extras = sorted(p.name for p in base.glob(f"{name}_*.txt") if p not in files.values())
    if extras:
        logger.info("ignoring attribute files: %s", ", ".join(extras))

    indicator = [row[0] for row in _read_ints(files["graph_indicator"], 1)]
    raw_labels = _read_labels(files["graph_labels"])
    n_graphs = len(raw_labels)
    for lineno, gid in enumerate(indicator, 1):
        if not 1 <= gid <= n_graphs:
            raise ParseError(f"{files['graph_indicator'].name}:{lineno}: graph id {gid} outside 1..{n_graphs}")

    local: list[int] = []
    sizes = [0] * n_graphs
    for gid in indicator:
        local.append(sizes[gid - 1])
        sizes[gid - 1] += 1

    edges: list[set[tuple[int, int]]] = [set() for _ in range(n_graphs)]
    self_loops = 0
    for lineno, (u, v) in enumerate(_read_ints(files["A"], 2), 1):
        for x in (u, v):
            if not 1 <= x <= len(indicator):
                raise ParseError(f"{files['A'].name}:{lineno}: vertex {x} not in graph indicator")
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise ParseError(f"{files['A'].name}:{lineno}: edge ({u}, {v}) joins graphs {gu} and {gv}")
        if u == v:
            self_loops += 1
            continue
        a, b = local[u - 1], local[v - 1]
        edges[gu - 1].add((min(a, b), max(a, b)))
    if self_loops:
        logger.warning("dropped %d self-loop lines from %s", self_loops, files["A"].name)

    values = sorted(set(raw_labels), key=float)
    remap = {v: k for k, v in enumerate(values)}
    logger.info("label mapping for %s: %s", name, {v: remap[v] for v in values})
    graphs = [Graph(sizes[k], edges[k]) for k in range(n_graphs)]
    return LabeledDataset(graphs, [remap[v] for v in raw_labels], len(values), label_values=values)


# --- pool files --------------------------------------------------------------

def save_pool(pool: LabeledDataset, path: str | os.PathLike) -> None:
    """Write ``pool`` in the line-oriented pool schema (see docs/formats.md)."""
    lines = [f"{POOL_MAGIC} {POOL_VERSION}", f"classes {pool.class_count}", f"graphs {len(pool)}"]
    for g, y, prov in zip(pool.graphs, pool.labels, pool.provenance):
        it = "-" if prov.iteration is None else str(prov.iteration)
        lines.append(f"graph {g.n} {g.m} {y} {prov.origin} {it}")
        lines.extend(f"{u} {v}" for u, v in g.sorted_edges())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _ints(tokens: Sequence[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise SchemaError(f"line {lineno}: expected integers, got {' '.join(tokens)!r}") from None


def load_pool(path: str | os.PathLike) -> LabeledDataset:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    pos = 0

    def take(expect: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise SchemaError(f"line {pos + 1}: unexpected end of file, expected {expect!r}")
        tokens = lines[pos].split()
        pos += 1
        if not tokens or tokens[0] != expect:
            raise SchemaError(f"line {pos}: expected {expect!r} record, got {lines[pos - 1]!r}")
        return tokens[1:]

    head = take(POOL_MAGIC)
    if head != [str(POOL_VERSION)]:
        raise SchemaError(f"line 1: unsupported pool schema version {' '.join(head)!r}")
    (k,) = _ints(take("classes"), pos)
    (count,) = _ints(take("graphs"), pos)
    graphs, labels, prov = [], [], []
    for _ in range(count):
        fields = take("graph")
        if len(fields) != 5:
            raise SchemaError(f"line {pos}: graph header needs 5 fields")
        n, m, y, origin = _ints(fields[:4], pos)
        iteration = None if fields[4] == "-" else _ints(fields[4:], pos)[0]
        edges = []
        for _ in range(m):
            if pos >= len(lines):
                raise SchemaError(f"line {pos + 1}: unexpected end of file inside edge list")
            pos += 1
            tokens = lines[pos - 1].split()
            if len(tokens) != 2:
                raise SchemaError(f"line {pos}: edge line needs 2 fields")
            edges.append(tuple(_ints(tokens, pos)))
        try:
            g = Graph(n, edges)
        except ValueError as exc:
            raise SchemaError(f"line {pos}: {exc}") from None
        if g.m != m:
            raise SchemaError(f"line {pos}: duplicate edges in graph block")
        graphs.append(g)
        labels.append(y)
        prov.append(Provenance(origin, iteration))
    if any(line.strip() for line in lines[pos:]):
        raise SchemaError(f"line {pos + 1}: trailing content after last graph")
    try:
        return LabeledDataset(graphs, labels, k, prov)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
