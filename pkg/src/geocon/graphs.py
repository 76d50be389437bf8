"""County connectivity: border adjacency and socioeconomic-similarity graphs.

Both constructions are time-invariant, so one static topology per
(state, kind) is built and node features alone vary over time. Border
edges carry weight 1.0; socioeconomic edges carry the Euclidean distance
between the counties' scaled 9-index vectors.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .validation import check_fips, check_square, state_prefix

log = logging.getLogger(__name__)

SOCIO_HEADER = ("fips", "index_name", "value")

SOCIO_INDEX_NAMES = (
    "Socioeconomic Status",
    "Household Composition & Disability",
    "Minority Status & Language",
    "Housing Type & Transportation",
    "Overall Vulnerability Index",
    "Historic Undervaccination",
    "Sociodemographic Barriers",
    "Resource-Constrained Healthcare System",
    "Healthcare Accessibility Barriers",
)


def socio_slug(index_name: str) -> str:
    """Short panel-variable id for a socioeconomic index name."""
    slug = "".join(ch if ch.isalnum() else "_" for ch in index_name.lower())
    while "__" in slug:
        slug = slug.replace("__", "_")
    return "socio_" + slug.strip("_")


SOCIO_SLUGS = tuple(socio_slug(name) for name in SOCIO_INDEX_NAMES)


@dataclass
class SocioVector:
    """The nine socioeconomic indices of one county, in canonical order."""

    fips: str
    indices: np.ndarray

    def __post_init__(self):
        check_fips(self.fips)
        self.indices = np.asarray(self.indices, dtype=np.float64)
        if self.indices.shape != (len(SOCIO_INDEX_NAMES),):
            raise ValueError(
                f"county {self.fips}: expected {len(SOCIO_INDEX_NAMES)} indices, "
                f"got shape {self.indices.shape}")
        if not np.isfinite(self.indices).all():
            bad = SOCIO_INDEX_NAMES[int(np.argmin(np.isfinite(self.indices)))]
            raise ValueError(f"county {self.fips}: non-finite index {bad!r}")


@dataclass
class CountyGraph:
    """Undirected weighted graph over an ordered county list.

    Edges are stored once as (i, j, weight) with i < j; there are no
    self-loops by construction.
    """

    nodes: list[str]
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    kind: str = "border"

    def __post_init__(self):
        seen = set()
        canon = []
        for i, j, w in self.edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if w < 0:
                raise ValueError(f"negative edge weight {w}")
            a, b = (i, j) if i < j else (j, i)
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            canon.append((a, b, float(w)))
        self.edges = sorted(canon)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index_edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in self.edges]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.intp)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def edge_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.edges}

    def to_json(self) -> dict:
        return {"nodes": list(self.nodes),
                "edges": [[i, j, w] for i, j, w in self.edges],
                "kind": self.kind}

    @classmethod
    def from_json(cls, obj: dict) -> "CountyGraph":
        return cls(nodes=list(obj["nodes"]),
                   edges=[(int(i), int(j), float(w)) for i, j, w in obj["edges"]],
                   kind=obj["kind"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CountyGraph":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def load_socio_csv(path: str | Path) -> list[SocioVector]:
    """Read the socioeconomic index CSV (fips,index_name,value) into one
    complete 9-vector per county; a missing index is an error naming the
    (fips, index_name) pair."""
    position = {name: i for i, name in enumerate(SOCIO_INDEX_NAMES)}
    rows: dict[str, np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != list(SOCIO_HEADER):
            raise ValueError(f"{path}: expected header {','.join(SOCIO_HEADER)}")
        for row in reader:
            fips = check_fips((row["fips"] or "").strip())
            name = (row["index_name"] or "").strip()
            if name not in position:
                raise ValueError(f"{path}: unknown index name {name!r} for county {fips}")
            rows.setdefault(fips, np.full(len(SOCIO_INDEX_NAMES), np.nan))[position[name]] = \
                float(row["value"])
    vectors = []
    for fips in sorted(rows):
        values = rows[fips]
        missing = np.where(~np.isfinite(values))[0]
        if missing.size:
            raise ValueError(
                f"county {fips} is missing index {SOCIO_INDEX_NAMES[int(missing[0])]!r}")
        vectors.append(SocioVector(fips, values))
    return vectors


def parse_adjacency(path: str | Path) -> list[tuple[str, str, str, str]]:
    """Pipe-separated adjacency records: name|fips|neighbor_name|neighbor_fips.

    Names may be quoted; whitespace around fields is ignored.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip().strip('"') for p in line.split("|")]
            if len(parts) != 4:
                raise ValueError(f"{path}:{line_num}: expected 4 pipe-separated fields")
            name, fips, n_name, n_fips = parts
            check_fips(fips)
            check_fips(n_fips)
            records.append((name, fips, n_name, n_fips))
    return records


def county_names(path: str | Path) -> dict[str, str]:
    """fips -> display name, from both sides of an adjacency file."""
    names: dict[str, str] = {}
    for name, fips, n_name, n_fips in parse_adjacency(path):
        names.setdefault(fips, name)
        names.setdefault(n_fips, n_name)
    return names


def build_border_graph(path: str | Path, state: str,
                       county_order: Sequence[str] | None = None) -> CountyGraph:
    """Border graph for one state; cross-state records are dropped, weights
    are 1.0. With ``county_order`` given, counties outside it are dropped
    with a warning and the node order is taken verbatim."""
    if not (len(state) == 2 and state.isdigit()):
        raise ValueError(f"state must be a 2-digit FIPS prefix, got {state!r}")
    pairs = set()
    seen = set()
    for _, fips, _, n_fips in parse_adjacency(path):
        if state_prefix(fips) != state:
            continue
        seen.add(fips)
        if fips == n_fips or state_prefix(n_fips) != state:
            continue
        seen.add(n_fips)
        pairs.add((min(fips, n_fips), max(fips, n_fips)))

    if county_order is None:
        nodes = sorted(seen)
    else:
        nodes = list(county_order)
        extra = seen - set(nodes)
        if extra:
            log.warning("dropping %d adjacency counties absent from the panel: %s",
                        len(extra), sorted(extra))
    index = {fips: i for i, fips in enumerate(nodes)}
    edges = [(index[a], index[b], 1.0) for a, b in sorted(pairs)
             if a in index and b in index]
    return CountyGraph(nodes=nodes, edges=edges, kind="border")


def socio_distance_matrix(vectors: Sequence[SocioVector],
                          scaling: str = "zscore") -> np.ndarray:
    """Pairwise Euclidean distances between county index vectors.

    ``scaling="zscore"`` standardizes each of the nine indices across
    counties first (they live on heterogeneous scales); ``"none"`` uses the
    raw values.
    """
    if scaling not in ("zscore", "none"):
        raise ValueError(f"unknown scaling policy {scaling!r}")
    x = np.stack([v.indices for v in vectors])
    if scaling == "zscore":
        std = x.std(axis=0)
        std[std == 0.0] = 1.0
        x = (x - x.mean(axis=0)) / std
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, 0.0)
    return (dist + dist.T) / 2.0


@dataclass(frozen=True)
class TopK:
    k: int


@dataclass(frozen=True)
class Threshold:
    d: float


def build_socio_graph(matrix: np.ndarray, nodes: Sequence[str],
                      rule: "TopK | Threshold") -> CountyGraph:
    """Socioeconomic graph from a distance matrix.

    top-k keeps each node's k nearest neighbors and symmetrizes the union
    (so degrees can exceed k); threshold keeps every pair at distance <= d.
    Edge weights are the matrix distances.
    """
    m = check_square(matrix, "distance matrix")
    n = m.shape[0]
    if len(nodes) != n:
        raise ValueError(f"{len(nodes)} nodes for a {n}x{n} matrix")
    pairs: set[tuple[int, int]] = set()
    if isinstance(rule, TopK):
        if not 1 <= rule.k < n:
            raise ValueError(f"k must be in [1, {n - 1}], got {rule.k}")
        for i in range(n):
            d = m[i].copy()
            d[i] = np.inf
            nearest = np.argsort(d, kind="stable")[: rule.k]
            for j in nearest:
                pairs.add((min(i, int(j)), max(i, int(j))))
    elif isinstance(rule, Threshold):
        if rule.d < 0:
            raise ValueError(f"threshold must be nonnegative, got {rule.d}")
        for i in range(n):
            for j in range(i + 1, n):
                if m[i, j] <= rule.d:
                    pairs.add((i, j))
    else:
        raise TypeError(f"unknown selection rule {rule!r}")
    edges = [(i, j, float(m[i, j])) for i, j in sorted(pairs)]
    return CountyGraph(nodes=list(nodes), edges=edges, kind="socio")


@dataclass
class CentralityEntry:
    fips: str
    degree: int
    score: float
    rank: int


def degree_centrality(graph: CountyGraph) -> list[CentralityEntry]:
    """Degree / (N-1) per node with dense ranks (ties share a rank);
    entries come back sorted by (rank, fips) for presentation."""
    if graph.n == 0:
        raise ValueError("empty graph")
    deg = graph.degrees()
    scores = deg / (graph.n - 1) if graph.n > 1 else np.zeros(graph.n)
    distinct = sorted(set(deg.tolist()), reverse=True)
    rank_of = {d: r + 1 for r, d in enumerate(distinct)}
    entries = [CentralityEntry(fips, int(deg[i]), float(scores[i]), rank_of[int(deg[i])])
               for i, fips in enumerate(graph.nodes)]
    return sorted(entries, key=lambda e: (e.rank, e.fips))
