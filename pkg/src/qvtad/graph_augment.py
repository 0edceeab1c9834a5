"""Per-attribute comparison graphs and transitive pair mining.

Annotated judgements form a directed graph per attribute (edge u -> v means
"v stronger than u"). Assuming comparisons are transitive, unannotated pairs
connected by directed paths are candidate pseudo-labels. Mining is guarded
three ways: a disjoint-set union pre-filter on weak connectivity, a minimum
shortest-path length (a mined pair must be a genuinely transitive inference),
and multi-path voting (number of distinct simple directed paths). Nodes in
any strongly connected component of size >= 2 (contradictory annotations) are
quarantined and never mined through.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .corpus.types import ORIGIN_MINED, ComparisonRecord
from .errors import ConfigError

log = logging.getLogger(__name__)


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self):
        self.parent: Dict[str, str] = {}
        self.size: Dict[str, int] = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def connected(self, a, b):
        return self.find(a) == self.find(b)


class ComparisonGraph:
    """Directed graph over speakers for one attribute; deduplicated edges."""

    def __init__(self, attribute):
        self.attribute = attribute
        self.nodes: Set[str] = set()
        self.succ: Dict[str, Set[str]] = {}
        self.pred: Dict[str, Set[str]] = {}
        self.edges: Set[Tuple[str, str]] = set()
        self.rejected: List = []

    def add_node(self, u):
        if u not in self.nodes:
            self.nodes.add(u)
            self.succ[u] = set()
            self.pred[u] = set()

    def add_edge(self, u, v):
        self.add_node(u)
        self.add_node(v)
        if (u, v) not in self.edges:
            self.edges.add((u, v))
            self.succ[u].add(v)
            self.pred[v].add(u)

    def n_edges(self):
        return len(self.edges)


def build_graph(records, attribute) -> ComparisonGraph:
    """Edges weaker -> stronger for the given attribute; self-loops are dropped."""
    g = ComparisonGraph(attribute)
    for rec in records:
        if rec.attribute != attribute:
            continue
        if rec.weaker == rec.stronger:
            log.warning("attribute %s: rejecting self-comparison of %r", attribute, rec.weaker)
            g.rejected.append(rec)
            continue
        g.add_edge(rec.weaker, rec.stronger)
    return g


def dsu_union_find(graph: ComparisonGraph) -> DisjointSet:
    """Disjoint-set over the graph's nodes, ignoring edge direction."""
    dsu = DisjointSet()
    for node in graph.nodes:
        dsu.add(node)
    for u, v in graph.edges:
        dsu.union(u, v)
    return dsu


def detect_inconsistencies(graph: ComparisonGraph) -> List[Set[str]]:
    """Strongly connected components of size >= 2 (annotation contradictions).

    Empty result iff the graph is a DAG. Iterative Tarjan, canonical order.
    """
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack: Set[str] = set()
    stack: List[str] = []
    counter = [0]
    sccs: List[Set[str]] = []

    for start in sorted(graph.nodes):
        if start in index:
            continue
        work = [(start, iter(sorted(graph.succ[start])))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(graph.succ[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                if len(comp) >= 2:
                    sccs.append(comp)
    sccs.sort(key=lambda c: min(c))
    return sccs


def count_directed_paths(graph: ComparisonGraph, u, v, max_len, cap) -> int:
    """Distinct simple directed paths u -> v with at most max_len edges.

    Counting stops early once `cap` paths are found. Intended for graphs whose
    cycles have been quarantined; simple-path semantics keep it finite anyway.
    """
    if u not in graph.nodes or v not in graph.nodes:
        return 0
    count = 0
    path_set = {u}

    def dfs(node, depth):
        nonlocal count
        if count >= cap:
            return
        if node == v:
            count += 1
            return
        if depth == max_len:
            return
        for nxt in sorted(graph.succ[node]):
            if nxt not in path_set:
                path_set.add(nxt)
                dfs(nxt, depth + 1)
                path_set.discard(nxt)
                if count >= cap:
                    return

    dfs(u, 0)
    return count


def _reachable(graph: ComparisonGraph, src) -> Dict[str, int]:
    """BFS shortest directed path lengths (in edges) from src."""
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt_frontier = []
        for node in frontier:
            for nxt in graph.succ[node]:
                if nxt not in dist:
                    dist[nxt] = dist[node] + 1
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    return dist


@dataclass(frozen=True)
class MiningConfig:
    min_path_len: int = 2
    min_votes: int = 2
    max_path_len: Optional[int] = 6   # None = unbounded (limited by graph size)
    confidence_rule: str = "vote_fraction"  # or "constant"
    count_cap: int = 100_000

    def __post_init__(self):
        if self.min_path_len < 2:
            raise ConfigError("min_path_len must be >= 2")
        if self.max_path_len is not None and self.max_path_len < self.min_path_len:
            raise ConfigError("max_path_len must be >= min_path_len")
        if self.min_votes < 1:
            raise ConfigError("min_votes must be >= 1")
        if self.confidence_rule not in ("vote_fraction", "constant"):
            raise ConfigError(f"unknown confidence_rule {self.confidence_rule!r}")


@dataclass(frozen=True)
class MinedPair:
    weaker: str
    stronger: str
    attribute: int
    path_count: int
    shortest_path: int
    confidence: float


def mine_pairs(graph: ComparisonGraph, cfg: MiningConfig,
               annotated: Set[Tuple[str, str]]) -> List[MinedPair]:
    """Pseudo-labeled pairs supported by directed paths in the graph.

    Nodes inside a strongly connected component of size >= 2 are quarantined:
    pairs touching them are skipped (with a diagnostic) and paths never route
    through them. A remaining pair (u, v) is mined when it is not annotated,
    u and v share a DSU component, the shortest directed path u -> v has
    length >= min_path_len, at least min_votes distinct simple paths support
    it, and no directed path v -> u exists. Output is sorted (weaker,
    stronger), independent of insertion order.
    """
    quarantined = set()
    sccs = detect_inconsistencies(graph)
    for comp in sccs:
        quarantined |= comp
    if quarantined:
        log.warning("attribute %s: quarantined %d nodes in %d inconsistent cycles",
                    graph.attribute, len(quarantined), len(sccs))
        clean = ComparisonGraph(graph.attribute)
        for node in graph.nodes:
            if node not in quarantined:
                clean.add_node(node)
        for u, v in graph.edges:
            if u not in quarantined and v not in quarantined:
                clean.add_edge(u, v)
    else:
        clean = graph

    dsu = dsu_union_find(clean)
    max_len = cfg.max_path_len if cfg.max_path_len is not None else max(1, len(clean.nodes))

    dists = {u: _reachable(clean, u) for u in clean.nodes}
    mined = []
    for u in sorted(clean.nodes):
        for v, dist in sorted(dists[u].items()):
            if v == u:
                continue
            if (u, v) in annotated:
                continue
            if not dsu.connected(u, v):
                continue
            if dist < cfg.min_path_len or dist > max_len:
                continue
            if u in dists[v]:  # reverse path: contradictory inference
                continue
            votes = count_directed_paths(clean, u, v, max_len, cfg.count_cap)
            if votes < cfg.min_votes:
                continue
            if cfg.confidence_rule == "vote_fraction":
                confidence = min(1.0, votes / cfg.min_votes)
            else:
                confidence = 1.0
            mined.append(MinedPair(u, v, graph.attribute, votes, dist, confidence))
    return mined


@dataclass
class AttributeStats:
    n_annotated: int = 0
    n_mined: int = 0
    n_cycles: int = 0


@dataclass
class AugmentStats:
    per_attribute: Dict[int, AttributeStats] = field(default_factory=dict)

    @property
    def total_annotated(self):
        return sum(s.n_annotated for s in self.per_attribute.values())

    @property
    def total_mined(self):
        return sum(s.n_mined for s in self.per_attribute.values())

    @property
    def total_cycles(self):
        return sum(s.n_cycles for s in self.per_attribute.values())

    def to_text(self, vocab=None):
        lines = [f"{'attribute':<16} {'annotated':>9} {'mined':>7} {'cycles':>6}"]
        for attr in sorted(self.per_attribute):
            s = self.per_attribute[attr]
            name = vocab.name_of(attr) if vocab is not None else str(attr)
            lines.append(f"{name:<16} {s.n_annotated:>9} {s.n_mined:>7} {s.n_cycles:>6}")
        lines.append(f"{'total':<16} {self.total_annotated:>9} {self.total_mined:>7} "
                     f"{self.total_cycles:>6}")
        return "\n".join(lines)

    def to_kv(self, vocab=None):
        lines = []
        for attr in sorted(self.per_attribute):
            s = self.per_attribute[attr]
            name = vocab.name_of(attr) if vocab is not None else str(attr)
            lines.append(f"attribute.{name}.n_annotated={s.n_annotated}")
            lines.append(f"attribute.{name}.n_mined={s.n_mined}")
            lines.append(f"attribute.{name}.n_cycles={s.n_cycles}")
        lines.append(f"total.n_annotated={self.total_annotated}")
        lines.append(f"total.n_mined={self.total_mined}")
        lines.append(f"total.n_cycles={self.total_cycles}")
        return "\n".join(lines)


def augment_all(records, vocab, cfg: MiningConfig):
    """Mine every attribute's graph; returns (annotated + mined records, stats)."""
    stats = AugmentStats()
    augmented = list(records)
    for attr in range(vocab.size):
        attr_records = [r for r in records if r.attribute == attr]
        if not attr_records:
            continue
        graph = build_graph(attr_records, attr)
        annotated_pairs = {(r.weaker, r.stronger) for r in attr_records}
        mined = mine_pairs(graph, cfg, annotated_pairs)
        stats.per_attribute[attr] = AttributeStats(
            n_annotated=len(annotated_pairs),
            n_mined=len(mined),
            n_cycles=len(detect_inconsistencies(graph)),
        )
        for m in mined:
            augmented.append(ComparisonRecord(
                m.weaker, m.stronger, attr, ORIGIN_MINED, m.confidence))
    return augmented, stats
