"""Significance graphs and tier grouping.

Institutions become nodes weighted by their z against the 10% reference
expectation; an edge joins two institutions whose indicator values are
statistically indistinguishable, either because their pairwise |z| falls
below a threshold or because their stability intervals overlap. Weak
components of that graph are performance tiers; a modularity-based
clustering is available as a finer alternative. Interval containment is
kept as a ``strong`` edge attribute rather than a directed arc.

Everything here is deterministic: node and edge order are canonical
(sorted by name), and the clustering uses a seeded node order, so results
do not depend on input order or evaluation order.
"""

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import DuplicateRecord, MissingInterval
from .ingest import InstitutionRecord
from .stats import (
    IntervalRelation,
    RelationKind,
    Z_P01,
    ci_relation,
    link_z,
    z_vs_expectation,
)

__all__ = [
    "Criterion", "GraphNode", "GraphEdge", "SignificanceGraph",
    "Grouping", "RankedRow", "GroupTable",
    "build_graph", "weak_components", "modularity", "cluster", "rank_groups",
]

# Smallest modularity improvement worth a move; also the convergence cutoff.
_GAIN_EPS = 1e-12


class Criterion(enum.Enum):
    """How indistinguishability is decided when building the graph."""

    Z_TEST = "ztest"
    CI_OVERLAP = "ci"


@dataclass(frozen=True)
class GraphNode:
    name: str
    z: float


@dataclass(frozen=True)
class GraphEdge:
    """Undirected edge; endpoints are stored in ascending name order."""

    a: str
    b: str
    z: float
    relation: Optional[IntervalRelation] = None
    strong: bool = False


@dataclass(frozen=True)
class SignificanceGraph:
    """Undirected graph of institutions with z node weights.

    Nodes are sorted by name and edges by endpoint pair, so two graphs over
    the same data compare equal regardless of construction order.
    """

    nodes: Tuple[GraphNode, ...]
    edges: Tuple[GraphEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.name)))
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise DuplicateRecord("graph nodes must have unique names")
        name_set = set(names)
        canonical = []
        seen = set()
        for e in self.edges:
            if e.a == e.b:
                raise ValueError(f"self-edge on {e.a!r}")
            if e.a not in name_set or e.b not in name_set:
                raise ValueError(f"edge ({e.a!r}, {e.b!r}) references a missing node")
            if e.a > e.b:
                e = GraphEdge(e.b, e.a, e.z, e.relation, e.strong)
            if (e.a, e.b) in seen:
                raise ValueError(f"duplicate edge ({e.a!r}, {e.b!r})")
            seen.add((e.a, e.b))
            canonical.append(e)
        object.__setattr__(
            self, "edges", tuple(sorted(canonical, key=lambda e: (e.a, e.b)))
        )

    @classmethod
    def from_scores(
        cls,
        scores: Iterable[Tuple[str, float]],
        edges: Iterable = (),
    ) -> "SignificanceGraph":
        """Build a graph directly from (name, z) pairs.

        ``edges`` items may be (a, b) pairs, (a, b, z) triples, or GraphEdge
        instances. Useful for feeding externally computed z tables.
        """
        nodes = tuple(GraphNode(name, float(z)) for name, z in scores)
        built = []
        for item in edges:
            if isinstance(item, GraphEdge):
                built.append(item)
            elif len(item) == 2:
                built.append(GraphEdge(item[0], item[1], 0.0))
            else:
                built.append(GraphEdge(item[0], item[1], float(item[2])))
        return cls(nodes=nodes, edges=tuple(built))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    @property
    def node_z(self) -> Dict[str, float]:
        return {n.name: n.z for n in self.nodes}

    def neighbors(self) -> Dict[str, List[str]]:
        adj: Dict[str, List[str]] = {n.name: [] for n in self.nodes}
        for e in self.edges:
            adj[e.a].append(e.b)
            adj[e.b].append(e.a)
        return adj

    def degree(self, name: str) -> int:
        return sum(1 for e in self.edges if name in (e.a, e.b))


@dataclass(frozen=True)
class Grouping:
    """A partition of the node set into ordered tiers.

    ``group_order`` lists group ids from the strongest tier down (by the
    maximum node z inside each group); isolate singletons come last.
    """

    assignment: Dict[str, int]
    group_order: Tuple[int, ...]
    isolates: frozenset = field(default_factory=frozenset)

    def members(self, group_id: int) -> Tuple[str, ...]:
        return tuple(sorted(n for n, g in self.assignment.items() if g == group_id))

    def groups(self) -> Tuple[Tuple[str, ...], ...]:
        return tuple(self.members(g) for g in self.group_order)


@dataclass(frozen=True)
class RankedRow:
    name: str
    z: float
    overall_rank: int
    within_group_rank: int


@dataclass(frozen=True)
class GroupTable:
    group: int
    isolate: bool
    rows: Tuple[RankedRow, ...]


def build_graph(
    records: Sequence[InstitutionRecord],
    criterion: Criterion = Criterion.Z_TEST,
    threshold: float = Z_P01,
    proportions: str = "stored",
) -> SignificanceGraph:
    """Connect institutions that are not significantly different.

    Under the z criterion an edge joins a and b when |z(a, b)| is below
    ``threshold``. Under the interval criterion an edge exists when the
    stability intervals overlap or one contains the other; containment sets
    the ``strong`` flag and every record must carry interval bounds. Node
    weights are always the z against the 10% expectation.
    """
    recs = sorted(records, key=lambda r: r.name)
    if len({r.name for r in recs}) != len(recs):
        raise DuplicateRecord("records passed to build_graph must have unique names")
    nodes = tuple(GraphNode(r.name, z_vs_expectation(r)) for r in recs)

    if criterion is Criterion.CI_OVERLAP:
        for r in recs:
            if not r.has_interval:
                raise MissingInterval(f"{r.name}: record has no stability interval")

    edges = []
    for i, a in enumerate(recs):
        for b in recs[i + 1:]:
            z = link_z(a, b, proportions)
            if criterion is Criterion.Z_TEST:
                if abs(z) < threshold:
                    edges.append(GraphEdge(a.name, b.name, z))
            else:
                rel = ci_relation(a.interval(), b.interval())
                if rel.kind is not RelationKind.DISJOINT:
                    edges.append(GraphEdge(
                        a.name, b.name, z,
                        relation=rel,
                        strong=rel.kind is RelationKind.CONTAINMENT,
                    ))
    return SignificanceGraph(nodes=nodes, edges=tuple(edges))


def _make_grouping(
    components: Iterable[Iterable[str]],
    node_z: Mapping[str, float],
    isolates: frozenset,
) -> Grouping:
    """Order components into a Grouping: non-isolates by max z, isolates last."""
    comps = [tuple(sorted(c)) for c in components]
    regular = [c for c in comps if not (len(c) == 1 and c[0] in isolates)]
    singles = [c for c in comps if len(c) == 1 and c[0] in isolates]

    def sort_key(comp):
        top = min(comp, key=lambda n: (-node_z[n], n))
        return (-node_z[top], top)

    ordered = sorted(regular, key=sort_key) + sorted(singles, key=sort_key)
    assignment = {}
    for gid, comp in enumerate(ordered):
        for name in comp:
            assignment[name] = gid
    return Grouping(
        assignment=assignment,
        group_order=tuple(range(len(ordered))),
        isolates=isolates,
    )


def weak_components(g: SignificanceGraph) -> Grouping:
    """Connected components of the undirected edge set.

    Degree-zero nodes are isolates: their own singleton groups, listed
    after the regular tiers.
    """
    adj = g.neighbors()
    seen = set()
    components = []
    for start in g.names:
        if start in seen:
            continue
        stack = [start]
        comp = []
        seen.add(start)
        while stack:
            n = stack.pop()
            comp.append(n)
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        components.append(comp)
    isolates = frozenset(n for n, ns in adj.items() if not ns)
    return _make_grouping(components, g.node_z, isolates)


def _check_partition(g: SignificanceGraph, grouping: Grouping) -> None:
    missing = [n for n in g.names if n not in grouping.assignment]
    if missing:
        raise ValueError(f"partition does not cover nodes: {missing[:5]}")


def modularity(
    g: SignificanceGraph, partition: Grouping, resolution: float = 1.0
) -> float:
    """Newman modularity Q of a partition, with a resolution multiplier.

    Q = sum over groups of [intra_edges/m - resolution * (degree_sum/2m)^2]
    on unweighted edges. Defined as 0 for an edgeless graph. Q <= 1, and a
    partition into all singletons is never positive.
    """
    _check_partition(g, partition)
    m = len(g.edges)
    if m == 0:
        return 0.0
    intra: Dict[int, int] = {}
    degree_sum: Dict[int, int] = {}
    for e in g.edges:
        ga, gb = partition.assignment[e.a], partition.assignment[e.b]
        degree_sum[ga] = degree_sum.get(ga, 0) + 1
        degree_sum[gb] = degree_sum.get(gb, 0) + 1
        if ga == gb:
            intra[ga] = intra.get(ga, 0) + 1
    q = 0.0
    groups = set(partition.assignment[n] for n in g.names)
    for c in groups:
        mc = intra.get(c, 0)
        dc = degree_sum.get(c, 0)
        q += mc / m - resolution * (dc / (2.0 * m)) ** 2
    return q


def _louvain(
    adj: Dict[str, Dict[str, float]],
    resolution: float,
    seed: int,
) -> Dict[str, int]:
    """Greedy modularity maximization: local moving plus aggregation.

    Node visit order is a seeded shuffle, candidate communities are scanned
    in sorted order, and ties keep the current community, so the result is
    a pure function of (graph, resolution, seed).
    """
    rng = random.Random(seed)
    names = sorted(adj)
    # nodes of the current aggregation level, each a tuple of original names
    level_nodes: List[Tuple[str, ...]] = [(n,) for n in names]
    graph: Dict[int, Dict[int, float]] = {i: {} for i in range(len(names))}
    index = {n: i for i, n in enumerate(names)}
    for a, nbrs in adj.items():
        for b, w in nbrs.items():
            if a != b:
                graph[index[a]][index[b]] = w

    while True:
        ids = sorted(graph)
        # self-loop weight graph[i][i] is the intra weight, counted twice in degree
        degree = {}
        for i in ids:
            d = 0.0
            for j, w in graph[i].items():
                d += 2.0 * w if j == i else w
            degree[i] = d
        two_m = math.fsum(degree.values())
        if two_m == 0:
            break

        comm = {i: i for i in ids}
        comm_tot = dict(degree)

        order = list(ids)
        rng.shuffle(order)

        moved_any = False
        improved = True
        while improved:
            improved = False
            for i in order:
                old = comm[i]
                k_i = degree[i]
                comm_tot[old] -= k_i
                links: Dict[int, float] = {}
                for j, w in graph[i].items():
                    if j != i:
                        links[comm[j]] = links.get(comm[j], 0.0) + w

                def score(c: int) -> float:
                    return links.get(c, 0.0) - resolution * k_i * comm_tot[c] / two_m

                best, best_score = old, score(old)
                for c in sorted(links):
                    s = score(c)
                    if s > best_score + _GAIN_EPS * two_m / 2.0:
                        best, best_score = c, s
                comm[i] = best
                comm_tot[best] += k_i
                if best != old:
                    improved = True
                    moved_any = True

        if not moved_any:
            break

        # aggregate communities into nodes of the next level
        new_ids = {}
        for i in ids:
            new_ids.setdefault(comm[i], len(new_ids))
        next_nodes: List[List[str]] = [[] for _ in range(len(new_ids))]
        for i in ids:
            next_nodes[new_ids[comm[i]]].extend(level_nodes[i])
        next_graph: Dict[int, Dict[int, float]] = {c: {} for c in range(len(new_ids))}
        for i in ids:
            ci = new_ids[comm[i]]
            for j, w in graph[i].items():
                cj = new_ids[comm[j]]
                if i == j:
                    next_graph[ci][ci] = next_graph[ci].get(ci, 0.0) + w
                elif i < j:
                    if ci == cj:
                        next_graph[ci][ci] = next_graph[ci].get(ci, 0.0) + w
                    else:
                        next_graph[ci][cj] = next_graph[ci].get(cj, 0.0) + w
                        next_graph[cj][ci] = next_graph[cj].get(ci, 0.0) + w

        level_nodes = [tuple(sorted(ns)) for ns in next_nodes]
        graph = next_graph

    # final membership from the surviving level nodes
    out = {}
    for c, members in enumerate(level_nodes):
        for n in members:
            out[n] = c
    return out


def cluster(
    g: SignificanceGraph, resolution: float = 1.0, seed: int = 0
) -> Grouping:
    """Deterministic greedy modularity clustering of the graph.

    Runs seeded local moving with aggregation until no move improves Q by
    more than 1e-12, then keeps whichever of (clustering, weak components)
    scores the higher modularity, so the result is never worse than the
    plain tier partition. Isolates stay singletons, and every cluster lies
    inside one weak component.
    """
    if not g.edges:
        return weak_components(g)

    adj: Dict[str, Dict[str, float]] = {n: {} for n in g.names}
    for e in g.edges:
        adj[e.a][e.b] = 1.0
        adj[e.b][e.a] = 1.0

    membership = _louvain(adj, resolution, seed)
    comps: Dict[int, List[str]] = {}
    for n, c in membership.items():
        comps.setdefault(c, []).append(n)
    isolates = frozenset(n for n, ns in adj.items() if not ns)
    louvain_grouping = _make_grouping(comps.values(), g.node_z, isolates)

    weak = weak_components(g)
    if modularity(g, louvain_grouping, resolution) >= modularity(g, weak, resolution):
        return louvain_grouping
    return weak


def rank_groups(g: SignificanceGraph, grouping: Grouping) -> Tuple[GroupTable, ...]:
    """Ranked tier tables: per-group rows by descending z plus overall ranks.

    Ranks are 1-based and dense; ties in z order by ascending name, both
    within groups and overall.
    """
    _check_partition(g, grouping)
    listed = set(grouping.group_order)
    stray = sorted({grouping.assignment[n] for n in g.names} - listed)
    if stray:
        raise ValueError(f"group ids missing from group_order: {stray[:5]}")
    zmap = g.node_z
    order = sorted(zmap, key=lambda n: (-zmap[n], n))
    overall = {name: i + 1 for i, name in enumerate(order)}

    tables = []
    for gid in grouping.group_order:
        members = sorted(
            grouping.members(gid), key=lambda n: (-zmap[n], n)
        )
        rows = tuple(
            RankedRow(
                name=n,
                z=zmap[n],
                overall_rank=overall[n],
                within_group_rank=i + 1,
            )
            for i, n in enumerate(members)
        )
        is_isolate = len(members) == 1 and members[0] in grouping.isolates
        tables.append(GroupTable(group=gid, isolate=is_isolate, rows=rows))
    return tuple(tables)
