"""Clickstream graphs and the five characteristic browsing patterns.

A session's graph has one node per distinct URL (carrying its first-visit
serial number, summed dwell, and visit count) and one counted directed
edge per consecutive visit pair. On top of the undirected view, five
structural patterns are detected:

* concentrated cluster - a biconnected block joined to the rest of the
  stream through exactly one articulation node;
* hesitation leaf - a small tree appendage hanging off a cluster or ring;
* directed ring - a degree-<=2 chain that is not part of any cluster and
  whose endpoints are not adjacent;
* breadth star - a node with two or more children in the first-visit
  spanning tree;
* intersected overlap - a URL present in the graphs of several users.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyPath, FewerThanTwoGraphs
from .paths import ActionPath


@dataclass
class NodeInfo:
    first_visit_order: int
    total_dwell: float
    visit_count: int
    first_visit_parent: int | None


@dataclass
class ClickGraph:
    """Directed multigraph of one user's clickstream (multi-edges counted)."""

    owner: str
    nodes: dict[int, NodeInfo] = field(default_factory=dict)
    edges: dict[tuple[int, int], int] = field(default_factory=dict)

    def undirected_adjacency(self) -> dict[int, list[int]]:
        """Simple undirected view: multi-edges collapsed, self-loops dropped."""
        adj: dict[int, set[int]] = {n: set() for n in self.nodes}
        for (a, b) in self.edges:
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        return {n: sorted(neigh) for n, neigh in adj.items()}

    def order_of(self, node: int) -> int:
        return self.nodes[node].first_visit_order


def build_graph(path: ActionPath) -> ClickGraph:
    """Aggregate a path into its click graph.

    Nodes keep the first-visit serial number and the dwell summed over
    revisits; consecutive visit pairs become counted directed edges.
    """
    if len(path.actions) == 0:
        raise EmptyPath(f"path {path.session_id!r} has no actions")
    g = ClickGraph(owner=path.user_id)
    prev: int | None = None
    for url_id, dwell in path.actions:
        info = g.nodes.get(url_id)
        if info is None:
            g.nodes[url_id] = NodeInfo(
                first_visit_order=len(g.nodes) + 1,
                total_dwell=dwell,
                visit_count=1,
                first_visit_parent=prev,
            )
        else:
            info.total_dwell += dwell
            info.visit_count += 1
        if prev is not None:
            key = (prev, url_id)
            g.edges[key] = g.edges.get(key, 0) + 1
        prev = url_id
    return g


def biconnected_components(
    adj: dict[int, list[int]]
) -> tuple[list[frozenset[int]], set[int]]:
    """Biconnected blocks and articulation points (iterative Hopcroft-Tarjan).

    ``adj`` must be a simple undirected adjacency map. Blocks are vertex
    sets; bridges appear as 2-node blocks, isolated nodes in no block.
    """
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    blocks: list[frozenset[int]] = []
    articulation: set[int] = set()
    clock = 0

    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # frame: [node, parent, index into adj[node]]
        stack: list[list] = [[root, None, 0]]
        edge_stack: list[tuple[int, int]] = []
        root_children = 0
        while stack:
            v, parent, i = stack[-1]
            if i < len(adj[v]):
                stack[-1][2] += 1
                w = adj[v][i]
                if w == parent:
                    continue
                if w not in disc:
                    if parent is None:
                        root_children += 1
                    edge_stack.append((v, w))
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append([w, v, 0])
                elif disc[w] < disc[v]:
                    edge_stack.append((v, w))
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if not stack:
                    continue
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] >= disc[u]:
                    if stack[-1][1] is not None:
                        articulation.add(u)
                    comp: set[int] = set()
                    while edge_stack:
                        a, b = edge_stack.pop()
                        comp.add(a)
                        comp.add(b)
                        if (a, b) == (u, v):
                            break
                    if comp:
                        blocks.append(frozenset(comp))
        if root_children > 1:
            articulation.add(root)
    return blocks, articulation


@dataclass(frozen=True)
class Cluster:
    nodes: tuple[int, ...]
    articulation: int


@dataclass(frozen=True)
class Leaf:
    nodes: tuple[int, ...]
    attachment: int


@dataclass(frozen=True)
class Star:
    root: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class Overlap:
    node: int
    owners: tuple[str, ...]


@dataclass
class PatternReport:
    clusters: list[Cluster] = field(default_factory=list)
    hesitation_leaves: list[Leaf] = field(default_factory=list)
    directed_rings: list[tuple[int, ...]] = field(default_factory=list)
    breadth_stars: list[Star] = field(default_factory=list)
    overlaps: list[Overlap] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "clusters": [
                {"nodes": list(c.nodes), "articulation": c.articulation}
                for c in self.clusters
            ],
            "hesitation_leaves": [
                {"nodes": list(l.nodes), "attachment": l.attachment}
                for l in self.hesitation_leaves
            ],
            "directed_rings": [list(r) for r in self.directed_rings],
            "breadth_stars": [
                {"root": s.root, "children": list(s.children)}
                for s in self.breadth_stars
            ],
            "overlaps": [
                {"node": o.node, "owners": list(o.owners)} for o in self.overlaps
            ],
        }


def find_concentrated_clusters(g: ClickGraph, min_size: int = 3) -> list[Cluster]:
    """Blocks of >= min_size nodes joined to the rest via one articulation."""
    adj = g.undirected_adjacency()
    blocks, artic = biconnected_components(adj)
    clusters = []
    for block in blocks:
        if len(block) < min_size:
            continue
        boundary = sorted(block & artic)
        if len(boundary) == 1:
            nodes = tuple(sorted(block, key=g.order_of))
            clusters.append(Cluster(nodes=nodes, articulation=boundary[0]))
    clusters.sort(key=lambda c: g.order_of(c.nodes[0]))
    return clusters


def find_directed_rings(
    g: ClickGraph, clusters: Sequence[Cluster] | None = None
) -> list[tuple[int, ...]]:
    """Open chains of low-degree nodes outside every cluster.

    A chain must have >= 3 nodes, every node of undirected degree <= 2,
    no node inside a detected cluster, and non-adjacent endpoints (an
    actual cycle is a cluster's business, not a ring).
    """
    if clusters is None:
        clusters = find_concentrated_clusters(g)
    cluster_nodes = {n for c in clusters for n in c.nodes}
    adj = g.undirected_adjacency()
    candidates = {
        n for n in g.nodes if len(adj[n]) <= 2 and n not in cluster_nodes
    }
    rings: list[tuple[int, ...]] = []
    seen: set[int] = set()
    for start in sorted(candidates):
        if start in seen:
            continue
        comp: list[int] = []
        frontier = [start]
        seen.add(start)
        while frontier:
            v = frontier.pop()
            comp.append(v)
            for w in adj[v]:
                if w in candidates and w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(comp) < 3:
            continue
        induced = {v: [w for w in adj[v] if w in set(comp)] for v in comp}
        endpoints = [v for v in comp if len(induced[v]) <= 1]
        if len(endpoints) != 2:
            continue  # a closed cycle or a stray branch, not an open chain
        first, last = sorted(endpoints, key=g.order_of)
        if last in adj[first]:
            continue
        chain = [first]
        prev = None
        while chain[-1] != last:
            nxt = [w for w in induced[chain[-1]] if w != prev]
            prev = chain[-1]
            chain.append(nxt[0])
        rings.append(tuple(chain))
    rings.sort(key=lambda r: g.order_of(r[0]))
    return rings


def find_hesitation_leaves(
    g: ClickGraph,
    clusters: Sequence[Cluster],
    rings: Sequence[tuple[int, ...]] = (),
) -> list[Leaf]:
    """Small tree appendages hanging off one cluster or ring node.

    The cyclic core (every block with >= 3 nodes) and all ring chains are
    removed; each remaining component that touches exactly one removed
    node qualifies when that anchor belongs to a reported cluster or ring
    and the component is smaller than the smallest detected cluster (or
    ring, when no cluster exists).
    """
    adj = g.undirected_adjacency()
    blocks, _ = biconnected_components(adj)
    core = {n for b in blocks if len(b) >= 3 for n in b}
    ring_nodes = {n for r in rings for n in r}
    removed = core | ring_nodes
    anchor_pool = {n for c in clusters for n in c.nodes} | ring_nodes

    if clusters:
        threshold = min(len(c.nodes) for c in clusters)
    elif rings:
        threshold = min(len(r) for r in rings)
    else:
        return []

    leaves: list[Leaf] = []
    seen: set[int] = set()
    for start in sorted(set(g.nodes) - removed):
        if start in seen:
            continue
        comp: list[int] = []
        anchors: set[int] = set()
        frontier = [start]
        seen.add(start)
        while frontier:
            v = frontier.pop()
            comp.append(v)
            for w in adj[v]:
                if w in removed:
                    anchors.add(w)
                elif w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(anchors) == 1 and len(comp) < threshold:
            anchor = next(iter(anchors))
            if anchor in anchor_pool:
                leaves.append(
                    Leaf(nodes=tuple(sorted(comp, key=g.order_of)), attachment=anchor)
                )
    leaves.sort(key=lambda l: g.order_of(l.nodes[0]))
    return leaves


def find_breadth_stars(g: ClickGraph) -> list[Star]:
    """Nodes with >= 2 children in the first-visit spanning tree."""
    children: dict[int, list[int]] = {}
    for node, info in g.nodes.items():
        if info.first_visit_parent is not None:
            children.setdefault(info.first_visit_parent, []).append(node)
    stars = [
        Star(root=root, children=tuple(sorted(kids, key=g.order_of)))
        for root, kids in children.items()
        if len(kids) >= 2
    ]
    stars.sort(key=lambda s: g.order_of(s.root))
    return stars


def find_overlaps(graphs: Sequence[ClickGraph]) -> list[Overlap]:
    """URLs shared between the graphs of at least two distinct users."""
    if len(graphs) < 2:
        raise FewerThanTwoGraphs(f"need >= 2 graphs, got {len(graphs)}")
    owners = [g.owner for g in graphs]
    if len(set(owners)) != len(owners):
        raise ValueError("overlap graphs must have distinct owners")
    by_node: dict[int, set[str]] = {}
    for g in graphs:
        for n in g.nodes:
            by_node.setdefault(n, set()).add(g.owner)
    return [
        Overlap(node=n, owners=tuple(sorted(os)))
        for n, os in sorted(by_node.items())
        if len(os) >= 2
    ]


def mine_patterns(g: ClickGraph, min_cluster_size: int = 3) -> PatternReport:
    """Run the four single-stream detectors in their dependency order."""
    clusters = find_concentrated_clusters(g, min_size=min_cluster_size)
    rings = find_directed_rings(g, clusters)
    leaves = find_hesitation_leaves(g, clusters, rings)
    stars = find_breadth_stars(g)
    return PatternReport(
        clusters=clusters,
        hesitation_leaves=leaves,
        directed_rings=rings,
        breadth_stars=stars,
    )


_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#bcbd22", "#17becf",
)


def _node_width(dwell: float) -> str:
    return f"{0.4 + 0.12 * math.log1p(max(dwell, 0.0)):.2f}"


def export_dot(
    graphs: ClickGraph | Sequence[ClickGraph],
    report: PatternReport | None = None,
) -> str:
    """Graphviz text for one graph or a multi-user overlay.

    Nodes are labeled with their first-visit serial number, sized by
    total dwell, and colored per owner; overlap nodes turn black. Pattern
    memberships from ``report`` are annotated: clusters become dotted
    subgraphs, ring nodes are dashed, hesitation leaves inverted
    triangles, star roots double-circled. Output is byte-stable.
    """
    if isinstance(graphs, ClickGraph):
        graphs = [graphs]
    graphs = list(graphs)

    owner_color = {
        g.owner: _PALETTE[i % len(_PALETTE)]
        for i, g in enumerate(sorted(graphs, key=lambda g: g.owner))
    }
    merged: dict[int, tuple[int, float, str]] = {}
    node_owners: dict[int, set[str]] = {}
    for g in graphs:
        for n, info in g.nodes.items():
            node_owners.setdefault(n, set()).add(g.owner)
            if n in merged:
                order, dwell, owner = merged[n]
                merged[n] = (min(order, info.first_visit_order), dwell + info.total_dwell, owner)
            else:
                merged[n] = (info.first_visit_order, info.total_dwell, g.owner)

    report = report or PatternReport()
    ring_nodes = {n for r in report.directed_rings for n in r}
    leaf_nodes = {n for l in report.hesitation_leaves for n in l.nodes}
    star_roots = {s.root for s in report.breadth_stars}
    overlap_nodes = {o.node for o in report.overlaps} | {
        n for n, os in node_owners.items() if len(os) >= 2
    }

    lines = ["digraph clickstream {"]
    if not merged:
        lines.append("}")
        return "\n".join(lines) + "\n"
    lines.append("  node [shape=circle, fixedsize=true];")
    for ci, cluster in enumerate(report.clusters):
        lines.append(f"  subgraph cluster_{ci} {{")
        lines.append("    style=dotted;")
        for n in sorted(cluster.nodes):
            lines.append(f"    n{n};")
        lines.append("  }")
    for n in sorted(merged):
        order, dwell, owner = merged[n]
        color = "#000000" if n in overlap_nodes else owner_color[owner]
        attrs = [f'label="{order}"', f"width={_node_width(dwell)}", f'color="{color}"']
        if n in ring_nodes:
            attrs.append("style=dashed")
        if n in leaf_nodes:
            attrs.append("shape=invtriangle")
        if n in star_roots:
            attrs.append("peripheries=2")
        lines.append(f"  n{n} [{', '.join(attrs)}];")
    all_edges: dict[tuple[int, int], int] = {}
    for g in graphs:
        for e, c in g.edges.items():
            all_edges[e] = all_edges.get(e, 0) + c
    for (a, b) in sorted(all_edges):
        count = all_edges[(a, b)]
        suffix = f' [label="{count}"]' if count > 1 else ""
        lines.append(f"  n{a} -> n{b}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"
