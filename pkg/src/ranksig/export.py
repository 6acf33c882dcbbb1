"""Graph file writers: DOT, Pajek, VOSviewer-style JSON, and edge-list CSV.

All writers are deterministic string builders over the canonical node and
edge order of a SignificanceGraph, so repeated exports of the same graph
are byte-identical.
"""

import csv
import io
import json

from .siggraph import SignificanceGraph

__all__ = ["GRAPH_FORMATS", "render_graph", "write_dot", "write_pajek",
           "write_vjson", "write_edge_csv"]

GRAPH_FORMATS = ("csv", "dot", "pajek", "vjson")


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(g: SignificanceGraph) -> str:
    """Undirected DOT graph with z node attributes."""
    lines = ["graph ranksig {"]
    for node in g.nodes:
        lines.append(f"  {_dot_quote(node.name)} [z={node.z:.6f}];")
    for e in g.edges:
        attrs = f"z={e.z:.6f}"
        if e.strong:
            attrs += ", strong=true"
        lines.append(f"  {_dot_quote(e.a)} -- {_dot_quote(e.b)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_pajek(g: SignificanceGraph) -> str:
    """Pajek network: *Vertices with 1-based ids, then *Edges with |z| weights."""
    ids = {node.name: i + 1 for i, node in enumerate(g.nodes)}
    lines = [f"*Vertices {len(g.nodes)}"]
    for node in g.nodes:
        label = node.name.replace('"', "'")
        lines.append(f'{ids[node.name]} "{label}"')
    lines.append("*Edges")
    for e in g.edges:
        lines.append(f"{ids[e.a]} {ids[e.b]} {abs(e.z):.6f}")
    return "\n".join(lines) + "\n"


def write_vjson(g: SignificanceGraph) -> str:
    """Viewer-compatible network JSON: items weighted by node z, links by |z|."""
    ids = {node.name: i + 1 for i, node in enumerate(g.nodes)}
    doc = {
        "network": {
            "items": [
                {"id": ids[n.name], "label": n.name, "weight": n.z}
                for n in g.nodes
            ],
            "links": [
                {"source_id": ids[e.a], "target_id": ids[e.b], "strength": abs(e.z)}
                for e in g.edges
            ],
        }
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_edge_csv(g: SignificanceGraph) -> str:
    """Edge list CSV (isolated nodes do not appear; use the rank tables for nodes)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["source", "target", "z", "strong"])
    for e in g.edges:
        writer.writerow([e.a, e.b, repr(e.z), "true" if e.strong else "false"])
    return buf.getvalue()


def render_graph(g: SignificanceGraph, fmt: str) -> str:
    if fmt == "dot":
        return write_dot(g)
    if fmt == "pajek":
        return write_pajek(g)
    if fmt == "vjson":
        return write_vjson(g)
    if fmt == "csv":
        return write_edge_csv(g)
    raise ValueError(f"unknown graph format {fmt!r}; expected one of {GRAPH_FORMATS}")
