"""
Helicity moments as multigraphs.

A moment of order n is a connected multigraph with n edges: vertices are
integration points (each contributing cm^3) and edges are linking factors
lambda (each G^2 cm^-2).  Its correlation tensor is bounded when every set
of k >= 2 vertices spans strictly fewer than 3k - 3 edges.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Dimension:
    """G^gauss cm^length."""

    gauss: int
    length: int

    def __add__(self, other):
        return Dimension(self.gauss + other.gauss, self.length + other.length)

    def __str__(self):
        return f"G^{self.gauss} cm^{self.length}"

    def to_tuple(self):
        return (self.gauss, self.length)


class MomentGraph:
    """Connected multigraph without self-loops.

    ``edges`` is a sequence of vertex pairs; repeated pairs are parallel
    edges.  Vertices are 0..v-1.
    """

    def __init__(self, v, edges, label=None):
        v = int(v)
        edges = [tuple(sorted((int(a), int(b)))) for a, b in edges]
        if v < 1:
            raise ConfigError("graph needs at least one vertex")
        for a, b in edges:
            if a == b:
                raise ConfigError(f"self-loop at vertex {a} is not admissible")
            if not (0 <= a < v and 0 <= b < v):
                raise ConfigError(f"edge ({a}, {b}) references a missing vertex")
        self.v = v
        self.edges = tuple(sorted(edges))
        self.label = label
        if not _connected(v, self.edges):
            raise ConfigError("moment graph must be connected")

    @property
    def e(self):
        return len(self.edges)

    def multiplicity(self):
        return Counter(self.edges)

    def add_edge(self, a, b):
        return MomentGraph(self.v, list(self.edges) + [(a, b)], self.label)

    def __repr__(self):
        name = f"{self.label!r}, " if self.label else ""
        return f"MomentGraph({name}v={self.v}, edges={list(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, MomentGraph) and (self.v, self.edges) == (other.v, other.edges)

    def __hash__(self):
        return hash((self.v, self.edges))


def _connected(v, edges):
    adj = {i: set() for i in range(v)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == v


def components(v, edges):
    """Split an edge list into connected MomentGraphs (isolated vertices dropped)."""
    parent = list(range(v))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for i in range(v):
        groups.setdefault(find(i), []).append(i)
    out = []
    for verts in groups.values():
        idx = {u: n for n, u in enumerate(verts)}
        es = [(idx[a], idx[b]) for a, b in edges if a in idx]
        if es:
            out.append(MomentGraph(len(verts), es))
    return out


def densest_violation(g):
    """First vertex subset (|S| >= 2) spanning >= 3|S| - 3 edges, or None."""
    if not isinstance(g, MomentGraph):
        raise ConfigError("expected a MomentGraph")
    for k in range(2, g.v + 1):
        for S in itertools.combinations(range(g.v), k):
            s = set(S)
            inside = sum(1 for a, b in g.edges if a in s and b in s)
            if inside >= 3 * k - 3:
                return S, inside
    return None


def is_correlation_bounded(g):
    """True iff every k-subset (k >= 2) spans strictly fewer than 3k - 3 edges.

    A product moment (list of components) is bounded iff each factor is.
    """
    if isinstance(g, (list, tuple)):
        return all(is_correlation_bounded(c) for c in g)
    return densest_violation(g) is None


def dimension_of(g):
    """(2e, 3v - 2e); additive over the factors of a product moment."""
    if isinstance(g, (list, tuple)):
        out = Dimension(0, 0)
        for c in g:
            out = out + dimension_of(c)
        return out
    return Dimension(2 * g.e, 3 * g.v - 2 * g.e)


@dataclass(frozen=True)
class TableRow:
    label: str
    factors: tuple
    printed: Dimension
    computed: Dimension
    bounded: bool
    product: bool

    @property
    def matches(self):
        return self.printed == self.computed

    def to_dict(self):
        return {"label": self.label, "v": [c.v for c in self.factors],
                "edges": [list(map(list, c.edges)) for c in self.factors],
                "printed_dimension": str(self.printed), "computed_dimension": str(self.computed),
                "matches_printed": self.matches, "bounded": self.bounded,
                "product": self.product}


def _g(v, edges, label=None):
    return MomentGraph(v, edges, label)


EDGE = [(0, 1)]

# the eight cubic diagrams with their printed dimensions (gauss, length)
_BUILTIN = [
    ("chi^3", [_g(2, EDGE)] * 3, (6, 12)),
    ("chi^(2) chi", [_g(3, [(0, 1), (1, 2)]), _g(2, EDGE)], (6, 9)),
    ("chi^(3,1)", [_g(4, [(0, 1), (0, 2), (0, 3)])], (6, 8)),
    ("chi^(3,2) path", [_g(4, [(0, 1), (1, 2), (2, 3)])], (6, 8)),
    ("chi^[2] chi", [_g(2, [(0, 1), (0, 1)]), _g(2, EDGE)], (6, 6)),
    ("chi^((3,1))", [_g(3, [(0, 1), (0, 1), (1, 2)])], (6, 3)),
    ("chi^(3,2) triangle", [_g(3, [(0, 1), (1, 2), (0, 2)])], (6, 3)),
    ("chi^[3]", [_g(2, [(0, 1)] * 3)], (6, 0)),
]


def builtin_table():
    """The eight cubic moments with printed and computed dimensions."""
    rows = []
    for label, factors, printed in _BUILTIN:
        rows.append(TableRow(label, tuple(factors), Dimension(*printed), dimension_of(factors),
                             is_correlation_bounded(factors), len(factors) > 1))
    return rows


def table_summary(rows=None):
    rows = builtin_table() if rows is None else rows
    return {"n_rows": len(rows),
            "n_products": sum(r.product for r in rows),
            "n_independent": sum(not r.product for r in rows),
            "n_dimension_matches": sum(r.matches for r in rows),
            "flagged": [r.label for r in rows if not r.matches]}


def complete_graph(n, label=None):
    return MomentGraph(n, list(itertools.combinations(range(n), 2)), label or f"K{n}")


def parse_edge_list(text):
    """Read ``a b`` vertex pairs, one per line; '#' starts a comment.

    Vertex names may be any tokens; they are numbered in order of first
    appearance.  Returns the list of connected components.
    """
    names = {}
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError(f"line {lineno}: expected two vertices, got {line!r}")
        ids = [names.setdefault(p, len(names)) for p in parts]
        if ids[0] == ids[1]:
            raise ConfigError(f"line {lineno}: self-loop is not admissible")
        edges.append(tuple(ids))
    if not edges:
        raise ConfigError("empty edge list")
    return components(len(names), edges)


def check_edge_list(text):
    comps = parse_edge_list(text)
    out = {"components": [{"v": c.v, "e": c.e, "edges": [list(e) for e in c.edges],
                           "bounded": is_correlation_bounded(c),
                           "dimension": str(dimension_of(c))} for c in comps],
           "bounded": is_correlation_bounded(comps),
           "dimension": str(dimension_of(comps))}
    bad = [densest_violation(c) for c in comps]
    out["violations"] = [list(map(int, b[0])) + [b[1]] if b else None for b in bad]
    return out


def table_to_json(rows=None):
    rows = builtin_table() if rows is None else rows
    return json.dumps({"rows": [r.to_dict() for r in rows], "summary": table_summary(rows)},
                      indent=2)
