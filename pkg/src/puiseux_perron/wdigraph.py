"""Weighted digraphs with exact rational weights and their canonical forms."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

import networkx as nx

from .errors import (
    BadE,
    DeltaTooLarge,
    HasSimpleLoop,
    NotFlatSlanted,
    NotStronglyConnected,
    UnknownNode,
)
from .series import INF, PuiseuxMatrix, as_exponent, is_inf
from .tropical import row_min_scaling, trop_eigenvalue


class WeightedDigraph:
    """Finite digraph, at most one arc per ordered pair, exact weights.

    Instances are treated as immutable.
    """

    __slots__ = ("nodes", "_arcs")

    def __init__(self, nodes: Iterable, arcs: Mapping | Iterable = ()):
        self.nodes = tuple(sorted(set(nodes), key=_label_key))
        items = arcs.items() if isinstance(arcs, Mapping) else ((((u, v), w) for u, v, w in arcs))
        table = {}
        known = set(self.nodes)
        for (u, v), w in items:
            if u not in known or v not in known:
                raise UnknownNode(f"arc {u}->{v} uses an unknown node")
            if (u, v) in table:
                raise ValueError(f"parallel arc {u}->{v}")
            table[(u, v)] = as_exponent(w)
        self._arcs = table

    # inspection

    @property
    def arcs(self) -> dict:
        return dict(self._arcs)

    def arc_list(self) -> list:
        return sorted(((u, v, w) for (u, v), w in self._arcs.items()),
                      key=lambda a: (_label_key(a[0]), _label_key(a[1])))

    def weight(self, u, v):
        return self._arcs.get((u, v), INF)

    def has_arc(self, u, v) -> bool:
        return (u, v) in self._arcs

    @property
    def s(self):
        """Smallest arc weight, INF for an arcless graph."""
        return min(self._arcs.values(), default=INF)

    def truncate(self, mu) -> "WeightedDigraph":
        return WeightedDigraph(self.nodes, {a: w for a, w in self._arcs.items() if w <= mu})

    def leading_term(self) -> "WeightedDigraph":
        return self.truncate(self.s)

    def without_loops(self) -> "WeightedDigraph":
        return WeightedDigraph(self.nodes, {(u, v): w for (u, v), w in self._arcs.items() if u != v})

    def induced(self, nodes: Iterable) -> "WeightedDigraph":
        keep = set(nodes)
        return WeightedDigraph(keep, {(u, v): w for (u, v), w in self._arcs.items() if u in keep and v in keep})

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for (u, v), w in self._arcs.items():
            g.add_edge(u, v, weight=w)
        return g

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        lines += [f"  {u};" for u in self.nodes]
        lines += [f'  {u} -> {v} [weight="{w}"];' for u, v, w in self.arc_list()]
        lines.append("}")
        return "\n".join(lines)

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return self.nodes == other.nodes and self._arcs == other._arcs

    def __hash__(self):
        return hash((self.nodes, frozenset(self._arcs.items())))

    def __repr__(self):
        arcs = ", ".join(f"{u}->{v}:{w}" for u, v, w in self.arc_list())
        return f"WeightedDigraph(nodes={list(self.nodes)}, arcs=[{arcs}])"


def _label_key(x):
    return (0, x, "") if isinstance(x, (int, Fraction)) else (1, 0, str(x))


def adjacency_graph(y, labels: Iterable | None = None) -> WeightedDigraph:
    """G(Y): arc j -> i of weight v(Y_ij) for every nonzero entry.

    ``y`` is a PuiseuxMatrix or a square tropical matrix (rows of Fractions /
    INF).  Nodes are labelled 1..N unless ``labels`` is given.
    """
    vals = y.valuation_matrix() if isinstance(y, PuiseuxMatrix) else y
    n = len(vals)
    labels = list(range(1, n + 1)) if labels is None else list(labels)
    arcs = {}
    for i in range(n):
        for j in range(n):
            w = vals[i][j]
            if not is_inf(w):
                arcs[(labels[j], labels[i])] = w
    return WeightedDigraph(labels, arcs)


def valuation_matrix(g: WeightedDigraph, order: Iterable | None = None) -> list:
    """Inverse of ``adjacency_graph``: entry (i, j) is the weight of j -> i."""
    order = list(g.nodes if order is None else order)
    return [[g.weight(order[j], order[i]) for j in range(len(order))] for i in range(len(order))]


def graph_eigenvalue(g: WeightedDigraph):
    """Minimum cycle mean Λ(G)."""
    return trop_eigenvalue(valuation_matrix(g))


def cycle_weights(g: WeightedDigraph) -> dict:
    """Total weight of every simple cycle, keyed by its canonical node tuple."""
    out = {}
    for cyc in nx.simple_cycles(g.to_networkx()):
        k = min(range(len(cyc)), key=lambda i: _label_key(cyc[i]))
        cyc = tuple(cyc[k:] + cyc[:k])
        out[cyc] = sum((g.weight(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))), Fraction(0))
    return out


# ---------------------------------------------------------------------------
# components and quotients


def leading_components(g: WeightedDigraph, strong: bool = True) -> list:
    """Components of the leading term, each a frozenset, ordered by smallest label."""
    lead = g.leading_term().to_networkx()
    comps = nx.strongly_connected_components(lead) if strong else nx.weakly_connected_components(lead)
    return sorted((frozenset(c) for c in comps), key=lambda c: _label_key(min(c, key=_label_key)))


class GraphMorphism:
    """Node map between weighted digraphs satisfying the weight condition."""

    __slots__ = ("source", "target", "mapping")

    def __init__(self, source: WeightedDigraph, target: WeightedDigraph, mapping: Mapping):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)

    def __call__(self, node):
        return self.mapping[node]

    def fiber(self, node) -> list:
        return [u for u in self.source.nodes if self.mapping[u] == node]

    def is_valid(self) -> bool:
        for (u, v), w in self.source.arcs.items():
            fu, fv = self.mapping[u], self.mapping[v]
            if fu != fv and self.target.weight(fu, fv) > w:
                return False
        return True

    def then(self, other: "GraphMorphism") -> "GraphMorphism":
        return GraphMorphism(self.source, other.target, {u: other(self(u)) for u in self.source.nodes})


def quotient(g: WeightedDigraph, classes: Iterable[Iterable], labels: Iterable | None = None) -> tuple:
    """Quotient graph by a node partition; weights are minima over representatives."""
    classes = [frozenset(c) for c in classes]
    labels = list(range(1, len(classes) + 1)) if labels is None else list(labels)
    proj = {u: labels[k] for k, c in enumerate(classes) for u in c}
    if set(proj) != set(g.nodes):
        raise ValueError("classes must partition the node set")
    arcs: dict = {}
    for (u, v), w in g.arcs.items():
        a, b = proj[u], proj[v]
        if a != b and w < arcs.get((a, b), INF):
            arcs[(a, b)] = w
    q = WeightedDigraph(labels, arcs)
    return q, GraphMorphism(g, q, proj)


def condense(g: WeightedDigraph) -> tuple:
    """Quotient by weak connectivity of the leading term."""
    comps = leading_components(g, strong=False)
    h, f = quotient(g, comps)
    if not is_inf(g.s):
        assert h.s > g.s
    assert not any(u == v for (u, v) in h.arcs)
    return h, f


def strong_condense(g: WeightedDigraph) -> tuple:
    """Quotient by strong connectivity of the leading term."""
    comps = leading_components(g, strong=True)
    h, f = quotient(g, comps)
    lead = h.truncate(g.s).to_networkx()
    assert nx.is_directed_acyclic_graph(lead)
    return h, f


def condense_to(g: WeightedDigraph, mu) -> GraphMorphism:
    """Compose condensations until the smallest weight exceeds ``mu``."""
    f = GraphMorphism(g, g, {u: u for u in g.nodes})
    h = g
    while h.s <= mu:
        h, step = condense(h)
        f = GraphMorphism(g, h, {u: step(f(u)) for u in g.nodes})
    return f


# ---------------------------------------------------------------------------
# similarity translations


class SimilarityTransform:
    """Composition of translations S_k(ν); stored as node -> total shift."""

    __slots__ = ("_shifts",)

    def __init__(self, shifts: Mapping | Iterable = ()):
        items = shifts.items() if isinstance(shifts, Mapping) else shifts
        acc: dict = {}
        for k, nu in items:
            acc[k] = acc.get(k, Fraction(0)) + as_exponent(nu)
        self._shifts = {k: v for k, v in acc.items() if v != 0}

    @classmethod
    def single(cls, node, nu) -> "SimilarityTransform":
        return cls({node: nu})

    def shift(self, node) -> Fraction:
        return self._shifts.get(node, Fraction(0))

    @property
    def pairs(self) -> list:
        return sorted(self._shifts.items(), key=lambda kv: _label_key(kv[0]))

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        return SimilarityTransform(list(self._shifts.items()) + list(other._shifts.items()))

    __mul__ = compose

    def inverse(self) -> "SimilarityTransform":
        return SimilarityTransform({k: -v for k, v in self._shifts.items()})

    def vector(self, nodes: Iterable) -> list:
        return [self.shift(u) for u in nodes]

    def is_identity(self) -> bool:
        return not self._shifts

    def __eq__(self, other):
        if not isinstance(other, SimilarityTransform):
            return NotImplemented
        return self._shifts == other._shifts

    def __repr__(self):
        return "SimilarityTransform(" + ", ".join(f"S_{k}({v})" for k, v in self.pairs) + ")"


def similarity_translate(g: WeightedDigraph, s: SimilarityTransform) -> WeightedDigraph:
    """Arcs out of k gain +ν, arcs into k lose ν; loops are unchanged."""
    known = set(g.nodes)
    for k, _ in s.pairs:
        if k not in known:
            raise UnknownNode(f"node {k} is not in the graph")
    return WeightedDigraph(g.nodes, {(u, v): w + s.shift(u) - s.shift(v) for (u, v), w in g.arcs.items()})


def pull_back(s: SimilarityTransform, f: GraphMorphism) -> SimilarityTransform:
    """f*S: every node in the fiber over i receives the shift of i."""
    targets = set(f.target.nodes)
    for k, _ in s.pairs:
        if k not in targets:
            raise UnknownNode(f"node {k} is not in the target of the morphism")
    return SimilarityTransform({u: s.shift(f(u)) for u in f.source.nodes})


# ---------------------------------------------------------------------------
# canonical forms


class Slanted(NamedTuple):
    graph: WeightedDigraph
    transform: SimilarityTransform
    parameter: Fraction | None


def is_flat_slanted(g: WeightedDigraph) -> bool:
    """Every weakly connected component of the leading term is strongly connected."""
    return leading_components(g, strong=False) == leading_components(g, strong=True)


def is_E_forest(g: WeightedDigraph, e: Iterable) -> bool:
    """Leading term is a disjoint union of trees-like DAGs, each rooted at its unique E-node."""
    e = set(e)
    if not e or not e < set(g.nodes):
        return False
    lead = g.leading_term().to_networkx()
    for comp in nx.weakly_connected_components(lead):
        sub = lead.subgraph(comp)
        if not nx.is_directed_acyclic_graph(sub):
            return False
        roots = [u for u in comp if sub.in_degree(u) == 0]
        marked = [u for u in comp if u in e]
        if len(roots) != 1 or marked != roots:
            return False
    return True


def is_gently_slanted(g: WeightedDigraph, e: Iterable) -> bool:
    return is_E_forest(g, e)


def _height(forest: nx.DiGraph) -> dict:
    """Longest path from each node down to a sink."""
    h = {}
    for u in reversed(list(nx.topological_sort(forest))):
        h[u] = max((h[v] + 1 for v in forest.successors(u)), default=0)
    return h


def flat_slanted_form(g: WeightedDigraph, eps=None) -> Slanted:
    """Return H = S·G whose leading term is a disjoint union of strong components.

    Stage one scales rows by a tropical eigenvector so that the leading term
    contains every critical cycle.  Stage two separates the strong components
    of that leading term by shifting each one by ε times its height in the
    component forest.  ``eps`` defaults to half of the exact admissible bound.
    """
    if not nx.is_strongly_connected(g.to_networkx()):
        raise NotStronglyConnected("flat-slanted form needs a strongly connected graph")
    if is_flat_slanted(g) and eps is None:
        return Slanted(g, SimilarityTransform(), None)
    order = list(g.nodes)
    gamma, _ = row_min_scaling(valuation_matrix(g, order))
    stage1 = SimilarityTransform(dict(zip(order, gamma)))
    j = similarity_translate(g, stage1)
    s = j.s
    comps = leading_components(j, strong=True)
    where = {u: k for k, c in enumerate(comps) for u in c}
    forest = nx.DiGraph()
    forest.add_nodes_from(range(len(comps)))
    for (u, v), w in j.arcs.items():
        if w == s and where[u] != where[v]:
            forest.add_edge(where[u], where[v])
    phi = _height(forest)
    bound = INF
    for (u, v), w in j.arcs.items():
        gap = phi[where[v]] - phi[where[u]]
        if where[u] != where[v] and gap > 0:
            bound = min(bound, Fraction(w - s) / gap)
    if eps is None:
        eps = Fraction(1) if is_inf(bound) else bound / 2
    else:
        eps = as_exponent(eps)
        if eps <= 0 or eps >= bound:
            raise DeltaTooLarge(f"eps={eps} must lie in (0, {bound})")
    total = stage1.compose(SimilarityTransform({u: eps * phi[where[u]] for u in order}))
    h = similarity_translate(g, total)
    assert is_flat_slanted(h), "flat-slanted postcondition failed"
    assert h.s == graph_eigenvalue(g)
    return Slanted(h, total, eps)


def _layers(lead: nx.DiGraph, comp: frozenset, roots: list) -> dict:
    """d(j) = min_k ((k-1)/e + dist(i_k, j)) over the leading arcs inside ``comp``."""
    e = len(roots)
    d = {}
    for k, root in enumerate(roots):
        dist = {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in lead.successors(u):
                if v in comp and v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        for v, n in dist.items():
            val = Fraction(k, e) + n
            if v not in d or val < d[v]:
                d[v] = val
    return d


def gently_slant_bound(h: WeightedDigraph, e: Iterable) -> tuple:
    """Layer function d and the exact supremum of admissible δ."""
    e = set(e)
    nodes = set(h.nodes)
    if not e <= nodes:
        raise UnknownNode(f"{sorted(e - nodes, key=_label_key)} not in graph")
    if not e or e == nodes:
        raise BadE("E must be a proper non-empty subset of the nodes")
    if not is_flat_slanted(h):
        raise NotFlatSlanted("gently-slanting needs a flat-slanted graph")
    s = h.s
    lead = h.leading_term().to_networkx()
    d = {u: Fraction(0) for u in h.nodes}
    processed = False
    for comp in leading_components(h, strong=True):
        roots = sorted(comp & e, key=_label_key)
        if not roots:
            raise BadE(f"E misses the component {sorted(comp, key=_label_key)}")
        if len(roots) == len(comp):
            continue
        if any(h.has_arc(u, u) for u in comp):
            raise HasSimpleLoop(f"component {sorted(comp, key=_label_key)} carries a loop")
        processed = True
        d.update(_layers(lead, comp, roots))
    bound = INF
    for (u, v), w in h.arcs.items():
        if u == v:
            continue
        a = d[v] - d[u] - 1
        if a > 0:
            bound = min(bound, Fraction(w - s) / a)
    return d, bound, processed


def gently_slanted_form(h: WeightedDigraph, e: Iterable, delta=None, cap=None) -> Slanted:
    """Return F = S·H whose leading term is an E-forest.

    Components of the leading term contained in E are left untouched.  With
    ``delta=None`` the parameter is half the exact admissible bound, capped by
    ``cap`` (default: half the gap between the two smallest weights).
    """
    e = set(e)
    d, bound, processed = gently_slant_bound(h, e)
    s = h.s
    if delta is None:
        if cap is None:
            above = [w for w in h.arcs.values() if w > s]
            cap = (min(above) - s) / 2 if above else Fraction(1, 2)
        delta = min(bound / 2, as_exponent(cap)) if not is_inf(bound) else as_exponent(cap)
        explicit = False
    else:
        delta = as_exponent(delta)
        explicit = True
        if delta <= 0 or delta >= bound:
            raise DeltaTooLarge(f"delta={delta} must lie in (0, {bound})")
    for _ in range(60):
        tr = SimilarityTransform({u: d[u] * delta for u in h.nodes})
        f = similarity_translate(h, tr)
        ok = is_E_forest(f, e) and (not processed or f.s == s - delta)
        if ok:
            return Slanted(f, tr, delta)
        if explicit:
            raise DeltaTooLarge(f"delta={delta} does not produce an E-forest")
        delta /= 2
    raise DeltaTooLarge("no admissible delta found")
