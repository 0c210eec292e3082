"""Min-plus linear algebra over Q and +infinity.

Matrices are lists of rows whose entries are ``Fraction`` or ``INF``.  The
adjacency graph of ``C`` has an arc j -> i of weight ``C[i][j]`` for every
finite entry.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import networkx as nx

from .errors import DimensionMismatch, NotIrreducible
from .series import INF, as_exponent, is_inf

TropMatrix = list


def as_tropical(c) -> TropMatrix:
    return [[INF if (isinstance(x, float) and x == INF) else as_exponent(x) for x in row] for row in c]


def _square(c) -> int:
    n = len(c)
    if any(len(row) != n for row in c):
        raise DimensionMismatch("tropical matrix must be square")
    return n


def trop_product(c, d) -> TropMatrix:
    if not c or len(c[0]) != len(d):
        raise DimensionMismatch("inner dimensions differ")
    m, k, n = len(c), len(d), len(d[0])
    return [[min((c[i][l] + d[l][j] for l in range(k)), default=INF) for j in range(n)] for i in range(m)]


def trop_matvec(c, v) -> list:
    return [min((c[i][j] + v[j] for j in range(len(v))), default=INF) for i in range(len(c))]


def _graph(c) -> nx.DiGraph:
    g = nx.DiGraph()
    n = len(c)
    g.add_nodes_from(range(n))
    for i in range(n):
        for j in range(n):
            if not is_inf(c[i][j]):
                g.add_edge(j, i, weight=c[i][j])
    return g


def is_irreducible(c) -> bool:
    _square(c)
    return nx.is_strongly_connected(_graph(c))


def _karp(g: nx.DiGraph, nodes: list):
    """Minimum cycle mean of the strongly connected subgraph on ``nodes``."""
    n = len(nodes)
    idx = {v: k for k, v in enumerate(nodes)}
    arcs = [(idx[u], idx[v], w) for u, v, w in g.subgraph(nodes).edges(data="weight")]
    if not arcs:
        return INF
    d = [[INF] * n for _ in range(n + 1)]
    d[0][0] = Fraction(0)
    for k in range(1, n + 1):
        row, prev = d[k], d[k - 1]
        for u, v, w in arcs:
            if not is_inf(prev[u]) and prev[u] + w < row[v]:
                row[v] = prev[u] + w
    best = INF
    for v in range(n):
        if is_inf(d[n][v]):
            continue
        worst = max(Fraction(d[n][v] - d[k][v], n - k) for k in range(n) if not is_inf(d[k][v]))
        best = min(best, worst)
    return best


def trop_eigenvalue(c):
    """Minimum cycle mean (Karp per strongly connected component); INF if acyclic."""
    _square(c)
    g = _graph(c)
    return min((_karp(g, sorted(comp)) for comp in nx.strongly_connected_components(g)), default=INF)


def trop_closure(a) -> TropMatrix:
    """A+ = A ⊕ A² ⊕ ... by Floyd-Warshall; requires no negative cycles."""
    n = _square(a)
    d = [list(row) for row in a]
    for k in range(n):
        for i in range(n):
            if is_inf(d[i][k]):
                continue
            dik = d[i][k]
            for j in range(n):
                if dik + d[k][j] < d[i][j]:
                    d[i][j] = dik + d[k][j]
    if any(d[i][i] < 0 for i in range(n)):
        raise ValueError("negative cycle: closure does not exist")
    return d


def kleene_star(a) -> TropMatrix:
    plus = trop_closure(a)
    n = len(a)
    return [[min(plus[i][j], Fraction(0)) if i == j else plus[i][j] for j in range(n)] for i in range(n)]


def _shifted(c, lam) -> TropMatrix:
    return [[x if is_inf(x) else x - lam for x in row] for row in c]


def critical_nodes(c, lam=None) -> list:
    """Nodes lying on a cycle of mean ``lam`` (the minimum cycle mean by default)."""
    lam = trop_eigenvalue(c) if lam is None else lam
    if is_inf(lam):
        return []
    plus = trop_closure(_shifted(c, lam))
    return [i for i in range(len(c)) if plus[i][i] == 0]


def normalize_min_zero(v: Sequence) -> list:
    finite = [x for x in v if not is_inf(x)]
    m = min(finite)
    return [x if is_inf(x) else x - m for x in v]


def _is_eigenvector(c, lam, v) -> bool:
    if all(is_inf(x) for x in v):
        return False
    cv = trop_matvec(c, v)
    return all((is_inf(a) and is_inf(b)) or (not is_inf(a) and not is_inf(b) and a == lam + b)
               for a, b in zip(cv, v))


def trop_eigenvector_candidates(c) -> dict:
    """Map each critical node to the normalized Kleene-star column it generates."""
    lam = trop_eigenvalue(c)
    if is_inf(lam):
        return {}
    star = kleene_star(_shifted(c, lam))
    out = {}
    for k in critical_nodes(c, lam):
        v = normalize_min_zero([star[i][k] for i in range(len(c))])
        if _is_eigenvector(c, lam, v):
            out[k] = v
    return out


def trop_eigenvector(c, node: int | None = None) -> list:
    """Tropical eigenvector from the Kleene star column at a critical node.

    The lexicographically smallest critical node is used unless ``node`` is
    given.  The result is shifted so that its smallest finite entry is 0.
    """
    cands = trop_eigenvector_candidates(c)
    if node is not None:
        if node not in cands:
            raise NotIrreducible(f"node {node} does not generate an eigenvector")
        return cands[node]
    if not cands:
        raise NotIrreducible("no tropical eigenvector with finite entries exists")
    return cands[min(cands)]


def similarity_scale(c, gamma: Sequence) -> TropMatrix:
    """(-Γ) ⊙ C ⊙ Γ, i.e. entry (i,j) becomes C_ij - γ_i + γ_j."""
    n = len(c)
    return [[c[i][j] if is_inf(c[i][j]) else c[i][j] - gamma[i] + gamma[j] for j in range(n)] for i in range(n)]


def has_row_min_property(c, lam=None) -> bool:
    lam = trop_eigenvalue(c) if lam is None else lam
    return all(min(row) == lam for row in c)


def row_min_scaling(c) -> tuple:
    """Return (Γ, C') with every row minimum of C' equal to the eigenvalue."""
    n = _square(c)
    if not is_irreducible(c) or all(is_inf(x) for row in c for x in row):
        raise NotIrreducible("row-min scaling needs an irreducible matrix")
    lam = trop_eigenvalue(c)
    if has_row_min_property(c, lam):
        gamma = [Fraction(0)] * n
    else:
        gamma = trop_eigenvector(c)
        if any(is_inf(x) for x in gamma):
            raise NotIrreducible("eigenvector has infinite entries")
    return gamma, similarity_scale(c, gamma)
