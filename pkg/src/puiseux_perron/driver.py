"""Perron root and Perron vector of a nonnegative Puiseux matrix.

The driver works in two phases.  Phase one maintains a block partition with
Perron data per block and repeatedly flattens the block graph (Process A),
merges dominant blocks with their subordinates (Process B) and merges blocks
with equal eigenvalues through the coupling pencil (Process C) until one block
remains.  The accumulated diagonal conjugation is what makes the plain
eigen-quadruple recursion well posed.  Phase two runs that recursion on the
conjugated matrix to the requested depth and undoes the conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Sequence

import networkx as nx
import numpy as np

from .eigen import (
    EigenQuadruple,
    deepen,
    perron_real,
    residual_valuation,
    start_quadruple,
)
from .errors import (
    ConvergenceFailure,
    DegenerateDominance,
    DimensionMismatch,
    GenericnessViolation,
    NotDepthZero,
    NotFlatSlanted,
    NotIrreducible,
    NotSingular,
    NotSubtractionFree,
    PerronError,
    PositivityViolation,
    SingularLeadingTerm,
    SingularInput,
    ZeroMatrix,
)
from .parsing import format_power, format_series
from .series import (
    INF,
    PuiseuxMatrix,
    PuiseuxSeries,
    as_exponent,
    diag_conjugate,
    is_inf,
    lcm_denominators,
    mat_vec,
    solve_linear,
)
from .wdigraph import (
    WeightedDigraph,
    adjacency_graph,
    flat_slanted_form,
    gently_slanted_form,
    is_flat_slanted,
    leading_components,
)

EQUAL_TOL = 1e-10
AMBIGUOUS_TOL = 1e-8
POSITIVITY_SLACK = 1e-9


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class Block:
    """Perron data of one block: eigenvalue, first right vector, leading left vector.

    ``indices`` are 0-based and sorted; ``x`` is indexed like ``indices``.
    ``exact`` marks 1x1 blocks whose eigenvalue is the entry itself.
    """

    indices: tuple
    lam: PuiseuxSeries
    depth: Fraction
    x: tuple
    y: np.ndarray
    exact: bool = False
    yv: tuple = ()

    @property
    def known(self):
        return INF if self.exact else self.lam.trunc

    @property
    def left(self) -> tuple:
        """Left vector as series; the leading vector when no series is stored."""
        return self.yv or tuple(PuiseuxSeries.constant(c) for c in self.y)

    @property
    def leading_x(self) -> np.ndarray:
        return np.array([s.coeff(0) for s in self.x])

    def label(self) -> str:
        return "{" + ",".join(str(i + 1) for i in self.indices) + "}"


@dataclass
class PFData:
    """Block partition of the conjugated matrix Z = diag_conjugate(Y, shifts)."""

    Y: PuiseuxMatrix
    shifts: tuple
    blocks: list

    @property
    def Z(self) -> PuiseuxMatrix:
        return diag_conjugate(self.Y, self.shifts)

    @property
    def depth(self) -> Fraction:
        return min(b.depth for b in self.blocks)

    @property
    def partition(self) -> tuple:
        return tuple(tuple(i + 1 for i in b.indices) for b in self.blocks)

    def graph(self, z: PuiseuxMatrix | None = None) -> WeightedDigraph:
        """G(𝔄): nodes 1..m, arc i -> j weighted by the coupling Z[block j, block i].

        The weight is the least v(y_j[r]) + v(Z_rc) + v(x_i[c]); for blocks
        whose vectors have valuation 0 everywhere this is the plain valuation
        of the submatrix.
        """
        z = self.Z if z is None else z
        vals = z.valuation_matrix()
        xv = [[_vector_val(e) for e in b.x] for b in self.blocks]
        yv = [[_vector_val(e) for e in b.left] for b in self.blocks]
        arcs = {}
        for a, bi in enumerate(self.blocks):
            for b, bj in enumerate(self.blocks):
                if a == b:
                    continue
                w = min((vals[r][c] + yv[b][k] + xv[a][m]
                         for k, r in enumerate(bj.indices) for m, c in enumerate(bi.indices)), default=INF)
                if not is_inf(w):
                    arcs[(a + 1, b + 1)] = w
        return WeightedDigraph(range(1, len(self.blocks) + 1), arcs)

    def validate(self, tol: float = POSITIVITY_SLACK) -> list:
        """Violations of the Perron-data conditions; empty when all hold."""
        out = []
        z = self.Z
        covered = sorted(i for b in self.blocks for i in b.indices)
        if covered != list(range(z.n)):
            out.append("blocks do not partition the indices")
        for b in self.blocks:
            if b.lam.is_zero or b.lam.leading_coeff <= 0:
                out.append(f"block {b.label()}: eigenvalue is not positive")
            x0 = b.leading_x
            if (x0 < -tol).any() or (b.y < -tol).any():
                out.append(f"block {b.label()}: leading vectors are not nonnegative")
            if abs(float(b.y @ x0) - 1.0) > 1e-7:
                out.append(f"block {b.label()}: leading vectors are not normalized")
        if len(self.blocks) > 1:
            g = self.graph(z)
            s = g.s
            for b in self.blocks:
                inner = min((z[i, j].val for i in b.indices for j in b.indices), default=INF)
                if inner > s and len(b.indices) > 1:
                    out.append(f"block {b.label()}: coupling is not above the block leading term")
        return out


@dataclass
class Step:
    process: str
    transform: tuple
    partition_before: tuple
    partition_after: tuple
    depth_before: Fraction
    depth_after: Fraction
    graph: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "process": self.process,
            "transform": [[i, [f.numerator, f.denominator]] for i, f in self.transform],
            "partition_before": [list(p) for p in self.partition_before],
            "partition_after": [list(p) for p in self.partition_after],
            "depth_before": [self.depth_before.numerator, self.depth_before.denominator],
            "depth_after": [self.depth_after.numerator, self.depth_after.denominator],
            "graph": self.graph,
            "detail": self.detail,
        }


@dataclass
class DriverTranscript:
    steps: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, step: Step):
        self.steps.append(step)

    def is_monotone(self) -> bool:
        for st in self.steps:
            if st.depth_after < st.depth_before:
                return False
            if st.process in ("B", "C") and not st.depth_after > st.depth_before:
                return False
        return True

    def to_json(self) -> list:
        return [s.to_json() for s in self.steps]


@dataclass(frozen=True)
class SingularityReport:
    blocks: tuple
    lam: PuiseuxSeries
    depth: Fraction

    def __str__(self):
        names = ", ".join("{" + ",".join(str(i) for i in b) + "}" for b in self.blocks)
        return (f"singular Perron data at depth {self.depth}: blocks {names} "
                f"share the eigenvalue {format_series(self.lam, 12)}")


class RunResult(NamedTuple):
    lam: PuiseuxSeries
    vector: tuple
    transcript: DriverTranscript


# ---------------------------------------------------------------------------
# helpers


GRID_LIMIT = 48
_DENOMINATORS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64)


def _nice(x: Fraction) -> Fraction:
    """A positive rational <= x with a small denominator; keeps the grid coarse."""
    for q in _DENOMINATORS:
        p = int(x * q)
        if p >= 1:
            return Fraction(p, q)
    return x


def _flatten(g: WeightedDigraph):
    res = flat_slanted_form(g)
    if res.parameter is not None and _nice(res.parameter) != res.parameter:
        res = flat_slanted_form(g, eps=_nice(res.parameter))
    return res


def _gently(g: WeightedDigraph, e, delta, cap):
    if delta is not None:
        return gently_slanted_form(g, e, delta=delta)
    res = gently_slanted_form(g, e, cap=cap)
    nice = _nice(res.parameter)
    if nice != res.parameter:
        try:
            res = gently_slanted_form(g, e, delta=nice)
        except PerronError:
            pass
    return res


def _vector_val(e: PuiseuxSeries):
    """Valuation of a vector entry; a vanishing entry counts from its truncation."""
    return e.val if not e.is_zero else e.trunc


def _transform_pairs(shifts: Sequence) -> tuple:
    return tuple((i + 1, as_exponent(r)) for i, r in enumerate(shifts) if as_exponent(r) != 0)


def _submatrix(z: PuiseuxMatrix, rows: Sequence, cols: Sequence) -> PuiseuxMatrix:
    return PuiseuxMatrix([[z[i, j] for j in cols] for i in rows])


def _check_input(y: PuiseuxMatrix):
    if y.shape[0] != y.shape[1]:
        raise DimensionMismatch("matrix must be square")
    if y.is_zero:
        raise ZeroMatrix("matrix is zero")
    for row in y:
        for e in row:
            if not e.is_zero and e.leading_coeff <= 0:
                raise NotSubtractionFree("every nonzero entry needs a positive leading coefficient")
    if not nx.is_strongly_connected(adjacency_graph(y).to_networkx()):
        raise NotIrreducible("matrix is reducible")


def compare_lambdas(a: Block, b: Block, below=None) -> int:
    """Sign of λ(a) - λ(b) at the precision both are known to; 0 on a tie.

    With ``below`` a difference of valuation ``>= below`` also counts as a
    tie: it is invisible next to a coupling of that order.
    """
    upto = min(a.known, b.known)
    d = a.lam.truncate(upto) - b.lam.truncate(upto)
    scale = max(1.0, a.lam.max_abs, b.lam.max_abs)
    if d.is_zero or (below is not None and d.val >= below):
        return 0
    c = d.leading_coeff
    if abs(c) <= EQUAL_TOL * scale:
        return 0
    if abs(c) <= AMBIGUOUS_TOL * scale:
        raise DegenerateDominance(f"eigenvalues of {a.label()} and {b.label()} differ by {c:.3g} only")
    return 1 if c > 0 else -1


def _block_from_quadruple(indices: tuple, eq: EigenQuadruple) -> Block:
    x = eq.vector(0)
    y = eq.left.leading[0]
    x0 = np.array([s.coeff(0) for s in x])
    sign = 1
    if x0.sum() < 0:
        sign = -1
        x = tuple(-s for s in x)
        y = -y
        x0 = -x0
    overlap = float(y @ x0)
    if abs(overlap) < 1e-9 or (x0 < -POSITIVITY_SLACK * np.abs(x0).max()).any():
        raise PositivityViolation("merged leading vector is not a Perron vector")
    y = y / overlap
    yv = tuple(s * (1.0 / overlap) for s in eq.covector(0))
    if sign < 0:
        yv = tuple(-s for s in yv)
    return Block(tuple(indices), eq.lam, eq.depth, tuple(x), y, yv=yv)


def _seed_block(z: PuiseuxMatrix, comp: Sequence) -> Block:
    idx = tuple(sorted(comp))
    if len(idx) == 1:
        i = idx[0]
        return Block(idx, z[i, i], Fraction(0), (PuiseuxSeries.constant(1.0),), np.ones(1), exact=True)
    sub = _submatrix(z, idx, idx)
    v = sub.val
    rho, x, y = perron_real(sub.coefficient(v))
    x = x / x.max()
    y = y / float(y @ x)
    lam = PuiseuxSeries.monomial(rho, v, trunc=v)
    xs = tuple(PuiseuxSeries.constant(c, trunc=0) for c in x)
    return Block(idx, lam, Fraction(0), xs, y)


# ---------------------------------------------------------------------------
# the three processes


def seed_pfdata(y: PuiseuxMatrix, shifts: Sequence | None = None) -> PFData:
    """Depth-0 Perron data on the strong components of the leading term of G(Z)."""
    shifts = tuple(as_exponent(r) for r in (shifts or [0] * y.n))
    z = diag_conjugate(y, shifts)
    for row in z:
        for e in row:
            if not e.is_zero and e.leading_coeff <= 0:
                raise NotSubtractionFree("every nonzero entry needs a positive leading coefficient")
    g = adjacency_graph(z)
    if not is_flat_slanted(g):
        raise NotFlatSlanted("seed needs a flat-slanted adjacency graph")
    comps = leading_components(g, strong=True)
    blocks = [_seed_block(z, [u - 1 for u in c]) for c in comps]
    return PFData(y, shifts, blocks)


def process_a(pf: PFData) -> tuple:
    """Flatten G(𝔄) and pull the transform back to the indices."""
    g = pf.graph()
    res = _flatten(g)
    shifts = list(pf.shifts)
    for k, b in enumerate(pf.blocks):
        for i in b.indices:
            shifts[i] += res.transform.shift(k + 1)
    out = PFData(pf.Y, tuple(shifts), list(pf.blocks))
    h = out.graph()
    assert is_flat_slanted(h), "Process A postcondition failed"
    step = Step("A", _transform_pairs([shifts[i] - pf.shifts[i] for i in range(len(shifts))]),
                pf.partition, out.partition, pf.depth, out.depth, h.to_dot(),
                {"eps": None if res.parameter is None else str(res.parameter)})
    return out, step


def _dominant(blocks: list, below=None) -> list:
    """Positions of the blocks with the largest eigenvalue."""
    best = [0]
    for k in range(1, len(blocks)):
        c = compare_lambdas(blocks[k], blocks[best[0]], below)
        if c > 0:
            best = [k]
        elif c == 0:
            best.append(k)
    return best


def _refine(z: PuiseuxMatrix, b: Block, upto) -> Block:
    """Recompute a merged block from its own submatrix until λ is known to ``upto``."""
    if b.exact or b.known >= upto:
        return b
    sub = _submatrix(z, b.indices, b.indices)
    rel = upto - sub.val
    try:
        eq = deepen(start_quadruple(sub, lcm_denominators([rel, Fraction(1, sub.q)])), rel)
        if eq.rank != 1:
            return b
        # only λ gets sharper; the depth the algorithm reached is unchanged
        return replace(_block_from_quadruple(b.indices, eq), depth=b.depth)
    except PerronError:
        return b


def check_genericness(pf: PFData, groups: Sequence | None = None) -> SingularityReport | None:
    """Report a singular group (all eigenvalues equal) of positive depth, if any."""
    if groups is None:
        groups = [list(range(len(pf.blocks)))]
    s = pf.graph().s if len(pf.blocks) > 1 else None
    for grp in groups:
        if len(grp) < 2:
            continue
        blocks = [pf.blocks[k] for k in grp]
        if len(_dominant(blocks, s)) == len(blocks):
            depth = max(b.depth for b in blocks)
            if depth > 0:
                upto = min(b.known for b in blocks)
                return SingularityReport(tuple(tuple(i + 1 for i in b.indices) for b in blocks),
                                         blocks[0].lam.truncate(upto), depth)
    return None


def _resolvent_vector(z: PuiseuxMatrix, root: Block, desc: list, order, left: bool = False) -> tuple:
    """(λ - W)^{-1} Z[desc, root] x_root, the subordinate part of a merged vector.

    With ``left`` the transposed problem for the left vector is solved.
    """
    if left:
        z = z.T
    w = _submatrix(z, desc, desc)
    c = _submatrix(z, desc, root.indices)
    b = mat_vec(c, root.left if left else root.x)
    a = w.minus_scalar(root.lam)
    rhs = [-e for e in b]
    u = None
    for k in range(16):
        # precision of λ limits how far the resolvent is certified
        try:
            u = solve_linear(a, rhs, order * Fraction(16 - k, 16))
            order = order * Fraction(16 - k, 16)
            break
        except SingularLeadingTerm:
            continue
    if u is None:
        raise SingularLeadingTerm("resolvent of the dominant block is singular")
    scale = max([1.0] + [e.max_abs for e in u])
    for e in u:
        if not e.is_zero and e.leading_coeff < -POSITIVITY_SLACK * scale:
            raise PositivityViolation(f"resolvent entry {e!r} has a negative leading coefficient")
    return tuple(e.truncate(order) for e in u)


def process_b(pf: PFData, groups: Sequence, delta=None) -> tuple:
    """Merge each dominant block with its subordinates in the given groups.

    ``groups`` lists the block positions of every strong component of the
    leading term of G(𝔄) that is non-singular.  All other blocks are kept.
    """
    g = pf.graph()
    s = g.s
    v = pf.Z.val
    e = set(range(1, len(pf.blocks) + 1))
    roots = {}
    for grp in groups:
        blocks = [pf.blocks[k] for k in grp]
        dom = _dominant(blocks, s)
        if len(dom) == len(blocks):
            raise SingularInput("group is singular; Process C applies")
        top = [grp[k] for k in dom]
        roots[tuple(grp)] = top
        e -= {k + 1 for k in grp if k not in top}
    res = _gently(g, e, delta, (s - v) / 2)
    dlt = res.parameter
    shifts = list(pf.shifts)
    for k, b in enumerate(pf.blocks):
        for i in b.indices:
            shifts[i] += res.transform.shift(k + 1)
    z = diag_conjugate(pf.Y, shifts)
    lead = res.graph.leading_term().to_networkx()
    merged = {}
    used = set()
    for grp, top in roots.items():
        inside = set(grp)
        for r in top:
            reach = {u - 1 for u in nx.descendants(lead, r + 1)} & inside
            reach -= set(top)
            used |= reach | {r}
            root = pf.blocks[r]
            desc = sorted(i for k in reach for i in pf.blocks[k].indices)
            depth = root.depth + dlt
            lam = root.lam.truncate(root.lam.val + depth)
            if not desc:
                merged[r] = Block(root.indices, lam, depth, root.x, root.y)
                continue
            u = _resolvent_vector(z, root, desc, depth)
            ul = _resolvent_vector(z, root, desc, depth, left=True)
            idx = sorted(root.indices + tuple(desc))
            where = {i: k for k, i in enumerate(root.indices)}
            wdesc = {i: k for k, i in enumerate(desc)}
            x = tuple(root.x[where[i]].truncate(depth) if i in where else u[wdesc[i]] for i in idx)
            y = np.array([root.y[where[i]] if i in where else 0.0 for i in idx])
            yv = tuple(root.left[where[i]].truncate(depth) if i in where else ul[wdesc[i]] for i in idx)
            merged[r] = Block(tuple(idx), lam, depth, x, y, yv=yv)
    blocks = []
    for k, b in enumerate(pf.blocks):
        if k in merged:
            blocks.append(merged[k])
        elif k not in used:
            blocks.append(b)
    blocks.sort(key=lambda b: b.indices[0])
    out = PFData(pf.Y, tuple(shifts), blocks)
    step = Step("B", _transform_pairs([shifts[i] - pf.shifts[i] for i in range(len(shifts))]),
                pf.partition, out.partition, min(pf.blocks[k].depth for grp in groups for k in grp),
                min(b.depth for b in merged.values()), out.graph().to_dot() if len(blocks) > 1 else "",
                {"delta": str(dlt), "E": sorted(e)})
    return out, step


def process_c(pf: PFData, group: Sequence, generalized: bool = False) -> tuple:
    """Merge a singular group through the Perron pair of its coupling pencil.

    With ``generalized`` a group of positive depth is accepted; the merged
    quadruple is recomputed from depth 0 on the group submatrix either way.
    """
    group = list(group)
    if len(group) < 2:
        raise NotSingular("Process C needs at least two blocks")
    blocks = [pf.blocks[k] for k in group]
    g = pf.graph()
    s = g.s
    if len(_dominant(blocks, s)) != len(blocks):
        raise NotSingular("block eigenvalues differ")
    if max(b.depth for b in blocks) > 0 and not generalized:
        raise NotDepthZero("singular data of positive depth")
    z = pf.Z
    idx = sorted(i for b in blocks for i in b.indices)
    sub = _submatrix(z, idx, idx)
    v = sub.val
    rel = s - v
    q = lcm_denominators([rel, Fraction(1, sub.q)])
    eq = deepen(start_quadruple(sub, q), rel)
    while eq.rank > 1 and eq.depth < rel + 1:
        eq = deepen(eq, eq.depth + Fraction(1, q))
    if eq.rank != 1:
        raise NotSingular(f"coupling pencil of {[b.label() for b in blocks]} has no simple Perron root")
    merged = _block_from_quadruple(tuple(idx), eq)
    # depth is measured from v(Z); the group submatrix may start higher
    merged = replace(merged, depth=merged.depth + (v - z.val))
    mu = eq.lam.coeff(s)
    rest = [b for k, b in enumerate(pf.blocks) if k not in group]
    out = PFData(pf.Y, pf.shifts, sorted(rest + [merged], key=lambda b: b.indices[0]))
    c = [float(np.linalg.norm(merged.leading_x[[idx.index(i) for i in b.indices]])) for b in blocks]
    step = Step("C", (), pf.partition, out.partition, min(b.depth for b in blocks), merged.depth,
                out.graph().to_dot() if len(out.blocks) > 1 else "",
                {"mu": mu, "s": str(s), "weights": c})
    return out, step


def coupling_matrix(pf: PFData, group: Sequence) -> np.ndarray:
    """Δ_ij = y_jᵀ Z_s[block j, block i] x_i, with Z_s the coefficient at s(G(𝔄))."""
    s = pf.graph().s
    zs = pf.Z.coefficient(s)
    blocks = [pf.blocks[k] for k in group]
    m = len(blocks)
    out = np.zeros((m, m))
    for a, bi in enumerate(blocks):
        for b, bj in enumerate(blocks):
            out[b, a] = bj.y @ zs[np.ix_(bj.indices, bi.indices)] @ bi.leading_x
    return out


# ---------------------------------------------------------------------------
# driver


def phase_one(y: PuiseuxMatrix, transcript: DriverTranscript, delta=None, strict: bool = False) -> tuple:
    """Processes A/B/C until one block remains; returns (PFData, breach report or None)."""
    g = adjacency_graph(y)
    res = _flatten(g)
    shifts = tuple(res.transform.shift(i + 1) for i in range(y.n))
    pf = seed_pfdata(y, shifts)
    transcript.add(Step("A", _transform_pairs(shifts), ((tuple(range(1, y.n + 1))),), pf.partition,
                        Fraction(0), pf.depth, adjacency_graph(pf.Z).to_dot(),
                        {"eps": None if res.parameter is None else str(res.parameter), "seed": True}))
    rounds = 0
    limit = y.n * y.n
    while len(pf.blocks) > 1:
        rounds += 1
        if rounds > limit:
            raise ConvergenceFailure(f"partition did not collapse within {limit} rounds")
        if not is_flat_slanted(pf.graph()):
            pf, step = process_a(pf)
            transcript.add(step)
        h = pf.graph()
        groups = [sorted(u - 1 for u in c) for c in leading_components(h, strong=True)]
        groups = [grp for grp in groups if len(grp) > 1]
        singular, regular = [], []
        for grp in groups:
            blocks = [pf.blocks[k] for k in grp]
            if len(_dominant(blocks, h.s)) == len(blocks) and min(b.known for b in blocks) < h.s:
                # an apparent tie may only reflect how shallow a merged block is
                z = pf.Z
                for k in grp:
                    pf.blocks[k] = _refine(z, pf.blocks[k], h.s)
                blocks = [pf.blocks[k] for k in grp]
            (singular if len(_dominant(blocks, h.s)) == len(blocks) else regular).append(grp)
        report = check_genericness(pf, singular)
        generalized = False
        if report is not None:
            if strict:
                return pf, report
            transcript.notes.append(str(report))
            generalized = True
        if regular:
            before = pf.blocks
            pf, step = process_b(pf, regular, delta=delta)
            transcript.add(step)
            # positions shift after merging; re-identify the singular groups by their blocks
            singular = [[pf.blocks.index(before[k]) for k in grp] for grp in singular
                        if all(before[k] in pf.blocks for k in grp)]
        for grp in sorted(singular, key=lambda gr: -min(gr)):
            keep = [pf.blocks[k] for k in grp]
            try:
                pf, step = process_c(pf, [pf.blocks.index(b) for b in keep], generalized=generalized)
            except PerronError:
                if report is not None:
                    return pf, report
                raise
            transcript.add(step)
    return pf, None


def _phase_two(z: PuiseuxMatrix, depth: Fraction, extra: Sequence = ()) -> EigenQuadruple:
    q = lcm_denominators([depth, Fraction(1, z.q)] + list(extra))
    return deepen(start_quadruple(z, q), depth)


def _finish(y: PuiseuxMatrix, shifts: Sequence, eq: EigenQuadruple, target, tol: float = 1e-9) -> tuple:
    lam = eq.lam
    x = eq.vector(0)
    if sum(s.coeff(0) for s in x) < 0:
        x = tuple(-s for s in x)
    base = min(shifts)
    cut = 1e-12 * max(s.max_abs for s in x)
    x = tuple(PuiseuxSeries([(e, c) for e, c in s.terms if abs(c) > cut], trunc=s.trunc) for s in x)
    vec = tuple(s.shift(r - base) for s, r in zip(x, shifts))
    if lam.is_zero or lam.leading_coeff <= 0:
        raise ConvergenceFailure("computed eigenvalue is not positive")
    rv = residual_valuation(y, lam, vec, tol)
    if not rv > y.val + target:
        raise ConvergenceFailure(f"residual valuation {rv} does not exceed {y.val + target}")
    return lam, vec


def run(y: PuiseuxMatrix, target_depth=2, strict: bool = False, delta=None, tol: float = 1e-9) -> RunResult:
    """Perron root and a Perron vector of ``y`` with residual beyond v(Y) + target_depth.

    The vector is returned in the coordinates of ``y``.  With ``strict`` a
    singular block group of positive depth raises GenericnessViolation instead
    of falling back to the conjugations found so far.
    """
    target = as_exponent(target_depth)
    if is_inf(target) or target < 0:
        raise ValueError("target depth must be finite and nonnegative")
    _check_input(y)
    transcript = DriverTranscript()
    failures = []
    try:
        pf, report = phase_one(y, transcript, delta=delta, strict=strict)
    except PerronError as exc:
        if strict:
            raise
        failures.append(f"phase one: {exc}")
        pf, report = None, None
    if report is not None:
        if str(report) not in transcript.notes:
            transcript.notes.append(str(report))
        if strict:
            raise GenericnessViolation(report, str(report))
    first = transcript.steps[0].transform if transcript.steps else ()
    seed_shifts = [Fraction(0)] * y.n
    for i, r in first:
        seed_shifts[i - 1] = r
    candidates = []
    if pf is not None:
        candidates.append(("final", pf.shifts))
    candidates.append(("flat", tuple(seed_shifts)))
    candidates.append(("identity", (Fraction(0),) * y.n))
    extra = []
    if pf is not None and report is None and len(pf.blocks) == 1:
        extra = [e for e in pf.blocks[0].lam.exponents] + [pf.blocks[0].depth]
    conjugated = [(name, shifts, diag_conjugate(y, shifts)) for name, shifts in candidates]
    if len(conjugated) > 2 and conjugated[0][2].q > max(GRID_LIMIT, 4 * conjugated[1][2].q):
        # a much finer grid makes deepening quadratic in its length; try the coarser one first
        conjugated[0], conjugated[1] = conjugated[1], conjugated[0]
    seen = set()
    for name, shifts, z in conjugated:
        if shifts in seen:
            continue
        seen.add(shifts)
        try:
            eq = _phase_two(z, target, extra)
            lam, vec = _finish(y, shifts, eq, target, tol)
        except PerronError as exc:
            failures.append(f"{name} conjugation: {exc}")
            continue
        if name != "final" or report is not None:
            transcript.notes.append(f"deepened on the {name} conjugation")
        if pf is not None and report is None and len(pf.blocks) == 1:
            _crosscheck(pf.blocks[0], lam, transcript)
        transcript.notes.extend(failures)
        return RunResult(lam, vec, transcript)
    if report is not None:
        raise GenericnessViolation(report, str(report) + "; " + "; ".join(failures))
    raise ConvergenceFailure("; ".join(failures))


def _crosscheck(block: Block, lam: PuiseuxSeries, transcript: DriverTranscript):
    upto = min(block.known, lam.trunc)
    d = block.lam.truncate(upto) - lam.truncate(upto)
    scale = max(1.0, lam.max_abs)
    if not d.is_zero and abs(d.leading_coeff) > 1e-7 * scale:
        raise ConvergenceFailure(f"phase one and phase two disagree at {format_power(d.val)}")
    transcript.notes.append(f"phase one eigenvalue agrees up to {format_power(upto)}")
