"""Eigen-quadruples and recursive deepening of approximate eigenvectors.

Everything is computed on the grid s = t^(1/q).  A quadruple of depth L/q
stores the eigenvalue coefficients mu_V .. mu_{V+L} (V = q*v(Y)) and, for each
quasi-basis vector, its coefficients at s^0 .. s^L.  Vectors beyond the rank
are stored already multiplied by their s-shift, so their coefficient at s^0
vanishes and ``shift`` points at the leading one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import networkx as nx
import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    GammaSingular,
    NotIrreducible,
    NotSemisimple,
    PencilEmpty,
    ResidualNotInImage,
)
from .series import INF, PuiseuxMatrix, PuiseuxSeries, as_exponent, mat_vec, vector_trunc

RANK_TOL = 1e-9
IMAGE_TOL = 1e-7


# ---------------------------------------------------------------------------
# real primitives


def _rank(a: np.ndarray, tol: float = RANK_TOL) -> int:
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(sv > tol * max(sv[0], 1.0)))


def null_space(a: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Columns spanning the numerical kernel, in reduced row-echelon form."""
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(a)
    scale = max(sv[0] if sv.size else 0.0, 1.0)
    k = int(np.sum(sv > tol * scale))
    basis = vt[k:].T
    return rref_columns(basis)


def rref_columns(basis: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Canonical basis of the column span: pivots equal to one, cleared elsewhere."""
    m = basis.T.copy()
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) <= tol * max(1.0, np.abs(m).max()):
            continue
        m[[r, p]] = m[[p, r]]
        m[r] /= m[r, c]
        for i in range(rows):
            if i != r:
                m[i] -= m[i, c] * m[r]
        r += 1
    return m[:r].T


def perron_real(a, max_iter: int = 100000, tol: float = 1e-12) -> tuple:
    """Perron root and positive right/left eigenvectors with y.x = 1.

    Power iteration on A + I (which is primitive for irreducible A) followed
    by a few inverse-iteration sweeps to reach working precision.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionMismatch("Perron root needs a square matrix")
    if (a < 0).any():
        raise NotIrreducible("matrix has negative entries")
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((j, i) for i in range(n) for j in range(n) if a[i, j] > 0)
    if not nx.is_strongly_connected(g):
        raise NotIrreducible("matrix is reducible")
    if n == 1:
        return float(a[0, 0]), np.ones(1), np.ones(1)

    def power(m):
        shifted = m + np.eye(n)
        x = np.ones(n) / n
        for _ in range(max_iter):
            nxt = shifted @ x
            nxt /= nxt.sum()
            if np.abs(nxt - x).max() < 1e-9:
                return nxt
            x = nxt
        raise ConvergenceFailure(f"power iteration did not settle in {max_iter} steps")

    def polish(m, x):
        rho = float(x @ (m @ x) / (x @ x))
        for _ in range(3):
            shift = rho * (1 + 1e-10) + 1e-14
            try:
                x = np.linalg.solve(m - shift * np.eye(n), x)
            except np.linalg.LinAlgError:
                break
            x = np.abs(x) / np.abs(x).sum()
            rho = float(x @ (m @ x) / (x @ x))
        return rho, x

    rho, x = polish(a, power(a))
    _, y = polish(a.T, power(a.T))
    if np.abs(a @ x - rho * x).max() > 1e-8 * max(1.0, rho):
        raise ConvergenceFailure("Perron vector residual too large")
    y = y / (y @ x)
    return rho, x, y


class RightInverse:
    """Minimum-norm right inverse f of A - mu on its image."""

    def __init__(self, a, mu: float = 0.0, tol: float = RANK_TOL):
        a = np.asarray(a, dtype=float)
        self.operator = a - mu * np.eye(a.shape[0])
        self.matrix = np.linalg.pinv(self.operator, rcond=tol)
        self.scale = max(1.0, float(np.abs(self.operator).max()))

    def __call__(self, z, check: bool = True) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        x = self.matrix @ z
        if check:
            miss = np.abs(self.operator @ x - z).max() if z.size else 0.0
            if miss > IMAGE_TOL * max(self.scale, float(np.abs(z).max(initial=0.0))):
                raise ResidualNotInImage(f"vector misses the image by {miss:.3g}")
        return x


def pseudo_inverse_on_image(a, mu: float = 0.0) -> RightInverse:
    return RightInverse(a, mu)


# ---------------------------------------------------------------------------
# coefficient grids


@lru_cache(maxsize=256)
def _grid(y: PuiseuxMatrix, q: int, start: int, count: int) -> np.ndarray:
    g = y.grid(q, start, count)
    g.setflags(write=False)
    return g


def _ramification(y: PuiseuxMatrix, q: int | None) -> int:
    base = y.q
    if q is None:
        return base
    if q % base:
        raise ValueError(f"grid 1/{q} does not refine the matrix grid 1/{base}")
    return q


def simple_step(y: PuiseuxMatrix, mu: Sequence[float], xs: Sequence, w, f: Callable, q: int | None = None) -> tuple:
    """One round of the simple-eigenvalue recursion.

    ``mu`` holds mu_V .. mu_{V+n-1}, ``xs`` holds x_0 .. x_{n-1}; returns
    (mu_{V+n}, x_n).  ``w`` is the left leading vector with w.x_0 = 1.
    """
    q = _ramification(y, q)
    V = int(y.val * q)
    n = len(xs)
    if len(mu) != n:
        raise DimensionMismatch("need as many eigenvalue coefficients as vector coefficients")
    z = _grid(y, q, V, n + 1)
    acc = z[n] @ xs[0]
    for i in range(1, n):
        acc = acc + (z[i] - mu[i] * np.eye(z.shape[1])) @ xs[n - i]
    mu_n = float(np.asarray(w) @ acc)
    x_n = -f(acc - mu_n * np.asarray(xs[0]))
    return mu_n, x_n


def simple_expand(y: PuiseuxMatrix, depth, q: int | None = None) -> tuple:
    """Eigenvalue and eigenvector series for a simple Perron root of the leading term."""
    q = _ramification(y, q)
    V = int(y.val * q)
    steps = int(as_exponent(depth) * q)
    lead = _grid(y, q, V, 1)[0]
    rho, x0, w = _leading_pair(lead)
    if _algebraic_multiplicity(lead, rho) != 1:
        raise NotSemisimple("leading eigenvalue is not simple")
    f = RightInverse(lead, rho)
    mu, xs = [rho], [x0]
    for _ in range(steps):
        m, x = simple_step(y, mu, xs, w, f, q)
        mu.append(m)
        xs.append(x)
    v = y.val
    lam = PuiseuxSeries.from_grid(mu, q, V, trunc=v + Fraction(steps, q))
    vec = tuple(PuiseuxSeries.from_grid([x[i] for x in xs], q, 0, trunc=Fraction(steps, q)) for i in range(len(x0)))
    return lam, vec


def _leading_pair(a: np.ndarray) -> tuple:
    """Largest real eigenvalue with right/left eigenvectors, y.x = 1."""
    ev = np.linalg.eigvals(a)
    real = ev[np.abs(ev.imag) <= 1e-9 * max(1.0, np.abs(ev).max())].real
    if real.size == 0:
        raise NotIrreducible("leading term has no real eigenvalue")
    rho = float(real.max())
    if (a >= 0).all():
        try:
            return perron_real(a)
        except (NotIrreducible, ConvergenceFailure):
            pass
    x = null_space(a - rho * np.eye(len(a)), 1e-7)[:, 0]
    y = null_space(a.T - rho * np.eye(len(a)), 1e-7)[:, 0]
    return rho, x, y / (y @ x)


def _algebraic_multiplicity(a: np.ndarray, rho: float, tol: float = 1e-6) -> int:
    ev = np.linalg.eigvals(a)
    return int(np.sum(np.abs(ev - rho) <= tol * max(1.0, abs(rho))))


# ---------------------------------------------------------------------------
# quasi bases and quadruples


@dataclass(frozen=True)
class QuasiBasis:
    """Vectors with coefficients at s^0 .. s^L; the first ``rank`` are leading."""

    coeffs: np.ndarray  # (g, L+1, N)
    rank: int
    shifts: tuple

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    @property
    def length(self) -> int:
        return self.coeffs.shape[1]

    @property
    def leading(self) -> np.ndarray:
        """(g, N) array of leading real vectors."""
        return np.array([self.coeffs[i, k] for i, k in enumerate(self.shifts)]).reshape(self.size, -1)

    def is_independent(self) -> bool:
        return _rank(self.leading) == self.size

    def series(self, i: int, q: int) -> tuple:
        """Stored form of vector i as Puiseux series, known up to s^L."""
        trunc = Fraction(self.length - 1, q)
        return tuple(PuiseuxSeries.from_grid(self.coeffs[i, :, k], q, 0, trunc=trunc) for k in range(self.coeffs.shape[2]))


@dataclass(frozen=True)
class PQPair:
    P: np.ndarray
    Q: np.ndarray
    rank: int

    @property
    def delta(self):
        return self.P[: self.rank, : self.rank]

    @property
    def omega(self):
        return self.Q[: self.rank, : self.rank]

    @property
    def A(self):
        return self.P[self.rank:, : self.rank]

    @property
    def B(self):
        return self.Q[self.rank:, : self.rank]

    @property
    def gamma(self):
        return self.P[self.rank:, self.rank:]


@dataclass(frozen=True)
class EigenQuadruple:
    Y: PuiseuxMatrix
    mu: tuple
    right: QuasiBasis
    left: QuasiBasis
    q: int

    @property
    def V(self) -> int:
        return int(self.Y.val * self.q)

    @property
    def L(self) -> int:
        return len(self.mu) - 1

    @property
    def depth(self) -> Fraction:
        return Fraction(self.L, self.q)

    @property
    def rank(self) -> int:
        return self.right.rank

    @property
    def size(self) -> int:
        return self.right.size

    @property
    def lam(self) -> PuiseuxSeries:
        return PuiseuxSeries.from_grid(self.mu, self.q, self.V, trunc=self.Y.val + self.depth)

    def vector(self, i: int = 0) -> tuple:
        return self.right.series(i, self.q)

    def covector(self, i: int = 0) -> tuple:
        return self.left.series(i, self.q)

    def transpose(self) -> "EigenQuadruple":
        return EigenQuadruple(self.Y.T, self.mu, self.left, self.right, self.q)

    def zgrid(self, count: int) -> np.ndarray:
        return _grid(self.Y, self.q, self.V, count)

    def right_inverse(self, transpose: bool = False) -> RightInverse:
        z0 = self.zgrid(1)[0]
        return RightInverse(z0.T if transpose else z0, self.mu[0])

    def residual_valuations(self) -> tuple:
        """Residual valuations of every right and left vector, minus v(Y)."""
        lam = self.lam
        out = []
        for basis, y in ((self.right, self.Y), (self.left, self.Y.T)):
            out.append(tuple(residual_valuation(y, lam, basis.series(i, self.q)) - y.val for i in range(basis.size)))
        return tuple(out)

    def is_valid(self) -> bool:
        if self.left.size != self.right.size or self.left.rank != self.right.rank:
            return False
        if not (self.right.is_independent() and self.left.is_independent()):
            return False
        rv, lv = self.residual_valuations()
        return all(r > self.depth for r in rv + lv)


def make_quadruple(y: PuiseuxMatrix, mu: Sequence[float], right: Sequence, left: Sequence, rank: int,
                   q: int | None = None) -> EigenQuadruple:
    """Assemble a quadruple from explicit coefficient lists.

    ``right[i]`` is a sequence of real vectors (coefficients of s^0, s^1, ...)
    of the stored form; missing trailing coefficients are zero.
    """
    q = _ramification(y, q)
    L = len(mu) - 1
    n = y.n

    def pack(vecs):
        arr = np.zeros((len(vecs), L + 1, n))
        shifts = []
        for i, v in enumerate(vecs):
            for k, c in enumerate(v[: L + 1]):
                arr[i, k] = c
            nz = [k for k in range(L + 1) if np.abs(arr[i, k]).max() > 0]
            shifts.append(nz[0] if nz else 0)
        return QuasiBasis(arr, rank, tuple(shifts))

    return EigenQuadruple(y, tuple(float(m) for m in mu), pack(right), pack(left), q)


def start_quadruple(y: PuiseuxMatrix, q: int | None = None, mu0: float | None = None) -> EigenQuadruple:
    """Depth-0 quadruple at the largest real eigenvalue of the leading term."""
    q = _ramification(y, q)
    V = int(y.val * q)
    z0 = _grid(y, q, V, 1)[0]
    n = len(z0)
    if mu0 is None:
        mu0 = _leading_pair(z0)[0]
    xs = null_space(z0 - mu0 * np.eye(n), 1e-7)
    ys = null_space(z0.T - mu0 * np.eye(n), 1e-7)
    g = xs.shape[1]
    if g == 0 or _algebraic_multiplicity(z0, mu0) != g or ys.shape[1] != g:
        raise NotSemisimple(f"eigenvalue {mu0} of the leading term is not semi-simple")
    if g == 1 and xs[:, 0].sum() < 0:
        xs = -xs
    overlap = ys.T @ xs
    ys = ys @ np.linalg.inv(overlap).T
    right = QuasiBasis(xs.T.reshape(g, 1, n).copy(), g, (0,) * g)
    left = QuasiBasis(ys.T.reshape(g, 1, n).copy(), g, (0,) * g)
    return EigenQuadruple(y, (float(mu0),), right, left, q)


def _zmix(z: np.ndarray, mu: Sequence[float], vec: np.ndarray, zeta: float) -> np.ndarray:
    """sum_k (Z_{V+L+1-k} - mu_{V+L+1-k}) vec_k over k = 0..L, with mu_{V+L+1} = zeta."""
    L = vec.shape[0] - 1
    out = z[L + 1] @ vec[0] - zeta * vec[0]
    for k in range(1, L + 1):
        out = out + z[L + 1 - k] @ vec[k] - mu[L + 1 - k] * vec[k]
    return out


def _pq(z: np.ndarray, mu, right: QuasiBasis, left: QuasiBasis) -> PQPair:
    r = right.rank
    rows = np.array([_zmix(z, mu, right.coeffs[j], 0.0) for j in range(right.size)])
    ly = left.leading
    P = ly @ rows.T
    Q = ly @ right.coeffs[:, 0, :].T
    P[:r, r:] = 0.0
    Q[:, r:] = 0.0
    return PQPair(P, Q, r)


def pq_matrices(x: EigenQuadruple) -> PQPair:
    z = x.zgrid(x.L + 2)
    return _pq(z, x.mu, x.right, x.left)


def pq_block_defect(x: EigenQuadruple) -> float:
    """Size of the entries that the block structure forces to vanish."""
    z = x.zgrid(x.L + 2)
    rows = np.array([_zmix(z, x.mu, x.right.coeffs[j], 0.0) for j in range(x.size)])
    full = x.left.leading @ rows.T
    r = x.rank
    return float(np.abs(full[:r, r:]).max(initial=0.0))


@dataclass(frozen=True)
class PencilSolution:
    zeta: float
    basis: np.ndarray  # (g, rho) columns c with (P - zeta Q) c = 0


def _gamma_solve(pq: PQPair, rhs: np.ndarray) -> np.ndarray:
    gam = pq.gamma
    if gam.size == 0:
        return rhs
    if np.linalg.cond(gam) > 1e12:
        raise GammaSingular("tail block of P is singular")
    return np.linalg.solve(gam, rhs)


def _lift(pq: PQPair, zeta: float, v: np.ndarray) -> np.ndarray:
    tail = -_gamma_solve(pq, (pq.A - zeta * pq.B) @ v)
    return np.vstack([v, tail])


def pencil_solve(P, Q, rank: int | None = None, tol: float = 1e-7) -> list:
    """Finite real solutions of (P - zeta Q) c = 0, largest zeta first.

    Only the principal rank x rank pencil is solved; each kernel vector is
    lifted through the tail block.  An empty list means no solution exists.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    g = P.shape[0]
    r = g if rank is None else rank
    pq = PQPair(P, Q, r)
    d, o = pq.delta, pq.omega
    if r == 0:
        return []
    scale = max(1.0, np.abs(d).max(), np.abs(o).max())
    ab = scipy.linalg.eigvals(d, o, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    zetas = []
    for a_, b_ in zip(alpha, beta):
        if abs(b_) <= 1e-10 * max(abs(a_), abs(b_), 1e-300):
            continue
        z = a_ / b_
        if abs(z.imag) > tol * max(1.0, abs(z)):
            continue
        zetas.append(float(z.real))
    zetas.sort(reverse=True)
    clusters: list = []
    for z in zetas:
        if clusters and abs(clusters[-1][-1] - z) <= 1e-6 * max(1.0, abs(z)):
            clusters[-1].append(z)
        else:
            clusters.append([z])
    out = []
    for cl in clusters:
        zeta = float(np.mean(cl))
        if abs(zeta - round(zeta)) < 1e-12:
            zeta = float(round(zeta))
        kern = null_space(d - zeta * o, tol / scale)
        if kern.shape[1] == 0:
            continue
        out.append(PencilSolution(zeta, _lift(pq, zeta, kern)))
    return out


def _complete(new_lead: np.ndarray, old: QuasiBasis, r: int) -> list:
    """Greedy choice of old leading vectors restoring rank r (index order)."""
    chosen: list = []
    span = list(new_lead)
    for i in range(r):
        if len(span) == r:
            break
        cand = span + [old.coeffs[i, 0]]
        if _rank(np.array(cand)) == len(cand):
            span = cand
            chosen.append(i)
    return chosen


def _advance_side(z, mu, zeta, basis: QuasiBasis, comb: np.ndarray, f: RightInverse) -> QuasiBasis:
    """New quasi basis at depth L+1 from combination columns ``comb`` (g x rho)."""
    g, length, n = basis.coeffs.shape
    L = length - 1
    rho = comb.shape[1]
    lead = np.einsum("gi,gkn->ikn", comb, basis.coeffs)
    fresh = np.zeros((rho, L + 2, n))
    fresh[:, : L + 1] = lead
    for j in range(rho):
        fresh[j, L + 1] = -f(_zmix(z, mu, lead[j], zeta))
    picks = _complete([v[0] for v in lead], basis, basis.rank)
    tails = [i for i in picks] + list(range(basis.rank, g))
    shifted = np.zeros((len(tails), L + 2, n))
    for k, i in enumerate(tails):
        shifted[k, 1:] = basis.coeffs[i]
    shifts = (0,) * rho + tuple(1 if i < basis.rank else basis.shifts[i] + 1 for i in tails)
    return QuasiBasis(np.concatenate([fresh, shifted]), rho, shifts)


def _advance(x: EigenQuadruple, zeta: float, right_comb: np.ndarray, left_comb: np.ndarray) -> EigenQuadruple:
    z = x.zgrid(x.L + 2)
    right = _advance_side(z, x.mu, zeta, x.right, right_comb, x.right_inverse())
    zt = np.transpose(z, (0, 2, 1))
    left = _advance_side(zt, x.mu, zeta, x.left, left_comb, x.right_inverse(transpose=True))
    if left.size != right.size:
        raise NotSemisimple("left and right quasi bases lost their pairing")
    left = _biorthonormalize(right, left)
    return EigenQuadruple(x.Y, x.mu + (float(zeta),), right, left, x.q)


def _biorthonormalize(right: QuasiBasis, left: QuasiBasis) -> QuasiBasis:
    r = right.rank
    if r == 0:
        return left
    m = left.coeffs[:r, 0] @ right.coeffs[:r, 0].T
    if np.linalg.cond(m) > 1e10:
        return left
    t = np.linalg.inv(m)
    coeffs = left.coeffs.copy()
    coeffs[:r] = np.einsum("ij,jkn->ikn", t, left.coeffs[:r])
    return QuasiBasis(coeffs, left.rank, left.shifts)


def deepen_semisimple(x: EigenQuadruple, zeta: float | None = None) -> EigenQuadruple:
    """One step of the semi-simple recursion; the Perron (largest real) root by default."""
    pq = pq_matrices(x)
    sols = pencil_solve(pq.P, pq.Q, pq.rank)
    if zeta is not None:
        sols = [s for s in sols if abs(s.zeta - zeta) <= 1e-7 * max(1.0, abs(zeta))]
    if not sols:
        raise PencilEmpty(f"no pencil solution at depth {x.depth}")
    sol = sols[0]
    tq = pq_matrices(x.transpose())
    dual = [s for s in pencil_solve(tq.P, tq.Q, tq.rank) if abs(s.zeta - sol.zeta) <= 1e-6 * max(1.0, abs(sol.zeta))]
    if not dual or dual[0].basis.shape[1] != sol.basis.shape[1]:
        raise NotSemisimple(f"left and right pencils disagree at zeta={sol.zeta}")
    return _advance(x, sol.zeta, sol.basis, dual[0].basis)


def deepen_rank1(x: EigenQuadruple) -> EigenQuadruple:
    """Rank-one step: zeta = P_11 / Q_11 with the tail correction solved through Gamma."""
    if x.rank != 1:
        raise ValueError("rank-one step needs a quadruple of rank 1")
    out = []
    for side in (x, x.transpose()):
        pq = pq_matrices(side)
        q11 = pq.Q[0, 0]
        if abs(q11) <= 1e-12:
            raise PencilEmpty("leading vectors are orthogonal")
        zeta = pq.P[0, 0] / q11
        out.append((zeta, _lift(pq, zeta, np.ones((1, 1)))))
    (zeta, c), (_, d) = out
    return _advance(x, zeta, c, d)


def deepen(x: EigenQuadruple, depth) -> EigenQuadruple:
    """Deepen until the quadruple reaches ``depth`` (in units of t)."""
    target = as_exponent(depth)
    while x.depth < target:
        x = deepen_rank1(x) if x.rank == 1 else deepen_semisimple(x)
    return x


def eigen_series(y: PuiseuxMatrix, depth, q: int | None = None) -> EigenQuadruple:
    """Perron-branch quadruple of ``y`` at ``depth`` starting from the leading term."""
    return deepen(start_quadruple(y, q), depth)


# ---------------------------------------------------------------------------
# residual oracle


def residual(y: PuiseuxMatrix, lam: PuiseuxSeries, x: Sequence[PuiseuxSeries]) -> tuple:
    """(Y - lam) x, with truncation carried through."""
    return mat_vec(y.minus_scalar(lam), x)


def residual_valuation(y: PuiseuxMatrix, lam: PuiseuxSeries, x: Sequence[PuiseuxSeries], tol: float = 1e-9):
    """Valuation of (Y - lam) x over its known terms; INF when every known term vanishes.

    Coefficients below ``tol`` times the size of the products Y x and lam x
    count as zero.
    """
    res = residual(y, lam, x)
    xmax = max([0.0] + [e.max_abs for e in x])
    ymax = max([lam.max_abs] + [e.max_abs for row in y for e in row])
    scale = max(1.0, ymax * xmax)
    best = INF
    for e in res:
        for ex, c in e.terms:
            if abs(c) > tol * scale:
                best = min(best, ex)
                break
    return best


def residual_trunc(y: PuiseuxMatrix, lam: PuiseuxSeries, x: Sequence[PuiseuxSeries]):
    """Largest exponent up to which the residual is known."""
    return vector_trunc(residual(y, lam, x))
