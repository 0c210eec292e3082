"""Truncated real Puiseux series and matrices over them.

Exponents are exact ``Fraction`` values, coefficients are floats.  Every
series carries a truncation order ``trunc``: terms with exponent <= trunc
are known (missing ones are zero), terms beyond it are unknown.  An exact
polynomial has ``trunc == INF``.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    SingularLeadingTerm,
    TruncationError,
    ZeroMatrix,
)

INF = math.inf
ZERO_TOL = 1e-12


def as_exponent(e):
    """Coerce ``e`` to an exact exponent (``Fraction``) or the ``INF`` sentinel."""
    if isinstance(e, float):
        if e == INF:
            return INF
        raise TypeError(f"float exponent {e!r} is not allowed; use a Fraction")
    if isinstance(e, Fraction):
        return e
    return Fraction(e)


def is_inf(e) -> bool:
    return isinstance(e, float) and e == INF


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def lcm_denominators(exps: Iterable) -> int:
    q = 1
    for e in exps:
        if not is_inf(e):
            q = _lcm(q, Fraction(e).denominator)
    return q


class PuiseuxSeries:
    """Immutable truncated Puiseux series ``sum c_e t^e``."""

    __slots__ = ("_exps", "_coefs", "trunc")

    def __init__(self, terms: Iterable = (), trunc=INF, tol: float = ZERO_TOL, scale: float | None = None):
        trunc = as_exponent(trunc)
        acc: dict = {}
        for e, c in terms:
            e = as_exponent(e)
            if is_inf(e):
                continue
            if e > trunc:
                continue
            acc[e] = acc.get(e, 0.0) + float(c)
        if scale is None:
            scale = max((abs(c) for c in acc.values()), default=0.0)
        cut = tol * scale
        kept = sorted((e, c) for e, c in acc.items() if abs(c) > cut and c != 0.0)
        self._exps = tuple(e for e, _ in kept)
        self._coefs = tuple(c for _, c in kept)
        self.trunc = trunc

    # construction helpers

    @classmethod
    def constant(cls, c, trunc=INF) -> "PuiseuxSeries":
        return cls([(0, c)], trunc)

    @classmethod
    def monomial(cls, c, e, trunc=INF) -> "PuiseuxSeries":
        return cls([(e, c)], trunc)

    @classmethod
    def zero(cls, trunc=INF) -> "PuiseuxSeries":
        return cls((), trunc)

    @classmethod
    def coerce(cls, x) -> "PuiseuxSeries":
        if isinstance(x, PuiseuxSeries):
            return x
        if isinstance(x, (int, float, Fraction, np.floating, np.integer)):
            return cls.constant(float(x))
        raise TypeError(f"cannot interpret {x!r} as a Puiseux series")

    # inspection

    @property
    def terms(self) -> tuple:
        return tuple(zip(self._exps, self._coefs))

    @property
    def exponents(self) -> tuple:
        return self._exps

    @property
    def coefficients(self) -> tuple:
        return self._coefs

    @property
    def is_zero(self) -> bool:
        return not self._exps

    @property
    def val(self):
        return self._exps[0] if self._exps else INF

    @property
    def leading_coeff(self) -> float:
        return self._coefs[0] if self._coefs else 0.0

    @property
    def q(self) -> int:
        """Ramification: least q with every exponent in (1/q)Z."""
        return lcm_denominators(self._exps)

    @property
    def max_abs(self) -> float:
        return max((abs(c) for c in self._coefs), default=0.0)

    def coeff(self, e) -> float:
        e = as_exponent(e)
        if e > self.trunc:
            raise TruncationError(f"coefficient of t^{e} unknown beyond truncation {self.trunc}")
        for ee, c in zip(self._exps, self._coefs):
            if ee == e:
                return c
            if ee > e:
                break
        return 0.0

    def grid(self, q: int, start: int, count: int) -> np.ndarray:
        """Coefficients at exponents (start + k)/q for k < count."""
        out = np.zeros(count)
        if count <= 0:
            return out
        last = Fraction(start + count - 1, q)
        if last > self.trunc:
            raise TruncationError(f"coefficient of t^{last} unknown beyond truncation {self.trunc}")
        for e, c in zip(self._exps, self._coefs):
            k = e * q - start
            if k.denominator != 1:
                raise ValueError(f"exponent {e} is not on the 1/{q} grid")
            k = int(k)
            if 0 <= k < count:
                out[k] = c
        return out

    @classmethod
    def from_grid(cls, coeffs: Sequence[float], q: int, start: int, trunc=None, tol: float = ZERO_TOL) -> "PuiseuxSeries":
        if trunc is None:
            trunc = Fraction(start + len(coeffs) - 1, q)
        return cls(((Fraction(start + k, q), c) for k, c in enumerate(coeffs)), trunc, tol)

    # transformations

    def truncate(self, order) -> "PuiseuxSeries":
        order = as_exponent(order)
        new = min(self.trunc, order)
        return PuiseuxSeries(((e, c) for e, c in self.terms if e <= new), new, tol=0.0)

    def shift(self, e) -> "PuiseuxSeries":
        """Multiply by t^e."""
        e = as_exponent(e)
        return PuiseuxSeries(((x + e, c) for x, c in self.terms), self.trunc + e, tol=0.0)

    def scale(self, c: float) -> "PuiseuxSeries":
        return PuiseuxSeries(((e, c * x) for e, x in self.terms), self.trunc, tol=0.0)

    def leading(self) -> "PuiseuxSeries":
        if self.is_zero:
            return self
        return PuiseuxSeries([(self.val, self.leading_coeff)])

    # arithmetic

    def __add__(self, other):
        return add(self, PuiseuxSeries.coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return add(self, -PuiseuxSeries.coerce(other))

    def __rsub__(self, other):
        return add(PuiseuxSeries.coerce(other), -self)

    def __mul__(self, other):
        if isinstance(other, PuiseuxSeries):
            return mul(self, other)
        if isinstance(other, (int, float, Fraction, np.floating, np.integer)):
            return self.scale(float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, Fraction, np.floating, np.integer)):
            return self.scale(1.0 / float(other))
        return NotImplemented

    # comparison

    def __eq__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.terms == other.terms and self.trunc == other.trunc

    def __hash__(self):
        return hash((self.terms, self.trunc))

    def allclose(self, other, atol: float = 1e-9, upto=None) -> bool:
        """Coefficient-wise comparison for exponents up to ``upto``."""
        other = PuiseuxSeries.coerce(other)
        limit = min(self.trunc, other.trunc) if upto is None else as_exponent(upto)
        exps = {e for e in self._exps if e <= limit} | {e for e in other._exps if e <= limit}
        return all(abs(self.coeff(e) - other.coeff(e)) <= atol for e in exps)

    def __repr__(self):
        from .parsing import format_series
        return f"PuiseuxSeries({format_series(self, digits=12)!r})"


def val(x: PuiseuxSeries):
    return x.val


def add(x: PuiseuxSeries, y: PuiseuxSeries, tol: float = ZERO_TOL) -> PuiseuxSeries:
    trunc = min(x.trunc, y.trunc)
    scale = max(x.max_abs, y.max_abs)
    return PuiseuxSeries(list(x.terms) + list(y.terms), trunc, tol, scale=scale)


def mul(x: PuiseuxSeries, y: PuiseuxSeries, tol: float = ZERO_TOL) -> PuiseuxSeries:
    trunc = min(x.trunc + y.val, y.trunc + x.val)
    if is_inf(x.val) or is_inf(y.val):
        # the product of an exact zero is an exact zero
        if (is_inf(x.val) and is_inf(x.trunc)) or (is_inf(y.val) and is_inf(y.trunc)):
            trunc = INF
        return PuiseuxSeries((), trunc)
    acc: dict = {}
    for e1, c1 in x.terms:
        if e1 + y.val > trunc:
            break
        for e2, c2 in y.terms:
            e = e1 + e2
            if e > trunc:
                break
            acc[e] = acc.get(e, 0.0) + c1 * c2
    return PuiseuxSeries(acc.items(), trunc, tol, scale=x.max_abs * y.max_abs)


def invert(x: PuiseuxSeries, order) -> PuiseuxSeries:
    """Return y with x*y = 1 + (terms of exponent > order)."""
    if x.is_zero:
        raise ZeroDivisionError("inverse of the zero series")
    order = as_exponent(order)
    v = x.val
    q = x.q
    a0 = x.leading_coeff
    # y = sum b_n t^{-v + n/q}, only n with n/q <= order matter
    rel_known = x.trunc - v
    if is_inf(order):
        raise ValueError("invert needs a finite order")
    rel = min(order, rel_known)
    n_max = math.floor(rel * q)
    if n_max < 0:
        return PuiseuxSeries((), -v + rel)
    a = x.shift(-v).grid(q, 0, n_max + 1)
    b = np.zeros(n_max + 1)
    b[0] = 1.0 / a0
    for n in range(1, n_max + 1):
        b[n] = -np.dot(a[1:n + 1], b[n - 1::-1]) / a0
    return PuiseuxSeries.from_grid(b, q, int(-v * q), trunc=-v + rel)


# ---------------------------------------------------------------------------
# matrices


class PuiseuxMatrix:
    """Immutable rectangular matrix of Puiseux series."""

    __slots__ = ("entries",)

    def __init__(self, rows: Iterable[Iterable]):
        entries = tuple(tuple(PuiseuxSeries.coerce(x) for x in row) for row in rows)
        if not entries or not entries[0]:
            raise DimensionMismatch("empty matrix")
        width = len(entries[0])
        if any(len(r) != width for r in entries):
            raise DimensionMismatch("ragged rows")
        self.entries = entries

    @classmethod
    def from_real(cls, a) -> "PuiseuxMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls([[PuiseuxSeries.constant(x) for x in row] for row in a])

    @classmethod
    def from_coefficients(cls, mats: dict) -> "PuiseuxMatrix":
        """Build sum_e M_e t^e from a mapping exponent -> real matrix."""
        mats = {as_exponent(e): np.atleast_2d(np.asarray(m, float)) for e, m in mats.items()}
        shape = next(iter(mats.values())).shape
        return cls([[PuiseuxSeries((e, m[i, j]) for e, m in mats.items())
                     for j in range(shape[1])] for i in range(shape[0])])

    @classmethod
    def identity(cls, n: int) -> "PuiseuxMatrix":
        return cls.from_real(np.eye(n))

    @property
    def shape(self) -> tuple:
        return len(self.entries), len(self.entries[0])

    @property
    def n(self) -> int:
        rows, cols = self.shape
        if rows != cols:
            raise DimensionMismatch("matrix is not square")
        return rows

    def __getitem__(self, ij) -> PuiseuxSeries:
        i, j = ij
        return self.entries[i][j]

    def __iter__(self):
        return iter(self.entries)

    @property
    def val(self):
        return min((x.val for row in self.entries for x in row), default=INF)

    @property
    def q(self) -> int:
        q = 1
        for row in self.entries:
            for x in row:
                q = _lcm(q, x.q)
        return q

    @property
    def trunc(self):
        return min(x.trunc for row in self.entries for x in row)

    @property
    def is_zero(self) -> bool:
        return all(x.is_zero for row in self.entries for x in row)

    def map(self, fn) -> "PuiseuxMatrix":
        return PuiseuxMatrix([[fn(x) for x in row] for row in self.entries])

    def transpose(self) -> "PuiseuxMatrix":
        return PuiseuxMatrix(zip(*self.entries))

    @property
    def T(self) -> "PuiseuxMatrix":
        return self.transpose()

    def submatrix(self, rows: Sequence[int], cols: Sequence[int] | None = None) -> "PuiseuxMatrix":
        cols = rows if cols is None else cols
        return PuiseuxMatrix([[self.entries[i][j] for j in cols] for i in rows])

    def truncate(self, order) -> "PuiseuxMatrix":
        return self.map(lambda x: x.truncate(order))

    def coefficient(self, e) -> np.ndarray:
        rows, cols = self.shape
        return np.array([[self.entries[i][j].coeff(e) for j in range(cols)] for i in range(rows)])

    def leading_term(self) -> np.ndarray:
        return leading_term(self)

    def grid(self, q: int, start: int, count: int) -> np.ndarray:
        """Array of shape (count, rows, cols): coefficients at (start+k)/q."""
        rows, cols = self.shape
        out = np.zeros((count, rows, cols))
        for i in range(rows):
            for j in range(cols):
                out[:, i, j] = self.entries[i][j].grid(q, start, count)
        return out

    def valuation_matrix(self) -> list:
        return [[x.val for x in row] for row in self.entries]

    def minus_scalar(self, lam) -> "PuiseuxMatrix":
        """Y - lam * Id."""
        lam = PuiseuxSeries.coerce(lam)
        n = self.n
        return PuiseuxMatrix([[self.entries[i][j] - lam if i == j else self.entries[i][j]
                               for j in range(n)] for i in range(n)])

    def __add__(self, other: "PuiseuxMatrix") -> "PuiseuxMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        return PuiseuxMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other: "PuiseuxMatrix") -> "PuiseuxMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        return PuiseuxMatrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __matmul__(self, other):
        if isinstance(other, PuiseuxMatrix):
            return mat_mul(self, other)
        return mat_vec(self, other)

    def __eq__(self, other):
        if not isinstance(other, PuiseuxMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        from .parsing import format_matrix
        return f"PuiseuxMatrix({format_matrix(self, digits=12)})"


def mat_mul(a: PuiseuxMatrix, b: PuiseuxMatrix) -> PuiseuxMatrix:
    (m, k), (k2, n) = a.shape, b.shape
    if k != k2:
        raise DimensionMismatch(f"inner dimensions {k} and {k2} differ")
    rows = []
    for i in range(m):
        row = []
        for j in range(n):
            acc = PuiseuxSeries.zero()
            for l in range(k):
                acc = add(acc, mul(a.entries[i][l], b.entries[l][j]))
            row.append(acc)
        rows.append(row)
    return PuiseuxMatrix(rows)


def mat_vec(a: PuiseuxMatrix, x: Sequence[PuiseuxSeries]) -> tuple:
    m, k = a.shape
    if len(x) != k:
        raise DimensionMismatch(f"matrix has {k} columns, vector has {len(x)} entries")
    out = []
    for i in range(m):
        acc = PuiseuxSeries.zero()
        for l in range(k):
            acc = add(acc, mul(a.entries[i][l], x[l]))
        out.append(acc)
    return tuple(out)


def vector_val(x: Sequence[PuiseuxSeries]):
    return min((e.val for e in x), default=INF)


def vector_trunc(x: Sequence[PuiseuxSeries]):
    return min((e.trunc for e in x), default=INF)


def leading_term(y: PuiseuxMatrix) -> np.ndarray:
    v = y.val
    if is_inf(v):
        raise ZeroMatrix("leading term of the zero matrix")
    return y.coefficient(v)


def diag_conjugate(y: PuiseuxMatrix, r: Sequence) -> PuiseuxMatrix:
    """delta^{-1} Y delta with delta = diag(t^{r_i}): entry (i,j) times t^{r_j - r_i}."""
    rows, cols = y.shape
    if len(r) != rows or rows != cols:
        raise DimensionMismatch("shift vector length must equal the matrix size")
    r = [as_exponent(x) for x in r]
    return PuiseuxMatrix([[y.entries[i][j].shift(r[j] - r[i]) for j in range(cols)] for i in range(rows)])


def solve_linear(a: PuiseuxMatrix, b: Sequence[PuiseuxSeries], order, max_rounds: int = 10) -> tuple:
    """Solve A x = b modulo terms of exponent > ``order``.

    Gaussian elimination on series with minimal-valuation pivoting.  Inputs are
    cut to a working order that is raised until the residual is certified to
    the requested order.
    """
    n = a.n
    if len(b) != n:
        raise DimensionMismatch("right-hand side has the wrong length")
    order = as_exponent(order)
    b = [PuiseuxSeries.coerce(x) for x in b]
    spread = Fraction(1)
    for _ in range(max_rounds):
        x = _eliminate(a, b, order + spread)
        ax = mat_vec(a, x)
        res = [add(u, -w) for u, w in zip(ax, b)]
        if all(r.trunc >= order for r in res):
            scale = max([u.max_abs for u in ax] + [w.max_abs for w in b] + [1e-300])
            if any(abs(c) > 1e-8 * scale for r in res for e, c in r.terms if e <= order):
                raise SingularLeadingTerm("elimination residual does not vanish; A is numerically singular")
            return tuple(x)
        spread *= 2
    raise SingularLeadingTerm("could not reach the requested order; A is too close to singular")


def _eliminate(a: PuiseuxMatrix, b: list, work) -> list:
    n = a.n
    m = [[a[i, j].truncate(work) for j in range(n)] + [b[i].truncate(work)] for i in range(n)]
    for col in range(n):
        best = None
        for r in range(col, n):
            x = m[r][col]
            if x.is_zero:
                continue
            key = (x.val, -abs(x.leading_coeff))
            if best is None or key < best[0]:
                best = (key, r)
        if best is None:
            raise SingularLeadingTerm(f"no pivot in column {col}")
        m[col], m[best[1]] = m[best[1]], m[col]
        inv = invert(m[col][col], work)
        for r in range(col + 1, n):
            if m[r][col].is_zero:
                continue
            f = mul(m[r][col], inv)
            m[r] = m[r][:col + 1] + [add(m[r][k], -mul(f, m[col][k])) for k in range(col + 1, n + 1)]
    x = [PuiseuxSeries.zero() for _ in range(n)]
    for i in reversed(range(n)):
        acc = m[i][n]
        for k in range(i + 1, n):
            acc = add(acc, -mul(m[i][k], x[k]))
        x[i] = mul(acc, invert(m[i][i], work))
    return x


# ---------------------------------------------------------------------------
# positivity


class Positivity(enum.Enum):
    POSITIVE = "positive"
    NONNEGATIVE = "nonnegative"
    SUBTRACTION_FREE = "subtraction_free"
    GENERAL = "general"


def is_subtraction_free_series(x: PuiseuxSeries) -> bool:
    return all(c > 0 for c in x.coefficients)


def classify(y: PuiseuxMatrix) -> Positivity:
    """Most specific positivity class of ``y``.

    Subtraction-free means every nonzero entry has only positive coefficients
    (zero entries are allowed, as in banded examples).  Positive and
    nonnegative refer to the ordered field: the sign of the leading
    coefficient.
    """
    entries = [x for row in y for x in row]
    if all(is_subtraction_free_series(x) for x in entries):
        return Positivity.SUBTRACTION_FREE
    if all(x.leading_coeff > 0 for x in entries):
        return Positivity.POSITIVE
    if all(x.is_zero or x.leading_coeff > 0 for x in entries):
        return Positivity.NONNEGATIVE
    return Positivity.GENERAL
