"""Hypothesis strategies shared by the property tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from oracles import strongly_connected
from puiseux_perron.series import PuiseuxMatrix, PuiseuxSeries

DENOMS = (1, 2, 3, 4)

exponents = st.builds(Fraction, st.integers(0, 12), st.sampled_from(DENOMS))
small_ints = st.integers(-5, 5).filter(lambda c: c != 0)


@st.composite
def series(draw, max_terms=4, positive=False):
    coef = st.integers(1, 5) if positive else small_ints
    terms = draw(st.dictionaries(exponents, coef, min_size=1, max_size=max_terms))
    return PuiseuxSeries(sorted(terms.items()))


@st.composite
def tropical_matrices(draw, min_n=1, max_n=6, density=0.6, irreducible=False):
    n = draw(st.integers(min_n, max_n))
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            if draw(st.floats(0, 1)) < density:
                row.append(Fraction(draw(st.integers(-6, 12)), draw(st.sampled_from(DENOMS))))
            else:
                row.append(float("inf"))
        rows.append(row)
    if irreducible and n == 1 and rows[0][0] == float("inf"):
        rows[0][0] = Fraction(draw(st.integers(-6, 12)), draw(st.sampled_from(DENOMS)))
    if irreducible:
        adj = np.array([[x != float("inf") for x in r] for r in rows])
        if not strongly_connected(adj):
            # close a Hamiltonian cycle so the graph is strongly connected
            for i in range(n):
                j = (i + 1) % n
                if rows[j][i] == float("inf"):
                    rows[j][i] = Fraction(draw(st.integers(0, 8)), draw(st.sampled_from(DENOMS)))
    return rows


@st.composite
def linear_perturbations(draw, min_n=2, max_n=6):
    """Y0 + t Y1 with real coefficients in general position and strongly connected support.

    Integer coefficients tie block eigenvalues on purpose-free coincidences;
    real draws keep the instances generic.
    """
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    while True:
        y0 = rng.uniform(0.5, 3, size=(n, n)) * (rng.random((n, n)) < 0.5)
        y1 = rng.uniform(0.5, 3, size=(n, n)) * (rng.random((n, n)) < 0.5)
        if y0.any() and strongly_connected(y0 + y1):
            break
    return PuiseuxMatrix.from_coefficients({Fraction(0): y0, Fraction(1): y1})
