"""Exact correlators at tiny n by monomial expectation.

Each det(lambda_j I - W/sqrt(n)) is expanded over permutations into a
polynomial in the independent real degrees of freedom of W (the diagonal
entries and the real/imaginary parts above the diagonal).  The product of
the 2m determinant polynomials is collapsed by hash-consing monomials, and
the expectation is read off term by term from the analytic moment tables:
any odd exponent kills a monomial, even exponents contribute a product of
law moments.  Exact up to floating-point rounding; exponential blowup caps
the size at n <= 3, m <= 2.
"""
from __future__ import annotations

import math
from itertools import permutations

from .ensembles import make_diag_law, make_entry_law

__all__ = ["exact_correlator", "kappa4_slope", "MAX_N", "MAX_M"]

MAX_N = 3
MAX_M = 2


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _poly_mul(pa, pb):
    out = {}
    for ma, ca in pa.items():
        for mb, cb in pb.items():
            key = _merge_monomials(ma, mb)
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _merge_monomials(ma, mb):
    exps = dict(ma)
    for var, e in mb:
        exps[var] = exps.get(var, 0) + e
    return tuple(sorted(exps.items()))


def _entry_poly(i, j, lam, inv_sqrt_n):
    """Polynomial for (lam*I - W/sqrt(n))[i, j] in the W degrees of freedom."""
    if i == j:
        return {(): lam, ((("d", i), 1),): -inv_sqrt_n}
    a, b = (i, j) if i < j else (j, i)
    im_coeff = -1j * inv_sqrt_n if i < j else 1j * inv_sqrt_n
    return {
        ((("re", a, b), 1),): -inv_sqrt_n,
        ((("im", a, b), 1),): im_coeff,
    }


def _det_poly(n, lam):
    inv_sqrt_n = 1.0 / math.sqrt(n)
    total = {}
    for perm in permutations(range(n)):
        sign = _perm_sign(list(perm))
        term = {(): complex(sign)}
        for i in range(n):
            term = _poly_mul(term, _entry_poly(i, perm[i], lam, inv_sqrt_n))
        for mono, coeff in term.items():
            total[mono] = total.get(mono, 0.0) + coeff
    return total


def exact_correlator(n, lambdas, law, diag_law=None):
    """E prod_j det(lambda_j - H) for H = W/sqrt(n), evaluated exactly.

    Parameters
    ----------
    n : matrix size, at most 3
    lambdas : sequence of 2m real spectral points, m at most 2
    law : off-diagonal component EntryLaw (variance 1/2)
    diag_law : diagonal EntryLaw (variance 1); Gaussian by default
    """
    lambdas = [float(x) for x in lambdas]
    if len(lambdas) % 2 != 0 or not lambdas:
        raise ValueError("lambdas must have even, positive length")
    m = len(lambdas) // 2
    if n > MAX_N or m > MAX_M:
        raise ValueError(f"oracle supports n <= {MAX_N} and m <= {MAX_M}")
    if diag_law is None:
        diag_law = make_diag_law()

    poly = {(): 1.0 + 0.0j}
    for lam in lambdas:
        poly = _poly_mul(poly, _det_poly(n, lam))

    total = 0.0 + 0.0j
    for mono, coeff in poly.items():
        weight = 1.0
        for var, exp in mono:
            if exp % 2 == 1:
                weight = 0.0
                break
            weight *= diag_law.moment(exp) if var[0] == "d" else law.moment(exp)
        if weight:
            total += coeff * weight
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"correlator came out non-real: {total}")
    return total.real


def kappa4_slope(n, lambdas, diag_law=None):
    """Exact d F_2 / d kappa4 at fixed mu2 for m = 1.

    F_2 is linear in the component law's fourth moment (no monomial can hold
    two fourth powers of off-diagonal entries when only two determinants are
    multiplied), so a single finite difference across two laws is exact.
    """
    if len(lambdas) != 2:
        raise ValueError("kappa4 slope is defined for m = 1 (two lambdas)")
    law_hi = make_entry_law("two_point", mu4=0.75)  # kappa4 = 0
    law_lo = make_entry_law("two_point", mu4=0.25)  # kappa4 = -1/2
    hi = exact_correlator(n, lambdas, law_hi, diag_law)
    lo = exact_correlator(n, lambdas, law_lo, diag_law)
    return (hi - lo) / 0.5
