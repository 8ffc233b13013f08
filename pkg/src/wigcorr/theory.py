"""Closed-form quantities: semicircle density, correlator normalizers, and
the sine-kernel limit of the normalized correlation functions.

The limiting object for 2m spectral points split into two blocks of m is

    det[ sinc(pi (xi_i - xi_{m+j})) ]_{i,j=1..m}
    ------------------------------------------- * prefactor(m, kappa4, lambda0)
        Vdm(xi_1..xi_m) Vdm(xi_{m+1}..xi_2m)

with prefactor exp{m(m-1) kappa4 (lambda0^2-2)^2 / 2} / pi^{2m(m-1)}.  The
ratio has removable singularities whenever points inside a block collide;
those are evaluated through a high-precision perturb-and-extrapolate path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .signedlog import SignedLog

__all__ = [
    "TheoryParams",
    "SineKernelValue",
    "semicircle_density",
    "exponent_drift",
    "diagonal_normalizer",
    "sinc_pi",
    "vandermonde",
    "sine_kernel_ratio",
    "limit_ratio",
    "f2_pair_asymptotic",
]

CONFLUENT_GAP = 1e-8     # below this in-block gap, switch to the limit path
_MP_GAP = 1e-3           # below this, evaluate in high precision
_MP_DEN = 1e-6           # ... or when the Vandermonde product is this small


def semicircle_density(lam):
    """Limiting eigenvalue density sqrt(4 - lam^2) / (2 pi) on [-2, 2]."""
    lam = float(lam)
    if abs(lam) > 2:
        raise ValueError("semicircle density is supported on [-2, 2]")
    return math.sqrt(4.0 - lam * lam) / (2.0 * math.pi)


def exponent_drift(lam):
    """Coefficient lam / (2 rho_sc(lam)) multiplying each spectral offset in
    the exponent of the pair-correlator normalizer."""
    lam = float(lam)
    if abs(lam) >= 2:
        raise ValueError("drift coefficient requires |lambda| < 2")
    return lam / (2.0 * semicircle_density(lam))


@dataclass(frozen=True)
class TheoryParams:
    """Bundle (lambda0, n, m, kappa4, xi) for the closed-form evaluators."""

    lambda0: float
    n: int
    m: int
    kappa4: float
    xi: tuple = ()

    def __post_init__(self):
        if not abs(self.lambda0) < 2:
            raise ValueError("lambda0 must lie strictly inside (-2, 2)")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if self.xi and len(self.xi) != 2 * self.m:
            raise ValueError("xi must be empty or have length 2m")


@dataclass(frozen=True)
class SineKernelValue:
    value: float
    confluent: bool


def diagonal_normalizer(xi, params):
    """Leading form of the coincident-point pair correlator scale:

        2 pi exp{ n (lambda0^2 - 2)/2 + 2 alpha(lambda0) xi + kappa4 }

    returned as a SignedLog (it underflows double precision near n ~ 700).
    The subleading (1 + o(1)) factor is intentionally not modeled; consumers
    state convergence checks as ratios in which it cancels.
    """
    lam0 = params.lambda0
    exponent = (
        params.n * (lam0 * lam0 - 2.0) / 2.0
        + 2.0 * exponent_drift(lam0) * float(xi)
        + params.kappa4
    )
    return SignedLog(1, math.log(2.0 * math.pi) + exponent)


def sinc_pi(u):
    """sin(u)/u with a series branch near 0 to avoid cancellation."""
    u = float(u)
    if abs(u) < 1e-4:
        u2 = u * u
        return 1.0 - u2 / 6.0 + u2 * u2 / 120.0
    return math.sin(u) / u


def vandermonde(values):
    """prod_{i<j} (x_j - x_i) in signed-log form; empty/singleton -> 1."""
    values = [float(v) for v in values]
    sign = 1
    logmag = 0.0
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            d = values[j] - values[i]
            if d == 0.0:
                return SignedLog.zero()
            sign *= 1 if d > 0 else -1
            logmag += math.log(abs(d))
    return SignedLog(sign, logmag)


def _ratio_float(x, y):
    m = len(x)
    s = np.sinc(x[:, None] - y[None, :])  # np.sinc(t) = sin(pi t)/(pi t)
    det = float(np.linalg.det(s)) if m > 1 else float(s[0, 0])
    den = 1.0
    for block in (x, y):
        for i in range(m):
            for j in range(i + 1, m):
                den *= block[j] - block[i]
    return det, den


def _mp_sinc(u):
    if u == 0:
        return mp.mpf(1)
    return mp.sinpi(u) / (mp.pi * u)


def _ratio_mp(x, y):
    m = len(x)
    s = mp.matrix(m, m)
    for i in range(m):
        for j in range(m):
            s[i, j] = _mp_sinc(x[i] - y[j])
    det = mp.det(s) if m > 1 else s[0, 0]
    den = mp.mpf(1)
    for block in (x, y):
        for i in range(m):
            for j in range(i + 1, m):
                den *= block[j] - block[i]
    return det / den


def _min_block_gap(xi):
    m = len(xi) // 2
    gap = math.inf
    for block in (xi[:m], xi[m:]):
        for i in range(len(block)):
            for j in range(i + 1, len(block)):
                gap = min(gap, abs(block[j] - block[i]))
    return gap


def _confluent_limit(xi, dps=50, h0=1e-3, levels=4):
    """Richardson-extrapolated limit along xi + h*(1, 2, ..., 2m)."""
    n2 = len(xi)
    m = n2 // 2
    direction = [k + 1.0 for k in range(n2)]
    with mp.workdps(dps):
        xs = [mp.mpf(v) for v in xi]
        h = mp.mpf(h0)
        for _ in range(4):  # ensure the perturbed nodes are block-distinct
            ok = True
            for block in (range(m), range(m, n2)):
                pts = [xs[i] + h * direction[i] for i in block]
                for a in range(len(pts)):
                    for b in range(a + 1, len(pts)):
                        if abs(pts[a] - pts[b]) < h / 4:
                            ok = False
            if ok:
                break
            h *= mp.mpf("1.7")
        vals = []
        for lev in range(levels):
            hh = h / (2**lev)
            pts = [xs[i] + hh * direction[i] for i in range(n2)]
            vals.append(_ratio_mp(pts[:m], pts[m:]))
        # Neville table in h (step ratio 2): kills O(h), O(h^2), ...
        for k in range(1, levels):
            for i in range(levels - k):
                vals[i] = (2**k * vals[i + 1] - vals[i]) / (2**k - 1)
        return float(vals[0])


def sine_kernel_ratio(xi):
    """det[sinc(pi(xi_i - xi_{m+j}))] / (Vdm(first block) Vdm(second block)).

    Finite for every real xi: collisions inside a block are removable and are
    evaluated by a high-precision perturbation limit (confluent = True).
    Near-collisions that would lose float64 precision are evaluated directly
    in high precision.
    """
    xi = [float(v) for v in xi]
    if len(xi) % 2 != 0 or not xi:
        raise ValueError("xi must have even, positive length")
    m = len(xi) // 2
    if m == 1:
        return SineKernelValue(sinc_pi(math.pi * (xi[0] - xi[1])), False)
    gap = _min_block_gap(xi)
    if gap < CONFLUENT_GAP:
        return SineKernelValue(_confluent_limit(xi), True)
    x = np.asarray(xi[:m])
    y = np.asarray(xi[m:])
    det, den = _ratio_float(x, y)
    if gap < _MP_GAP or abs(den) < _MP_DEN:
        with mp.workdps(50):
            val = float(_ratio_mp([mp.mpf(v) for v in xi[:m]],
                                  [mp.mpf(v) for v in xi[m:]]))
        return SineKernelValue(val, False)
    return SineKernelValue(det / den, False)


def limit_prefactor(m, kappa4, lambda0):
    """exp{m(m-1) kappa4 (lambda0^2 - 2)^2 / 2} / pi^{2m(m-1)}."""
    e = m * (m - 1) * kappa4 * (lambda0 * lambda0 - 2.0) ** 2 / 2.0
    return math.exp(e) / math.pi ** (2 * m * (m - 1))


def limit_ratio(params):
    """The limiting normalized correlator: prefactor times the sine-kernel
    determinant ratio.  For m = 1 this is sinc(pi(xi_1 - xi_2)) exactly,
    independent of kappa4 and lambda0."""
    skv = sine_kernel_ratio(params.xi)
    return limit_prefactor(params.m, params.kappa4, params.lambda0) * skv.value


def f2_pair_asymptotic(params, xi1, xi2):
    """Large-n pair-correlator asymptotic, normalized by n rho_sc(lambda0):

        2 pi exp{ n(lambda0^2-2)/2 + alpha(lambda0)(xi1+xi2) + |kappa4| }
             * sinc(pi (xi1 - xi2))

    Implemented exactly as printed, including the absolute value on kappa4;
    the coincident-point normalizer `diagonal_normalizer` carries kappa4
    without the absolute value, so the two disagree for kappa4 < 0.  The
    exact finite-n representation is the arbiter between them (see the
    saddle module's integral evaluators).
    """
    lam0 = params.lambda0
    s = sinc_pi(math.pi * (xi1 - xi2))
    exponent = (
        params.n * (lam0 * lam0 - 2.0) / 2.0
        + exponent_drift(lam0) * (xi1 + xi2)
        + abs(params.kappa4)
    )
    if s == 0.0:
        return SignedLog.zero()
    return SignedLog(
        1 if s > 0 else -1,
        math.log(2.0 * math.pi) + exponent + math.log(abs(s)),
    )
