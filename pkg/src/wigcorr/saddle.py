"""Integral representations of the pair correlator and the steepest-descent
machinery behind the sine-kernel limit.

Three independent routes to the same object live here:

* ``f2_exact_integral`` -- the exact finite-n auxiliary-field representation
  of F_2 (a 4-dimensional Gaussian-weighted polynomial integral, evaluated
  by Gauss-Hermite/Gauss-Laguerre rules that are exact for the integrand);
* ``f2_contour_normalized`` -- the large-n two-sided contour representation,
  normalized by the leading coincident-point scale, evaluated by panelled
  Gauss-Legendre quadrature concentrated around the saddle points;
* ``saddle_configuration_sum`` -- the closed-form leading order assembled
  from the two saddle points: a sum over sign assignments of phase factors
  with Cauchy-determinant coefficients, directly comparable to the limiting
  sine-kernel ratio.

The phase function V(t) = t^2/2 + i lambda0 t / 2 - log(t - i lambda0/2)
- (4 - lambda0^2)/8 has Re V >= 0 on the real axis with minima exactly at
x_pm = +-sqrt(4 - lambda0^2)/2; ``verify_landscape`` checks this on a grid.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.special import roots_hermite, roots_laguerre, roots_legendre as _roots_legendre_uncached


@lru_cache(maxsize=64)
def roots_legendre(k):
    x, w = _roots_legendre_uncached(k)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w

from .signedlog import SignedLog
from .theory import exponent_drift, semicircle_density

__all__ = [
    "QuadratureError",
    "SaddleData",
    "ContourSpec",
    "LandscapeReport",
    "phase_function",
    "real_phase_on_axis",
    "saddle_data",
    "verify_landscape",
    "f2_exact_integral",
    "f2_contour_normalized",
    "self_normalized_ratio",
    "saddle_configuration_sum",
    "cauchy_det_identity_check",
]

COINCIDENT_XI_GAP = 1e-8


class QuadratureError(ArithmeticError):
    """Raised when successive quadrature refinements disagree.

    Carries both values so callers can report the residual.
    """

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


# ----------------------------------------------------------------------
# phase function and saddle data
# ----------------------------------------------------------------------

def phase_function(t, lambda0):
    """V(t) = t^2/2 + i lambda0 t/2 - Log(t - i lambda0/2) - (4-lambda0^2)/8.

    Principal branch of the logarithm; the branch point t = i lambda0 / 2
    is rejected.  Accepts scalars or arrays (real or complex).
    """
    t = np.asarray(t, dtype=complex)
    p = t - 0.5j * lambda0
    if np.any(p == 0):
        raise ValueError("phase function evaluated at its branch point")
    out = t * t / 2 + 0.5j * lambda0 * t - np.log(p) - (4 - lambda0**2) / 8
    return out if out.shape else complex(out)


def real_phase_on_axis(t, lambda0):
    """Re V for real t in the cancellation-free closed form
    (t^2 - (4 - lambda0^2)/4 - log(t^2 + lambda0^2/4)) / 2."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * (t * t - (4 - lambda0**2) / 4 - np.log(t * t + lambda0**2 / 4))
    return out if out.shape else float(out)


@dataclass(frozen=True)
class SaddleData:
    """Saddle points of Re V on the real axis and local expansion data.

    curvature_pm = V''(x_pm) = 1 + shift_pm^{-2} with shift_pm = x_pm
    - i lambda0/2; phase_value_pm = V(x_pm) is purely imaginary.
    """

    lambda0: float
    x_plus: float
    x_minus: float
    phase_value_plus: complex
    phase_value_minus: complex
    shift_plus: complex
    shift_minus: complex
    curvature_plus: complex
    curvature_minus: complex


def saddle_data(lambda0):
    """Closed-form saddle data, cross-checked against direct evaluation.

    The closed forms for V(x_pm),

        V(x_+) = i lambda0 sqrt(4-lambda0^2)/4 - i asin(-lambda0/2)
        V(x_-) = -i lambda0 sqrt(4-lambda0^2)/4 + i asin(-lambda0/2) - i pi,

    fix the logarithm branch by analytic continuation; the principal branch
    used by ``phase_function`` can differ by an integer multiple of 2 pi i
    (immaterial under exp(-nV) for integer n).  Agreement is therefore
    required to 1e-12 modulo 2 pi i, and the directly evaluated principal
    values are stored.
    """
    lambda0 = float(lambda0)
    if not abs(lambda0) < 2:
        raise ValueError("saddle data requires lambda0 strictly inside (-2, 2)")
    root = math.sqrt(4.0 - lambda0 * lambda0)
    x_plus, x_minus = root / 2.0, -root / 2.0
    v_plus_closed = 1j * lambda0 * root / 4 - 1j * math.asin(-lambda0 / 2)
    v_minus_closed = -1j * lambda0 * root / 4 + 1j * math.asin(-lambda0 / 2) - 1j * math.pi
    v_plus = phase_function(x_plus, lambda0)
    v_minus = phase_function(x_minus, lambda0)
    two_pi = 2 * math.pi
    for closed, direct, name in (
        (v_plus_closed, v_plus, "plus"),
        (v_minus_closed, v_minus, "minus"),
    ):
        dev = min(
            abs(closed + 1j * two_pi * k - direct) for k in (-1, 0, 1)
        )
        if dev > 1e-12:
            raise ArithmeticError(
                f"saddle value mismatch ({name}): closed {closed} vs direct "
                f"{direct}, deviation {dev:.3e} (mod 2 pi i)"
            )
    shift_plus = x_plus - 0.5j * lambda0
    shift_minus = x_minus - 0.5j * lambda0
    return SaddleData(
        lambda0=lambda0,
        x_plus=x_plus,
        x_minus=x_minus,
        phase_value_plus=v_plus,
        phase_value_minus=v_minus,
        shift_plus=shift_plus,
        shift_minus=shift_minus,
        curvature_plus=1.0 + shift_plus**-2,
        curvature_minus=1.0 + shift_minus**-2,
    )


# ----------------------------------------------------------------------
# contour geometry
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ContourSpec:
    """Two-sided admissible region {t real : inner <= |t - i lambda0/2| <= outer}.

    `window_factor` scales the saddle windows that receive the dense
    quadrature panels; `base_nodes` is the starting Gauss-Legendre node
    count per window panel, doubled until the integral stabilizes.
    """

    inner: float = 0.05
    outer: float = 6.0
    window_factor: float = 1.5
    base_nodes: int = 192
    max_nodes: int = 3072

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("require 0 < inner < outer")


def _contour_segments(lambda0, spec):
    """Real intervals realizing inner <= |t - i lambda0/2| <= outer."""
    a, big = spec.inner, spec.outer
    if abs(lambda0) / 2 >= a:
        # the branch point sits far enough off the axis: no inner exclusion
        return [(-big, big)]
    gap = math.sqrt(a * a - lambda0 * lambda0 / 4)
    return [(-big, -gap), (gap, big)]


def _panel_nodes(lambda0, n, spec, nodes):
    """Concatenated Gauss-Legendre nodes/weights, dense near the saddles."""
    sd_root = math.sqrt(4.0 - lambda0 * lambda0) / 2.0
    width = spec.window_factor * math.sqrt(180.0 / ((4 - lambda0**2) * n))
    ts, ws = [], []
    for lo, hi in _contour_segments(lambda0, spec):
        cuts = {lo, hi}
        for xs in (sd_root, -sd_root):
            cuts.add(min(hi, max(lo, xs - width)))
            cuts.add(min(hi, max(lo, xs + width)))
        cuts = sorted(cuts)
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            if c1 - c0 < 1e-12:
                continue
            in_window = any(
                c0 >= xs - width - 1e-12 and c1 <= xs + width + 1e-12
                for xs in (sd_root, -sd_root)
            )
            k = nodes if in_window else max(24, nodes // 2)
            x, w = roots_legendre(k)
            ts.append((c0 + c1) / 2 + (c1 - c0) / 2 * x)
            ws.append((c1 - c0) / 2 * w)
    return np.concatenate(ts), np.concatenate(ws)


# ----------------------------------------------------------------------
# landscape verification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LandscapeReport:
    lambda0: float
    n: int
    grid_step: float
    minima_offsets: tuple          # |argmin_grid - x_pm| per saddle
    re_phase_at_saddles: tuple     # Re V(x_pm), should vanish
    curvature_fd_error: float      # max |FD V''(x_pm) - curvature_pm|
    re_curvature_fd_error: float   # max |FD (Re V)''(x_pm) - (4-lambda0^2)/2|
    window_halfwidth: float        # n^{-1/2} log n
    inequality_constant: float     # fitted C in Re V >= C log^2 n / n outside
    passed: bool


def _second_derivative(f, x, h=2e-4):
    """Richardson-extrapolated central second difference."""
    d = lambda hh: (f(x + hh) - 2 * f(x) + f(x - hh)) / (hh * hh)
    return (4.0 * d(h / 2) - d(h)) / 3.0


def verify_landscape(lambda0, n, grid_step=1e-4, spec=None):
    """Grid-scan Re V on the admissible contour and check the saddle facts:
    minima at x_pm, Re V(x_pm) = 0, V''(x_pm) equal to the curvature data,
    and Re V >= C log^2(n)/n outside the shrinking saddle windows."""
    if n < 8:
        raise ValueError("landscape verification expects n >= 8")
    spec = spec or ContourSpec()
    sd = saddle_data(lambda0)
    offsets = []
    for lo, hi in _contour_segments(lambda0, spec):
        t = np.arange(lo, hi + grid_step / 2, grid_step)
        rv = real_phase_on_axis(t, lambda0)
        tmin = t[np.argmin(rv)]
        target = sd.x_plus if tmin > 0 else sd.x_minus
        offsets.append(abs(tmin - target))
    re_at = (
        real_phase_on_axis(sd.x_plus, lambda0),
        real_phase_on_axis(sd.x_minus, lambda0),
    )
    curv_err = max(
        abs(_second_derivative(lambda t: phase_function(t, lambda0), sd.x_plus)
            - sd.curvature_plus),
        abs(_second_derivative(lambda t: phase_function(t, lambda0), sd.x_minus)
            - sd.curvature_minus),
    )
    re_curv_target = (4 - lambda0**2) / 2.0
    re_curv_err = max(
        abs(_second_derivative(lambda t: real_phase_on_axis(t, lambda0), x)
            - re_curv_target)
        for x in (sd.x_plus, sd.x_minus)
    )
    halfwidth = math.log(n) / math.sqrt(n)
    c_fit = math.inf
    for lo, hi in _contour_segments(lambda0, spec):
        t = np.arange(lo, hi + grid_step / 2, grid_step)
        outside = (np.abs(t - sd.x_plus) >= halfwidth) & (
            np.abs(t - sd.x_minus) >= halfwidth
        )
        if np.any(outside):
            rv = real_phase_on_axis(t[outside], lambda0)
            c_fit = min(c_fit, float(np.min(rv)) * n / math.log(n) ** 2)
    passed = (
        max(offsets) <= grid_step
        and max(abs(v) for v in re_at) < 1e-12
        and curv_err < 1e-8
        and re_curv_err < 1e-8
        and c_fit > 0
    )
    return LandscapeReport(
        lambda0=lambda0,
        n=n,
        grid_step=grid_step,
        minima_offsets=tuple(offsets),
        re_phase_at_saddles=re_at,
        curvature_fd_error=float(curv_err),
        re_curvature_fd_error=float(re_curv_err),
        window_halfwidth=halfwidth,
        inequality_constant=c_fit,
        passed=passed,
    )


# ----------------------------------------------------------------------
# exact auxiliary-field representation of F_2
# ----------------------------------------------------------------------

def _epsilon(kappa4):
    """x for x > 0, -i x for x < 0 (Hubbard-Stratonovich sign bookkeeping)."""
    return kappa4 if kappa4 > 0 else -1j * kappa4


def _f2_exact_sum(n, l1, l2, kappa4, k):
    """One quadrature pass; returns (value, abs_mass) for the noise gate."""
    xh, wh = roots_hermite(k)
    yl, wl = roots_laguerre(k)
    tau = xh * math.sqrt(2.0 / n)
    v = yl / n
    d = (tau[:, None] - 1j * l1) * (tau[None, :] - 1j * l2)
    wgrid = wh[:, None] * wh[None, :]
    if kappa4 == 0.0:
        total = 0.0 + 0.0j
        mass = 0.0
        for kk in range(k):
            p = (d - v[kk]) ** n
            total += wl[kk] * np.sum(wgrid * p)
            mass += wl[kk] * np.sum(wgrid * np.abs(p))
        return ((-1.0) ** n / math.pi) * total, mass / math.pi
    eps = _epsilon(kappa4)
    pnod = xh / math.sqrt(abs(kappa4))
    total = 0.0 + 0.0j
    mass = 0.0
    for kk in range(k):
        base = d - v[kk]
        for ll in range(k):
            p = (base + 2.0 * pnod[ll] * eps / n) ** n
            w = wl[kk] * wh[ll]
            total += w * np.sum(wgrid * p)
            mass += w * np.sum(wgrid * np.abs(p))
    return ((-1.0) ** n / math.pi**1.5) * total, mass / math.pi**1.5


def f2_exact_integral(n, lambda_pair, law=None, kappa4=None, rtol=1e-6):
    """Exact finite-n pair correlator F_2(lambda_1, lambda_2).

    Evaluates the auxiliary-field integral

        (-1)^n n^2/(2 pi^2) sqrt(|kappa4|/pi) * Int dp dQ
            e^{-n tr Q^2 / 2 - |kappa4| p^2} (det(Q - i Lambda) + 2p eps/n)^n

    over 2x2 Hermitian Q, reduced to 4 dimensions by rotational invariance
    of the off-diagonal entry.  For kappa4 = 0 the p field drops out (the
    exact degenerate limit of the quartic decoupling).  Gauss-Hermite and
    Gauss-Laguerre rules make the quadrature exact for the polynomial
    integrand; refinement disagreement beyond `rtol` raises QuadratureError.

    The value is mathematically real; the imaginary residual and the
    float64 cancellation condition are both checked against `rtol`.  The
    condition deteriorates like exp(n(2 - lambda0^2)/2), which in practice
    limits trustworthy evaluation to n around 40 at rtol = 1e-6 (larger n
    with looser rtol); large-n work belongs to f2_contour_normalized.
    """
    l1, l2 = (float(x) for x in lambda_pair)
    if n < 1:
        raise ValueError("n must be >= 1")
    if kappa4 is None:
        if law is None:
            raise ValueError("provide a law or an explicit kappa4")
        kappa4 = law.kappa4
    if abs(kappa4) < 1e-12:
        kappa4 = 0.0
    k = n // 2 + 4
    val1, mass1 = _f2_exact_sum(n, l1, l2, kappa4, k)
    val2, mass2 = _f2_exact_sum(n, l1, l2, kappa4, k + 6)
    scale = max(abs(val2), 1e-300)
    if abs(val1 - val2) > rtol * scale:
        raise QuadratureError(
            f"exact representation did not converge at n={n}: "
            f"{val1} vs {val2}",
            coarse=val1,
            fine=val2,
        )
    noise = 5e-16 * mass2
    if noise > rtol * scale / 4:
        raise QuadratureError(
            f"cancellation noise {noise:.3e} exceeds tolerance for value "
            f"{val2:.6e} at n={n}; reduce n or loosen rtol",
            coarse=val1,
            fine=val2,
        )
    if abs(val2.imag) > max(rtol * abs(val2.real), noise * 4):
        raise QuadratureError(
            f"imaginary residual {val2.imag:.3e} too large for F_2 ~ "
            f"{val2.real:.6e}",
            coarse=val1,
            fine=val2,
        )
    return val2.real


# ----------------------------------------------------------------------
# contour representation, normalized by the leading coincident-point scale
# ----------------------------------------------------------------------

def _choose_inner(spec, n, lambda0, kappa4):
    """Grow the inner radius when kappa4 > 0 would blow up near the branch
    point faster than exp(-n Re V) decays (only possible for small
    |lambda0|)."""
    if kappa4 <= 0 or abs(lambda0) / 2 >= spec.inner:
        return spec.inner
    a = spec.inner
    while a < 0.5:
        reach = kappa4 / (a * a + lambda0**2 / 4) ** 2
        if reach <= 0.25 * n * real_phase_on_axis(a, lambda0) + 30.0:
            break
        a *= 1.4
    return a


def _contour_pass(n, lambda0, kappa4, xi1, xi2, spec, nodes):
    rho = semicircle_density(lambda0)
    drift = exponent_drift(lambda0)
    t, w = _panel_nodes(lambda0, n, spec, nodes)
    shift = t - 0.5j * lambda0
    # exponent relative to the leading normalizer: the n(lambda0^2-2)/2 terms
    # cancel exactly against -n(V_1+V_2)'s constant part
    const = drift * (xi1 + xi2) + kappa4 + math.log(2 * math.pi)
    a1 = -n * phase_function(t, lambda0) - 1j * xi1 * (t + 0.5j * lambda0) / rho
    a2 = -n * phase_function(t, lambda0) - 1j * xi2 * (t + 0.5j * lambda0) / rho
    b = shift**-2
    expo = a1[:, None] + a2[None, :] + kappa4 * (b[:, None] * b[None, :]) - const
    m = float(np.max(expo.real))
    if m > 100.0:
        raise QuadratureError(
            f"contour integrand exponent reaches {m:.1f}; increase the inner "
            "radius (kappa4 > 0 near the branch point) or reduce kappa4"
        )
    if abs(xi1 - xi2) >= COINCIDENT_XI_GAP:
        factor = (t[:, None] - t[None, :]) / (xi1 - xi2)
    else:
        # xi2 -> xi1 limit of (t1 - t2)/(xi1 - xi2) acting on the xi-phases
        factor = -0.5j * (t[:, None] - t[None, :]) ** 2 / rho
    total = np.einsum("i,j,ij->", w, w, factor * np.exp(expo))
    return 1j * rho * n * n * total / (2 * math.pi * (-1.0) ** n)


def f2_contour_normalized(n, lambda0, kappa4, xi1, xi2, spec=None, rtol=1e-6):
    """Pair correlator over the leading coincident-point normalizer,

        S(xi1, xi2) = F_2(lambda0 + xi/(n rho_sc)) / D_leading(xi1, xi2),

    by two-dimensional quadrature of the contour representation with the
    O(n^{-1/2} log^k n) correction factor dropped.  S / (n rho_sc) tends to
    sinc(pi (xi1 - xi2)).  Returns a SignedLog; node counts double until the
    value stabilizes to `rtol`.  Coincident offsets take the derivative form
    of the (t1 - t2)/(xi1 - xi2) factor.
    """
    if not abs(lambda0) < 2:
        raise ValueError("lambda0 must lie strictly inside (-2, 2)")
    spec = spec or ContourSpec()
    inner = _choose_inner(spec, n, lambda0, kappa4)
    if inner != spec.inner:
        spec = ContourSpec(
            inner, spec.outer, spec.window_factor, spec.base_nodes, spec.max_nodes
        )
    nodes = spec.base_nodes
    prev = _contour_pass(n, lambda0, kappa4, xi1, xi2, spec, nodes)
    while nodes <= spec.max_nodes:
        nodes *= 2
        cur = _contour_pass(n, lambda0, kappa4, xi1, xi2, spec, nodes)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            if abs(cur.imag) > 100 * rtol * abs(cur.real):
                raise QuadratureError(
                    f"contour value has imaginary residual {cur.imag:.3e} "
                    f"against real part {cur.real:.6e}",
                    coarse=prev,
                    fine=cur,
                )
            return SignedLog.from_value(cur.real)
        prev = cur
    raise QuadratureError(
        f"contour quadrature did not stabilize below {rtol} by "
        f"{spec.max_nodes} nodes",
        coarse=prev,
        fine=cur,
    )


def self_normalized_ratio(n, lambda0, kappa4, xi1, xi2, spec=None, rtol=1e-6):
    """S(xi1,xi2)/sqrt(S(xi1,xi1) S(xi2,xi2)): the normalization of the
    limit theorem with the coincident-point scale measured by the same
    quadrature, so the leading normalizer (and its subleading drift)
    cancels exactly.  Tends to sinc(pi (xi1 - xi2))."""
    s12 = f2_contour_normalized(n, lambda0, kappa4, xi1, xi2, spec, rtol)
    s11 = f2_contour_normalized(n, lambda0, kappa4, xi1, xi1, spec, rtol)
    s22 = f2_contour_normalized(n, lambda0, kappa4, xi2, xi2, spec, rtol)
    if s11.sign <= 0 or s22.sign <= 0:
        raise QuadratureError("coincident-point correlator came out nonpositive")
    return (s12 / (s11 * s22).sqrt()).value


# ----------------------------------------------------------------------
# leading-order configuration sum
# ----------------------------------------------------------------------

def saddle_configuration_sum(m, lambda0, kappa4, xi):
    """Leading order of the normalized 2m-point correlator assembled from
    the saddle configurations.

    Each assignment of a saddle (+ or -) to the 2m integration variables
    with exactly m pluses contributes a phase exp(-i pi sum_j alpha_j xi_j)
    divided by the cross-assignment Vandermonde factors (a Cauchy-
    determinant coefficient), times i^{m^2} 2^{-m} pi^{m-2m^2} and the
    kappa4 prefactor.  The sum over assignments equals the limiting
    sine-kernel ratio; coincident xi are rejected (use the confluent path
    of the sine-kernel evaluator instead).
    """
    xi = [float(v) for v in xi]
    if len(xi) != 2 * m:
        raise ValueError("xi must have length 2m")
    n2 = 2 * m
    for i in range(n2):
        for j in range(i + 1, n2):
            if xi[i] == xi[j]:
                raise ValueError("configuration sum requires distinct xi")
    kap_pref = math.exp(m * (m - 1) * kappa4 * (lambda0**2 - 2.0) ** 2 / 2.0)
    pref = kap_pref * (1j) ** (m * m) * 2.0 ** (-m) * math.pi ** (m - 2 * m * m)
    total = 0.0 + 0.0j
    for plus in combinations(range(n2), m):
        alpha = [-1] * n2
        for i in plus:
            alpha[i] = 1
        inversions = sum(
            1
            for i in range(n2)
            for j in range(i + 1, n2)
            if alpha[i] == 1 and alpha[j] == -1
        )
        cross = 1.0
        for i in range(n2):
            for j in range(i + 1, n2):
                if alpha[i] != alpha[j]:
                    cross *= xi[j] - xi[i]
        phase = cmath.exp(-1j * math.pi * sum(a * x for a, x in zip(alpha, xi)))
        total += (-1.0) ** inversions * phase / cross
    value = pref * total
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"configuration sum came out non-real: {value}")
    return value.real


def cauchy_det_identity_check(a, b):
    """Max absolute deviation between det[1/(a_k - b_j)] and its product
    form (-1)^{m(m-1)/2} prod_{k<l}(a_k-a_l)(b_k-b_l) / prod_{k,l}(a_k-b_l)."""
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    m = len(a)
    if len(b) != m or m == 0:
        raise ValueError("a and b must be non-empty and of equal length")
    if len(set(a)) != m or len(set(b)) != m or set(a) & set(b):
        raise ValueError("singular input: need distinct a's, b's and a_k != b_j")
    mat = 1.0 / (np.asarray(a)[:, None] - np.asarray(b)[None, :])
    det = float(np.linalg.det(mat)) if m > 1 else float(mat[0, 0])
    num = 1.0
    for k in range(m):
        for l in range(k + 1, m):
            num *= (a[k] - a[l]) * (b[k] - b[l])
    den = 1.0
    for k in range(m):
        for l in range(m):
            den *= a[k] - b[l]
    closed = (-1.0) ** (m * (m - 1) // 2) * num / den
    return abs(det - closed)
