"""Monte Carlo estimation of characteristic-polynomial correlators.

Estimates F(lambda_1, ..., lambda_2m) = E prod_j det(lambda_j - H) over
Wigner samples.  Each sampled matrix is factored (LU with partial pivoting),
the product of determinants is kept in signed-log form, and the stream is
folded into a max-shifted accumulator with a streaming mean and variance.

Sampling is split into fixed-size chunks, one reproducible RNG stream per
chunk; workers process chunks concurrently but the final reduction always
folds chunk accumulators in ascending stream order, so the result is
bit-identical for any worker count.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ensembles import RngStream, make_diag_law, sample_wigner_batch
from .signedlog import LogPhase, SignedLog, SignedLogAccumulator
from .theory import semicircle_density

__all__ = [
    "SpectralConfig",
    "Estimate",
    "CorrelatorAccumulator",
    "signed_log_det",
    "charpoly_product",
    "estimate_correlator",
    "estimate_accumulator",
    "merge_estimates",
    "DEFAULT_MAX_N",
]

DEFAULT_MAX_N = 64     # MC variance grows exponentially in n; see estimate_correlator
STREAM_CHUNK = 8192    # samples per RNG stream, independent of worker count
_PHASE_TOL = 1e-6


@dataclass(frozen=True)
class SpectralConfig:
    """Spectral points lambda_j = lambda0 + xi_j / (n rho_sc(lambda0))."""

    n: int
    m: int
    lambda0: float
    xi: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.xi) != 2 * self.m:
            raise ValueError("xi must have length 2m")
        if not abs(self.lambda0) < 2:
            raise ValueError("lambda0 must lie strictly inside (-2, 2)")
        if any(abs(l) >= 2 for l in self.lambdas):
            raise ValueError("all spectral points must lie inside (-2, 2)")

    @property
    def lambdas(self):
        scale = self.n * semicircle_density(self.lambda0)
        return tuple(self.lambda0 + x / scale for x in self.xi)

    @classmethod
    def from_lambdas(cls, n, lambdas):
        """Build a config whose spectral points are exactly the given ones."""
        lambdas = tuple(float(x) for x in lambdas)
        if len(lambdas) % 2 != 0 or not lambdas:
            raise ValueError("need an even, positive number of spectral points")
        lam0 = sum(lambdas) / len(lambdas)
        scale = n * semicircle_density(lam0)
        xi = tuple((l - lam0) * scale for l in lambdas)
        return cls(n, len(lambdas) // 2, lam0, xi)

    def fingerprint(self):
        return (self.n, self.m, self.lambda0, self.xi)


@dataclass(frozen=True)
class Estimate:
    """Streaming MC result: signed-log mean, relative standard error, count.

    `sign_stable` is False when |mean| < 2 stderr, i.e. the sign of the mean
    is not resolved; such estimates are flagged, not rejected.
    """

    mean: SignedLog
    stderr_rel: float
    count: int
    sign_stable: bool


class CorrelatorAccumulator:
    """SignedLogAccumulator bound to a (config, law) fingerprint."""

    __slots__ = ("acc", "key")

    def __init__(self, key):
        self.acc = SignedLogAccumulator()
        self.key = key

    def push_batch(self, signs, logmags):
        self.acc.push_batch(signs, logmags)

    @property
    def count(self):
        return self.acc.count

    def estimate(self):
        if self.acc.count < 2:
            raise ValueError("need at least 2 samples")
        stderr_rel = self.acc.stderr_rel
        return Estimate(
            mean=self.acc.mean,
            stderr_rel=stderr_rel,
            count=self.acc.count,
            sign_stable=stderr_rel <= 0.5,
        )


def merge_estimates(a, b):
    """Merge two CorrelatorAccumulators from the identical (config, law).

    Associative; order-insensitivity is realized by always folding in
    ascending stream order (the reduction contract), not by bitwise
    commutativity of floating-point addition.
    """
    if a.key is None or a.key != b.key:
        if b.count == 0 and b.key is None:
            pass
        elif a.count == 0 and a.key is None:
            a = CorrelatorAccumulator(b.key)
        else:
            raise ValueError("cannot merge estimates from different configurations")
    out = CorrelatorAccumulator(a.key if a.key is not None else b.key)
    out.acc = a.acc.copy().merge(b.acc)
    return out


def signed_log_det(mat):
    """Determinant via LU with partial pivoting, in signed-log form.

    Real input yields a SignedLog; complex input yields a LogPhase.  An exact
    zero pivot gives sign 0; no epsilon thresholding is applied.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("input must be a square matrix")
    if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
        raise ValueError("matrix entries must be finite")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(mat, check_finite=False)
    pivots = np.diag(lu)
    swaps = int(np.sum(piv != np.arange(mat.shape[0])))
    perm_sign = -1.0 if swaps % 2 else 1.0
    if np.any(pivots == 0):
        return (
            LogPhase(0j, -math.inf)
            if np.iscomplexobj(mat)
            else SignedLog.zero()
        )
    logmag = float(np.sum(np.log(np.abs(pivots))))
    if np.iscomplexobj(mat):
        phase = complex(np.prod(pivots / np.abs(pivots))) * perm_sign
        return LogPhase(phase / abs(phase), logmag)
    sign = perm_sign * math.prod(1.0 if p > 0 else -1.0 for p in pivots)
    return SignedLog(int(sign), logmag)


def charpoly_product(h, lambdas):
    """prod_j det(lambda_j I - H) as a SignedLog for Hermitian H.

    Each determinant of a Hermitian shift is real; the per-factor phases are
    collapsed to signs before multiplying, and log-magnitudes are combined
    with an exact (correctly rounded) sum, so the result is invariant under
    permutations of `lambdas` bit-for-bit.
    """
    lambdas = tuple(float(l) for l in lambdas)
    if len(lambdas) % 2 != 0:
        raise ValueError("lambdas must have even length")
    h = np.asarray(h)
    eye = np.eye(h.shape[0], dtype=h.dtype)
    sign = 1
    logs = []
    for lam in lambdas:
        d = signed_log_det(lam * eye - h)
        if isinstance(d, LogPhase):
            d = d.to_signed_log(_PHASE_TOL)
        if d.sign == 0:
            return SignedLog.zero()
        sign *= d.sign
        logs.append(d.logmag)
    return SignedLog(sign, math.fsum(logs))


def _charpoly_batch(h_batch, lambdas):
    """Vectorized (signs, logmags) of prod_j det(lambda_j - H) per sample.

    Uses stacked LU (np.linalg.slogdet).  Per-lambda log-magnitudes are
    sorted before summation so that the result does not depend on the order
    of `lambdas`.
    """
    batch, n, _ = h_batch.shape
    eye = np.eye(n)
    per_sign = np.ones(batch)
    per_logs = np.empty((len(lambdas), batch))
    for j, lam in enumerate(lambdas):
        sign, logabs = np.linalg.slogdet(lam * eye - h_batch)
        if np.max(np.abs(sign.imag)) > _PHASE_TOL:
            raise ArithmeticError("non-real determinant phase for Hermitian shift")
        real_sign = np.where(sign.real > 0, 1.0, np.where(sign.real < 0, -1.0, 0.0))
        per_sign *= real_sign
        per_logs[j] = logabs
    per_logs.sort(axis=0)
    logmags = np.sum(per_logs, axis=0)
    logmags[per_sign == 0] = -math.inf
    return per_sign.astype(np.int8), logmags


def _run_stream(config, law, diag_law, stream, count):
    gen = stream.generator()
    out = CorrelatorAccumulator((config.fingerprint(), law))
    lambdas = config.lambdas
    done = 0
    while done < count:
        b = min(STREAM_CHUNK, count - done)
        h = sample_wigner_batch(config.n, law, diag_law, gen, b)
        signs, logmags = _charpoly_batch(h, lambdas)
        out.push_batch(signs, logmags)
        done += b
    return out


def estimate_accumulator(
    config,
    law,
    samples,
    rng,
    diag_law=None,
    workers=1,
    allow_large_n=False,
):
    """Accumulate `samples` Monte Carlo draws; see estimate_correlator."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if config.n > DEFAULT_MAX_N and not allow_large_n:
        raise ValueError(
            f"n={config.n} exceeds the default MC cap {DEFAULT_MAX_N}; the "
            "relative fluctuation of det products grows exponentially in n. "
            "Pass allow_large_n=True to override."
        )
    if diag_law is None:
        diag_law = make_diag_law()
    if isinstance(rng, int):
        rng = RngStream(rng)

    n_streams = (samples + STREAM_CHUNK - 1) // STREAM_CHUNK
    counts = [
        min(STREAM_CHUNK, samples - i * STREAM_CHUNK) for i in range(n_streams)
    ]
    streams = [rng.shifted(i) for i in range(n_streams)]

    if workers <= 1 or n_streams == 1:
        parts = [
            _run_stream(config, law, diag_law, s, c)
            for s, c in zip(streams, counts)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda sc: _run_stream(config, law, diag_law, *sc),
                    zip(streams, counts),
                )
            )
    total = parts[0]
    for part in parts[1:]:  # ascending stream order: deterministic reduction
        total = merge_estimates(total, part)
    return total


def estimate_correlator(config, law, samples, rng, **kwargs):
    """Monte Carlo estimate of E prod_j det(lambda_j - H).

    Parameters
    ----------
    config : SpectralConfig
    law : off-diagonal EntryLaw (needs 4m finite moments; all supported
        laws have all moments)
    samples : number of matrix draws (>= 2)
    rng : RngStream or integer seed; stream ids [stream_id, stream_id + k)
        are consumed, one per sample chunk
    diag_law, workers, allow_large_n : see estimate_accumulator

    Deterministic for a fixed (seed, config, law) and any worker count.
    """
    return estimate_accumulator(config, law, samples, rng, **kwargs).estimate()
