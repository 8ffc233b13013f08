"""Hermitian Wigner matrix sampling with prescribed symmetric entry laws.

A matrix is H = W / sqrt(n) where the off-diagonal entries W_jk = X + iY have
X, Y drawn independently from a common symmetric law with variance 1/2 (so
E|W_jk|^2 = 1), and the real diagonal has variance 1.  Matrices are exactly
Hermitian by construction (the lower triangle is the bitwise conjugate of the
upper triangle).

Sampling is reproducible through counter-based streams: an :class:`RngStream`
is a (seed, stream_id) pair mapped to an independent Philox generator, so
parallel workers with disjoint stream ids draw identical values regardless of
scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EntryLaw",
    "RngStream",
    "make_entry_law",
    "make_diag_law",
    "sample_wigner",
    "sample_wigner_batch",
    "empirical_moments",
    "assert_hermitian",
]

_KINDS = ("gaussian", "rademacher", "uniform", "two_point")


@dataclass(frozen=True)
class EntryLaw:
    """Symmetric scalar law with analytic even moments.

    Parameters
    ----------
    kind : one of 'gaussian', 'rademacher', 'uniform', 'two_point'
    variance : second moment (1/2 for off-diagonal component laws, 1 for
        the diagonal law)
    params : kind-specific parameters; for 'two_point' the triple (a, b, p)
        meaning values +-a with probability p/2 each and +-b with
        probability (1-p)/2 each.
    """

    kind: str
    variance: float
    params: tuple = ()

    def moment(self, order):
        """Analytic moment E[X^order]; odd orders vanish by symmetry."""
        if order < 0:
            raise ValueError("moment order must be >= 0")
        if order % 2 == 1:
            return 0.0
        k = order // 2
        v = self.variance
        if self.kind == "gaussian":
            return _double_factorial(2 * k - 1) * v**k
        if self.kind == "rademacher":
            return v**k
        if self.kind == "uniform":
            # X ~ U[-c, c] with c = sqrt(3 v): E X^{2k} = c^{2k} / (2k+1)
            return (3.0 * v) ** k / (2 * k + 1)
        if self.kind == "two_point":
            a, b, p = self.params
            return p * a ** (2 * k) + (1.0 - p) * b ** (2 * k)
        raise ValueError(f"unknown law kind {self.kind!r}")

    @property
    def mu2(self):
        return self.moment(2)

    @property
    def mu4(self):
        return self.moment(4)

    @property
    def kappa4(self):
        """Fourth cumulant mu4 - 3/4 of a variance-1/2 component law."""
        if abs(self.variance - 0.5) > 1e-12:
            raise ValueError("kappa4 is defined for variance-1/2 component laws")
        return self.moment(4) - 0.75

    def sample(self, rng, size):
        """Draw an array of the given shape using a numpy Generator."""
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.variance), size)
        if self.kind == "rademacher":
            signs = rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
            return signs * math.sqrt(self.variance)
        if self.kind == "uniform":
            c = math.sqrt(3.0 * self.variance)
            return rng.uniform(-c, c, size)
        if self.kind == "two_point":
            a, b, p = self.params
            mag = np.where(rng.uniform(size=size) < p, a, b)
            signs = rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
            return mag * signs
        raise ValueError(f"unknown law kind {self.kind!r}")


def _double_factorial(k):
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def make_entry_law(kind, mu4=None, p=0.25):
    """Construct a variance-1/2 component law for the off-diagonal entries.

    For 'two_point', (a, b, p) are solved so that mu2 = 1/2 and mu4 equals the
    requested value; p is a free shape parameter.  Validity requires
    1/4 <= mu4 <= 1/4 + (1-p)/(4p).
    """
    kind = kind.lower().replace("-", "_")
    if kind not in _KINDS:
        raise ValueError(f"law kind must be one of {_KINDS}, got {kind!r}")
    if kind == "two_point":
        if mu4 is None:
            raise ValueError("two_point law requires a target mu4")
        if not 0.0 < p < 1.0:
            raise ValueError("mixture weight p must lie in (0, 1)")
        if mu4 < 0.25:
            raise ValueError("two_point component law requires mu4 >= 1/4")
        d = math.sqrt((mu4 - 0.25) / (p * (1.0 - p)))
        u = 0.5 + (1.0 - p) * d  # a^2
        w = 0.5 - p * d          # b^2
        if w < 0.0:
            raise ValueError(
                f"mu4={mu4} not reachable with p={p}; decrease p below {1 / (4 * mu4):.4f}"
            )
        return EntryLaw("two_point", 0.5, (math.sqrt(u), math.sqrt(w), p))
    if mu4 is not None:
        law = EntryLaw(kind, 0.5)
        if abs(law.moment(4) - mu4) > 1e-12:
            raise ValueError(f"law {kind!r} has mu4={law.moment(4)}, not {mu4}")
    return EntryLaw(kind, 0.5)


def make_diag_law(kind="gaussian"):
    """Variance-1 real law for the diagonal entries."""
    kind = kind.lower().replace("-", "_")
    if kind not in ("gaussian", "rademacher", "uniform"):
        raise ValueError("diagonal law kind must be gaussian, rademacher or uniform")
    return EntryLaw(kind, 1.0)


@dataclass(frozen=True)
class RngStream:
    """Counter-based reproducible stream: (seed, stream_id) -> Philox."""

    seed: int
    stream_id: int = 0

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def shifted(self, offset):
        return RngStream(self.seed, self.stream_id + offset)


def sample_wigner_batch(n, law, diag_law, rng, batch):
    """Sample `batch` matrices H = W/sqrt(n) as a (batch, n, n) complex array.

    Draw order is fixed (off-diagonal real parts, imaginary parts, then the
    diagonal) so results are reproducible for a given generator state.
    """
    if n < 1:
        raise ValueError("matrix size must be >= 1")
    iu = np.triu_indices(n, 1)
    npairs = iu[0].size
    w = np.zeros((batch, n, n), dtype=np.complex128)
    if npairs:
        re = law.sample(rng, (batch, npairs))
        im = law.sample(rng, (batch, npairs))
        w[:, iu[0], iu[1]] = re + 1j * im
        w += np.conj(np.swapaxes(w, 1, 2))
    diag = diag_law.sample(rng, (batch, n))
    idx = np.arange(n)
    w[:, idx, idx] = diag
    return w / math.sqrt(n)


def sample_wigner(n, law, diag_law=None, rng=None):
    """Sample a single H; `rng` may be an RngStream or a numpy Generator."""
    if diag_law is None:
        diag_law = make_diag_law()
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if gen is None:
        raise ValueError("an RngStream or numpy Generator is required")
    return sample_wigner_batch(n, law, diag_law, gen, 1)[0]


def assert_hermitian(h):
    """Raise unless h is exactly Hermitian with a real diagonal."""
    if not np.array_equal(h, np.conj(h.T)):
        raise AssertionError("matrix is not bitwise Hermitian")
    if np.any(np.iscomplex(np.diag(h))):
        raise AssertionError("diagonal is not exactly real")


def empirical_moments(law, order, sample_count, rng):
    """Sample moment of X^order with its standard error.

    Returns (estimate, stderr).  Used to validate the analytic moment tables.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    x = law.sample(gen, sample_count)
    powers = x**order
    est = float(np.mean(powers))
    se = float(np.std(powers, ddof=1) / math.sqrt(sample_count))
    return est, se
