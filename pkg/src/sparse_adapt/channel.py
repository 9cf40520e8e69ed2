"""
Sparse MISO channel realizations and training streams.

The receiver observes ``y(n) = h^T x(n) + z(n)`` where ``h`` stacks one
length-N impulse response per transmit antenna and ``x(n)`` stacks the
matching sliding windows of each antenna's training sequence.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError

__all__ = [
    "ChannelRealization",
    "NoiseSpec",
    "SampleStream",
    "TrainingStream",
    "generate_channel",
    "training_stream",
    "sigma_from_snr",
    "regressor_windows",
]


def sigma_from_snr(snr_db, e0=1.0):
    """Noise variance for a given SNR, using ``SNR = 20 log10(E0 / sigma_n^2)``.

    >>> sigma_from_snr(20.0)
    0.1
    """
    if not e0 > 0:
        raise ParameterError("e0", f"must be > 0, got {e0!r}")
    return e0 / 10.0 ** (snr_db / 20.0)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    e0: float = 1.0
    sigma_n2: float = field(init=False)

    def __post_init__(self):
        s2 = sigma_from_snr(self.snr_db, self.e0)
        if not s2 > 0:
            raise ParameterError("snr_db", f"gives zero noise variance ({self.snr_db!r})")
        object.__setattr__(self, "sigma_n2", s2)


@dataclass(frozen=True)
class ChannelRealization:
    """True channel: per-antenna vectors, their concatenation, and supports."""

    per_antenna: tuple
    stacked: np.ndarray
    supports: tuple

    @property
    def n(self):
        return self.per_antenna[0].size

    @property
    def n_t(self):
        return len(self.per_antenna)

    def split(self):
        return np.split(self.stacked, self.n_t)


@dataclass(frozen=True)
class SampleStream:
    regressor: np.ndarray
    observation: float


def regressor_windows(padded, n):
    """
    Sliding regressor windows from zero-prefixed symbol sequences.

    Parameters
    ----------
    padded: ndarray, shape (..., n_t, n - 1 + L)
        Training symbols with ``n - 1`` leading zeros.
    n: int
        Window (channel) length.

    Returns
    -------
    ndarray, shape (..., L, n_t * n)
        Row ``k`` is ``[x_1(k), ..., x_1(k-n+1), x_2(k), ...]``.
    """
    win = sliding_window_view(padded, n, axis=-1)[..., ::-1]  # (..., n_t, L, n)
    win = np.moveaxis(win, -3, -2)  # (..., L, n_t, n)
    return win.reshape(*win.shape[:-2], -1)


class TrainingStream(Sequence):
    """
    A finite stream of (regressor, observation) pairs.

    Indexing yields :class:`SampleStream` items; the full arrays are available
    as ``regressors`` (L, M) and ``observations`` (L,).
    """

    def __init__(self, padded_symbols, noise, observations, n):
        self.padded_symbols = padded_symbols
        self.noise = noise
        self.observations = observations
        self.n = n

    @property
    def regressors(self):
        return regressor_windows(self.padded_symbols, self.n)

    def __len__(self):
        return self.observations.size

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        x = self.padded_symbols[:, k : k + self.n][:, ::-1].reshape(-1)
        return SampleStream(x, float(self.observations[k]))


def generate_channel(n, n_t, t_dominant, rng_seed=None):
    """
    Draw a sparse MISO channel.

    Each antenna gets ``t_dominant`` taps at distinct uniformly random
    positions with standard Gaussian values, rescaled so the antenna's
    impulse response has unit Euclidean norm.
    """
    if n < 1:
        raise ParameterError("n", f"must be >= 1, got {n!r}")
    if n_t < 1:
        raise ParameterError("n_t", f"must be >= 1, got {n_t!r}")
    if not 1 <= t_dominant <= n:
        raise ParameterError("t_dominant", f"must lie in [1, {n}], got {t_dominant!r}")
    rng = np.random.default_rng(rng_seed)
    per_antenna, supports = [], []
    for _ in range(n_t):
        support = np.sort(rng.choice(n, size=t_dominant, replace=False))
        taps = rng.standard_normal(t_dominant)
        h = np.zeros(n)
        h[support] = taps / np.linalg.norm(taps)
        per_antenna.append(h)
        supports.append(tuple(int(i) for i in support))
    return ChannelRealization(tuple(per_antenna), np.concatenate(per_antenna), tuple(supports))


def training_stream(channel, noise, length, rng_seed=None):
    """
    Generate ``length`` noisy observations of ``channel``.

    Training symbols are i.i.d. N(0, e0) per antenna; the regressor windows
    start from zeros (cold start). Noise is i.i.d. N(0, sigma_n2).
    """
    if length < 1:
        raise ParameterError("length", f"must be >= 1, got {length!r}")
    rng = np.random.default_rng(rng_seed)
    n = channel.n
    symbols = rng.normal(0.0, np.sqrt(noise.e0), size=(channel.n_t, length))
    z = rng.normal(0.0, np.sqrt(noise.sigma_n2), size=length)
    padded = np.concatenate([np.zeros((channel.n_t, n - 1)), symbols], axis=1)
    clean = regressor_windows(padded, n) @ channel.stacked
    return TrainingStream(padded, z, clean + z, n)
