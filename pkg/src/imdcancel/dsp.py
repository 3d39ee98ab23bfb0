"""Complex-baseband DSP primitives shared by the rest of the package.

Everything here operates on plain numpy arrays wrapped in :class:`ComplexSeq`
(samples + sample rate).  All arithmetic is 64-bit float / 128-bit complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy import signal as sp_signal
from scipy.linalg import toeplitz

NOTCH_POLE = 0.998
# diagonal power entries below this are floored before inversion
POWER_FLOOR = 1e-12


@dataclass
class ComplexSeq:
    """A finite complex baseband sequence with its sample rate in Hz."""

    samples: np.ndarray
    rate: float = 30.72e6

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("ComplexSeq expects a 1-D sample vector")

    def __len__(self) -> int:
        return self.samples.size

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2)) if len(self) else 0.0


@dataclass
class FirFilter:
    """Complex FIR impulse response."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        self.taps = np.atleast_1d(np.asarray(self.taps, dtype=np.complex128))
        if self.taps.size < 1:
            raise ValueError("FIR filter needs at least one tap")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("FIR taps must be finite")


def fir_convolve(x: ComplexSeq, h: FirFilter) -> ComplexSeq:
    """Causal convolution, output trimmed to the input length.

    Sample n of the result is sum_k h[k] * x[n-k] with x[m] = 0 for m < 0.
    """
    if len(x) == 0:
        raise ValueError("cannot filter an empty sequence")
    y = np.convolve(x.samples, h.taps)[: len(x)]
    return ComplexSeq(y, x.rate)


@dataclass
class NotchState:
    """First-order DC notch H(z) = (1 - z^-1) / (1 - 0.998 z^-1).

    `carry` is the single direct-form-II-transposed state value, kept so a
    stream can be filtered in chunks (or sample by sample) without seams.
    """

    carry: complex = 0.0 + 0.0j

    b: tuple = (1.0, -1.0)
    a: tuple = (1.0, -NOTCH_POLE)

    def step(self, x: complex) -> complex:
        """Advance the filter by one sample and return the output."""
        y = x + self.carry
        self.carry = NOTCH_POLE * y - x
        return y


def notch_apply(state: NotchState, x: ComplexSeq) -> ComplexSeq:
    """Run the DC notch over a block, updating `state` for continuation."""
    if not np.all(np.isfinite(x.samples)):
        raise ValueError("notch input must be finite")
    y, zf = sp_signal.lfilter(
        state.b, state.a, x.samples, zi=np.array([state.carry], dtype=np.complex128)
    )
    state.carry = complex(zf[0])
    return ComplexSeq(y, x.rate)


def welch_psd(x: ComplexSeq, seg_len: int, overlap: float = 0.5):
    """Hann-windowed averaged periodogram, two-sided and centred at 0 Hz.

    Returns (freqs, psd) with frequencies in fftshift order.  The density is
    scaled so that integrating it over frequency recovers the mean power.
    """
    if seg_len > len(x):
        raise ValueError("segment length exceeds signal length")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    freqs, psd = sp_signal.welch(
        x.samples,
        fs=x.rate,
        window="hann",
        nperseg=seg_len,
        noverlap=int(overlap * seg_len),
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    return np.fft.fftshift(freqs), np.fft.fftshift(psd)


def mean_power_db(x: ComplexSeq) -> float:
    """10*log10 of the mean squared magnitude; -inf for an all-zero input."""
    if len(x) == 0:
        raise ValueError("mean power of an empty sequence is undefined")
    p = x.mean_power()
    if p == 0.0:
        return -np.inf
    return 10.0 * np.log10(p)


def awgn(n: int, power: float, seed: int, rate: float = 30.72e6) -> ComplexSeq:
    """Circularly symmetric complex Gaussian noise of given mean-square power."""
    if power < 0:
        raise ValueError("noise power must be non-negative")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(power / 2.0)
    z = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return ComplexSeq(z, rate)


def dct_matrix(size: int) -> np.ndarray:
    """Orthonormal DCT-II matrix (rows are the transform vectors)."""
    return sp_fft.dct(np.eye(size), axis=0, norm="ortho")


@dataclass
class DctPipeline:
    """Fixed decorrelating front-end: rotate by the DCT, equalise powers.

    Applying the pipeline to an input vector x yields P^(-1/2) * D * x where
    D is the orthonormal DCT-II matrix and P the diagonal of the rotated
    input covariance.
    """

    size: int
    transform: np.ndarray
    power_norm: np.ndarray  # diagonal of P^(-1/2)
    combined: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if np.any(self.power_norm <= 0) or not np.all(np.isfinite(self.power_norm)):
            raise ValueError("power normalisation entries must be positive and finite")
        self.combined = self.power_norm[:, None] * self.transform

    def apply(self, x_vec: np.ndarray) -> np.ndarray:
        return self.combined @ x_vec


def build_dct_whitener(cxx: np.ndarray, size: int) -> DctPipeline:
    """Construct the DCT power-normalising pipeline from an input covariance.

    `cxx` must be the Hermitian covariance of the length-`size` delay-line
    vector.  The per-component powers are taken from the real part of the
    rotated covariance diagonal and floored at 1e-12 before inversion.
    """
    cxx = np.asarray(cxx)
    if cxx.shape != (size, size):
        raise ValueError("covariance shape does not match the requested size")
    if not np.all(np.isfinite(cxx)):
        raise ValueError("covariance must be finite")
    if np.max(np.abs(cxx - cxx.conj().T)) > 1e-8 * max(1.0, np.max(np.abs(cxx))):
        raise ValueError("covariance must be Hermitian")
    dct = dct_matrix(size)
    diag = np.real(np.einsum("ij,jk,ik->i", dct, cxx, dct))
    diag = np.maximum(diag, POWER_FLOOR)
    if np.any(~np.isfinite(diag)) or np.any(diag <= 0):
        raise ValueError("rotated covariance has a non-positive power entry")
    return DctPipeline(size=size, transform=dct, power_norm=1.0 / np.sqrt(diag))


def delay_line_covariance(x: np.ndarray, size: int) -> np.ndarray:
    """Biased Toeplitz covariance estimate of the delay-line vector.

    The delay-line vector at time n is [x[n], x[n-1], ..., x[n-size+1]].
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    if n < size:
        raise ValueError("signal shorter than the requested covariance size")
    r = np.empty(size, dtype=np.complex128)
    for m in range(size):
        r[m] = np.dot(x[m:], np.conj(x[: n - m])) / n
    return toeplitz(np.conj(r), r)
