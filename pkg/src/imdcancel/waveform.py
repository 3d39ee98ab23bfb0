"""LTE-20-like baseband waveform generation and the Rapp PA model.

The generators produce simplified multicarrier signals: random QAM payload
on the allocated resource blocks, no reference signals or coding.  The
uplink is DFT-spread (SC-FDMA), the downlink plain OFDM.  Symbols use a
fixed 144-sample cyclic prefix and a short raised-cosine edge taper to keep
out-of-band leakage realistic for test-equipment-grade signals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import ComplexSeq

N_RB_GRID = 100
TONES_PER_RB = 12


@dataclass
class UlWaveformConfig:
    """Uplink (Tx reference) signal: narrow allocation, DFT-spread."""

    fft_size: int = 2048
    rb_range: tuple = (10, 19)  # 1-based, inclusive
    cp_len: int = 144
    mod_order: int = 16
    symbols_per_slot: int = 7
    rate: float = 30.72e6
    taper_len: int = 16

    dft_spread = True

    def __post_init__(self) -> None:
        lo, hi = self.rb_range
        if not (1 <= lo <= hi <= N_RB_GRID):
            raise ValueError(f"RB range {self.rb_range} outside the {N_RB_GRID}-RB grid")
        if self.mod_order not in (4, 16, 64):
            raise ValueError("modulation order must be 4, 16 or 64")
        if self.taper_len < 0 or self.taper_len > self.cp_len:
            raise ValueError("taper length must lie within the cyclic prefix")

    @property
    def symbol_len(self) -> int:
        return self.fft_size + self.cp_len

    @property
    def n_alloc(self) -> int:
        lo, hi = self.rb_range
        return (hi - lo + 1) * TONES_PER_RB


@dataclass
class DlWaveformConfig(UlWaveformConfig):
    """Downlink (wanted Rx) signal: full grid, plain OFDM."""

    rb_range: tuple = (1, N_RB_GRID)
    dft_spread = False


def _alloc_bins(cfg: UlWaveformConfig) -> np.ndarray:
    """FFT bin indices of the allocated tones (DC left empty)."""
    lo, hi = cfg.rb_range
    idx = np.arange((lo - 1) * TONES_PER_RB, hi * TONES_PER_RB)
    offsets = idx - (N_RB_GRID * TONES_PER_RB) // 2
    offsets = np.where(offsets >= 0, offsets + 1, offsets)
    return offsets % cfg.fft_size


def _qam_alphabet(order: int) -> np.ndarray:
    m = int(np.sqrt(order))
    levels = np.arange(-(m - 1), m, 2, dtype=np.float64)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def _generate(cfg: UlWaveformConfig, n_slots: int, seed: int, dft_spread: bool) -> ComplexSeq:
    rng = np.random.default_rng(seed)
    alphabet = _qam_alphabet(cfg.mod_order)
    bins = _alloc_bins(cfg)
    n_sym = n_slots * cfg.symbols_per_slot
    sym_len = cfg.symbol_len
    taper = cfg.taper_len
    out = np.zeros(n_sym * sym_len + taper, dtype=np.complex128)
    if taper:
        ramp = 0.5 * (1.0 - np.cos(np.pi * (np.arange(taper) + 0.5) / taper))
    for k in range(n_sym):
        data = alphabet[rng.integers(0, alphabet.size, cfg.n_alloc)]
        if dft_spread:
            data = np.fft.fft(data) / np.sqrt(data.size)
        grid = np.zeros(cfg.fft_size, dtype=np.complex128)
        grid[bins] = data
        body = np.fft.ifft(grid) * cfg.fft_size
        chunk = np.concatenate((body[-cfg.cp_len :], body, body[:taper]))
        if taper:
            chunk[:taper] *= ramp
            chunk[-taper:] *= ramp[::-1]
        out[k * sym_len : k * sym_len + sym_len + taper] += chunk
    out = out[: n_sym * sym_len]
    out /= np.sqrt(np.mean(np.abs(out) ** 2))
    return ComplexSeq(out, cfg.rate)


def gen_uplink(cfg: UlWaveformConfig, n_slots: int, seed: int) -> ComplexSeq:
    """DFT-spread OFDM uplink burst, unit mean power, deterministic per seed."""
    return _generate(cfg, n_slots, seed, dft_spread=True)


def gen_downlink(cfg: DlWaveformConfig, n_slots: int, seed: int) -> ComplexSeq:
    """Plain OFDM downlink burst, unit mean power, deterministic per seed."""
    return _generate(cfg, n_slots, seed, dft_spread=False)


def symbol_boundaries(cfg: UlWaveformConfig, n_slots: int) -> np.ndarray:
    """Start indices of every OFDM symbol in a generated burst."""
    n_sym = n_slots * cfg.symbols_per_slot
    return np.arange(n_sym) * cfg.symbol_len


def alloc_center_hz(cfg: UlWaveformConfig) -> float:
    """Centre frequency of the allocated band relative to the carrier."""
    lo, hi = cfg.rb_range
    idx = np.arange((lo - 1) * TONES_PER_RB, hi * TONES_PER_RB)
    offsets = idx - (N_RB_GRID * TONES_PER_RB) // 2
    offsets = np.where(offsets >= 0, offsets + 1, offsets)
    spacing = cfg.rate / cfg.fft_size
    return float(np.mean(offsets) * spacing)


def crest_to_xmax(crest_db: float, gain: float, sigma_x: float) -> float:
    """Saturation level implied by a crest ratio in dB over the driven RMS."""
    if sigma_x <= 0:
        raise ValueError("signal RMS must be positive")
    return gain * sigma_x * 10.0 ** (crest_db / 20.0)


@dataclass
class RappPa:
    """Memoryless Rapp AM-AM saturation model (no AM-PM conversion)."""

    gain: float = 1.0
    smoothness: float = 2.0
    crest_db: float = 6.0
    sigma_x: float = 1.0
    x_max: float = 0.0

    def __post_init__(self) -> None:
        if self.smoothness <= 0:
            raise ValueError("smoothness must be positive")
        if self.x_max == 0.0:
            self.x_max = crest_to_xmax(self.crest_db, self.gain, self.sigma_x)
        if self.x_max <= 0:
            raise ValueError("saturation level must be positive")

    @classmethod
    def for_signal(cls, x: ComplexSeq, gain: float = 1.0, smoothness: float = 2.0,
                   crest_db: float = 6.0) -> "RappPa":
        """Build a PA whose saturation level is referred to the RMS of `x`."""
        return cls(gain=gain, smoothness=smoothness, crest_db=crest_db,
                   sigma_x=float(np.sqrt(np.mean(np.abs(x.samples) ** 2))))


def rapp_apply(pa: RappPa, x: ComplexSeq) -> ComplexSeq:
    """Saturate magnitudes, keep phases: smooth clipping below `x_max`."""
    drive = pa.gain * np.abs(x.samples) / pa.x_max
    two_p = 2.0 * pa.smoothness
    y = pa.gain * x.samples / (1.0 + drive**two_p) ** (1.0 / two_p)
    return ComplexSeq(y, x.rate)


def papr_db(x: ComplexSeq, percentile: float = 99.9) -> float:
    """Peak(percentile)-to-average power ratio in dB."""
    p = np.abs(x.samples) ** 2
    return 10.0 * np.log10(np.percentile(p, percentile) / np.mean(p))
