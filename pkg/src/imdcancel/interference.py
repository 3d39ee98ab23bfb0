"""Baseband receive-signal composition: leakage, even-order IMD, notch, noise.

The received digital baseband is modelled as the sum of the notched wanted
signal, notched noise, and intermodulation products of the leaked transmit
signal: orders 2, 4 and 6 with complex per-order coefficients, followed by
the DC notch.  Power levels are set relative to the unit-power wanted
signal; "leakage power" in dB is referred to that same unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import ComplexSeq, FirFilter, NotchState, awgn, fir_convolve, notch_apply
from .waveform import RappPa, rapp_apply

LEAKAGE_TAPS = 21


@dataclass
class ImdCoefficients:
    """Complex weights of the |.|^2, |.|^4 and |.|^6 interference terms."""

    c2: complex
    c4: complex = 0.0
    c6: complex = 0.0
    lin_gain: float = 1.0

    def __post_init__(self) -> None:
        vals = np.array([self.c2, self.c4, self.c6, self.lin_gain])
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.c2, self.c4, self.c6], dtype=np.complex128)

    def to_scaled_q(self) -> "ImdCoefficients":
        """Force the Q-path nonlinearity to be -1 times the I-path.

        Each coefficient keeps its magnitude but is rotated to
        (1 - 1j) * sign(Re c) * |c| / sqrt(2).
        """

        def rot(c: complex) -> complex:
            if c == 0:
                return 0.0
            return (1.0 - 1.0j) * math.copysign(1.0, c.real) * abs(c) / math.sqrt(2.0)

        return ImdCoefficients(rot(self.c2), rot(self.c4), rot(self.c6), self.lin_gain)


@dataclass
class LeakageChannel:
    """Frequency-selective Tx-to-Rx leakage path, 21 complex taps."""

    fir: FirFilter
    isolation_db: float = 50.0

    def __post_init__(self) -> None:
        if self.fir.taps.size != LEAKAGE_TAPS:
            raise ValueError(f"leakage channel must have {LEAKAGE_TAPS} taps")


def gen_leakage(seed: int, isolation_db: float = 50.0) -> LeakageChannel:
    """Draw a random decaying leakage impulse response.

    Tap magnitudes follow an exponential envelope (last tap >= 40 dB below
    the first) with mild jitter and random phases; the response is scaled so
    a unit-power white input leaves with -isolation_db of power.
    """
    if isolation_db <= 0:
        raise ValueError("isolation must be positive dB")
    rng = np.random.default_rng(seed)
    k = np.arange(LEAKAGE_TAPS)
    # -60 dB envelope over 20 taps; jitter keeps the first-to-last ratio > 40 dB
    envelope = 10.0 ** (-3.0 * k / 20.0)
    envelope *= 0.85 + 0.15 * rng.uniform(size=LEAKAGE_TAPS)
    taps = envelope * np.exp(2j * np.pi * rng.uniform(size=LEAKAGE_TAPS))
    taps *= np.sqrt(10.0 ** (-isolation_db / 10.0) / np.sum(np.abs(taps) ** 2))
    return LeakageChannel(FirFilter(taps), isolation_db)


def imd_synthesize(coeffs: ImdCoefficients, y_txl: ComplexSeq,
                   notch: NotchState | None = None) -> ComplexSeq:
    """Even-order products of the leaked signal, DC-notched.

    Per sample: u[n] = c2|y|^2 + c4|y|^4 + c6|y|^6, then u -> notch(u).
    """
    if notch is None:
        notch = NotchState()
    mag2 = np.abs(y_txl.samples) ** 2
    u = coeffs.c2 * mag2 + coeffs.c4 * mag2**2 + coeffs.c6 * mag2**3
    return notch_apply(notch, ComplexSeq(u, y_txl.rate))


@dataclass
class RxComposition:
    """All receive-signal components, kept separate for metric ground truth."""

    y_rx_filtered: ComplexSeq
    noise: ComplexSeq
    y_imd: ComplexSeq
    y_tot: ComplexSeq
    y_txl: ComplexSeq


def _scale_to_power(x: ComplexSeq, power_db: float) -> ComplexSeq:
    p = x.mean_power()
    if p == 0.0:
        return x
    return ComplexSeq(x.samples * np.sqrt(10.0 ** (power_db / 10.0) / p), x.rate)


def compose_rx(
    x_tx: ComplexSeq,
    pa: RappPa | None,
    leakage: FirFilter,
    coeffs: ImdCoefficients,
    y_rx: ComplexSeq,
    *,
    leakage_power_db: float,
    rx_power_db: float = 0.0,
    snr_db: float = 10.0,
    noise_seed: int = 0,
) -> RxComposition:
    """Assemble the total receive signal for one run.

    The leaked Tx (after the optional PA and the leakage FIR) is scaled to
    `leakage_power_db`, the notched wanted signal to `rx_power_db`, and the
    notched noise to `rx_power_db - snr_db`; pass snr_db=inf for a
    noise-free composition.
    """
    if len(x_tx) != len(y_rx):
        raise ValueError("Tx and Rx sequences must have equal length")
    y_pa = rapp_apply(pa, x_tx) if pa is not None else x_tx
    y_txl = _scale_to_power(fir_convolve(y_pa, leakage), leakage_power_db)
    y_imd = imd_synthesize(coeffs, y_txl)
    y_rx_f = _scale_to_power(
        notch_apply(NotchState(), ComplexSeq(coeffs.lin_gain * y_rx.samples, y_rx.rate)),
        rx_power_db,
    )
    if math.isinf(snr_db):
        noise = ComplexSeq(np.zeros(len(x_tx)), x_tx.rate)
    else:
        raw = awgn(len(x_tx), 1.0, noise_seed, x_tx.rate)
        noise = _scale_to_power(notch_apply(NotchState(), raw), rx_power_db - snr_db)
    y_tot = ComplexSeq(y_rx_f.samples + noise.samples + y_imd.samples, x_tx.rate)
    return RxComposition(y_rx_f, noise, y_imd, y_tot, y_txl)


@dataclass
class GammaTable:
    """Interference coefficients tabulated over leakage power.

    Lookups are exact on the grid and linear (per complex component) in
    between; queries beyond the grid ends saturate to the edge values.
    """

    grid_db: np.ndarray
    entries: list

    def __post_init__(self) -> None:
        self.grid_db = np.asarray(self.grid_db, dtype=np.float64)
        if self.grid_db.size != len(self.entries):
            raise ValueError("one coefficient set per grid point required")
        if np.any(np.diff(self.grid_db) <= 0):
            raise ValueError("grid powers must be strictly increasing")

    def lookup(self, leakage_db: float) -> ImdCoefficients:
        g = self.grid_db
        if leakage_db <= g[0]:
            return self.entries[0]
        if leakage_db >= g[-1]:
            return self.entries[-1]
        j = int(np.searchsorted(g, leakage_db)) - 1
        t = (leakage_db - g[j]) / (g[j + 1] - g[j])
        a, b = self.entries[j], self.entries[j + 1]
        mix = lambda u, v: (1.0 - t) * u + t * v
        return ImdCoefficients(
            mix(a.c2, b.c2), mix(a.c4, b.c4), mix(a.c6, b.c6), mix(a.lin_gain, b.lin_gain)
        )


def default_gamma_table() -> GammaTable:
    """Synthetic input-referred coefficient table over -30..-10 dB leakage.

    Magnitudes are calibrated against the envelope moments of the default
    uplink waveform so that the |.|^2 product dominates at low drive (the
    fourth/sixth-order amplitude moments stay below 1 percent of it at the
    bottom of the range), higher orders contribute progressively more
    towards the top, and the uncancelled SINR degradation spans roughly
    0 to -25 dB across the sweep.
    """
    grid = np.array([-30.0, -25.0, -20.0, -15.0, -10.0])
    mags = [
        (183.598, 947.969, 8579.48),
        (441.534, 3327.34, 41265.4),
        (458.931, 9113.79, 107228.0),
        (214.866, 1484.27, 8367.18),
        (143.886, 400.035, 784.436),
    ]
    ph2, ph4, ph6 = 0.4, 3.1, -1.05
    entries = [
        ImdCoefficients(
            m2 * np.exp(1j * ph2), m4 * np.exp(1j * ph4), m6 * np.exp(1j * ph6)
        )
        for m2, m4, m6 in mags
    ]
    return GammaTable(grid, entries)
