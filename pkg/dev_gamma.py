"""Dev scratch: calibrate the default gamma table against waveform moments."""
import numpy as np

from imdcancel import RappPa, gen_leakage, gen_uplink
from imdcancel.dsp import ComplexSeq, NotchState, fir_convolve, notch_apply
from imdcancel.waveform import UlWaveformConfig, rapp_apply

ul = gen_uplink(UlWaveformConfig(), 8, 12345)
pa = RappPa.for_signal(ul)
base = rapp_apply(pa, ul)
leak = gen_leakage(6303, 50.0).fir
y = fir_convolve(base, leak)

# (leakage_db, target interference power, per-order std ratios vs order 2)
plan = [
    (-30.0, 0.015, (0.013, 0.0003)),
    (-25.0, 0.80, (0.06, 0.006)),
    (-20.0, 3.55, (0.50, 0.15)),
    (-15.0, 7.0, (0.55, 0.25)),
    (-10.0, 22.0, (0.70, 0.35)),
]
phases = (0.4, 3.1, -1.05)

for power, target, (s4, s6) in plan:
    scale = np.sqrt(10 ** (power / 10.0) / y.mean_power())
    m = np.abs(y.samples * scale) ** 2
    feats = np.stack([m, m**2, m**3])
    feats_ac = feats - feats.mean(axis=1, keepdims=True)
    sig = np.sqrt(np.mean(np.abs(feats_ac) ** 2, axis=1))
    mags = np.array([1.0 / sig[0], s4 / sig[1], s6 / sig[2]])
    c = mags * np.exp(1j * np.array(phases))
    u_ac = (c[:, None] * feats_ac).sum(axis=0)
    c *= np.sqrt(target / np.mean(np.abs(u_ac) ** 2))
    notched = notch_apply(NotchState(), ComplexSeq((c[:, None] * feats).sum(axis=0))).samples
    p_notched = np.mean(np.abs(notched[3000:]) ** 2)
    # spec dominance metric at the grid point (amplitude moments)
    am = [abs(c[k]) * np.mean(feats[k]) for k in range(3)]
    print(f"# {power:6.1f}: P_imd {10*np.log10(p_notched):6.2f} dB  "
          f"mom-ratios {am[1]/am[0]:.4f} {am[2]/am[0]:.5f}")
    print(f"    ({abs(c[0]):.6g}, {abs(c[1]):.6g}, {abs(c[2]):.6g}),")
