"""Dev scratch: inspect internal trajectories of the complex SAF."""
import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights, saf_complex_init, saf_complex_step
from imdcancel.harness import build_saf_config, build_whitener, derive_seed, guard_mask
from imdcancel.scenario import Scenario

power = -14.0
scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, 0, 1))
dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, 0, 1))
leak = gen_leakage(derive_seed(1, 101, 0), 50.0).fir
pa = RappPa.for_signal(ul)
coeffs = default_gamma_table().lookup(power)
comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=power,
                  noise_seed=derive_seed(1, 9, 0, 1))
mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
w0 = draw_weights(16, derive_seed(1, 55, 0))

import sys
mu, xi, tau = (float(a) for a in sys.argv[1:4]) if len(sys.argv) > 3 else (0.1, 0.1, 50.0)

params = dict(step_size=mu, reg=xi, coupling=tau, norm="limiter", norm_target=3.0, td=True)
cfg = build_saf_config(params, whit)
st = saf_complex_init(cfg, w0=w0)
x = ul.samples
y = comp.y_tot.samples
n = x.size
resid2 = np.empty(n)
svals = np.empty(n)
wnorm = np.empty(n)
steps = np.empty(n)
p_imd = comp.y_imd.mean_power()
for i in range(n):
    yh, e, d = saf_complex_step(st, cfg, x[i], complex(y[i]), adapt=bool(mask[i]))
    resid2[i] = abs(comp.y_imd.samples[i] - yh) ** 2
    s = np.dot(st.w, st.ring_x[(st.n - 1) % cfg.ring_depth])
    svals[i] = abs(s) ** 2
    wnorm[i] = d.wnorm
    steps[i] = d.step

k = np.ones(2048) / 2048
nm = 10 * np.log10(np.convolve(resid2 / p_imd, k, 'valid'))
print('mu %g xi %g tau %g' % (mu, xi, tau))
for frac in (0.05, 0.2, 0.4, 0.6, 0.8, 0.99):
    i = int((nm.size - 1) * frac)
    j = int((n - 1) * frac)
    print(f'  at {j}: nmse {nm[i]:6.1f} dB  |s|2 {svals[j]:.3f}  wnorm {wnorm[j]:.2f}  step {steps[j]:.2e}')
print('  clamps:', st.clamp_count, 'of', n, ' halvings:', len(st.halvings))
print('  |s|2 percentiles (last quarter):', np.percentile(svals[-n//4:], [5, 50, 95, 99.9]).round(3))
print('  ctrl real range', np.round([st.ctrl.real.min(), st.ctrl.real.max()], 2),
      'imag range', np.round([st.ctrl.imag.min(), st.ctrl.imag.max()], 2))
