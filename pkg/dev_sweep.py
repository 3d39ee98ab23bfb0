"""Dev scratch: hyperparameter sweep for the complex SAF."""
import itertools
import sys

import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import build_whitener, derive_seed, drive_saf_complex, guard_mask
from imdcancel.scenario import Scenario

power = float(sys.argv[1]) if len(sys.argv) > 1 else -14.0
use_pa = sys.argv[2] != "nopa" if len(sys.argv) > 2 else True

scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
table = default_gamma_table()
ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, 0, 1))
dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, 0, 1))
leak = gen_leakage(derive_seed(1, 101, 0), 50.0).fir
pa = RappPa.for_signal(ul) if use_pa else None
coeffs = table.lookup(power)
comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=power,
                  noise_seed=derive_seed(1, 9, 0, 1))
mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
w0 = draw_weights(16, derive_seed(1, 55, 0))
p_imd = comp.y_imd.mean_power()
print(f'power {power}, PA={use_pa}, P_imd {10*np.log10(p_imd):.2f} dB')

k = np.ones(2048) / 2048

def trial(mu, xi, tau):
    params = dict(step_size=mu, reg=xi, coupling=tau, norm="limiter", norm_target=3.0, td=True)
    res = drive_saf_complex(params, ul.samples, comp.y_tot.samples, mask, whit, w0)
    nm = 10 * np.log10(np.convolve(np.abs(comp.y_imd.samples - res.replica) ** 2 / p_imd, k, 'valid'))
    n = nm.size
    final = nm[int(n * 0.85):].mean()
    c15 = np.argmax(nm <= -15.0)
    c15 = c15 if nm[min(c15, n - 1)] <= -15 else -1
    return final, c15

grid_mu = [0.005, 0.01, 0.02, 0.04]
grid_xi = [0.02, 0.1]
grid_tau = [100, 300, 800]
best = []
for mu, xi, tau in itertools.product(grid_mu, grid_xi, grid_tau):
    final, c15 = trial(mu, xi, tau)
    best.append((final, mu, xi, tau, c15))
    print(f'mu={mu:<6} xi={xi:<5} tau={tau:<4} final {final:6.1f} dB  cross-15 {c15}')
best.sort()
print('BEST:', best[0])
