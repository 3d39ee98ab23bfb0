"""Dev scratch: optimize the 40k-sample NMSE directly."""
import itertools
import sys

import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import build_whitener, derive_seed, drive_saf_complex, guard_mask
from imdcancel.scenario import Scenario

power = float(sys.argv[1])
td = sys.argv[2] == "td"
grid_mu = [float(v) for v in sys.argv[3].split(",")]
grid_tau = [float(v) for v in sys.argv[4].split(",")]
grid_xi = [float(v) for v in sys.argv[5].split(",")] if len(sys.argv) > 5 else [0.02]

scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
table = default_gamma_table()
ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, 0, 1))
dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, 0, 1))
leak = gen_leakage(derive_seed(1, 101, 0), 50.0).fir
pa = RappPa.for_signal(ul)
comp = compose_rx(ul, pa, leak, table.lookup(power), dl, leakage_power_db=power,
                  snr_db=10.0, noise_seed=derive_seed(1, 9, 0, 1))
mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
w0 = draw_weights(16, derive_seed(1, 55, 0))
p_imd = comp.y_imd.mean_power()
print(f"power {power} td={td} P_imd {10*np.log10(p_imd):.2f} dB")
k = np.ones(2048) / 2048

rows = []
for mu, tau, xi in itertools.product(grid_mu, grid_tau, grid_xi):
    params = dict(step_size=mu, reg=xi, coupling=tau, norm="limiter",
                  norm_target=3.0, td=td)
    res = drive_saf_complex(params, ul.samples, comp.y_tot.samples, mask,
                            whit if td else None, w0)
    nm = 10 * np.log10(np.convolve(np.abs(comp.y_imd.samples - res.replica) ** 2 / p_imd, k, "valid"))
    at40k = nm[35000:40000].mean()
    c15 = int(np.argmax(nm <= -15.0))
    c15 = c15 if nm[min(c15, nm.size - 1)] <= -15 else -1
    rows.append((at40k, mu, tau, xi, c15))
    print(f"mu={mu:<7} tau={tau:<6} xi={xi:<6} nmse@40k {at40k:6.2f}  cross-15 {c15}")
rows.sort()
print("BEST:", rows[0])
