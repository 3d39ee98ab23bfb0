"""Dev scratch: criterion-4 style evaluation across seeds."""
import sys

import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import build_whitener, derive_seed, drive_saf_complex, guard_mask
from imdcancel.scenario import Scenario

POWER = -20.0
params_td = dict(step_size=0.02, reg=0.02, coupling=800, norm="limiter",
                 norm_target=1.5, td=True)
params_no = dict(params_td, td=False)
if len(sys.argv) > 1:
    params_td["step_size"] = float(sys.argv[1])
if len(sys.argv) > 2:
    params_no["step_size"] = float(sys.argv[2])

scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
table = default_gamma_table()
coeffs = table.lookup(POWER)
w0 = draw_weights(16, derive_seed(1, 55, 0))
k = np.ones(1024) / 1024

def crossing(nm, thr):
    idx = int(np.argmax(nm <= thr))
    return idx if nm[min(idx, nm.size - 1)] <= thr else -1

wins = 0
both18 = 0
for seed in range(10):
    ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, seed, seed))
    dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, seed, seed))
    leak = gen_leakage(derive_seed(1, 101, seed), 50.0).fir
    pa = RappPa.for_signal(ul)
    comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=POWER,
                      snr_db=10.0, noise_seed=derive_seed(1, 9, seed, seed))
    p_imd = comp.y_imd.mean_power()
    mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
    out = {}
    for name, prm in (("td", params_td), ("no", params_no)):
        res = drive_saf_complex(prm, ul.samples, comp.y_tot.samples, mask,
                                whit if prm["td"] else None, w0)
        nm = 10 * np.log10(np.convolve(
            np.abs(comp.y_imd.samples - res.replica) ** 2 / p_imd, k, "valid"))
        out[name] = (crossing(nm, -15.0), nm[35000:40000].mean())
    c_td, f_td = out["td"]
    c_no, f_no = out["no"]
    ok = c_td > 0 and (c_no < 0 or c_td <= 0.75 * c_no)
    wins += ok
    ok18 = f_td <= -18.0 and f_no <= -18.0
    both18 += ok18
    print(f"seed {seed}: td cross {c_td:>6} final {f_td:6.2f} | no-td cross {c_no:>6} "
          f"final {f_no:6.2f} | 25%-win {ok} both<=-18 {ok18}")
print(f"wins {wins}/10, both<=-18 in {both18}/10")
