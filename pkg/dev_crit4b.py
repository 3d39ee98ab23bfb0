"""Dev scratch: per-variant tuning for the criterion-4 comparison."""
import itertools
import sys

import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import build_whitener, derive_seed, drive_saf_complex, guard_mask
from imdcancel.scenario import Scenario

POWER = -20.0
scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
coeffs = default_gamma_table().lookup(POWER)
w0 = draw_weights(16, derive_seed(1, 55, 0))
k = np.ones(1024) / 1024

cells = {}
def cell(seed):
    if seed not in cells:
        ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, seed, seed))
        dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, seed, seed))
        leak = gen_leakage(derive_seed(1, 101, seed), 50.0).fir
        pa = RappPa.for_signal(ul)
        comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=POWER,
                          snr_db=10.0, noise_seed=derive_seed(1, 9, seed, seed))
        mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
        cells[seed] = (ul.samples, comp.y_tot.samples, comp.y_imd.samples,
                       comp.y_imd.mean_power(), mask)
    return cells[seed]


def run(seed, td, **kw):
    x, y, imd, p_imd, mask = cell(seed)
    params = dict(step_size=0.02, reg=0.02, coupling=800, norm="limiter",
                  norm_target=1.5, td=td)
    params.update(kw)
    res = drive_saf_complex(params, x, y, mask, whit if params["td"] else None, w0)
    nm = 10 * np.log10(np.convolve(np.abs(imd - res.replica) ** 2 / p_imd, k, "valid"))
    c15 = int(np.argmax(nm <= -15.0))
    c15 = c15 if nm[min(c15, nm.size - 1)] <= -15 else 10**9
    return c15, nm[35000:40000].mean()


if __name__ == "__main__":
    td = sys.argv[1] == "td"
    seeds = [int(s) for s in sys.argv[2].split(",")]
    for mu, tau, rho in itertools.product((0.01, 0.02, 0.03), (400, 800, 1600), (1.0, 1.5)):
        rows = [run(s, td, step_size=mu, coupling=tau, norm_target=rho) for s in seeds]
        cross = [r[0] for r in rows]
        fin = [r[1] for r in rows]
        lin = np.mean([10 ** (f / 10) for f in fin])
        print(f"mu {mu:<5} tau {tau:<5} rho {rho}: cross {cross} finals "
              f"{[round(f,1) for f in fin]} ens {10*np.log10(lin):.2f}")
