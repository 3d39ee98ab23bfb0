"""Dev scratch: criterion-5 SINR comparison on the scaled-Q scenario."""
import sys
import time

import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import (build_whitener, derive_seed, drive_krls, drive_quad_lms,
                               drive_saf_real, guard_mask, sinr_db)
from imdcancel.scenario import Scenario

scn = Scenario(gamma_mode="scaledQ", slots=2)
whit = build_whitener(scn, 16)
table = default_gamma_table()
w0 = draw_weights(16, derive_seed(1, 55, 0))

saf_params = dict(step_size=0.042, reg=0.05, coupling=2000, norm="limiter",
                  norm_target=1.5, td=True)
quad_params = dict(step_size=0.02, reg=0.1)
krls_params = dict(kernel_std=8.0, ald_threshold=2e-5, max_dict=700, train_symbols=3)

if len(sys.argv) > 1:
    saf_params["step_size"] = float(sys.argv[1])
if len(sys.argv) > 2:
    quad_params["step_size"] = float(sys.argv[2])
if len(sys.argv) > 3:
    krls_params["kernel_std"] = float(sys.argv[3])

for power in (-15.0, -10.0):
    coeffs = scn.coefficients(power)
    sign_i = 1.0 if coeffs.c2.real >= 0 else -1.0
    rows = {"none": [], "saf": [], "quad": [], "krls": []}
    t0 = time.perf_counter()
    for run in range(6):
        ch = run % 2
        ul = gen_uplink(scn.ul, 2, derive_seed(1, 7, ch, run))
        dl = gen_downlink(scn.dl, 2, derive_seed(1, 8, ch, run))
        leak = gen_leakage(derive_seed(1, 101, ch), 50.0).fir
        pa = RappPa.for_signal(ul)
        comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=power,
                          snr_db=10.0, noise_seed=derive_seed(1, 9, ch, run))
        mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
        window = slice(scn.ul.symbol_len, len(ul))
        args = (comp.y_rx_filtered.samples, comp.y_imd.samples, comp.noise.samples)
        rows["none"].append(sinr_db(*args, 0.0, window))
        r = drive_saf_real(saf_params, ul.samples, comp.y_tot.samples, mask, whit, w0)
        rows["saf"].append(sinr_db(*args, r.replica, window))
        r = drive_quad_lms(quad_params, ul.samples, comp.y_tot.samples, mask, sign_i, w0)
        rows["quad"].append(sinr_db(*args, r.replica, window))
        r = drive_krls(krls_params, ul.samples, comp.y_tot.samples, mask, scn.ul.symbol_len)
        rows["krls"].append(sinr_db(*args, r.replica, window))
    dt = time.perf_counter() - t0
    means = {k: np.mean(v) for k, v in rows.items()}
    print(f"power {power}: none {means['none']:6.2f}  saf {means['saf']:6.2f}  "
          f"quad {means['quad']:6.2f}  krls {means['krls']:6.2f}   "
          f"[saf-quad {means['saf']-means['quad']:5.2f}, krls-saf "
          f"{means['krls']-means['saf']:5.2f}]  ({dt:.0f}s)")
