"""Dev scratch: convergence behavior on the composed scenario."""
import sys
import time

import numpy as np

from imdcancel import (DlWaveformConfig, RappPa, UlWaveformConfig, default_gamma_table,
                       gen_downlink, gen_leakage, gen_uplink, compose_rx)
from imdcancel.harness import build_whitener, drive_saf_complex, drive_saf_real, guard_mask, derive_seed
from imdcancel.scenario import Scenario


def nmse_trace(y_imd, replica, smooth=1024):
    resid2 = np.abs(y_imd - replica) ** 2
    p = np.mean(np.abs(y_imd) ** 2)
    k = np.ones(smooth) / smooth
    t = np.convolve(resid2 / p, k, mode="valid")
    return 10 * np.log10(np.maximum(t, 1e-12))


def main():
    power = float(sys.argv[1]) if len(sys.argv) > 1 else -14.0
    mu = float(sys.argv[2]) if len(sys.argv) > 2 else 0.1
    xi = float(sys.argv[3]) if len(sys.argv) > 3 else 0.1
    tau = float(sys.argv[4]) if len(sys.argv) > 4 else 50.0
    slots = int(sys.argv[5]) if len(sys.argv) > 5 else 3
    scn = Scenario(gamma_mode="independentIQ", slots=slots)
    whit = build_whitener(scn, 16)
    table = default_gamma_table()

    seed = 1
    ul = gen_uplink(scn.ul, slots, derive_seed(1, 7, 0, seed))
    dl = gen_downlink(scn.dl, slots, derive_seed(1, 8, 0, seed))
    leak = gen_leakage(derive_seed(1, 101, 0), 50.0).fir
    pa = RappPa.for_signal(ul)
    coeffs = table.lookup(power)
    comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=power,
                      noise_seed=derive_seed(1, 9, 0, seed))
    print('powers: imd %.2f dB rx %.2f noise %.2f' % (
        10*np.log10(comp.y_imd.mean_power()),
        10*np.log10(comp.y_rx_filtered.mean_power()),
        10*np.log10(comp.noise.mean_power())))
    mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
    from imdcancel.adaptive import draw_weights
    w0 = draw_weights(16, derive_seed(1, 55, 0))

    params = dict(step_size=mu, reg=xi, coupling=tau, norm="limiter", norm_target=3.0)
    for label, td in (("td", True), ("no-td", False)):
        p = dict(params)
        p["td"] = td
        t0 = time.perf_counter()
        res = drive_saf_complex(p, ul.samples, comp.y_tot.samples, mask,
                                whit if td else None, w0)
        dt = time.perf_counter() - t0
        tr = nmse_trace(comp.y_imd.samples, res.replica)
        n = tr.size
        marks = [int(n*f) for f in (0.1, 0.25, 0.5, 0.75, 0.999)]
        print(f'{label}: {dt:.1f}s ({len(ul)/dt:.0f} sps) nmse@',
              ' '.join('%d:%.1f' % (m, tr[m]) for m in marks))
        # crossing points
        for thr in (-15.0, -18.0):
            idx = np.argmax(tr <= thr)
            print(f'   first <= {thr} dB at sample {idx if tr[idx] <= thr else -1}')


if __name__ == "__main__":
    main()
