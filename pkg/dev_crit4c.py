"""Dev scratch: full criterion-4 evaluation, ensemble + per-seed orderings."""
import numpy as np

from imdcancel import RappPa, default_gamma_table, gen_downlink, gen_leakage, gen_uplink, compose_rx
from imdcancel.adaptive import draw_weights
from imdcancel.harness import build_whitener, derive_seed, drive_saf_complex, guard_mask
from imdcancel.scenario import Scenario

POWER = -20.0
N_SEEDS = 10
scn = Scenario(gamma_mode="independentIQ", slots=3)
whit = build_whitener(scn, 16)
coeffs = default_gamma_table().lookup(POWER)
w0 = draw_weights(16, derive_seed(1, 55, 0))
k = np.ones(1024) / 1024


def sustained_cross(nm, thr, hold=2000):
    below = nm <= thr
    run = 0
    for i, b in enumerate(below):
        run = run + 1 if b else 0
        if run >= hold:
            return i - hold + 1
    return -1


def one(seed, params):
    ul = gen_uplink(scn.ul, 3, derive_seed(1, 7, seed, seed))
    dl = gen_downlink(scn.dl, 3, derive_seed(1, 8, seed, seed))
    leak = gen_leakage(derive_seed(1, 101, seed), 50.0).fir
    pa = RappPa.for_signal(ul)
    comp = compose_rx(ul, pa, leak, coeffs, dl, leakage_power_db=POWER,
                      snr_db=10.0, noise_seed=derive_seed(1, 9, seed, seed))
    mask = guard_mask(len(ul), scn.ul.symbol_len, 32)
    res = drive_saf_complex(params, ul.samples, comp.y_tot.samples, mask,
                            whit if params["td"] else None, w0)
    return np.abs(comp.y_imd.samples - res.replica) ** 2 / comp.y_imd.mean_power()


def evaluate(p_td, p_no):
    traces_td, traces_no = [], []
    per_seed = []
    for seed in range(N_SEEDS):
        t_td = one(seed, p_td)
        t_no = one(seed, p_no)
        traces_td.append(t_td)
        traces_no.append(t_no)
        nm_td = 10 * np.log10(np.convolve(t_td, k, "valid"))
        nm_no = 10 * np.log10(np.convolve(t_no, k, "valid"))
        c_td = sustained_cross(nm_td, -15.0)
        c_no = sustained_cross(nm_no, -15.0)
        win = c_td > 0 and (c_no < 0 or c_td < c_no)
        per_seed.append((c_td, c_no, win))
    ens_td = 10 * np.log10(np.convolve(np.mean(traces_td, axis=0), k, "valid"))
    ens_no = 10 * np.log10(np.convolve(np.mean(traces_no, axis=0), k, "valid"))
    ec_td = sustained_cross(ens_td, -15.0)
    ec_no = sustained_cross(ens_no, -15.0)
    s_td = ens_td[35000:40000].mean()
    s_no = ens_no[35000:40000].mean()
    wins = sum(w for _, _, w in per_seed)
    print("per-seed:", per_seed)
    print(f"ensemble: td cross {ec_td} vs no-td {ec_no} "
          f"(reduction {100*(1-ec_td/max(ec_no,1)):.0f}%), steady td {s_td:.2f} "
          f"no-td {s_no:.2f}, per-seed wins {wins}/{N_SEEDS}")
    return wins, ec_td, ec_no, s_td, s_no


if __name__ == "__main__":
    import sys

    mu_td, tau_td = (0.02, 800)
    mu_no, tau_no = (0.02, 1600)
    if len(sys.argv) > 4:
        mu_td, tau_td, mu_no, tau_no = (float(sys.argv[1]), float(sys.argv[2]),
                                        float(sys.argv[3]), float(sys.argv[4]))
    p_td = dict(step_size=mu_td, reg=0.02, coupling=tau_td, norm="limiter",
                norm_target=1.5, td=True)
    p_no = dict(step_size=mu_no, reg=0.02, coupling=tau_no, norm="limiter",
                norm_target=1.0, td=False)
    evaluate(p_td, p_no)
