"""Dev scratch: finite-difference check of both SAF gradient paths."""
import numpy as np

import imdcancel as ic
from imdcancel.adaptive import (SafConfig, saf_real_init, saf_real_step, real_gradients,
                                saf_complex_init, saf_complex_step, complex_gradients,
                                _push_sample, _real_output)
from imdcancel.spline import SplineGrid, basis_matrix

rng = np.random.default_rng(42)


def replay_real(state, cfg, w, q, y):
    """Frozen-index forward replay of the real-output filter."""
    B = cfg.grid.basis
    depth = cfg.ring_depth
    head = (state.n - 1) % depth
    order = cfg.grid.order
    yhat = 0.0
    for k, h in enumerate(cfg.out_taps):
        idx = (head - k) % depth
        xk = state.ring_x[idx]
        seg = int(state.ring_seg[idx])
        s = np.dot(w, xk)
        r = abs(s) ** 2 if cfg.nonlinearity == "abs2" else abs(s)
        t = (r - cfg.grid.r_min) / cfg.grid.dr
        nu = t - seg  # segment frozen at the base point
        nuvec = np.array([nu ** (order - 1 - j) for j in range(order)])
        phi = nuvec @ B @ q[seg - order + 1: seg + 1]
        yhat += h * phi
    return y - np.real(yhat)


def check_real(multi_tap=True, zeta="abs2"):
    grid = SplineGrid(-0.1, 0.05, 14, 3, "bspline")
    cfg = SafConfig(q_lin=4, grid=grid, nonlinearity=zeta, step_size=0.0,
                    reg=1.0, ctrl_coupling=1.0,
                    out_taps=[1.0, 0.45, -0.2] if multi_tap else [1.0])
    w0 = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(4)
    st = saf_real_init(cfg, w0=w0)
    st.ctrl = st.ctrl + 0.2 * rng.standard_normal(grid.n_ctrl)
    # warm the ring with frozen parameters
    for _ in range(cfg.ring_depth + 4):
        saf_real_step(st, cfg, complex(rng.standard_normal(), rng.standard_normal()) * 0.9,
                      0.0, adapt=False)
    y = 0.7
    yhat, g_ctrl, g_w, ge, we, lo, hi = real_gradients(st, cfg)
    e0 = y - float(np.real(yhat))
    assert abs(replay_real(st, cfg, st.w, st.ctrl, y) - e0) < 1e-12
    h = 1e-6
    errs = []
    for i in range(grid.n_ctrl):
        qp = st.ctrl.copy(); qp[i] += h
        qm = st.ctrl.copy(); qm[i] -= h
        fd = (replay_real(st, cfg, st.w, qp, y) - replay_real(st, cfg, st.w, qm, y)) / (2 * h)
        errs.append(abs(fd - g_ctrl[i]) / max(1e-9, abs(g_ctrl[i]) if g_ctrl[i] else 1))
    print('real q grad max rel err', max(errs))
    errs = []
    for j in range(cfg.q_lin):
        for part in (1.0, 1j):
            wp = st.w.copy(); wp[j] += h * part
            wm = st.w.copy(); wm[j] -= h * part
            fd = (replay_real(st, cfg, wp, st.ctrl, y) - replay_real(st, cfg, wm, st.ctrl, y)) / (2 * h)
            ana = 2 * (g_w[j].real if part == 1.0 else g_w[j].imag)
            errs.append(abs(fd - ana) / max(1e-9, abs(ana)))
    print('real w grad max rel err', max(errs))


def replay_complex(state, cfg, w, q, y):
    B = cfg.grid.basis
    depth = cfg.ring_depth
    idx = (state.n - 1 - cfg.out_delay) % depth
    xk = state.ring_x[idx]
    seg = int(state.ring_seg[idx])
    order = cfg.grid.order
    s = np.dot(w, xk)
    r = abs(s) ** 2 if cfg.nonlinearity == "abs2" else abs(s)
    t = (r - cfg.grid.r_min) / cfg.grid.dr
    nu = t - seg
    nuvec = np.array([nu ** (order - 1 - j) for j in range(order)])
    phi = nuvec @ B @ q[seg - order + 1: seg + 1]
    e = y - cfg.out_gain * phi
    return 0.5 * abs(e) ** 2


def check_complex(k_g=2, zeta="abs2"):
    grid = SplineGrid(-0.1, 0.05, 14, 3, "bspline")
    cfg = SafConfig(q_lin=4, grid=grid, nonlinearity=zeta, step_size=0.0,
                    reg=1.0, ctrl_coupling=1.0, out_gain=0.8, out_delay=k_g)
    w0 = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(4)
    st = saf_complex_init(cfg, w0=w0)
    st.ctrl = st.ctrl + 0.2 * (rng.standard_normal(grid.n_ctrl) + 1j * rng.standard_normal(grid.n_ctrl))
    for _ in range(cfg.ring_depth + 4):
        saf_complex_step(st, cfg, complex(rng.standard_normal(), rng.standard_normal()) * 0.9,
                         0.0, adapt=False)
    y = 0.7 - 0.3j
    depth = cfg.ring_depth
    idx = (st.n - 1 - cfg.out_delay) % depth
    yhat = complex(cfg.out_gain * st.ring_phi[idx])
    e = y - yhat
    g_ctrl_seg, sl, ge, g_w, b_both = complex_gradients(st, cfg, e)
    assert abs(replay_complex(st, cfg, st.w, st.ctrl, y) - 0.5 * abs(e) ** 2) < 1e-12
    h = 1e-6
    errs = []
    order = grid.order
    g_eq_dense = np.zeros(grid.n_ctrl)
    g_eq_dense[sl:sl + order] = g_ctrl_seg
    for i in range(grid.n_ctrl):
        for part in (1.0, 1j):
            qp = st.ctrl.copy(); qp[i] += h * part
            qm = st.ctrl.copy(); qm[i] -= h * part
            fd = (replay_complex(st, cfg, st.w, qp, y) - replay_complex(st, cfg, st.w, qm, y)) / (2 * h)
            gq = e * g_eq_dense[i]
            ana = gq.real if part == 1.0 else gq.imag
            errs.append(abs(fd - ana) / max(1e-9, abs(ana) if ana else 1))
    print('complex q grad max rel err', max(errs))
    errs = []
    for j in range(cfg.q_lin):
        for part in (1.0, 1j):
            wp = st.w.copy(); wp[j] += h * part
            wm = st.w.copy(); wm[j] -= h * part
            fd = (replay_complex(st, cfg, wp, st.ctrl, y) - replay_complex(st, cfg, wm, st.ctrl, y)) / (2 * h)
            ana = g_w[j].real if part == 1.0 else g_w[j].imag
            errs.append(abs(fd - ana) / max(1e-9, abs(ana)))
    print('complex w grad max rel err', max(errs))


check_real(multi_tap=True, zeta="abs2")
check_real(multi_tap=True, zeta="abs")
check_real(multi_tap=False, zeta="abs2")
check_complex(k_g=2)
check_complex(k_g=0)
check_complex(k_g=0, zeta="abs")
