"""Scenario execution: compose signals, drive cancellers, reduce metrics.

A scenario is expanded into (leakage power x channel x run) cells.  Each
cell composes the receive signal once and drives every configured
algorithm sample by sample over it.  Reductions (SINR means, NMSE traces)
are associative sums finalised once, so results do not depend on worker
scheduling; every random draw is derived from the base seed.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .adaptive import (
    DivergenceError,
    KrlsConfig,
    KrlsState,
    NormConstraint,
    NormLimiter,
    QScaler,
    QuadLmsConfig,
    SafConfig,
    draw_weights,
    krls_predict,
    krls_step,
    quad_lms_init,
    quad_lms_step,
    saf_complex_init,
    saf_complex_step,
    saf_real_init,
    saf_real_step,
)
from .dsp import ComplexSeq, build_dct_whitener, delay_line_covariance
from .interference import compose_rx, gen_leakage
from .scenario import AlgoSpec, Scenario
from .spline import SplineGrid
from .waveform import RappPa, gen_downlink, gen_uplink


def derive_seed(*parts) -> int:
    """Deterministic child seed from integer path components."""
    folded = [int(p) & 0xFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(folded).generate_state(1)[0])


def guard_mask(n: int, period: int, guard: int) -> np.ndarray:
    """True where adaptation may run: away from symbol boundaries."""
    if guard <= 0:
        return np.ones(n, dtype=bool)
    pos = np.arange(n) % period
    return (pos >= guard) & (pos < period - guard)


def delay_matrix(x: np.ndarray, dim: int) -> np.ndarray:
    """Row n holds [x[n], x[n-1], ..., x[n-dim+1]] (zeros before the start)."""
    xp = np.concatenate((np.zeros(dim - 1, dtype=np.complex128), x))
    return sliding_window_view(xp, dim)[:, ::-1]


# ---------------------------------------------------------------------------
# algorithm drivers

_SAF_DEFAULTS = dict(
    q_lin=16,
    step_size=0.1,
    reg=0.1,
    coupling=50.0,
    n_ctrl=20,
    order=3,
    kind="bspline",
    r_min=-0.1,
    dr=0.05,
    nonlinearity="abs2",
    td=True,
    norm="limiter",
    norm_target=3.0,
    norm_p=1,
    constraint_weight=0.1,
    guard=32,
    freeze_w0=True,
)


def build_saf_config(params: dict, whitener=None) -> SafConfig:
    p = dict(_SAF_DEFAULTS)
    p.update(params)
    grid = SplineGrid(
        float(p["r_min"]), float(p["dr"]), int(p["n_ctrl"]), int(p["order"]), p["kind"]
    )
    constraint = limiter = None
    if p["norm"] == "constrained":
        constraint = NormConstraint(
            float(p["constraint_weight"]), float(p["norm_target"]), int(p["norm_p"])
        )
    elif p["norm"] == "limiter":
        limiter = NormLimiter(float(p["norm_target"]), int(p["norm_p"]))
    elif p["norm"] != "off":
        raise ValueError("norm mode must be 'constrained', 'limiter' or 'off'")
    return SafConfig(
        q_lin=int(p["q_lin"]),
        grid=grid,
        nonlinearity=p["nonlinearity"],
        step_size=float(p["step_size"]),
        reg=float(p["reg"]),
        ctrl_coupling=float(p["coupling"]),
        constraint=constraint,
        limiter=limiter,
        whitener=whitener if p["td"] else None,
        out_taps=np.asarray(p.get("out_taps", [1.0]), dtype=np.float64),
        out_gain=float(p.get("out_gain", 1.0)),
        out_delay=int(p.get("out_delay", 0)),
        guard_samples=int(p["guard"]),
    )


def _build_scaler(params: dict) -> QScaler:
    return QScaler(
        mode=params.get("scaler", "wls"),
        forget=float(params.get("scaler_forget", 0.9998)),
        step_size=float(params.get("scaler_step", 0.5)),
        reg=float(params.get("scaler_reg", 1e-3)),
    )


@dataclass
class DriveResult:
    replica: np.ndarray
    elapsed: float
    wnorm: np.ndarray | None = None
    dict_trace: np.ndarray | None = None


def drive_saf_real(params: dict, x: np.ndarray, y: np.ndarray, mask: np.ndarray,
                   whitener=None, w0: np.ndarray | None = None,
                   collect_wnorm: bool = False) -> DriveResult:
    cfg = build_saf_config(params, whitener)
    state = saf_real_init(cfg, w0=w0, scaler=_build_scaler(params))
    n = x.size
    rep = np.empty(n, dtype=np.complex128)
    wn = np.empty(n) if collect_wnorm else None
    t0 = time.perf_counter()
    for i in range(n):
        out, _, diag = saf_real_step(
            state, cfg, x[i], y[i].real, y[i].imag, adapt=bool(mask[i])
        )
        rep[i] = out
        if wn is not None:
            wn[i] = diag.wnorm
    return DriveResult(rep, time.perf_counter() - t0, wnorm=wn)


def drive_saf_complex(params: dict, x: np.ndarray, y: np.ndarray, mask: np.ndarray,
                      whitener=None, w0: np.ndarray | None = None,
                      collect_wnorm: bool = False) -> DriveResult:
    cfg = build_saf_config(params, whitener)
    state = saf_complex_init(cfg, w0=w0)
    n = x.size
    k = cfg.out_delay
    # a pipelined replica arrives k samples late: feed the desired signal
    # delayed accordingly and shift the outputs back into alignment
    if k:
        y_fed = np.concatenate((np.zeros(k, dtype=np.complex128), y[: n - k]))
        mask = mask & (np.arange(n) >= k)
    else:
        y_fed = y
    out = np.empty(n, dtype=np.complex128)
    wn = np.empty(n) if collect_wnorm else None
    t0 = time.perf_counter()
    for i in range(n):
        y_hat, _, diag = saf_complex_step(state, cfg, x[i], y_fed[i], adapt=bool(mask[i]))
        out[i] = y_hat
        if wn is not None:
            wn[i] = diag.wnorm
    rep = np.concatenate((out[k:], np.zeros(k, dtype=np.complex128))) if k else out
    return DriveResult(rep, time.perf_counter() - t0, wnorm=wn)


def drive_quad_lms(params: dict, x: np.ndarray, y: np.ndarray, mask: np.ndarray,
                   sign_i: float, w0: np.ndarray | None = None) -> DriveResult:
    cfg = QuadLmsConfig(
        q_lin=int(params.get("q_lin", 16)),
        step_size=float(params.get("step_size", 0.02)),
        reg=float(params.get("reg", 0.1)),
        sign_i=float(sign_i),
        guard_samples=int(params.get("guard", 32)),
    )
    state = quad_lms_init(cfg, w0=w0, scaler=_build_scaler(params))
    n = x.size
    rep = np.empty(n, dtype=np.complex128)
    t0 = time.perf_counter()
    for i in range(n):
        out, _, _ = quad_lms_step(state, cfg, x[i], y[i].real, y[i].imag,
                                  adapt=bool(mask[i]))
        rep[i] = out
    return DriveResult(rep, time.perf_counter() - t0)


def drive_krls(params: dict, x: np.ndarray, y: np.ndarray, mask: np.ndarray,
               symbol_len: int) -> DriveResult:
    cfg = KrlsConfig(
        kernel_std=float(params.get("kernel_std", 10.0)),
        ald_threshold=float(params.get("ald_threshold", 2e-5)),
        max_dict=int(params.get("max_dict", 700)),
    )
    dim = int(params.get("q_lin", 16))
    train_until = min(x.size, int(params.get("train_symbols", 3)) * symbol_len)
    xmat = delay_matrix(x, dim)
    state = KrlsState(dim)
    n = x.size
    rep = np.zeros(n, dtype=np.complex128)
    trace = np.zeros(n)
    t0 = time.perf_counter()
    for i in range(train_until):
        y_hat, _ = krls_step(state, cfg, xmat[i], complex(y[i]), train=bool(mask[i]))
        rep[i] = y_hat
        trace[i] = state.dict_size
    rep[train_until:] = krls_predict(state, cfg, xmat[train_until:])
    trace[train_until:] = state.dict_size
    return DriveResult(rep, time.perf_counter() - t0, dict_trace=trace)


# ---------------------------------------------------------------------------
# scenario execution


@dataclass
class MetricsRecord:
    """Reduced results of one scenario execution."""

    sinr_rows: list = field(default_factory=list)  # (leakage, label, sinr, n_valid)
    nmse_traces: dict = field(default_factory=dict)  # label -> trace (linear)
    nmse_leakage_db: float = 0.0
    psd_rows: list = field(default_factory=list)  # (label, freqs, psd_db)
    wnorm_traces: dict = field(default_factory=dict)
    dict_traces: dict = field(default_factory=dict)
    wallclock: dict = field(default_factory=dict)  # label -> samples/second
    diverged: dict = field(default_factory=dict)  # (leakage, label) -> count


def _window_power(v: np.ndarray, window: slice) -> float:
    return float(np.mean(np.abs(v[window]) ** 2))


def sinr_db(y_rx: np.ndarray, y_imd: np.ndarray, noise: np.ndarray,
            replica: np.ndarray, window: slice) -> float:
    """Wanted power over residual-interference-plus-noise power, in dB."""
    resid = y_imd - replica + noise
    return 10.0 * np.log10(_window_power(y_rx, window) / _window_power(resid, window))


def build_whitener(scn: Scenario, q_lin: int):
    """Decorrelation pipeline frozen from a long draw of the Tx waveform."""
    n_needed = 100_000
    per_slot = scn.ul.symbols_per_slot * scn.ul.symbol_len
    slots = max(1, int(np.ceil(n_needed / per_slot)))
    ref = gen_uplink(scn.ul, slots, derive_seed(scn.base_seed, 777))
    cxx = delay_line_covariance(ref.samples, q_lin)
    return build_dct_whitener(cxx, q_lin)


def _cell_compose(scn: Scenario, power: float, channel: int, run: int):
    x = gen_uplink(scn.ul, scn.slots, derive_seed(scn.base_seed, 7, channel, run))
    y_rx = gen_downlink(scn.dl, scn.slots, derive_seed(scn.base_seed, 8, channel, run))
    if scn.leakage_taps is not None:
        from .dsp import FirFilter

        leak = FirFilter(scn.leakage_taps)
    else:
        leak = gen_leakage(derive_seed(scn.base_seed, 101, channel), scn.isolation_db).fir
    pa = None
    if scn.pa_model == "rapp":
        pa = RappPa.for_signal(x, crest_db=scn.pa_crest_db, smoothness=scn.pa_smoothness)
    coeffs = scn.coefficients(power)
    comp = compose_rx(
        x,
        pa,
        leak,
        coeffs,
        y_rx,
        leakage_power_db=power,
        snr_db=scn.rx_snr_db,
        noise_seed=derive_seed(scn.base_seed, 9, int(round(power * 16)), channel, run),
    )
    return x, comp, coeffs


def _drive_one(spec: AlgoSpec, params: dict, x: np.ndarray, y: np.ndarray,
               symbol_len: int, whitener, w0, sign_i: float) -> DriveResult:
    mask = guard_mask(x.size, symbol_len, int(params.get("guard", 32)))
    if spec.name == "saf-real":
        return drive_saf_real(params, x, y, mask, whitener, w0)
    if spec.name == "saf-complex":
        return drive_saf_complex(params, x, y, mask, whitener, w0)
    if spec.name == "quad-lms":
        return drive_quad_lms(params, x, y, mask, sign_i, w0)
    if spec.name == "krls":
        return drive_krls(params, x, y, mask, symbol_len)
    raise ValueError(f"unknown algorithm {spec.name!r}")


def _run_cell(scn: Scenario, power: float, channel: int, run: int,
              whiteners: dict, w0_map: dict):
    """Execute every algorithm on one composed cell; return raw metrics."""
    x, comp, coeffs = _cell_compose(scn, power, channel, run)
    xs = x.samples
    y_tot = comp.y_tot.samples
    symbol_len = scn.ul.symbol_len
    window = slice(symbol_len, xs.size)
    sign_i = 1.0 if coeffs.c2.real >= 0 else -1.0
    want_nmse = power == scn.nmse_leakage_db
    want_psd = power == scn.psd_leakage_db and channel == 0 and run == 0
    out = {
        "none": sinr_db(comp.y_rx_filtered.samples, comp.y_imd.samples,
                        comp.noise.samples, 0.0, window),
        "algos": {},
    }
    imd_pow = _window_power(comp.y_imd.samples, window)
    for idx, spec in enumerate(scn.algorithms):
        params = spec.resolved(power)
        w0 = w0_map.get((idx, channel, run))
        whitener = whiteners.get(int(params.get("q_lin", 16)))
        try:
            res = _drive_one(spec, params, xs, y_tot, symbol_len, whitener, w0, sign_i)
        except DivergenceError:
            out["algos"][spec.label] = {"diverged": True}
            continue
        entry = {
            "diverged": False,
            "sinr": sinr_db(comp.y_rx_filtered.samples, comp.y_imd.samples,
                            comp.noise.samples, res.replica, window),
            "elapsed": res.elapsed,
            "steps": xs.size,
        }
        if want_nmse:
            entry["resid2_norm"] = np.abs(comp.y_imd.samples - res.replica) ** 2 / imd_pow
        if res.dict_trace is not None:
            entry["dict_trace"] = res.dict_trace
        if want_psd and idx == 0:
            entry["psd_parts"] = _psd_parts(comp, res.replica)
        out["algos"][spec.label] = entry
    return out


def _psd_parts(comp, replica: np.ndarray):
    from .dsp import welch_psd

    seg = 2048
    rate = comp.y_tot.rate
    resid = comp.y_imd.samples - replica
    cancelled = comp.y_tot.samples - replica
    parts = []
    for label, sig in (
        ("noise", comp.noise.samples),
        ("rx-wanted", comp.y_rx_filtered.samples),
        ("rx-total", comp.y_tot.samples),
        ("imd-residual", resid),
        ("rx-cancelled", cancelled),
    ):
        freqs, psd = welch_psd(ComplexSeq(sig, rate), seg, 0.5)
        parts.append((label, freqs, 10.0 * np.log10(np.maximum(psd, 1e-30))))
    return parts


def run_scenario(scn: Scenario, parallel: int = 1) -> MetricsRecord:
    """Run the full sweep and reduce the per-cell results."""
    q_lins = sorted(
        {
            int(spec.params.get("q_lin", 16))
            for spec in scn.algorithms
            if spec.name in ("saf-real", "saf-complex") and spec.params.get("td", True)
        }
    )
    whiteners = {q: build_whitener(scn, q) for q in q_lins}
    w0_map = {}
    for idx, spec in enumerate(scn.algorithms):
        if spec.name == "krls":
            continue
        q_lin = int(spec.params.get("q_lin", 16))
        if spec.params.get("freeze_w0", True):
            w0 = draw_weights(q_lin, derive_seed(scn.base_seed, 55, idx))
            for ch in range(scn.n_channels):
                for run in range(scn.n_runs):
                    w0_map[(idx, ch, run)] = w0
        else:
            for ch in range(scn.n_channels):
                for run in range(scn.n_runs):
                    w0_map[(idx, ch, run)] = draw_weights(
                        q_lin, derive_seed(scn.base_seed, 55, idx, ch, run)
                    )

    cells = [
        (power, ch, run)
        for power in scn.leakage_sweep_db
        for ch in range(scn.n_channels)
        for run in range(scn.n_runs)
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(
                pool.map(
                    _run_cell_star,
                    [(scn, p, c, r, whiteners, w0_map) for p, c, r in cells],
                )
            )
    else:
        results = [_run_cell(scn, p, c, r, whiteners, w0_map) for p, c, r in cells]

    rec = MetricsRecord(nmse_leakage_db=scn.nmse_leakage_db)
    labels = [spec.label for spec in scn.algorithms]
    by_power: dict = {}
    nmse_acc: dict = {}
    nmse_cnt: dict = {}
    dict_acc: dict = {}
    dict_cnt: dict = {}
    clock: dict = {}
    for (power, ch, run), res in zip(cells, results):
        slot = by_power.setdefault(power, {"none": []})
        slot["none"].append(res["none"])
        for label, entry in res["algos"].items():
            if entry.get("diverged"):
                rec.diverged[(power, label)] = rec.diverged.get((power, label), 0) + 1
                continue
            slot.setdefault(label, []).append(entry["sinr"])
            if "resid2_norm" in entry:
                acc = nmse_acc.setdefault(label, np.zeros_like(entry["resid2_norm"]))
                acc += entry["resid2_norm"]
                nmse_cnt[label] = nmse_cnt.get(label, 0) + 1
            if "dict_trace" in entry:
                acc = dict_acc.setdefault(label, np.zeros_like(entry["dict_trace"]))
                acc += entry["dict_trace"]
                dict_cnt[label] = dict_cnt.get(label, 0) + 1
            if "psd_parts" in entry:
                rec.psd_rows = entry["psd_parts"]
            tot, steps = clock.get(label, (0.0, 0))
            clock[label] = (tot + entry["elapsed"], steps + entry["steps"])

    for power in scn.leakage_sweep_db:
        slot = by_power[power]
        rec.sinr_rows.append(
            (power, "none", float(np.mean(slot["none"])), len(slot["none"]))
        )
        for label in labels:
            vals = slot.get(label, [])
            if vals:
                rec.sinr_rows.append((power, label, float(np.mean(vals)), len(vals)))
            else:
                rec.sinr_rows.append((power, label, float("nan"), 0))
    for label, acc in nmse_acc.items():
        rec.nmse_traces[label] = acc / nmse_cnt[label]
    for label, acc in dict_acc.items():
        rec.dict_traces[label] = acc / dict_cnt[label]
    for label, (tot, steps) in clock.items():
        rec.wallclock[label] = steps / tot if tot > 0 else float("nan")

    if scn.norm_study is not None:
        rec.wnorm_traces = run_norm_study(scn)
    return rec


def _run_cell_star(args):
    return _run_cell(*args)


def run_norm_study(scn: Scenario) -> dict:
    """Weight-norm evolution for penalty-based and limiter-based control."""
    study = scn.norm_study
    base_spec = next((s for s in scn.algorithms if s.name == "saf-real"), None)
    base = dict(base_spec.resolved(study.leakage_db)) if base_spec else {}
    x, comp, _ = _cell_compose(scn, study.leakage_db, 0, 0)
    xs, y_tot = x.samples, comp.y_tot.samples
    q_lin = int(base.get("q_lin", 16))
    whitener = build_whitener(scn, q_lin) if base.get("td", True) else None
    w0 = draw_weights(q_lin, derive_seed(scn.base_seed, 55, 0))
    mask = guard_mask(xs.size, scn.ul.symbol_len, int(base.get("guard", 32)))
    traces = {}
    for weight in study.constraint_weights:
        params = dict(base)
        params.update(
            norm="constrained",
            constraint_weight=weight,
            norm_target=study.constraint_target,
            norm_p=study.norm_p,
        )
        res = drive_saf_real(params, xs, y_tot, mask, whitener, w0, collect_wnorm=True)
        traces[f"constrained-w{weight:g}"] = res.wnorm
    params = dict(base)
    params.update(norm="limiter", norm_target=study.limiter_target, norm_p=study.norm_p)
    res = drive_saf_real(params, xs, y_tot, mask, whitener, w0, collect_wnorm=True)
    traces["limiter"] = res.wnorm
    return traces
