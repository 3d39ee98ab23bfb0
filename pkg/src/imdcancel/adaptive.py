"""Adaptive estimators for the even-order interference replica.

Two Wiener spline adaptive filters are implemented: one with a real-valued
curve output plus a single-tap scaler for the quadrature path, and one with
complex control points producing a complex output directly.  Both consist
of a complex FIR section, a fixed magnitude nonlinearity and a learnable
spline curve; weights and control points are adapted jointly by normalised
stochastic gradient descent, treating the complex weights through their
conjugate-coordinate (Wirtinger) derivatives.

Baselines: a quadratic LMS restricted to the squared-magnitude term, and
kernel RLS with approximate-linear-dependency sparsification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dsp import DctPipeline
from .spline import SplineGrid, identity_ctrl, locate

ABS_SQUARED = "abs2"
ABS = "abs"

_DENOM_FLOOR = 1e-30


class DivergenceError(RuntimeError):
    """Raised when filter state stops being finite; carries the step index."""

    def __init__(self, step: int):
        super().__init__(f"adaptive filter diverged at step {step}")
        self.step = step


# ---------------------------------------------------------------------------
# weight-norm control


def norm_constraint_grad(w: np.ndarray, p: int, target: float) -> np.ndarray:
    """Gradient of the squared norm penalty (||w||_p^p - target)^2 w.r.t. w*.

    For p = 1 the per-entry phase factor w_k/|w_k| is defined as 0 for
    vanishing entries (subgradient choice).
    """
    if p == 1:
        mags = np.abs(w)
        phases = np.where(mags > 1e-15, w / np.where(mags > 1e-15, mags, 1.0), 0.0)
        return (mags.sum() - target) * phases
    if p == 2:
        return 2.0 * (np.real(np.vdot(w, w)) - target) * w
    raise ValueError("norm order must be 1 or 2")


def _norm_pp(w: np.ndarray, p: int) -> float:
    if p == 1:
        return float(np.abs(w).sum())
    return float(np.real(np.vdot(w, w)))


def norm_limit(w: np.ndarray, p: int, target: float):
    """Halve the weights when ||w||_p^p has reached the target.

    Returns (possibly rescaled weights, whether rescaling happened).  Inside
    the adaptive loop the decision is taken on the previous iterate's norm
    so it can run in parallel with the update.
    """
    if p not in (1, 2):
        raise ValueError("norm order must be 1 or 2")
    if _norm_pp(w, p) < target:
        return w, False
    return w / 2.0, True


@dataclass
class NormConstraint:
    """Penalty-based norm control folded into every update."""

    weight: float  # penalty weighting
    target: float  # desired ||w||_p^p
    p: int = 1


@dataclass
class NormLimiter:
    """Heuristic halving of the weights when the norm target is exceeded."""

    target: float
    p: int = 1


# ---------------------------------------------------------------------------
# single-tap quadrature-path scaler


@dataclass
class QScaler:
    """Estimates the real gain tying the Q-path interference to the I-path.

    Modes: "nlms" (normalised single-tap LMS) or "wls" (ratio of weighted
    cross/auto accumulators, both starting from zero).
    """

    mode: str = "wls"
    step_size: float = 0.5
    reg: float = 1e-3
    forget: float = 0.9998
    gain: float = 0.0
    r_cross: float = 0.0
    r_auto: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("nlms", "wls"):
            raise ValueError("scaler mode must be 'nlms' or 'wls'")


def scaler_step(sc: QScaler, y_q: float, y_hat: float):
    """One scaler update; returns (updated gain, quadrature error)."""
    if sc.mode == "nlms":
        e_q = y_q - sc.gain * y_hat
        denom = y_hat * y_hat + sc.reg
        if denom > _DENOM_FLOOR:
            sc.gain += sc.step_size / denom * e_q * y_hat
    else:
        sc.r_cross += sc.forget * y_q * y_hat
        sc.r_auto += sc.forget * y_hat * y_hat
        if sc.r_auto > _DENOM_FLOOR:
            sc.gain = sc.r_cross / sc.r_auto
        e_q = y_q - sc.gain * y_hat
    return sc.gain, e_q


# ---------------------------------------------------------------------------
# Wiener spline adaptive filters


@dataclass
class SafConfig:
    """Static configuration of one Wiener spline adaptive filter."""

    q_lin: int
    grid: SplineGrid
    nonlinearity: str = ABS_SQUARED
    step_size: float = 0.1  # base step, in [0, 1]
    reg: float = 0.1  # denominator regulariser, > 0
    ctrl_coupling: float = 50.0  # relative control-point rate, >= 0
    constraint: NormConstraint | None = None
    limiter: NormLimiter | None = None
    whitener: DctPipeline | None = None
    out_taps: np.ndarray = None  # real-output variant: output FIR
    out_tap_min: float = 0.0  # drop smaller |taps| from gradient sums
    out_gain: float = 1.0  # complex-output variant: passband gain
    out_delay: int = 0  # complex-output variant: group delay
    guard_samples: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.step_size <= 1.0:
            raise ValueError("base step size must lie in [0, 1]")
        if self.reg <= 0:
            raise ValueError("regulariser must be positive")
        if self.ctrl_coupling < 0:
            raise ValueError("control-point coupling must be non-negative")
        if self.nonlinearity not in (ABS_SQUARED, ABS):
            raise ValueError("nonlinearity must be 'abs2' or 'abs'")
        if self.out_delay < 0:
            raise ValueError("output delay must be non-negative")
        if self.out_taps is None:
            self.out_taps = np.array([1.0])
        self.out_taps = np.asarray(self.out_taps, dtype=np.float64)
        if self.whitener is not None and self.whitener.size != self.q_lin:
            raise ValueError("whitener size must match the filter length")
        # output sum is always exact; the threshold only prunes gradient terms
        self.grad_taps = [
            (k, float(h))
            for k, h in enumerate(self.out_taps)
            if h != 0.0 and abs(h) >= self.out_tap_min
        ]
        self.output_taps = [(k, float(h)) for k, h in enumerate(self.out_taps) if h != 0.0]

    @property
    def ring_depth(self) -> int:
        return max(len(self.out_taps), self.out_delay + 1)


class SafState:
    """Mutable state of one filter instance (single-owner, sequential)."""

    __slots__ = (
        "w",
        "ctrl",
        "xbuf",
        "xpos",
        "ring_phi",
        "ring_dfac",
        "ring_zpc",
        "ring_x",
        "ring_xn2",
        "ring_seg",
        "ring_btnu",
        "n",
        "clamp_count",
        "halvings",
        "scaler",
    )

    def __init__(self, cfg: SafConfig, w0: np.ndarray, ctrl0: np.ndarray,
                 scaler: QScaler | None = None):
        depth = cfg.ring_depth
        self.w = np.array(w0, dtype=np.complex128)
        self.ctrl = np.array(ctrl0)
        self.xbuf = np.zeros(2 * cfg.q_lin, dtype=np.complex128)
        self.xpos = 0
        self.ring_phi = np.zeros(depth, dtype=self.ctrl.dtype)
        self.ring_dfac = np.zeros(depth, dtype=self.ctrl.dtype)
        self.ring_zpc = np.zeros(depth, dtype=np.complex128)
        self.ring_x = np.zeros((depth, cfg.q_lin), dtype=np.complex128)
        self.ring_xn2 = np.zeros(depth)
        self.ring_seg = np.full(depth, cfg.grid.order - 1, dtype=np.int64)
        self.ring_btnu = np.zeros((depth, cfg.grid.order))
        self.n = 0
        self.clamp_count = 0
        self.halvings: list[int] = []
        self.scaler = scaler


def draw_weights(q_lin: int, seed: int, var: float = 0.01) -> np.ndarray:
    """Zero-mean complex Gaussian start weights with total variance `var`."""
    rng = np.random.default_rng(seed)
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(q_lin) + 1j * rng.standard_normal(q_lin))


def saf_real_init(cfg: SafConfig, seed: int = 0, w0: np.ndarray | None = None,
                  scaler: QScaler | None = None) -> SafState:
    if w0 is None:
        w0 = draw_weights(cfg.q_lin, seed)
    return SafState(cfg, w0, identity_ctrl(cfg.grid), scaler)


def saf_complex_init(cfg: SafConfig, seed: int = 0,
                     w0: np.ndarray | None = None) -> SafState:
    if w0 is None:
        w0 = draw_weights(cfg.q_lin, seed)
    return SafState(cfg, w0, identity_ctrl(cfg.grid).astype(np.complex128))


class StepDiag(NamedTuple):
    step: float  # normalised step actually applied
    wnorm: float  # l1 norm of the weights after the step
    bound: float  # step * gradient-energy product, <= 1 by construction
    clamped: bool  # curve input fell outside the representable range


def _push_sample(state: SafState, cfg: SafConfig, x_new: complex) -> bool:
    """Advance the delay line and the per-sample evaluation ring by one.

    Returns whether the curve input of this sample had to be clamped.
    """
    grid = cfg.grid
    q_lin = cfg.q_lin
    pos = state.xpos - 1
    if pos < 0:
        pos = q_lin - 1
    state.xpos = pos
    state.xbuf[pos] = x_new
    state.xbuf[pos + q_lin] = x_new
    x_vec = state.xbuf[pos : pos + q_lin]
    if cfg.whitener is not None:
        x_vec = cfg.whitener.combined @ x_vec

    s = np.dot(state.w, x_vec).item()
    if cfg.nonlinearity == ABS_SQUARED:
        r = (s.real * s.real + s.imag * s.imag)
        zpc = s
    else:
        mag = abs(s)
        r = mag
        zpc = s / (2.0 * mag) if mag > 0.0 else 0.0j

    locus = locate(grid, r)
    if locus.clamped:
        state.clamp_count += 1
    seg = locus.seg
    frac = locus.frac
    order = grid.order
    c = grid.basis @ state.ctrl[seg - order + 1 : seg + 1]
    phi = c[0]
    for k in range(1, order):
        phi = phi * frac + c[k]
    if locus.clamped or order == 1:
        dfac = 0.0
    else:
        dfac = (order - 1) * c[0]
        for k in range(1, order - 1):
            dfac = dfac * frac + (order - 1 - k) * c[k]
    powers = np.empty(order)
    powers[order - 1] = 1.0
    for k in range(order - 2, -1, -1):
        powers[k] = powers[k + 1] * frac
    head = state.n % cfg.ring_depth
    state.ring_phi[head] = phi
    state.ring_dfac[head] = dfac
    state.ring_zpc[head] = zpc
    state.ring_x[head, :] = x_vec
    state.ring_xn2[head] = np.real(np.vdot(x_vec, x_vec))
    state.ring_seg[head] = seg
    state.ring_btnu[head, :] = grid.basis_t @ powers
    return locus.clamped


def _real_output(state: SafState, cfg: SafConfig) -> float:
    depth = cfg.ring_depth
    head = (state.n - 1) % depth
    y_hat = 0.0
    for k, h in cfg.output_taps:
        y_hat += h * state.ring_phi[(head - k) % depth]
    return float(np.real(y_hat))


def real_gradients(state: SafState, cfg: SafConfig):
    """Output and error-slope terms of the real-output filter at this step.

    Returns (y_hat, g_ctrl, g_w, ctrl_energy, w_energy, lo, hi) where g_ctrl
    is the dense control-point slope of the error, g_w the conjugate-domain
    weight slope, and [lo, hi) the touched control-point window.
    """
    grid = cfg.grid
    depth = cfg.ring_depth
    head = (state.n - 1) % depth
    order = grid.order
    y_hat = 0.0
    for k, h in cfg.output_taps:
        y_hat += h * state.ring_phi[(head - k) % depth]
    g_ctrl = np.zeros(cfg.grid.n_ctrl)
    g_w = np.zeros(cfg.q_lin, dtype=np.complex128)
    lo, hi = cfg.grid.n_ctrl, 0
    inv_dr = 1.0 / grid.dr
    for k, h in cfg.grad_taps:
        idx = (head - k) % depth
        sl = int(state.ring_seg[idx]) - order + 1
        g_ctrl[sl : sl + order] -= h * state.ring_btnu[idx]
        lo = min(lo, sl)
        hi = max(hi, sl + order)
        coef = -h * inv_dr * state.ring_dfac[idx] * state.ring_zpc[idx]
        if coef != 0.0:
            g_w += coef * np.conj(state.ring_x[idx])
    ctrl_energy = float(np.dot(g_ctrl[lo:hi], g_ctrl[lo:hi])) if hi > lo else 0.0
    w_energy = float(np.real(np.vdot(g_w, g_w)))
    return y_hat, g_ctrl, g_w, ctrl_energy, w_energy, lo, hi


def saf_real_step(state: SafState, cfg: SafConfig, x_new: complex, y_i: float,
                  y_q: float | None = None, adapt: bool = True):
    """One sample of the real-output filter.

    Returns (replica, error, diagnostics).  The replica is complex: the
    curve output plus j times the scaler gain times the curve output when a
    quadrature scaler is attached.  With `adapt` false the output is still
    produced but all parameters stay untouched.
    """
    clamped_now = _push_sample(state, cfg, x_new)
    state.n += 1
    step = 0.0
    bound = 0.0
    if adapt:
        y_hat, g_ctrl, g_w, g_energy, w_energy, lo, hi = real_gradients(state, cfg)
        y_hat = float(np.real(y_hat))
        e = y_i - y_hat
        tau = cfg.ctrl_coupling
        denom = 2.0 * w_energy + tau * g_energy + cfg.reg
        step = cfg.step_size / max(denom, _DENOM_FLOOR)
        bound = step * (2.0 * w_energy + tau * g_energy)
        if cfg.limiter is not None:
            exceeded = _norm_pp(state.w, cfg.limiter.p) >= cfg.limiter.target
        if hi > lo and tau != 0.0:
            state.ctrl[lo:hi] -= (2.0 * tau * step * e) * g_ctrl[lo:hi]
        w_delta = (2.0 * e) * g_w
        if cfg.constraint is not None:
            w_delta = w_delta + cfg.constraint.weight * norm_constraint_grad(
                state.w, cfg.constraint.p, cfg.constraint.target
            )
        state.w -= step * w_delta
        if cfg.limiter is not None and exceeded:
            state.w /= 2.0
            state.halvings.append(state.n)
        if state.scaler is not None and y_q is not None:
            scaler_step(state.scaler, y_q, y_hat)
    else:
        y_hat = _real_output(state, cfg)
        e = y_i - y_hat
    gain = state.scaler.gain if state.scaler is not None else 0.0
    replica = complex(y_hat, gain * y_hat)
    wnorm = float(np.abs(state.w).sum())
    if not (math.isfinite(e) and math.isfinite(wnorm)):
        raise DivergenceError(state.n)
    return replica, e, StepDiag(step, wnorm, bound, clamped_now)


def complex_gradients(state: SafState, cfg: SafConfig, e: complex):
    """Update directions of the complex-output filter for a given error."""
    grid = cfg.grid
    depth = cfg.ring_depth
    idx = (state.n - 1 - cfg.out_delay) % depth
    order = grid.order
    h_g = cfg.out_gain
    btnu = state.ring_btnu[idx]
    sl = int(state.ring_seg[idx]) - order + 1
    g_ctrl_seg = -h_g * btnu
    g_energy = float(h_g * h_g * np.dot(btnu, btnu))
    dfac = state.ring_dfac[idx]
    zpc = state.ring_zpc[idx]
    xv = state.ring_x[idx]
    scale = 4.0 / (grid.dr * grid.dr) * h_g * h_g * abs(zpc) ** 2 * state.ring_xn2[idx]
    b_both = 2.0 * cfg.ctrl_coupling * g_energy + scale * abs(dfac) ** 2
    coef = -(2.0 / grid.dr) * h_g * np.real(np.conj(e) * dfac) * zpc
    g_w = coef * np.conj(xv)
    return g_ctrl_seg, sl, g_energy, g_w, b_both


def saf_complex_step(state: SafState, cfg: SafConfig, x_new: complex, y: complex,
                     adapt: bool = True):
    """One sample of the complex-output filter (complex control points).

    The output filter is modelled by its passband gain and group delay, so
    the replica is out_gain times the curve output out_delay samples ago.
    """
    clamped_now = _push_sample(state, cfg, x_new)
    state.n += 1
    depth = cfg.ring_depth
    idx = (state.n - 1 - cfg.out_delay) % depth
    y_hat = complex(cfg.out_gain * state.ring_phi[idx])
    e = y - y_hat
    step = 0.0
    bound = 0.0
    if adapt:
        g_ctrl_seg, sl, g_energy, g_w, b_both = complex_gradients(state, cfg, e)
        denom = b_both + cfg.reg
        step = 2.0 * cfg.step_size / max(denom, _DENOM_FLOOR)
        bound = 0.5 * step * b_both
        if cfg.limiter is not None:
            exceeded = _norm_pp(state.w, cfg.limiter.p) >= cfg.limiter.target
        if cfg.ctrl_coupling != 0.0:
            state.ctrl[sl : sl + cfg.grid.order] -= (
                cfg.ctrl_coupling * step * e
            ) * g_ctrl_seg
        w_delta = g_w
        if cfg.constraint is not None:
            w_delta = w_delta + cfg.constraint.weight * norm_constraint_grad(
                state.w, cfg.constraint.p, cfg.constraint.target
            )
        state.w -= step * w_delta
        if cfg.limiter is not None and exceeded:
            state.w /= 2.0
            state.halvings.append(state.n)
    wnorm = float(np.abs(state.w).sum())
    if not (math.isfinite(e.real) and math.isfinite(e.imag) and math.isfinite(wnorm)):
        raise DivergenceError(state.n)
    return y_hat, e, StepDiag(step, wnorm, bound, clamped_now)


def td_transform(pipeline: DctPipeline, x_vec: np.ndarray) -> np.ndarray:
    """Rotate and power-normalise one input vector (decorrelating front-end)."""
    return pipeline.apply(np.asarray(x_vec, dtype=np.complex128))


# ---------------------------------------------------------------------------
# quadratic LMS baseline (squared-magnitude model only)


@dataclass
class QuadLmsConfig:
    """Baseline limited to the |.|^2 interference term.

    The curve section is frozen to the identity so only the FIR weights
    adapt; the receiver's DC notch is replicated on the output and the
    quadrature path is served by the single-tap scaler.  `sign_i` is the
    known sign of the in-phase quadratic coefficient.
    """

    q_lin: int = 16
    step_size: float = 0.02
    reg: float = 0.1
    sign_i: float = 1.0
    guard_samples: int = 0

    def __post_init__(self) -> None:
        if self.reg <= 0:
            raise ValueError("regulariser must be positive")
        if self.sign_i not in (-1.0, 1.0):
            raise ValueError("sign_i must be +1 or -1")


class QuadLmsState:
    __slots__ = ("w", "xbuf", "xpos", "notch_carry", "grad_carry", "scaler", "n")

    def __init__(self, cfg: QuadLmsConfig, w0: np.ndarray, scaler: QScaler | None = None):
        self.w = np.array(w0, dtype=np.complex128)
        self.xbuf = np.zeros(2 * cfg.q_lin, dtype=np.complex128)
        self.xpos = 0
        self.notch_carry = 0.0
        self.grad_carry = np.zeros(cfg.q_lin, dtype=np.complex128)
        self.scaler = scaler if scaler is not None else QScaler()
        self.n = 0


def quad_lms_init(cfg: QuadLmsConfig, seed: int = 0, w0: np.ndarray | None = None,
                  scaler: QScaler | None = None) -> QuadLmsState:
    if w0 is None:
        w0 = draw_weights(cfg.q_lin, seed)
    return QuadLmsState(cfg, w0, scaler)


def quad_lms_step(state: QuadLmsState, cfg: QuadLmsConfig, x_new: complex,
                  y_i: float, y_q: float | None = None, adapt: bool = True):
    """One normalised quadratic-LMS sample; returns (replica, error, diag)."""
    q_lin = cfg.q_lin
    pos = state.xpos - 1
    if pos < 0:
        pos = q_lin - 1
    state.xpos = pos
    state.xbuf[pos] = x_new
    state.xbuf[pos + q_lin] = x_new
    x_vec = state.xbuf[pos : pos + q_lin]
    state.n += 1
    s = np.dot(state.w, x_vec).item()
    phi = cfg.sign_i * (s.real * s.real + s.imag * s.imag)
    # in-loop replica of the receiver DC notch
    y_hat = phi + state.notch_carry
    state.notch_carry = 0.998 * y_hat - phi
    e = y_i - y_hat
    step = 0.0
    # error slope seen through the notch: filter the regressor the same way
    g_inst = (-cfg.sign_i * s) * np.conj(x_vec)
    g_w = g_inst + state.grad_carry
    state.grad_carry = 0.998 * g_w - g_inst
    if adapt:
        w_energy = float(np.real(np.vdot(g_w, g_w)))
        step = cfg.step_size / max(2.0 * w_energy + cfg.reg, _DENOM_FLOOR)
        state.w -= (step * 2.0 * e) * g_w
        if y_q is not None:
            scaler_step(state.scaler, y_q, y_hat)
    gain = state.scaler.gain
    replica = complex(y_hat, gain * y_hat)
    wnorm = float(np.abs(state.w).sum())
    if not (math.isfinite(e) and math.isfinite(wnorm)):
        raise DivergenceError(state.n)
    return replica, e, StepDiag(step, wnorm, 0.0, False)


# ---------------------------------------------------------------------------
# kernel RLS with ALD sparsification


@dataclass
class KrlsConfig:
    """Gaussian-kernel RLS over complex input vectors."""

    kernel_std: float = 10.0
    ald_threshold: float = 2e-5
    max_dict: int = 700

    def __post_init__(self) -> None:
        if self.kernel_std <= 0:
            raise ValueError("kernel width must be positive")
        if self.ald_threshold <= 0:
            raise ValueError("ALD threshold must be positive")


class KrlsState:
    """Growing dictionary, inverse kernel matrix and complex weights."""

    __slots__ = ("dict_mat", "alpha", "kinv", "proj", "n")

    def __init__(self, dim: int):
        self.dict_mat = np.zeros((0, dim), dtype=np.complex128)
        self.alpha = np.zeros(0, dtype=np.complex128)
        self.kinv = np.zeros((0, 0))
        self.proj = np.zeros((0, 0))
        self.n = 0

    @property
    def dict_size(self) -> int:
        return self.alpha.size


def kernel_eval(cfg: KrlsConfig, points: np.ndarray, x_vec: np.ndarray) -> np.ndarray:
    """Gaussian kernel of complex vectors: exp(-||a-b||^2 / (2 std^2))."""
    diff = points - x_vec
    d2 = np.einsum("ij,ij->i", diff, diff.conj()).real
    return np.exp(-d2 / (2.0 * cfg.kernel_std**2))


def krls_step(state: KrlsState, cfg: KrlsConfig, x_vec: np.ndarray, y: complex,
              train: bool = True):
    """One kernel-RLS sample; grows the dictionary when the input is novel.

    The projection residual decides admission; a numerically non-positive
    residual is treated as non-admission so the inverse kernel matrix keeps
    its definiteness.
    """
    x_vec = np.asarray(x_vec, dtype=np.complex128)
    state.n += 1
    m = state.dict_size
    if m == 0:
        if train:
            state.dict_mat = x_vec[None, :].copy()
            state.alpha = np.array([y], dtype=np.complex128)
            state.kinv = np.array([[1.0]])
            state.proj = np.array([[1.0]])
        return 0.0j, complex(y)
    k_vec = kernel_eval(cfg, state.dict_mat, x_vec)
    y_hat = complex(np.dot(k_vec, state.alpha))
    e = y - y_hat
    if not train:
        return y_hat, e
    a = state.kinv @ k_vec
    delta = 1.0 - float(np.dot(k_vec, a))
    if delta > cfg.ald_threshold and m < cfg.max_dict:
        inv_d = 1.0 / delta
        kinv = np.empty((m + 1, m + 1))
        kinv[:m, :m] = state.kinv + inv_d * np.outer(a, a)
        kinv[:m, m] = -inv_d * a
        kinv[m, :m] = -inv_d * a
        kinv[m, m] = inv_d
        proj = np.zeros((m + 1, m + 1))
        proj[:m, :m] = state.proj
        proj[m, m] = 1.0
        alpha = np.empty(m + 1, dtype=np.complex128)
        alpha[:m] = state.alpha - a * (inv_d * e)
        alpha[m] = inv_d * e
        state.dict_mat = np.vstack((state.dict_mat, x_vec[None, :]))
        state.kinv = kinv
        state.proj = proj
        state.alpha = alpha
    else:
        pa = state.proj @ a
        qv = pa / (1.0 + float(np.dot(a, pa)))
        state.proj = state.proj - np.outer(qv, pa)
        state.alpha = state.alpha + (state.kinv @ qv) * e
    if not np.isfinite(e.real) or not np.isfinite(e.imag):
        raise DivergenceError(state.n)
    return y_hat, e


def krls_predict(state: KrlsState, cfg: KrlsConfig, x_mat: np.ndarray) -> np.ndarray:
    """Batch prediction with frozen weights for a stack of input vectors."""
    n = x_mat.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    if state.dict_size == 0:
        return out
    chunk = max(1, (1 << 21) // max(1, state.dict_size * x_mat.shape[1]))
    for lo in range(0, n, chunk):
        blk = x_mat[lo : lo + chunk]
        diff = blk[:, None, :] - state.dict_mat[None, :, :]
        d2 = np.einsum("abj,abj->ab", diff, diff.conj()).real
        out[lo : lo + chunk] = np.exp(-d2 / (2.0 * cfg.kernel_std**2)) @ state.alpha
    return out
