"""Digital cancellation of even-order intermodulation self-interference.

Library + CLI harness: complex-baseband signal model (leakage, Rapp PA,
even-order products, DC notch), spline-based Wiener adaptive cancellers,
quadratic-LMS and kernel-RLS baselines, and scenario runners producing
SINR / NMSE / PSD studies.
"""

from .dsp import (
    ComplexSeq,
    DctPipeline,
    FirFilter,
    NotchState,
    awgn,
    build_dct_whitener,
    dct_matrix,
    delay_line_covariance,
    fir_convolve,
    mean_power_db,
    notch_apply,
    welch_psd,
)
from .spline import (
    BSPLINE,
    CATMULL_ROM,
    SplineGrid,
    SplineLocus,
    basis_matrix,
    eval_curve,
    eval_deriv,
    identity_ctrl,
    locate,
)
from .waveform import (
    DlWaveformConfig,
    RappPa,
    UlWaveformConfig,
    crest_to_xmax,
    gen_downlink,
    gen_uplink,
    papr_db,
    rapp_apply,
    symbol_boundaries,
)
from .interference import (
    GammaTable,
    ImdCoefficients,
    LeakageChannel,
    RxComposition,
    compose_rx,
    default_gamma_table,
    gen_leakage,
    imd_synthesize,
)
from .adaptive import (
    DivergenceError,
    KrlsConfig,
    KrlsState,
    NormConstraint,
    NormLimiter,
    QScaler,
    QuadLmsConfig,
    QuadLmsState,
    SafConfig,
    SafState,
    StepDiag,
    draw_weights,
    krls_predict,
    krls_step,
    norm_constraint_grad,
    norm_limit,
    quad_lms_init,
    quad_lms_step,
    saf_complex_init,
    saf_complex_step,
    saf_real_init,
    saf_real_step,
    scaler_step,
    td_transform,
)

__version__ = "0.1.0"
