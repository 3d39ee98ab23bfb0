"""Uniform spline curves with hardcoded basis matrices.

A curve is described by a uniform knot grid (lower limit, spacing, number of
control points, order) plus a control-point vector, which may be real or
complex.  Evaluation works on a normalised abscissa in [0, 1) and a segment
index; the segment polynomial is evaluated with Horner's scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BSPLINE = "bspline"
CATMULL_ROM = "catmull-rom"

_BSPLINE_BASES = {
    1: np.array([[1.0]]),
    2: np.array([[-1.0, 1.0], [1.0, 0.0]]),
    3: np.array([[0.5, -1.0, 0.5], [-1.0, 1.0, 0.0], [0.5, 0.5, 0.0]]),
    4: np.array(
        [
            [-1.0, 3.0, -3.0, 1.0],
            [3.0, -6.0, 3.0, 0.0],
            [-3.0, 0.0, 3.0, 0.0],
            [1.0, 4.0, 1.0, 0.0],
        ]
    )
    / 6.0,
}

_CATMULL_ROM_BASIS = (
    np.array(
        [
            [-1.0, 3.0, -3.0, 1.0],
            [2.0, -5.0, 4.0, -1.0],
            [-1.0, 0.0, 1.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
        ]
    )
    / 2.0
)


def basis_matrix(kind: str, order: int) -> np.ndarray:
    """Return the order x order polynomial basis matrix for a spline family."""
    if kind == BSPLINE:
        if order not in _BSPLINE_BASES:
            raise ValueError(f"unsupported B-spline order {order}")
        return _BSPLINE_BASES[order].copy()
    if kind == CATMULL_ROM:
        if order != 4:
            raise ValueError("Catmull-Rom splines are only defined for order 4")
        return _CATMULL_ROM_BASIS.copy()
    raise ValueError(f"unknown spline kind {kind!r}")


@dataclass
class SplineGrid:
    """Uniform knot layout shared by all curves of one adaptive filter.

    `r_min` is the lower knot limit, `dr` the knot spacing.  The valid
    segment index range is [order-1, n_ctrl-1]; inputs mapping outside are
    clamped by :func:`locate`.
    """

    r_min: float
    dr: float
    n_ctrl: int
    order: int
    kind: str = BSPLINE
    basis: np.ndarray = field(init=False)
    basis_t: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.dr <= 0:
            raise ValueError("knot spacing must be positive")
        if self.n_ctrl <= self.order:
            raise ValueError("need more control points than the spline order")
        self.basis = basis_matrix(self.kind, self.order)
        self.basis_t = np.ascontiguousarray(self.basis.T)

    @property
    def r_max(self) -> float:
        """Upper end of the representable input range."""
        return self.r_min + self.n_ctrl * self.dr


@dataclass
class SplineLocus:
    """Normalised abscissa and segment index for one curve evaluation."""

    frac: float
    seg: int
    clamped: bool = False


_ONE_MINUS_ULP = float(np.nextafter(1.0, 0.0))


def locate(grid: SplineGrid, r: float) -> SplineLocus:
    """Map a curve input to (normalised abscissa, segment index).

    Both quantities are derived from the same scaled offset (r - r_min)/dr
    so they stay consistent under rounding; for a grid-aligned r_min the
    abscissa equals the fractional part of r/dr.  Out-of-range inputs
    saturate onto the first or last valid segment and are flagged, so
    callers can suppress derivative-based updates there.
    """
    if not np.isfinite(r):
        raise ValueError("spline input must be finite")
    lo = grid.order - 1
    hi = grid.n_ctrl - 1
    t = (r - grid.r_min) / grid.dr
    raw = np.floor(t)
    if raw < lo:
        return SplineLocus(0.0, lo, True)
    if raw > hi:
        return SplineLocus(_ONE_MINUS_ULP, hi, True)
    return SplineLocus(float(t - raw), int(raw), False)


def ctrl_segment(grid: SplineGrid, ctrl: np.ndarray, seg: int) -> np.ndarray:
    """View of the `order` control points feeding segment `seg`."""
    return ctrl[seg - grid.order + 1 : seg + 1]


def poly_coeffs(grid: SplineGrid, ctrl: np.ndarray, seg: int) -> np.ndarray:
    """Segment polynomial coefficients (highest power of the abscissa first)."""
    return grid.basis @ ctrl_segment(grid, ctrl, seg)


def eval_curve(grid: SplineGrid, ctrl: np.ndarray, locus: SplineLocus):
    """Evaluate the curve; result dtype follows the control points."""
    c = poly_coeffs(grid, ctrl, locus.seg)
    acc = c[0]
    for k in range(1, grid.order):
        acc = acc * locus.frac + c[k]
    return acc


def eval_deriv(grid: SplineGrid, ctrl: np.ndarray, locus: SplineLocus):
    """Derivative of the segment polynomial with respect to the normalised
    abscissa (callers divide by the knot spacing for a true slope)."""
    q = grid.order
    if q == 1:
        return 0.0 * ctrl[0]
    c = poly_coeffs(grid, ctrl, locus.seg)
    acc = (q - 1) * c[0]
    for k in range(1, q - 1):
        acc = acc * locus.frac + (q - 1 - k) * c[k]
    return acc


def identity_ctrl(grid: SplineGrid) -> np.ndarray:
    """Control points reproducing the identity map over the grid domain.

    Point i sits at the abscissa r_min + (i + order/2) * dr, which makes the
    curve follow S(r) = r (exactly for interpolating kinds, to linear
    precision for B-splines).
    """
    i = np.arange(grid.n_ctrl, dtype=np.float64)
    return grid.r_min + (i + grid.order / 2.0) * grid.dr
