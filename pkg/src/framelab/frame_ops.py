"""Synthesis/analysis machinery and frame verification for weighted systems.

The central objects: the block synthesis operator T mapping the direct sum of
the local coordinate spaces into the ambient space (block j equals
``v_j pi_Wj Lj*``), the frame operator ``S = T T*``, and the verdicts that a
system is Bessel / a k-relative frame / Parseval.  The optimal lower bound for
an operator k is computed through the minimal-norm solution of ``T u = k`` and
is range-inclusion driven: a system is a k-relative frame exactly when
``ran(k)`` sits inside ``ran(T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BoundedOperator, GFusionSystem, projection
from .numerics import (
    DEFAULT_TOL,
    DouglasFactorization,
    InputError,
    InternalConsistencyError,
    NotAFrameError,
    ToleranceProfile,
    adjoint,
    douglas_factor,
    inner,
    operator_norm,
    orthonormalize,
    psd_check,
    unit_probes,
)

__all__ = [
    "SynthesisOperator",
    "FrameBounds",
    "FrameReport",
    "synthesis",
    "frame_operator",
    "verify_k_g_fusion",
    "optimal_bounds",
    "RestrictedInverse",
    "restricted_inverse",
    "ReconstructionReport",
    "reconstruction_check",
    "CrossFrameReport",
    "cross_frame_check",
]


@dataclass(frozen=True)
class FrameBounds:
    """A (lower, upper) bound pair; lower <= upper whenever both are finite."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, up = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(up):
            raise InputError("bounds must not be NaN")
        if lo < 0.0 or up < 0.0:
            raise InputError("bounds must be nonnegative")
        if math.isfinite(lo) and math.isfinite(up) and lo > up * (1.0 + 1e-12) + 1e-12:
            raise InputError(f"lower bound {lo} exceeds upper bound {up}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)


@dataclass
class SynthesisOperator:
    """Dense block synthesis matrix with per-member column offsets."""

    matrix: np.ndarray
    block_offsets: tuple

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def total_local_dim(self) -> int:
        return self.matrix.shape[1]

    def analysis(self) -> np.ndarray:
        return adjoint(self.matrix)

    def block(self, j: int) -> np.ndarray:
        start, stop = self.block_offsets[j]
        return self.matrix[:, start:stop]


def synthesis(system: GFusionSystem) -> SynthesisOperator:
    """Assemble T with column block j equal to v_j pi_Wj Lj* (ascending j)."""
    n = system.dim
    dims = system.local_dims()
    total = int(sum(dims))
    dtype = np.result_type(system.space.dtype,
                           *(op.matrix.dtype for _, op in system.members))
    t = np.zeros((n, total), dtype=dtype)
    offsets = []
    start = 0
    for (sub, op) in system.members:
        stop = start + op.local_dim
        t[:, start:stop] = sub.weight * (projection(sub) @ adjoint(op.matrix))
        offsets.append((start, stop))
        start = stop
    return SynthesisOperator(t, tuple(offsets))


def frame_operator(system: GFusionSystem) -> np.ndarray:
    """S = sum_j v_j^2 pi_Wj Lj* Lj pi_Wj, summed in ascending j."""
    n = system.dim
    dtype = np.result_type(system.space.dtype,
                           *(op.matrix.dtype for _, op in system.members))
    s = np.zeros((n, n), dtype=dtype)
    for sub, op in system.members:
        p = projection(sub)
        lp = op.matrix @ p
        s = s + (sub.weight**2) * (adjoint(lp) @ lp)
    return s


@dataclass
class FrameReport:
    """Verdicts and residuals from verifying a system against an operator k.

    ``is_bessel`` always holds in finite dimension and carries the optimal
    upper bound; ``is_frame`` is the range-inclusion verdict ran(k) in ran(T);
    ``is_parseval`` means S = k k* within tolerance.  ``optimal`` holds the
    optimal bound pair (lower is 0.0 when the system is not a k-frame).  When
    claimed bounds were supplied, ``claimed_lower_ok``/``claimed_upper_ok``
    record the PSD sandwich verdicts, else they are None.
    """

    is_bessel: bool
    is_frame: bool
    is_parseval: bool
    optimal: FrameBounds
    range_inclusion_residual: float
    parseval_residual: float
    tolerance: ToleranceProfile
    douglas: DouglasFactorization
    claimed: FrameBounds | None = None
    claimed_lower_ok: bool | None = None
    claimed_upper_ok: bool | None = None

    @property
    def claimed_valid(self) -> bool | None:
        if self.claimed is None:
            return None
        return bool(self.claimed_lower_ok and self.claimed_upper_ok)


def _require_compatible(system: GFusionSystem, k: BoundedOperator):
    if k.dim != system.dim:
        raise InputError(f"operator dimension {k.dim} != system dimension {system.dim}")


def verify_k_g_fusion(system: GFusionSystem, k: BoundedOperator,
                      claimed: FrameBounds | None = None,
                      tol: ToleranceProfile | None = None) -> FrameReport:
    """Full verification of the k-relative frame property.

    Bessel always holds on a finite family; the frame verdict is decided by
    the range-inclusion test ran(k) in ran(T); Parseval means S = k k*.
    The optimal lower bound is |u0|^-2 for the minimal-norm solution
    u0 = pinv(T) k, the optimal upper bound is |S|.
    """
    tol = tol or DEFAULT_TOL
    _require_compatible(system, k)
    if k.norm <= tol.rank_cutoff(1.0):
        raise InputError("operator k is numerically zero; the frame condition degenerates")
    t = synthesis(system)
    s = frame_operator(system)
    upper = operator_norm(s)
    dg = douglas_factor(k.matrix, t.matrix, tol)
    is_frame = dg.included
    kk = k.matrix @ adjoint(k.matrix)
    parseval_residual = operator_norm(s - kk)
    is_parseval = parseval_residual <= tol.for_scale(operator_norm(kk))
    if is_parseval and not is_frame:
        raise InternalConsistencyError(
            "Parseval verdict held while the range-inclusion verdict failed")
    lower = 1.0 / dg.lambda_min**2 if is_frame else 0.0
    if lower > upper * (1.0 + 1e-9) + tol.tau_abs:
        raise InternalConsistencyError(
            f"optimal lower bound {lower} exceeded upper bound {upper}")
    optimal = FrameBounds(min(lower, upper), upper)
    claimed_lower_ok = claimed_upper_ok = None
    if claimed is not None:
        claimed_lower_ok = psd_check(s - claimed.lower * kk, tol)
        claimed_upper_ok = psd_check(claimed.upper * np.eye(system.dim) - s, tol)
    return FrameReport(
        is_bessel=True,
        is_frame=bool(is_frame),
        is_parseval=bool(is_parseval),
        optimal=optimal,
        range_inclusion_residual=dg.range_residual,
        parseval_residual=float(parseval_residual),
        tolerance=tol,
        douglas=dg,
        claimed=claimed,
        claimed_lower_ok=claimed_lower_ok,
        claimed_upper_ok=claimed_upper_ok,
    )


def optimal_bounds(system: GFusionSystem, k: BoundedOperator,
                   tol: ToleranceProfile | None = None) -> FrameBounds:
    """Optimal bound pair for a k-relative frame, PSD-certified.

    Raises :class:`NotAFrameError` when ran(k) is not contained in ran(T).
    The returned lower bound A satisfies S - A k k* >= 0 while inflating A by
    a relative 1e-6 breaks positivity; the upper bound is |S| exactly.
    """
    tol = tol or DEFAULT_TOL
    report = verify_k_g_fusion(system, k, tol=tol)
    if not report.is_frame:
        raise NotAFrameError(
            f"range inclusion fails: residual {report.range_inclusion_residual:g} "
            "outside ran(T)")
    bounds = report.optimal
    s = frame_operator(system)
    kk = k.matrix @ adjoint(k.matrix)
    if not psd_check(s - bounds.lower * kk, tol):
        raise InternalConsistencyError(
            "optimal lower bound failed its own PSD certification")
    return bounds


@dataclass
class RestrictedInverse:
    """Inverse of the frame operator along ran(k).

    ``matrix`` maps S(ran k) back onto ran(k) and annihilates its orthogonal
    complement; ``range_basis`` spans ran(k), ``image_basis`` spans S(ran k).
    ``inverse_residual`` is the worst relative defect of X S g = g over probes
    g in ran(k); ``bound_slack_min`` the worst slack (most negative) of the
    two-sided quadratic-form bounds checked on probes in S(ran k).
    """

    matrix: np.ndarray
    range_basis: np.ndarray
    image_basis: np.ndarray
    inverse_residual: float
    bound_slack_min: float
    lower: float
    upper: float


def restricted_inverse(system: GFusionSystem, k: BoundedOperator,
                       tol: ToleranceProfile | None = None,
                       probes: int = 50) -> RestrictedInverse:
    """Construct X = B_k pinv(S B_k) and check the two-sided inverse bounds.

    For f in S(ran k) the quadratic form satisfies
    ``B^-1 |f|^2 <= <X f, f> <= A^-1 |pinv(k)|^2 |f|^2`` with (A, B) the
    optimal bounds; the worst probe slack is reported, not asserted.
    """
    tol = tol or DEFAULT_TOL
    bounds = optimal_bounds(system, k, tol)
    s = frame_operator(system)
    bk = k.range_basis(tol)
    if bk.shape[1] == 0:
        raise InputError("operator k is numerically zero; nothing to invert along")
    sbk = s @ bk
    x = bk @ np.linalg.pinv(sbk)
    image_basis = orthonormalize(sbk, tol)
    complex_field = np.iscomplexobj(s) or np.iscomplexobj(bk)
    r = bk.shape[1]
    coeffs = unit_probes(r, probes, complex_field=complex_field, seed=0xB0B)
    inverse_residual = 0.0
    for c in coeffs:
        g = bk @ c
        defect = np.linalg.norm(x @ (s @ g) - g) / max(np.linalg.norm(g), 1e-300)
        inverse_residual = max(inverse_residual, float(defect))
    kdag_norm = operator_norm(k.pinv(tol))
    slack_min = math.inf
    m = image_basis.shape[1]
    if m:
        coeffs = unit_probes(m, probes, complex_field=complex_field, seed=0xB0C)
        for c in coeffs:
            f = image_basis @ c
            quad = inner(x @ f, f).real
            nf2 = float(np.linalg.norm(f))**2
            slack_lo = quad - nf2 / bounds.upper
            slack_hi = (kdag_norm**2 / bounds.lower) * nf2 - quad
            slack_min = min(slack_min, float(slack_lo), float(slack_hi))
    return RestrictedInverse(
        matrix=x,
        range_basis=bk,
        image_basis=image_basis,
        inverse_residual=inverse_residual,
        bound_slack_min=float(slack_min),
        lower=bounds.lower,
        upper=bounds.upper,
    )


@dataclass
class ReconstructionReport:
    """Probe-level check of the quadratic reconstruction identity."""

    residual: float
    passed: bool
    projected: bool
    projection_distance: float


def reconstruction_check(system: GFusionSystem, k: BoundedOperator, f,
                         tol: ToleranceProfile | None = None) -> ReconstructionReport:
    """Check <k f, f> against the member-wise expansion through X.

    ``f`` is projected onto S(ran k) first when it does not already lie there;
    the report says whether that happened.
    """
    tol = tol or DEFAULT_TOL
    f = np.asarray(f).reshape(-1)
    if f.shape[0] != system.dim:
        raise InputError("probe vector has wrong dimension")
    ri = restricted_inverse(system, k, tol)
    p_img = ri.image_basis @ adjoint(ri.image_basis)
    f_used = p_img @ f
    distance = float(np.linalg.norm(f - f_used))
    projected = distance > tol.for_scale(float(np.linalg.norm(f)))
    kf = k.matrix @ f_used
    lhs = inner(kf, f_used)
    rhs = 0.0 + 0.0j
    for sub, op in system.members:
        p = projection(sub)
        term = ri.matrix @ (p @ (adjoint(op.matrix) @ (op.matrix @ (p @ kf))))
        rhs += (sub.weight**2) * inner(term, f_used)
    residual = abs(lhs - rhs)
    passed = residual <= tol.for_scale(1.0) * (1.0 + abs(lhs))
    return ReconstructionReport(float(residual), bool(passed), projected, distance)


@dataclass
class CrossFrameReport:
    """Outcome of the coupled-synthesis criterion T_Theta T_Lambda* = k*.

    When the premise holds, each system is certified a frame relative to the
    appropriate operator with lower bound the reciprocal of the other system's
    Bessel bound: S_Lambda >= B2^-1 k k* and S_Theta >= B1^-1 k* k.
    """

    premise_ok: bool
    premise_residual: float
    bessel_lambda: float
    bessel_theta: float
    lambda_lower: float | None = None
    theta_lower: float | None = None
    lambda_certified: bool | None = None
    theta_certified: bool | None = None


def cross_frame_check(lambda_system: GFusionSystem, theta_system: GFusionSystem,
                      k: BoundedOperator,
                      tol: ToleranceProfile | None = None) -> CrossFrameReport:
    tol = tol or DEFAULT_TOL
    _require_compatible(lambda_system, k)
    _require_compatible(theta_system, k)
    if lambda_system.local_dims() != theta_system.local_dims():
        raise InputError("systems must share their local coordinate dimensions blockwise")
    t_lambda = synthesis(lambda_system)
    t_theta = synthesis(theta_system)
    s_lambda = frame_operator(lambda_system)
    s_theta = frame_operator(theta_system)
    b1 = operator_norm(s_lambda)
    b2 = operator_norm(s_theta)
    premise_residual = operator_norm(t_theta.matrix @ t_lambda.analysis() - adjoint(k.matrix))
    premise_ok = premise_residual <= tol.for_scale(k.norm)
    report = CrossFrameReport(bool(premise_ok), float(premise_residual), float(b1), float(b2))
    if premise_ok:
        kk = k.matrix @ adjoint(k.matrix)
        ksk = adjoint(k.matrix) @ k.matrix
        report.lambda_lower = 1.0 / b2
        report.theta_lower = 1.0 / b1
        report.lambda_certified = psd_check(s_lambda - report.lambda_lower * kk, tol)
        report.theta_certified = psd_check(s_theta - report.theta_lower * ksk, tol)
    return report
