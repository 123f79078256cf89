"""Pushforwards of frame systems along invertible maps, and target reduction.

Transforming a k-relative frame by an invertible u produces a frame for u k
over the moved subspaces u W_j; the certified bound pair (A, B |u|^2) is
checked by the PSD sandwich rather than trusted.  ``reduce_operator`` answers
when frame-ness relative to k survives passing to a smaller operator u whose
range factors through k.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame_ops import FrameBounds, FrameReport, frame_operator, optimal_bounds, verify_k_g_fusion
from .model import BoundedOperator, GFusionSystem, LocalOperator, WeightedSubspace, projection
from .numerics import (
    DEFAULT_TOL,
    InputError,
    PreconditionError,
    ToleranceProfile,
    adjoint,
    douglas_factor,
    operator_norm,
    orthonormalize,
    psd_check,
)

__all__ = [
    "TransformedSystem",
    "transform_invertible",
    "transform_unitary",
    "ReduceOperatorReport",
    "reduce_operator",
]


@dataclass
class TransformedSystem:
    """A pushed-forward system plus its certified bounds for the new target."""

    system: GFusionSystem
    certified: FrameBounds
    target_operator: BoundedOperator
    report: FrameReport


def _moved_members(system: GFusionSystem, u: np.ndarray, local_maps,
                   tol: ToleranceProfile):
    members = []
    for (sub, op), new_op in zip(system.members, local_maps):
        basis = orthonormalize(u @ sub.basis, tol)
        members.append((WeightedSubspace(basis, sub.weight, tol=tol),
                        LocalOperator(new_op)))
    return tuple(members)


def transform_invertible(system: GFusionSystem, k: BoundedOperator, u: BoundedOperator,
                         bounds: FrameBounds | None = None,
                         tol: ToleranceProfile | None = None) -> TransformedSystem:
    """Push a k-relative frame forward along an invertible u.

    The image system is (u W_j, L_j pi_Wj u*, v_j); it is certified a frame
    for u k with bounds (A, B |u|^2), where (A, B) default to the optimal
    bounds of the input.  Requires u invertible beyond the rank cutoff.
    """
    tol = tol or DEFAULT_TOL
    if u.dim != system.dim:
        raise InputError("transform operator has wrong dimension")
    if not u.is_invertible(tol):
        raise PreconditionError("transform operator is numerically singular")
    if bounds is None:
        bounds = optimal_bounds(system, k, tol)
    local_maps = [op.matrix @ projection(sub) @ adjoint(u.matrix)
                  for sub, op in system.members]
    moved = GFusionSystem(system.space, _moved_members(system, u.matrix, local_maps, tol))
    target = BoundedOperator(u.matrix @ k.matrix)
    certified = FrameBounds(bounds.lower, bounds.upper * u.norm**2)
    report = verify_k_g_fusion(moved, target, claimed=certified, tol=tol)
    return TransformedSystem(moved, certified, target, report)


def transform_unitary(system: GFusionSystem, k: BoundedOperator, u: BoundedOperator,
                      bounds: FrameBounds | None = None,
                      tol: ToleranceProfile | None = None) -> TransformedSystem:
    """Push a k-relative frame forward along a unitary u.

    The image system is (u W_j, L_j u^-1, v_j), certified a frame for
    (u^-1)* k with bounds (A, B |u^-1|^2).  Requires u*u = I within tolerance.
    """
    tol = tol or DEFAULT_TOL
    if u.dim != system.dim:
        raise InputError("transform operator has wrong dimension")
    if operator_norm(adjoint(u.matrix) @ u.matrix - np.eye(u.dim)) > tol.for_scale(1.0):
        raise PreconditionError("transform operator is not unitary within tolerance")
    if bounds is None:
        bounds = optimal_bounds(system, k, tol)
    u_inv = adjoint(u.matrix)
    local_maps = [op.matrix @ u_inv for _, op in system.members]
    moved = GFusionSystem(system.space, _moved_members(system, u.matrix, local_maps, tol))
    target = BoundedOperator(adjoint(u_inv) @ k.matrix)
    inv_norm = operator_norm(u_inv)
    certified = FrameBounds(bounds.lower, bounds.upper * inv_norm**2)
    report = verify_k_g_fusion(moved, target, claimed=certified, tol=tol)
    return TransformedSystem(moved, certified, target, report)


@dataclass
class ReduceOperatorReport:
    """Whether k-frame-ness transfers to a smaller target operator u.

    ``derivable`` is the range-factorization verdict ran(u) in ran(k).  When
    it holds, ``certified_lower`` = A / lambda_min^2 is a valid lower bound
    for u and ``certified_ok`` records its PSD certificate.  When it fails,
    ``fallback_report`` carries an independent direct verification against u,
    distinguishing "not derivable by factorization" from "not a u-frame".
    """

    derivable: bool
    lambda_min: float | None
    certified_lower: float | None
    certified_ok: bool | None
    fallback_report: FrameReport | None


def reduce_operator(system: GFusionSystem, k: BoundedOperator, u: BoundedOperator,
                    bounds: FrameBounds | None = None,
                    tol: ToleranceProfile | None = None) -> ReduceOperatorReport:
    tol = tol or DEFAULT_TOL
    if u.dim != system.dim:
        raise InputError("target operator has wrong dimension")
    if bounds is None:
        bounds = optimal_bounds(system, k, tol)
    dg = douglas_factor(u.matrix, k.matrix, tol)
    if dg.included:
        lam = dg.lambda_min
        if lam == 0.0:
            raise InputError("target operator u is numerically zero")
        certified_lower = bounds.lower / lam**2
        s = frame_operator(system)
        uu = u.matrix @ adjoint(u.matrix)
        certified_ok = psd_check(s - certified_lower * uu, tol)
        return ReduceOperatorReport(True, float(lam), float(certified_lower),
                                    bool(certified_ok), None)
    fallback = verify_k_g_fusion(system, u, tol=tol)
    return ReduceOperatorReport(False, None, None, None, fallback)
