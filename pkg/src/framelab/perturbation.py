"""Stability of frame systems under perturbation of the local operators.

Four hypothesis shapes are supported, each relating the perturbed family
(W_j, Theta_j, v_j) back to the base family through an inequality that is
quantified over index subsets I and probe vectors f:

* ``P1-sqrt-sum``    |D_I f| <= l1 |S_I f| + l2 |S'_I f| + g sqrt(q_I(f))
* ``P-variant-kstar``|D_I f| <= l1 |S_I f| + l2 |S'_I f| + g |k* f|
* ``C-p2-normsum``   |D_I f| <= R |k* f|
* ``T-sqsum``        sum_I v_j^2 |(L_j - Th_j) pi_j f|^2 <= R |k* f|^2

where D_I = sum_I v^2 (pi L* L pi - pi Th* Th pi), S_I and S'_I are the
partial frame operators of the base and perturbed families, and
q_I(f) = sum_I v^2 |L pi f|^2.  Hypotheses are falsified by search, never
proved, except T-sqsum whose hypothesis is equivalent to the spectral
containment S_delta <= R k k* and can be certified exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .frame_ops import FrameBounds, FrameReport, optimal_bounds, verify_k_g_fusion
from .model import BoundedOperator, GFusionSystem, LocalOperator, projection
from .numerics import (
    DEFAULT_TOL,
    InputError,
    as_matrix,
    InternalConsistencyError,
    PreconditionError,
    ToleranceProfile,
    adjoint,
    operator_norm,
    psd_check,
    unit_probes,
)

__all__ = [
    "PerturbationMode",
    "PerturbationParams",
    "HypothesisVerdict",
    "PaleyWienerReport",
    "paley_wiener_check",
    "perturb_hypothesis",
    "predicted_bounds",
    "variant_gamma_readings",
    "PerturbationReport",
    "verify_perturbation_theorem",
]

EXHAUSTIVE_SUBSET_LIMIT = 12
SAMPLED_SUBSETS = 512
RANDOM_PROBES = 200
REFINE_STEPS = 40


class PerturbationMode(Enum):
    """Hypothesis shapes, keyed by the tokens the CLI accepts."""

    SQRT_SUM = "P1-sqrt-sum"
    ADJOINT_TERM = "P-variant-kstar"
    AGGREGATE_NORM = "C-p2-normsum"
    SQUARE_SUM = "T-sqsum"


@dataclass(frozen=True)
class PerturbationParams:
    """Constants of a perturbation hypothesis.

    lambda1 and lambda2 live in [0, 1); gamma and R are nonnegative.  The
    bound-dependent admissibility (involving the base lower bound A) is
    checked by :func:`predicted_bounds`, not here.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    gamma: float = 0.0
    R: float = 0.0
    mode: PerturbationMode = PerturbationMode.SQRT_SUM

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0) or not math.isfinite(value):
                raise InputError(f"{name} must lie in [0, 1), got {value!r}")
        for name in ("gamma", "R"):
            value = getattr(self, name)
            if value < 0.0 or not math.isfinite(value):
                raise InputError(f"{name} must be a finite nonnegative scalar, got {value!r}")
        if not isinstance(self.mode, PerturbationMode):
            try:
                object.__setattr__(self, "mode", PerturbationMode(self.mode))
            except ValueError as exc:
                tokens = ", ".join(m.value for m in PerturbationMode)
                raise InputError(
                    f"unknown perturbation mode {self.mode!r}; expected one of {tokens}"
                ) from exc


@dataclass
class HypothesisVerdict:
    """Outcome of a falsification search over (subset, probe) pairs.

    ``falsified`` means some tested pair violated the inequality beyond
    tolerance; the converse is evidence, not proof.  ``worst_violation`` is
    the signed maximum of lhs - rhs over everything tested.
    """

    falsified: bool
    worst_violation: float
    subsets_tested: int
    probes_tested: int
    worst_subset: tuple = ()
    worst_probe: np.ndarray | None = None

    def __post_init__(self):
        if self.falsified and not self.worst_violation > 0.0:
            raise InternalConsistencyError(
                "falsified verdict requires a positive worst violation")


@dataclass
class PaleyWienerReport:
    """Invertibility certificate for an operator close to the identity."""

    certified: bool
    defect_norm: float
    sigma_min: float
    sigma_max: float
    predicted_sigma_lower: float
    predicted_sigma_upper: float
    inverse_lower: float
    inverse_upper: float
    conclusion_ok: bool | None


def paley_wiener_check(u, lambda1: float, lambda2: float,
                       tol: ToleranceProfile | None = None) -> PaleyWienerReport:
    """Certify invertibility of u from closeness to the identity.

    The sufficient condition is |I - u| <= l1 + l2 sigma_min(u), which gives
    the pointwise bound |x - u x| <= l1 |x| + l2 |u x|.  When certified, the
    singular values must satisfy
    (1 - l1)/(1 + l2) <= sigma(u) <= (1 + l1)/(1 - l2) and the inverse the
    reciprocal bounds; a certified case violating them raises
    :class:`InternalConsistencyError`.  An uncertified case is inconclusive,
    not a failure.
    """
    tol = tol or DEFAULT_TOL
    if not (0.0 <= lambda1 < 1.0 and 0.0 <= lambda2 < 1.0):
        raise InputError("lambda1 and lambda2 must lie in [0, 1)")
    op = u if isinstance(u, BoundedOperator) else BoundedOperator(u)
    n = op.dim
    defect = operator_norm(op.matrix - np.eye(n, dtype=op.matrix.dtype))
    sigma = op.singular_values
    sigma_min = float(sigma[-1])
    sigma_max = float(sigma[0])
    slack = tol.for_scale(max(1.0, sigma_max))
    certified = defect <= lambda1 + lambda2 * sigma_min + slack
    lower = (1.0 - lambda1) / (1.0 + lambda2)
    upper = (1.0 + lambda1) / (1.0 - lambda2)
    report = PaleyWienerReport(
        certified=bool(certified),
        defect_norm=float(defect),
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        predicted_sigma_lower=float(lower),
        predicted_sigma_upper=float(upper),
        inverse_lower=1.0 / upper,
        inverse_upper=1.0 / lower if lower > 0 else math.inf,
        conclusion_ok=None,
    )
    if certified:
        ok = (sigma_min >= lower - slack) and (sigma_max <= upper + slack)
        if sigma_min > slack:
            inv_min = 1.0 / sigma_max
            inv_max = 1.0 / sigma_min
            ok = ok and inv_min >= report.inverse_lower - slack
            ok = ok and inv_max <= report.inverse_upper + slack
        else:
            ok = False
        report.conclusion_ok = bool(ok)
        if not ok:
            raise InternalConsistencyError(
                f"certified case breaks the singular value bounds: "
                f"sigma in [{sigma_min:g}, {sigma_max:g}], "
                f"predicted [{lower:g}, {upper:g}]")
    return report


def _perturbed_operators(base: GFusionSystem, theta):
    """Normalize the perturbed family: a system sharing the base geometry,
    or a plain sequence of local operators/matrices."""
    if isinstance(theta, GFusionSystem):
        if theta.size != base.size or theta.dim != base.dim:
            raise InputError("perturbed system does not match the base shape")
        return [op for _, op in theta.members]
    return list(theta)


def _member_data(base: GFusionSystem, theta, k: BoundedOperator):
    """Per-member vectors and scalars the hypotheses are assembled from."""
    theta = _perturbed_operators(base, theta)
    if len(theta) != base.size:
        raise InputError(f"expected {base.size} perturbed operators, got {len(theta)}")
    mats = []
    for (sub, op), th in zip(base.members, theta):
        th_mat = th.matrix if isinstance(th, LocalOperator) else as_matrix(th, "perturbed operator")
        if th_mat.shape[1] != base.dim:
            raise InputError("perturbed operator domain dimension mismatch")
        p = projection(sub)
        lp = op.matrix @ p
        tp = th_mat @ p
        w2 = sub.weight**2
        mats.append((w2, lp, tp))
    return mats


def _subset_masks(size: int, rng_seed: int = 0x5B5E7):
    """Deterministic family of index subsets as boolean rows."""
    if size <= EXHAUSTIVE_SUBSET_LIMIT:
        masks = np.zeros((2**size - 1, size), dtype=bool)
        for row, bits in enumerate(range(1, 2**size)):
            for j in range(size):
                masks[row, j] = bool(bits >> j & 1)
        return masks
    chosen = {tuple([True] * size)}
    for j in range(size):
        single = [False] * size
        single[j] = True
        chosen.add(tuple(single))
        chosen.add(tuple(not b for b in single))
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    while len(chosen) < SAMPLED_SUBSETS:
        draw = rng.random(size) < 0.5
        if draw.any():
            chosen.add(tuple(bool(b) for b in draw))
    return np.array(sorted(chosen), dtype=bool)


def _violations(masks, data, k_mat, f, params: PerturbationParams):
    """lhs - rhs and scale for every subset mask at one probe, vectorized."""
    lam1, lam2, gamma, r = params.lambda1, params.lambda2, params.gamma, params.R
    diff_rows = np.array([w2 * (adjoint(lp) @ (lp @ f) - adjoint(tp) @ (tp @ f))
                          for w2, lp, tp in data])
    kf_norm = float(np.linalg.norm(adjoint(k_mat) @ f))
    weights = masks.astype(float)
    if params.mode is PerturbationMode.SQUARE_SUM:
        sq = np.array([w2 * float(np.linalg.norm(lp @ f - tp @ f))**2
                       for w2, lp, tp in data])
        lhs = weights @ sq
        rhs = np.full_like(lhs, r * kf_norm**2)
        return lhs - rhs, 1.0 + lhs + rhs
    lhs = np.linalg.norm(weights @ diff_rows, axis=1)
    if params.mode is PerturbationMode.AGGREGATE_NORM:
        rhs = np.full_like(lhs, r * kf_norm)
        return lhs - rhs, 1.0 + lhs + rhs
    base_rows = np.array([w2 * (adjoint(lp) @ (lp @ f)) for w2, lp, tp in data])
    pert_rows = np.array([w2 * (adjoint(tp) @ (tp @ f)) for w2, lp, tp in data])
    rhs = lam1 * np.linalg.norm(weights @ base_rows, axis=1)
    rhs = rhs + lam2 * np.linalg.norm(weights @ pert_rows, axis=1)
    if params.mode is PerturbationMode.SQRT_SUM:
        q = np.array([w2 * float(np.linalg.norm(lp @ f))**2 for w2, lp, tp in data])
        rhs = rhs + gamma * np.sqrt(weights @ q)
    else:
        rhs = rhs + gamma * kf_norm
    return lhs - rhs, 1.0 + lhs + rhs


def perturb_hypothesis(base: GFusionSystem, theta, k: BoundedOperator,
                       params: PerturbationParams,
                       tol: ToleranceProfile | None = None) -> HypothesisVerdict:
    """Search for a (subset, probe) pair violating the mode's inequality.

    Subsets are exhaustive up to 12 members, otherwise a deterministic sample
    of 512 including the full set, singletons, and their complements.  Probes
    are the standard basis, 200 seeded unit vectors, and a gradient-ascent
    refinement of the worst probe found.  A verdict of not-falsified is
    evidence over the tested pairs, never a proof.
    """
    tol = tol or DEFAULT_TOL
    data = _member_data(base, theta, k)
    k_mat = k.matrix
    masks = _subset_masks(base.size)
    n = base.dim
    complex_field = base.space.field == "complex" or any(
        np.iscomplexobj(tp) for _, _, tp in data)
    probes = list(unit_probes(n, RANDOM_PROBES, complex_field=complex_field, seed=0xFA15))

    worst = -math.inf
    worst_subset = ()
    worst_probe = None
    falsified = False
    probes_tested = 0

    def consider(f):
        nonlocal worst, worst_subset, worst_probe, falsified, probes_tested
        probes_tested += 1
        gaps, scales = _violations(masks, data, k_mat, f, params)
        row = int(np.argmax(gaps))
        gap = float(gaps[row])
        # ties go to the earliest probe: noise-level gains never displace it
        if worst_probe is None or gap > worst + 1e-12 * max(1.0, abs(worst)):
            worst = gap
            worst_subset = tuple(int(j) for j in np.flatnonzero(masks[row]))
            worst_probe = np.array(f)
        if (gaps > tol.tau_abs + tol.tau_rel * scales).any():
            falsified = True
        return gap

    for f in probes:
        consider(f)

    if worst_probe is not None:
        f = worst_probe.astype(complex if complex_field else float)
        current = worst
        step = 0.25
        rng = np.random.Generator(np.random.PCG64(0xA5CE17))
        for _ in range(REFINE_STEPS):
            direction = rng.standard_normal(n)
            if complex_field:
                direction = direction + 1j * rng.standard_normal(n)
            candidate = f + step * direction
            norm = np.linalg.norm(candidate)
            if norm == 0.0:
                continue
            gap = consider(candidate / norm)
            if gap > current:
                current = gap
                f = candidate / norm
            else:
                step *= 0.5
                if step < 1e-6:
                    break

    return HypothesisVerdict(
        falsified=bool(falsified),
        worst_violation=float(worst),
        subsets_tested=int(masks.shape[0]),
        probes_tested=probes_tested,
        worst_subset=worst_subset,
        worst_probe=worst_probe,
    )


def _require_admissible(params: PerturbationParams, lower: float, k_norm: float):
    mode = params.mode
    if mode is PerturbationMode.SQRT_SUM:
        reach = params.lambda1 + params.gamma / math.sqrt(lower)
        if max(reach, params.lambda2) >= 1.0:
            raise InputError(
                f"inadmissible parameters: max(lambda1 + gamma/sqrt(A), lambda2) "
                f"= {max(reach, params.lambda2):g} must stay below 1")
    elif mode is PerturbationMode.ADJOINT_TERM:
        if k_norm <= 0.0:
            raise InputError("k must be nonzero for this mode")
        reach = params.lambda1 + params.gamma / (math.sqrt(lower) * k_norm)
        if max(reach, params.lambda2) >= 1.0:
            raise InputError(
                f"inadmissible parameters: max(lambda1 + gamma/(sqrt(A)|k|), lambda2) "
                f"= {max(reach, params.lambda2):g} must stay below 1")
    else:
        # R = 0 is the zero-perturbation fixed point; only R >= A is rejected.
        if params.R >= lower:
            raise InputError(
                f"inadmissible parameters: R = {params.R:g} must stay below the "
                f"lower bound A = {lower:g}")


def predicted_bounds(params: PerturbationParams, lower: float, upper: float,
                     k_norm: float) -> FrameBounds:
    """The perturbed-system bounds each hypothesis shape promises.

    Formulas are evaluated literally; for ``P-variant-kstar`` the gamma term
    scales with |k| (see :func:`variant_gamma_readings` for the alternative
    reading its admissibility condition suggests).
    """
    if lower <= 0.0 or upper <= 0.0 or lower > upper:
        raise InputError("base bounds must satisfy 0 < lower <= upper")
    _require_admissible(params, lower, k_norm)
    lam1, lam2, gamma, r = params.lambda1, params.lambda2, params.gamma, params.R
    mode = params.mode
    if mode is PerturbationMode.SQRT_SUM:
        new_lower = lower * (1.0 - (lam1 + gamma / math.sqrt(lower))) / (1.0 + lam2)
        new_upper = upper * (1.0 + lam1 + gamma / math.sqrt(upper)) / (1.0 - lam2)
    elif mode is PerturbationMode.ADJOINT_TERM:
        new_lower = lower * (1.0 - (lam1 + gamma * k_norm / math.sqrt(lower))) / (1.0 + lam2)
        new_upper = upper * (1.0 + lam1 + gamma * k_norm / math.sqrt(upper)) / (1.0 - lam2)
        if new_lower < 0.0:
            raise InputError(
                "parameters pass the printed admissibility condition but the "
                f"lower-bound formula is negative ({new_lower:g}); the two "
                "gamma readings of this mode disagree here")
    elif mode is PerturbationMode.AGGREGATE_NORM:
        new_lower = lower - r
        new_upper = min(upper + r * math.sqrt(upper / lower),
                        r * k_norm + math.sqrt(upper))
    else:
        new_lower = (math.sqrt(lower) - math.sqrt(r))**2
        new_upper = (k_norm * math.sqrt(r) + math.sqrt(upper))**2
    return FrameBounds(float(new_lower), float(new_upper))


def variant_gamma_readings(params: PerturbationParams, lower: float, upper: float,
                           k_norm: float) -> dict:
    """Both gamma readings of the |k*f| hypothesis shape.

    The stated bound scales gamma by |k| while the stated admissibility
    condition divides by it; the two agree only when |k| = 1.  Each reading
    reports its own admissibility and bounds so measured bounds can say which
    one the perturbed system actually obeys.
    """
    if params.mode is not PerturbationMode.ADJOINT_TERM:
        raise InputError("gamma readings only apply to the P-variant-kstar mode")
    if lower <= 0.0 or k_norm <= 0.0:
        raise InputError("base lower bound and |k| must be positive")
    lam1, lam2, gamma = params.lambda1, params.lambda2, params.gamma
    readings = {}
    for name, effective in (("gamma-times-knorm", gamma * k_norm),
                            ("gamma-over-knorm", gamma / k_norm)):
        admissible = max(lam1 + effective / math.sqrt(lower), lam2) < 1.0
        entry = {"admissible": bool(admissible), "lower": None, "upper": None}
        if admissible:
            entry["lower"] = lower * (1.0 - (lam1 + effective / math.sqrt(lower))) / (1.0 + lam2)
            entry["upper"] = upper * (1.0 + lam1 + effective / math.sqrt(upper)) / (1.0 - lam2)
        readings[name] = entry
    return readings


@dataclass
class PerturbationReport:
    """Hypothesis verdict, perturbed-frame verification, and bound containment."""

    params: PerturbationParams
    verdict: HypothesisVerdict
    base_bounds: FrameBounds
    theta_report: FrameReport
    predicted: FrameBounds | None = None
    theta_bounds: FrameBounds | None = None
    lower_contained: bool | None = None
    upper_contained: bool | None = None
    hypothesis_certified: bool | None = None
    erratum_log: list = field(default_factory=list)
    gamma_readings: dict | None = None


def _square_sum_certificate(base: GFusionSystem, theta, k: BoundedOperator,
                            r: float, tol: ToleranceProfile) -> bool:
    """Exact spectral test of the T-sqsum hypothesis: S_delta <= R k k*."""
    n = base.dim
    dtype = complex if base.space.field == "complex" else float
    s_delta = np.zeros((n, n), dtype=dtype)
    for (sub, op), th in zip(base.members, _perturbed_operators(base, theta)):
        th_mat = th.matrix if isinstance(th, LocalOperator) else as_matrix(th, "perturbed operator")
        gap = (op.matrix - th_mat) @ projection(sub)
        s_delta = s_delta + (sub.weight**2) * (adjoint(gap) @ gap)
    kk = k.matrix @ adjoint(k.matrix)
    return psd_check(r * kk - s_delta, tol)


def verify_perturbation_theorem(base: GFusionSystem, theta, k: BoundedOperator,
                                params: PerturbationParams,
                                tol: ToleranceProfile | None = None) -> PerturbationReport:
    """Check a perturbation theorem's conclusion against measured bounds.

    Preconditions: the base is a frame for k and the hypothesis is not
    falsified.  The perturbed family is verified as a frame for k and its
    optimal bounds are compared with :func:`predicted_bounds`.  For the
    square-sum mode with a spectrally certified hypothesis a containment
    failure raises :class:`InternalConsistencyError`; in every other case
    failures are recorded in ``erratum_log`` and reported, because the
    constants in those conclusions are not independently established.
    """
    tol = tol or DEFAULT_TOL
    base_bounds = optimal_bounds(base, k, tol)
    verdict = perturb_hypothesis(base, theta, k, params, tol)
    if verdict.falsified:
        raise PreconditionError(
            f"hypothesis falsified with worst violation {verdict.worst_violation:g}; "
            "the theorem's conclusion is not in play")
    if isinstance(theta, GFusionSystem):
        theta_system = theta
    else:
        ops = tuple(th if isinstance(th, LocalOperator) else LocalOperator(th) for th in theta)
        theta_system = base.with_local_operators(ops)
    theta_report = verify_k_g_fusion(theta_system, k, tol=tol)
    report = PerturbationReport(params=params, verdict=verdict,
                                base_bounds=base_bounds, theta_report=theta_report)
    if params.mode is PerturbationMode.SQUARE_SUM:
        report.hypothesis_certified = _square_sum_certificate(base, theta, k, params.R, tol)
    if params.mode is PerturbationMode.ADJOINT_TERM:
        report.gamma_readings = variant_gamma_readings(
            params, base_bounds.lower, base_bounds.upper, k.norm)
    try:
        report.predicted = predicted_bounds(params, base_bounds.lower,
                                            base_bounds.upper, k.norm)
    except InputError as exc:
        report.erratum_log.append({
            "kind": "inadmissible-parameters",
            "mode": params.mode.value,
            "detail": str(exc),
        })
        return report
    if not theta_report.is_frame:
        record = {
            "kind": "perturbed-family-not-a-frame",
            "mode": params.mode.value,
            "predicted_lower": report.predicted.lower,
            "detail": "hypothesis not falsified yet the perturbed family fails frame verification",
        }
        if params.mode is PerturbationMode.SQUARE_SUM and report.hypothesis_certified:
            raise InternalConsistencyError(record["detail"])
        report.erratum_log.append(record)
        return report
    report.theta_bounds = optimal_bounds(theta_system, k, tol)
    slack = tol.for_scale(max(report.predicted.upper, report.theta_bounds.upper))
    report.lower_contained = bool(report.predicted.lower <= report.theta_bounds.lower + slack)
    report.upper_contained = bool(report.theta_bounds.upper <= report.predicted.upper + slack)
    if not (report.lower_contained and report.upper_contained):
        record = {
            "kind": "bound-containment-failure",
            "mode": params.mode.value,
            "predicted": [report.predicted.lower, report.predicted.upper],
            "measured": [report.theta_bounds.lower, report.theta_bounds.upper],
            "lower_contained": report.lower_contained,
            "upper_contained": report.upper_contained,
        }
        if params.mode is PerturbationMode.SQUARE_SUM and report.hypothesis_certified:
            raise InternalConsistencyError(
                f"certified square-sum hypothesis but containment fails: {record}")
        report.erratum_log.append(record)
    return report
