"""Empirical certification of class membership and the named case suite.

Sampling refutes, never proves: a passing report means no violation was found
on the sampled pairs at the given tolerance.  Violations are normalized by
``||x - y||^2`` so tolerances are scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from . import splitting
from .calculus import (
    ClassLabel,
    INParams,
    ScaledConic,
    compose_chain,
    compose_conic,
    compose_general,
    compose_scaled_averaged_cocoercive,
    from_label,
)
from .errors import DomainError, GuardError, StepSizeError
from .operators import Op, build_in_operator, build_rotation, matrix_op
from .sampling import DEFAULT_SEED, pair_samples

__all__ = [
    "MembershipReport",
    "check_membership",
    "check_monotone",
    "check_composition_identity",
    "characterization_violations",
    "fit_tightest",
    "CaseReport",
    "NAMED_CASES",
    "run_named_case",
    "run_named_suite",
    "random_orthogonal",
    "random_certified_composition",
    "run_random_suite",
]


@dataclass
class MembershipReport:
    """Result of a sampled inequality check; passes iff the worst normalized
    violation does not exceed the tolerance."""

    label: object
    pairs_tested: int
    worst_violation: float
    passed: bool
    worst_pair: tuple
    tol: float


def _pairs(T, pairs, dim, seed, adversarial):
    xs, ys = pair_samples(pairs, dim if dim is not None else T.dim, seed=seed,
                          adversarial=adversarial)
    return xs, ys


def _in_violations(dx, dt, p: INParams) -> np.ndarray:
    # ||Tx-Ty||^2 - 2a<x-y, Tx-Ty> - (b^2 - a^2)||x-y||^2, normalized.
    a, b = p.alpha, p.beta
    nd = np.sum(dx * dx, axis=1)
    ndt = np.sum(dt * dt, axis=1)
    ip = np.sum(dx * dt, axis=1)
    return (ndt - 2.0 * a * ip - (b * b - a * a) * nd) / nd


def _conic_violations(dx, dt, c: ScaledConic) -> np.ndarray:
    # (1-a)||(Id-T')x - (Id-T')y||^2 + a||T'x-T'y||^2 - a||x-y||^2 for T' = T/delta.
    a = c.alpha
    dts = dt / c.delta
    dd = dx - dts
    nd = np.sum(dx * dx, axis=1)
    return ((1.0 - a) * np.sum(dd * dd, axis=1) + a * np.sum(dts * dts, axis=1) - a * nd) / nd


def check_membership(
    T: Op,
    descriptor,
    pairs: int = 10_000,
    tol: float = 1e-9,
    dim: int | None = None,
    seed: int = DEFAULT_SEED,
    adversarial: tuple = (),
) -> MembershipReport:
    """Sampled check that ``T`` belongs to the class of ``descriptor``.

    ``descriptor`` may be an :class:`INParams`, a :class:`ScaledConic` (the
    operator is rescaled by ``1/delta`` and the conic characterization is
    used) or a :class:`ClassLabel`.
    """
    if isinstance(descriptor, ClassLabel):
        descriptor = from_label(descriptor)
    xs, ys = _pairs(T, pairs, dim, seed, adversarial)
    dx = xs - ys
    dt = T(xs) - T(ys)
    if isinstance(descriptor, ScaledConic):
        v = _conic_violations(dx, dt, descriptor)
    else:
        v = _in_violations(dx, dt, descriptor)
    i = int(np.argmax(v))
    worst = float(v[i])
    return MembershipReport(
        label=descriptor,
        pairs_tested=len(xs),
        worst_violation=worst,
        passed=worst <= tol,
        worst_pair=(xs[i], ys[i]),
        tol=tol,
    )


def check_monotone(
    F: Op,
    rho: float,
    pairs: int = 10_000,
    tol: float = 1e-9,
    dim: int | None = None,
    seed: int = DEFAULT_SEED,
    adversarial: tuple = (),
) -> MembershipReport:
    """Sampled check of ``<x-y, Fx-Fy> >= rho*||x-y||^2``.

    The normalized violation is ``rho - <x-y, Fx-Fy>/||x-y||^2`` (positive
    when the inequality fails); its negation is the worst monotonicity slack.
    """
    xs, ys = _pairs(F, pairs, dim, seed, adversarial)
    dx = xs - ys
    df = F(xs) - F(ys)
    v = rho - np.sum(dx * df, axis=1) / np.sum(dx * dx, axis=1)
    i = int(np.argmax(v))
    worst = float(v[i])
    return MembershipReport(
        label=("monotone", rho),
        pairs_tested=len(xs),
        worst_violation=worst,
        passed=worst <= tol,
        worst_pair=(xs[i], ys[i]),
        tol=tol,
    )


def characterization_violations(T: Op, p: INParams, xs, ys, variant: str) -> np.ndarray:
    """Normalized violations of the four equivalent membership inequalities.

    Variants ``b``..``e`` express nonexpansiveness of the residual factor via
    the image difference, the displacement difference, or convex mixtures of
    both; all four are algebraically equal and must agree numerically.
    """
    a, b = p.alpha, p.beta
    dx = xs - ys
    dt = T(xs) - T(ys)
    dd = dx - dt
    nd = np.sum(dx * dx, axis=1)
    ndt = np.sum(dt * dt, axis=1)
    ndd = np.sum(dd * dd, axis=1)
    ip_x_t = np.sum(dx * dt, axis=1)
    ip_t_d = np.sum(dt * dd, axis=1)
    if variant == "b":
        lhs = ndt - 2.0 * a * ip_x_t - (b * b - a * a) * nd
    elif variant == "c":
        lhs = (1.0 - 2.0 * a) * ndt - 2.0 * a * ip_t_d - (b * b - a * a) * nd
    elif variant == "d":
        lhs = (2.0 * a - 1.0) * ndd - 2.0 * (1.0 - a) * ip_t_d - (b * b - (1.0 - a) ** 2) * nd
    elif variant == "e":
        lhs = (1.0 - a) * ndt + a * ndd - (b * b - a * (a - 1.0)) * nd
    else:
        raise DomainError(f"unknown characterization variant {variant!r}")
    return lhs / nd


def check_composition_identity(
    R1: Op,
    R2: Op,
    lam: float,
    pairs: int = 1000,
    dim: int | None = None,
    seed: int = DEFAULT_SEED,
) -> float:
    """Worst scaled residual of the relaxed-composition inner-product identity.

    For ``R = (1-lam)*Id + lam*R2 R1`` the product
    ``<Rx-Ry, (Id-R)x-(Id-R)y>`` decomposes exactly into a ``(1-2*lam)``
    cross term plus ``lam^2`` times the two factors' sum/difference products;
    the identity holds pointwise for arbitrary operators.
    """
    if R1.dim != R2.dim:
        raise DomainError(f"dimension mismatch: {R1.dim} vs {R2.dim}")
    xs, ys = _pairs(R1, pairs, dim, seed, ())
    dx = xs - ys
    r1x, r1y = R1(xs), R1(ys)
    d1 = r1x - r1y
    d21 = R2(r1x) - R2(r1y)
    drl = (1.0 - lam) * dx + lam * d21
    ddl = dx - drl
    lhs = np.sum(drl * ddl, axis=1)
    t1 = (1.0 - 2.0 * lam) * np.sum(dx * ddl, axis=1)
    t2 = lam * lam * np.sum((dx + d1) * (dx - d1), axis=1)
    t3 = lam * lam * np.sum((d1 + d21) * (d1 - d21), axis=1)
    rhs = t1 + t2 + t3
    scale = 1.0 + np.abs(lhs) + np.abs(t1) + np.abs(t2) + np.abs(t3)
    return float(np.max(np.abs(lhs - rhs) / scale))


# ---------------------------------------------------------------------------
# Tightest-class fitting


def fit_tightest(
    T: Op,
    family: str,
    pairs: int = 10_000,
    tol: float = 1e-9,
    dim: int | None = None,
    seed: int = DEFAULT_SEED,
    adversarial: tuple = (),
) -> ClassLabel:
    """Bisect the family parameter to the smallest value passing membership.

    The result is a lower bound on the true class: sampling can refute but
    never prove membership.  Families: ``lipschitz``, ``averaged``, ``conic``,
    ``cocoercive`` (fitted on the diameter, reported as a modulus).
    """
    if pairs < 100:
        raise DomainError(f"needs at least 100 pairs, got {pairs}")
    xs, ys = _pairs(T, pairs, dim, seed, adversarial)
    dx = xs - ys
    dt = T(xs) - T(ys)

    def passes(param: float) -> bool:
        if family == "lipschitz":
            p = INParams(0.0, param)
        elif family in ("averaged", "conic"):
            p = INParams(1.0 - param, param)
        elif family == "cocoercive":
            p = INParams(param / 2.0, param / 2.0)
        else:
            raise DomainError(f"unknown family {family!r}")
        return float(np.max(_in_violations(dx, dt, p))) <= tol

    lo, hi = 1e-6, 1.0 - 1e-12 if family == "averaged" else 1e6
    if passes(lo):
        return _family_label(family, lo)
    if not passes(hi):
        raise DomainError(f"not in family {family!r} at sampled pairs")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return _family_label(family, hi)


def _family_label(family: str, value: float) -> ClassLabel:
    if family == "lipschitz":
        return ClassLabel.lipschitz(value)
    if family == "averaged":
        return ClassLabel.averaged(value)
    if family == "conic":
        return ClassLabel.conic(value)
    return ClassLabel.cocoercive(1.0 / value)


# ---------------------------------------------------------------------------
# Random certified compositions (rotation-family operators)


def random_orthogonal(rng: np.random.Generator) -> Op:
    """A random planar rotation or reflection; an exact isometry."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    m = ops.rotation_matrix(theta)
    if rng.random() < 0.5:
        m = m @ np.diag([1.0, -1.0])
    return matrix_op(m, certificate=INParams(0.0, 1.0), name="orth")


def random_certified_composition(kind: str, rng: np.random.Generator):
    """Draw a composition with a certificate from one of the theorem families.

    Returns ``(op, descriptor, params)`` where ``descriptor`` is the certified
    class of ``op``.  Kinds: ``averaged-averaged``, ``conic-conic`` (parameter
    product below one), ``scaled-averaged-cocoercive``.
    """
    if kind == "averaged-averaged":
        a1 = rng.uniform(0.05, 0.95)
        a2 = rng.uniform(0.05, 0.95)
        r1 = build_in_operator(1.0 - a1, a1, random_orthogonal(rng))
        r2 = build_in_operator(1.0 - a2, a2, random_orthogonal(rng))
        cert = compose_general(INParams(1.0 - a1, a1), INParams(1.0 - a2, a2))
        return ops.compose(r2, r1), cert, {"a1": a1, "a2": a2}
    if kind == "conic-conic":
        a1 = rng.uniform(0.05, 1.8)
        a2 = rng.uniform(0.05, min(1.8, 0.98 / a1))
        d1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
        d2 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
        r1 = ops.scale(d1, build_in_operator(1.0 - a1, a1, random_orthogonal(rng)))
        r2 = ops.scale(d2, build_in_operator(1.0 - a2, a2, random_orthogonal(rng)))
        cert = compose_conic(ScaledConic(d1, a1), ScaledConic(d2, a2))
        return ops.compose(r2, r1), cert, {"a1": a1, "a2": a2, "d1": d1, "d2": d2}
    if kind == "scaled-averaged-cocoercive":
        a = rng.uniform(0.05, 0.95)
        d = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
        b = rng.uniform(0.5, 2.0)
        averaged = ops.scale(d, build_in_operator(1.0 - a, a, random_orthogonal(rng)))
        coco = ops.scale(b / 2.0, ops.shift(1.0, random_orthogonal(rng)))
        cert = compose_scaled_averaged_cocoercive(ScaledConic(d, a), b)
        if rng.random() < 0.5:
            return ops.compose(coco, averaged), cert, {"a": a, "d": d, "b": b}
        return ops.compose(averaged, coco), cert, {"a": a, "d": d, "b": b}
    raise DomainError(f"unknown composition kind {kind!r}")


COMPOSITION_KINDS = ("averaged-averaged", "conic-conic", "scaled-averaged-cocoercive")


def run_random_suite(
    count: int = 60, seed: int = DEFAULT_SEED, pairs: int = 2000, tol: float = 1e-9
) -> list[dict]:
    """Membership reports for ``count`` random certified compositions."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = COMPOSITION_KINDS[i % len(COMPOSITION_KINDS)]
        op, cert, params = random_certified_composition(kind, rng)
        rep = check_membership(op, cert, pairs=pairs, tol=tol)
        out.append(
            {
                "kind": kind,
                "params": params,
                "certificate": _descriptor_json(cert),
                "worst_violation": rep.worst_violation,
                "passed": rep.passed,
            }
        )
    return out


def _descriptor_json(d) -> dict:
    if isinstance(d, INParams):
        return {"type": "in", "alpha": d.alpha, "beta": d.beta}
    if isinstance(d, ScaledConic):
        return {"type": "scaled-conic", "delta": d.delta, "alpha": d.alpha}
    return {"type": "other", "repr": repr(d)}


# ---------------------------------------------------------------------------
# Named cases


@dataclass
class CaseReport:
    """Outcome of one named case: the guard decision, the empirical outcome,
    and whether they agree."""

    name: str
    params: dict
    guard_rejected: bool | None
    guard_message: str
    empirical_failed: bool | None
    agree: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "guard_rejected": self.guard_rejected,
            "guard_message": self.guard_message,
            "empirical_failed": self.empirical_failed,
            "agree": self.agree,
            "details": self.details,
        }


def _rotation_counterexample(theta: float, alpha1: float, alpha2: float, name: str) -> CaseReport:
    """Two conic factors built on a rotation, second one sign-flipped."""
    kappa = (
        alpha1
        + alpha2
        - 2.0 * alpha1 * alpha2 * math.sin(theta) ** 2
        - (alpha1 - alpha2) * math.cos(theta)
    )
    guard_rejected, guard_message = False, ""
    try:
        compose_conic(ScaledConic(1.0, alpha1), ScaledConic(1.0, alpha2))
    except GuardError as exc:
        guard_rejected, guard_message = True, str(exc)

    rot = build_rotation(theta)
    r1 = build_in_operator(1.0 - alpha1, alpha1, rot)
    r2 = build_in_operator(1.0 - alpha2, alpha2, ops.negate(rot))
    r = ops.compose(r2, r1)
    disp = ops.shift(1.0, ops.negate(r))  # Id - R
    rep = check_monotone(disp, 0.0, pairs=2000)
    slack = -rep.worst_violation
    empirical_failed = not rep.passed
    return CaseReport(
        name=name,
        params={"theta": theta, "alpha1": alpha1, "alpha2": alpha2},
        guard_rejected=guard_rejected,
        guard_message=guard_message,
        empirical_failed=empirical_failed,
        agree=guard_rejected == empirical_failed == (kappa < 0.0),
        details={"kappa": kappa, "monotonicity_slack": slack},
    )


def _case_kappa_sign(theta=math.pi / 2, alpha1=2.0, alpha2=2.0) -> CaseReport:
    return _rotation_counterexample(theta, alpha1, alpha2, "kappa-sign")


def _case_ex_cases_i(eps=1.0, delta=1.0, theta=math.pi / 2) -> CaseReport:
    s2 = math.sin(theta) ** 2
    rep = _rotation_counterexample(theta, (1.0 + eps) / s2, (1.0 + delta) / s2, "ex-cases-i")
    rep.params.update({"eps": eps, "delta": delta})
    return rep


def _case_chain_reject(eps=1.0, delta=2.0, alpha1=0.25) -> CaseReport:
    alpha2 = alpha1 + delta + eps
    alpha3 = (1.0 + delta) / (2.0 * delta)
    guard_rejected, guard_message = False, ""
    try:
        compose_chain(
            [ScaledConic(1.0, alpha1), ScaledConic(1.0, alpha2), ScaledConic(1.0, alpha3)],
            r=1,
        )
    except GuardError as exc:
        guard_rejected, guard_message = True, str(exc)

    s = build_rotation(math.pi / 2)
    r1 = build_in_operator(1.0 - alpha1, alpha1, ops.negate(s))
    r2 = build_in_operator(1.0 - alpha2, alpha2, s)
    r3 = ops.compose(s, ops.scale(-1.0 / delta, ops.identity(2)))
    r = ops.compose(r3, ops.compose(r2, r1))
    disp = ops.shift(1.0, ops.negate(r))
    rep = check_monotone(disp, 0.0, pairs=2000)
    slack = -rep.worst_violation
    return CaseReport(
        name="chain-reject",
        params={"eps": eps, "delta": delta, "alpha1": alpha1},
        guard_rejected=guard_rejected,
        guard_message=guard_message,
        empirical_failed=not rep.passed,
        agree=guard_rejected and not rep.passed,
        details={
            "alpha2": alpha2,
            "alpha3": alpha3,
            "monotonicity_slack": slack,
            "expected_slack": -eps / delta,
        },
    )


def _scaling_demo_specs(mu: float, omega: float):
    a = ops.SubspaceNormalPlusScale(basis=np.array([[1.0, 0.0]]), mu=mu)
    b = ops.ScaledIdentity(-omega, dim=2)
    return a, b


def _case_dr_divergence(mu=2.0, omega=1.0, gamma=0.6) -> CaseReport:
    guard_rejected, guard_message = False, ""
    try:
        splitting.plan_dr(mu, omega, gamma)
    except (StepSizeError, DomainError) as exc:
        guard_rejected, guard_message = True, str(exc)
    a, b = _scaling_demo_specs(mu, omega)
    t = splitting.dr_operator(a, b, gamma)
    log = splitting.iterate(t, np.array([0.0, 1.0]), max_iter=500)
    factor = -gamma * omega / (1.0 - gamma * omega)
    empirical_failed = not log.converged
    return CaseReport(
        name="dr-divergence",
        params={"mu": mu, "omega": omega, "gamma": gamma},
        guard_rejected=guard_rejected,
        guard_message=guard_message,
        empirical_failed=empirical_failed,
        agree=guard_rejected == empirical_failed,
        details={
            "orthogonal_factor": factor,
            "diverged": log.diverged,
            "reason": log.reason,
            "iterations": log.n_iter,
        },
    )


def _case_averaged_pair(a1: float, a2: float, name: str, samples: int = 20) -> CaseReport:
    p1, p2 = INParams(1.0 - a1, a1), INParams(1.0 - a2, a2)
    guard_rejected, guard_message = False, ""
    cert = None
    try:
        cert = compose_general(p1, p2)
    except GuardError as exc:
        guard_rejected, guard_message = True, str(exc)
    empirical_failed = None
    worst = -math.inf
    if cert is not None:
        rng = np.random.default_rng(DEFAULT_SEED)
        empirical_failed = False
        for _ in range(samples):
            r1 = build_in_operator(1.0 - a1, a1, random_orthogonal(rng))
            r2 = build_in_operator(1.0 - a2, a2, random_orthogonal(rng))
            rep = check_membership(ops.compose(r2, r1), cert, pairs=2000)
            worst = max(worst, rep.worst_violation)
            empirical_failed = empirical_failed or not rep.passed
    return CaseReport(
        name=name,
        params={"a1": a1, "a2": a2},
        guard_rejected=guard_rejected,
        guard_message=guard_message,
        empirical_failed=empirical_failed,
        agree=(not guard_rejected) and empirical_failed is False,
        details={
            "certified": _descriptor_json(cert) if cert else None,
            "worst_violation": worst,
        },
    )


def _case_fb_tight(case="I", gamma=0.2, expected=0.75, name="fb-tight-contraction") -> CaseReport:
    mu, omega, beta = 2.0, 1.0, 1.0
    plan = splitting.plan_fb(case, mu=mu, omega=omega, beta=beta, gamma=gamma)
    a = ops.ScaledIdentity(mu if case == "I" else mu + beta, dim=2)
    b = ops.ScaledIdentity(-omega, dim=2)
    t = splitting.build_fb(plan, a, b)
    log = splitting.iterate(t, np.array([1.0, 0.0]))
    report = splitting.rate_report(log, plan)
    err = abs(report.empirical_rate - expected)
    return CaseReport(
        name=name,
        params={"case": case, "mu": mu, "omega": omega, "beta": beta, "gamma": gamma},
        guard_rejected=False,
        guard_message="",
        empirical_failed=not report.satisfied,
        agree=report.satisfied and err <= 1e-12,
        details={
            "empirical_rate": report.empirical_rate,
            "certified_rate": report.certified_rate,
            "expected": expected,
            "rate_error": err,
        },
    )


def _case_dr_scalar_rate(mu=2.0, omega=1.0, gamma=0.1) -> CaseReport:
    plan = splitting.plan_dr(mu, omega, gamma)
    a = ops.ScaledIdentity(mu, dim=2)
    b = ops.ScaledIdentity(-omega, dim=2)
    t = splitting.build_dr(plan, a, b)
    factor = 0.5 * (
        1.0
        + (1.0 + gamma * omega) * (1.0 - gamma * mu)
        / ((1.0 - gamma * omega) * (1.0 + gamma * mu))
    )
    log = splitting.iterate(t, np.array([1.0, 1.0]))
    report = splitting.rate_report(log, plan)
    err = abs(report.empirical_rate - abs(factor))
    return CaseReport(
        name="dr-scalar-rate",
        params={"mu": mu, "omega": omega, "gamma": gamma},
        guard_rejected=False,
        guard_message="",
        empirical_failed=not report.satisfied,
        agree=report.satisfied and err <= 1e-12,
        details={
            "scalar_factor": factor,
            "empirical_rate": report.empirical_rate,
            "certified_rate": report.certified_rate,
            "rate_error": err,
        },
    )


NAMED_CASES = {
    "kappa-sign": _case_kappa_sign,
    "ex-cases-i": _case_ex_cases_i,
    "chain-reject": _case_chain_reject,
    "dr-divergence": _case_dr_divergence,
    "averaged-averaged-0.5-0.5": lambda: _case_averaged_pair(0.5, 0.5, "averaged-averaged-0.5-0.5"),
    "averaged-averaged-0.7-0.6": lambda: _case_averaged_pair(0.7, 0.6, "averaged-averaged-0.7-0.6"),
    "fb-tight-contraction": lambda: _case_fb_tight("I", 0.2, 0.75, "fb-tight-contraction"),
    "fb-tight-negative": lambda: _case_fb_tight("Ib", 0.45, 7.0 / 11.0, "fb-tight-negative"),
    "dr-scalar-rate": _case_dr_scalar_rate,
}


def run_named_case(name: str, **params) -> CaseReport:
    """Reproduce one named case; raises on unrecognized names."""
    try:
        builder = NAMED_CASES[name]
    except KeyError:
        raise DomainError(
            f"unknown case {name!r}; known: {sorted(NAMED_CASES)}"
        ) from None
    return builder(**params) if params else builder()


def run_named_suite() -> list[CaseReport]:
    return [run_named_case(name) for name in NAMED_CASES]
