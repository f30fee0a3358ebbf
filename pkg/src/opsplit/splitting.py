"""Douglas-Rachford and forward-backward operators with certified constants.

``plan_dr`` / ``plan_fb`` validate the step size against the certified
interval and derive the constants (averagedness, contraction factor, inner
conic parameter); ``build_dr`` / ``build_fb`` assemble the operator from
monotone specifications and attach the plan's certificate.  ``iterate`` runs
the fixed-point iteration with shadow tracking and divergence heuristics, and
``rate_report`` compares the measured linear rate against the certified one.

The raw constructors ``dr_operator`` / ``fb_operator`` skip plan validation;
they exist for divergence demonstrations outside the certified range.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .calculus import INParams, ScaledConic, compose_conic
from .errors import DomainError, NumericError, StepSizeError
from .operators import MonotoneSpec, Op

__all__ = [
    "GammaRange",
    "SplitPlan",
    "plan_dr",
    "plan_fb",
    "dr_operator",
    "fb_operator",
    "build_dr",
    "build_fb",
    "dr_shadow_ops",
    "IterLog",
    "iterate",
    "RateReport",
    "rate_report",
    "write_csv",
]

FB_CASES = ("I", "Ib", "II", "IIb", "III", "IIIb")


@dataclass(frozen=True)
class GammaRange:
    """A step-size interval; ``hi=None`` means unbounded above."""

    lo: float
    hi: float | None
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, g: float) -> bool:
        if self.lo_closed:
            if not g >= self.lo:
                return False
        elif not g > self.lo:
            return False
        if self.hi is None:
            return True
        return g <= self.hi if self.hi_closed else g < self.hi

    def __str__(self):
        left = "[" if self.lo_closed else "]"
        right = "]" if self.hi_closed else "["
        hi = "+inf" if self.hi is None else repr(self.hi)
        return f"{left}{self.lo!r}, {hi}{right}"


@dataclass(frozen=True)
class SplitPlan:
    """A validated splitting configuration with its certified constants.

    ``nu`` is the inner conic/averaged parameter (for DR: of the composition
    of reflected resolvents); ``delta`` the certified Lipschitz factor
    (``1.0`` for merely averaged maps); ``averaged_alpha`` the averagedness
    of the full operator when certified.
    """

    method: str
    case: str
    mu: float
    omega: float
    gamma: float
    gamma_range: GammaRange
    nu: float
    delta: float
    averaged_alpha: float | None
    contraction: bool
    beta: float | None = None
    beta_bar: float | None = None
    lambda_relax: float | None = None
    order: str | None = None

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "case": self.case,
            "mu": self.mu,
            "omega": self.omega,
            "beta": self.beta,
            "beta_bar": self.beta_bar,
            "gamma": self.gamma,
            "gamma_range": str(self.gamma_range),
            "lambda_relax": self.lambda_relax,
            "order": self.order,
            "nu": self.nu,
            "delta": self.delta,
            "averaged_alpha": self.averaged_alpha,
            "contraction": self.contraction,
        }


def _require(cond: bool, msg: str):
    if not cond:
        raise DomainError(msg)


def plan_dr(
    mu: float,
    omega: float,
    gamma: float,
    lambda_relax: float = 0.5,
    order: str = "A_strong",
) -> SplitPlan:
    """Plan for the relaxed reflect-reflect-average operator.

    Requires ``mu > omega >= 0`` and ``gamma`` in
    ``]0, (1-lambda)*(mu-omega)/(mu*omega)[`` (unbounded when ``omega = 0``);
    then the operator is ``lambda*(mu-omega)/(mu-omega-gamma*mu*omega)``-averaged.
    """
    _require(omega >= 0.0, f"requires omega >= 0, got {omega}")
    _require(mu > omega, f"requires mu > omega, got mu={mu}, omega={omega}")
    _require(0.0 < lambda_relax < 1.0, f"relaxation must lie in ]0,1[, got {lambda_relax}")
    _require(order in ("A_strong", "B_strong"), f"unknown order {order!r}")
    hi = None if omega == 0.0 else (1.0 - lambda_relax) * (mu - omega) / (mu * omega)
    rng = GammaRange(0.0, hi)
    if not rng.contains(gamma):
        raise StepSizeError(
            f"step size {gamma} outside certified interval {rng}", interval=rng
        )
    nu = (mu - omega) / (mu - omega - gamma * mu * omega)
    # Cross-check against the conic-composition route (catches transcription bugs).
    rho_a, rho_b = (mu, -omega) if order == "A_strong" else (-omega, mu)
    conic = compose_conic(
        ScaledConic(-1.0, 1.0 / (1.0 + gamma * rho_a)),
        ScaledConic(-1.0, 1.0 / (1.0 + gamma * rho_b)),
    )
    if abs(conic.alpha - nu) > 1e-9 * max(1.0, abs(nu)):
        raise NumericError(
            f"internal constant mismatch: {conic.alpha} vs {nu}"
        )
    alpha = lambda_relax * nu
    return SplitPlan(
        method="DR",
        case="",
        mu=mu,
        omega=omega,
        gamma=gamma,
        gamma_range=rng,
        nu=nu,
        delta=1.0,
        averaged_alpha=alpha,
        contraction=False,
        lambda_relax=lambda_relax,
        order=order,
    )


def _fb_constants(case, mu, omega, beta, beta_bar, gamma):
    if case == "I":
        return gamma * beta / (2.0 * (1.0 - gamma * mu)), (1.0 - gamma * mu) / (1.0 - gamma * omega)
    if case == "Ib":
        return (
            gamma * beta / (2.0 * (gamma * (mu + beta) - 1.0)),
            (1.0 - gamma * (mu + beta)) / (1.0 - gamma * omega),
        )
    if case == "II":
        return gamma * beta_bar / (2.0 * (1.0 + gamma * omega)), (1.0 + gamma * omega) / (1.0 + gamma * mu)
    if case == "IIb":
        return (
            gamma * beta_bar / (2.0 * (gamma * beta_bar - gamma * omega - 1.0)),
            (1.0 + gamma * omega - gamma * beta_bar) / (1.0 + gamma * mu),
        )
    if case == "III":
        return gamma * beta_bar / (2.0 * (1.0 + gamma * beta)), (1.0 + gamma * beta) / (1.0 + gamma * mu)
    # IIIb
    return (
        gamma * beta_bar / (2.0 * (gamma * beta_bar - gamma * beta - 1.0)),
        (1.0 + gamma * beta - gamma * beta_bar) / (1.0 + gamma * mu),
    )


def plan_fb(
    case: str,
    mu: float,
    omega: float = 0.0,
    gamma: float = None,
    beta: float = None,
    beta_bar: float = None,
) -> SplitPlan:
    """Plan for the forward-backward operator ``J_{gB}(Id - g*A)``.

    Case I/Ib: forward side strongly monotone (``A`` mu-monotone with
    ``A - mu*Id`` ``1/beta``-cocoercive, ``B`` ``(-omega)``-monotone).
    Case II/IIb: shift on the forward side (``A + omega*Id`` cocoercive,
    ``B`` mu-monotone, bound ``beta_bar > max(beta, mu+omega)``).
    Case III/IIIb: ``A`` merely ``beta``-Lipschitz, ``B`` mu-monotone.
    The b-variants take the step size in the adjacent half-open interval and
    certify a contraction with a negative scale factor in ``]-1, 0]``.
    """
    _require(case in FB_CASES, f"unknown forward-backward case {case!r}")
    _require(gamma is not None, "gamma is required")
    _require(beta is not None and beta > 0.0, f"requires beta > 0, got {beta}")
    _require(omega >= 0.0, f"requires omega >= 0, got {omega}")

    if case in ("I", "Ib"):
        if case == "I":
            _require(mu >= omega, f"case I requires mu >= omega, got {mu} < {omega}")
            rng = GammaRange(0.0, 2.0 / (beta + 2.0 * mu))
        else:
            _require(mu > omega, f"case Ib requires mu > omega, got {mu} <= {omega}")
            rng = GammaRange(2.0 / (beta + 2.0 * mu), 2.0 / (beta + mu), lo_closed=True)
    elif case in ("II", "IIb"):
        _require(beta_bar is not None, "cases II/IIb require beta_bar")
        _require(
            beta_bar > max(beta, mu + omega),
            f"requires beta_bar > max(beta, mu+omega) = {max(beta, mu + omega)}, got {beta_bar}",
        )
        if case == "II":
            _require(mu >= omega, f"case II requires mu >= omega, got {mu} < {omega}")
            rng = GammaRange(0.0, 2.0 / (beta_bar - 2.0 * omega))
        else:
            _require(mu > omega, f"case IIb requires mu > omega, got {mu} <= {omega}")
            rng = GammaRange(
                2.0 / (beta_bar - 2.0 * omega),
                2.0 / (beta_bar - mu - omega),
                lo_closed=True,
            )
    else:  # III / IIIb
        _require(beta_bar is not None, "cases III/IIIb require beta_bar")
        if case == "III":
            _require(mu >= beta, f"case III requires mu >= beta, got {mu} < {beta}")
            _require(beta_bar > 2.0 * beta, f"requires beta_bar > 2*beta, got {beta_bar}")
            rng = GammaRange(0.0, 2.0 / (beta_bar - 2.0 * beta))
        else:
            _require(mu > beta, f"case IIIb requires mu > beta, got {mu} <= {beta}")
            _require(beta_bar > mu + beta, f"requires beta_bar > mu+beta, got {beta_bar}")
            rng = GammaRange(
                2.0 / (beta_bar - 2.0 * beta),
                2.0 / (beta_bar - mu - beta),
                lo_closed=True,
            )

    if not rng.contains(gamma):
        raise StepSizeError(
            f"step size {gamma} outside case {case} interval {rng}", interval=rng
        )
    nu, delta = _fb_constants(case, mu, omega, beta, beta_bar, gamma)
    b_case = case.endswith("b")
    if b_case:
        # The gamma interval alone does not pin the factor into ]-1, 0] when
        # omega > 0; reject at the boundary rather than certify a non-contraction.
        if not (-1.0 < delta <= 0.0):
            raise DomainError(
                f"case {case} factor {delta} outside ]-1, 0]; "
                f"no contraction certified at gamma={gamma}"
            )
        _require(0.0 < nu <= 1.0, f"internal: nu = {nu} outside ]0,1]")
        averaged_alpha = None
    else:
        _require(0.0 < nu < 1.0, f"internal: nu = {nu} outside ]0,1[")
        _require(0.0 < delta <= 1.0, f"internal: delta = {delta} outside ]0,1]")
        averaged_alpha = 1.0 - delta * (1.0 - nu) / (2.0 - nu)
    return SplitPlan(
        method="FB",
        case=case,
        mu=mu,
        omega=omega,
        gamma=gamma,
        gamma_range=rng,
        nu=nu,
        delta=delta,
        averaged_alpha=averaged_alpha,
        contraction=abs(delta) < 1.0,
        beta=beta,
        beta_bar=beta_bar,
    )


# ---------------------------------------------------------------------------
# Operator assembly


def dr_operator(
    A: MonotoneSpec, B: MonotoneSpec, gamma: float, lambda_relax: float = 0.5
) -> Op:
    """``(1-lambda)*Id + lambda*R_{gB} R_{gA}`` without plan validation."""
    ra = A.reflected_resolvent(gamma)
    rb = B.reflected_resolvent(gamma)
    return ops.relax(lambda_relax, ops.compose(rb, ra))


def fb_operator(A: MonotoneSpec | Op, B: MonotoneSpec, gamma: float) -> Op:
    """``J_{gB}(Id - gamma*A)`` without plan validation."""
    fa = A.forward() if isinstance(A, MonotoneSpec) else A
    step = ops.shift(1.0, ops.scale(-gamma, fa))
    return ops.compose(B.resolvent(gamma), step)


def _check_modulus(name: str, spec: MonotoneSpec, required: float):
    if spec.rho < required - 1e-12:
        raise DomainError(
            f"modulus mismatch: {name} must be {required}-monotone, "
            f"spec certifies only {spec.rho}"
        )


def build_dr(plan: SplitPlan, A: MonotoneSpec, B: MonotoneSpec) -> Op:
    """Assemble the planned operator; fixed points map to zeros of ``A + B``
    through the resolvent of ``A``."""
    _require(plan.method == "DR", "plan is not a DR plan")
    rho_a, rho_b = (
        (plan.mu, -plan.omega) if plan.order == "A_strong" else (-plan.omega, plan.mu)
    )
    _check_modulus("A", A, rho_a)
    _check_modulus("B", B, rho_b)
    t = dr_operator(A, B, plan.gamma, plan.lambda_relax)
    auto = t.certificate
    cert = INParams(1.0 - plan.averaged_alpha, plan.averaged_alpha)
    # The propagated certificate comes from the specs' exact moduli, which are
    # at least the plan's, so its disk must sit inside the planned one.
    if isinstance(auto, INParams) and (
        abs(auto.alpha - cert.alpha) + auto.beta > cert.beta + 1e-9
    ):
        raise NumericError(f"certificate cross-check failed: {auto} vs {cert}")
    t.certificate = cert
    return t


def build_fb(plan: SplitPlan, A: MonotoneSpec | Op, B: MonotoneSpec) -> Op:
    """Assemble the planned forward-backward operator; its fixed points are
    the zeros of ``A + B``."""
    _require(plan.method == "FB", "plan is not an FB plan")
    t = fb_operator(A, B, plan.gamma)
    t.certificate = ScaledConic(plan.delta, plan.nu)
    return t


def dr_shadow_ops(A: MonotoneSpec, B: MonotoneSpec, gamma: float) -> tuple[Op, Op]:
    """The two shadow maps ``x -> J_{gA} x`` and ``x -> J_{gB} R_{gA} x``."""
    ja = A.resolvent(gamma)
    ra = A.reflected_resolvent(gamma)
    jb = B.resolvent(gamma)
    return ja, ops.compose(jb, ra)


# ---------------------------------------------------------------------------
# Iteration driver


@dataclass
class IterLog:
    """Per-iteration record of a fixed-point run."""

    points: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    err_norms: list | None = None
    shadow_gaps: list | None = None
    converged: bool = False
    diverged: bool = False
    reason: str = ""
    n_iter: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    @property
    def ratios(self) -> list:
        s = self.step_norms
        return [s[i + 1] / s[i] for i in range(len(s) - 1) if s[i] > 0.0]


def iterate(
    T: Op,
    x0,
    max_iter: int = 10_000,
    tol_fix: float = 1e-10,
    x_star=None,
    track_shadow: bool = False,
    A: MonotoneSpec | None = None,
    B: MonotoneSpec | None = None,
    gamma: float | None = None,
    divergence_factor: float = 1e6,
    growth_window: int = 50,
) -> IterLog:
    """Run ``x_{k+1} = T x_k`` until the relative step drops below ``tol_fix``.

    Flags divergence when the iterate norm exceeds
    ``divergence_factor*(1+||x0||)`` or the step norm grows for
    ``growth_window`` consecutive iterations.  With ``track_shadow`` (needs
    ``A``, ``B``, ``gamma``) records the gap between the two shadow points.
    """
    x = np.asarray(x0, dtype=float)
    if x.shape != (T.dim,):
        raise DomainError(f"x0 must have shape ({T.dim},), got {x.shape}")
    shadows = None
    if track_shadow:
        if A is None or B is None or gamma is None:
            raise DomainError("shadow tracking requires A, B and gamma")
        shadows = dr_shadow_ops(A, B, gamma)

    log = IterLog(err_norms=[] if x_star is not None else None,
                  shadow_gaps=[] if shadows else None)
    target = None if x_star is None else np.asarray(x_star, dtype=float)
    norm_cap = divergence_factor * (1.0 + float(np.linalg.norm(x)))

    def record(pt):
        log.points.append(pt)
        if target is not None:
            log.err_norms.append(float(np.linalg.norm(pt - target)))
        if shadows is not None:
            log.shadow_gaps.append(float(np.linalg.norm(shadows[0](pt) - shadows[1](pt))))

    record(x)
    growth = 0
    for k in range(1, max_iter + 1):
        x_new = T(x)
        if not np.all(np.isfinite(x_new)):
            raise NumericError(f"non-finite iterate at iteration {k}", iteration=k)
        step = float(np.linalg.norm(x_new - x))
        log.step_norms.append(step)
        record(x_new)
        log.n_iter = k
        if step <= tol_fix * (1.0 + float(np.linalg.norm(x))):
            log.converged = True
            x = x_new
            break
        growth = growth + 1 if (len(log.step_norms) >= 2 and step > log.step_norms[-2]) else 0
        x = x_new
        if float(np.linalg.norm(x)) > norm_cap:
            log.diverged = True
            log.reason = f"iterate norm exceeded {norm_cap:g} at iteration {k}"
            break
        if growth >= growth_window:
            log.diverged = True
            log.reason = f"step norm grew for {growth_window} consecutive iterations"
            break
    if not log.converged and not log.diverged:
        log.reason = f"no convergence within {max_iter} iterations"
    return log


@dataclass(frozen=True)
class RateReport:
    empirical_rate: float
    certified_rate: float
    satisfied: bool
    reason: str = ""


def rate_report(log: IterLog, plan: SplitPlan) -> RateReport:
    """Geometric-mean step ratio over the tail half vs the certified rate."""
    certified = abs(plan.delta) if plan.contraction else 1.0
    if log.diverged:
        return RateReport(math.inf, certified, False, f"diverged: {log.reason}")
    if len(log.step_norms) < 10:
        raise DomainError(
            f"rate report needs at least 10 steps, got {len(log.step_norms)}"
        )
    if not log.converged and log.err_norms is None:
        raise DomainError("rate report needs a converged run or a known fixed point")
    s = [v for v in log.step_norms if v > 0.0]
    if len(s) < 2:
        return RateReport(0.0, certified, True, "exact fixed point reached")
    m = len(s) // 2
    empirical = (s[-1] / s[m]) ** (1.0 / (len(s) - 1 - m)) if len(s) - 1 > m else s[-1] / s[m - 1]
    return RateReport(empirical, certified, empirical <= certified + 1e-8, "")


def write_csv(log: IterLog, path) -> None:
    """Columns: k, step_norm, err_norm, shadow_gap (blank where unknown)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "step_norm", "err_norm", "shadow_gap"])
        for k in range(len(log.points)):
            row = [k]
            row.append(repr(log.step_norms[k - 1]) if k >= 1 else "")
            row.append(repr(log.err_norms[k]) if log.err_norms is not None else "")
            row.append(repr(log.shadow_gaps[k]) if log.shadow_gaps is not None else "")
            w.writerow(row)
