"""Concrete evaluatable operators on real n-vectors.

An :class:`Op` wraps a deterministic, dimension-preserving map together with
an optional class certificate (an :class:`~opsplit.calculus.INParams` or
:class:`~opsplit.calculus.ScaledConic` descriptor).  Evaluation is batched:
the wrapped function maps arrays of shape ``(..., n)`` to arrays of the same
shape.

Monotone operators enter through :class:`MonotoneSpec` subclasses, each with
a closed-form resolvent ``(Id + gamma*A)^{-1}``; proximal mappings of
hypoconvex quadratics reduce to the resolvent of their gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import calculus
from .calculus import INParams, ScaledConic, resolvent_class
from .errors import BuildError, DomainError, GuardError, NumericError
from .sampling import DEFAULT_SEED, pair_samples

__all__ = [
    "Op",
    "identity",
    "matrix_op",
    "build_rotation",
    "build_in_operator",
    "MonotoneSpec",
    "Affine",
    "ScaledIdentity",
    "SubspaceNormalPlusScale",
    "QuadraticGradient",
    "resolvent",
    "reflected_resolvent",
    "HypoconvexQuadratic",
    "prox",
    "compose",
    "scale",
    "negate",
    "relax",
    "shift",
    "estimate_rho",
]

Certificate = INParams | ScaledConic


class Op:
    """An evaluatable map on real n-vectors with an optional class certificate."""

    __slots__ = ("fn", "dim", "certificate", "name")

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        dim: int,
        certificate: Certificate | None = None,
        name: str = "",
    ):
        self.fn = fn
        self.dim = dim
        self.certificate = certificate
        self.name = name

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(
                f"dimension mismatch: operator expects {self.dim}, got {x.shape[-1]}"
            )
        return self.fn(x)

    def __repr__(self):
        return f"Op({self.name or 'anonymous'}, dim={self.dim}, cert={self.certificate})"


def identity(dim: int) -> Op:
    return Op(lambda x: x.copy(), dim, INParams(1.0, 0.0), name="Id")


def matrix_op(matrix: np.ndarray, offset=None, certificate=None, name="") -> Op:
    """The affine map ``x -> M x + b`` (batched as ``x @ M.T + b``)."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise DomainError(f"matrix must be square, got shape {m.shape}")
    b = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    if b.shape != (n,):
        raise DomainError(f"offset must have shape ({n},), got {b.shape}")
    return Op(lambda x: x @ m.T + b, n, certificate, name=name)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def build_rotation(theta: float, scale: float = 1.0, sign: int = 1) -> Op:
    """The planar map ``x -> scale*sign*R_theta x``; certified ``|scale|``-Lipschitz."""
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    m = scale * sign * rotation_matrix(theta)
    return matrix_op(m, certificate=INParams(0.0, abs(scale)), name=f"rot({theta:g})")


def _nonexpansive_bound(cert: Certificate | None) -> float | None:
    if cert is None:
        return None
    p = cert.to_in() if isinstance(cert, ScaledConic) else cert
    return p.lipschitz


def build_in_operator(alpha: float, beta: float, n: Op) -> Op:
    """The map ``x -> alpha*x + beta*N(x)`` certified as ``INParams(alpha, beta)``.

    ``n`` must carry a nonexpansive certificate.
    """
    if not beta >= 0.0:
        raise DomainError(f"beta must satisfy beta >= 0, got {beta}")
    bound = _nonexpansive_bound(n.certificate)
    if bound is None or bound > 1.0:
        raise BuildError(
            f"N must carry a nonexpansive certificate, got bound {bound}"
        )
    return Op(
        lambda x: alpha * x + beta * n(x),
        n.dim,
        INParams(alpha, beta),
        name=f"{alpha:g}*Id+{beta:g}*N",
    )


# ---------------------------------------------------------------------------
# Monotone operator specifications with closed-form resolvents


class MonotoneSpec:
    """Base for operator specifications with a known monotonicity modulus.

    ``rho`` is the certified modulus: ``<x-y, Ax-Ay> >= rho*||x-y||^2`` on the
    graph.  ``coco``, when set, claims the operator (or a stated shift of it)
    is ``coco``-cocoercive; a claim with ``rho > coco`` is contradictory and
    rejected at construction.
    """

    rho: float
    dim: int
    coco: float | None

    def _check_coco(self):
        if self.coco is not None:
            if not self.coco > 0.0:
                raise DomainError(f"cocoercivity modulus must be > 0, got {self.coco}")
            if self.rho > self.coco + 1e-12:
                raise DomainError(
                    f"inconsistent claim: rho = {self.rho} exceeds cocoercivity "
                    f"modulus {self.coco}"
                )

    def _check_gamma(self, gamma: float):
        if not gamma > 0.0:
            raise DomainError(f"step size must be > 0, got {gamma}")
        if not gamma * self.rho > -1.0:
            raise DomainError(
                f"resolvent not single-valued: gamma*rho = {gamma * self.rho} <= -1"
            )

    def resolvent(self, gamma: float) -> Op:
        raise NotImplementedError

    def forward(self) -> Op:
        """The operator itself as an evaluatable map; absent for set-valued kinds."""
        raise BuildError(f"{type(self).__name__} is not single-valued")

    def reflected_resolvent(self, gamma: float) -> Op:
        # ScaledConic(-1, a) keeps the sign structure: the *negated* reflection
        # is a-conic, which is what the sharp composition rules need.
        j = self.resolvent(gamma)
        cert = ScaledConic(-1.0, 1.0 / (1.0 + gamma * self.rho))
        return Op(lambda x: 2.0 * j(x) - x, j.dim, cert, name=f"refl({j.name})")

    def _resolvent_cert(self, gamma: float) -> INParams:
        return calculus.from_label(resolvent_class(gamma * self.rho).resolvent)


@dataclass(eq=False)
class Affine(MonotoneSpec):
    """``A x = M x + b``; exactly ``lambda_min((M + M^T)/2)``-monotone."""

    matrix: np.ndarray
    offset: np.ndarray | None = None
    rho_claimed: float | None = None
    coco: float | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n):
            raise DomainError(f"matrix must be square, got {self.matrix.shape}")
        self.offset = (
            np.zeros(n) if self.offset is None else np.asarray(self.offset, dtype=float)
        )
        self.dim = n
        exact = float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))[0])
        if self.rho_claimed is not None and self.rho_claimed > exact + 1e-10:
            raise DomainError(
                f"claimed modulus {self.rho_claimed} exceeds exact value {exact}"
            )
        self.rho = exact if self.rho_claimed is None else self.rho_claimed
        self._rho_exact = exact
        self._check_coco()

    def forward(self) -> Op:
        return matrix_op(self.matrix, self.offset, name="A")

    def resolvent(self, gamma: float) -> Op:
        self._check_gamma(gamma)
        n = self.dim
        try:
            inv = np.linalg.inv(np.eye(n) + gamma * self.matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular resolvent solve: {exc}") from exc
        gb = gamma * self.offset
        return Op(
            lambda x: (x - gb) @ inv.T, n, self._resolvent_cert(gamma), name="J"
        )


@dataclass(eq=False)
class ScaledIdentity(MonotoneSpec):
    """``A = c * Id``; ``c``-monotone with resolvent ``x/(1 + gamma*c)``."""

    c: float
    dim: int = 2
    coco: float | None = None

    def __post_init__(self):
        self.rho = self.c
        self._check_coco()

    def forward(self) -> Op:
        c = self.c
        return Op(lambda x: c * x, self.dim, name=f"{c:g}*Id")

    def resolvent(self, gamma: float) -> Op:
        self._check_gamma(gamma)
        f = 1.0 / (1.0 + gamma * self.c)
        return Op(lambda x: f * x, self.dim, self._resolvent_cert(gamma), name="J")


@dataclass(eq=False)
class SubspaceNormalPlusScale(MonotoneSpec):
    """Normal cone of a linear subspace ``U`` plus ``mu*Id``.

    ``basis`` holds spanning vectors of ``U`` as rows; the resolvent is
    ``P_U/(1 + gamma*mu)`` with ``P_U`` the orthogonal projector onto ``U``.
    Set-valued, so there is no forward evaluation.
    """

    basis: np.ndarray
    mu: float = 0.0
    coco: float | None = None

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        q, r = np.linalg.qr(b.T)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-12))
        q = q[:, :rank]
        self.projector = q @ q.T
        self.dim = b.shape[1]
        self.rho = self.mu
        self._check_coco()

    def resolvent(self, gamma: float) -> Op:
        self._check_gamma(gamma)
        p = self.projector / (1.0 + gamma * self.mu)
        return Op(lambda x: x @ p.T, self.dim, self._resolvent_cert(gamma), name="J")


@dataclass(eq=False)
class QuadraticGradient(MonotoneSpec):
    """Gradient ``x -> Q x + b`` of the quadratic ``x^T Q x/2 + b^T x``, ``Q`` symmetric."""

    matrix: np.ndarray
    offset: np.ndarray | None = None
    coco: float | None = None

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        if not np.allclose(q, q.T, atol=1e-12 * max(1.0, float(np.abs(q).max()))):
            raise DomainError("quadratic matrix must be symmetric")
        self._affine = Affine(q, self.offset, coco=self.coco)
        self.matrix = self._affine.matrix
        self.offset = self._affine.offset
        self.dim = self._affine.dim
        self.rho = self._affine.rho

    def forward(self) -> Op:
        return self._affine.forward()

    def resolvent(self, gamma: float) -> Op:
        return self._affine.resolvent(gamma)


def resolvent(spec: MonotoneSpec, gamma: float) -> Op:
    """``(Id + gamma*A)^{-1}`` evaluated in closed form."""
    return spec.resolvent(gamma)


def reflected_resolvent(spec: MonotoneSpec, gamma: float) -> Op:
    """``2*(Id + gamma*A)^{-1} - Id``."""
    return spec.reflected_resolvent(gamma)


# ---------------------------------------------------------------------------
# Proximal mappings of hypoconvex quadratics


@dataclass(eq=False)
class HypoconvexQuadratic:
    """``f(x) = x^T Q x / 2 + b^T x`` with hypoconvexity witness ``lam >= 0``.

    ``f + (lam/2)*||.||^2`` must be convex, i.e. ``Q + lam*I`` positive
    semidefinite (checked by an eigenvalue test at build time).  When ``lam``
    is omitted the smallest valid witness ``max(0, -lambda_min(Q))`` is used.
    """

    matrix: np.ndarray
    offset: np.ndarray | None = None
    lam: float | None = None

    def __post_init__(self):
        self.gradient = QuadraticGradient(self.matrix, self.offset)
        self.matrix = self.gradient.matrix
        self.offset = self.gradient.offset
        self.dim = self.gradient.dim
        lam_min = self.gradient.rho
        if self.lam is None:
            self.lam = max(0.0, -lam_min)
        else:
            if self.lam < 0.0:
                raise DomainError(f"hypoconvexity witness must be >= 0, got {self.lam}")
            if lam_min + self.lam < -1e-10:
                raise DomainError(
                    f"witness {self.lam} too small: Q + lam*I has smallest "
                    f"eigenvalue {lam_min + self.lam}"
                )


def prox(f: HypoconvexQuadratic, gamma: float) -> Op:
    """``argmin_y f(y) + ||x - y||^2/(2*gamma)``, single-valued for ``gamma < 1/lam``.

    Coincides with the resolvent of the gradient at step ``gamma``: the
    minimizer solves ``(I + gamma*Q) y = x - gamma*b``.
    """
    if not gamma > 0.0:
        raise DomainError(f"step size must be > 0, got {gamma}")
    if f.lam > 0.0 and not gamma < 1.0 / f.lam:
        raise DomainError(
            f"prox not single-valued: requires gamma < 1/lam = {1.0 / f.lam}, got {gamma}"
        )
    return f.gradient.resolvent(gamma)


# ---------------------------------------------------------------------------
# Combinators


def _compose_cert(outer: Certificate | None, inner: Certificate | None):
    """Certified descriptor of outer∘inner, or the Lipschitz fallback, or None."""
    if outer is None or inner is None:
        return None
    p_out = outer.to_in() if isinstance(outer, ScaledConic) else outer
    p_in = inner.to_in() if isinstance(inner, ScaledConic) else inner
    if isinstance(outer, ScaledConic) and isinstance(inner, ScaledConic):
        try:
            return calculus.compose_conic(inner, outer)
        except (GuardError, DomainError):
            pass
    try:
        return calculus.compose_general(p_in, p_out)
    except (GuardError, DomainError):
        pass
    try:
        return calculus.compose_kappa_theta(p_in, p_out)
    except (GuardError, DomainError):
        return INParams(0.0, calculus.naive_lipschitz(p_in, p_out))


def compose(outer: Op, inner: Op) -> Op:
    """``x -> outer(inner(x))`` with certificate propagated where certified."""
    if outer.dim != inner.dim:
        raise DomainError(
            f"dimension mismatch: {outer.dim} vs {inner.dim}"
        )
    return Op(
        lambda x: outer(inner(x)),
        inner.dim,
        _compose_cert(outer.certificate, inner.certificate),
        name=f"{outer.name}∘{inner.name}",
    )


def scale(c: float, op: Op) -> Op:
    """``x -> c * op(x)``."""
    cert = op.certificate
    if cert is not None:
        if isinstance(cert, ScaledConic) and c != 0.0:
            cert = ScaledConic(c * cert.delta, cert.alpha)
        else:
            p = cert.to_in() if isinstance(cert, ScaledConic) else cert
            cert = INParams(c * p.alpha, abs(c) * p.beta)
    return Op(lambda x: c * op(x), op.dim, cert, name=f"{c:g}*{op.name}")


def negate(op: Op) -> Op:
    """``x -> -op(x)``."""
    return scale(-1.0, op)


def relax(lam: float, op: Op) -> Op:
    """``x -> (1-lam)*x + lam*op(x)``."""
    cert = op.certificate
    if cert is not None:
        p = cert.to_in() if isinstance(cert, ScaledConic) else cert
        cert = INParams((1.0 - lam) + lam * p.alpha, abs(lam) * p.beta)
    return Op(
        lambda x: (1.0 - lam) * x + lam * op(x),
        op.dim,
        cert,
        name=f"relax({lam:g},{op.name})",
    )


def shift(c: float, op: Op) -> Op:
    """``x -> op(x) + c*x``."""
    cert = op.certificate
    if cert is not None:
        p = cert.to_in() if isinstance(cert, ScaledConic) else cert
        cert = INParams(p.alpha + c, p.beta)
    return Op(lambda x: op(x) + c * x, op.dim, cert, name=f"{op.name}+{c:g}*Id")


# ---------------------------------------------------------------------------


def estimate_rho(target: MonotoneSpec | Op, samples: int = 1000, seed: int = DEFAULT_SEED) -> float:
    """Monotonicity modulus: exact for matrix-backed specs, sampled otherwise.

    For an :class:`Op`, returns the minimum over sampled pairs of
    ``<x-y, Fx-Fy>/||x-y||^2`` (a sampling upper bound on the true modulus).
    """
    if isinstance(target, (Affine, QuadraticGradient)):
        return target._rho_exact if isinstance(target, Affine) else target.rho
    if isinstance(target, MonotoneSpec):
        return target.rho
    if samples < 2:
        raise DomainError(f"need at least 2 samples, got {samples}")
    xs, ys = pair_samples(samples, target.dim, seed=seed)
    dx = xs - ys
    df = target(xs) - target(ys)
    return float(np.min(np.sum(dx * df, axis=1) / np.sum(dx * dx, axis=1)))
