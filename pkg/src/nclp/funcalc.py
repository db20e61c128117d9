"""Sectorial functional calculus for structured operators on matrix space.

A *superoperator* here is a linear map on the d x d complex matrices.
Structured kinds (left/right multiplication, Schur multiplier, inner
``ax - xb`` derivations, unitary-sandwiched Schur forms) carry fast
resolvent and functional-calculus paths; a dense d^2 x d^2 matrix is the
general fallback.  On top of the operator kinds this module provides

* resolvents with spectral-collision detection,
* the contour-quadrature calculus f(A) = (1/2 pi i) int f(z) R(z,A) dz
  over the boundary of a sector, for functions with polynomial decay,
* the extended calculus f(A) = g(A)^{-1} (fg)(A) with g(z) = z/(1+z)^2
  for merely bounded analytic f (kernel components are sent to 0),
* imaginary powers, sectoriality profiling (type angle and resolvent
  constants), and two classical integral identities: the Gaussian
  average over a unitary group, and square-root subordination of a
  semigroup.

Pure functions throughout; operators are immutable after construction.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    NumericsError,
    SpectralCollisionError,
    adjoint,
    as_matrix,
)

EIG_COND_MAX = 1e8
ZERO_RTOL = 1e-9  # |lambda| below this times the spectral scale counts as kernel


class ContourTruncationWarning(UserWarning):
    """The contour window looks too narrow for the requested tolerance."""


# ---------------------------------------------------------------------------
# Holomorphic functions on sectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolFn:
    """An analytic function on the open sector of half-angle ``theta``.

    ``klass`` is ``"hinf0"`` when the function obeys the two-sided decay
    bound |f(z)| <= c |z|^s / (1+|z|)^(2s) on the sector (making the
    boundary integral absolutely convergent) and ``"hinf"`` when it is
    merely bounded.  For ``hinf0`` the bound is spot-checked on a probe
    grid at construction time via :func:`make_hinf0`.
    """

    theta: float
    fn: object
    klass: str
    name: str = "f"
    decay: tuple | None = None

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=np.complex128))


def _probe_points(theta: float) -> np.ndarray:
    radii = np.logspace(-8, 8, 33)
    angles = np.array([-0.999 * theta, -0.5 * theta, 0.0, 0.5 * theta, 0.999 * theta])
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def make_hinf0(theta, fn, s, c=None, name="f") -> HolFn:
    """Build a decaying sector function, measuring or verifying its bound."""
    z = _probe_points(theta)
    vals = np.abs(np.asarray(fn(z)))
    envelope = np.abs(z) ** s / (1.0 + np.abs(z)) ** (2 * s)
    ratio = float(np.max(vals / envelope))
    if not np.isfinite(ratio):
        raise ValueError(f"{name}: decay probe produced non-finite values")
    if c is None:
        c = 1.05 * ratio
    elif ratio > c * (1 + 1e-9):
        raise ValueError(
            f"{name}: decay bound c={c} violated on probe grid (needs {ratio:.4g})"
        )
    return HolFn(theta=float(theta), fn=fn, klass="hinf0", name=name, decay=(float(s), float(c)))


def make_hinf(theta, fn, name="f") -> HolFn:
    return HolFn(theta=float(theta), fn=fn, klass="hinf", name=name, decay=None)


def _fn_g(z):
    return z / (1.0 + z) ** 2


_THETA_WIDE = 3.0  # functions analytic off the negative real axis
_THETA_EXP = 1.4  # functions involving exp(-z): sector must stay right of i R


def library(spec: str) -> HolFn:
    """Resolve a string id to a library function.

    Supported ids: ``g`` (z/(1+z)^2), ``gn:<n>`` (n^2 z/((n+z)(1+nz))),
    ``zexp`` (z e^-z), ``sqrtzexp`` (sqrt(z) e^-z), ``zis:<s>`` (z^{is},
    bounded class), ``heat:<t>`` (e^{-tz} - (1+z)^{-1}).
    """
    if spec == "g":
        return make_hinf0(_THETA_WIDE, _fn_g, s=1.0, name="g")
    if spec.startswith("gn:"):
        n = int(spec.split(":", 1)[1])
        if n < 1:
            raise ValueError("gn:<n> needs n >= 1")
        return make_hinf0(
            _THETA_WIDE,
            lambda z, n=n: (n * n) * z / ((n + z) * (1.0 + n * z)),
            s=1.0,
            name=spec,
        )
    if spec == "zexp":
        return make_hinf0(_THETA_EXP, lambda z: z * np.exp(-z), s=1.0, name="zexp")
    if spec == "sqrtzexp":
        return make_hinf0(
            _THETA_EXP, lambda z: np.sqrt(z) * np.exp(-z), s=0.5, name="sqrtzexp"
        )
    if spec.startswith("zis:"):
        s = float(spec.split(":", 1)[1])
        return make_hinf(
            _THETA_WIDE, lambda z, s=s: np.exp(1j * s * np.log(z)), name=spec
        )
    if spec.startswith("heat:"):
        t = float(spec.split(":", 1)[1])
        if t <= 0:
            raise ValueError("heat:<t> needs t > 0")
        return make_hinf0(
            _THETA_EXP,
            lambda z, t=t: np.exp(-t * z) - 1.0 / (1.0 + z),
            s=1.0,
            name=spec,
        )
    raise ValueError(f"unknown function id {spec!r}")


def product_fn(f: HolFn, g: HolFn, name=None) -> HolFn:
    fn = lambda z: f.fn(z) * g.fn(z)  # noqa: E731
    theta = min(f.theta, g.theta)
    if f.klass == "hinf" and g.klass == "hinf":
        return make_hinf(theta, fn, name=name or f"{f.name}*{g.name}")
    s = sum(h.decay[0] for h in (f, g) if h.klass == "hinf0")
    return make_hinf0(theta, fn, s=s, name=name or f"{f.name}*{g.name}")


# ---------------------------------------------------------------------------
# Operator kinds
# ---------------------------------------------------------------------------


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128).reshape(-1)


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d)


def _mat_eig(a: np.ndarray):
    """Eigendecomposition with hermitian fast path and condition guard."""
    a = as_matrix(a)
    herm = np.max(np.abs(a - adjoint(a))) <= 1e-12 * max(1.0, float(np.max(np.abs(a))))
    if herm:
        lam, v = np.linalg.eigh(0.5 * (a + adjoint(a)))
        return lam.astype(complex), v, adjoint(v)
    lam, v = np.linalg.eig(a)
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > EIG_COND_MAX:
        raise NumericsError(
            f"eigenvector matrix condition {cond:.3e} exceeds {EIG_COND_MAX:.0e}; "
            "operator is defective or near-defective"
        )
    return lam, v, np.linalg.inv(v)


def _apply_scalar(fn, lam, zero_value=0.0, zero_tol=None) -> np.ndarray:
    """Evaluate fn on a spectrum array with the f(0) = zero_value convention."""
    lam = np.asarray(lam, dtype=np.complex128)
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    tol = (zero_tol if zero_tol is not None else ZERO_RTOL) * max(scale, 1e-300)
    out = np.empty(lam.shape, dtype=np.complex128)
    zero = np.abs(lam) <= tol
    out[zero] = zero_value
    if np.any(~zero):
        out[~zero] = np.asarray(fn(lam[~zero]))
    return out


class LpOperator:
    """Base class: a linear map on d x d complex matrices.

    Subclasses must provide ``apply`` and ``dim``; everything else has a
    dense fallback through the materialized superoperator, which the
    structured kinds override with fast paths.
    """

    dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvals(self.to_dense())

    def dagger(self) -> "LpOperator":
        """Adjoint for the Frobenius inner product <x, y> = tr(y* x)."""
        return DenseOp(adjoint(self.to_dense()))

    def _resolvent_impl(self, z: complex) -> "LpOperator":
        n = self.dim * self.dim
        return DenseOp(np.linalg.solve(z * np.eye(n) - self.to_dense(), np.eye(n)))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None) -> "LpOperator":
        """Spectral application of a scalar function (the eigen oracle)."""
        lam, v, vinv = _mat_eig(self.to_dense())
        return DenseOp((v * _apply_scalar(fn, lam, zero_value, zero_tol)) @ vinv)

    def __call__(self, x):
        return self.apply(x)

    def to_dense(self) -> np.ndarray:
        """Materialize the d^2 x d^2 superoperator (row-major vec)."""
        cached = getattr(self, "_dense", None)
        if cached is not None:
            return cached
        d = self.dim
        s = np.empty((d * d, d * d), dtype=np.complex128)
        basis = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                basis[i, j] = 1.0
                s[:, i * d + j] = vec(self.apply(basis))
                basis[i, j] = 0.0
        self._dense = s
        return s

    def spectral_scale(self) -> float:
        lam = np.abs(self.spectrum())
        top = float(np.max(lam)) if lam.size else 0.0
        return top if top > 0 else 1.0

    def sector_angle(self) -> float:
        """max |Arg(lambda)| over the nonzero spectrum (0 for kernel-only)."""
        lam = self.spectrum()
        nz = lam[np.abs(lam) > ZERO_RTOL * self.spectral_scale()]
        if nz.size == 0:
            return 0.0
        return float(np.max(np.abs(np.angle(nz))))

    def kernel_projection(self, zero_tol=None) -> "LpOperator":
        """Spectral projection onto N(A) along R(A)."""
        return self.eigen_fn(
            lambda z: np.zeros_like(z), zero_value=1.0, zero_tol=zero_tol
        )


class LeftMult(LpOperator):
    """x -> a x."""

    def __init__(self, a):
        self.a = as_matrix(a)
        if self.a.shape[0] != self.a.shape[1]:
            raise ValueError("left multiplication needs a square symbol")
        self.dim = self.a.shape[0]

    def apply(self, x):
        return self.a @ x

    def spectrum(self):
        return np.linalg.eigvals(self.a)

    def dagger(self):
        return LeftMult(adjoint(self.a))

    def _resolvent_impl(self, z):
        d = self.dim
        return LeftMult(np.linalg.solve(z * np.eye(d) - self.a, np.eye(d)))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        lam, v, vinv = _mat_eig(self.a)
        return LeftMult((v * _apply_scalar(fn, lam, zero_value, zero_tol)) @ vinv)

    def __repr__(self):
        return f"LeftMult(dim={self.dim})"


class RightMult(LpOperator):
    """x -> x b.  Functions act through the symbol: f(R_b) = R_{f(b)}."""

    def __init__(self, b):
        self.b = as_matrix(b)
        if self.b.shape[0] != self.b.shape[1]:
            raise ValueError("right multiplication needs a square symbol")
        self.dim = self.b.shape[0]

    def apply(self, x):
        return x @ self.b

    def spectrum(self):
        return np.linalg.eigvals(self.b)

    def dagger(self):
        return RightMult(adjoint(self.b))

    def _resolvent_impl(self, z):
        d = self.dim
        return RightMult(np.linalg.solve(z * np.eye(d) - self.b, np.eye(d)))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        lam, v, vinv = _mat_eig(self.b)
        return RightMult((v * _apply_scalar(fn, lam, zero_value, zero_tol)) @ vinv)

    def __repr__(self):
        return f"RightMult(dim={self.dim})"


class SchurMult(LpOperator):
    """x -> m * x (entrywise)."""

    def __init__(self, m):
        self.m = as_matrix(m)
        if self.m.shape[0] != self.m.shape[1]:
            raise ValueError("Schur multiplier needs a square symbol")
        self.dim = self.m.shape[0]

    def apply(self, x):
        return self.m * x

    def spectrum(self):
        return self.m.ravel()

    def dagger(self):
        return SchurMult(np.conj(self.m))

    def _resolvent_impl(self, z):
        return SchurMult(1.0 / (z - self.m))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        return SchurMult(_apply_scalar(fn, self.m, zero_value, zero_tol))

    def __repr__(self):
        return f"SchurMult(dim={self.dim})"


class SandwichSchur(LpOperator):
    """x -> u (w * (u* x v)) v* with u, v unitary.

    The rank-one frame u_i v_j* diagonalizes the map with eigenvalues
    w_ij, so resolvents and functional calculus act entrywise on w.
    """

    def __init__(self, u, v, w):
        self.u = as_matrix(u)
        self.v = as_matrix(v)
        self.w = as_matrix(w)
        self.dim = self.u.shape[0]
        if self.v.shape != self.u.shape or self.w.shape != self.u.shape:
            raise ValueError("u, v, w must share one square shape")

    def apply(self, x):
        return self.u @ (self.w * (adjoint(self.u) @ x @ self.v)) @ adjoint(self.v)

    def spectrum(self):
        return self.w.ravel()

    def dagger(self):
        return SandwichSchur(self.u, self.v, np.conj(self.w))

    def _resolvent_impl(self, z):
        return SandwichSchur(self.u, self.v, 1.0 / (z - self.w))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        return SandwichSchur(
            self.u, self.v, _apply_scalar(fn, self.w, zero_value, zero_tol)
        )

    def __repr__(self):
        return f"SandwichSchur(dim={self.dim})"


class AdPair(SandwichSchur):
    """The inner derivation x -> a x - x b for hermitian a, b.

    Diagonalizing a = U alpha U* and b = V beta V* turns the map into the
    sandwiched Schur multiplier with symbol alpha_i - beta_j.
    """

    def __init__(self, a, b):
        a = as_matrix(a)
        b = as_matrix(b)
        for name, m in (("a", a), ("b", b)):
            if np.max(np.abs(m - adjoint(m))) > 1e-10 * max(1.0, float(np.max(np.abs(m)))):
                raise ValueError(f"AdPair requires hermitian {name}")
        alpha, u = np.linalg.eigh(0.5 * (a + adjoint(a)))
        beta, v = np.linalg.eigh(0.5 * (b + adjoint(b)))
        super().__init__(u, v, (alpha[:, None] - beta[None, :]).astype(complex))
        self.a = a
        self.b = b

    def apply(self, x):
        return self.a @ x - x @ self.b

    def __repr__(self):
        return f"AdPair(dim={self.dim})"


class DenseOp(LpOperator):
    """Arbitrary superoperator given by its d^2 x d^2 matrix (row-major vec)."""

    def __init__(self, s):
        self.s = as_matrix(s)
        n = self.s.shape[0]
        if self.s.shape[1] != n:
            raise ValueError("superoperator matrix must be square")
        d = math.isqrt(n)
        if d * d != n:
            raise ValueError(f"superoperator size {n} is not a perfect square")
        self.dim = d
        self._dense = self.s

    def apply(self, x):
        return unvec(self.s @ vec(x), self.dim)

    def spectrum(self):
        return np.linalg.eigvals(self.s)

    def dagger(self):
        return DenseOp(adjoint(self.s))

    def _resolvent_impl(self, z):
        n = self.s.shape[0]
        return DenseOp(np.linalg.solve(z * np.eye(n) - self.s, np.eye(n)))

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        lam, v, vinv = _mat_eig(self.s)
        return DenseOp((v * _apply_scalar(fn, lam, zero_value, zero_tol)) @ vinv)

    def __repr__(self):
        return f"DenseOp(dim={self.dim})"


class AmplifiedOp(LpOperator):
    """I_m (x) T acting blockwise on (m d) x (m d) matrices."""

    def __init__(self, base: LpOperator, m: int):
        if m < 1:
            raise ValueError("amplification level must be >= 1")
        self.base = base
        self.m = m
        self.dim = base.dim * m

    def apply(self, x):
        d, m = self.base.dim, self.m
        blocks = np.asarray(x, dtype=np.complex128).reshape(m, d, m, d)
        out = np.empty_like(blocks)
        for i in range(m):
            for j in range(m):
                out[i, :, j, :] = self.base.apply(blocks[i, :, j, :])
        return out.reshape(m * d, m * d)

    def spectrum(self):
        return np.tile(self.base.spectrum(), self.m * self.m)

    def dagger(self):
        return AmplifiedOp(self.base.dagger(), self.m)

    def _resolvent_impl(self, z):
        return AmplifiedOp(self.base._resolvent_impl(z), self.m)

    def eigen_fn(self, fn, zero_value=0.0, zero_tol=None):
        return AmplifiedOp(self.base.eigen_fn(fn, zero_value, zero_tol), self.m)

    def __repr__(self):
        return f"Amplified({self.base!r}, m={self.m})"


def resolvent(op: LpOperator, z: complex, tol: float = 1e-9) -> LpOperator:
    """R(z, A) = (z - A)^{-1}, refusing z within tol of the spectrum."""
    lam = op.spectrum()
    scale = max(op.spectral_scale(), abs(z), 1.0)
    dist = float(np.min(np.abs(lam - z))) if lam.size else math.inf
    if dist <= tol * scale:
        raise SpectralCollisionError(
            f"z = {z:.6g} is within {dist:.3e} of the spectrum (scale {scale:.3g})"
        )
    return op._resolvent_impl(z)


def choi_matrix(op: LpOperator) -> np.ndarray:
    """Choi matrix sum_{ij} E_ij (x) op(E_ij); PSD iff op is completely positive."""
    d = op.dim
    c = np.zeros((d * d, d * d), dtype=np.complex128)
    e = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            e[i, j] = 1.0
            c[i * d : (i + 1) * d, j * d : (j + 1) * d] = op.apply(e)
            e[i, j] = 0.0
    return c


# ---------------------------------------------------------------------------
# Contour calculus
# ---------------------------------------------------------------------------


@dataclass
class ContourSpec:
    """Quadrature data for the sector-boundary contour.

    The two rays r e^{+- i gamma} are discretized log-uniformly in radius
    over [r_min, r_max] with ``n_points`` nodes per ray (trapezoid weights
    in log r).
    """

    gamma: float
    r_min: float
    r_max: float
    n_points: int = 400

    def __post_init__(self):
        if not (0 < self.gamma < math.pi):
            raise ValueError("gamma must lie in (0, pi)")
        if not (0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if self.n_points < 8:
            raise ValueError("need at least 8 nodes per ray")

    def nodes(self):
        u = np.linspace(math.log(self.r_min), math.log(self.r_max), self.n_points)
        w = np.full(self.n_points, u[1] - u[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return np.exp(u), w


# Radial window relative to the extreme spectral magnitudes.  The inner
# cutoff must beat 1e-6 relative accuracy even for a kernel eigenvalue
# paired with decay s = 1/2 (error ~ sqrt(r_min)); the outer one covers
# functions decaying only like 1/r with near-cancelling values on the
# spectrum.  The log-trapezoid discretization error stays beyond all
# orders at 400 nodes per ray, so the window can afford to be huge.
R_MIN_REL = 1e-14
R_MAX_REL = 1e10


def default_contour(op: LpOperator, f: HolFn, n_points: int = 400) -> ContourSpec:
    omega = op.sector_angle()
    if omega >= f.theta:
        raise ValueError(
            f"operator type angle {omega:.3f} is not below the function sector {f.theta:.3f}"
        )
    gamma = 0.5 * (omega + f.theta)
    lam = np.abs(op.spectrum())
    hi = float(np.max(lam)) if lam.size and np.max(lam) > 0 else 1.0
    nz = lam[lam > ZERO_RTOL * hi]
    lo = float(np.min(nz)) if nz.size else hi
    return ContourSpec(gamma=gamma, r_min=R_MIN_REL * lo, r_max=R_MAX_REL * hi, n_points=n_points)


def _contour_coefficients(f: HolFn, spec: ContourSpec):
    """Nodes z_j and weights c_j with f(A) ~= sum_j c_j R(z_j, A).

    The boundary of the sector is traversed counterclockwise around the
    spectrum: down the upper ray, out the lower ray.
    """
    r, w = spec.nodes()
    g = spec.gamma
    z_lo = r * cmath.exp(-1j * g)
    z_hi = r * cmath.exp(1j * g)
    c_lo = w * r * cmath.exp(-1j * g) * f(z_lo) / (2j * math.pi)
    c_hi = -w * r * cmath.exp(1j * g) * f(z_hi) / (2j * math.pi)
    return np.concatenate([z_lo, z_hi]), np.concatenate([c_lo, c_hi])


def contour_kernel(f: HolFn, spec: ContourSpec):
    """Scalar quadrature q(lam) ~= (1/2 pi i) int f(z)/(z - lam) dz,
    vectorized over arrays of spectral points."""
    z, c = _contour_coefficients(f, spec)

    def q(lam):
        lam = np.asarray(lam, dtype=np.complex128)
        flat = lam.ravel()
        out = np.zeros(flat.shape, dtype=np.complex128)
        chunk = max(1, int(2e6) // max(z.size, 1))
        for k in range(0, flat.size, chunk):
            part = flat[k : k + chunk]
            out[k : k + chunk] = np.sum(
                c[:, None] / (z[:, None] - part[None, :]), axis=0
            )
        return out.reshape(lam.shape)

    return q


def _check_contour(op: LpOperator, f: HolFn, spec: ContourSpec):
    omega = op.sector_angle()
    if not (omega < spec.gamma < f.theta):
        raise ValueError(
            f"need type angle {omega:.3f} < gamma {spec.gamma:.3f} < theta {f.theta:.3f}"
        )
    lam = op.spectrum()
    scale = op.spectral_scale()
    nz = lam[np.abs(lam) > ZERO_RTOL * scale]
    if nz.size:
        margin = spec.gamma - float(np.max(np.abs(np.angle(nz))))
        if margin <= 1e-12:
            raise SpectralCollisionError(
                f"spectrum touches the contour (angle margin {margin:.3e})"
            )
        radii = np.abs(nz)
        if np.max(radii) > spec.r_max / math.e or np.min(radii) < spec.r_min * math.e:
            raise ValueError(
                "contour radial window does not safely enclose the spectrum: "
                f"|lambda| in [{np.min(radii):.3e}, {np.max(radii):.3e}] vs "
                f"[{spec.r_min:.3e}, {spec.r_max:.3e}]"
            )


def _truncation_estimate(f: HolFn, spec: ContourSpec) -> float:
    ends = np.array([spec.r_min, spec.r_max])
    vals = np.abs(f(ends * cmath.exp(1j * spec.gamma))) + np.abs(
        f(ends * cmath.exp(-1j * spec.gamma))
    )
    # roughly |f| dr/r over one extra decade at each end
    return float(np.sum(vals)) * math.log(10.0)


def contour_calculus(
    op: LpOperator,
    f: HolFn,
    spec: ContourSpec | None = None,
    warn_tol: float = 1e-6,
) -> LpOperator:
    """f(A) by trapezoid quadrature of the sector-boundary Cauchy integral.

    Structured kinds stay structured: multiplications integrate d x d
    resolvents of their symbol, Schur-type kinds reduce to the scalar
    kernel on their symbol, and only the dense fallback integrates full
    superoperator resolvents.  Emits :class:`ContourTruncationWarning`
    when the endpoint integrand suggests the window is too narrow.
    """
    if f.klass != "hinf0":
        raise ValueError(f"{f.name} has no decay at 0/infinity; use extended_calculus")
    if spec is None:
        spec = default_contour(op, f)
    _check_contour(op, f, spec)
    est = _truncation_estimate(f, spec)
    if est > warn_tol:
        warnings.warn(
            f"contour window [{spec.r_min:.2e}, {spec.r_max:.2e}] may truncate "
            f"{f.name} (endpoint estimate {est:.2e})",
            ContourTruncationWarning,
            stacklevel=2,
        )

    if isinstance(op, SchurMult):
        return SchurMult(contour_kernel(f, spec)(op.m))
    if isinstance(op, SandwichSchur):
        return SandwichSchur(op.u, op.v, contour_kernel(f, spec)(op.w))
    if isinstance(op, (LeftMult, RightMult)):
        a = op.a if isinstance(op, LeftMult) else op.b
        d = a.shape[0]
        z, c = _contour_coefficients(f, spec)
        eye = np.eye(d)
        acc = np.zeros((d, d), dtype=np.complex128)
        for zj, cj in zip(z, c):
            acc += cj * np.linalg.solve(zj * eye - a, eye)
        return LeftMult(acc) if isinstance(op, LeftMult) else RightMult(acc)
    if isinstance(op, AmplifiedOp):
        return AmplifiedOp(contour_calculus(op.base, f, spec, warn_tol), op.m)
    s = op.to_dense()
    n = s.shape[0]
    z, c = _contour_coefficients(f, spec)
    eye = np.eye(n)
    acc = np.zeros((n, n), dtype=np.complex128)
    for zj, cj in zip(z, c):
        acc += cj * np.linalg.solve(zj * eye - s, eye)
    return DenseOp(acc)


def eigen_calculus(op: LpOperator, fn, zero_value=0.0) -> LpOperator:
    """Oracle path: apply a scalar function spectrally (V f(Lambda) V^{-1}
    on the superoperator, or entrywise on structured symbols), with the
    f(0) = zero_value convention on the kernel."""
    fn_arr = fn.fn if isinstance(fn, HolFn) else fn
    return op.eigen_fn(lambda lam: np.asarray(fn_arr(lam)), zero_value=zero_value)


def extended_calculus(
    op: LpOperator, f: HolFn, spec: ContourSpec | None = None
) -> LpOperator:
    """f(A) = g(A)^{-1} (fg)(A) with g(z) = z/(1+z)^2, for bounded f.

    In finite dimension the space splits as N(A) + R(A); the calculus is
    the boundary integral of fg corrected by g(A)^{-1} on the range
    component, and it annihilates the kernel component (f(0) = 0).
    """
    g = library("g")
    fg = product_fn(f, g)
    if spec is None:
        spec = default_contour(op, fg)
    fg_op = contour_calculus(op, fg, spec)
    g_op = contour_calculus(op, g, spec)

    if isinstance(op, SchurMult):
        return SchurMult(_ratio_on_range(op.m, fg_op.m, g_op.m))
    if isinstance(op, SandwichSchur):
        return SandwichSchur(op.u, op.v, _ratio_on_range(op.w, fg_op.w, g_op.w))
    if isinstance(op, (LeftMult, RightMult)):
        base = op.a if isinstance(op, LeftMult) else op.b
        lam, v, vinv = _mat_eig(base)
        ker = np.abs(lam) <= ZERO_RTOL * max(float(np.max(np.abs(lam))), 1e-300)
        p0 = (v * ker.astype(complex)) @ vinv
        num = fg_op.a if isinstance(fg_op, LeftMult) else fg_op.b
        den = g_op.a if isinstance(g_op, LeftMult) else g_op.b
        mat = (np.eye(op.dim) - p0) @ np.linalg.solve(den + p0, num)
        return LeftMult(mat) if isinstance(op, LeftMult) else RightMult(mat)
    if isinstance(op, AmplifiedOp):
        return AmplifiedOp(extended_calculus(op.base, f, spec), op.m)
    s = op.to_dense()
    lam, v, vinv = _mat_eig(s)
    ker = np.abs(lam) <= ZERO_RTOL * max(float(np.max(np.abs(lam))), 1e-300)
    p0 = (v * ker.astype(complex)) @ vinv
    n = s.shape[0]
    mat = (np.eye(n) - p0) @ np.linalg.solve(g_op.to_dense() + p0, fg_op.to_dense())
    return DenseOp(mat)


def _ratio_on_range(base_sym, num, den):
    scale = max(float(np.max(np.abs(base_sym))), 1e-300)
    ker = np.abs(base_sym) <= ZERO_RTOL * scale
    out = np.zeros_like(num)
    out[~ker] = num[~ker] / den[~ker]
    return out


def imaginary_power(op: LpOperator, s: float, spec: ContourSpec | None = None):
    """A^{is} via the extended calculus with f(z) = z^{is} (principal branch;
    the contour never crosses the cut on the negative reals)."""
    return extended_calculus(op, library(f"zis:{s}"), spec)


# ---------------------------------------------------------------------------
# Sectoriality profiling
# ---------------------------------------------------------------------------


@dataclass
class SectorProfile:
    omega_hat: float
    constants: list  # [(theta, K_theta)]
    p: float
    exact: bool  # True when K_theta comes from an SVD (p = 2)


def superop_norm_s2(op: LpOperator) -> float:
    """Exact operator norm on S^2 (largest singular value of the dense form)."""
    return float(np.linalg.norm(op.to_dense(), 2))


def _conj_exp(p: float) -> float:
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def _schatten(x, p):
    s = np.linalg.svd(x, compute_uv=False)
    if s.size == 0:
        return 0.0
    if p == math.inf:
        return float(s[0])
    return float(np.sum(s**p) ** (1.0 / p))


def _polar_factor(y: np.ndarray, p: float) -> np.ndarray:
    """Norming element of ||y||_p: the S^{p'}-unit xi with Re tr(xi* y) = ||y||_p."""
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return np.zeros_like(y)
    if p == math.inf:
        d = np.zeros_like(s)
        d[0] = 1.0
    elif p == 1.0:
        d = (s > 1e-14 * s[0]).astype(float)
    else:
        pp = _conj_exp(p)
        t = (s / s[0]) ** (p - 1.0)
        d = t / np.sum(t**pp) ** (1.0 / pp)
    return (u * d) @ vh


def schatten_opnorm_lower(
    op: LpOperator, p: float, starts: int = 50, iters: int = 40, seed: int = 0
) -> float:
    """Lower-bound estimate of ||T||_{S^p -> S^p} by nonlinear power iteration.

    Alternates the norming element of T(x) with the S^p polar of the
    adjoint applied to it; every reported value is a ratio attained by a
    concrete x, hence a certified lower bound.  Exact (SVD) at p = 2.
    """
    if p == 2.0:
        return superop_norm_s2(op)
    d = op.dim
    rng = np.random.default_rng(seed)
    dag = op.dagger()
    pp = _conj_exp(p)
    best = 0.0
    for _ in range(starts):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        nx = _schatten(x, p)
        if nx == 0.0:
            continue
        x = x / nx
        for _ in range(iters):
            y = op.apply(x)
            ny = _schatten(y, p)
            if ny <= 1e-300:
                break
            best = max(best, ny)
            xi = _polar_factor(y, p)
            w = dag.apply(xi)
            x_new = _polar_factor(w, pp)
            if np.linalg.norm(x_new - x) <= 1e-12 * np.linalg.norm(x):
                x = x_new
                break
            x = x_new
        y = op.apply(x)
        nx = _schatten(x, p)
        if nx > 0:
            best = max(best, _schatten(y, p) / nx)
    return best


def sector_type(
    op: LpOperator, p: float = 2.0, thetas=None, n_radii: int = 13, seed: int = 0
) -> SectorProfile:
    """Sector type: omega_hat from the spectrum and resolvent constants
    K_theta = sup ||z R(z, A)|| sampled at log-spaced z on the rays of
    angle theta.  Exact superoperator norms at p = 2, power-iteration
    lower bounds otherwise (``exact`` records which)."""
    omega = op.sector_angle()
    if thetas is None:
        gaps = (0.05, 0.15, 0.4, 0.8, 1.4)
        thetas = [omega + g for g in gaps if omega + g < math.pi - 1e-6]
    scale = op.spectral_scale()
    radii = np.logspace(-3, 3, n_radii) * scale
    constants = []
    for theta in thetas:
        k = 0.0
        for r in radii:
            for sgn in (1.0, -1.0):
                z = r * cmath.exp(1j * sgn * theta)
                scaled = _scale_op(resolvent(op, z), z)
                if p == 2.0:
                    k = max(k, superop_norm_s2(scaled))
                else:
                    k = max(
                        k,
                        schatten_opnorm_lower(scaled, p, starts=8, iters=25, seed=seed),
                    )
        constants.append((float(theta), float(k)))
    return SectorProfile(omega_hat=omega, constants=constants, p=p, exact=p == 2.0)


def _scale_op(op: LpOperator, z: complex) -> LpOperator:
    if isinstance(op, LeftMult):
        return LeftMult(z * op.a)
    if isinstance(op, RightMult):
        return RightMult(z * op.b)
    if isinstance(op, SandwichSchur):
        return SandwichSchur(op.u, op.v, z * op.w)
    if isinstance(op, SchurMult):
        return SchurMult(z * op.m)
    if isinstance(op, AmplifiedOp):
        return AmplifiedOp(_scale_op(op.base, z), op.m)
    return DenseOp(z * op.to_dense())


# ---------------------------------------------------------------------------
# Integral identities
# ---------------------------------------------------------------------------


def group_average_identity(a, b=None, n_nodes: int = 64) -> float:
    """Residual of the Gaussian group-average identity

        e^{-A^2/2} = (2 pi)^{-1/2} int e^{-s^2/2} U_s ds

    for U_s = e^{isa} (matrix version, ``b`` omitted; A = a) or
    U_s(x) = e^{isa} x e^{-isb} (derivation version; A = Ad_{(a,b)}).
    Gauss-Hermite quadrature with ``n_nodes``; returns the operator norm
    of the defect (for the derivation version, the norm on the
    Hilbert-Schmidt space, which is the largest symbol deviation).
    """
    a = as_matrix(a)
    if np.max(np.abs(a - adjoint(a))) > 1e-10 * max(1.0, float(np.max(np.abs(a)))):
        raise ValueError("generator must be hermitian")
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    s_vals = math.sqrt(2.0) * nodes
    coeff = weights / math.sqrt(math.pi)
    alpha, u = np.linalg.eigh(0.5 * (a + adjoint(a)))
    if b is None:
        lhs = (u * np.exp(-(alpha**2) / 2.0)) @ adjoint(u)
        diag = coeff @ np.exp(1j * s_vals[:, None] * alpha[None, :])
        rhs = (u * diag) @ adjoint(u)
        return float(np.linalg.norm(lhs - rhs, 2))
    b = as_matrix(b)
    if np.max(np.abs(b - adjoint(b))) > 1e-10 * max(1.0, float(np.max(np.abs(b)))):
        raise ValueError("generator must be hermitian")
    beta = np.linalg.eigvalsh(0.5 * (b + adjoint(b)))
    w0 = alpha[:, None] - beta[None, :]
    lhs = np.exp(-(w0**2) / 2.0)
    rhs = np.einsum("k,kij->ij", coeff, np.exp(1j * s_vals[:, None, None] * w0[None, :, :]))
    return float(np.max(np.abs(lhs - rhs)))


def subordination_weight(s):
    """Density h(s) = (1/(2 sqrt pi)) e^{-1/(4s)} s^{-3/2}; unit mass on (0, inf)."""
    s = np.asarray(s, dtype=float)
    return np.exp(-1.0 / (4.0 * s)) / (2.0 * math.sqrt(math.pi) * s**1.5)


def _default_subordination_nodes(n: int = 2400):
    # the density has a fat s^{-3/2} right tail: the window must reach 1e26
    # for the quadrature mass to match 1 at the 1e-13 level
    u = np.linspace(math.log(1e-6), math.log(1e26), n)
    w = np.full(n, u[1] - u[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return np.exp(u), w


def subordination_identity(c, t: float, grid=None, mass_tol: float = 1e-8):
    """Residual of e^{-t C^{1/2}} = int h(s) T_{s t^2} ds, T the heat
    semigroup of a PSD generator C (hermitian matrix or operator kind).

    Returns ``(residual, h_mass)``; raises when the quadrature mass of h
    misses 1 by more than ``mass_tol`` (the grid is then too narrow).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if grid is None:
        s_nodes, w = _default_subordination_nodes()
    else:
        s_nodes = np.asarray(grid.t, dtype=float)
        w = np.asarray(grid.w, dtype=float)
    # the weights are for ds/s, so the integrand h(s) picks up a Jacobian s
    coeff = w * s_nodes * subordination_weight(s_nodes)
    mass = float(np.sum(coeff))
    if abs(mass - 1.0) > mass_tol:
        raise ValueError(f"subordination grid mass {mass!r} misses 1 by more than {mass_tol}")

    if isinstance(c, LpOperator):
        lam = c.spectrum()
        if np.max(np.abs(lam.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(lam)))):
            raise ValueError("generator spectrum must be real nonnegative")
        lam = np.clip(lam.real, 0.0, None)
        lhs = np.exp(-t * np.sqrt(lam))
        rhs = coeff @ np.exp(-np.outer(s_nodes * t * t, lam))
        return float(np.max(np.abs(lhs - rhs))), mass
    cm = as_matrix(c)
    lam, u = np.linalg.eigh(0.5 * (cm + adjoint(cm)))
    if lam.size and lam[0] < -1e-10 * max(1.0, abs(float(lam[-1]))):
        raise ValueError(f"generator must be PSD (min eigenvalue {lam[0]:.3e})")
    lam = np.clip(lam, 0.0, None)
    diag = np.exp(-t * np.sqrt(lam)) - coeff @ np.exp(-np.outer(s_nodes * t * t, lam))
    return float(np.linalg.norm((u * diag) @ adjoint(u), 2)), mass
