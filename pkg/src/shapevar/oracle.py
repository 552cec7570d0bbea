"""Brute-force d = 3 checks of the variation formulas.

Nothing here calls into :mod:`shapevar.variations`' formulas.  Domains are the
radial graphs

    r(xi) = c(t) (R + t rho(xi)),

with ``c(t)`` fixing the volume to that of B_R.  On the sphere the first-order
normal velocity of this family is ``rho``, and once the volume is held fixed
exactly the second derivative of any of the functionals at t = 0 depends only
on ``rho``, so finite differences along this family are a legitimate stand-in
for a general volume-preserving Hadamard perturbation.

Capacity (p = 2) and torsion (q = 2) are computed by least-squares
collocation with the exact harmonic ansatz:

    u   = sum_lm a_lm (R/r)^{l+1} Y_lm      (exterior, u = 1 on the boundary)
    psi = -r^2/6 + sum_lm b_lm (r/R)^l Y_lm (interior, psi = 0 on the boundary)
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EvaluationError, InputError, SolverError
from .harmonics import integrate, make_quadrature, n_coefficients, real_harmonics

DEFAULT_FD_AMPLITUDE = 0.02


@dataclass(frozen=True)
class SpectralSolveConfig:
    L: int = 24
    quad_order: int | None = None
    integration_order: int | None = None
    fd_steps: tuple = ()
    tol: float = 1e-9
    max_condition: float = 1e12

    def validated(self, shape):
        """Check against anything with a ``max_degree`` (a spectrum or a domain)."""
        kmax = shape.max_degree
        if self.L < 2 * kmax + 4:
            raise InputError(f"truncation L={self.L} too small for a degree-{kmax} perturbation (need >= {2 * kmax + 4})")
        steps = tuple(float(h) for h in self.fd_steps)
        if steps and (len(steps) < 3 or any(b >= a for a, b in zip(steps, steps[1:]))):
            raise InputError(f"fd_steps must be >= 3 strictly decreasing values, got {steps}")
        return self

    @property
    def fit_order(self):
        # (L+2)(2L+3) nodes: about twice the (L+1)^2 unknowns
        return self.quad_order or 2 * self.L + 2


def default_config(shape, **overrides):
    kmax = max(shape.max_degree, 1)
    L = max(16, 5 * kmax + 4)
    cfg = dict(L=L, integration_order=2 * L + 10 * kmax + 16)
    cfg.update(overrides)
    return SpectralSolveConfig(**cfg).validated(shape)


def _check_rho(rho):
    if rho.kind != "rho":
        raise InputError("the oracle expects a spectrum of the normal velocity (kind='rho')")


@dataclass(frozen=True)
class PerturbedBall:
    R: float
    rho: object
    t: float
    normalize_volume: bool = True
    c_of_t: float = 1.0
    _c_minus_one: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_rho(self.rho)
        if not math.isclose(self.rho.R, self.R, rel_tol=1e-14, abs_tol=0.0):
            raise InputError(f"rho lives on R={self.rho.R!r}, ball has R={self.R!r}")
        if self.normalize_volume:
            # c^3 (|B_R| + excess) = |B_R|; excess is exact by quadrature (polynomial integrand)
            shape = lambda th, ph: self.t * self.rho.boundary_values(th, ph)
            excess = _graph_volume_excess(self.R, shape, self.rho.max_degree)
            target = 4.0 * math.pi * self.R ** 3 / 3.0
            object.__setattr__(self, "c_of_t", math.exp(-math.log1p(excess / target) / 3.0))
            object.__setattr__(self, "_c_minus_one", math.expm1(-math.log1p(excess / target) / 3.0))
        else:
            object.__setattr__(self, "_c_minus_one", self.c_of_t - 1.0)

    def deviation(self, theta, phi):
        """r - R, computed without cancellation."""
        return self._c_minus_one * self.R + self.c_of_t * self.t * self.rho.boundary_values(theta, phi)

    def radius(self, theta, phi):
        r = self.R + self.deviation(theta, phi)
        bad = np.flatnonzero(~(r > 0.0))
        if bad.size:
            i = bad[0]
            raise InputError(
                f"domain is not star-shaped: r = {r[i]!r} at (theta, phi) = ({theta[i]!r}, {phi[i]!r})"
            )
        return r

    @property
    def max_degree(self):
        return self.rho.max_degree

    def radius_gradient(self, theta, phi):
        g_th, g_ph = self.rho.boundary_gradient(theta, phi)
        s = self.c_of_t * self.t
        return s * g_th, s * g_ph


def _graph_volume_excess(R, deviation, degree, order=None):
    """(1/3) oint ((R + delta)^3 - R^3) dOmega for a deviation callable delta(theta, phi)."""
    quad = make_quadrature(order or max(3 * degree, 2))
    dv = deviation(quad.theta, quad.phi)
    return integrate(quad, dv * (3.0 * R * R + 3.0 * R * dv + dv * dv)) / 3.0


def perturbed_volume_excess(ball, order=None):
    """|Omega_t| - |B_R|, accurate to rounding in the excess itself."""
    quad = make_quadrature(order or max(3 * ball.rho.max_degree, 2))
    ball.radius(quad.theta, quad.phi)  # star-shapedness
    return _graph_volume_excess(ball.R, ball.deviation, ball.rho.max_degree, order)


def perturbed_volume(ball, order=None):
    """(1/3) oint r^3 dOmega."""
    return 4.0 * math.pi * ball.R ** 3 / 3.0 + perturbed_volume_excess(ball, order)


def perturbed_area(ball, order=None):
    """oint r sqrt(r^2 + |grad_S r|^2) dOmega."""
    quad = make_quadrature(order or max(48, 12 * ball.rho.max_degree))
    r = ball.radius(quad.theta, quad.phi)
    g_th, g_ph = ball.radius_gradient(quad.theta, quad.phi)
    return integrate(quad, r * np.sqrt(r * r + g_th * g_th + g_ph * g_ph))


class SolveResult(NamedTuple):
    value: float
    residual: float
    condition: float
    coefficients: np.ndarray


def _degrees(L):
    return np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)


def _collocate(A, b, cfg, what):
    x, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < A.shape[1] or cond > cfg.max_condition:
        raise SolverError(
            f"{what}: collocation matrix is ill-conditioned (cond={cond:.3g}, rank {rank}/{A.shape[1]}); "
            "lower L or the perturbation amplitude",
            residual=math.nan,
        )
    return x, cond


def solve_exterior_capacity(ball, cfg=None):
    """2-capacity of a star-shaped domain, with fit diagnostics.

    ``ball`` is a :class:`PerturbedBall` or any object with ``R``,
    ``max_degree`` and ``radius(theta, phi)``.
    """
    cfg = (cfg or default_config(ball)).validated(ball)
    R, L = ball.R, cfg.L
    deg = _degrees(L)
    fit = make_quadrature(cfg.fit_order)
    r = ball.radius(fit.theta, fit.phi)
    A = real_harmonics(L, fit.theta, fit.phi) * (R / r)[:, None] ** (deg + 1)[None, :]
    b = np.ones(fit.size)
    x, cond = _collocate(A, b, cfg, "exterior capacity")
    # check off the fitting nodes too
    chk = make_quadrature(cfg.fit_order + 3)
    r_chk = ball.radius(chk.theta, chk.phi)
    u_chk = (real_harmonics(L, chk.theta, chk.phi) * (R / r_chk)[:, None] ** (deg + 1)[None, :]) @ x
    residual = max(float(np.max(np.abs(A @ x - b))), float(np.max(np.abs(u_chk - 1.0))))
    if residual > cfg.tol:
        raise SolverError(f"exterior capacity: boundary residual {residual:.3g} exceeds tol {cfg.tol:.3g}", residual)
    # flux at infinity: u ~ (x_00 R / sqrt(4 pi)) / r, energy = 4 pi * that monopole
    value = math.sqrt(4.0 * math.pi) * R * x[0]
    return SolveResult(float(value), residual, cond, x)


def exterior_capacity_p2(ball, cfg=None):
    return solve_exterior_capacity(ball, cfg).value


def solve_torsion(ball, cfg=None):
    """q = 2 torsional rigidity of a star-shaped domain (see :func:`solve_exterior_capacity`)."""
    cfg = (cfg or default_config(ball)).validated(ball)
    R, L = ball.R, cfg.L
    deg = _degrees(L)
    fit = make_quadrature(cfg.fit_order)
    r = ball.radius(fit.theta, fit.phi)
    A = real_harmonics(L, fit.theta, fit.phi) * (r / R)[:, None] ** deg[None, :]
    b = r * r / 6.0
    x, cond = _collocate(A, b, cfg, "torsion")
    chk = make_quadrature(cfg.fit_order + 3)
    r_chk = ball.radius(chk.theta, chk.phi)
    psi_chk = (real_harmonics(L, chk.theta, chk.phi) * (r_chk / R)[:, None] ** deg[None, :]) @ x - r_chk ** 2 / 6.0
    residual = max(float(np.max(np.abs(A @ x - b))), float(np.max(np.abs(psi_chk))))
    if residual > cfg.tol:
        raise SolverError(f"torsion: boundary residual {residual:.3g} exceeds tol {cfg.tol:.3g}", residual)
    quad = make_quadrature(cfg.integration_order or 2 * L + 10 * max(ball.max_degree, 1) + 16)
    rq = ball.radius(quad.theta, quad.phi)
    # int_0^r psi s^2 ds along each direction, done analytically
    radial = (real_harmonics(L, quad.theta, quad.phi) * (rq[:, None] ** (deg + 3)[None, :]
              / ((deg + 3) * R ** deg)[None, :])) @ x - rq ** 5 / 30.0
    return SolveResult(integrate(quad, radial), residual, cond, x)


def torsion_q2(ball, cfg=None):
    return solve_torsion(ball, cfg).value


# ---------------------------------------------------------------------------
# finite differences in t
# ---------------------------------------------------------------------------


class FDResult(NamedTuple):
    value: float
    error: float
    flagged: bool
    table: tuple


def _richardson(steps, estimates):
    """Neville extrapolation to h -> 0 of estimates with an even error expansion in h."""
    n = len(steps)
    T = [[float(e)] for e in estimates]
    for j in range(1, n):
        for i in range(j, n):
            ratio = (steps[i - j] / steps[i]) ** 2
            T[i].append(T[i][j - 1] + (T[i][j - 1] - T[i - 1][j - 1]) / (ratio - 1.0))
    value = T[-1][-1]
    error = abs(T[-1][-1] - T[-1][-2]) if n > 1 else math.inf
    return value, error, tuple(tuple(row) for row in T)


def _sample(curve, t):
    y = float(curve(t))
    if not math.isfinite(y):
        raise EvaluationError(f"curve is {y!r} at t={t!r}")
    return y


def _check_steps(steps):
    steps = tuple(float(h) for h in steps)
    if len(steps) < 2 or any(h <= 0.0 for h in steps) or any(b >= a for a, b in zip(steps, steps[1:])):
        raise InputError(f"steps must be positive and strictly decreasing, got {steps}")
    return steps


def fd_second_derivative(curve, steps=(1e-1, 5e-2, 2.5e-2), tol=None):
    """f''(0) from central second differences, Richardson-extrapolated.

    ``flagged`` is set when the extrapolation error estimate exceeds ``tol``;
    the value is returned either way.
    """
    steps = _check_steps(steps)
    f0 = _sample(curve, 0.0)
    est = [(_sample(curve, h) - 2.0 * f0 + _sample(curve, -h)) / (h * h) for h in steps]
    value, error, table = _richardson(steps, est)
    return FDResult(value, error, tol is not None and error > tol, table)


def fd_first_derivative(curve, steps=(1e-1, 5e-2, 2.5e-2), tol=None):
    steps = _check_steps(steps)
    est = [(_sample(curve, h) - _sample(curve, -h)) / (2.0 * h) for h in steps]
    value, error, table = _richardson(steps, est)
    return FDResult(value, error, tol is not None and error > tol, table)


def default_fd_steps(rho, amplitude=DEFAULT_FD_AMPLITUDE):
    """(4h, 2h, h) with 4h max|rho| = amplitude."""
    quad = make_quadrature(max(4 * rho.max_degree, 8))
    sup = float(np.max(np.abs(rho.boundary_values(quad.theta, quad.phi))))
    if sup == 0.0:
        raise InputError("zero perturbation has no finite-difference scale")
    h = amplitude / (4.0 * sup)
    return (4.0 * h, 2.0 * h, h)


FUNCTIONALS = {
    # derivatives of V and V - |B_R| agree; the excess carries no O(1) rounding
    "volume": lambda ball, cfg: perturbed_volume_excess(ball),
    "area": lambda ball, cfg: perturbed_area(ball),
    "capacity": exterior_capacity_p2,
    "torsion": torsion_q2,
}


def family_curve(functional, rho, cfg=None, normalize_volume=True):
    """t -> functional(Omega_t) along the volume-normalised graph family."""
    _check_rho(rho)
    fn = FUNCTIONALS[functional]
    if functional in ("capacity", "torsion"):
        cfg = (cfg or default_config(rho)).validated(rho)
    return lambda t: fn(PerturbedBall(rho.R, rho, t, normalize_volume), cfg)


def oracle_derivatives(functional, rho, cfg=None, steps=None, normalize_volume=True):
    """(first, second) t-derivatives at 0 of ``functional`` along the family."""
    curve = functools.lru_cache(maxsize=None)(family_curve(functional, rho, cfg, normalize_volume))
    steps = steps or (cfg.fd_steps if cfg is not None and cfg.fd_steps else default_fd_steps(rho))
    return fd_first_derivative(curve, steps), fd_second_derivative(curve, steps)


# ---------------------------------------------------------------------------
# A_ij(t) = (D Phi_t)^{-1} (D Phi_t)^{-T}
# ---------------------------------------------------------------------------


class AijResiduals(NamedTuple):
    A0: float
    A1: float
    A2: float


def aij_matrix(Dv, Dw, t):
    """A(t) for Phi_t = x + t v + t^2/2 w; ``Dv[..., i, j] = d_j v_i``."""
    eye = np.eye(Dv.shape[-1])
    B = np.linalg.inv(eye + t * Dv + 0.5 * t * t * Dw)
    return B @ np.swapaxes(B, -1, -2)


def aij_taylor(Dv, Dw):
    """The claimed (A(0), A'(0), A''(0))."""
    eye = np.broadcast_to(np.eye(Dv.shape[-1]), Dv.shape)
    DvT = np.swapaxes(Dv, -1, -2)
    DwT = np.swapaxes(Dw, -1, -2)
    sq = Dv @ Dv
    a1 = -Dv - DvT
    a2 = 2.0 * sq + 2.0 * np.swapaxes(sq, -1, -2) + 2.0 * Dv @ DvT - Dw - DwT
    return eye, a1, a2


def _taylor_fd(matrix_of_t, h, levels=3):
    """(value, first, second) at t = 0 of an array-valued curve, Richardson over h, h/2, ..."""
    steps = tuple(h / 2.0 ** i for i in range(levels))
    f0 = matrix_of_t(0.0)
    plus = [matrix_of_t(s) for s in steps]
    minus = [matrix_of_t(-s) for s in steps]
    d1 = [(a - b) / (2.0 * s) for a, b, s in zip(plus, minus, steps)]
    d2 = [(a - 2.0 * f0 + b) / (s * s) for a, b, s in zip(plus, minus, steps)]
    return f0, _richardson_array(steps, d1), _richardson_array(steps, d2)


def _richardson_array(steps, estimates):
    # row i of level j combines original steps i-j .. i
    T = list(estimates)
    n = len(steps)
    for j in range(1, n):
        T = [T[i - j + 1] + (T[i - j + 1] - T[i - j]) / ((steps[i - j] / steps[i]) ** 2 - 1.0) for i in range(j, n)]
    return T[-1]


def check_aij_lemma(v_field, w_field, sample_points, h=1e-3):
    """Max |finite-difference coefficient - claimed coefficient| for A, A', A''."""
    Dv = v_field.jacobian(sample_points)
    Dw = w_field.jacobian(sample_points)
    a0_fd, a1_fd, a2_fd = _taylor_fd(lambda s: aij_matrix(Dv, Dw, s), h)
    a0, a1, a2 = aij_taylor(Dv, Dw)
    return AijResiduals(
        float(np.max(np.abs(a0_fd - a0))),
        float(np.max(np.abs(a1_fd - a1))),
        float(np.max(np.abs(a2_fd - a2))),
    )


class JacobianResiduals(NamedTuple):
    J0: float
    J1: float
    J2: float


def check_jacobian_coefficients(v_field, w_field, sample_points, h=1e-3):
    """Max |finite-difference coefficient - claimed coefficient| for det(D Phi_t) at t = 0.

    Claimed: ``J(0) = 1``, ``J'(0) = div v``, ``J''(0) = (div v)^2 - Dv:Dv^T + div w``.
    """
    Dv = v_field.jacobian(sample_points)
    Dw = w_field.jacobian(sample_points)
    eye = np.eye(Dv.shape[-1])
    j0, j1, j2 = _taylor_fd(lambda s: np.linalg.det(eye + s * Dv + 0.5 * s * s * Dw), h)
    div_v = np.trace(Dv, axis1=-2, axis2=-1)
    div_w = np.trace(Dw, axis1=-2, axis2=-1)
    dv_dv = np.einsum("...ij,...ji->...", Dv, Dv)
    return JacobianResiduals(
        float(np.max(np.abs(j0 - 1.0))),
        float(np.max(np.abs(j1 - div_v))),
        float(np.max(np.abs(j2 - (div_v ** 2 - dv_dv + div_w)))),
    )
