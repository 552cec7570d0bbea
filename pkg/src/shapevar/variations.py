"""First and second domain variations of the ball as series over harmonic modes.

A perturbation is described by the normal velocity ``rho = v . nu`` on the
sphere of radius R, expanded in harmonics orthonormal on that sphere (for
d = 3: ``rho = sum a_km Y_km / R``, so ``oint rho^2 dS = sum a_km^2``).  All
second variations are diagonal in this basis and are reported per degree k.

Two evaluation modes exist for quantities that involve the ball's torsional
rigidity or the product functional:

* ``paper``   - the literal constants and coefficients;
* ``derived`` - constants recomputed from the radial solutions.

The component series of capacity and torsion are the same in both modes; only
the ball value of the torsion (and hence the product) differs.

A third mode, ``corrected``, replaces those series by the ones obtained from
the Hadamard formula with the exact linearised p-/q-Laplace exponents
(:func:`exterior_exponent`, :func:`interior_exponent`).  At p = q = 2 it is
what the brute-force oracle measures; every corrected term vanishes at k = 1,
as translation invariance requires.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple

import numpy as np

from .closed_forms import (
    ProblemParams,
    ball_capacity,
    ball_torsion,
    boundary_gradients,
    steklov_exterior,
    steklov_interior,
)
from .errors import InputError, PreconditionError
from .harmonics import (
    HarmonicIndex,
    laplace_beltrami_eigenvalue,
    lm_index,
    real_harmonic_gradients,
    real_harmonics,
    sphere_area,
)

MODES = ("paper", "derived")
CORRECTED = "corrected"
ALL_MODES = MODES + (CORRECTED,)
KINDS = ("rho", "u_prime", "psi_prime")


def _check_mode(mode, allowed=ALL_MODES):
    if mode not in allowed:
        raise InputError(f"mode must be one of {allowed}, got {mode!r}")


def _as_index(key):
    if isinstance(key, HarmonicIndex):
        return key
    if isinstance(key, tuple):
        return HarmonicIndex(*key)
    return HarmonicIndex(int(key), 0)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Coefficients of a boundary field in the orthonormal harmonics of dB_R.

    ``kind`` says which field is expanded: the normal velocity ``rho`` or one
    of the shape derivatives ``u_prime`` / ``psi_prime``.  On the ball they
    are proportional (``u' = gamma rho``, ``psi' = gamma_tilde rho``), see
    :meth:`to_rho`.
    """

    entries: Mapping[HarmonicIndex, float]
    R: float = 1.0
    kind: str = "rho"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"spectrum kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.R > 0.0 and math.isfinite(self.R)):
            raise InputError(f"spectrum radius must be positive, got R={self.R!r}")
        clean = {}
        for key, val in dict(self.entries).items():
            idx = _as_index(key)
            val = float(val)
            if not math.isfinite(val):
                raise InputError(f"coefficient of mode {idx} is not finite: {val!r}")
            clean[idx] = clean.get(idx, 0.0) + val
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(clean.items()))))
        object.__setattr__(self, "R", float(self.R))

    @classmethod
    def from_modes(cls, modes=None, R=1.0, kind="rho"):
        """Build from ``{k: a}``, ``{(k, m): a}`` or ``{HarmonicIndex: a}``."""
        return cls(dict(modes or {}), R=R, kind=kind)

    def __eq__(self, other):
        if not isinstance(other, ModeSpectrum):
            return NotImplemented
        return (self.R, self.kind, dict(self.entries)) == (other.R, other.kind, dict(other.entries))

    def __add__(self, other):
        if not isinstance(other, ModeSpectrum):
            return NotImplemented
        if (self.R, self.kind) != (other.R, other.kind):
            raise InputError("cannot add spectra with different radius or kind")
        merged = dict(self.entries)
        for idx, a in other.entries.items():
            merged[idx] = merged.get(idx, 0.0) + a
        return ModeSpectrum(merged, R=self.R, kind=self.kind)

    def scaled(self, s):
        return ModeSpectrum({i: s * a for i, a in self.entries.items()}, R=self.R, kind=self.kind)

    def coefficient(self, k, m=0):
        return self.entries.get(HarmonicIndex(k, m), 0.0)

    @property
    def max_degree(self):
        return max((i.k for i, a in self.entries.items() if a != 0.0), default=0)

    def degree_weights(self):
        """``{k: sum_m a_km^2}`` over degrees that carry a nonzero coefficient."""
        out = {}
        for idx, a in self.entries.items():
            if a != 0.0:
                out[idx.k] = out.get(idx.k, 0.0) + a * a
        return out

    def offending_modes(self, degree):
        return [i for i, a in self.entries.items() if i.k == degree and a != 0.0]

    def is_volume_preserving(self):
        return not self.offending_modes(0)

    def is_barycenter_preserving(self):
        return not self.offending_modes(1)

    def to_rho(self, params=None):
        """Re-express as the normal velocity ``rho``."""
        if self.kind == "rho":
            return self
        if params is None:
            raise InputError(f"converting a {self.kind} spectrum needs the problem parameters")
        _check_radius(params, self)
        gamma, gamma_tilde = boundary_gradients(params)
        factor = gamma if self.kind == "u_prime" else gamma_tilde
        return ModeSpectrum({i: a / factor for i, a in self.entries.items()}, R=self.R, kind="rho")

    # pointwise evaluation, d = 3 only

    def _packed(self):
        lmax = self.max_degree
        coef = np.zeros((lmax + 1) ** 2)
        for idx, a in self.entries.items():
            if idx.k <= lmax:
                coef[lm_index(idx.k, idx.m)] += a
        return lmax, coef

    def boundary_values(self, theta, phi):
        """rho at the directions (theta, phi) of dB_R (d = 3)."""
        lmax, coef = self._packed()
        return real_harmonics(lmax, theta, phi) @ coef / self.R

    def boundary_gradient(self, theta, phi):
        """Angular gradient of rho on the unit sphere: ``(d/dth, (1/sin th) d/dph)``."""
        lmax, coef = self._packed()
        g_th, g_ph = real_harmonic_gradients(lmax, theta, phi)
        return g_th @ coef / self.R, g_ph @ coef / self.R


def _check_radius(params, spectrum):
    if not math.isclose(params.R, spectrum.R, rel_tol=1e-14, abs_tol=0.0):
        raise InputError(f"spectrum lives on R={spectrum.R!r} but parameters have R={params.R!r}")


def _require_admissible(spectrum):
    bad0 = spectrum.offending_modes(0)
    if bad0:
        raise PreconditionError(
            f"mode k=0 violates volume preservation (nonzero coefficients: {[(i.k, i.m) for i in bad0]})",
            bad0,
        )
    bad1 = spectrum.offending_modes(1)
    if bad1:
        raise PreconditionError(
            f"mode k=1 violates barycenter preservation (nonzero coefficients: {[(i.k, i.m) for i in bad1]})",
            bad1,
        )


def _boundary_mean(spectrum, d):
    # the constant orthonormal function on dB_R is 1/sqrt(|dB_R|)
    area = sphere_area(d) * spectrum.R ** (d - 1)
    return spectrum.coefficient(0, 0) * math.sqrt(area)


@dataclass
class VariationReport:
    functional: str
    value: float
    first: float
    second: float
    mode: str
    per_mode_terms: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    sign_agreement: dict | None = None

    def to_dict(self):
        out = {
            "functional": self.functional,
            "mode": self.mode,
            "value": self.value,
            "first": self.first,
            "second": self.second,
            "per_mode_terms": {str(k): v for k, v in sorted(self.per_mode_terms.items())},
            "flags": list(self.flags),
        }
        if self.sign_agreement is not None:
            out["sign_agreement"] = {str(k): v for k, v in sorted(self.sign_agreement.items())}
        return out


def _report(functional, value, first, terms, mode, flags=()):
    terms = {k: float(v) for k, v in sorted(terms.items())}
    return VariationReport(
        functional=functional,
        value=float(value),
        first=float(first),
        second=math.fsum(terms.values()),
        mode=mode,
        per_mode_terms=terms,
        flags=list(flags),
    )


# ---------------------------------------------------------------------------
# volume and perimeter
# ---------------------------------------------------------------------------


class VolumeVariation(NamedTuple):
    first: float
    second: float
    w_flux: float


def volume_variation(spectrum, w_normal=None, d=3):
    """(dV, d2V, oint w.nu) for ``Phi_t = x + t v + t^2/2 w`` with ``v.nu = rho``.

    ``w_normal=None`` is the plain radial graph ``r = R + t rho`` (w = 0);
    ``"auto"`` picks the second-order normal displacement that makes d2V
    vanish and returns its flux for reuse; a number is taken as the flux
    ``oint w.nu dS`` itself.
    """
    rho = spectrum.to_rho()
    R = rho.R
    first = _boundary_mean(rho, d)
    graph = (d - 1) / R * math.fsum(rho.degree_weights().values())
    if w_normal is None:
        return VolumeVariation(first, graph, 0.0)
    if isinstance(w_normal, str):
        if w_normal != "auto":
            raise InputError(f"w_normal must be None, 'auto' or a number, got {w_normal!r}")
        return VolumeVariation(first, 0.0, -graph)
    return VolumeVariation(first, graph + float(w_normal), float(w_normal))


def perimeter_variation(spectrum, d=3):
    """(dS, d2S) of a volume-preserving perturbation of the sphere.

    d2S = sum_k a_k^2 (k(k+d-2) - (d-1)) / R^2.
    """
    rho = spectrum.to_rho()
    if not rho.is_volume_preserving():
        raise PreconditionError(
            "perimeter second variation needs a volume-preserving spectrum; mode k=0 is nonzero",
            rho.offending_modes(0),
        )
    R = rho.R
    first = (d - 1) / R * _boundary_mean(rho, d)
    second = math.fsum(
        w * (laplace_beltrami_eigenvalue(k, d) - (d - 1)) / R ** 2 for k, w in rho.degree_weights().items()
    )
    return first, second


# ---------------------------------------------------------------------------
# capacity and torsion
# ---------------------------------------------------------------------------


def first_variation_capacity(params, spectrum):
    """(p-1) gamma^p oint rho dS."""
    rho = spectrum.to_rho(params)
    _check_radius(params, rho)
    gamma, _ = boundary_gradients(params)
    return (params.p - 1.0) * gamma ** params.p * _boundary_mean(rho, params.d)


def first_variation_torsion(params, spectrum):
    """gamma_tilde^q oint rho dS."""
    rho = spectrum.to_rho(params)
    _check_radius(params, rho)
    _, gamma_tilde = boundary_gradients(params)
    return gamma_tilde ** params.q * _boundary_mean(rho, params.d)


def exterior_exponent(d, p, k):
    """Decay rate sigma_k of ``r^{-sigma} Y_k`` solving the p-Laplacian linearised at the capacity potential.

    Positive root of ``(p-1) s^2 + (p-d) s = k(k+d-2)``; equals d-2+k at p = 2.
    """
    lam = np.asarray(k, dtype=np.float64) * (np.asarray(k, dtype=np.float64) + d - 2.0)
    b = np.asarray(d, dtype=np.float64) - p
    return (b + np.sqrt(b * b + 4.0 * (p - 1.0) * lam)) / (2.0 * (p - 1.0))


def interior_exponent(d, q, k):
    """Growth rate s_k of ``r^s Y_k`` solving the q-Laplacian linearised at the torsion function.

    Positive root of ``(q-1) s^2 + ((q-1)(d-1) - 1) s = k(k+d-2)``; equals k
    at q = 2 and 1/(q-1) at k = 1.
    """
    lam = np.asarray(k, dtype=np.float64) * (np.asarray(k, dtype=np.float64) + d - 2.0)
    b = (q - 1.0) * (d - 1.0) - 1.0
    return (-b + np.sqrt(b * b + 4.0 * (q - 1.0) * lam)) / (2.0 * (q - 1.0))


def capacity_mode_factor(params, k, mode="derived"):
    """Weight of c_k^2 in the capacity second variation.

    Series: ``p gamma^{p-2} ((p-1) mu_k - (d-1)/R)``.  Corrected: ``mu_k R``
    replaced by the exterior exponent sigma_k(p).
    """
    gamma, _ = boundary_gradients(params)
    p, d, R = params.p, params.d, params.R
    rate = float(exterior_exponent(d, p, k)) / R if mode == CORRECTED else steklov_exterior(params, k)
    return p * gamma ** (p - 2.0) * ((p - 1.0) * rate - (d - 1) / R)


def _torsion_bracket(params, k, mode):
    q, d, R = params.q, params.d, params.R
    if mode == CORRECTED:
        return -q * (float(interior_exponent(d, q, k)) - 1.0 / (q - 1.0)) / R
    return -q * ((q - 1.0) * steklov_interior(params, k) + (d - 1) / R)


def _gamma_tilde_power(params, e):
    # gamma_tilde^e in log space: for q -> 1 the power leaves double range, give 0 or inf, never raise
    with np.errstate(over="ignore", under="ignore"):
        return float(np.exp(e / (params.q - 1.0) * math.log(params.R / params.d)))


def torsion_mode_factor(params, k, mode="derived"):
    """Weight of c_tilde_k^2 in the torsion second variation.

    Series: ``-q gamma_tilde^{q-2} ((q-1) mu_hat_k + (d-1)/R)``.  Corrected:
    ``-q gamma_tilde^{q-2} (s_k - 1/(q-1)) / R``.
    """
    return _gamma_tilde_power(params, params.q - 2.0) * _torsion_bracket(params, k, mode)


def second_variation_capacity(params, spectrum, mode="derived"):
    """Second variation of the p-capacity of B_R, mode by mode.

    Requires k=0 and k=1 coefficients to vanish.  ``c_k = gamma a_k``.
    """
    _check_mode(mode)
    rho = spectrum.to_rho(params)
    _check_radius(params, rho)
    _require_admissible(rho)
    gamma, _ = boundary_gradients(params)
    terms = {k: gamma ** 2 * w * capacity_mode_factor(params, k, mode) for k, w in rho.degree_weights().items()}
    return _report("capacity", ball_capacity(params), first_variation_capacity(params, rho), terms, mode)


def second_variation_torsion(params, spectrum, mode="derived"):
    """Second variation of the q-torsional rigidity of B_R, mode by mode.

    ``c_tilde_k = gamma_tilde a_k``; every nonzero admissible mode contributes
    a strictly negative term.
    """
    _check_mode(mode)
    rho = spectrum.to_rho(params)
    _check_radius(params, rho)
    _require_admissible(rho)
    # c_tilde_k^2 times the mode factor, with gamma_tilde^q formed in one step
    g_q = _gamma_tilde_power(params, params.q)
    terms = {k: g_q * w * _torsion_bracket(params, k, mode) for k, w in rho.degree_weights().items()}
    flags = []
    if mode == "paper":
        flags.append("value uses the literal torsion constant (unit-sphere-area omega)")
    value_mode = "paper" if mode == "paper" else "derived"
    return _report("torsion", ball_torsion(params, value_mode), first_variation_torsion(params, rho), terms, mode, flags)


# ---------------------------------------------------------------------------
# product functional
# ---------------------------------------------------------------------------


class ProductCoefficients(NamedTuple):
    """Coefficients of the product's second variation.

    Per unit ``c_tilde_k^2`` the mode-k term is
    ``R^{d-p-1/(q-1)} ((d-p)/(p-1))^p (alpha + k beta)``.  In paper mode
    ``alpha, beta`` are the literal ``c2, c3``; in derived mode they are
    recomputed and ``c2, c3`` are set equal to them.
    """

    c0: float
    c1: float
    c2: float
    c3: float
    alpha: float
    beta: float
    mode: str


def product_coefficient_arrays(d, p, q, mode):
    """Vectorised ``(c0, c1, c2, c3)`` over arrays of p and q (d scalar).

    Overflow for q -> 1 yields signed infinities rather than errors.
    """
    _check_mode(mode, MODES)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        s = q - 1.0
        ratio = (d - p) / (p - 1.0)
        lin = p * d - 2.0 * d - 2.0 * p + 3.0
        if mode == "paper":
            a = np.power(float(d), -q / s)
            b = np.power(float(d), -(q - 2.0) / s)
            c0 = p * s / (d * s + 1.0) * ratio ** p * a
            c1 = ratio ** (p - 1.0) * b
            c2 = p * s * lin / (d * s + 1.0) * a - (d - 1.0) * b
            c3 = p * s * (p - 1.0) / (d * s + 1.0) * a - s * b
        else:
            sigma = sphere_area(d)
            dd = np.power(float(d), (2.0 - q) / s)
            c0 = sigma * p * s * dd / (d * s + q) * ratio ** p
            c1 = sigma * q * ratio ** (p - 1.0) * dd
            # ((d-p)/(p-1))^p factored out of c0 and c1 before rearranging
            c2 = sigma * dd * (p * s * lin / (d * s + q) - q * (d - 1.0) / ratio)
            c3 = sigma * dd * (p * s * (p - 1.0) / (d * s + q) - q * s / ratio)
    return c0, c1, c2, c3


def mode_sign_coefficients(d, p, q, mode):
    """``(c2, c3) / scale`` with a positive scale that does not depend on p or k.

    The sign of ``Z(k) = c2 + k c3`` and its monotonicity in p are unchanged,
    but nothing overflows as q -> 1.  The scale is ``d^{-(q-2)/(q-1)}`` in
    paper mode and ``|S^{d-1}| d^{(2-q)/(q-1)}`` in derived mode, so the
    torsion part of the scaled coefficients is O(1).
    """
    _check_mode(mode, MODES)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore"):
        s = q - 1.0
        lin = p * d - 2.0 * d - 2.0 * p + 3.0
        if mode == "paper":
            a = np.power(float(d), -2.0 / s)
            s2 = p * s * lin / (d * s + 1.0) * a - (d - 1.0)
            s3 = p * s * (p - 1.0) / (d * s + 1.0) * a - s
        else:
            inv_ratio = (p - 1.0) / (d - p)
            s2 = p * s * lin / (d * s + q) - q * (d - 1.0) * inv_ratio
            s3 = p * s * (p - 1.0) / (d * s + q) - q * s * inv_ratio
    return s2, s3


def corrected_mode_signs(d, p, q, k):
    """Corrected product term per unit a_k^2 at R = 1, divided by |S^{d-1}| gamma^{p-1} gamma_tilde.

    Not affine in k.  Broadcasts over p, q and k.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    s = q - 1.0
    weight = p * (d - p) * s / ((p - 1.0) * d * (d * s + q))
    cap = (p - 1.0) * exterior_exponent(d, p, k) - (d - 1.0)
    tor = interior_exponent(d, q, k) - 1.0 / s
    return weight * cap - q / d * tor


def corrected_tail_slope(d, p, q):
    """lim_k corrected_mode_signs(k) / k; its sign is the sign of all high modes."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    s = q - 1.0
    weight = p * (d - p) * s / ((p - 1.0) * d * (d * s + q))
    return weight * np.sqrt(p - 1.0) - q / (d * np.sqrt(s))


def product_coefficients(params, mode="paper"):
    c0, c1, c2, c3 = (float(x) for x in product_coefficient_arrays(params.d, params.p, params.q, mode))
    return ProductCoefficients(c0, c1, c2, c3, c2, c3, mode)


def product_prefactor(params):
    """R^{d-p-1/(q-1)} ((d-p)/(p-1))^p, positive."""
    d, p, q, R = params.d, params.p, params.q, params.R
    return R ** (d - p - 1.0 / (q - 1.0)) * ((d - p) / (p - 1.0)) ** p


def _product_terms(params, rho, mode):
    _, gamma_tilde = boundary_gradients(params)
    weights = rho.degree_weights()
    if mode == "paper":
        co = product_coefficients(params, "paper")
        pre = product_prefactor(params)
        return {k: pre * gamma_tilde ** 2 * w * (co.c2 + k * co.c3) for k, w in weights.items()}
    cap = second_variation_capacity(params, rho, mode)
    tor = second_variation_torsion(params, rho, mode)
    cap0 = ball_capacity(params)
    tor0 = ball_torsion(params, "derived")
    return {k: cap.per_mode_terms[k] * tor0 + cap0 * tor.per_mode_terms[k] for k in weights}


def second_variation_product(params, spectrum, mode="paper"):
    """Second variation of capacity x torsion at the ball.

    The report for ``mode`` carries the per-degree sign agreement with a
    reference mode (``derived`` for ``paper``, ``paper`` otherwise) and a flag
    for every degree where the signs differ.
    """
    _check_mode(mode)
    rho = spectrum.to_rho(params)
    _check_radius(params, rho)
    _require_admissible(rho)
    other = "derived" if mode == "paper" else "paper"
    terms = {m: _product_terms(params, rho, m) for m in (mode, other)}
    agreement = {k: bool(np.sign(terms[mode][k]) == np.sign(terms[other][k])) for k in terms[mode]}
    flags = [
        f"k={k}: {mode} term {terms[mode][k]:.6g} and {other} term {terms[other][k]:.6g} differ in sign"
        for k, ok in agreement.items()
        if not ok
    ]
    if mode == "paper":
        flags.append("paper-mode second variation omits the omega_d factor")
    cap0 = ball_capacity(params)
    tor0 = ball_torsion(params, "paper" if mode == "paper" else "derived")
    value = cap0 * tor0
    first = first_variation_capacity(params, rho) * tor0 + cap0 * first_variation_torsion(params, rho)
    report = _report("product", value, first, terms[mode], mode, flags)
    report.sign_agreement = agreement
    return report


# ---------------------------------------------------------------------------
# Jacobian expansion
# ---------------------------------------------------------------------------


def jacobian_expansion_residual(Dv, Dw, t):
    """Pointwise ``|det(I + t Dv + t^2/2 Dw) - truncated expansion|``.

    ``Dv[..., i, j] = d_j v_i``.
    """
    Dv = np.asarray(Dv, dtype=np.float64)
    Dw = np.asarray(Dw, dtype=np.float64)
    eye = np.eye(Dv.shape[-1])
    exact = np.linalg.det(eye + t * Dv + 0.5 * t * t * Dw)
    div_v = np.trace(Dv, axis1=-2, axis2=-1)
    div_w = np.trace(Dw, axis1=-2, axis2=-1)
    dv_dv = np.einsum("...ij,...ji->...", Dv, Dv)
    approx = 1.0 + t * div_v + 0.5 * t * t * (div_v ** 2 - dv_dv + div_w)
    return np.abs(exact - approx)


def check_jacobian_expansion(v_field, w_field, t, points):
    """Largest residual of the second-order Jacobian expansion, divided by t^3.

    Bounded as t -> 0 iff the expansion is right through second order.
    """
    if t == 0.0:
        raise InputError("t must be nonzero")
    res = jacobian_expansion_residual(v_field.jacobian(points), w_field.jacobian(points), t)
    return float(np.max(res)) / abs(t) ** 3


def jacobian_cubic_coefficient(Dv, Dw):
    """Exact t^3 coefficient of det(I + t Dv + t^2/2 Dw) (d = 3).

    ``det Dv + (tr Dv tr Dw - tr(Dv Dw)) / 2``; the residual divided by t^3
    tends to its absolute value.
    """
    Dv = np.asarray(Dv, dtype=np.float64)
    Dw = np.asarray(Dw, dtype=np.float64)
    tr_v = np.trace(Dv, axis1=-2, axis2=-1)
    tr_w = np.trace(Dw, axis1=-2, axis2=-1)
    tr_vw = np.einsum("...ij,...ji->...", Dv, Dw)
    return np.linalg.det(Dv) + 0.5 * (tr_v * tr_w - tr_vw)
