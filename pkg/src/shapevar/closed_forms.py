"""Radial solutions, boundary gradients, ball values and Steklov spectra for B_R.

The torsion function here solves ``-div(|grad psi|^{q-2} grad psi) = 1`` in
B_R with ``psi = 0`` on the sphere.

The normalising constant of the unit sphere/ball is written explicitly
wherever it enters; see :class:`OmegaConvention`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, InputError
from .harmonics import ball_volume, sphere_area

# p -> 1+ and q -> 1+ blow up the exponents 1/(p-1), 1/(q-1)
EXPONENT_GUARD = 1e-9


class OmegaConvention(str, enum.Enum):
    UNIT_BALL_VOLUME = "unit-ball-volume"
    UNIT_SPHERE_AREA = "unit-sphere-area"

    def value_for(self, d):
        if self is OmegaConvention.UNIT_BALL_VOLUME:
            return ball_volume(d)
        return sphere_area(d)


@dataclass(frozen=True)
class ProblemParams:
    d: int
    p: float
    q: float
    R: float = 1.0

    def __post_init__(self):
        d, p, q, R = self.d, self.p, self.q, self.R
        if isinstance(d, bool) or int(d) != d or d < 3:
            raise InputError(f"dimension must be an integer >= 3, got d={d!r}")
        object.__setattr__(self, "d", int(d))
        for name, val in (("p", p), ("q", q), ("R", R)):
            if not math.isfinite(val):
                raise InputError(f"{name} must be finite, got {val!r}")
        if not 1.0 + EXPONENT_GUARD <= p < d:
            raise InputError(f"capacity exponent must satisfy 1 < p < d (d={d}), got p={p!r}")
        if q < 1.0 + EXPONENT_GUARD:
            raise InputError(f"torsion exponent must satisfy q > 1, got q={q!r}")
        if R <= 0.0:
            raise InputError(f"radius must be positive, got R={R!r}")
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "R", float(R))

    def with_radius(self, R):
        return ProblemParams(self.d, self.p, self.q, R)


@dataclass(frozen=True)
class BallConstants:
    gamma: float
    gamma_tilde: float
    cap_value: float
    tor_value_paper: float
    tor_value_derived: float
    omega_convention: OmegaConvention

    @property
    def torsion_discrepancy(self):
        """Relative gap between the literal and the derived torsion constant."""
        return abs(self.tor_value_paper - self.tor_value_derived) / abs(self.tor_value_derived)


def capacity_potential(params, r):
    """u(r) = (r/R)^((p-d)/(p-1)) for r >= R."""
    if r < params.R:
        raise DomainError(f"capacity potential lives outside the ball: r={r!r} < R={params.R!r}")
    d, p, R = params.d, params.p, params.R
    return math.exp((p - d) / (p - 1.0) * math.log(r / R))


def torsion_exponent(q):
    """q/(q-1), the radial power in the torsion function."""
    return q / (q - 1.0)


def torsion_function(params, r):
    """psi(r) = (R^{q'} - r^{q'}) / beta with q' = q/(q-1), beta = q' d^{1/(q-1)}."""
    if not 0.0 <= r <= params.R:
        raise DomainError(f"torsion function lives in [0, R]={params.R!r}, got r={r!r}")
    d, q, R = params.d, params.q, params.R
    e = torsion_exponent(q)
    beta = e * d ** (1.0 / (q - 1.0))
    return (R ** e - r ** e) / beta


def torsion_function_slope(params, r):
    """psi'(r) = -(r/d)^{1/(q-1)}."""
    if not 0.0 <= r <= params.R:
        raise DomainError(f"torsion function lives in [0, R]={params.R!r}, got r={r!r}")
    return -((r / params.d) ** (1.0 / (params.q - 1.0)))


def boundary_gradients(params):
    """(|grad u|, |grad psi|) on the sphere of radius R."""
    d, p, q, R = params.d, params.p, params.q, params.R
    gamma = (d - p) / ((p - 1.0) * R)
    gamma_tilde = (R / d) ** (1.0 / (q - 1.0))
    return gamma, gamma_tilde


def ball_capacity(params, omega=OmegaConvention.UNIT_SPHERE_AREA):
    """omega_d ((d-p)/(p-1))^{p-1} R^{d-p}.

    With omega the area of the unit sphere this is the p-Dirichlet energy of
    the capacity potential; the other convention is kept only for comparison.
    """
    d, p, R = params.d, params.p, params.R
    return OmegaConvention(omega).value_for(d) * ((d - p) / (p - 1.0)) ** (p - 1.0) * R ** (d - p)


def ball_torsion(params, mode="derived", omega=OmegaConvention.UNIT_SPHERE_AREA):
    """Torsional rigidity of B_R.

    ``mode="derived"`` integrates the torsion function exactly,
    ``|B_1| R^{d+q'} (q-1) d^{-1/(q-1)} / (d(q-1)+q)``, and ignores ``omega``.
    ``mode="paper"`` evaluates the literal constant
    ``omega (q-1) d^{-q/(q-1)} / (d(q-1)+1) R^{d+q'}`` under the chosen omega.
    """
    d, q, R = params.d, params.q, params.R
    e = torsion_exponent(q)
    if mode == "derived":
        return ball_volume(d) * R ** (d + e) * (q - 1.0) * d ** (-1.0 / (q - 1.0)) / (d * (q - 1.0) + q)
    if mode == "paper":
        w = OmegaConvention(omega).value_for(d)
        return w * (q - 1.0) * d ** (-q / (q - 1.0)) / (d * (q - 1.0) + 1.0) * R ** (d + e)
    raise InputError(f"mode must be 'paper' or 'derived', got {mode!r}")


def ball_constants(params, omega=OmegaConvention.UNIT_SPHERE_AREA):
    gamma, gamma_tilde = boundary_gradients(params)
    return BallConstants(
        gamma=gamma,
        gamma_tilde=gamma_tilde,
        cap_value=ball_capacity(params, omega),
        tor_value_paper=ball_torsion(params, "paper", omega),
        tor_value_derived=ball_torsion(params, "derived"),
        omega_convention=OmegaConvention(omega),
    )


def _check_degree(k):
    if int(k) != k or k < 0:
        raise InputError(f"Steklov index must be an integer >= 0, got k={k!r}")


def steklov_exterior(params, k):
    """mu_k = (d-2+k)/R for the decaying harmonics (r/R)^{2-d-k} Y_k."""
    _check_degree(k)
    return (params.d - 2 + k) / params.R


def steklov_interior(params, k):
    """mu_hat_k = k/R for the growing harmonics (r/R)^k Y_k."""
    _check_degree(k)
    return k / params.R
