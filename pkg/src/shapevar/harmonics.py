"""Real surface harmonics on S^2 and product Gauss-Legendre quadrature.

Convention (used everywhere in the package): real, L^2(S^2)-orthonormal,
no Condon-Shortley phase,

    Y_{k,0}  = Pbar_k^0(cos th)
    Y_{k,m}  = sqrt(2) Pbar_k^m(cos th) cos(m ph)      m > 0
    Y_{k,-m} = sqrt(2) Pbar_k^m(cos th) sin(m ph)      m > 0

with ``Pbar`` the 4pi-normalised associated Legendre function from
:mod:`shapevar.kernels`.  Columns of the batched evaluators are ordered by
``lm_index(k, m) = k*k + k + m``.

For d != 3 only degree-level metadata is provided (eigenvalues, multiplicities,
sphere areas); nothing downstream needs pointwise values there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, InputError
from .kernels import legendre_tables


@dataclass(frozen=True, order=True)
class HarmonicIndex:
    k: int
    m: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or int(self.m) != self.m:
            raise InputError(f"harmonic index must be integral, got ({self.k}, {self.m})")
        if self.k < 0:
            raise InputError(f"harmonic degree must be >= 0, got k={self.k}")
        if abs(self.m) > self.k:
            raise InputError(f"harmonic order must satisfy |m| <= k, got k={self.k}, m={self.m}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m", int(self.m))


def laplace_beltrami_eigenvalue(k, d=3):
    """k(k+d-2): minus the eigenvalue of the Laplace-Beltrami operator on S^{d-1}."""
    if k < 0:
        raise InputError(f"harmonic degree must be >= 0, got k={k}")
    return k * (k + d - 2)


def harmonic_multiplicity(k, d=3):
    """Dimension of the space of degree-k spherical harmonics on S^{d-1}."""
    if k < 0:
        raise InputError(f"harmonic degree must be >= 0, got k={k}")
    if k == 0:
        return 1
    if k == 1:
        return d
    return math.comb(k + d - 1, d - 1) - math.comb(k + d - 3, d - 1)


def sphere_area(d):
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d):
    """Volume of the unit ball in R^d."""
    return sphere_area(d) / d


def lm_index(k, m):
    return k * k + k + m


def n_coefficients(lmax):
    return (lmax + 1) ** 2


def cartesian_to_angles(xi):
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    theta = np.arccos(np.clip(xi[:, 2], -1.0, 1.0))
    phi = np.arctan2(xi[:, 1], xi[:, 0])
    return theta, phi


def _check_unit(xi):
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    if xi.shape[-1] != 3:
        raise InputError(f"expected vectors in R^3, got shape {xi.shape}")
    norms = np.linalg.norm(xi, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-12)
    if bad.size:
        raise InputError(f"point {xi[bad[0]].tolist()} is not a unit vector (|xi| = {norms[bad[0]]!r})")
    return xi


def real_harmonics(lmax, theta, phi):
    """Matrix ``Y[i, lm_index(k, m)]`` of all harmonics with k <= lmax."""
    theta = np.ravel(np.asarray(theta, dtype=np.float64))
    phi = np.ravel(np.asarray(phi, dtype=np.float64))
    P, _ = legendre_tables(lmax, theta)
    Y = np.empty((theta.size, n_coefficients(lmax)))
    root2 = math.sqrt(2.0)
    for k in range(lmax + 1):
        Y[:, lm_index(k, 0)] = P[k, 0]
        for m in range(1, k + 1):
            Y[:, lm_index(k, m)] = root2 * P[k, m] * np.cos(m * phi)
            Y[:, lm_index(k, -m)] = root2 * P[k, m] * np.sin(m * phi)
    return Y


def real_harmonic_gradients(lmax, theta, phi):
    """Tangential gradient components ``(d/dth Y, (1/sin th) d/dph Y)``.

    Same column layout as :func:`real_harmonics`.  Points must avoid the
    poles; Gauss-Legendre nodes always do.
    """
    theta = np.ravel(np.asarray(theta, dtype=np.float64))
    phi = np.ravel(np.asarray(phi, dtype=np.float64))
    s = np.sin(theta)
    if np.any(s <= 0.0):
        raise InputError("tangential gradients are not evaluated at the poles")
    P, dP = legendre_tables(lmax, theta)
    G_th = np.empty((theta.size, n_coefficients(lmax)))
    G_ph = np.empty_like(G_th)
    root2 = math.sqrt(2.0)
    for k in range(lmax + 1):
        G_th[:, lm_index(k, 0)] = dP[k, 0]
        G_ph[:, lm_index(k, 0)] = 0.0
        for m in range(1, k + 1):
            c, sn = np.cos(m * phi), np.sin(m * phi)
            G_th[:, lm_index(k, m)] = root2 * dP[k, m] * c
            G_th[:, lm_index(k, -m)] = root2 * dP[k, m] * sn
            G_ph[:, lm_index(k, m)] = -m * root2 * P[k, m] * sn / s
            G_ph[:, lm_index(k, -m)] = m * root2 * P[k, m] * c / s
    return G_th, G_ph


def real_harmonic(idx, xi):
    """Value of the real orthonormal harmonic ``idx`` at the unit vector ``xi``."""
    if not isinstance(idx, HarmonicIndex):
        idx = HarmonicIndex(*idx)
    xi = _check_unit(xi)
    if xi.shape[0] != 1:
        raise InputError("real_harmonic takes a single unit vector; use real_harmonics for batches")
    theta, phi = cartesian_to_angles(xi)
    return float(real_harmonics(idx.k, theta, phi)[0, lm_index(idx.k, idx.m)])


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the uniform rule in phi.

    Integrates every polynomial of degree <= ``order`` on S^2 exactly, using
    ``(order//2 + 1) * (order + 1)`` nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    order: int

    @property
    def size(self):
        return self.weights.size


def make_quadrature(order):
    if int(order) != order or order < 2:
        raise InputError(f"quadrature order must be an integer >= 2, got {order!r}")
    order = int(order)
    n_theta = order // 2 + 1
    n_phi = order + 1
    x, w_x = np.polynomial.legendre.leggauss(n_theta)
    th = np.arccos(x)
    ph = 2.0 * math.pi * np.arange(n_phi) / n_phi
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    W = np.outer(w_x, np.full(n_phi, 2.0 * math.pi / n_phi))
    theta = TH.ravel()
    phi = PH.ravel()
    nodes = np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    weights = W.ravel()
    for arr in (nodes, weights, theta, phi):
        arr.setflags(write=False)
    return SphereQuadrature(nodes=nodes, weights=weights, theta=theta, phi=phi, order=order)


def integrate(quad, f):
    """Sum of ``w_i f(xi_i)``.

    ``f`` is either a callable taking the ``(n, 3)`` node array and returning
    ``n`` values, or an array of nodal values.
    """
    values = f(quad.nodes) if callable(f) else f
    values = np.asarray(values, dtype=np.float64)
    if values.shape != quad.weights.shape:
        raise InputError(f"integrand has shape {values.shape}, expected {quad.weights.shape}")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = bad[0]
        raise EvaluationError(f"integrand is {values[i]!r} at node {i} (xi = {quad.nodes[i].tolist()})")
    return float(np.dot(quad.weights, values))
