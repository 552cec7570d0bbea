"""Polynomial vector fields with exact Jacobians, for the kinematic checks."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np


def _symmetrize(T, axes):
    perms = list(permutations(axes))
    out = np.zeros_like(T)
    full = list(range(T.ndim))
    for perm in perms:
        order = full.copy()
        for a, b in zip(axes, perm):
            order[a] = b
        out += np.transpose(T, order)
    return out / len(perms)


@dataclass(frozen=True)
class PolynomialField:
    """v_i(x) = c_i + M_ij x_j + Q_ijk x_j x_k + C_ijkl x_j x_k x_l.

    Q and C are symmetric in their trailing indices.
    """

    c: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    C: np.ndarray

    @classmethod
    def zero(cls, d=3):
        return cls(np.zeros(d), np.zeros((d, d)), np.zeros((d, d, d)), np.zeros((d, d, d, d)))

    @classmethod
    def linear(cls, M):
        M = np.asarray(M, dtype=np.float64)
        d = M.shape[0]
        return cls(np.zeros(d), M, np.zeros((d, d, d)), np.zeros((d, d, d, d)))

    @classmethod
    def random(cls, rng, d=3, scale=0.5):
        Q = _symmetrize(rng.normal(size=(d, d, d)), (1, 2))
        C = _symmetrize(rng.normal(size=(d, d, d, d)), (1, 2, 3))
        return cls(scale * rng.normal(size=d), scale * rng.normal(size=(d, d)), scale * Q, scale * C)

    @property
    def dim(self):
        return self.c.shape[0]

    def __call__(self, x):
        x = np.atleast_2d(x)
        return (
            self.c
            + x @ self.M.T
            + np.einsum("ijk,nj,nk->ni", self.Q, x, x)
            + np.einsum("ijkl,nj,nk,nl->ni", self.C, x, x, x)
        )

    def jacobian(self, x):
        """``J[n, i, j] = d_j v_i`` at each point."""
        x = np.atleast_2d(x)
        return (
            self.M[None]
            + 2.0 * np.einsum("ijk,nk->nij", self.Q, x)
            + 3.0 * np.einsum("ijkl,nk,nl->nij", self.C, x, x)
        )
