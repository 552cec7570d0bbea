"""Stability verdicts for the ball from the signs of the per-mode terms.

For the product functional the mode-k term is a positive multiple of
``Z(k) = c2 + k c3``.  Since Z is affine in k, its sign on k = 2..k_max
together with the sign of c3 settles every k >= 2; the classifier reports the
explicit modes up to ``k_max`` and the tail sign beyond.

Signs are taken from the overflow-free scaled coefficients of
:func:`shapevar.variations.mode_sign_coefficients`; the degeneracy tolerance
applies to that scaled Z.

In ``corrected`` mode the per-mode terms are not affine in k; every k up to
``k_max`` is evaluated and the tail takes the sign of the asymptotic slope.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .closed_forms import ProblemParams
from .errors import InputError
from .variations import (
    ALL_MODES,
    CORRECTED,
    capacity_mode_factor,
    corrected_mode_signs,
    corrected_tail_slope,
    mode_sign_coefficients,
    product_coefficients,
)

DEFAULT_K_MAX = 64
Z_TOL = 1e-13
BISECT_TOL = 1e-10
# relative slack on the capacity mode inequality, absorbs rounding at p = p*
CAPACITY_REL_TOL = 1e-12


class Verdict(str, enum.Enum):
    LOCAL_MAX = "local_max"
    LOCAL_MIN = "local_min"
    INDEFINITE = "indefinite"
    DEGENERATE = "degenerate"


CODE_TO_VERDICT = {
    kernels.LOCAL_MAX: Verdict.LOCAL_MAX,
    kernels.LOCAL_MIN: Verdict.LOCAL_MIN,
    kernels.INDEFINITE: Verdict.INDEFINITE,
    kernels.DEGENERATE: Verdict.DEGENERATE,
}


@dataclass
class RegimeClassification:
    params: ProblemParams
    verdict: Verdict
    negative_modes: tuple
    positive_modes: tuple
    zero_modes: tuple
    tail_sign: int
    k_max: int
    mode_used: str
    functional: str = "product"
    z_values: dict = field(default_factory=dict)
    thresholds: tuple | None = None

    def to_dict(self):
        return {
            "d": self.params.d,
            "p": self.params.p,
            "q": self.params.q,
            "R": self.params.R,
            "functional": self.functional,
            "mode": self.mode_used,
            "verdict": self.verdict.value,
            "negative_modes": list(self.negative_modes),
            "positive_modes": list(self.positive_modes),
            "zero_modes": list(self.zero_modes),
            "tail_sign": self.tail_sign,
            "k_max": self.k_max,
        }


def capacity_threshold(d):
    """p* = 1 + (d-1)/d."""
    if int(d) != d or d < 3:
        raise InputError(f"dimension must be an integer >= 3, got d={d!r}")
    return (2.0 * d - 1.0) / d


def capacity_unstable_modes(params, k_max=None):
    """Degrees k >= 2 with (p-1)(d-2+k) < d-1, i.e. a negative capacity term."""
    d, p = params.d, params.p
    slack = CAPACITY_REL_TOL * (d - 1)
    # (p-1)(d-2+k) - (d-1) is increasing in k, stop at the first nonnegative one
    last = math.floor((d - 1) / (p - 1.0) - (d - 2)) + 1
    if k_max is not None:
        last = min(last, k_max)
    return {k for k in range(2, last + 1) if (p - 1.0) * (d - 2 + k) - (d - 1) < -slack}


def _classify_affine(params, z2, z3, k_max, mode, functional, tol):
    ks = np.arange(2, k_max + 1)
    z = z2 + ks * z3
    neg = tuple(int(k) for k in ks[z < -tol])
    pos = tuple(int(k) for k in ks[z > tol])
    zero = tuple(int(k) for k in ks[np.abs(z) <= tol])
    code = int(kernels.classify_cells(np.array([z2]), np.array([z3]), k_max, tol)[0])
    return RegimeClassification(
        params=params,
        verdict=CODE_TO_VERDICT[code],
        negative_modes=neg,
        positive_modes=pos,
        zero_modes=zero,
        tail_sign=int(np.sign(z3)),
        k_max=k_max,
        mode_used=mode,
        functional=functional,
        z_values={int(k): float(v) for k, v in zip(ks, z)},
    )


def _check_mode(mode):
    if mode not in ALL_MODES:
        raise InputError(f"mode must be one of {ALL_MODES}, got {mode!r}")


def scaled_z(d, p, q, k, mode):
    """Positive multiple of the product's mode-k term; the multiple is independent of p and k."""
    if mode == CORRECTED:
        return corrected_mode_signs(d, p, q, k)
    s2, s3 = mode_sign_coefficients(d, p, q, mode)
    return s2 + np.asarray(k, dtype=np.float64) * s3


def _table_codes(z, tail, tol):
    """Verdict codes from explicit values ``z[..., k]`` plus a tail sign per cell."""
    neg = np.any(z < -tol, axis=-1) | (tail < 0)
    pos = np.any(z > tol, axis=-1) | (tail > 0)
    zero = np.any(np.abs(z) <= tol, axis=-1)
    codes = np.where(neg & pos, kernels.INDEFINITE, np.where(pos, kernels.LOCAL_MIN, kernels.LOCAL_MAX))
    return np.where(zero & ~(neg & pos), kernels.DEGENERATE, codes).astype(np.int8)


def _classify_table(params, k_max, mode, tol):
    d, p, q = params.d, params.p, params.q
    ks = np.arange(2, k_max + 1)
    z = np.asarray(corrected_mode_signs(d, p, q, ks))
    slope = float(corrected_tail_slope(d, p, q))
    tail = int(np.sign(slope)) if abs(slope) > tol else 0
    code = int(_table_codes(z[None, :], np.array([tail]), tol)[0])
    return RegimeClassification(
        params=params,
        verdict=CODE_TO_VERDICT[code],
        negative_modes=tuple(int(k) for k in ks[z < -tol]),
        positive_modes=tuple(int(k) for k in ks[z > tol]),
        zero_modes=tuple(int(k) for k in ks[np.abs(z) <= tol]),
        tail_sign=tail,
        k_max=k_max,
        mode_used=mode,
        z_values={int(k): float(v) for k, v in zip(ks, z)},
    )


def classify_product(params, mode="paper", k_max=DEFAULT_K_MAX, tol=Z_TOL):
    """Local max / min / indefinite / degenerate verdict for capacity x torsion."""
    _check_mode(mode)
    if k_max < 2:
        raise InputError(f"k_max must be >= 2, got {k_max}")
    if mode == CORRECTED:
        return _classify_table(params, k_max, mode, tol)
    s2, s3 = (float(x) for x in mode_sign_coefficients(params.d, params.p, params.q, mode))
    out = _classify_affine(params, s2, s3, k_max, mode, "product", tol)
    co = product_coefficients(params, mode)
    out.z_values = {k: co.c2 + k * co.c3 for k in range(2, k_max + 1)}
    return out


def classify_capacity(params, k_max=DEFAULT_K_MAX, tol=Z_TOL):
    """Same classification for the capacity alone (terms p gamma^{p-2}((p-1)mu_k - (d-1)/R))."""
    d, p = params.d, params.p
    z2 = (p - 1.0) * (d - 2.0) - (d - 1.0)
    out = _classify_affine(params, z2, p - 1.0, k_max, "derived", "capacity", tol)
    out.z_values = {k: capacity_mode_factor(params, k) for k in range(2, k_max + 1)}
    return out


@dataclass
class GridClassification:
    # z2 = Z(2); z3 the slope in k, or the asymptotic slope in corrected mode
    d: int
    mode: str
    p: np.ndarray
    q: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    codes: np.ndarray

    def count(self, verdict):
        code = {v: c for c, v in CODE_TO_VERDICT.items()}[Verdict(verdict)]
        return int(np.count_nonzero(self.codes == code))

    def verdicts(self):
        return np.vectorize(lambda c: CODE_TO_VERDICT[int(c)].value)(self.codes)


def classify_grid(d, p_values, q_values, mode="paper", k_max=DEFAULT_K_MAX, tol=Z_TOL):
    """Verdict codes on the tensor grid ``p_values x q_values``."""
    p = np.asarray(p_values, dtype=np.float64)
    q = np.asarray(q_values, dtype=np.float64)
    if p.size == 0 or q.size == 0:
        raise InputError("empty parameter grid")
    if np.any(p <= 1.0) or np.any(p >= d) or np.any(q <= 1.0):
        raise InputError(f"grid leaves the admissible region 1 < p < {d}, q > 1")
    _check_mode(mode)
    P, Q = np.meshgrid(p, q, indexing="ij")
    if mode == CORRECTED:
        # z2 holds Z(2), z3 the asymptotic slope
        z = corrected_mode_signs(d, P[..., None], Q[..., None], np.arange(2, k_max + 1))
        z2 = z[..., 0]
        z3 = corrected_tail_slope(d, P, Q)
        tail = np.where(np.abs(z3) > tol, np.sign(z3), 0.0)
        codes = _table_codes(z, tail, tol)
        return GridClassification(d=d, mode=mode, p=p, q=q, z2=z2, z3=z3, codes=codes)
    c2, z3 = mode_sign_coefficients(d, P, Q, mode)
    c2 = c2 + 0.0 * z3  # broadcast
    codes = kernels.classify_cells(c2, z3, k_max, tol)
    return GridClassification(d=d, mode=mode, p=p, q=q, z2=c2 + 2.0 * z3, z3=z3, codes=codes)


def open_grid(lo, hi, step):
    """lo, lo+step, ... up to hi (inclusive within 1e-9 step)."""
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


_CHUNK_ELEMS = 1 << 22


def positivity(d, p, q, mode, k_max=DEFAULT_K_MAX):
    """max(Z(2), c3) in scaled units: > 0 iff some k >= 2 has Z(k) > 0.

    In corrected mode: max of Z over k = 2..k_max and the tail slope.
    """
    if mode == CORRECTED:
        p, q = np.broadcast_arrays(np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64))
        k = np.arange(2, k_max + 1)
        pf, qf = p.ravel(), q.ravel()
        zmax = np.empty(pf.shape)
        # chunked: the cell x mode array of a full scan does not fit in memory
        step = max(1, _CHUNK_ELEMS // k.size)
        for i in range(0, pf.size, step):
            sl = slice(i, i + step)
            zmax[sl] = corrected_mode_signs(d, pf[sl, None], qf[sl, None], k).max(axis=-1)
        return np.maximum(zmax.reshape(p.shape), corrected_tail_slope(d, p, q))
    s2, s3 = mode_sign_coefficients(d, p, q, mode)
    return np.maximum(s2 + 2.0 * s3, s3)


@dataclass
class ThresholdResult:
    d: int
    mode: str
    p_star: float | None
    q_at_p_star: float | None
    intervals: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def found(self):
        return self.p_star is not None

    def q_bounds(self, p):
        """(q_minus, q_plus) of the first positivity interval at grid value p."""
        iv = self.intervals.get(p)
        return iv[0] if iv else None

    def to_dict(self):
        return {
            "d": self.d,
            "mode": self.mode,
            "p_star": self.p_star,
            "q_at_p_star": self.q_at_p_star,
            "intervals": [
                {"p": p, "q_intervals": [[a, b] for a, b in ivs]} for p, ivs in sorted(self.intervals.items())
            ],
            "flags": list(self.flags),
        }


def _bisect(f, a, b, tol):
    return optimize.bisect(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)


def _positivity_intervals(d, p, q_grid, mode, tol):
    """Maximal q-intervals in the scan range where positivity(d, p, q) > 0."""
    h = positivity(d, p, q_grid, mode)
    pos = h > 0.0
    out = []
    flags = []
    i = 0
    n = q_grid.size
    f = lambda q: float(positivity(d, p, q, mode))
    while i < n:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and pos[j + 1]:
            j += 1
        lo = _bisect(f, q_grid[i - 1], q_grid[i], tol) if i > 0 else None
        hi = _bisect(f, q_grid[j], q_grid[j + 1], tol) if j + 1 < n else None
        if lo is None:
            flags.append(f"p={p:.10g}: positivity already at the lower end of the q scan")
        if hi is None:
            flags.append(f"p={p:.10g}: positivity persists to the upper end of the q scan")
        out.append((lo, hi))
        i = j + 1
    return out, flags


def find_product_thresholds(
    d,
    mode="paper",
    p_step=1e-2,
    q_min=1.0 + 1e-3,
    q_max=50.0,
    q_step=1e-2,
    p_values=None,
    tol=BISECT_TOL,
):
    """Locate p* and, for each p > p*, the q-window where the ball stops being a maximizer.

    p* is the smallest p for which some (q, k >= 2) gives Z > 0.  Z is
    increasing in p, so for each q the positivity boundary is one root in p;
    p* minimises that root over q (grid scan, then bounded refinement).  The
    q-window endpoints are bisected to ``tol``.
    """
    if int(d) != d or d < 3:
        raise InputError(f"dimension must be an integer >= 3, got d={d!r}")
    _check_mode(mode)
    p_grid = open_grid(1.0 + 1e-3, d - 1e-3, p_step)
    q_grid = open_grid(q_min, q_max, q_step)
    P, Q = np.meshgrid(p_grid, q_grid, indexing="ij")
    H = positivity(d, P, Q, mode)
    hit = H > 0.0
    result = ThresholdResult(d=d, mode=mode, p_star=None, q_at_p_star=None)
    if not hit.any():
        result.flags.append("no positive mode anywhere in the scan: no thresholds")
        return result

    p_hi = d - 1e-9

    def p_root(q):
        # first sign change along the p grid; Z need not be monotone in derived mode
        h = positivity(d, p_grid, q, mode)
        idx = np.flatnonzero(h > 0.0)
        if idx.size == 0:
            return p_hi
        i = int(idx[0])
        if i == 0:
            return float(p_grid[0])
        f = lambda p: float(positivity(d, p, q, mode))
        return _bisect(f, p_grid[i - 1], p_grid[i], tol)

    cols = np.flatnonzero(hit.any(axis=0))
    first_rows = hit[:, cols].argmax(axis=0)
    if first_rows.min() == 0:
        result.flags.append("positivity at the smallest scanned p; p* is only bounded above")
    # every column reaching the earliest p row (and the next one) is a candidate; many tie on the grid
    near = cols[first_rows <= first_rows.min() + 1]
    roots = np.array([p_root(q_grid[j]) for j in near])
    jq = int(near[int(np.argmin(roots))])
    lo_q = q_grid[max(jq - 1, 0)]
    hi_q = q_grid[min(jq + 1, q_grid.size - 1)]
    q_star = float(q_grid[jq])
    if hi_q > lo_q:
        res = optimize.minimize_scalar(p_root, bounds=(lo_q, hi_q), method="bounded", options={"xatol": tol})
        if p_root(float(res.x)) <= p_root(q_star):
            q_star = float(res.x)
    result.p_star = float(p_root(q_star))
    result.q_at_p_star = q_star

    if p_values is None:
        p_values = p_grid[p_grid > result.p_star]
    for p in np.asarray(p_values, dtype=np.float64):
        ivs, flags = _positivity_intervals(d, float(p), q_grid, mode, tol)
        if ivs:
            result.intervals[float(p)] = ivs
        result.flags.extend(flags)
        if len(ivs) > 1:
            result.flags.append(f"p={p:.10g}: {len(ivs)} separate positivity windows in q")
    return result


@dataclass
class MonotoneCheck:
    ok: bool
    worst_pair: tuple
    worst_increment: float


def verify_Z_monotone_in_p(d, q, k, p_grid, mode="paper"):
    """Is Z(k) nondecreasing along ``p_grid`` (fixed d, q, k)?  Reports the worst step."""
    p = np.asarray(p_grid, dtype=np.float64)
    if p.size < 2 or np.any(np.diff(p) <= 0.0):
        raise InputError("p_grid must be strictly increasing with at least two points")
    if p[0] <= 1.0 or p[-1] >= d:
        raise InputError(f"p_grid must lie inside (1, {d})")
    _check_mode(mode)
    z = scaled_z(d, p, q, k, mode)
    inc = np.diff(z)
    i = int(np.argmin(inc))
    return MonotoneCheck(ok=bool(inc[i] >= 0.0), worst_pair=(float(p[i]), float(p[i + 1])), worst_increment=float(inc[i]))
