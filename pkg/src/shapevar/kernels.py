"""Hot loops, each in a numba flavour and a numpy flavour.

The public entry points (:func:`legendre_tables`, :func:`classify_cells`)
dispatch on :data:`shapevar._accel.USE_NUMBA`.  Both flavours are importable
directly (``*_numba`` / ``*_numpy``) so tests and the benchmark can compare
them bit for bit.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit, prange

# verdict codes shared with regimes.Verdict
LOCAL_MAX = 0
LOCAL_MIN = 1
INDEFINITE = 2
DEGENERATE = 3


# ---------------------------------------------------------------------------
# normalised associated Legendre functions
# ---------------------------------------------------------------------------
#
# Pbar[l, m] = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos theta), no
# Condon-Shortley phase.  dPbar is the derivative in theta.  The derivative
# divides by sin(theta); at the poles it is set to 0, callers that need
# gradients must stay off the poles.


def _legendre_tables_numpy(lmax, theta):
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    x = np.cos(theta)
    s = np.sin(theta)
    P = np.zeros((lmax + 1, lmax + 1, n))
    dP = np.zeros((lmax + 1, lmax + 1, n))
    P[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, lmax + 1):
        P[m, m] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(0, lmax):
        P[m + 1, m] = math.sqrt(2.0 * m + 3.0) * x * P[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (x * P[l - 1, m] - b * P[l - 2, m])
    off_pole = s > 0.0
    inv_s = np.where(off_pole, 1.0 / np.where(off_pole, s, 1.0), 0.0)
    for l in range(0, lmax + 1):
        for m in range(0, l + 1):
            if l == m:
                lower = 0.0
            else:
                lower = math.sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0)) * P[l - 1, m]
            dP[l, m] = (l * x * P[l, m] - lower) * inv_s
    return P, dP


def _legendre_tables_numba(lmax, theta):
    # allocated here: numpy's zeros are lazily zeroed pages, numba's are memset
    n = theta.shape[0]
    P = np.zeros((lmax + 1, lmax + 1, n))
    dP = np.zeros((lmax + 1, lmax + 1, n))
    _legendre_fill_numba(lmax, np.ascontiguousarray(theta, dtype=np.float64), P, dP)
    return P, dP


@njit
def _legendre_fill_numba(lmax, theta, P, dP):
    # same recurrences as the numpy flavour, point index innermost
    n = theta.shape[0]
    x = np.cos(theta)
    s = np.sin(theta)
    inv_s = np.zeros(n)
    for i in range(n):
        if s[i] > 0.0:
            inv_s[i] = 1.0 / s[i]
    c00 = 1.0 / math.sqrt(4.0 * math.pi)
    for i in range(n):
        P[0, 0, i] = c00
    for m in range(1, lmax + 1):
        f = math.sqrt((2.0 * m + 1.0) / (2.0 * m))
        for i in range(n):
            P[m, m, i] = f * s[i] * P[m - 1, m - 1, i]
    for m in range(0, lmax):
        f = math.sqrt(2.0 * m + 3.0)
        for i in range(n):
            P[m + 1, m, i] = f * x[i] * P[m, m, i]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            cur = P[l, m]
            p1 = P[l - 1, m]
            p2 = P[l - 2, m]
            for i in range(n):
                cur[i] = a * (x[i] * p1[i] - b * p2[i])
    for l in range(0, lmax + 1):
        for m in range(0, l + 1):
            out = dP[l, m]
            cur = P[l, m]
            if l == m:
                for i in range(n):
                    out[i] = l * x[i] * cur[i] * inv_s[i]
            else:
                c = math.sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
                low = P[l - 1, m]
                for i in range(n):
                    out[i] = (l * x[i] * cur[i] - c * low[i]) * inv_s[i]


def legendre_tables(lmax, theta):
    """Return ``(P, dP)`` of shape ``(lmax+1, lmax+1, len(theta))``."""
    theta = np.ascontiguousarray(theta, dtype=np.float64).ravel()
    if USE_NUMBA:
        return _legendre_tables_numba(int(lmax), theta)
    return _legendre_tables_numpy(int(lmax), theta)


# ---------------------------------------------------------------------------
# per-cell verdicts for Z(k) = c2 + k c3, k = 2..k_max plus the affine tail
# ---------------------------------------------------------------------------


@njit(parallel=True)
def _classify_cells_numba(c2, c3, k_max, tol):
    # Z is affine in k: its extremes sit at k = 2 and k = k_max, its smallest
    # modulus at the admissible integer nearest the root
    n = c2.shape[0]
    out = np.empty(n, dtype=np.int8)
    for i in prange(n):
        a = c2[i]
        b = c3[i]
        z_lo = a + 2.0 * b
        z_hi = a + k_max * b
        neg = z_lo < -tol or z_hi < -tol or b < 0.0
        pos = z_lo > tol or z_hi > tol or b > 0.0
        k0 = 2.0
        if b != 0.0:
            k0 = -a / b
            if not math.isfinite(k0):
                k0 = 2.0
        kr = min(max(np.rint(k0), 2.0), float(k_max))
        z_near = a + kr * b
        zero = not (z_near < -tol) and not (z_near > tol)
        if pos and neg:
            out[i] = INDEFINITE
        elif zero:
            out[i] = DEGENERATE
        elif neg:
            out[i] = LOCAL_MAX
        elif pos:
            out[i] = LOCAL_MIN
        else:
            out[i] = DEGENERATE
    return out


def _classify_cells_numpy(c2, c3, k_max, tol):
    c2 = np.asarray(c2, dtype=np.float64)
    c3 = np.asarray(c3, dtype=np.float64)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        z_lo = c2 + 2 * c3
        z_hi = c2 + k_max * c3
        neg = (z_lo < -tol) | (z_hi < -tol) | (c3 < 0.0)
        pos = (z_lo > tol) | (z_hi > tol) | (c3 > 0.0)
        # |Z(k)| = |c3| |k - k0| is smallest at the admissible integer nearest k0
        k0 = np.where(c3 != 0.0, -c2 / np.where(c3 != 0.0, c3, 1.0), 2.0)
        k0 = np.where(np.isfinite(k0), k0, 2.0)
        kr = np.clip(np.rint(k0), 2, k_max)
        z_near = c2 + kr * c3
        zero = ~(z_near < -tol) & ~(z_near > tol)
    out = np.full(c2.shape, DEGENERATE, dtype=np.int8)
    out[neg & ~pos & ~zero] = LOCAL_MAX
    out[pos & ~neg & ~zero] = LOCAL_MIN
    out[pos & neg] = INDEFINITE
    return out


def classify_cells(c2, c3, k_max, tol=1e-13):
    """Verdict code per cell; see ``LOCAL_MAX`` .. ``DEGENERATE``."""
    c2 = np.ascontiguousarray(c2, dtype=np.float64)
    c3 = np.ascontiguousarray(c3, dtype=np.float64)
    shape = c2.shape
    if USE_NUMBA:
        out = _classify_cells_numba(c2.ravel(), c3.ravel(), int(k_max), float(tol))
    else:
        out = _classify_cells_numpy(c2.ravel(), c3.ravel(), int(k_max), float(tol))
    return out.reshape(shape)
