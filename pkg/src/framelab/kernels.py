"""Hot loops, each with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``FRAMELAB_NUMBA`` is not
``0``. Both paths are always importable so they can be cross-checked and
benchmarked against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("FRAMELAB_NUMBA", "1") == "0":
        raise ImportError("numba disabled by FRAMELAB_NUMBA=0")
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is often too old; the portable layer avoids the warning
        numba.config.THREADING_LAYER = "workqueue"
    HAVE_NUMBA = True
    prange = numba.prange
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False
    prange = range

USE_NUMBA = HAVE_NUMBA


def _configure_threads() -> None:
    cap = os.environ.get("FRAMELAB_THREADS")
    if HAVE_NUMBA and cap:
        try:
            numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            pass


_configure_threads()


# -- graph transform pull-back -------------------------------------------------


def pullback_step_numpy(slope, fx, fy, ft, forcing, mult):
    """One pull-back sweep: ``out[q] = mult * interp(slope, pre(q)) + forcing[q]``.

    ``fx, fy`` are fractional grid indices of the base preimage of each base
    node, ``ft`` the fractional fiber shift; interpolation is trilinear and
    periodic. Returns ``(out, sup |out - slope|)``.
    """
    nx, ny, nt = slope.shape
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    wx = (fx - x0)[:, :, None]
    wy = (fy - y0)[:, :, None]
    x0 %= nx
    y0 %= ny
    x1 = (x0 + 1) % nx
    y1 = (y0 + 1) % ny

    tt = np.arange(nt)[None, None, :] + ft[:, :, None]
    t0f = np.floor(tt)
    wt = tt - t0f
    t0 = t0f.astype(np.int64) % nt
    t1 = (t0 + 1) % nt

    flat = slope.reshape(-1)

    def gather(ix, iy, it):
        return flat[(ix[:, :, None] * ny + iy[:, :, None]) * nt + it]

    c00 = gather(x0, y0, t0) * (1 - wt) + gather(x0, y0, t1) * wt
    c01 = gather(x0, y1, t0) * (1 - wt) + gather(x0, y1, t1) * wt
    c10 = gather(x1, y0, t0) * (1 - wt) + gather(x1, y0, t1) * wt
    c11 = gather(x1, y1, t0) * (1 - wt) + gather(x1, y1, t1) * wt
    val = (c00 * (1 - wy) + c01 * wy) * (1 - wx) + (c10 * (1 - wy) + c11 * wy) * wx
    out = mult * val + forcing[:, :, None]
    return out, float(np.max(np.abs(out - slope)))


def _pullback_step_loops(slope, fx, fy, ft, forcing, mult, out, rowmax):
    nx, ny, nt = slope.shape
    for i in prange(nx):
        best = 0.0
        for j in range(ny):
            gx = fx[i, j]
            gy = fy[i, j]
            x0 = int(np.floor(gx))
            y0 = int(np.floor(gy))
            wx = gx - x0
            wy = gy - y0
            x0 = x0 % nx
            y0 = y0 % ny
            x1 = (x0 + 1) % nx
            y1 = (y0 + 1) % ny
            shift = ft[i, j]
            f = forcing[i, j]
            for k in range(nt):
                tt = k + shift
                t0 = int(np.floor(tt))
                wt = tt - t0
                t0 = t0 % nt
                t1 = (t0 + 1) % nt
                c00 = slope[x0, y0, t0] * (1 - wt) + slope[x0, y0, t1] * wt
                c01 = slope[x0, y1, t0] * (1 - wt) + slope[x0, y1, t1] * wt
                c10 = slope[x1, y0, t0] * (1 - wt) + slope[x1, y0, t1] * wt
                c11 = slope[x1, y1, t0] * (1 - wt) + slope[x1, y1, t1] * wt
                v = (c00 * (1 - wy) + c01 * wy) * (1 - wx) + (c10 * (1 - wy) + c11 * wy) * wx
                o = mult * v + f
                out[i, j, k] = o
                d = abs(o - slope[i, j, k])
                if d > best:
                    best = d
        rowmax[i] = best


if HAVE_NUMBA:
    _pullback_step_jit = numba.njit(parallel=True, cache=True)(_pullback_step_loops)

    def pullback_step_numba(slope, fx, fy, ft, forcing, mult):
        out = np.empty_like(slope)
        rowmax = np.zeros(slope.shape[0])
        _pullback_step_jit(slope, fx, fy, ft, forcing, float(mult), out, rowmax)
        return out, float(rowmax.max())
else:  # pragma: no cover
    pullback_step_numba = None


# -- QR re-orthonormalisation ---------------------------------------------------


def qr_log_diagonals_numpy(mats):
    """Log |R_ii| of the QR step for each iterate.

    ``mats`` has shape ``(n_iter, n_orbits, n, n)`` holding the one-step
    derivative along each orbit. Returns an array of the same leading shape
    and trailing ``n``.
    """
    n_iter, m, n, _ = mats.shape
    q = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    logs = np.empty((n_iter, m, n))
    for t in range(n_iter):
        q, r = np.linalg.qr(mats[t] @ q)
        d = np.diagonal(r, axis1=1, axis2=2)
        logs[t] = np.log(np.abs(d))
    return logs


def _qr_log_diagonals_loops(mats, logs):
    n_iter, m, n, _ = mats.shape
    for s in range(m):
        q = np.eye(n)
        z = np.empty((n, n))
        for t in range(n_iter):
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for c in range(n):
                        acc += mats[t, s, a, c] * q[c, b]
                    z[a, b] = acc
            # modified Gram-Schmidt on the columns of z
            for b in range(n):
                for c in range(b):
                    dot = 0.0
                    for a in range(n):
                        dot += q[a, c] * z[a, b]
                    for a in range(n):
                        z[a, b] -= dot * q[a, c]
                nrm = 0.0
                for a in range(n):
                    nrm += z[a, b] * z[a, b]
                nrm = np.sqrt(nrm)
                logs[t, s, b] = np.log(nrm)
                for a in range(n):
                    q[a, b] = z[a, b] / nrm


if HAVE_NUMBA:
    _qr_log_diagonals_jit = numba.njit(cache=True)(_qr_log_diagonals_loops)

    def qr_log_diagonals_numba(mats):
        mats = np.ascontiguousarray(mats, dtype=np.float64)
        logs = np.empty(mats.shape[:3])
        _qr_log_diagonals_jit(mats, logs)
        return logs
else:  # pragma: no cover
    qr_log_diagonals_numba = None


def pullback_step(slope, fx, fy, ft, forcing, mult):
    if USE_NUMBA:
        return pullback_step_numba(slope, fx, fy, ft, forcing, mult)
    return pullback_step_numpy(slope, fx, fy, ft, forcing, mult)


def qr_log_diagonals(mats):
    if USE_NUMBA:
        return qr_log_diagonals_numba(mats)
    return qr_log_diagonals_numpy(mats)
