# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``secmux._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


cdef inline long long _mod(long long a, long long q) nogil:
    cdef long long r = a % q
    if r < 0:
        r += q
    return r


def invertible_mask(mats, long long q):
    cdef const cnp.int64_t[:, :, ::1] src = np.ascontiguousarray(mats, dtype=np.int64)
    cdef Py_ssize_t n = src.shape[0], k = src.shape[1]
    cdef cnp.int64_t[:, ::1] a = np.empty((k, k), dtype=np.int64)
    cdef cnp.int64_t[::1] inv = np.zeros(q, dtype=np.int64)
    cdef cnp.uint8_t[::1] out = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t m, i, j, col, piv
    cdef long long t, s, f
    for x in range(1, q):
        inv[x] = pow(x, -1, q)
    with nogil:
        for m in range(n):
            for i in range(k):
                for j in range(k):
                    a[i, j] = _mod(src[m, i, j], q)
            out[m] = 1
            for col in range(k):
                piv = -1
                for i in range(col, k):
                    if a[i, col] != 0:
                        piv = i
                        break
                if piv < 0:
                    out[m] = 0
                    break
                if piv != col:
                    for j in range(k):
                        t = a[piv, j]
                        a[piv, j] = a[col, j]
                        a[col, j] = t
                s = inv[a[col, col]]
                for j in range(k):
                    a[col, j] = (a[col, j] * s) % q
                for i in range(col + 1, k):
                    f = a[i, col]
                    if f != 0:
                        for j in range(k):
                            a[i, j] = _mod(a[i, j] - f * a[col, j], q)
    return np.asarray(out).astype(bool)


def pair_collision_counts(images):
    cdef const cnp.int64_t[:, ::1] img = np.ascontiguousarray(images, dtype=np.int64)
    cdef Py_ssize_t nf = img.shape[0], n = img.shape[1]
    cdef cnp.int64_t[:, ::1] counts = np.zeros((n, n), dtype=np.int64)
    cdef Py_ssize_t f, x1, x2
    with nogil:
        for f in range(nf):
            for x1 in range(n):
                for x2 in range(x1 + 1, n):
                    if img[f, x1] == img[f, x2]:
                        counts[x1, x2] += 1
        for x1 in range(n):
            counts[x1, x1] = nf
            for x2 in range(x1 + 1, n):
                counts[x2, x1] = counts[x1, x2]
    return np.asarray(counts)


cdef double _mi_pair(const double[::1] pu, const double[:, ::1] pvu, double[:, ::1] pov,
                     double[:, ::1] pou, double[::1] po, double *i_u) nogil:
    """Return I(V;O|U); write I(U;O) into ``i_u``."""
    cdef Py_ssize_t nu = pvu.shape[0], nv = pvu.shape[1], no = pov.shape[1]
    cdef Py_ssize_t u, v, o
    cdef double acc = 0.0, acc_u = 0.0, w
    for u in range(nu):
        if pu[u] <= 0.0:
            continue
        for v in range(nv):
            if pvu[u, v] <= 0.0:
                continue
            for o in range(no):
                w = pov[v, o]
                if w > 0.0:
                    acc += pu[u] * pvu[u, v] * w * (log(w) - log(pou[u, o]))
        for o in range(no):
            w = pou[u, o]
            if w > 0.0:
                acc_u += pu[u] * w * (log(w) - log(po[o]))
    i_u[0] = acc_u
    return acc


def scan_information(pu_b, pvu_b, pxv_b, wy, wz):
    cdef const double[:, ::1] pu = np.ascontiguousarray(pu_b, dtype=np.float64)
    cdef const double[:, :, ::1] pvu = np.ascontiguousarray(pvu_b, dtype=np.float64)
    cdef const double[:, :, ::1] pxv = np.ascontiguousarray(pxv_b, dtype=np.float64)
    cdef const double[:, ::1] chan
    cdef Py_ssize_t nb = pu.shape[0], nu = pu.shape[1], nv = pvu.shape[2], nx = pxv.shape[2]
    cdef double[:, ::1] out = np.zeros((nb, 4), dtype=np.float64)
    cdef double[:, ::1] pov
    cdef double[:, ::1] pou
    cdef double[::1] po
    cdef Py_ssize_t b, u, v, x, o, no, col
    cdef double i_u = 0.0
    for col in range(2):
        chan = np.ascontiguousarray(wy if col == 0 else wz, dtype=np.float64)
        no = chan.shape[1]
        pov = np.zeros((nv, no))
        pou = np.zeros((nu, no))
        po = np.zeros(no)
        with nogil:
            for b in range(nb):
                for v in range(nv):
                    for o in range(no):
                        pov[v, o] = 0.0
                    for x in range(nx):
                        if pxv[b, v, x] != 0.0:
                            for o in range(no):
                                pov[v, o] += pxv[b, v, x] * chan[x, o]
                for o in range(no):
                    po[o] = 0.0
                for u in range(nu):
                    for o in range(no):
                        pou[u, o] = 0.0
                    for v in range(nv):
                        if pvu[b, u, v] != 0.0:
                            for o in range(no):
                                pou[u, o] += pvu[b, u, v] * pov[v, o]
                    for o in range(no):
                        po[o] += pu[b, u] * pou[u, o]
                out[b, col] = _mi_pair(pu[b], pvu[b], pov, pou, po, &i_u)
                out[b, col + 2] = i_u
    return np.asarray(out)
