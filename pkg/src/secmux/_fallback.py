"""Pure numpy implementations of the hot kernels.

Every function here has a drop-in twin in the compiled ``_kernels`` module;
``secmux.kernels`` picks one at import time.
"""

import numpy as np
from scipy.special import xlogy


def invertible_mask(mats, q):
    """Flag which square matrices of a batch are invertible over F_q.

    Parameters
    ----------
    mats : ndarray, shape (N, k, k)
        Integer entries in ``[0, q)``.
    q : int
        Prime modulus.

    Returns
    -------
    ndarray of bool, shape (N,)
    """
    a = np.array(mats, dtype=np.int64, copy=True) % q
    n, k, _ = a.shape
    inv_table = np.zeros(q, dtype=np.int64)
    for x in range(1, q):
        inv_table[x] = pow(x, -1, q)
    alive = np.ones(n, dtype=bool)
    batch = np.arange(n)
    for col in range(k):
        nz = a[:, col:, col] != 0
        has_pivot = nz.any(axis=1)
        alive &= has_pivot
        piv = col + np.argmax(nz, axis=1)
        # swap pivot row into place
        pivot_rows = a[batch, piv].copy()
        a[batch, piv] = a[:, col]
        a[:, col] = pivot_rows
        scale = inv_table[a[:, col, col]]
        a[:, col] = (a[:, col] * scale[:, None]) % q
        factors = a[:, col + 1:, col]
        a[:, col + 1:] = (a[:, col + 1:] - factors[:, :, None] * a[:, col][:, None, :]) % q
    return alive


def pair_collision_counts(images):
    """Count, for every pair of inputs, the members that map them together.

    Parameters
    ----------
    images : ndarray, shape (F, N)
        ``images[f, x]`` is the (projected) output code of member ``f`` on
        input ``x``.

    Returns
    -------
    ndarray of int64, shape (N, N)
        ``counts[x1, x2] = #{f : images[f, x1] == images[f, x2]}``. The
        diagonal equals ``F``.
    """
    images = np.asarray(images, dtype=np.int64)
    f, n = images.shape
    counts = np.empty((n, n), dtype=np.int64)
    for x1 in range(n):
        counts[x1] = (images == images[:, x1:x1 + 1]).sum(axis=0)
    return counts


def scan_information(pu, pvu, pxv, wy, wz):
    """Information quantities of a batch of Markov chains U -> V -> X -> YZ.

    Returns
    -------
    ndarray, shape (B, 4)
        Columns are I(V;Y|U), I(V;Z|U), I(U;Y), I(U;Z) in nats.
    """
    pu = np.asarray(pu, dtype=np.float64)
    pvu = np.asarray(pvu, dtype=np.float64)
    pxv = np.asarray(pxv, dtype=np.float64)
    out = np.empty((pu.shape[0], 4))
    for col, w in ((0, wy), (1, wz)):
        pov = pxv @ np.asarray(w, dtype=np.float64)  # (B, V, O)
        pou = np.einsum("buv,bvo->buo", pvu, pov)
        po = np.einsum("bu,buo->bo", pu, pou)
        weight = pu[:, :, None, None] * pvu[:, :, :, None] * pov[:, None, :, :]
        out[:, col] = (
            xlogy(weight, pov[:, None, :, :]) - xlogy(weight, pou[:, :, None, :])
        ).sum(axis=(1, 2, 3))
        wu = pu[:, :, None] * pou
        out[:, col + 2] = (xlogy(wu, pou) - xlogy(wu, po[:, None, :])).sum(axis=(1, 2))
    return out
