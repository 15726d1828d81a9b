"""Hot inner loops, each with a numba and a numpy implementation.

The public wrappers pick the backend per call: ``backend="numba"``,
``backend="numpy"`` or ``None`` (numba unless ``BCCLAB_DISABLE_NUMBA`` is set).
Both backends return the same values up to float rounding; the test-suite
cross-checks them.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

TIE_TOL = 1e-12


def _backend(backend):
    if backend is None:
        return "numba" if _accel.use_numba() else "numpy"
    if backend == "numba" and not _accel.NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


# --------------------------------------------------------------- region rates


@njit
def _h_row(p):
    s = 0.0
    for i in range(p.shape[0]):
        if p[i] > 0.0:
            s -= p[i] * np.log(p[i])
    return s


@njit
def _region_batch_nb(qu, qvu, xi, wy, wz):
    n_cert, card_u, card_v = qvu.shape
    n_x = xi.shape[2]
    out = np.zeros((n_cert, 4))
    for c in range(n_cert):
        for which in range(2):
            w = wy if which == 0 else wz
            n_o = w.shape[1]
            a = np.zeros((card_v, n_o))
            for v in range(card_v):
                for x in range(n_x):
                    t = xi[c, v, x]
                    if t != 0.0:
                        for o in range(n_o):
                            a[v, o] += t * w[x, o]
            h_a = np.zeros(card_v)
            for v in range(card_v):
                h_a[v] = _h_row(a[v])
            marg = np.zeros(n_o)
            h_b_avg = 0.0
            h_a_avg = 0.0
            for u in range(card_u):
                b = np.zeros(n_o)
                hv = 0.0
                for v in range(card_v):
                    t = qvu[c, u, v]
                    if t != 0.0:
                        hv += t * h_a[v]
                        for o in range(n_o):
                            b[o] += t * a[v, o]
                for o in range(n_o):
                    marg[o] += qu[c, u] * b[o]
                h_b_avg += qu[c, u] * _h_row(b)
                h_a_avg += qu[c, u] * hv
            i_u = _h_row(marg) - h_b_avg
            i_v_given_u = h_b_avg - h_a_avg
            out[c, which] = max(i_u, 0.0)
            out[c, 2 + which] = max(i_v_given_u, 0.0)
    return out


def _h_last(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -t.sum(axis=-1)


def _region_batch_np(qu, qvu, xi, wy, wz):
    out = np.zeros((qu.shape[0], 4))
    for which, w in enumerate((wy, wz)):
        a = xi @ w                                  # (N, V, O)
        b = np.einsum("nuv,nvo->nuo", qvu, a)       # (N, U, O)
        marg = np.einsum("nu,nuo->no", qu, b)
        h_b = np.einsum("nu,nu->n", qu, _h_last(b))
        h_a = np.einsum("nu,nuv,nv->n", qu, qvu, _h_last(a))
        out[:, which] = np.maximum(_h_last(marg) - h_b, 0.0)
        out[:, 2 + which] = np.maximum(h_b - h_a, 0.0)
    return out


def region_batch(qu, qvu, xi, wy, wz, backend=None):
    """Mutual informations for a batch of (Q_U, Q_{V|U}, Ξ) certificates.

    Returns an (N, 4) array with columns I(U;Y), I(U;Z), I(V;Y|U), I(V;Z|U).
    """
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (qu, qvu, xi, wy, wz)]
    if _backend(backend) == "numba":
        return _region_batch_nb(*args)
    return _region_batch_np(*args)


# ---------------------------------------------------------- likelihood tables


@njit
def _likelihood_nb(wbar, codewords, n_out):
    n_cw, n = codewords.shape
    total = n_out**n
    out = np.empty((n_cw, total))
    for c in range(n_cw):
        out[c, 0] = 1.0
        size = 1
        for i in range(n):
            row = codewords[c, i]
            # expand in place from the back so earlier entries are not clobbered
            for j in range(size - 1, -1, -1):
                base = out[c, j]
                for o in range(n_out - 1, -1, -1):
                    out[c, j * n_out + o] = base * wbar[row, o]
            size *= n_out
    return out


def _likelihood_np(wbar, codewords, n_out):
    n_cw, n = codewords.shape
    table = np.ones((n_cw, 1))
    for i in range(n):
        table = (table[:, :, None] * wbar[codewords[:, i]][:, None, :]).reshape(n_cw, -1)
    return table


def likelihood_table(wbar, codewords, backend=None):
    """``table[c, z]`` = prod_i wbar[codewords[c, i], z_i].

    Output sequences z are indexed in ``itertools.product`` order.
    """
    wbar = np.ascontiguousarray(wbar, dtype=np.float64)
    cw = np.ascontiguousarray(codewords, dtype=np.int64)
    if cw.ndim == 1:
        cw = cw[None, :]
    if _backend(backend) == "numba":
        return _likelihood_nb(wbar, cw, wbar.shape[1])
    return _likelihood_np(wbar, cw, wbar.shape[1])


# ------------------------------------------------------------- MMI decoding


@njit
def _mi_from_counts(counts, n):
    a, b = counts.shape
    ra = np.zeros(a)
    rb = np.zeros(b)
    for i in range(a):
        for j in range(b):
            ra[i] += counts[i, j]
            rb[j] += counts[i, j]
    s = 0.0
    for i in range(a):
        for j in range(b):
            c = counts[i, j]
            if c > 0:
                s += c * np.log(c * n / (ra[i] * rb[j]))
    return s / n


@njit
def _mmi_nb(codewords, ys, n_in, n_out):
    n_cw, n = codewords.shape
    n_y = ys.shape[0]
    scores = np.empty((n_y, n_cw))
    counts = np.zeros((n_in, n_out))
    for t in range(n_y):
        for c in range(n_cw):
            counts[:, :] = 0.0
            for i in range(n):
                counts[codewords[c, i], ys[t, i]] += 1.0
            scores[t, c] = _mi_from_counts(counts, float(n))
    return scores


def _mmi_np(codewords, ys, n_in, n_out, chunk=4096):
    n_cw, n = codewords.shape
    cw_hot = np.eye(n_in)[codewords]            # (C, n, A)
    out = np.empty((ys.shape[0], n_cw))
    for start in range(0, ys.shape[0], chunk):
        y_hot = np.eye(n_out)[ys[start:start + chunk]]   # (Y, n, B)
        counts = np.einsum("cia,yib->ycab", cw_hot, y_hot)
        ra = counts.sum(axis=3, keepdims=True)
        rb = counts.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(counts > 0,
                             counts * np.log(counts * n / (ra * rb)), 0.0)
        out[start:start + chunk] = terms.sum(axis=(2, 3)) / n
    return out


def mmi_scores(codewords, ys, n_in, n_out, backend=None):
    """Empirical mutual information between each codeword and each received word.

    ``codewords`` is (C, n), ``ys`` is (Y, n); returns (Y, C).
    """
    cw = np.ascontiguousarray(codewords, dtype=np.int64)
    y = np.ascontiguousarray(ys, dtype=np.int64)
    if y.ndim == 1:
        y = y[None, :]
    if _backend(backend) == "numba":
        return _mmi_nb(cw, y, int(n_in), int(n_out))
    return _mmi_np(cw, y, int(n_in), int(n_out))


def argmax_first(scores, tol=TIE_TOL):
    """Row-wise argmax treating values within ``tol`` of the best as ties.

    Ties resolve to the smallest column index.
    """
    scores = np.atleast_2d(scores)
    best = scores.max(axis=1, keepdims=True)
    return np.argmax(scores >= best - tol, axis=1)


# ------------------------------------------------------ hash family leakage


@njit
def _family_info_nb(values, joint, n_hash_out):
    n_f, n_l = values.shape
    n_z = joint.shape[1]
    p_z = np.zeros(n_z)
    for l in range(n_l):
        for z in range(n_z):
            p_z[z] += joint[l, z]
    out = np.empty(n_f)
    pm = np.zeros((n_hash_out, n_z))
    for f in range(n_f):
        pm[:, :] = 0.0
        for l in range(n_l):
            s = values[f, l]
            for z in range(n_z):
                pm[s, z] += joint[l, z]
        info = 0.0
        for s in range(n_hash_out):
            ps = 0.0
            for z in range(n_z):
                ps += pm[s, z]
            for z in range(n_z):
                if pm[s, z] > 0.0:
                    info += pm[s, z] * np.log(pm[s, z] / (ps * p_z[z]))
        out[f] = max(info, 0.0)
    return out


def _family_info_np(values, joint, n_hash_out):
    hot = np.eye(n_hash_out)[values]                 # (F, L, M)
    pm = np.einsum("flm,lz->fmz", hot, joint)
    ps = pm.sum(axis=2, keepdims=True)
    pz = joint.sum(axis=0)[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pm > 0, pm * np.log(pm / (ps * pz)), 0.0)
    return np.maximum(terms.sum(axis=(1, 2)), 0.0)


def family_info(values, joint, n_hash_out, backend=None):
    """I(f(L); Z) for every hash f, given ``values[f, l] = f(l)`` and P(l, z)."""
    v = np.ascontiguousarray(values, dtype=np.int64)
    j = np.ascontiguousarray(joint, dtype=np.float64)
    if _backend(backend) == "numba":
        return _family_info_nb(v, j, int(n_hash_out))
    return _family_info_np(v, j, int(n_hash_out))
