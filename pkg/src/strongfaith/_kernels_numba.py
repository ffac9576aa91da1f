"""numba kernels for per-sample partial-correlation minima.

Layout conventions shared with the numpy fallback:

* vertex ``v`` is index ``v - 1``; vertex sets are int64 bitmasks;
* ``flags[s_mask, pair]`` holds class bits for the triple (i, j, S):
  bit 0 not d-separated (M), bit 1 in N1, bit 2 in N2;
* pairs ``i < j`` are numbered row by row (see ``pair_index``);
* the argmin is encoded as ``s_mask * npairs + pair`` (``-1`` if none).
"""

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def ancestors(parent, s_mask):
    p = parent.shape[0]
    result = s_mask
    frontier = s_mask
    while frontier != 0:
        nxt = 0
        for v in range(p):
            if (frontier >> v) & 1:
                nxt |= parent[v]
        frontier = nxt & ~result
        result |= nxt
    return result


@njit(**_OPTS)
def d_connected(parent, child, src, s_mask, anc):
    """Bitmask of vertices d-connected to ``src`` given ``s_mask``."""
    p = parent.shape[0]
    vis_up = 0
    vis_down = 0
    reach = 0
    todo_up = np.int64(1) << src
    todo_down = np.int64(0)
    while todo_up != 0 or todo_down != 0:
        todo_up &= ~vis_up
        todo_down &= ~vis_down
        vis_up |= todo_up
        vis_down |= todo_down
        new_up = np.int64(0)
        new_down = np.int64(0)
        for v in range(p):
            bit = np.int64(1) << v
            if todo_up & bit and not s_mask & bit:
                new_up |= parent[v]
                new_down |= child[v]
            if todo_down & bit:
                if not s_mask & bit:
                    new_down |= child[v]
                if anc & bit:
                    new_up |= parent[v]
        reach |= (todo_up | todo_down) & ~s_mask
        todo_up = new_up
        todo_down = new_down
    return reach & ~(np.int64(1) << src)


@njit(**_OPTS)
def fill_flags(parent, child, deg, need_dsep, flags):
    """Class bits for every (S, pair); ``flags`` has shape (2**p, npairs)."""
    p = parent.shape[0]
    nmask = flags.shape[0]
    flags[:, :] = 0
    conn = np.zeros(p, dtype=np.int64)
    for s_mask in range(nmask):
        s = np.int64(s_mask)
        size = 0
        for v in range(p):
            if (s >> v) & 1:
                size += 1
        if need_dsep:
            anc = ancestors(parent, s)
            for i in range(p):
                if (s >> i) & 1:
                    conn[i] = 0
                else:
                    conn[i] = d_connected(parent, child, i, s, anc)
        pair = 0
        for i in range(p):
            for j in range(i + 1, p):
                if ((s >> i) & 1) or ((s >> j) & 1):
                    pair += 1
                    continue
                nbr_i = parent[i] | child[i]
                nbr_j = parent[j] | child[j]
                adjacent = (nbr_i >> j) & 1
                f = 0
                if need_dsep and (conn[i] >> j) & 1:
                    f |= 1
                if size <= deg:
                    if adjacent:
                        f |= 6
                    elif (nbr_i & nbr_j) != 0 and f & 1:
                        f |= 2
                flags[s_mask, pair] = f
                pair += 1


@njit(**_OPTS)
def sem_matrices(a, sigma, k):
    """Sigma = W^T W and K = U U^T with U = I - A and W = U^{-1}."""
    p = a.shape[0]
    w = np.zeros((p, p))
    # back substitution for the unit upper-triangular U
    for c in range(p):
        w[c, c] = 1.0
        for r in range(c - 1, -1, -1):
            acc = 0.0
            for t in range(r + 1, c + 1):
                acc += a[r, t] * w[t, c]
            w[r, c] = acc
    for i in range(p):
        for j in range(i, p):
            acc_s = 0.0
            acc_k = 0.0
            for t in range(p):
                acc_s += w[t, i] * w[t, j]
                ui = (1.0 if t == i else 0.0) - a[i, t]
                uj = (1.0 if t == j else 0.0) - a[j, t]
                acc_k += ui * uj
            sigma[i, j] = acc_s
            sigma[j, i] = acc_s
            k[i, j] = acc_k
            k[j, i] = acc_k


@njit(**_OPTS)
def _visit(mat, elim, p, from_k, flags, thr, full, mins, args):
    """Score all pairs outside ``elim`` for one Schur complement.

    ``from_k`` false: ``mat`` is Sigma conditioned on S = elim.
    ``from_k`` true: ``mat`` is K with ``elim`` marginalized out, so the
    conditioning set is everything else besides the pair.
    """
    npairs = flags.shape[1]
    pair = 0
    for i in range(p):
        for j in range(i + 1, p):
            if ((elim >> i) & 1) or ((elim >> j) & 1):
                pair += 1
                continue
            if from_k:
                s_mask = full & ~elim & ~(np.int64(1) << i) & ~(np.int64(1) << j)
            else:
                s_mask = elim
            f = flags[s_mask, pair]
            if f != 0:
                r = abs(mat[i, j]) / np.sqrt(mat[i, i] * mat[j, j])
                if r >= thr:
                    for c in range(3):
                        if (f >> c) & 1 and r < mins[c]:
                            mins[c] = r
                            args[c] = s_mask * npairs + pair
            pair += 1


@njit(**_OPTS)
def _eliminate(src, dst, k):
    p = src.shape[0]
    piv = src[k, k]
    for r in range(p):
        f = src[r, k] / piv
        for c in range(p):
            dst[r, c] = src[r, c] - f * src[k, c]
    return piv


@njit(**_OPTS)
def _sweep(base, p, max_depth, from_k, flags, thr, full, mins, args, stack):
    """Depth-first walk over eliminated sets of size <= max_depth.

    Each child eliminates one index larger than every index already
    eliminated, so each set is visited once and costs one rank-one update.
    Returns False if a pivot was not positive.
    """
    stack[0, :, :] = base
    masks = np.zeros(max_depth + 2, dtype=np.int64)
    nxt = np.zeros(max_depth + 2, dtype=np.int64)
    _visit(stack[0], np.int64(0), p, from_k, flags, thr, full, mins, args)
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        kk = nxt[depth]
        if depth < max_depth and kk < p:
            nxt[depth] = kk + 1
            piv = _eliminate(stack[depth], stack[depth + 1], kk)
            if not piv > 0.0:
                return False
            masks[depth + 1] = masks[depth] | (np.int64(1) << kk)
            _visit(stack[depth + 1], masks[depth + 1], p, from_k, flags, thr, full, mins, args)
            depth += 1
            nxt[depth] = kk + 1
        else:
            depth -= 1
    return True


@njit(**_OPTS)
def sample_minima(a, flags, thr, mins, args, sigma, k, stack):
    """Per-class min |partial correlation| over every flagged triple.

    Conditioning sets with at most (p - 2) // 2 vertices are read off Sigma
    conditioned on S; larger ones come from K with the complement of
    S u {i, j} marginalized out.  Either way at most about half the
    vertices are ever eliminated.
    """
    p = a.shape[0]
    for c in range(3):
        mins[c] = np.inf
        args[c] = -1
    if p < 2:
        return True
    sem_matrices(a, sigma, k)
    full = (np.int64(1) << p) - 1
    half = (p - 2) // 2
    ok = _sweep(sigma, p, half, False, flags, thr, full, mins, args, stack)
    if p - 3 - half >= 0:
        ok = _sweep(k, p, p - 3 - half, True, flags, thr, full, mins, args, stack) and ok
    return ok


@njit(**_OPTS)
def batch_minima_fixed(a_batch, flags, thr, mins, args):
    """All samples share one DAG and therefore one flag table."""
    n, p = a_batch.shape[0], a_batch.shape[1]
    sigma = np.empty((p, p))
    k = np.empty((p, p))
    stack = np.empty((p + 1, p, p))
    bad = 0
    for t in range(n):
        if not sample_minima(a_batch[t], flags, thr, mins[t], args[t], sigma, k, stack):
            bad += 1
    return bad


@njit(**_OPTS)
def batch_minima_varying(a_batch, parents, children, degs, need_dsep, thr, mins, args):
    """Each sample carries its own DAG (as parent/child bitmasks)."""
    n, p = a_batch.shape[0], a_batch.shape[1]
    npairs = p * (p - 1) // 2
    flags = np.empty((1 << p, max(npairs, 1)), dtype=np.uint8)
    sigma = np.empty((p, p))
    k = np.empty((p, p))
    stack = np.empty((p + 1, p, p))
    bad = 0
    for t in range(n):
        fill_flags(parents[t], children[t], degs[t], need_dsep, flags)
        if not sample_minima(a_batch[t], flags, thr, mins[t], args[t], sigma, k, stack):
            bad += 1
    return bad


@njit(**_OPTS)
def batch_flags(parents, children, degs, need_dsep, out):
    for t in range(parents.shape[0]):
        fill_flags(parents[t], children[t], degs[t], need_dsep, out[t])


@njit(**_OPTS)
def _triple_parcorr(sigma, idx, q):
    """|corr| of idx[0], idx[1] given idx[2:q] by Cholesky of Sigma_QQ."""
    m = np.empty((q, q))
    for r in range(q):
        for c in range(q):
            m[r, c] = sigma[idx[r], idx[c]]
    # factor with the pair last so the last 2x2 block of L holds the answer
    order = np.empty(q, dtype=np.int64)
    for r in range(q - 2):
        order[r] = r + 2
    order[q - 2] = 0
    order[q - 1] = 1
    b = np.empty((q, q))
    for r in range(q):
        for c in range(q):
            b[r, c] = m[order[r], order[c]]
    for c in range(q):
        d = b[c, c]
        for t in range(c):
            d -= b[c, t] * b[c, t]
        if not d > 0.0:
            return np.nan
        d = np.sqrt(d)
        b[c, c] = d
        for r in range(c + 1, q):
            acc = b[r, c]
            for t in range(c):
                acc -= b[r, t] * b[c, t]
            b[r, c] = acc / d
    # residual covariance of the pair given the rest
    l21 = b[q - 1, q - 2]
    l22 = b[q - 1, q - 1]
    l11 = b[q - 2, q - 2]
    cov = l11 * l21
    var_j = l21 * l21 + l22 * l22
    return abs(cov) / np.sqrt(l11 * l11 * var_j)


@njit(**_OPTS)
def batch_minima_triples(a_batch, triples, sizes, classes, thr, mins, args):
    """Minima over an explicit triple list (for graphs past the subset table).

    ``triples[t]`` holds 0-based vertex indices i, j, S...; ``sizes[t]`` the
    number used; ``classes[t]`` the class bits.  ``args`` stores the row of
    the minimizing triple.
    """
    n, p = a_batch.shape[0], a_batch.shape[1]
    sigma = np.empty((p, p))
    k = np.empty((p, p))
    bad = 0
    for s in range(n):
        sem_matrices(a_batch[s], sigma, k)
        for c in range(3):
            mins[s, c] = np.inf
            args[s, c] = -1
        for t in range(triples.shape[0]):
            r = _triple_parcorr(sigma, triples[t], sizes[t])
            if np.isnan(r):
                bad += 1
                continue
            if r < thr:
                continue
            f = classes[t]
            for c in range(3):
                if (f >> c) & 1 and r < mins[s, c]:
                    mins[s, c] = r
                    args[s, c] = t
    return bad
