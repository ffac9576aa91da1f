"""Pure-numpy versions of the kernels in ``_kernels_numba``.

Same signatures and outputs; loops run over subsets (or triples) while the
arithmetic is vectorised across the sample batch.
"""

import numpy as np


def _bit_or_gather(masks, table):
    """OR of ``table[..., v]`` over the bits v set in ``masks``.

    ``masks`` has shape (n, m) and ``table`` shape (n, p).
    """
    out = np.zeros_like(masks)
    for v in range(table.shape[1]):
        hit = (masks >> v) & 1
        out |= np.where(hit == 1, table[:, v:v + 1], 0)
    return out


def _ancestor_masks(parents, s_masks):
    result = s_masks.copy()
    frontier = s_masks.copy()
    while frontier.any():
        nxt = _bit_or_gather(frontier, parents)
        frontier = nxt & ~result
        result |= nxt
    return result


def _d_connected(parents, children, src, s_masks, anc):
    """Vectorised Bayes-ball over an (n, m) grid of conditioning sets."""
    one = np.int64(1)
    vis_up = np.zeros_like(s_masks)
    vis_down = np.zeros_like(s_masks)
    reach = np.zeros_like(s_masks)
    todo_up = np.full_like(s_masks, one << src)
    todo_down = np.zeros_like(s_masks)
    while todo_up.any() or todo_down.any():
        todo_up &= ~vis_up
        todo_down &= ~vis_down
        vis_up |= todo_up
        vis_down |= todo_down
        free_up = todo_up & ~s_masks
        new_up = _bit_or_gather(free_up, parents) | _bit_or_gather(todo_down & anc, parents)
        new_down = _bit_or_gather(free_up, children) | \
            _bit_or_gather(todo_down & ~s_masks, children)
        reach |= (todo_up | todo_down) & ~s_masks
        todo_up, todo_down = new_up, new_down
    return reach & ~(one << src)


def batch_flags(parents, children, degs, need_dsep, out):
    n, p = parents.shape
    m = 1 << p
    s = np.broadcast_to(np.arange(m, dtype=np.int64), (n, m)).copy()
    sizes = np.zeros(m, dtype=np.int64)
    for v in range(p):
        sizes += (np.arange(m) >> v) & 1
    small = sizes[None, :] <= np.asarray(degs)[:, None]
    conn = np.zeros((n, m, p), dtype=np.int64)
    if need_dsep:
        anc = _ancestor_masks(parents, s)
        for i in range(p):
            conn[:, :, i] = _d_connected(parents, children, i, s, anc)
    nbr = parents | children
    out[...] = 0
    pair = 0
    for i in range(p):
        for j in range(i + 1, p):
            excluded = ((s >> i) & 1) | ((s >> j) & 1)
            f = np.zeros((n, m), dtype=np.uint8)
            if need_dsep:
                f |= ((conn[:, :, i] >> j) & 1).astype(np.uint8)
            adjacent = ((nbr[:, i] >> j) & 1).astype(bool)[:, None]
            shares = ((nbr[:, i] & nbr[:, j]) != 0)[:, None]
            f |= np.where(small & adjacent, 6, 0).astype(np.uint8)
            n1 = small & ~adjacent & shares & ((f & 1) == 1)
            f |= np.where(n1, 2, 0).astype(np.uint8)
            f[excluded == 1] = 0
            out[:, :, pair] = f
            pair += 1


def sem_matrices(a_batch):
    p = a_batch.shape[-1]
    u = np.eye(p)[None] - a_batch
    w = np.linalg.inv(u)
    sigma = np.einsum("nti,ntj->nij", w, w)
    k = u @ np.swapaxes(u, 1, 2)
    return sigma, k


def _pairs(p):
    iu, ju = np.triu_indices(p, 1)
    return iu, ju


def _score(mat, elim, from_k, flags, flag_rows, thr, mins, args, full):
    """Update minima for every pair outside ``elim`` (a python int)."""
    p = mat.shape[1]
    iu, ju = _pairs(p)
    npairs = len(iu)
    keep = np.array([not ((elim >> i) & 1 or (elim >> j) & 1) for i, j in zip(iu, ju)])
    if not keep.any():
        return
    pidx = np.nonzero(keep)[0]
    ii, jj = iu[pidx], ju[pidx]
    if from_k:
        s_masks = np.array([full & ~elim & ~(1 << int(i)) & ~(1 << int(j))
                            for i, j in zip(ii, jj)], dtype=np.int64)
    else:
        s_masks = np.full(len(pidx), elim, dtype=np.int64)
    f = flags[flag_rows[:, None], s_masks[None, :], pidx[None, :]]
    if not f.any():
        return
    r = np.abs(mat[:, ii, jj]) / np.sqrt(mat[:, ii, ii] * mat[:, jj, jj])
    valid = r >= thr
    codes = s_masks * npairs + pidx
    for c in range(3):
        cand = np.where(((f >> c) & 1).astype(bool) & valid, r, np.inf)
        best = np.argmin(cand, axis=1)
        val = cand[np.arange(len(cand)), best]
        better = val < mins[:, c]
        mins[better, c] = val[better]
        args[better, c] = codes[best[better]]


def _sweep(base, max_depth, from_k, flags, flag_rows, thr, mins, args):
    p = base.shape[1]
    full = (1 << p) - 1
    bad = np.zeros(base.shape[0], dtype=bool)

    def rec(mat, elim, start, depth):
        _score(mat, elim, from_k, flags, flag_rows, thr, mins, args, full)
        if depth == max_depth:
            return
        for kk in range(start, p):
            piv = mat[:, kk, kk]
            bad[~(piv > 0)] = True
            with np.errstate(divide="ignore", invalid="ignore"):
                col = mat[:, :, kk] / piv[:, None]
            child = mat - col[:, :, None] * mat[:, kk, None, :]
            rec(child, elim | (1 << kk), kk + 1, depth + 1)

    rec(base, 0, 0, 0)
    return bad


def _minima(a_batch, flags, flag_rows, thr, mins, args):
    n, p = a_batch.shape[0], a_batch.shape[1]
    mins[...] = np.inf
    args[...] = -1
    if p < 2:
        return 0
    sigma, k = sem_matrices(a_batch)
    half = (p - 2) // 2
    bad = _sweep(sigma, half, False, flags, flag_rows, thr, mins, args)
    if p - 3 - half >= 0:
        bad |= _sweep(k, p - 3 - half, True, flags, flag_rows, thr, mins, args)
    return int(bad.sum())


def batch_minima_fixed(a_batch, flags, thr, mins, args):
    rows = np.zeros(a_batch.shape[0], dtype=np.int64)
    return _minima(a_batch, flags[None], rows, thr, mins, args)


def batch_minima_varying(a_batch, parents, children, degs, need_dsep, thr, mins, args):
    n, p = a_batch.shape[0], a_batch.shape[1]
    npairs = max(p * (p - 1) // 2, 1)
    flags = np.zeros((n, 1 << p, npairs), dtype=np.uint8)
    batch_flags(parents, children, degs, need_dsep, flags)
    return _minima(a_batch, flags, np.arange(n), thr, mins, args)


def batch_minima_triples(a_batch, triples, sizes, classes, thr, mins, args):
    sigma, _ = sem_matrices(a_batch)
    mins[...] = np.inf
    args[...] = -1
    bad = 0
    for t in range(triples.shape[0]):
        q = triples[t, :sizes[t]]
        block = sigma[:, q[:, None], q[None, :]]
        try:
            theta = np.linalg.inv(block)
        except np.linalg.LinAlgError:
            bad += a_batch.shape[0]
            continue
        r = np.abs(theta[:, 0, 1]) / np.sqrt(theta[:, 0, 0] * theta[:, 1, 1])
        ok = r >= thr
        for c in range(3):
            if (classes[t] >> c) & 1:
                better = ok & (r < mins[:, c])
                mins[better, c] = r[better]
                args[better, c] = t
    return bad
