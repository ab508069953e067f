"""Pure numpy implementations of the iteration kernels.

Used when the compiled ``ratefix._kernels`` extension is unavailable, or when
``RATEFIX_PURE_PYTHON=1`` is set. Signatures match the Cython module exactly.
"""

import numpy as np

from ratefix.errors import ZeroExposure

_INITIAL_CAPACITY = 256


def adjusted_exposures(e, dims, offsets, f):
    """Adjusted exposure vectors of every factor, concatenated block by block."""
    e = np.asarray(e, dtype=np.float64).reshape(tuple(dims))
    ndim = len(dims)
    blocks = [f[offsets[u]:offsets[u] + dims[u]] for u in range(ndim)]
    out = np.empty(offsets[-1] + dims[-1])
    for t in range(ndim):
        w = e
        for u in range(ndim):
            if u != t:
                shape = [1] * ndim
                shape[u] = dims[u]
                w = w * blocks[u].reshape(shape)
        others = tuple(a for a in range(ndim) if a != t)
        out[offsets[t]:offsets[t] + dims[t]] = w.sum(axis=others)
    return out


def _phi_from_adjusted(adj, dims, offsets, losses):
    if np.any(adj == 0.0):
        raise ZeroExposure("adjusted exposure is zero for at least one slice")
    out = np.empty_like(adj)
    for t in range(len(dims)):
        a, b = offsets[t], offsets[t] + dims[t]
        l, E = losses[a:b], adj[a:b]
        out[a:b] = (l / l[0]) * (E[0] / E)
        out[a] = 1.0
    return out


def phi(e, dims, offsets, losses, f):
    f = np.asarray(f, dtype=np.float64)
    adj = adjusted_exposures(e, dims, offsets, f)
    return _phi_from_adjusted(adj, dims, offsets, losses)


def _norm(diff, norm_inf):
    a = np.abs(diff)
    return float(a.max()) if norm_inf else float(a.sum())


def _drive(step, x0, tol, max_iters, norm_inf):
    capacity = min(max_iters, _INITIAL_CAPACITY) + 1
    iterates = np.empty((capacity, x0.shape[0]))
    residuals = np.empty(capacity - 1)
    iterates[0] = x0
    x = x0.copy()
    converged = False
    t = 0
    while t < max_iters:
        nxt = step(x)
        res = _norm(nxt - x, norm_inf)
        if t + 1 >= capacity:
            capacity = min(2 * capacity, max_iters + 1)
            iterates = np.resize(iterates, (capacity, x0.shape[0]))
            residuals = np.resize(residuals, capacity - 1)
        iterates[t + 1] = nxt
        residuals[t] = res
        t += 1
        x = nxt
        if res <= tol:
            converged = True
            break
    return iterates[:t + 1].copy(), residuals[:t].copy(), converged


def rating_iterate(e, dims, offsets, losses, f0, tol, max_iters, norm_inf):
    e = np.asarray(e, dtype=np.float64)
    f0 = np.array(f0, dtype=np.float64)
    return _drive(lambda f: phi(e, dims, offsets, losses, f), f0, tol, max_iters, norm_inf)


def bh_map(b, C, x):
    x = np.asarray(x, dtype=np.float64)
    return b * x / (1.0 + C @ x)


def lg_iterate(b, C, x0, tol, max_iters, norm_inf):
    b = np.asarray(b, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    x0 = np.array(x0, dtype=np.float64)
    return _drive(lambda x: bh_map(b, C, x), x0, tol, max_iters, norm_inf)
