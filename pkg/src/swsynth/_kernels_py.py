"""NumPy implementations of the 1-d transport kernels.

These are the fallback used when the compiled extension is unavailable and
the reference the compiled backend is checked against. All functions operate
row-wise on batches of projections: one row = one 1-d projection.

Sorting ties are broken by original index (stable), which pins down the
gradients deterministically.
"""

import numpy as np


def w2sq_rows(y, y_target):
    """Row-wise squared 2-Wasserstein between uniform empirical measures.

    y, y_target: (n_rows, m) projected positions. Returns (n_rows,) values
    (1/m) * sum_i (y_[i] - y'_[i])^2 over sorted entries.
    """
    ys = np.sort(y, axis=1)
    ts = np.sort(y_target, axis=1)
    d = ys - ts
    return np.einsum("ij,ij->i", d, d) / y.shape[1]


def w2sq_grad_rows(y, y_target):
    """Row-wise squared W2 values and gradients with respect to ``y``.

    d/dy_j = (2/m) * (y_j - y'_[rank(j)]) with rank(j) the stable-sort
    position of y_j. Returns (values (n_rows,), grad (n_rows, m)).
    """
    m = y.shape[1]
    order = np.argsort(y, axis=1, kind="stable")
    ys = np.take_along_axis(y, order, axis=1)
    ts = np.sort(y_target, axis=1)
    d = ys - ts
    vals = np.einsum("ij,ij->i", d, d) / m
    grad = np.empty_like(y)
    np.put_along_axis(grad, order, (2.0 / m) * d, axis=1)
    return vals, grad


def w1_rows(loc_a, w_a, loc_b, w_b):
    """Row-wise 1-d W1 between signed atom sets, as the merged-breakpoint
    integral of |F_a - F_b| between the first and last atom.

    loc_a: (n_rows, ka) projected atom positions, w_a: (ka,) weights shared
    across rows (likewise loc_b, w_b; weights may be signed).
    """
    n_rows = loc_a.shape[0]
    locs = np.concatenate([loc_a, loc_b], axis=1)
    wts = np.concatenate(
        [
            np.broadcast_to(np.asarray(w_a), loc_a.shape),
            np.broadcast_to(-np.asarray(w_b), loc_b.shape),
        ],
        axis=1,
    )
    order = np.argsort(locs, axis=1, kind="stable")
    locs_s = np.take_along_axis(locs, order, axis=1)
    wts_s = np.take_along_axis(wts, order, axis=1)
    cdf = np.cumsum(wts_s, axis=1)[:, :-1]
    gaps = np.diff(locs_s, axis=1)
    out = np.einsum("ij,ij->i", np.abs(cdf), gaps)
    return out.reshape(n_rows)


def sw1_grid_value_grad(wdiff, order, gaps):
    """Sliced-W1 value and weight subgradient for two measures on one atom set.

    wdiff: (k,) iterate weights minus target weights.
    order: (n_rows, k) per-projection stable argsort of the projected atoms.
    gaps:  (n_rows, k-1) consecutive gaps of the sorted projected positions.

    Returns (value, grad) averaged over rows; grad is the exact subgradient
    of the piecewise-constant CDF integral, with sign(0) taken as 0.
    """
    n_rows, k = order.shape
    e = np.asarray(wdiff)[order]
    cdf = np.cumsum(e, axis=1)[:, :-1]
    value = np.einsum("ij,ij->", np.abs(cdf), gaps) / n_rows
    s = np.sign(cdf) * gaps
    suffix = np.zeros((n_rows, k))
    suffix[:, :-1] = np.cumsum(s[:, ::-1], axis=1)[:, ::-1]
    scattered = np.empty((n_rows, k))
    np.put_along_axis(scattered, order, suffix, axis=1)
    return value, scattered.sum(axis=0) / n_rows
