"""Hot inner loops: batched ratio-rule search and Kendall pair counting.

Every kernel exists twice, a loop version compiled with numba and a
vectorised numpy version. ``_accel.USE_NUMBA`` picks one at import time.
Both versions compare ratios by cross-multiplication and accumulate search
costs left to right in search order, so they agree bit for bit.

Inputs are expected to be validated and clamped by the public callers.
Row broadcasting: ``probs``, ``labels`` and ``costs`` may each have one row,
in which case that row is shared by every output row.
"""

import numpy as np

from . import _accel
from ._accel import njit

# rows per block in the numpy fallback, bounds the (rows, K, K) temporaries
_BLOCK = 1 << 14


@njit
def _precedes(p, c, a, b):
    lhs = p[a] * c[b]
    rhs = p[b] * c[a]
    return lhs > rhs or (lhs == rhs and a < b)


@njit
def _sort_row(p, c, order):
    K = p.shape[0]
    for k in range(K):
        pos = k
        while pos > 0 and _precedes(p, c, k, order[pos - 1]):
            order[pos] = order[pos - 1]
            pos -= 1
        order[pos] = k


@njit
def _search_orders_loop(probs, costs):
    m = probs.shape[0]
    n = costs.shape[0]
    K = probs.shape[1]
    rows = max(m, n)
    out = np.empty((rows, K), dtype=np.int64)
    for r in range(rows):
        _sort_row(probs[r if m > 1 else 0], costs[r if n > 1 else 0], out[r])
    return out


@njit
def _search_costs_loop(probs, labels, costs):
    m = probs.shape[0]
    n = costs.shape[0]
    nl = labels.shape[0]
    K = probs.shape[1]
    rows = max(m, n, nl)
    totals = np.empty(rows, dtype=np.float64)
    stops = np.empty(rows, dtype=np.int64)
    order = np.empty(K, dtype=np.int64)
    for r in range(rows):
        p = probs[r if m > 1 else 0]
        c = costs[r if n > 1 else 0]
        i = labels[r if nl > 1 else 0]
        _sort_row(p, c, order)
        total = 0.0
        for t in range(K):
            j = order[t]
            total += c[j]
            if j == i:
                stops[r] = t
                break
        totals[r] = total
    return totals, stops


@njit
def _kendall_counts_loop(x, y):
    n = x.shape[0]
    concordant = 0
    discordant = 0
    untied_x = 0
    untied_y = 0
    for a in range(n):
        for b in range(a + 1, n):
            sx = np.sign(x[a] - x[b])
            sy = np.sign(y[a] - y[b])
            if sx != 0:
                untied_x += 1
            if sy != 0:
                untied_y += 1
            prod = sx * sy
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    return concordant, discordant, untied_x, untied_y


def _ranks_vectorized(p, c):
    """Position of each class in the search order, shape (rows, K)."""
    K = p.shape[-1]
    lhs = p[:, :, None] * c[:, None, :]
    rhs = p[:, None, :] * c[:, :, None]
    idx = np.arange(K)
    precedes = (lhs > rhs) | ((lhs == rhs) & (idx[:, None] < idx[None, :]))
    return precedes.sum(axis=1)


def _broadcast_rows(*arrays):
    rows = max(a.shape[0] for a in arrays)
    return rows, [np.broadcast_to(a, (rows,) + a.shape[1:]) for a in arrays]


def _search_orders_vectorized(probs, costs):
    rows, (p, c) = _broadcast_rows(probs, costs)
    out = np.empty((rows, probs.shape[1]), dtype=np.int64)
    for start in range(0, rows, _BLOCK):
        sl = slice(start, start + _BLOCK)
        out[sl] = np.argsort(_ranks_vectorized(p[sl], c[sl]), axis=1)
    return out


def _search_costs_vectorized(probs, labels, costs):
    rows, (p, lab, c) = _broadcast_rows(probs, labels, costs)
    totals = np.empty(rows, dtype=np.float64)
    stops = np.empty(rows, dtype=np.int64)
    for start in range(0, rows, _BLOCK):
        sl = slice(start, start + _BLOCK)
        ranks = _ranks_vectorized(p[sl], c[sl])
        order = np.argsort(ranks, axis=1)
        running = np.cumsum(np.take_along_axis(c[sl], order, axis=1), axis=1)
        stop = np.take_along_axis(ranks, lab[sl][:, None], axis=1)
        stops[sl] = stop[:, 0]
        totals[sl] = np.take_along_axis(running, stop, axis=1)[:, 0]
    return totals, stops


def _kendall_counts_vectorized(x, y):
    sx = np.sign(x[:, None] - x[None, :]).astype(np.int64)
    sy = np.sign(y[:, None] - y[None, :]).astype(np.int64)
    upper = np.triu(np.ones((x.shape[0],) * 2, dtype=bool), k=1)
    prod = (sx * sy)[upper]
    return (
        int((prod > 0).sum()),
        int((prod < 0).sum()),
        int((sx[upper] != 0).sum()),
        int((sy[upper] != 0).sum()),
    )


if _accel.USE_NUMBA:
    search_orders = _search_orders_loop
    search_costs = _search_costs_loop
    kendall_counts = _kendall_counts_loop
else:
    search_orders = _search_orders_vectorized
    search_costs = _search_costs_vectorized
    kendall_counts = _kendall_counts_vectorized

__all__ = ["search_orders", "search_costs", "kendall_counts"]
