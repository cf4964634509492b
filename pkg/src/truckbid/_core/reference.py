"""Pure NumPy/Python reference implementations of the hot kernels.

These are the import-time fallback when the compiled extension is not
available, and the ground truth the compiled kernels are tested against.
"""

from __future__ import annotations

import numpy as np

INFEASIBLE = -1e18
_BIG = 1e18


def kg_grid_values(q: np.ndarray, fc: np.ndarray, fs: np.ndarray,
                   prices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expected revenue and knowledge-gradient value at every grid price.

    ``q`` has shape (K,), ``fc``/``fs`` shape (K, M): per-candidate carrier and
    shipper acceptance probabilities at each grid price.  Returns
    ``(rev, nu)``, each shape (M,): ``rev[j] = p_j * sum_k q_k fc[k,j] fs[k,j]``
    and ``nu[j]`` the value of information from measuring at ``p_j``,
    enumerating the four (carrier, shipper) response pairs exactly.
    """
    q = np.asarray(q, dtype=float)
    fc = np.asarray(fc, dtype=float)
    fs = np.asarray(fs, dtype=float)
    prices = np.asarray(prices, dtype=float)
    joint = fc * fs                                   # (K, M)
    rev = prices * (q @ joint)                        # (M,)
    base = float(rev.max())
    # complements via subtraction so each response pair's weights sum to 1
    sc = np.stack([fc, 1.0 - fc])                     # (2, K, M)
    ss = np.stack([fs, 1.0 - fs])
    w = q[None, None, :, None] * sc[:, None, :, :] * ss[None, :, :, :]  # (2,2,K,Mj)
    t = np.einsum("abkj,km->abjm", w, joint)          # (2, 2, Mj, Mm)
    g = (t * prices[None, None, None, :]).max(axis=3)  # (2, 2, Mj)
    nu = g.sum(axis=(0, 1)) - base
    return rev, nu


def solve_assignment(weights: np.ndarray, hold: np.ndarray):
    """Max-weight assignment of rows to columns with a per-row outside option.

    ``weights[i, j]`` is the value of assigning row ``i`` to column ``j``
    (values <= INFEASIBLE mark forbidden pairs); ``hold[i]`` is the value of
    leaving row ``i`` unassigned.  Every row takes exactly one action; every
    column takes at most one row.  Ties break toward the lowest column index.

    Returns ``(assign, col_duals, objective)`` where ``assign[i]`` is the
    chosen column or -1 for the outside option, and ``col_duals`` (length S,
    >= 0, zero on unassigned columns) price the column capacity constraints.
    """
    weights = np.asarray(weights, dtype=float)
    hold = np.asarray(hold, dtype=float)
    n, s = weights.shape
    m = s + n  # column s+i encodes row i's outside option
    cost = np.full((n, m), _BIG)
    feas = weights > INFEASIBLE
    cost[:, :s][feas] = -weights[feas]
    cost[np.arange(n), s + np.arange(n)] = -hold

    NONE = n
    u = np.zeros(n)
    v = np.zeros(m + 1)          # v[m] is the virtual start column
    p = np.full(m + 1, NONE, dtype=int)
    way = np.full(m, m, dtype=int)
    cols = np.arange(m)
    for i in range(n):
        p[m] = i
        j0 = m
        minv = np.full(m, _BIG)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0] - u[i0] - v[:m]
            upd = (~used[:m]) & (cur < minv)
            minv[upd] = cur[upd]
            way[upd] = j0
            cand = np.where(used[:m], _BIG, minv)
            j1 = int(np.argmin(cand))
            delta = float(cand[j1])
            mask = used[:m]
            u[p[:m][mask]] += delta
            v[:m][mask] -= delta
            u[i] += delta  # potential of the inserted row (virtual column)
            v[m] -= delta
            minv[~mask] -= delta
            j0 = j1
            if p[j0] == NONE:
                break
        while j0 != m:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assign = np.full(n, -1, dtype=int)
    matched = p[:s] != NONE
    assign[p[:s][matched]] = cols[:s][matched]
    col_duals = np.where(matched, -v[:s], 0.0)
    objective = float(sum(weights[i, assign[i]] if assign[i] >= 0 else hold[i]
                          for i in range(n)))
    return assign, col_duals, objective
