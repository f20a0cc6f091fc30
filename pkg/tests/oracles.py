"""Brute-force reference implementations used only by the tests.

Everything here is written from the definitions, without calling the
library code it is compared against.
"""

import itertools

import numpy as np


def availability(polarity, x):
    return np.array([xi if p else 1 - xi for xi, p in zip(x, polarity)], dtype=bool)


def in_span(A, cols, target):
    if not len(cols):
        return not np.any(target)
    sub = A[:, cols]
    coef = np.linalg.lstsq(sub, target, rcond=None)[0]
    return np.linalg.norm(sub @ coef - target) < 1e-8


def threshold_value(kind, h, x, polarity=None):
    pol = polarity or (True,) * len(x)
    count = sum(b if p else 1 - b for b, p in zip(x, pol))
    out = int(count >= h)
    return 1 - out if kind == "negated_threshold" else out


def wsize_pinv(A, polarity, x, costs=None):
    """Witness size by pseudo-inverse on the available (or blocked) columns.

    True: min sum costs_j w_j^2 with A w = e1, w zero off the available set.
    False: w = A^T alpha with alpha_0 = 1 and w zero on the available set.
    """
    A = np.asarray(A, dtype=float)
    c = A.shape[1]
    costs = np.ones(c) if costs is None else np.asarray(costs, dtype=float)
    avail = availability(polarity, x)
    target = np.zeros(A.shape[0])
    target[0] = 1.0
    cols = np.flatnonzero(avail)
    if in_span(A, cols, target):
        scaled = A[:, cols] / np.sqrt(costs[cols])
        u = np.linalg.pinv(scaled) @ target
        return float(u @ u), 1
    # w_j = r0_j + sum_i alpha_i r_i_j must vanish on available j
    r0, rest = A[0], A[1:]
    if rest.shape[0] == 0:
        alpha = np.zeros(0)
    else:
        M, rhs = rest[:, cols].T, -r0[cols]
        # minimize weighted norm of r0 + rest^T alpha subject to M alpha = rhs
        base = np.linalg.lstsq(M, rhs, rcond=None)[0] if cols.size else np.zeros(rest.shape[0])
        _, s, vt = np.linalg.svd(M) if cols.size else (None, np.zeros(0), np.eye(rest.shape[0]))
        null = vt[int((s > 1e-10).sum()):].T
        if null.shape[1]:
            D = np.sqrt(costs)
            G = (rest.T @ null) * D[:, None]
            h = (r0 + rest.T @ base) * D
            base = base + null @ np.linalg.lstsq(G, -h, rcond=None)[0]
        alpha = base
    w = r0 + rest.T @ alpha if rest.shape[0] else r0
    return float((costs * w * w).sum()), 0


# --------------------------------------------------------------------------- kappa


def nested(leaves, c):
    """Nested tuples for a complete c-ary tree given its leaves in order."""
    level = [int(v) for v in leaves]
    while len(level) > 1:
        level = [tuple(level[i:i + c]) for i in range(0, len(level), c)]
    return level[0]


def kappa_recursive(node, table, trivial, polarity):
    """(value, kappa) of a nested tree straight from the fault-counting definition."""
    if isinstance(node, int):
        return node, 0
    kids = [kappa_recursive(ch, table, trivial, polarity) for ch in node]
    bits = tuple(v for v, _ in kids)
    code = int("".join(map(str, bits)), 2)
    value = int(table[code])
    chi = availability(polarity, bits)
    strong = [kk for (v, kk), a in zip(kids, chi) if int(a) == value]
    k = max(strong)
    return value, k + (0 if trivial[code] else 1)


# --------------------------------------------------------------------------- posterior


def enumerate_block(spec):
    """Every T_1 tree with its weight, keyed by (category, root), for tiny n."""
    g = spec.gadgets
    x0 = np.asarray(spec.x0, dtype=np.int8)
    c, n, n0 = spec.arity, spec.n, spec.n0

    def expand(vals, steps):
        for _ in range(steps):
            vals = (vals[..., :, None] ^ x0).reshape(*vals.shape[:-1], -1)
        return vals

    trees = {}
    for r in (0, 1):
        for i in range(1, spec.n_tilde + 1):
            top = expand(np.array([r], dtype=np.int8), i)
            leaves_by = {v: g.leaves(v) for v in (0, 1)}
            weights_by = {v: g.weights(v) for v in (0, 1)}
            sizes = [leaves_by[int(t)].shape[0] for t in top]
            combos = np.array(list(itertools.product(*[range(s) for s in sizes])))
            blocks = np.stack([leaves_by[int(top[j])][combos[:, j]] for j in range(top.size)], axis=1)
            blocks = blocks.reshape(len(combos), -1)
            w = np.prod(np.stack([weights_by[int(top[j])][combos[:, j]] for j in range(top.size)],
                                 axis=1), axis=1)
            trees[(i, r)] = (expand(blocks, n - n0 - i), w)
            assert trees[(i, r)][0].shape[1] == c**n
    return trees


def brute_posterior(trees, indices, bits):
    """p_cat(i, r) as the surviving weight of each (category, root) family."""
    out = {}
    for key, (leaves, w) in trees.items():
        mask = np.all(leaves[:, indices] == np.asarray(bits)[None, :], axis=1)
        out[key] = float(w[mask].sum())
    return out
