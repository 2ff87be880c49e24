"""Quadrature on simplices (collapsed-coordinate Gauss-Jacobi products) and segments."""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import ceil

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def simplex_rule(d: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule exact for polynomials of total degree `order` on a d-simplex.

    Returns (bary, weights): barycentric nodes of shape (q, d+1) and weights
    summing to 1, so that the integral over a cell is vol * sum(w * f(node)).
    """
    if d < 1 or order < 0:
        raise ValueError(f"bad simplex rule request d={d} order={order}")
    s = max(1, ceil((order + 1) / 2))
    nodes_1d = []
    for k in range(d):
        a = d - 1 - k
        x, w = roots_jacobi(s, a, 0)
        nodes_1d.append(((1 + x) / 2, w / 2 ** (a + 1)))
    pts, wts = [], []
    for idx in product(range(s), repeat=d):
        xi = [nodes_1d[k][0][i] for k, i in enumerate(idx)]
        w = np.prod([nodes_1d[k][1][i] for k, i in enumerate(idx)])
        x = np.empty(d)
        rest = 1.0
        for k in range(d):
            x[k] = xi[k] * rest
            rest *= 1 - xi[k]
        pts.append(np.concatenate([[1 - x.sum()], x]))
        wts.append(w)
    bary = np.array(pts)
    wts = np.array(wts)
    wts /= wts.sum()
    bary.setflags(write=False)
    wts.setflags(write=False)
    return bary, wts


@lru_cache(maxsize=None)
def segment_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, 1] exact to degree `order`; weights sum to 1."""
    s = max(1, ceil((order + 1) / 2))
    x, w = roots_legendre(s)
    nodes, weights = (1 + x) / 2, w / 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights
