"""Conservative one-dimensional remap for semi-Lagrangian sweeps.

Every row of a 2D array of cell averages is translated by a constant
displacement.  The new average of a cell is the exact integral of a
piecewise-parabolic reconstruction over the cell's preimage, so mass is
moved, never created.  Parabolas are limited in the Colella-Woodward way,
which keeps every new average inside the range of the old ones.

Boundary handling is per side:

* ``REFLECT`` (lower side only): specular wall whose mirror image is a
  partner row moving the other way, as in an r sweep where the rows w and
  -w exchange mass at the wall;
* ``FOLD``: wall that folds the row back onto itself, used in w where the
  whole row shares one displacement;
* ``ABSORB``: nothing enters, whatever crosses is reported as outflow.

Results are clipped to [0, ceiling].  Pure translation never reaches the
ceiling; a fold stacks two sheets and can, and the clip then removes mass.
Callers place folding walls where the density vanishes.
"""
from __future__ import annotations

import numpy as np
from numba import njit

REFLECT = 0
ABSORB = 1
FOLD = 2


@njit(cache=True, nogil=True)
def _edge_weights(width):
    """Weights turning the cumulative mass at edges c-2..c+2 into the
    derivative at edge c of the quartic through them (padded geometry)."""
    npad = width.size
    x = np.empty(npad + 1)
    x[0] = 0.0
    for m in range(npad):
        x[m + 1] = x[m] + width[m]
    W = np.zeros((npad + 1, 5))
    for c in range(2, npad - 1):
        for m in range(c - 2, c + 3):
            if m == c:
                L = 0.0
                for n in range(c - 2, c + 3):
                    if n != c:
                        L += 1.0 / (x[c] - x[n])
            else:
                num = 1.0
                den = 1.0
                for n in range(c - 2, c + 3):
                    if n != m:
                        den *= x[m] - x[n]
                        if n != c:
                            num *= x[c] - x[n]
                L = num / den
            W[c, m - c + 2] = L
    return W


@njit(cache=True, nogil=True)
def _reconstruct(avg, width, W, aL, aR):
    """Limited edge values for the interior cells of a row padded with two
    ghost cells on each side."""
    npad = avg.size
    G = np.empty(npad + 1)
    G[0] = 0.0
    for m in range(npad):
        G[m + 1] = G[m] + avg[m] * width[m]
    edge = np.empty(npad + 1)
    for c in range(2, npad - 1):
        v = (W[c, 0] * G[c - 2] + W[c, 1] * G[c - 1] + W[c, 2] * G[c]
             + W[c, 3] * G[c + 1] + W[c, 4] * G[c + 2])
        lo = min(avg[c - 1], avg[c])
        hi = max(avg[c - 1], avg[c])
        edge[c] = min(max(v, lo), hi)
    for cell in range(2, npad - 2):
        a = avg[cell]
        l = edge[cell]
        r = edge[cell + 1]
        if (r - a) * (a - l) <= 0.0:
            l = a
            r = a
        else:
            dl = r - l
            mid = a - 0.5 * (l + r)
            if dl * mid > dl * dl / 6.0:
                l = 3.0 * a - 2.0 * r
            elif -dl * dl / 6.0 > dl * mid:
                r = 3.0 * a - 2.0 * l
        aL[cell - 2] = l
        aR[cell - 2] = r


@njit(cache=True, nogil=True)
def _partial(aL, aR, a, xi):
    # integral over [0, xi] of the unit-width parabola
    da = aR - aL
    a6 = 6.0 * (a - 0.5 * (aL + aR))
    x2 = xi * xi
    return aL * xi + 0.5 * da * x2 + a6 * (0.5 * x2 - x2 * xi / 3.0)


@njit(cache=True, nogil=True)
def _locate(edges, x, k):
    """Cell index containing x, searched from the guess k."""
    n = edges.size - 1
    if k < 0:
        k = 0
    if k > n - 1:
        k = n - 1
    while k > 0 and x < edges[k]:
        k -= 1
    while k < n - 1 and x >= edges[k + 1]:
        k += 1
    return k


@njit(cache=True, nogil=True)
def _value(edges, G, aL, aR, A, row, k, x):
    """Mass of ``row`` between edges[0] and x, with x inside cell k."""
    w = edges[k + 1] - edges[k]
    xi = (x - edges[k]) / w
    if xi <= 0.0:
        return G[row, k]
    if xi >= 1.0:
        return G[row, k + 1]
    return G[row, k] + w * _partial(aL[row, k], aR[row, k], A[row, k], xi)


@njit(cache=True, nogil=True)
def _primitive(edges, G, aL, aR, A, row, x):
    """Mass of ``row`` between edges[0] and x (edges[0] <= x <= edges[-1])."""
    k = int(np.searchsorted(edges, x, side="right")) - 1
    return _value(edges, G, aL, aR, A, row, _locate(edges, x, k), x)


@njit(cache=True, nogil=True)
def remap_rows(A, edges, shifts, partner, lower, upper, ceiling):
    """Translate every row of ``A`` by ``shifts[row]``.

    Returns the new averages and, per row, the mass (average times width)
    that left through an absorbing upper boundary.
    """
    rows, n = A.shape
    width = np.empty(n)
    for i in range(n):
        width[i] = edges[i + 1] - edges[i]
    aL = np.empty((rows, n))
    aR = np.empty((rows, n))
    G = np.empty((rows, n + 1))
    pad = np.empty(n + 4)
    pw = np.empty(n + 4)
    for i in range(n):
        pw[i + 2] = width[i]
    pw[1] = width[0]
    pw[0] = width[1]
    pw[n + 2] = width[n - 1]
    pw[n + 3] = width[n - 2]
    W = _edge_weights(pw)
    for row in range(rows):
        for i in range(n):
            pad[i + 2] = A[row, i]
        src = partner[row] if lower == REFLECT else row
        if lower != ABSORB:
            pad[1] = A[src, 0]
            pad[0] = A[src, 1]
        else:
            pad[1] = 0.0
            pad[0] = 0.0
        if upper == FOLD:
            pad[n + 2] = A[row, n - 1]
            pad[n + 3] = A[row, n - 2]
        else:
            pad[n + 2] = A[row, n - 1]
            pad[n + 3] = A[row, n - 1]
        _reconstruct(pad, pw, W, aL[row], aR[row])
        G[row, 0] = 0.0
        for i in range(n):
            G[row, i + 1] = G[row, i] + A[row, i] * width[i]

    out = np.empty((rows, n))
    lost = np.zeros(rows)
    fold = np.empty(n)
    e0 = edges[0]
    eM = edges[n]
    for row in range(rows):
        s = shifts[row]
        for i in range(n):
            fold[i] = 0.0
        # mass pushed through a folding wall lands mirrored next to it
        if upper == FOLD and s > 0.0:
            i = n - 1
            while i >= 0 and edges[i + 1] > eM - s:
                hi = _primitive(edges, G, aL, aR, A, row, min(eM, 2.0 * eM - s - edges[i]))
                lo = _primitive(edges, G, aL, aR, A, row, min(eM, 2.0 * eM - s - edges[i + 1]))
                fold[i] += hi - lo
                i -= 1
        if lower == FOLD and s < 0.0:
            i = 0
            while i < n and edges[i] < e0 - s:
                hi = _primitive(edges, G, aL, aR, A, row, max(e0, 2.0 * e0 - s - edges[i]))
                lo = _primitive(edges, G, aL, aR, A, row, max(e0, 2.0 * e0 - s - edges[i + 1]))
                fold[i] += hi - lo
                i += 1
        k = 0
        left = 0.0
        for i in range(n + 1):
            x = edges[i] - s
            if x < e0:
                if lower == REFLECT:
                    v = -_primitive(edges, G, aL, aR, A, partner[row], min(2.0 * e0 - x, eM))
                else:
                    v = 0.0
            elif x > eM:
                v = G[row, n]
            else:
                k = _locate(edges, x, k)
                v = _value(edges, G, aL, aR, A, row, k, x)
            if i > 0:
                c = (v - left + fold[i - 1]) / width[i - 1]
                if c < 0.0:
                    c = 0.0
                elif c > ceiling:
                    c = ceiling
                out[row, i - 1] = c
            left = v
        if upper == ABSORB and s > 0.0:
            x = max(eM - s, e0)
            lost[row] = G[row, n] - _primitive(edges, G, aL, aR, A, row, x)
    return out, lost
