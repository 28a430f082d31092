"""Pure numpy implementations of the hot loops.

Signatures and arithmetic order mirror ``_kernels.pyx`` so both backends
return the same numbers for the same inputs.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

RUNNING, EXIT_LOWER, EXIT_UPPER = 0, 1, 2

_CHUNK = 4096


def series_eval(poles, coefs, s):
    """Evaluate ``sum_k c_k exp(p_k s)`` and ``sum_k c_k exp(p_k s)/(-p_k)``.

    Returns ``(density, ccdf)`` arrays shaped like ``s``.
    """
    poles = np.ascontiguousarray(poles, dtype=np.float64)
    coefs = np.ascontiguousarray(coefs, dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64)
    flat = s.ravel()
    dens = np.empty_like(flat)
    ccdf = np.empty_like(flat)
    tail_coefs = coefs / (-poles)
    for lo in range(0, flat.size, _CHUNK):
        e = np.exp(np.multiply.outer(flat[lo:lo + _CHUNK], poles))
        dens[lo:lo + _CHUNK] = e @ coefs
        ccdf[lo:lo + _CHUNK] = e @ tail_coefs
    return dens.reshape(s.shape), ccdf.reshape(s.shape)


def cascade_counts(increments, counts, levels):
    """Per-sample level counts of partial sums.

    Parameters
    ----------
    increments : (M,) float array
        Concatenated positive increments of all samples.
    counts : (n,) int array
        Number of increments belonging to each sample, ``sum(counts) == M``.
    levels : (L,) float array

    Returns
    -------
    ell : (n, L) int64 array
        ``#{k <= counts[i] : S_k <= levels[j]}`` with ``S_k`` the partial sums.
    total : (n,) float array
        Final partial sum of each sample (0 for empty samples).
    """
    increments = np.ascontiguousarray(increments, dtype=np.float64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    n = counts.size
    starts = np.cumsum(counts) - counts
    total = np.zeros(n)
    ell = np.zeros((n, levels.size), dtype=np.int64)
    # step k of every sample that has more than k increments, summed left to right
    active = np.flatnonzero(counts > 0)
    k = 0
    while active.size:
        total[active] += increments[starts[active] + k]
        ell[active] += total[active, None] <= levels[None, :]
        k += 1
        active = active[counts[active] > k]
    return ell, total


def passage_block(psi, tau, status, normals, kappa, dt, length_scale, delta, max_halvings):
    """Advance angular-gap paths through one block of standard normals.

    Within ``length_scale`` of the boundary the step is taken on the log of the
    distance to the boundary in the clock ``ds = kappa dt / dist^2``, where
    the gap equation has bounded smooth coefficients; elsewhere it is plain
    Euler with overshoot halving.  Each running path consumes ``normals[i, j]``
    at its ``j``-th step of the block.  ``psi``, ``tau`` and ``status`` are
    updated in place.
    """
    n, block = normals.shape
    half_drift = 0.5 * (kappa - 4.0)
    log_coef = (kappa - 4.0) / (2.0 * kappa)
    ds = kappa * dt / (length_scale * length_scale)
    sds = np.sqrt(ds)
    upper = TWO_PI - delta
    live = np.flatnonzero(status == RUNNING)
    for j in range(block):
        if live.size == 0:
            break
        p = psi[live]
        z = normals[live, j]
        low = p < np.pi
        dist = np.where(low, p, TWO_PI - p)
        sgn = np.where(low, 1.0, -1.0)
        layer = dist < length_scale
        new = np.empty_like(p)
        h = np.empty_like(p)

        d = dist[layer]
        h[layer] = ds * d * d / kappa
        drift = log_coef * d / np.tan(0.5 * d) - 0.5
        d = np.exp(np.log(d) + drift * ds + sgn[layer] * sds * z[layer])
        new[layer] = np.where(low[layer], d, TWO_PI - d)

        bulk = ~layer
        pb, zb = p[bulk], z[bulk]
        hb = np.full(pb.size, float(dt))
        drift = half_drift / np.tan(0.5 * pb)
        nb = pb + drift * hb + np.sqrt(kappa * hb) * zb
        for _ in range(max_halvings):
            bad = (nb < -delta) | (nb > TWO_PI + delta)
            if not bad.any():
                break
            hb = np.where(bad, 0.5 * hb, hb)
            nb = np.where(bad, pb + drift * hb + np.sqrt(kappa * hb) * zb, nb)
        new[bulk], h[bulk] = nb, hb

        psi[live] = new
        tau[live] += h
        lower_hit = new <= delta
        upper_hit = new >= upper
        status[live[lower_hit]] = EXIT_LOWER
        status[live[upper_hit & ~lower_hit]] = EXIT_UPPER
        live = live[~(lower_hit | upper_hit)]
