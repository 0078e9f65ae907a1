"""Compiled inner loops.

Noise layout per simulation: a uniform block ``u`` of shape ``(T, A)`` giving
the external heading noise ``kappa * (2 u - 1)``, and a standard-normal block
``z`` of shape ``(T, A, 3)`` holding, per agent and step, the two positional
normals followed by the internal heading normal.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
# resultant length below which a circular mean is treated as undefined
RESULTANT_EPS = 1e-12


@njit(cache=True, inline="always")
def wrap(theta):
    """Wrap an angle into (-pi, pi]."""
    if abs(theta) > 8.0 * math.pi:
        theta -= TWO_PI * math.ceil((theta - math.pi) / TWO_PI)
    while theta > math.pi:
        theta -= TWO_PI
    while theta <= -math.pi:
        theta += TWO_PI
    return theta


@njit(cache=True, error_model="numpy")
def neighbor_pass(px, py, r, counts, dist_sum, csum, ssum, cth, sth):
    """Accumulate neighbour counts, distance sums and heading-vector sums.

    Neighbours are other agents at distance strictly below ``r``. ``csum``
    and ``ssum`` include the agent itself. Per-agent sums accumulate in
    increasing neighbour index.
    """
    n = px.shape[0]
    r2 = r * r
    for i in range(n):
        counts[i] = 0
        dist_sum[i] = 0.0
        csum[i] = cth[i]
        ssum[i] = sth[i]
    for i in range(n):
        xi = px[i]
        yi = py[i]
        for j in range(i + 1, n):
            dx = px[j] - xi
            dy = py[j] - yi
            d2 = dx * dx + dy * dy
            if d2 <= r2:
                d = math.sqrt(d2)
                if d < r:
                    counts[i] += 1
                    counts[j] += 1
                    dist_sum[i] += d
                    dist_sum[j] += d
                    csum[i] += cth[j]
                    ssum[i] += sth[j]
                    csum[j] += cth[i]
                    ssum[j] += sth[i]


@njit(cache=True)
def neighbor_stats_kernel(px, py, r):
    n = px.shape[0]
    counts = np.zeros(n, np.int32)
    dist_sum = np.zeros(n)
    dummy = np.zeros(n)
    neighbor_pass(px, py, r, counts, dist_sum, dummy.copy(), dummy.copy(), dummy, dummy)
    mean = np.zeros(n)
    for i in range(n):
        if counts[i] > 0:
            mean[i] = dist_sum[i] / counts[i]
    return counts, mean


@njit(cache=True)
def _nearest(x, y, bx, by):
    best = 0
    best_d = math.inf
    for k in range(bx.shape[0]):
        d = math.hypot(bx[k] - x, by[k] - y)
        if d < best_d:
            best_d = d
            best = k
    return best


@njit(cache=True, error_model="numpy")
def run_kernel(
    px, py, theta, target, bx, by, reassign,
    w, r, v, eta, kappa, sigma, dt, half_w, half_h, noise_u, noise_z,
    X, TH, N, D,
):
    """Advance the swarm ``noise_u.shape[0]`` steps, recording after each step.

    ``target[a]`` indexes into (bx, by) or is -1 for no beacon; ``bx``/``by``
    hold only the detected beacons. Arrays ``px``, ``py``, ``theta`` and
    ``target`` are updated in place.
    """
    A = px.shape[0]
    T = noise_u.shape[0]
    eps2 = RESULTANT_EPS * RESULTANT_EPS
    sqrt_eta = math.sqrt(eta)
    sqrt_dt = math.sqrt(dt)
    counts = np.zeros(A, np.int32)
    dist_sum = np.zeros(A)
    csum = np.zeros(A)
    ssum = np.zeros(A)
    cth = np.empty(A)
    sth = np.empty(A)
    nx = np.empty(A)
    ny = np.empty(A)
    nth = np.empty(A)
    for a in range(A):
        cth[a] = math.cos(theta[a])
        sth[a] = math.sin(theta[a])
    neighbor_pass(px, py, r, counts, dist_sum, csum, ssum, cth, sth)

    for t in range(T):
        for a in range(A):
            th = theta[a]
            u0 = noise_u[t, a]
            z1 = noise_z[t, a, 0]
            z2 = noise_z[t, a, 1]
            z3 = noise_z[t, a, 2]

            # internal (Vicsek) candidate
            mx = csum[a]
            my = ssum[a]
            lim = counts[a] + 1.0
            if mx * mx + my * my < eps2 * lim * lim:
                mean = th
            else:
                mean = math.atan2(my, mx)
            th_n = wrap(mean + sqrt_eta * z3)
            dxn = v * math.cos(th_n) * dt
            dyn = v * math.sin(th_n) * dt

            # external (beacon) candidate
            if reassign and bx.shape[0] > 0:
                target[a] = _nearest(px[a], py[a], bx, by)
            b = target[a]
            if b >= 0:
                bearing = math.atan2(by[b] - py[a], bx[b] - px[a])
                phi = kappa * (2.0 * u0 - 1.0)
                th_b = wrap(th + (wrap(bearing - th) + phi) * dt)
                dxb = v * math.cos(th_b) * dt + sigma * sqrt_dt * z1
                dyb = v * math.sin(th_b) * dt + sigma * sqrt_dt * z2
                wa = w
            else:
                th_b = th
                dxb = 0.0
                dyb = 0.0
                wa = 0.0

            nth[a] = wrap(th + wa * wrap(th_b - th) + (1.0 - wa) * wrap(th_n - th))
            x = px[a] + wa * dxb + (1.0 - wa) * dxn
            y = py[a] + wa * dyb + (1.0 - wa) * dyn
            nx[a] = min(max(x, -half_w), half_w)
            ny[a] = min(max(y, -half_h), half_h)

        for a in range(A):
            px[a] = nx[a]
            py[a] = ny[a]
            theta[a] = nth[a]
            cth[a] = math.cos(nth[a])
            sth[a] = math.sin(nth[a])
        neighbor_pass(px, py, r, counts, dist_sum, csum, ssum, cth, sth)
        for a in range(A):
            X[a, t, 0] = px[a]
            X[a, t, 1] = py[a]
            TH[a, t] = theta[a]
            N[a, t] = counts[a]
            D[a, t] = dist_sum[a] / counts[a] if counts[a] > 0 else 0.0
