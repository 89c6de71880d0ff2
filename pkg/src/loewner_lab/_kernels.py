"""Compiled inner loops.

The elementary chordal map with frozen driver value ``lam`` over capacity
``dt`` is ``G(z) = lam + sqrt_H((z - lam)^2 + 4 dt)`` and its inverse is
``lam + sqrt_H((w - lam)^2 - 4 dt)``.  ``sqrt_H`` takes the root with
nonnegative imaginary part; on the real axis the sign follows
``Re(z - lam)`` so both real half-lines stay fixed setwise.  All arithmetic
is done on real and imaginary parts separately, with the batch index
innermost so the loops vectorize.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _sqrt_h(a, y, c):
    # sqrt_H((a + iy)^2 + c) with y >= 0
    ur = a * a - y * y + c
    ui = 2.0 * a * y
    r = math.sqrt(ur * ur + ui * ui)
    sr = math.sqrt(max(0.5 * (r + ur), 0.0))
    si = math.sqrt(max(0.5 * (r - ur), 0.0))
    return math.copysign(sr, a), si


@njit(cache=True)
def inverse_tips(lam, dt, start_re, start_im, want_deriv):
    """For every step k apply ``G_k^{-1}`` then ``G_{k-1}^{-1}`` ... ``G_0^{-1}``.

    ``lam`` and the starts have shape (n_steps, batch); returns the images
    and (optionally) the derivative of the composition.
    """
    n, m = lam.shape
    out_re = np.empty((n, m))
    out_im = np.empty((n, m))
    d_re = np.ones((n, m))
    d_im = np.zeros((n, m))
    x = np.empty(m)
    y = np.empty(m)
    pr = np.empty(m)
    pi = np.empty(m)
    for k in range(n):
        for b in range(m):
            x[b] = start_re[k, b]
            y[b] = start_im[k, b]
            pr[b] = 1.0
            pi[b] = 0.0
        for j in range(k, -1, -1):
            c = -4.0 * dt[j]
            for b in range(m):
                a = x[b] - lam[j, b]
                yy = y[b]
                sr, si = _sqrt_h(a, yy, c)
                if want_deriv:
                    # multiply by zeta / s
                    den = sr * sr + si * si
                    qr = (a * sr + yy * si) / den
                    qi = (yy * sr - a * si) / den
                    t = pr[b] * qr - pi[b] * qi
                    pi[b] = pr[b] * qi + pi[b] * qr
                    pr[b] = t
                x[b] = lam[j, b] + sr
                y[b] = si
        for b in range(m):
            out_re[k, b] = x[b]
            out_im[k, b] = y[b]
            d_re[k, b] = pr[b]
            d_im[k, b] = pi[b]
    return out_re, out_im, d_re, d_im


@njit(cache=True)
def inverse_apply(lam, dt, re, im):
    """Apply ``G_0^{-1} o ... o G_{n-1}^{-1}`` to points; returns image and derivative."""
    n = lam.shape[0]
    p = re.shape[0]
    x = re.copy()
    y = im.copy()
    pr = np.ones(p)
    pi = np.zeros(p)
    for j in range(n - 1, -1, -1):
        c = -4.0 * dt[j]
        for b in range(p):
            a = x[b] - lam[j]
            yy = y[b]
            sr, si = _sqrt_h(a, yy, c)
            den = sr * sr + si * si
            if den > 0.0:
                qr = (a * sr + yy * si) / den
                qi = (yy * sr - a * si) / den
            else:
                qr = math.inf
                qi = 0.0
            t = pr[b] * qr - pi[b] * qi
            pi[b] = pr[b] * qi + pi[b] * qr
            pr[b] = t
            x[b] = lam[j] + sr
            y[b] = si
    return x, y, pr, pi


@njit(cache=True)
def forward_apply(lam, dt, re, im, tol):
    """Apply ``G_{n-1} o ... o G_0`` to points, detecting swallowing.

    Returns the images and, per point, the index of the step at which it
    was swallowed (-1 if never).  A point starting off the real axis is
    swallowed when its image collapses onto the axis or onto the driver.
    """
    n = lam.shape[0]
    p = re.shape[0]
    x = re.copy()
    y = im.copy()
    hit = np.full(p, -1, dtype=np.int64)
    for b in range(p):
        interior = y[b] > 0.0
        for j in range(n):
            a = x[b] - lam[j]
            sr, si = _sqrt_h(a, y[b], 4.0 * dt[j])
            x[b] = lam[j] + sr
            y[b] = si
            if interior:
                scale = max(1.0, math.sqrt(x[b] * x[b] + si * si))
                if si <= tol * scale or math.fabs(sr) + si < tol:
                    hit[b] = j
                    break
            elif a == 0.0:
                hit[b] = j
                break
    return x, y, hit


@njit(cache=True)
def forward_tips(lam, dt, re, im):
    """Trace the image of every point under the growing composition.

    ``out[k]`` is ``G_k o ... o G_0`` applied to the inputs; used to follow
    boundary points through the flow.
    """
    n = lam.shape[0]
    p = re.shape[0]
    out_re = np.empty((n, p))
    out_im = np.empty((n, p))
    x = re.copy()
    y = im.copy()
    for j in range(n):
        c = 4.0 * dt[j]
        for b in range(p):
            sr, si = _sqrt_h(x[b] - lam[j], y[b], c)
            x[b] = lam[j] + sr
            y[b] = si
            out_re[j, b] = x[b]
            out_im[j, b] = y[b]
    return out_re, out_im


@njit(cache=True)
def unzip(re, im, tiny):
    """Vertical-slit unzipping of a polyline starting at 0.

    Returns per-step driver knots ``x_k`` and ``y_k^2`` (so the capacity
    increment is ``y_k^2 / 4``) plus the index of the first degenerate
    vertex (-1 if none).
    """
    p = re.shape[0]
    x = re.copy()
    y = im.copy()
    knots = np.empty(p - 1)
    heights = np.empty(p - 1)
    for k in range(1, p):
        xk = x[k]
        yk = y[k]
        if not yk > tiny:
            return knots, heights, k
        knots[k - 1] = xk
        c = yk * yk
        heights[k - 1] = c
        for j in range(k + 1, p):
            sr, si = _sqrt_h(x[j] - xk, y[j], c)
            x[j] = xk + sr
            y[j] = si
    return knots, heights, -1


@njit(cache=True)
def frechet(dist):
    """Discrete Frechet distance from a pairwise distance matrix (Eiter-Mannila)."""
    p, q = dist.shape
    ret = np.empty((p, q))
    ret[0, 0] = dist[0, 0]
    for i in range(1, p):
        ret[i, 0] = max(ret[i - 1, 0], dist[i, 0])
    for j in range(1, q):
        ret[0, j] = max(ret[0, j - 1], dist[0, j])
    for i in range(1, p):
        for j in range(1, q):
            ret[i, j] = max(min(ret[i - 1, j], ret[i, j - 1], ret[i - 1, j - 1]), dist[i, j])
    return ret[p - 1, q - 1]


# ---------------------------------------------------------------- radial

@njit(cache=True, inline="always")
def _omega_at(times, values, i, t):
    # linear interpolation of the driver inside step i
    h = times[i + 1] - times[i]
    s = (t - times[i]) / h
    return values[i] + s * (values[i + 1] - values[i])


@njit(cache=True, inline="always")
def _radial_field(z, w):
    return z * (w + z) / (w - z)


@njit(cache=True)
def radial_tip(times, values, k, eps, frac, guard):
    """Reverse-flow tip ``gamma(t_k)``; returns (tip, status) with status 0 ok, 1 singular."""
    w0 = complex(math.cos(values[k]), math.sin(values[k]))
    z = w0 * (1.0 - eps)
    for i in range(k - 1, -1, -1):
        t = times[i + 1]
        t_end = times[i]
        while t > t_end:
            w = complex(math.cos(_omega_at(times, values, i, t)), math.sin(_omega_at(times, values, i, t)))
            dist = abs(w - z)
            if dist < guard:
                return z, 1
            h = min(t - t_end, frac * dist * dist)
            tm = t - 0.5 * h
            wm = complex(math.cos(_omega_at(times, values, i, tm)), math.sin(_omega_at(times, values, i, tm)))
            tn = t - h
            if tn < t_end:
                tn = t_end
            wn = complex(math.cos(_omega_at(times, values, i, tn)), math.sin(_omega_at(times, values, i, tn)))
            k1 = -_radial_field(z, w)
            k2 = -_radial_field(z + 0.5 * h * k1, wm)
            k3 = -_radial_field(z + 0.5 * h * k2, wm)
            k4 = -_radial_field(z + h * k3, wn)
            z = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            m = abs(z)
            if m > 1.0:
                if m - 1.0 > 1e-9:
                    return z, 1
                z = z / m
            t = tn
    return z, 0


@njit(cache=True)
def radial_tips(times, values, eps, frac, guard):
    """All tips of one radial driver; ``status`` holds the first failing index or -1."""
    n = times.shape[0] - 1
    out = np.zeros(n + 1, dtype=np.complex128)
    out[0] = 1.0
    for k in range(1, n + 1):
        z, st = radial_tip(times, values, k, eps, frac, guard)
        if st != 0:
            return out, k
        out[k] = z
    return out, -1


@njit(cache=True)
def radial_tips_batch(times, values, eps, frac, guard):
    m = values.shape[0]
    n = times.shape[0] - 1
    out = np.zeros((m, n + 1), dtype=np.complex128)
    status = np.full(m, -1, dtype=np.int64)
    for b in range(m):
        pts, st = radial_tips(times, values[b], eps, frac, guard)
        out[b] = pts
        status[b] = st
    return out, status


@njit(cache=True)
def radial_flow(times, values, t_stop, z0, frac, tol, on_circle, max_steps):
    """Forward flow ``g_t(z0)`` sampled at every knot up to ``t_stop``.

    Returns (path, n_knots_filled, status, hit_time); status 0 ok,
    1 swallowed at ``hit_time``, 2 left the disk, 3 step budget exhausted.
    """
    n = times.shape[0] - 1
    path = np.zeros(n + 1, dtype=np.complex128)
    z = z0
    path[0] = z
    steps = 0
    for i in range(n):
        if times[i] >= t_stop:
            return path, i + 1, 0, 0.0
        t = times[i]
        t_end = min(times[i + 1], t_stop)
        while t < t_end:
            w = complex(math.cos(_omega_at(times, values, i, t)), math.sin(_omega_at(times, values, i, t)))
            dist = abs(w - z)
            if dist < tol:
                return path, i + 1, 1, t
            h = min(t_end - t, frac * dist * dist)
            tm = t + 0.5 * h
            tn = t + h
            if tn > t_end:
                tn = t_end
            wm = complex(math.cos(_omega_at(times, values, i, tm)), math.sin(_omega_at(times, values, i, tm)))
            wn = complex(math.cos(_omega_at(times, values, i, tn)), math.sin(_omega_at(times, values, i, tn)))
            k1 = _radial_field(z, w)
            k2 = _radial_field(z + 0.5 * h * k1, wm)
            k3 = _radial_field(z + 0.5 * h * k2, wm)
            k4 = _radial_field(z + h * k3, wn)
            z = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            m = abs(z)
            if on_circle:
                z = z / m
            elif m > 1.0:
                if m - 1.0 > 1e-9:
                    return path, i + 1, 2, t
                z = z / m
            t = tn
            steps += 1
            if steps > max_steps:
                return path, i + 1, 3, t
        path[i + 1] = z
    return path, n + 1, 0, 0.0


# ---------------------------------------------------------------- SDEs

@njit(cache=True)
def theta_path(theta0, mu, sigma, dt, z, pool, stop_sin):
    """Euler scheme for ``d theta = mu cot(theta) dt + sigma dB`` on a uniform grid.

    A move that would leave (0, pi) is split by a Brownian bridge (using
    normals from ``pool``) up to 20 times.  Returns (values, stop index,
    flag) where flag is 0 ran to the end, 1 stopped at ``sin <= stop_sin``,
    2 could not stay inside.
    """
    n = z.shape[0]
    vals = np.empty(n + 1)
    vals[0] = theta0
    th = theta0
    p = 0
    st_db = np.empty(64)
    st_h = np.empty(64)
    st_d = np.empty(64, dtype=np.int64)
    for k in range(n):
        sp = 0
        st_db[0] = math.sqrt(dt) * z[k]
        st_h[0] = dt
        st_d[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            db = st_db[sp]
            h = st_h[sp]
            d = st_d[sp]
            prop = th + mu * math.cos(th) / math.sin(th) * h + sigma * db
            if prop <= 0.0 or prop >= math.pi:
                if d >= 20 or p >= pool.shape[0] or sp + 2 > 64:
                    vals[k + 1] = th
                    return vals[: k + 1], k, 2
                db1 = 0.5 * db + 0.5 * math.sqrt(h) * pool[p]
                p += 1
                st_db[sp] = db - db1
                st_h[sp] = 0.5 * h
                st_d[sp] = d + 1
                st_db[sp + 1] = db1
                st_h[sp + 1] = 0.5 * h
                st_d[sp + 1] = d + 1
                sp += 2
            else:
                th = prop
        vals[k + 1] = th
        if math.sin(th) <= stop_sin:
            return vals[: k + 2], k + 1, 1
    return vals, n, 0


@njit(cache=True, inline="always")
def q_drift(x):
    c = 2.0 * math.cos(x) / math.sin(x)
    r = 1.0 / x
    return c if c < r else r


@njit(cache=True)
def z_theta_path(kappa, dt, z, pool):
    """Shared-noise Euler run of Z (drift q) and Theta (drift 2 cot), both from pi/2.

    Steps are split by Brownian bridges while Theta would leave (0, pi), Z
    would cross 0, or the step is too large for the drifts near 0 and pi.  Returns (Z, Theta, flag) with flag 2 if a split
    budget ran out (paths are cut there).
    """
    n = z.shape[0]
    zs = np.empty(n + 1)
    ts = np.empty(n + 1)
    x = 0.5 * math.pi
    th = 0.5 * math.pi
    zs[0] = x
    ts[0] = th
    sig = math.sqrt(kappa)
    p = 0
    st_db = np.empty(64)
    st_h = np.empty(64)
    st_d = np.empty(64, dtype=np.int64)
    for k in range(n):
        st_db[0] = math.sqrt(dt) * z[k]
        st_h[0] = dt
        st_d[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            db = st_db[sp]
            h = st_h[sp]
            d = st_d[sp]
            px = x + q_drift(x) * h + sig * db
            pt = th + 2.0 * math.cos(th) / math.sin(th) * h + sig * db
            # the Euler maps stay increasing only while h is small against
            # x^2 and sin^2, which is what keeps Z <= Theta step by step
            sz = math.sin(x)
            st = math.sin(th)
            stiff = h > 0.25 * min(x * x, 0.5 * sz * sz, 0.5 * st * st)
            if pt <= 0.0 or pt >= math.pi or px * x <= 0.0 or stiff:
                if d >= 40 or p >= pool.shape[0] or sp + 2 > 64:
                    return zs[: k + 1], ts[: k + 1], 2
                db1 = 0.5 * db + 0.5 * math.sqrt(h) * pool[p]
                p += 1
                st_db[sp] = db - db1
                st_h[sp] = 0.5 * h
                st_d[sp] = d + 1
                st_db[sp + 1] = db1
                st_h[sp + 1] = 0.5 * h
                st_d[sp + 1] = d + 1
                sp += 2
            else:
                x = px
                th = pt
        zs[k + 1] = x
        ts[k + 1] = th
    return zs, ts, 0


@njit(cache=True)
def bessel_path(a, kappa, x0, dt, z, pool, levels):
    """Euler path of ``dX = a/X dt + sqrt(kappa) dB`` with zero-crossing splits.

    Returns (values, zero-hit time or -1, first passage times of
    ``|X| <= level`` or -1).  The path is cut at a zero hit.
    """
    n = z.shape[0]
    vals = np.empty(n + 1)
    vals[0] = x0
    lv = np.full(levels.shape[0], -1.0)
    for j in range(levels.shape[0]):
        if abs(x0) <= levels[j]:
            lv[j] = 0.0
    x = x0
    t = 0.0
    sig = math.sqrt(kappa)
    p = 0
    st_db = np.empty(64)
    st_h = np.empty(64)
    st_d = np.empty(64, dtype=np.int64)
    for k in range(n):
        st_db[0] = math.sqrt(dt) * z[k]
        st_h[0] = dt
        st_d[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            db = st_db[sp]
            h = st_h[sp]
            d = st_d[sp]
            prop = x + a / x * h + sig * db
            if prop * x <= 0.0:
                if d >= 20 or p >= pool.shape[0] or sp + 2 > 64:
                    # declared zero hit, crossing time interpolated
                    th = t + h * abs(x) / (abs(x) + abs(prop))
                    for j in range(levels.shape[0]):
                        if lv[j] < 0.0:
                            lv[j] = t + h * (abs(x) - levels[j]) / (abs(x) + abs(prop))
                    vals[k + 1] = 0.0
                    return vals[: k + 2], th, lv
                db1 = 0.5 * db + 0.5 * math.sqrt(h) * pool[p]
                p += 1
                st_db[sp] = db - db1
                st_h[sp] = 0.5 * h
                st_d[sp] = d + 1
                st_db[sp + 1] = db1
                st_h[sp + 1] = 0.5 * h
                st_d[sp + 1] = d + 1
                sp += 2
            else:
                for j in range(levels.shape[0]):
                    if lv[j] < 0.0 and abs(prop) <= levels[j]:
                        lv[j] = t + h * (abs(x) - levels[j]) / (abs(x) - abs(prop))
                x = prop
                t += h
        vals[k + 1] = x
    return vals, -1.0, lv


@njit(cache=True)
def bessel_run(a, kappa, x0, dt, t_max, lo, hi, r_max, seed):
    """Adaptive Euler run until ``|X| <= lo`` (1), ``|X| >= hi`` (2), a zero hit (3) or ``t_max`` (0).

    The step is ``dt`` near the barriers and grows as the squared distance
    to the nearer barrier, so the noise per step stays below ``r_max`` of
    that distance.  Between grid points a Brownian-bridge test catches
    excursions below ``lo``, which removes the O(sqrt(dt)) miss bias of
    grid-only detection.  Uses numba's generator, seeded per path.
    Returns (status, exit time, final value).
    """
    np.random.seed(seed)
    x = x0
    t = 0.0
    sig = math.sqrt(kappa)
    while t < t_max:
        ax = abs(x)
        gap = ax - lo
        if hi - ax < gap:
            gap = hi - ax
        h = dt
        if kappa > 0.0:
            cand = (r_max * gap) ** 2 / kappa
            if cand > h:
                h = cand
        if t + h > t_max:
            h = t_max - t
        db = math.sqrt(h) * np.random.standard_normal()
        prop = x + a / x * h + sig * db
        halvings = 0
        while prop * x <= 0.0 and halvings < 20:
            h *= 0.5
            db = math.sqrt(h) * np.random.standard_normal()
            prop = x + a / x * h + sig * db
            halvings += 1
        if prop * x <= 0.0:
            return 3, t + h * ax / (ax + abs(prop)), 0.0
        ap = abs(prop)
        if ap <= lo:
            return 1, t + h * (ax - lo) / (ax - ap), prop
        if ap >= hi:
            return 2, t + h * (hi - ax) / (ap - ax), prop
        if kappa > 0.0 and lo > 0.0:
            # Brownian-bridge chance of dipping below lo inside the step
            u = np.random.random()
            if u < math.exp(-2.0 * (ax - lo) * (ap - lo) / (kappa * h)):
                return 1, t + 0.5 * h, prop
        x = prop
        t += h
    return 0, t_max, x


@njit(cache=True)
def bessel_run_batch(a, kappa, x0, dt, t_max, lo, hi, r_max, seeds):
    m = seeds.shape[0]
    status = np.empty(m, dtype=np.int64)
    times = np.empty(m)
    final = np.empty(m)
    for b in range(m):
        s, tt, xf = bessel_run(a, kappa, x0[b], dt, t_max, lo, hi, r_max, seeds[b])
        status[b] = s
        times[b] = tt
        final[b] = xf
    return status, times, final
