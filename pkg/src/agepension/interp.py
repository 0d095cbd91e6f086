"""Shape-preserving cubic interpolation of value surfaces in log-wealth.

Node slopes follow the Fritsch-Carlson weighted harmonic mean with the
three-point edge rule, so inside the grid this agrees with
``scipy.interpolate.PchipInterpolator`` on the same abscissae. Above the top
node the curve continues linearly in log-wealth with the end slope; below
the lowest node it is held flat and the call is counted.
"""
from __future__ import annotations

import numpy as np
from numba import njit


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Node derivatives for monotone cubic Hermite interpolation along the last axis of ``y``."""
    h = np.diff(x)
    m = np.diff(y, axis=-1) / h
    d = np.zeros_like(y)
    if x.size == 2:
        d[..., 0] = d[..., 1] = m[..., 0]
        return d
    m0, m1 = m[..., :-1], m[..., 1:]
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    same = (np.sign(m0) * np.sign(m1)) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = (w1 / m0 + w2 / m1) / (w1 + w2)
        d[..., 1:-1] = np.where(same, 1.0 / inv, 0.0)
    d[..., 0] = _edge(h[0], h[1], m[..., 0], m[..., 1])
    d[..., -1] = _edge(h[-1], h[-2], m[..., -1], m[..., -2])
    return d


def _edge(h0, h1, m0, m1):
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    d = np.where(np.sign(d) != np.sign(m0), 0.0, d)
    flip = (np.sign(m0) != np.sign(m1)) & (np.abs(d) > 3.0 * np.abs(m0))
    return np.where(flip, 3.0 * m0, d)


@njit(cache=True)
def _eval_uniform(xs, y, d, xq, out):
    """Hermite evaluation on a uniform abscissa ``xs``; ``y``/``d`` are (s, n), ``xq`` flat.

    The cell is guessed from the uniform spacing, then nudged so that
    ``xs[k] <= x < xs[k + 1]`` holds exactly; nodes therefore reproduce
    their stored values bit for bit.
    """
    s = y.shape[0]
    n = xs.size
    x0 = xs[0]
    dx = (xs[n - 1] - x0) / (n - 1)
    x_end = xs[n - 1]
    for i in range(xq.size):
        x = xq[i]
        if x > x_end:
            for j in range(s):
                out[j, i] = y[j, n - 1] + d[j, n - 1] * (x - x_end)
            continue
        k = int(np.floor((x - x0) / dx))
        if k < 0:
            k = 0
        elif k > n - 2:
            k = n - 2
        if k > 0 and x < xs[k]:
            k -= 1
        elif k < n - 2 and x >= xs[k + 1]:
            k += 1
        h = xs[k + 1] - xs[k]
        t = (x - xs[k]) / h
        t2 = t * t
        t3 = t2 * t
        h10 = (t3 - 2 * t2 + t) * h
        h01 = -2 * t3 + 3 * t2
        h11 = (t3 - t2) * h
        for j in range(s):
            out[j, i] = (y[j, k] + h01 * (y[j, k + 1] - y[j, k])
                         + h10 * d[j, k] + h11 * d[j, k + 1])


class LogWealthInterpolant:
    """Monotone cubic interpolant of ``y`` against ``log(wealth)``.

    ``y`` has the wealth node axis last. A 2-D ``y`` stacks several surfaces
    on the same nodes; evaluation then returns shape ``(n_surfaces, *W.shape)``.
    """

    def __init__(self, wealth: np.ndarray, y: np.ndarray):
        wealth = np.asarray(wealth, dtype=float)
        if wealth.ndim != 1 or wealth.size < 2 or np.any(np.diff(wealth) <= 0):
            raise ValueError("wealth nodes must be strictly increasing")
        if wealth[0] <= 0:
            raise ValueError("log-wealth interpolation needs positive nodes")
        self.wealth = wealth
        self.x = np.log(wealth)
        self.y = np.asarray(y, dtype=float)
        self.d = pchip_slopes(self.x, self.y)
        self.h = np.diff(self.x)
        dx = self.h
        self._uniform = bool(np.allclose(dx, dx[0], rtol=1e-10, atol=0))
        self.below_range = 0

    def _locate(self, x):
        if self._uniform:
            k = np.floor((x - self.x[0]) / self.h[0]).astype(np.intp)
            k = np.clip(k, 0, self.x.size - 2)
            # guard against rounding at node boundaries
            k = np.where(x < self.x[k], k - 1, k)
            k = np.where((k < self.x.size - 2) & (x >= self.x[np.minimum(k + 1, self.x.size - 1)]),
                         k + 1, k)
            return np.clip(k, 0, self.x.size - 2)
        return np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.x.size - 2)

    def __call__(self, W):
        W = np.asarray(W, dtype=float)
        lo = W < self.wealth[0]
        self.below_range += int(np.count_nonzero(lo))
        x = np.log(np.maximum(W, self.wealth[0]))
        if self._uniform and x.ndim:
            y2 = self.y.reshape(-1, self.x.size)
            d2 = self.d.reshape(-1, self.x.size)
            flat = np.ascontiguousarray(x).ravel()
            out = np.empty((y2.shape[0], flat.size))
            _eval_uniform(self.x, y2, d2, flat, out)
            return out.reshape(self.y.shape[:-1] + x.shape)
        k = self._locate(x)
        hk = self.h[k]
        t = (x - self.x[k]) / hk
        y0, y1 = self.y[..., k], self.y[..., k + 1]
        d0, d1 = self.d[..., k], self.d[..., k + 1]
        t2 = t * t
        t3 = t2 * t
        # y0 + h01 (y1 - y0) keeps flat cells exactly flat
        out = (y0 + (-2 * t3 + 3 * t2) * (y1 - y0) + (t3 - 2 * t2 + t) * hk * d0
               + (t3 - t2) * hk * d1)
        above = x > self.x[-1]
        if np.any(above):
            tail = (1,) * x.ndim
            y_end = self.y[..., -1].reshape(self.y.shape[:-1] + tail)
            d_end = self.d[..., -1].reshape(self.y.shape[:-1] + tail)
            out = np.where(above, y_end + d_end * (x - self.x[-1]), out)
        return out if out.ndim else float(out)

    def derivative_log(self, W):
        """d y / d log W, used by tests of extrapolation continuity."""
        W = np.asarray(W, dtype=float)
        x = np.log(np.maximum(W, self.wealth[0]))
        k = self._locate(x)
        hk = self.h[k]
        t = (x - self.x[k]) / hk
        y0, y1 = self.y[k], self.y[k + 1]
        d0, d1 = self.d[k], self.d[k + 1]
        t2 = t * t
        out = ((6 * t2 - 6 * t) * y0 / hk + (3 * t2 - 4 * t + 1) * d0
               + (-6 * t2 + 6 * t) * y1 / hk + (3 * t2 - 2 * t) * d1)
        out = np.where(x > self.x[-1], self.d[-1], out)
        out = np.where(W < self.wealth[0], 0.0, out)
        return out if out.ndim else float(out)


def interpolate_value(wealth_nodes, values, W):
    """One-shot evaluation of the value surface ``values`` at wealth ``W``."""
    return LogWealthInterpolant(wealth_nodes, values)(W)


def interp_policy(wealth_nodes, policy, W):
    """Piecewise-linear (in log-wealth) lookup of a control surface, clamped at the ends."""
    x = np.log(np.maximum(np.asarray(W, dtype=float), wealth_nodes[0]))
    out = np.interp(x, np.log(wealth_nodes), policy)
    return out if np.ndim(out) else float(out)
