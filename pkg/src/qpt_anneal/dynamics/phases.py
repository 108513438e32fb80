"""Dynamical phases ``int_0^s |s'|**alpha * Delta(s') ds'`` of a cubic-spline gap table.

``alpha = (1 - kappa) / kappa`` comes from a power-law schedule; it vanishes
for linear sweeps, where the spline antiderivative is used directly.  For
``alpha != 0`` the weight is singular (kappa > 1) or kinked (kappa < 1) at
``s = 0``, which must be a knot: the two intervals touching it are
integrated analytically from the local Taylor coefficients, all others with
Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _taylor_at(coeffs, base, point):
    """Re-expand ``sum_m c_m (s - base)**(3-m)`` (scipy PPoly order) around ``point``.

    Returns coefficients ``t_j`` of ``(s - point)**j``, ``j = 0..3``.
    """
    d = point - base
    c3, c2, c1, c0 = coeffs  # highest power first
    return np.stack(
        [
            c0 + c1 * d + c2 * d**2 + c3 * d**3,
            c1 + 2 * c2 * d + 3 * c3 * d**2,
            c2 + 3 * c3 * d,
            c3,
        ]
    )


def _monomial_weight_integral(s, alpha, j):
    """``int_0^s |u|**alpha * u**j du``."""
    sgn = math.copysign(1.0, s) if s != 0 else 0.0
    return sgn * sgn**j * abs(s) ** (alpha + j + 1) / (alpha + j + 1)


class PhaseIntegral:
    """Weighted antiderivative of a spline, anchored at ``s = 0``.

    Parameters
    ----------
    knots : (P,) strictly increasing, containing 0 when ``alpha != 0``
    values : (P, ...) samples of the integrand without the weight
    alpha : weight exponent
    """

    def __init__(self, knots, values, alpha: float = 0.0):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        self.alpha = float(alpha)
        self.shape = values.shape[1:]
        self.spline = CubicSpline(knots, values.reshape(knots.size, -1), axis=0)
        self.knots = knots
        if self.alpha == 0.0:
            anti = self.spline.antiderivative()
            self._anti = anti
            self._offset = anti(0.0)
            return
        i0 = np.flatnonzero(knots == 0.0)
        if i0.size != 1 or i0[0] in (0, knots.size - 1):
            raise ValueError("a non-linear schedule needs s = 0 as an interior knot")
        self._i0 = int(i0[0])
        # Taylor coefficients around 0 of the two pieces that touch it
        c = self.spline.c
        self._left = _taylor_at(c[:, self._i0 - 1], knots[self._i0 - 1], 0.0)
        self._right = _taylor_at(c[:, self._i0], knots[self._i0], 0.0)
        cum = np.zeros((knots.size, c.shape[-1]))
        for i in range(self._i0 + 1, knots.size):
            cum[i] = cum[i - 1] + self._piece(i - 1, knots[i - 1], knots[i])
        for i in range(self._i0 - 1, -1, -1):
            cum[i] = cum[i + 1] - self._piece(i, knots[i], knots[i + 1])
        self._cum = cum

    def _piece(self, i, a, b):
        """``int_a^b`` inside spline interval ``i``."""
        if i == self._i0:
            return self._near_zero(self._right, b) - self._near_zero(self._right, a)
        if i == self._i0 - 1:
            return self._near_zero(self._left, b) - self._near_zero(self._left, a)
        half = 0.5 * (b - a)
        s = 0.5 * (a + b) + half * _GL_NODES
        f = self.spline(s) * (np.abs(s) ** self.alpha)[:, None]
        return half * (_GL_WEIGHTS @ f)

    def _near_zero(self, taylor, s):
        w = [_monomial_weight_integral(s, self.alpha, j) for j in range(4)]
        return np.tensordot(w, taylor, axes=1)

    def __call__(self, s: float) -> np.ndarray:
        if self.alpha == 0.0:
            out = self._anti(s) - self._offset
            return out.reshape(np.shape(s) + self.shape)
        knots = self.knots
        if s < knots[0] or s > knots[-1]:
            raise ValueError(f"s={s!r} outside the table [{knots[0]}, {knots[-1]}]")
        i = int(np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 2))
        out = self._cum[i] + self._piece(i, knots[i], s)
        return out.reshape(self.shape)

    def at_knots(self) -> np.ndarray:
        if self.alpha == 0.0:
            out = self._anti(self.knots) - self._offset
        else:
            out = self._cum
        return out.reshape((self.knots.size,) + self.shape)
