"""Smooth cutoff profile used to tame the Coulomb kernel near the origin.

The profile equals ``x**3`` on ``[0, 1/2]`` and ``1`` on ``[1, inf)``.  On the
bridge ``[1/2, 1]`` its derivative is blended, with C^3 polynomial smoothsteps,
from ``3x^2`` up to a plateau at the maximal slope 2 and back down to 0.  The
widths of the two blends are tied together so the bridge gains exactly 7/8.
Everything is piecewise polynomial, so tables of monomial coefficients in
the normalised local variable ``(x - left) / width`` are handed to the
compiled kernels.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError

# C^3 smoothstep on [0, 1]: 35t^4 - 84t^5 + 70t^6 - 20t^7
_SMOOTHSTEP = Polynomial([0, 0, 0, 0, 35, -84, 70, -20])
_MAX_DEGREE = 11


def _coef(poly):
    coef = np.zeros(_MAX_DEGREE + 1)
    coef[: len(poly.coef)] = poly.coef
    return coef


@dataclass(frozen=True)
class CutoffProfile:
    """Piecewise-polynomial cutoff ``eta`` with ``0 <= eta' <= 2``.

    Parameters
    ----------
    rise_width : float
        Length of the blend from ``3x^2`` to the slope-2 plateau just right of
        ``x = 1/2``.  The fall width at ``x = 1`` is derived from it.
    """

    rise_width: float = 0.06
    fall_width: float = field(init=False)
    breaks: np.ndarray = field(init=False, repr=False, compare=False)
    value_table: np.ndarray = field(init=False, repr=False, compare=False)
    slope_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w1 = float(self.rise_width)
        if not 0.0 < w1 < 0.2:
            raise DomainError(f"rise_width must lie in (0, 0.2), got {w1}")
        # every piece is written in its local variable t in [0, 1]
        tau = Polynomial([0.0, 1.0])
        S = _SMOOTHSTEP
        x_rise = 0.5 + w1 * tau
        rise_slope = (1 - S) * 3 * x_rise * x_rise + 2 * S
        rise_value = 0.125 + w1 * rise_slope.integ()
        rise_gain = rise_value(1.0) - 0.125
        # total gain on [1/2, 1] is rise_gain + 2*(xb - xa) + w2 = 7/8
        w2 = rise_gain + 0.125 - 2 * w1
        xa = 0.5 + w1
        xb = 1.0 - w2
        if not (w2 > 0 and xb >= xa):
            raise DomainError(f"rise_width {w1} leaves no room for the plateau")
        plateau_value = rise_value(1.0) + 2 * (xb - xa) * tau
        fall_slope = 2 * (1 - S)
        fall_value = plateau_value(1.0) + w2 * fall_slope.integ()

        breaks = np.array([0.5, xa, xb, 1.0])
        slopes = [rise_slope, Polynomial([2.0]), fall_slope]
        values = [rise_value, plateau_value, fall_value]
        object.__setattr__(self, "fall_width", w2)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "value_table", np.array([_coef(p) for p in values]))
        object.__setattr__(self, "slope_table", np.array([_coef(p) for p in slopes]))

    def radial_breakpoints(self):
        """Points where the profile changes its polynomial piece."""
        return np.concatenate([[0.0], self.breaks])

    def tables(self):
        return self.breaks, self.value_table, self.slope_table


DEFAULT_PROFILE = CutoffProfile()
