"""Physical parameters and pointwise constitutive relations.

The column model balances capillary diffusion against gravitational
transport, with transport switched off below a residual saturation:

    s_t = d/dz [ kappa * s_z + alpha_g * ((s - s_bar)+)^2 ]

on the vertical domain z in (-depth_h, 0), z increasing upward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Parameters:
    """Constants of the saturation equation.

    kappa
        Capillary diffusion coefficient, >= 0.
    alpha_g
        Product of the solid-liquid friction time constant and gravity.
        Only the combination 2*alpha_g enters the model, so the factors
        are stored as a single number, >= 0.
    s_bar
        Residual saturation below which gravitational transport is
        inactive, in [0, 1).
    gamma
        Slope of the linear pressure law s = gamma * p, > 0. Note that
        kappa is used as given in the flux law: with gamma != 1 it is
        the caller's job to fold any 1/gamma rescaling into kappa.
    depth_h
        Column depth, > 0; the domain is (-depth_h, 0).
    """

    kappa: float
    alpha_g: float
    s_bar: float
    gamma: float = 1.0
    depth_h: float = 5.0

    def __post_init__(self):
        if not self.kappa >= 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not self.alpha_g >= 0.0:
            raise ValueError(f"alpha_g must be >= 0, got {self.alpha_g}")
        if not 0.0 <= self.s_bar < 1.0:
            raise ValueError(f"s_bar must be in [0, 1), got {self.s_bar}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.depth_h > 0.0:
            raise ValueError(f"depth_h must be > 0, got {self.depth_h}")


def positive_part(x):
    """Nonnegative part max(x, 0), elementwise on arrays."""
    return np.maximum(x, 0.0)


def gravity_flux(s, p: Parameters):
    """Gravitational part of the flux, alpha_g * ((s - s_bar)+)^2.

    Vanishes at and below the residual saturation and is C1 in s.
    """
    r = positive_part(s - p.s_bar)
    return p.alpha_g * r * r


def gravity_flux_derivative(s, p: Parameters):
    """Derivative of gravity_flux, 2 * alpha_g * (s - s_bar)+.

    Continuous across s = s_bar, where both one-sided derivatives are zero.
    """
    return 2.0 * p.alpha_g * positive_part(s - p.s_bar)


def pressure_from_saturation(s, p: Parameters):
    """Capillary pressure from the linear law s = gamma * p."""
    return s / p.gamma
