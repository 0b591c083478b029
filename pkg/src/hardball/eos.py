"""Hard-sphere equation of state with fluid and solid branches.

All quantities are reduced: eta is the packing fraction, g1(eta) the
pressure and g2(eta) the chemical potential on the Carnahan-Starling
fluid branch, g3 and g4 the same pair on Speedy's face-centered-cubic
solid branch.  Composing one against the inverse of the other yields
the pressure as a function of chemical potential, wp(gamma), which is
continuous and convex with a kink at the freezing point gamma_fs where
the equilibrium density jumps from 0.49 to 0.54.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "ETA_FS_LO",
    "ETA_FS_HI",
    "ETA_FCC",
    "GAMMA_FS",
    "MODE_HARD_SPHERE",
    "MODE_CS_EXTENDED",
    "MODE_IDEAL_GAS",
    "MODES",
    "EosModel",
    "g1",
    "g1_prime",
    "g2",
    "g2_derivs",
    "g2_inverse",
    "speedy_g3",
    "speedy_g4",
    "g4_inverse",
    "find_inflection",
    "ideal_gas_wp_prime",
]

ETA_FS_LO = 0.49  # freezing packing fraction, fluid side
ETA_FS_HI = 0.54  # melting packing fraction, solid side
ETA_FCC = math.pi * math.sqrt(2.0) / 6.0  # close packing of the fcc lattice

# Speedy's fit constants for the solid compressibility factor.
SPEEDY_A = 0.5921
SPEEDY_B = 0.7072
SPEEDY_C = 0.601

MODE_HARD_SPHERE = "hard-sphere-CS-Speedy"
MODE_CS_EXTENDED = "CS-extended-to-(0,1)"
MODE_IDEAL_GAS = "ideal-gas"
MODES = (MODE_HARD_SPHERE, MODE_CS_EXTENDED, MODE_IDEAL_GAS)

# Inversion bracket and residual tolerance for the gamma -> eta solves.
_BRACKET_LO = 1e-12
_BRACKET_HI = 1.0 - 1e-12
_RESIDUAL_TOL = 1e-12


def _check_range(x, lo, hi, *, closed_lo=False, name="eta"):
    """Validate a scalar or array argument against an interval."""
    arr = np.asarray(x, dtype=float)
    ok = (arr >= lo) if closed_lo else (arr > lo)
    ok &= arr < hi
    if not np.all(ok):
        bound = "[" if closed_lo else "("
        raise ValueError(f"{name} must lie in {bound}{lo}, {hi})")
    return arr


def _scalar_like(template, value):
    """Return a plain float when the original argument was scalar."""
    if np.ndim(template) == 0:
        return float(np.asarray(value))
    return value


def g1(eta):
    """Carnahan-Starling reduced pressure on the fluid branch."""
    e = _check_range(eta, 0.0, 1.0)
    p = (e + e**2 + e**3 - e**4) / (1.0 - e) ** 3
    return _scalar_like(eta, p)


def g1_prime(eta):
    """Closed-form derivative of g1."""
    e = _check_range(eta, 0.0, 1.0)
    d = (1.0 + 4.0 * e + 4.0 * e**2 - 4.0 * e**3 + e**4) / (1.0 - e) ** 4
    return _scalar_like(eta, d)


def g2(eta):
    """Carnahan-Starling reduced chemical potential on the fluid branch."""
    e = _check_range(eta, 0.0, 1.0)
    g = np.log(e) + (8.0 * e - 9.0 * e**2 + 3.0 * e**3) / (1.0 - e) ** 3
    return _scalar_like(eta, g)


def g2_derivs(eta, order):
    """Closed-form derivative of g2 of the requested order (1, 2, or 3)."""
    e = _check_range(eta, 0.0, 1.0)
    if order == 1:
        d = 1.0 / e + (8.0 - 2.0 * e) / (1.0 - e) ** 4
    elif order == 2:
        d = -1.0 / e**2 + (30.0 - 6.0 * e) / (1.0 - e) ** 5
    elif order == 3:
        d = 2.0 / e**3 + (144.0 - 24.0 * e) / (1.0 - e) ** 6
    else:
        raise ValueError("order must be 1, 2, or 3")
    return _scalar_like(eta, d)


def _solve_increasing(fn, dfn, target, lo, hi, x0, maxiter=200):
    """Vectorized safeguarded Newton for a strictly increasing function.

    Newton steps that leave the current sign-change bracket fall back to
    bisection, so convergence is unconditional on [lo, hi].
    """
    t = np.asarray(target, dtype=float)
    shape = t.shape
    t = np.atleast_1d(t).astype(float)
    lo_a = np.full(t.shape, lo, dtype=float)
    hi_a = np.full(t.shape, hi, dtype=float)
    x = np.broadcast_to(np.asarray(x0, dtype=float), t.shape).copy()
    # relative above |target| = 1: near the right endpoint one ulp of x
    # moves fn by ~1e-11 |target|, so an absolute demand is unattainable
    tol = _RESIDUAL_TOL * np.maximum(1.0, np.abs(t))
    f = fn(x) - t
    for _ in range(maxiter):
        if np.all(np.abs(f) < tol):
            break
        lo_a = np.where(f < 0.0, x, lo_a)
        hi_a = np.where(f > 0.0, x, hi_a)
        with np.errstate(all="ignore"):
            xn = x - f / dfn(x)
        inside = np.isfinite(xn) & (xn > lo_a) & (xn < hi_a)
        x = np.where(inside, xn, 0.5 * (lo_a + hi_a))
        f = fn(x) - t
    else:
        raise RuntimeError("inversion did not reach the residual tolerance")
    return x.reshape(shape)


# Bracket images, used to reject unreachable targets before iterating.
_G2_LO = float(g2(_BRACKET_LO))
_G2_HI = float(g2(_BRACKET_HI))


def g2_inverse(gamma):
    """Invert g2 on (0, 1) by safeguarded Newton with bisection fallback.

    The residual |g2(result) - gamma| is driven below 1e-12 max(1, |gamma|).
    """
    g = np.asarray(gamma, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gamma must be finite")
    if np.any(g < _G2_LO) or np.any(g > _G2_HI):
        raise ValueError("gamma outside the invertible bracket")
    # Below gamma ~ -3 the ideal-gas exponential is an excellent seed.
    x0 = np.where(g < 0.0, np.clip(np.exp(np.clip(g, -27.0, 0.0)), 1e-11, 0.2), 0.25)
    x = _solve_increasing(g2, lambda e: g2_derivs(e, 1), g, _BRACKET_LO, _BRACKET_HI, x0)
    return _scalar_like(gamma, x)


GAMMA_FS = float(g2(ETA_FS_LO))  # freezing chemical potential, ~15.2085


def _speedy_z(y):
    """Solid compressibility factor in the scaled variable y = eta/eta_fcc."""
    return 3.0 / (1.0 - y) - SPEEDY_A * (y - SPEEDY_B) / (y - SPEEDY_C)


def _speedy_z_prime(y):
    return 3.0 / (1.0 - y) ** 2 - SPEEDY_A * (SPEEDY_B - SPEEDY_C) / (y - SPEEDY_C) ** 2


def speedy_g3(eta):
    """Speedy reduced pressure on the solid branch, eta in [0.54, eta_fcc).

    Written as eta times the compressibility factor; near close packing
    this reproduces the Alder expansion with constants K0 ~ -3.43 and
    K1 ~ 0.83.
    """
    e = _check_range(eta, ETA_FS_HI, ETA_FCC, closed_lo=True)
    p = e * _speedy_z(e / ETA_FCC)
    return _scalar_like(eta, p)


def _speedy_g3_prime(eta):
    """Closed-form derivative of speedy_g3."""
    y = np.asarray(eta, dtype=float) / ETA_FCC
    return _speedy_z(y) + y * _speedy_z_prime(y)


_Y_MELT = ETA_FS_HI / ETA_FCC
_Z_MELT = _speedy_z(_Y_MELT)


def speedy_g4(eta):
    """Speedy reduced chemical potential on the solid branch.

    Integrates g3'(x)/x from the melting point in closed form: the
    integrand splits into logarithmic terms and a simple pole via
    partial fractions, so no quadrature is needed.  speedy_g4(0.54)
    equals the freezing chemical potential exactly.
    """
    e = _check_range(eta, ETA_FS_HI, ETA_FCC, closed_lo=True)
    y = e / ETA_FCC
    a, b, c = SPEEDY_A, SPEEDY_B, SPEEDY_C
    g = (
        GAMMA_FS
        + _speedy_z(y)
        - _Z_MELT
        + (3.0 - a * b / c) * np.log(y / _Y_MELT)
        - 3.0 * np.log((1.0 - y) / (1.0 - _Y_MELT))
        - a * (c - b) / c * np.log((y - c) / (_Y_MELT - c))
    )
    return _scalar_like(eta, g)


_G4_HI_ETA = ETA_FCC * (1.0 - 1e-13)
_G4_HI = float(speedy_g4(_G4_HI_ETA))


def g4_inverse(gamma):
    """Invert speedy_g4 on [0.54, eta_fcc)."""
    g = np.asarray(gamma, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gamma must be finite")
    if np.any(g < GAMMA_FS) or np.any(g > _G4_HI):
        raise ValueError("gamma outside the solid branch")
    x = _solve_increasing(
        speedy_g4,
        lambda e: _speedy_g3_prime(e) / e,
        g,
        ETA_FS_HI,
        _G4_HI_ETA,
        0.6,
    )
    return _scalar_like(gamma, x)


def find_inflection():
    """Locate the inflection of g2, where g2' attains its minimum.

    Returns (eta_wr, gamma_wr, K): the packing fraction at which g2''
    vanishes, the chemical potential there, and K = 1/g2'(eta_wr), the
    largest slope the fluid density can have as a function of gamma.
    """
    eta_wr = brentq(lambda e: g2_derivs(e, 2), 1e-6, ETA_FS_LO, xtol=1e-15)
    return float(eta_wr), float(g2(eta_wr)), float(1.0 / g2_derivs(eta_wr, 1))


_ETA_WR, _GAMMA_WR, _K_GAMMA_FS = find_inflection()


def ideal_gas_wp_prime(gamma):
    """Ideal-gas density e^gamma, for low-density cross-checks."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g > 700.0):
        raise OverflowError("gamma too large for the ideal-gas exponential")
    return _scalar_like(gamma, np.exp(g))


# Anchors pressure continuity at the kink: the solid branch is shifted by
# the constant g1(0.49) - g3(0.54) so wp matches from both sides, while the
# density relation g4 is left untouched.
_SOLID_PRESSURE_SHIFT = float(g1(ETA_FS_LO)) - float(speedy_g3(ETA_FS_HI))


@dataclass(frozen=True)
class EosModel:
    """Piecewise equation of state selected by mode.

    hard-sphere-CS-Speedy composes the Carnahan-Starling fluid branch
    with Speedy's solid branch across the kink at gamma_fs; CS-extended
    keeps the fluid formulas on all of eta in (0,1); ideal-gas replaces
    the density map by e^gamma.
    """

    mode: str = MODE_HARD_SPHERE
    eta_fs_lo: float = ETA_FS_LO
    eta_fs_hi: float = ETA_FS_HI
    eta_fcc: float = ETA_FCC
    gamma_fs: float = GAMMA_FS
    eta_wr: float = _ETA_WR
    gamma_wr: float = _GAMMA_WR
    K_gamma_fs: float = _K_GAMMA_FS
    speedy_a: float = SPEEDY_A
    speedy_b: float = SPEEDY_B
    speedy_c: float = SPEEDY_C

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    def _split(self, gamma, *, kink_to_solid):
        """Masks for the fluid/solid decomposition of a gamma array."""
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        fluid = (g < self.gamma_fs) if kink_to_solid else (g <= self.gamma_fs)
        return g, fluid

    def wp(self, gamma):
        """Reduced pressure as a function of chemical potential."""
        if self.mode == MODE_IDEAL_GAS:
            return ideal_gas_wp_prime(gamma)
        if self.mode == MODE_CS_EXTENDED:
            return _scalar_like(gamma, g1(g2_inverse(np.asarray(gamma, dtype=float))))
        g, fluid = self._split(gamma, kink_to_solid=False)
        out = np.empty_like(g)
        if np.any(fluid):
            out[fluid] = g1(g2_inverse(g[fluid]))
        if np.any(~fluid):
            out[~fluid] = _SOLID_PRESSURE_SHIFT + speedy_g3(g4_inverse(g[~fluid]))
        return _scalar_like(gamma, out.reshape(np.shape(gamma)))

    def wp_prime(self, gamma, side="left"):
        """Equilibrium packing fraction at chemical potential gamma.

        At the kink the left derivative returns 0.49 and the right
        derivative 0.54; elsewhere the side argument is irrelevant.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if self.mode == MODE_IDEAL_GAS:
            return ideal_gas_wp_prime(gamma)
        if self.mode == MODE_CS_EXTENDED:
            return g2_inverse(gamma)
        g, fluid = self._split(gamma, kink_to_solid=(side == "right"))
        out = np.empty_like(g)
        if np.any(fluid):
            out[fluid] = g2_inverse(g[fluid])
        if np.any(~fluid):
            out[~fluid] = g4_inverse(g[~fluid])
        return _scalar_like(gamma, out.reshape(np.shape(gamma)))

    def wp_double_prime(self, gamma):
        """Density response d eta / d gamma; undefined at the kink."""
        if self.mode == MODE_IDEAL_GAS:
            return ideal_gas_wp_prime(gamma)
        if self.mode == MODE_CS_EXTENDED:
            return _scalar_like(
                gamma, 1.0 / g2_derivs(g2_inverse(np.asarray(gamma, dtype=float)), 1)
            )
        g, fluid = self._split(gamma, kink_to_solid=False)
        if np.any(g == self.gamma_fs):
            raise ValueError("density response is undefined at the kink gamma_fs")
        out = np.empty_like(g)
        if np.any(fluid):
            out[fluid] = 1.0 / g2_derivs(g2_inverse(g[fluid]), 1)
        if np.any(~fluid):
            eta = g4_inverse(g[~fluid])
            out[~fluid] = eta / _speedy_g3_prime(eta)
        return _scalar_like(gamma, out.reshape(np.shape(gamma)))

    def g2_inverse(self, gamma):
        """Fluid-branch density, enforcing the mode's branch restriction."""
        if self.mode == MODE_HARD_SPHERE and np.any(
            np.asarray(gamma, dtype=float) > self.gamma_fs
        ):
            raise ValueError("gamma beyond the fluid branch in hard-sphere mode")
        return g2_inverse(gamma)
