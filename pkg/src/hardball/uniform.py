"""Space-uniform van der Waals theory for the attractive hard-sphere gas.

Roots of the algebraic fixed point eta = g2^-1(gamma + alpha*tau*eta),
the triple-solution region boundaries gamma_check/gamma_hat, the Maxwell
coexistence curve, uniform pressure and free-energy densities, and the
touching-scale system that pairs a shrunken-domain lower slope with a
full-domain upper slope.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import eos

# slope thresholds: below ALPHA_TAU_MIN the map eta -> g2(eta) - at*eta is
# injective; at ALPHA_TAU_FS the small-slope root hits the freezing density
_INFLECTION = eos.find_inflection()
ETA_WR = _INFLECTION[0]
ALPHA_TAU_MIN = float(eos.g2_derivs(ETA_WR, 1))
ALPHA_TAU_FS = float(eos.g2_derivs(eos.ETA_FS_LO, 1))

_TANGENT_TOL = 1e-9  # |g2 - gamma - at*eta| below this at a critical point
_MERGE_TOL = 1e-6  # tangent root counted once if a scanned root sits closer

# scan grid: log-spaced through the ln(eta) regime, uniform above 1e-3
_SCAN_GRID = np.concatenate(
    [
        np.geomspace(1e-300, 1e-3, 4000, endpoint=False),
        np.linspace(1e-3, 1.0 - 1e-9, 6001),
    ]
)


@dataclass(frozen=True)
class UniformRoots:
    """Sorted roots of the uniform fixed point with stability flags.

    A root is iteration-stable when g2'(root) > alpha_tau, i.e. the
    fixed-point map has local slope below one there.  ``degenerate`` marks
    a tangency: two of the listed roots coincide to merge tolerance.
    """

    roots: tuple
    stability: tuple
    degenerate: bool = False

    def __post_init__(self):
        if not self.roots:
            raise ValueError("at least one root is required")
        if any(b < a for a, b in zip(self.roots, self.roots[1:])):
            raise ValueError("roots must be sorted")


def solve_uniform(alpha_tau, gamma):
    """All roots of g2(eta) = gamma + alpha_tau*eta in (0,1)."""
    if alpha_tau < 0:
        raise ValueError("alpha_tau must be nonnegative")
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError("gamma must be finite")

    def h(x):
        return eos.g2(x) - gamma - alpha_tau * x

    values = h(_SCAN_GRID)
    sign = np.sign(values)
    hits = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    roots = [
        optimize.brentq(
            h, _SCAN_GRID[i], _SCAN_GRID[i + 1], xtol=1e-13, rtol=8.9e-16
        )
        for i in hits
    ]
    roots.extend(_SCAN_GRID[np.nonzero(values == 0.0)[0]].tolist())
    # bisection tolerance is absolute in eta; polish so the residual is
    # small even where g2' ~ 1/eta blows up
    for _ in range(3):
        moved = False
        for k, r in enumerate(roots):
            res = h(r)
            if abs(res) > 1e-12 * max(1.0, abs(gamma)):
                step = res / (float(eos.g2_derivs(r, 1)) - alpha_tau)
                cand = r - step
                if 0.0 < cand < 1.0 and abs(h(cand)) < abs(res):
                    roots[k] = cand
                    moved = True
        if not moved:
            break

    # a tangency leaves no sign change; it can only sit where h' vanishes
    degenerate = False
    if alpha_tau > ALPHA_TAU_MIN:
        for eta_t in eta_bounds(alpha_tau):
            if abs(h(eta_t)) < _TANGENT_TOL:
                degenerate = True
                if not roots or min(abs(r - eta_t) for r in roots) > _MERGE_TOL:
                    roots.extend([eta_t, eta_t])
    if not roots:
        raise RuntimeError("root scan failed; gamma far outside the grid range")
    roots = sorted(roots)
    stability = tuple(bool(eos.g2_derivs(r, 1) > alpha_tau) for r in roots)
    return UniformRoots(tuple(roots), stability, degenerate)


def eta_bounds(alpha_tau):
    """The two solutions of g2'(eta) = alpha_tau flanking the inflection."""
    if alpha_tau <= ALPHA_TAU_MIN:
        raise ValueError(
            "alpha_tau must exceed g2'(eta_inflection) ~ 21.202 for two branches"
        )

    def slope_gap(x):
        return float(eos.g2_derivs(x, 1)) - alpha_tau

    lo = 0.5 / alpha_tau  # 1/eta term alone already exceeds alpha_tau here
    eta_lt = optimize.brentq(slope_gap, lo, ETA_WR, xtol=1e-15, rtol=8.9e-16)
    hi = 1.0 - 0.8 * (6.0 / alpha_tau) ** 0.25  # (8-2eta)/(1-eta)^4 dominates
    eta_gt = optimize.brentq(slope_gap, ETA_WR, hi, xtol=1e-15, rtol=8.9e-16)
    return eta_lt, eta_gt


def gamma_boundaries(alpha_tau, fluid_restricted=False):
    """Lower and upper chemical-potential limits of the triple-root band."""
    eta_lt, eta_gt = eta_bounds(alpha_tau)
    gamma_hat = float(eos.g2(eta_lt)) - alpha_tau * eta_lt
    gamma_check = float(eos.g2(eta_gt)) - alpha_tau * eta_gt
    if fluid_restricted:
        if alpha_tau >= ALPHA_TAU_FS:
            raise ValueError(
                "fluid-restricted band is empty for alpha_tau >= g2'(0.49)"
            )
        gamma_hat = min(gamma_hat, eos.GAMMA_FS - eos.ETA_FS_LO * alpha_tau)
    return gamma_check, gamma_hat


@dataclass(frozen=True)
class TriplicityRegion:
    """Region of (alpha, gamma) with three uniform roots at coupling tau."""

    tau: float
    fluid_restricted: bool = False
    alpha_tau_min: float = field(default=ALPHA_TAU_MIN, init=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def gamma_hat(self, alpha):
        return gamma_boundaries(alpha * self.tau, self.fluid_restricted)[1]

    def gamma_check(self, alpha):
        return gamma_boundaries(alpha * self.tau, self.fluid_restricted)[0]

    def contains(self, alpha, gamma):
        if alpha * self.tau <= self.alpha_tau_min:
            return False
        if self.fluid_restricted and alpha * self.tau >= ALPHA_TAU_FS:
            return False
        check, hat = gamma_boundaries(alpha * self.tau, self.fluid_restricted)
        return check < gamma < hat


def pi_uniform(alpha_norm, gamma, eta, model=None):
    """Uniform grand-potential density wp(gamma + an*eta) - an*eta^2/2."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0.0) or np.any(eta >= 1.0):
        raise ValueError("eta must lie in (0,1)")
    if model is None:
        model = eos.EosModel(eos.MODE_HARD_SPHERE)
    return model.wp(gamma + alpha_norm * eta) - 0.5 * alpha_norm * eta**2


def _pi_at_root(alpha_tau, eta):
    # at a root g2(eta) = gamma + at*eta, so wp(gamma + at*eta) = g1(eta)
    # on the extended Carnahan-Starling branch
    return float(eos.g1(eta)) - 0.5 * alpha_tau * eta**2


def coexistence_gamma(alpha_tau, fluid_restricted=False):
    """Maxwell point: gamma where gas and liquid pressures balance."""
    if fluid_restricted and alpha_tau >= ALPHA_TAU_FS:
        raise ValueError("no fluid-restricted coexistence above g2'(0.49)")
    gamma_check, gamma_hat = gamma_boundaries(alpha_tau)

    def varpi(gamma):
        roots = solve_uniform(alpha_tau, gamma).roots
        return _pi_at_root(alpha_tau, roots[-1]) - _pi_at_root(alpha_tau, roots[0])

    # the outer root pair merges at the band edges faster than the scan
    # grid resolves, so walk inward until both signs are trustworthy
    band = gamma_hat - gamma_check
    lo = hi = None
    for frac in (1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 0.05, 0.15):
        if lo is None and varpi(gamma_check + frac * band) < 0.0:
            lo = gamma_check + frac * band
        if hi is None and varpi(gamma_hat - frac * band) > 0.0:
            hi = gamma_hat - frac * band
    if lo is None or hi is None or lo >= hi:
        raise RuntimeError("pressure gap does not change sign across the band")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = varpi(mid)
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, abs(mid)) and abs(fm) < 1e-10:
            return mid
    raise RuntimeError("coexistence bisection stalled")


def f_uniform(alpha_norm, eta):
    """Uniform free-energy density eta*g2 - g1 - an*eta^2/2."""
    eta_arr = np.asarray(eta, dtype=float)
    if np.any(eta_arr <= 0.0) or np.any(eta_arr >= 1.0):
        raise ValueError("eta must lie in (0,1)")
    out = eta_arr * eos.g2(eta_arr) - eos.g1(eta_arr) - 0.5 * alpha_norm * eta_arr**2
    return out if out.shape else float(out)


def common_tangent(alpha_norm):
    """Touching points and slope of the double tangent under f_uniform.

    Seeds come from the lower convex hull of a dense graph sample, then a
    two-dimensional Newton (on equal slopes at both points matching the
    secant) sharpens them.  Independent of the Maxwell construction.
    """
    if alpha_norm <= ALPHA_TAU_MIN:
        raise ValueError("f_uniform is convex; no double tangent exists")
    grid = np.concatenate(
        [np.geomspace(1e-8, 1e-2, 2000, endpoint=False), np.linspace(1e-2, 0.999, 30000)]
    )
    vals = f_uniform(alpha_norm, grid)

    # Andrew-monotone-chain lower hull over the sampled graph
    hull = []
    for i in range(grid.size):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            cross = (grid[k] - grid[j]) * (vals[i] - vals[j]) - (
                grid[i] - grid[j]
            ) * (vals[k] - vals[j])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    gaps = np.diff(hull)
    widest = int(np.argmax(gaps))
    a0, b0 = grid[hull[widest]], grid[hull[widest + 1]]
    if gaps[widest] <= 1:
        raise RuntimeError("hull found no excluded band; tangent seeds missing")

    def residual(x):
        a, b = x
        fa, fb = f_uniform(alpha_norm, a), f_uniform(alpha_norm, b)
        s = (fb - fa) / (b - a)
        slope_a = float(eos.g2(a)) - alpha_norm * a
        slope_b = float(eos.g2(b)) - alpha_norm * b
        return [slope_a - s, slope_b - s]

    sol = optimize.root(residual, [a0, b0], method="hybr", tol=1e-13)
    if not sol.success:
        raise RuntimeError("tangent refinement failed: " + sol.message)
    a, b = sorted(sol.x)
    slope = float(eos.g2(a)) - alpha_norm * a
    return a, b, slope


def _gamma_gap(alpha, phi, psi):
    # gap between the upper curve of the stronger coupling and the lower
    # curve of the weaker one; regions overlap where this is positive
    _, hat = gamma_boundaries(alpha * phi, fluid_restricted=True)
    check, _ = gamma_boundaries(alpha * psi)
    return hat - check


def _best_alpha(phi, psi, alpha_range):
    lo = max(alpha_range[0], ALPHA_TAU_MIN / psi * (1.0 + 1e-9))
    hi = min(alpha_range[1], ALPHA_TAU_FS / phi * (1.0 - 1e-9))
    if lo >= hi:
        return None
    grid = np.geomspace(lo, hi, 200)
    vals = [_gamma_gap(a, phi, psi) for a in grid]
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        lambda a_: -_gamma_gap(a_, phi, psi),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return res.x, -res.fun


def touching_scale(spec, alpha_range, diam, volume):
    """Scale where the shrunken-domain band just touches the full band.

    Solves gamma_check(alpha*Psi) = gamma_hat_fluid(alpha*Phi(s)) together
    with tangency in alpha, via a bracketed scan over the scale s and a
    final two-dimensional Newton polish.
    """
    from . import kernels

    sigma_grave, psi_max = kernels.optimal_scaling(spec, diam, volume)
    radius = 0.5 * diam

    def peak(s):
        return _best_alpha(kernels.ball_l1(spec, s * radius), psi_max, alpha_range)

    base = peak(sigma_grave)
    if base is None or base[1] <= 0.0:
        raise ValueError("regions never overlap inside the alpha range")
    s_lo, s_hi = sigma_grave, sigma_grave
    for _ in range(60):
        s_hi *= 1.25
        trial = peak(s_hi)
        if trial is None or trial[1] < 0.0:
            break
        s_lo = s_hi
    else:
        raise ValueError("bands still overlap at the largest probed scale")

    def gap_at_scale(s):
        found = peak(s)
        return found[1] if found is not None else -1.0

    sigma_acute = optimize.brentq(gap_at_scale, s_lo, s_hi, xtol=1e-10)
    alpha_star = peak(sigma_acute)[0] if peak(sigma_acute) else None
    if alpha_star is None:
        alpha_star = peak(s_lo)[0]

    def residual(x):
        a, s = x
        phi = kernels.ball_l1(spec, s * radius)
        da = 1e-6 * a
        g0 = _gamma_gap(a, phi, psi_max)
        g1_ = _gamma_gap(a + da, phi, psi_max)
        g2_ = _gamma_gap(a - da, phi, psi_max)
        return [g0, (g1_ - g2_) / (2 * da)]

    sol = optimize.root(residual, [alpha_star, sigma_acute], method="hybr", tol=1e-12)
    if (
        sol.success
        and sol.x[1] > sigma_grave
        and alpha_range[0] <= sol.x[0] <= alpha_range[1]
        and abs(gap_at_scale(float(sol.x[1]))) < abs(gap_at_scale(sigma_acute))
    ):
        alpha_star, sigma_acute = float(sol.x[0]), float(sol.x[1])
    return sigma_acute, alpha_star
