"""Finite-volume phase transitions and the droplet free-energy criterion.

Two first-order transitions are located on a ball.  At fixed chemical
potential the gas and liquid branches swap roles as pressure maximizer
at gamma_gl; at fixed particle number the vapor and droplet profiles
swap roles as free-energy minimizer at N_vd.  The droplet branch is
reached by a mass-constrained iteration: plain damped Newton at fixed
gamma stalls when started from a ball trial in a large container, but
re-solving gamma each step so the iterate keeps its mass follows the
canonical-ensemble valley, where the droplet is a stable minimizer.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import field, functionals, kernels, uniform

__all__ = [
    "BranchLostError",
    "BranchPoint",
    "GrandTransition",
    "PetitTransition",
    "constrained_solve",
    "decreasing_rearrangement",
    "droplet_criterion",
    "droplet_solve",
    "droplet_trial",
    "grand_canonical_transition",
    "n_hat",
    "petit_canonical_transition",
    "rearrangement_intersections",
]

_MASS_RTOL = 1e-9  # relative mass residual for constrained solves
_JUMP_FACTOR = 10.0  # continuation step ratio that flags a branch switch


class BranchLostError(RuntimeError):
    """Continuation left its branch, or a droplet collapsed onto one."""


@dataclass(eq=False)
class BranchPoint:
    """One converged solution pinned to its thermodynamic bookkeeping."""

    gamma: float
    alpha: float
    solution: field.SolveReport
    functionals: functionals.FunctionalValues

    def __post_init__(self):
        if not self.solution.residual < 1e-8:
            raise ValueError("branch point requires a converged solve")
        vals = self.functionals
        scale = max(1.0, abs(vals.P), abs(self.gamma * vals.N), abs(vals.F))
        if abs(vals.P - (self.gamma * vals.N - vals.F)) > 1e-8 * scale:
            raise ValueError("branch point violates the Legendre identity")


@dataclass(eq=False)
class GrandTransition:
    """Coexistence at fixed chemical potential.

    pressures holds P for every solution found at the crossing, keyed
    by branch name; best_known names the argmax among them, which is
    only the best maximizer this enumeration knows about.
    """

    gamma_gl: float
    gas: BranchPoint
    liquid: BranchPoint
    delta_N: float
    pressures: dict
    best_known: str


@dataclass(eq=False)
class PetitTransition:
    """Coexistence at fixed particle number.

    delta_* are droplet minus vapor at the crossing mass; the chemical
    potential, energy, and entropy all jump down when the droplet takes
    over.  crossings counts rearranged-profile intersections and is
    reported without judgement.
    """

    N_vd: float
    vapor: BranchPoint
    droplet: BranchPoint
    gas: BranchPoint
    liquid: BranchPoint
    gamma_gl: float
    delta_Gamma: float
    delta_E: float
    delta_S: float
    embedding_ok: bool
    crossings: int


def _branch_point(spec, alpha, gamma, report, model):
    vals = functionals.functional_values(
        spec, alpha, gamma, report.field, model=model
    )
    return BranchPoint(
        gamma=float(gamma), alpha=float(alpha), solution=report, functionals=vals
    )


def grand_canonical_transition(spec, alpha, domain, gamma_bracket, model=None,
                               droplet_hint=None):
    """Locate the gas/liquid pressure crossing inside gamma_bracket.

    Both endpoints must give pressure gaps P[maximal] - P[minimal] of
    opposite sign; a one-signed bracket means the launches coincide or
    one branch is absent there, and raises.  At the crossing every
    solution this module can reach (the two launches, a Newton solve
    from the middle algebraic root, optionally a droplet seeded by
    droplet_hint) is recorded with its pressure.
    """
    model = field._default_model(model)
    g_lo, g_hi = float(gamma_bracket[0]), float(gamma_bracket[1])
    if not g_lo < g_hi:
        raise ValueError("gamma_bracket must be increasing")
    D = functionals.volume_weights(domain)

    def gap(g):
        lo = field.minimal_solution(spec, alpha, g, domain, model=model)
        hi = field.maximal_solution(spec, alpha, g, domain, model=model)
        p_lo = functionals.pressure_functional(
            spec, alpha, g, lo.field, model=model
        )
        p_hi = functionals.pressure_functional(
            spec, alpha, g, hi.field, model=model
        )
        return p_hi - p_lo, lo, hi, p_lo, p_hi

    gap_lo, lo_a, hi_a = gap(g_lo)[:3]
    gap_hi, lo_b, hi_b = gap(g_hi)[:3]
    for g, lo_rep, hi_rep in ((g_lo, lo_a, hi_a), (g_hi, lo_b, hi_b)):
        if np.max(np.abs(hi_rep.field.values - lo_rep.field.values)) < 1e-7:
            raise ValueError(
                f"the launches coincide at gamma {g:.6f}; the pressure gap "
                "there is quadrature noise, so shrink the bracket"
            )
    if gap_lo == 0.0 or gap_hi == 0.0 or (gap_lo < 0.0) == (gap_hi < 0.0):
        raise ValueError(
            "pressure gap does not change sign over the bracket; one "
            "branch may be absent"
        )
    gamma_gl = float(
        brentq(lambda g: gap(g)[0], g_lo, g_hi, xtol=1e-12, rtol=8.9e-16)
    )
    delta, lo, hi, p_lo, p_hi = gap(gamma_gl)
    scale = max(1.0, abs(p_lo), abs(p_hi))
    if abs(delta) > 1e-8 * scale:
        raise RuntimeError("pressure gap at the located crossing is too wide")

    gas = _branch_point(spec, alpha, gamma_gl, lo, model)
    liquid = _branch_point(spec, alpha, gamma_gl, hi, model)
    pressures = {"minimal": gas.functionals.P, "maximal": liquid.functionals.P}

    # enumerate further critical points; failures just shorten the list
    extras = {}
    phi = kernels.phi_lambda(spec, domain.R)
    try:
        roots = uniform.solve_uniform(alpha * phi, gamma_gl).roots
        if len(roots) == 3:
            start = field.constant_field(domain, roots[1])
            extras["middle"] = field.newton_solve(
                spec, alpha, gamma_gl, start, model=model
            )
    except (ValueError, RuntimeError):
        pass
    if droplet_hint is not None:
        try:
            extras["droplet"] = field.newton_solve(
                spec, alpha, gamma_gl, droplet_hint, model=model
            )
        except (ValueError, RuntimeError):
            pass
    for name, rep in extras.items():
        new = rep.field.values
        known = [lo.field.values, hi.field.values]
        if all(float(np.max(np.abs(new - v))) > 1e-6 for v in known):
            pressures[name] = functionals.pressure_functional(
                spec, alpha, gamma_gl, rep.field, model=model
            )

    best_known = max(pressures, key=pressures.get)
    return GrandTransition(
        gamma_gl=gamma_gl,
        gas=gas,
        liquid=liquid,
        delta_N=float(D @ hi.field.values - D @ lo.field.values),
        pressures=pressures,
        best_known=best_known,
    )


def constrained_solve(spec, alpha, domain, N_target, branch, model=None,
                      start=None, gamma_seed=None, max_outer=80):
    """Solve at fixed mass by a secant loop on the chemical potential.

    The inner solve is the branch's own method: certified launches for
    the extremal branches, warm-started Newton for the middle branch
    (seeded by start, or by the middle algebraic root when start is
    omitted).  A sup-norm step more than ten times the size predicted
    from the previous continuation step means the inner solve jumped
    branches and raises BranchLostError.
    """
    model = field._default_model(model)
    if branch not in ("minimal", "maximal", "middle"):
        raise ValueError("branch must be 'minimal', 'maximal' or 'middle'")
    N_target = float(N_target)
    D = functionals.volume_weights(domain)
    volume = float(np.sum(D))
    if not 0.0 < N_target < volume:
        raise ValueError("N_target outside the attainable mass range")

    # the extremal branches end at the algebraic folds; keep the secant
    # from extrapolating across them before it has a bracket
    g_floor, g_ceil = -27.0, 60.0
    atau = alpha * kernels.l1_norm_r3(spec)
    if atau > uniform.ALPHA_TAU_MIN:
        g_check, g_hat = uniform.gamma_boundaries(atau)
        if branch == "minimal":
            g_ceil = g_hat - 1e-9
        elif branch == "maximal":
            g_floor = g_check + 1e-9

    def clamp(g):
        return min(max(g, g_floor), g_ceil)

    warm = [start]

    def inner(g):
        if branch == "minimal":
            return field.minimal_solution(spec, alpha, g, domain, model=model)
        if branch == "maximal":
            return field.maximal_solution(spec, alpha, g, domain, model=model)
        if warm[0] is None:
            phi = kernels.phi_lambda(spec, domain.R)
            roots = uniform.solve_uniform(alpha * phi, g).roots
            if len(roots) < 3:
                raise ValueError(
                    "no middle algebraic root at this gamma; supply start"
                )
            warm[0] = field.constant_field(domain, roots[1])
        rep = field.newton_solve(spec, alpha, g, warm[0], model=model)
        warm[0] = rep.field
        return rep

    history = []  # (gamma, values) of accepted inner solves

    def evaluate(g):
        rep = inner(g)
        v = rep.field.values
        if len(history) >= 2:
            (g1, v1), (g0, v0) = history[-1], history[-2]
            dg = abs(g1 - g0)
            if dg > 0.0:
                predicted = np.max(np.abs(v1 - v0)) / dg * abs(g - g1)
                if np.max(np.abs(v - v1)) > _JUMP_FACTOR * predicted + 1e-9:
                    raise BranchLostError(
                        f"{branch} branch lost near gamma {g:.6f}: "
                        "sup-norm step exceeds ten times the prediction"
                    )
        history.append((g, v))
        return rep, float(D @ v)

    mean = N_target / volume
    if gamma_seed is None:
        phi = kernels.phi_lambda(spec, domain.R)
        g_mean = brentq(
            lambda g: float(model.wp_prime(g, side="left")) - mean,
            -27.0, 40.0, xtol=1e-12, rtol=8.9e-16,
        )
        gamma_seed = g_mean - alpha * phi * mean
    g_prev = clamp(float(gamma_seed))
    rep_prev, n_prev = evaluate(g_prev)
    h_prev = n_prev - N_target
    if abs(h_prev) <= _MASS_RTOL * max(1.0, N_target):
        rep_prev.branch_label = branch
        return _branch_point(spec, alpha, g_prev, rep_prev, model)
    g_cur = clamp(g_prev - math.copysign(max(0.01, 1e-3 * abs(g_prev)), h_prev))
    if g_cur == g_prev:
        # the seed already sits on a fold cap; probe inward instead
        g_cur = clamp(g_prev + math.copysign(0.01, h_prev))

    # bracketing pair (sign change) once seen keeps the secant safeguarded
    lo_pt = hi_pt = None  # (gamma, h) with h < 0 / h > 0
    if h_prev < 0.0:
        lo_pt = (g_prev, h_prev)
    else:
        hi_pt = (g_prev, h_prev)

    for _ in range(max_outer):
        try:
            rep_cur, n_cur = evaluate(g_cur)
        except ValueError:
            # left the model's invertible window; retreat halfway
            g_cur = 0.5 * (g_cur + g_prev)
            continue
        h_cur = n_cur - N_target
        if abs(h_cur) <= _MASS_RTOL * max(1.0, N_target):
            report = rep_cur
            report.branch_label = branch
            return _branch_point(spec, alpha, g_cur, report, model)
        if h_cur < 0.0:
            lo_pt = (g_cur, h_cur)
        else:
            hi_pt = (g_cur, h_cur)
        if h_cur == h_prev:
            raise ValueError(
                f"mass does not respond to gamma on the {branch} branch; "
                "N_target may be outside its range"
            )
        g_next = g_cur - h_cur * (g_cur - g_prev) / (h_cur - h_prev)
        if lo_pt is not None and hi_pt is not None:
            g_lo, g_hi = sorted((lo_pt[0], hi_pt[0]))
            if not g_lo < g_next < g_hi:
                g_next = 0.5 * (g_lo + g_hi)
        else:
            g_next = clamp(g_next)
            if g_next == g_cur:
                raise ValueError(
                    f"N_target appears beyond the {branch} branch's fold"
                )
        g_prev, h_prev, g_cur = g_cur, h_cur, g_next
    raise ValueError(
        f"no mass match within {max_outer} outer steps on the {branch} "
        "branch; N_target may be outside its range"
    )


def droplet_criterion(spec, alpha):
    """Free-energy test for a droplet beating the vapor at the same mass.

    Evaluated at the algebraic ceiling gamma_hat, where the vapor mass
    peaks: eta_hat_m is the merged small root, eta_hat_M the largest
    root, and the criterion fires when alpha times the whole-space
    kernel norm exceeds the bracketed combination of both densities.
    """
    atau = alpha * kernels.l1_norm_r3(spec)
    if not atau > uniform.ALPHA_TAU_MIN:
        raise ValueError(
            "droplet criterion needs alpha above the inflection slope "
            f"{uniform.ALPHA_TAU_MIN:.4f}"
        )
    gamma_hat = uniform.gamma_boundaries(atau)[1]
    eta_m = uniform.eta_bounds(atau)[0]
    eta_M = uniform.solve_uniform(atau, gamma_hat).roots[-1]

    def crowding(eta):
        return (3.0 - 2.0 * eta) / (1.0 - eta) ** 2

    rhs = 2.0 * (
        math.log(eta_M / eta_m) + crowding(eta_M) - crowding(eta_m)
    ) / (eta_M - eta_m)
    return {
        "lhs": float(atau),
        "rhs": float(rhs),
        "fires": bool(atau > rhs),
        "eta_hat_m": float(eta_m),
        "eta_hat_M": float(eta_M),
        "volume_ratio": float(eta_M / eta_m),
    }


def n_hat(spec, alpha, domain, model=None):
    """Largest vapor-branch mass: N of the minimal solution at gamma_hat."""
    atau = alpha * kernels.l1_norm_r3(spec)
    gamma_hat = uniform.gamma_boundaries(atau)[1]
    rep = field.minimal_solution(spec, alpha, gamma_hat, domain, model=model)
    D = functionals.volume_weights(domain)
    return float(D @ rep.field.values)


def droplet_trial(spec, alpha, domain, N, ball_fraction, floor=1e-12):
    """Uniform ball of mass N on a floor, as droplet seed and comparator.

    The ball holds the fraction ball_fraction of the container volume;
    its radius is snapped to a panel edge so the quadrature sees a
    clean cut, and the ball density absorbs the floor's mass so the
    discrete mass equals N exactly.
    """
    del spec, alpha  # geometric construction; kept for a uniform call shape
    N = float(N)
    ball_fraction = float(ball_fraction)
    if not 0.0 < ball_fraction <= 1.0:
        raise ValueError("ball_fraction must lie in (0, 1]")
    D = functionals.volume_weights(domain)
    volume = float(np.sum(D))
    if N / (ball_fraction * volume) >= 1.0:
        raise ValueError(
            "overpacking: the ball cannot hold this mass below unit fraction"
        )
    edges = domain.edges
    r_ball = edges[int(np.argmin(np.abs(edges - domain.R * ball_fraction ** (1.0 / 3.0))))]
    inside = domain.nodes <= r_ball
    covered = float(D @ inside)
    if covered <= 0.0:
        raise ValueError("ball_fraction too small for this grid")
    density = (N - floor * (volume - covered)) / covered
    if not floor < density < 1.0:
        raise ValueError(
            "overpacking: snapped ball cannot hold this mass below unit "
            "fraction"
        )
    return field.DensityField(domain, np.where(inside, density, floor))


def _gamma_for_mass(model, D, u, N):
    """Chemical potential at which the profile wp'(gamma + u) has mass N."""

    def mass_gap(g):
        return float(D @ np.asarray(model.wp_prime(g + u, side="left"))) - N

    lo, hi = -26.0, 4.0
    if mass_gap(lo) >= 0.0:
        lo = -27.4
        if mass_gap(lo) >= 0.0:
            raise ValueError("mass target below the dilute gamma window")
    while mass_gap(hi) <= 0.0:
        hi += 6.0
        if hi > 46.0:
            raise ValueError("mass target above the reachable gamma window")
    gamma = float(brentq(mass_gap, lo, hi, xtol=1e-13, rtol=8.9e-16))
    if abs(mass_gap(gamma)) > 1e-6 * max(1.0, N):
        raise RuntimeError(
            "mass cannot be matched by a single-branch density profile"
        )
    return gamma


def droplet_solve(spec, alpha, domain, N, start=None, model=None, tol=1e-12,
                  max_iter=20000, check_collapse=True):
    """Land on the droplet branch at fixed mass N.

    Iterates the density map with gamma re-solved every step to hold
    the mass.  The droplet minimizes F under the mass constraint, so
    this iteration converges from a crude ball trial where fixed-gamma
    Newton stalls.  The converged gamma is the chemical potential of
    the droplet, and the profile solves the fixed-gamma equation to
    the usual residual.
    """
    model = field._default_model(model)
    D = functionals.volume_weights(domain)
    if start is None:
        atau = alpha * kernels.l1_norm_r3(spec)
        gamma_hat = uniform.gamma_boundaries(atau)[1]
        eta_big = uniform.solve_uniform(atau, gamma_hat).roots[-1]
        fraction = min(0.9, float(N) / (eta_big * float(np.sum(D))))
        start = droplet_trial(spec, alpha, domain, N, fraction)
    ring = alpha * field._self_ring(spec, domain)
    v = start.values.copy()
    gamma = math.nan
    for it in range(1, max_iter + 1):
        u = ring @ v
        gamma = _gamma_for_mass(model, D, u, float(N))
        new = np.asarray(model.wp_prime(gamma + u, side="left"), dtype=float)
        change = float(np.max(np.abs(new - v)))
        v = new
        if change < tol:
            break
    else:
        raise RuntimeError(
            f"mass-constrained iteration did not settle in {max_iter} steps"
        )
    u = ring @ v
    residual = float(
        np.max(np.abs(np.asarray(model.wp_prime(gamma + u, side="left")) - v))
    )
    if residual >= field._RESIDUAL_TOL:
        raise RuntimeError("landed profile fails the fixed-gamma residual")
    if check_collapse:
        vapor = field.minimal_solution(spec, alpha, gamma, domain, model=model)
        if float(np.max(np.abs(v - vapor.field.values))) < 1e-6:
            raise BranchLostError(
                "mass-constrained iteration collapsed onto the vapor branch"
            )
    certified = bool(np.max(gamma + u) < field._GAMMA_FS - field._FLUID_MARGIN)
    report = field.SolveReport(
        field=field.DensityField(domain, v),
        iterations=it,
        residual=residual,
        monotone_direction="none",
        branch_label="middle",
        certified_fluid=certified,
    )
    return _branch_point(spec, alpha, gamma, report, model)


def petit_canonical_transition(spec, alpha, domain, N_bracket=None, model=None,
                               gamma_gl=None, gamma_bracket=None):
    """Locate the vapor/droplet free-energy crossing at fixed mass.

    Bisects the mass for the sign change of F[vapor] - F[droplet]; at
    masses where the droplet collapses onto the vapor the gap is
    scored for the vapor side, so the mass window where no droplet
    exists is stepped over instead of mistaken for a crossing.  Needs
    the gas/liquid coexistence point for the embedding report; pass
    gamma_gl when it is already known, or gamma_bracket to have it
    located here (defaulting to a scan between the algebraic
    boundaries).
    """
    model = field._default_model(model)
    crit = droplet_criterion(spec, alpha)
    if not crit["fires"]:
        raise ValueError(
            "droplet criterion does not fire at this alpha; no droplet "
            "branch is expected"
        )
    D = functionals.volume_weights(domain)

    if gamma_gl is None:
        if gamma_bracket is None:
            atau = alpha * kernels.l1_norm_r3(spec)
            g_lo, g_hi = uniform.gamma_boundaries(atau)
            gamma_bracket = (g_lo + 1e-6, g_hi - 1e-6)
        grand = grand_canonical_transition(
            spec, alpha, domain, pressure_crossing_bracket(
                spec, alpha, domain, gamma_bracket, model
            ),
            model=model,
        )
        gamma_gl = grand.gamma_gl
        gas, liquid = grand.gas, grand.liquid
    else:
        gamma_gl = float(gamma_gl)
        gas = _branch_point(
            spec, alpha, gamma_gl,
            field.minimal_solution(spec, alpha, gamma_gl, domain, model=model),
            model,
        )
        liquid = _branch_point(
            spec, alpha, gamma_gl,
            field.maximal_solution(spec, alpha, gamma_gl, domain, model=model),
            model,
        )
    n_gas = gas.functionals.N
    n_liquid = liquid.functionals.N

    atau = alpha * kernels.l1_norm_r3(spec)
    gamma_hat = uniform.gamma_boundaries(atau)[1]
    hat_report = field.minimal_solution(
        spec, alpha, gamma_hat, domain, model=model
    )
    hat_mass = float(D @ hat_report.field.values)
    if N_bracket is None:
        N_bracket = (n_gas, hat_mass)
    n_lo, n_hi = float(N_bracket[0]), float(N_bracket[1])
    if not n_lo < n_hi:
        raise ValueError("N_bracket must be increasing")

    droplet_cache = []  # (N, values) for warm starts
    point_cache = {}
    gap_cache = {}
    vapor_gamma = [gamma_gl]

    def vapor_at(n):
        # the vapor mass peaks at gamma_hat; solving there directly
        # avoids a secant against the fold
        if abs(n - hat_mass) <= 1e-9 * max(1.0, hat_mass):
            return _branch_point(spec, alpha, gamma_hat, hat_report, model)
        point = constrained_solve(
            spec, alpha, domain, n, "minimal", model=model,
            gamma_seed=vapor_gamma[0],
        )
        vapor_gamma[0] = point.gamma
        return point

    def droplet_at(n):
        if droplet_cache:
            nearest = min(droplet_cache, key=lambda item: abs(item[0] - n))
            seed = field.DensityField(domain, nearest[1])
        else:
            seed = None
        return droplet_solve(
            spec, alpha, domain, n, start=seed, model=model,
            check_collapse=False,
        )

    def gap(n):
        if n in gap_cache:
            return gap_cache[n]
        vapor = vapor_at(n)
        droplet = droplet_at(n)
        sep = float(np.max(np.abs(
            droplet.solution.field.values - vapor.solution.field.values
        )))
        if sep < 1e-6:
            # no droplet at this mass; score for the vapor side, and do
            # not let the collapsed profile seed later droplet solves
            point_cache[n] = (vapor, None)
            value = -1e-3 * max(1.0, abs(vapor.functionals.F))
        else:
            droplet_cache.append((n, droplet.solution.field.values))
            point_cache[n] = (vapor, droplet)
            value = vapor.functionals.F - droplet.functionals.F
        gap_cache[n] = value
        return value

    gap_lo, gap_hi = gap(n_lo), gap(n_hi)
    if gap_lo == 0.0 or gap_hi == 0.0 or (gap_lo < 0.0) == (gap_hi < 0.0):
        raise ValueError(
            "free-energy gap does not change sign over the mass bracket"
        )
    n_vd = float(brentq(gap, n_lo, n_hi, xtol=1e-4, rtol=8.9e-16))
    gap(n_vd)
    vapor, droplet = point_cache[n_vd]
    if droplet is None:
        raise BranchLostError("droplet branch unavailable at the crossing")

    # polish the crossing with the known slope dF/dN = Gamma per branch
    for _ in range(8):
        fgap = vapor.functionals.F - droplet.functionals.F
        scale = max(1.0, abs(vapor.functionals.F))
        if abs(fgap) <= 1e-8 * scale:
            break
        slope = vapor.gamma - droplet.gamma
        n_vd -= fgap / slope
        gap(n_vd)
        vapor, droplet = point_cache[n_vd]
        if droplet is None:
            raise BranchLostError("droplet branch unavailable at the crossing")
    else:
        raise RuntimeError("free-energy gap failed to close at the crossing")

    return PetitTransition(
        N_vd=n_vd,
        vapor=vapor,
        droplet=droplet,
        gas=gas,
        liquid=liquid,
        gamma_gl=gamma_gl,
        delta_Gamma=droplet.gamma - vapor.gamma,
        delta_E=droplet.functionals.E - vapor.functionals.E,
        delta_S=droplet.functionals.S - vapor.functionals.S,
        embedding_ok=bool(n_gas <= n_vd < n_liquid),
        crossings=rearrangement_intersections(
            vapor.solution.field, droplet.solution.field
        ),
    )


def pressure_crossing_bracket(spec, alpha, domain, gamma_bracket,
                              model=None, points=9):
    """Scan the bracket for a pressure-gap sign change between gammas
    where the launches are genuinely distinct; where they coincide
    the gap is quadrature noise and must not count as a sign."""
    grid = np.linspace(gamma_bracket[0], gamma_bracket[1], points)

    def gap(g):
        lo = field.minimal_solution(spec, alpha, g, domain, model=model)
        hi = field.maximal_solution(spec, alpha, g, domain, model=model)
        sep = float(np.max(np.abs(hi.field.values - lo.field.values)))
        value = (
            functionals.pressure_functional(spec, alpha, g, hi.field, model=model)
            - functionals.pressure_functional(spec, alpha, g, lo.field, model=model)
        )
        return value, sep

    previous = gap(grid[0])
    prev_g = grid[0]
    for right in grid[1:]:
        current = gap(right)
        if (
            previous[1] >= 1e-7 and current[1] >= 1e-7
            and (previous[0] < 0.0) != (current[0] < 0.0)
        ):
            return (float(prev_g), float(right))
        if current[1] >= 1e-7:
            previous, prev_g = current, right
    raise ValueError(
        "no pressure-gap sign change between distinct-branch gammas "
        "inside the bracket"
    )


def decreasing_rearrangement(fld):
    """Field values sorted largest first, paired with their panel volumes.

    The pair list represents the symmetric-decreasing rearrangement as
    a step function of enclosed volume; any integral of a composition
    f(eta) is preserved exactly because only the ordering changes.
    """
    weights = functionals.volume_weights(fld.domain)
    order = np.argsort(fld.values, kind="stable")[::-1]
    return fld.values[order], weights[order]


def rearrangement_intersections(field_a, field_b):
    """Count transversal crossings of two decreasing rearrangements.

    Both step functions are compared on the merged enclosed-volume
    grid; segments where they agree to rounding are skipped, so
    tangential contact does not count.
    """
    dom_a, dom_b = field_a.domain, field_b.domain
    if dom_a.n != dom_b.n or not np.allclose(dom_a.nodes, dom_b.nodes):
        raise ValueError("fields must share one domain")
    val_a, w_a = decreasing_rearrangement(field_a)
    val_b, w_b = decreasing_rearrangement(field_b)
    cum_a = np.cumsum(w_a)
    cum_b = np.cumsum(w_b)
    edges = np.unique(np.concatenate(([0.0], cum_a, cum_b)))
    mids = 0.5 * (edges[:-1] + edges[1:])
    step_a = val_a[np.minimum(np.searchsorted(cum_a, mids), len(val_a) - 1)]
    step_b = val_b[np.minimum(np.searchsorted(cum_b, mids), len(val_b) - 1)]
    diff = step_a - step_b
    tiny = 1e-11 * max(1.0, float(np.max(np.abs(diff), initial=0.0)))
    signs = np.sign(diff[np.abs(diff) > tiny])
    if signs.size == 0:
        return 0
    return int(np.count_nonzero(np.diff(signs) != 0.0))
