"""Radial container solver for the attractive hard-sphere gas.

Solves the fixed-point equation eta(r) = wp'(gamma - (alpha V*eta)(r))
on a ball B_R.  The 3D convolution against a radial kernel reduces to a
one-dimensional integral through the ring primitive of `kernels`, so a
single dense matrix turns the nonlocal equation into a map on node
values.  Monotone Picard iteration reaches the extremal solutions from
constant sub- and supersolutions; damped Newton reaches the unstable
branch inbetween; a handful of closed-form predicates settle existence,
uniqueness, and fluid-range membership a priori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import eos, kernels, uniform

__all__ = [
    "RadialDomain",
    "DensityField",
    "SolveReport",
    "PredicateReport",
    "make_domain",
    "constant_field",
    "apply_kernel",
    "convolve",
    "convolve_at",
    "picard_iterate",
    "minimal_solution",
    "maximal_solution",
    "subsolution_launch",
    "newton_solve",
    "predicates",
    "write_csv",
    "read_csv",
]

_GAMMA_FS = eos.GAMMA_FS
_FLUID_MARGIN = 1e-9  # strict margin for the certified-fluid flag
_RESIDUAL_TOL = 1e-9  # fixed-point residual required on top of the change test


@dataclass(eq=False)
class RadialDomain:
    """Composite quadrature grid on [0, R].

    nodes and weights integrate smooth functions of s against ds; the
    s^2 volume factor is applied by the caller.  edges carries the
    panel boundaries when the grid is panel-structured, which the
    convolution assembly needs to split integrands at their kink.
    """

    R: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray | None = None
    _rings: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.nodes.shape != (self.n,) or self.weights.shape != (self.n,):
            raise ValueError("nodes and weights must both have length n")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.nodes <= 0) or np.any(self.nodes >= self.R):
            raise ValueError("nodes must lie strictly inside (0, R)")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        third = float(self.weights @ self.nodes**2)
        if abs(third - self.R**3 / 3.0) > 1e-12 * self.R**3 / 3.0:
            raise ValueError("weights do not reproduce int_0^R s^2 ds")


def make_domain(R, n=512, panel=8):
    """Composite Gauss-Legendre grid: n/panel equal panels on [0, R]."""
    if n <= 0 or panel < 2 or n % panel:
        raise ValueError("n must be a positive multiple of the panel size")
    x, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(0.0, R, n // panel + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialDomain(R=float(R), n=n, nodes=nodes, weights=weights, edges=edges)


@dataclass(eq=False)
class DensityField:
    """Volume fraction per node; always strictly inside (0, 1)."""

    domain: RadialDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.n,):
            raise ValueError("values must match the domain's node count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if np.any(self.values <= 0.0) or np.any(self.values >= 1.0):
            raise ValueError("volume fractions must lie strictly in (0, 1)")


@dataclass(eq=False)
class SolveReport:
    """Outcome of one solve.

    certification is only set by maximal_solution: "fluid-ceiling" when
    the freezing constant itself was the supersolution, so the result
    is maximal among all fluid fields; "algebraic-ceiling" when only an
    algebraic root was available, certifying maximality below that root.
    """

    field: DensityField
    iterations: int
    residual: float
    monotone_direction: str  # up | down | none
    branch_label: str  # minimal | maximal | middle | other
    certified_fluid: bool
    certification: str = ""


@dataclass(frozen=True)
class PredicateReport:
    """A-priori yes/no facts about the solution set at (alpha, gamma)."""

    existence_sufficient: bool
    all_fluid_sufficient: bool
    no_nonfluid_sufficient: bool
    no_fluid_necessaryviolation: bool
    uniqueness_contraction: bool
    triple_candidate: bool


def constant_field(domain, value):
    """Constant density field on the given grid."""
    return DensityField(domain, np.full(domain.n, float(value)))


def _barycentric_rows(nodes, points):
    """Lagrange basis values L_j(points) for the given interpolation nodes."""
    bw = np.ones_like(nodes)
    for j in range(nodes.size):
        bw[j] = 1.0 / np.prod(np.delete(nodes[j] - nodes, j))
    diff = points[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-300, rtol=0.0)
    diff = np.where(exact, 1.0, diff)
    terms = bw[None, :] / diff
    rows = terms / terms.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if np.any(hit):
        rows[hit] = exact[hit].astype(float)
    return rows


def _ring_matrix(spec, domain, targets):
    """Matrix M with (M @ eta)(t) = -(V*eta)(t) for the ball B_R.

    Row t discretizes (2pi/t) int_0^R s eta(s) [prim(t+s) - prim(|t-s|)] ds.
    prim(|t-s|) has a kink at s = t whenever the kernel has a nonzero
    contact value s(-V(s)) at s = 0+, so the panel containing an interior
    target is re-integrated in two smooth halves against the panel's own
    Lagrange basis.  A zero target radius uses the limit row
    4 pi int s^2 (-V(s)) eta(s) ds instead of the 2pi/t reduction.
    """
    t = np.asarray(targets, dtype=float)
    s = domain.nodes
    w = domain.weights
    M = np.zeros((t.size, s.size))

    pos = t > 0.0
    if np.any(pos):
        tp = t[pos][:, None]
        ring = kernels.ring_primitive(spec, tp + s[None, :]) - kernels.ring_primitive(
            spec, np.abs(tp - s[None, :])
        )
        M[pos] = (2.0 * math.pi / tp) * w[None, :] * s[None, :] * ring
    if np.any(~pos):
        M[~pos] = 4.0 * math.pi * w * s**2 * (-kernels.kernel_eval(spec, s))

    if domain.edges is None:
        return M

    # panel split: targets strictly inside a panel see the |t-s| kink there
    panel = s.size // (domain.edges.size - 1)
    xg, wg = np.polynomial.legendre.leggauss(panel)
    idx = np.searchsorted(domain.edges, t, side="right") - 1
    for i in range(t.size):
        p = idx[i]
        if not 0 <= p < domain.edges.size - 1:
            continue
        a, b = domain.edges[p], domain.edges[p + 1]
        ti = t[i]
        if not a < ti < b:
            continue
        cols = slice(p * panel, (p + 1) * panel)
        pn = s[cols]
        row = np.zeros(panel)
        for lo, hi in ((a, ti), (ti, b)):
            if hi <= lo:
                continue
            xs = 0.5 * (hi + lo) + 0.5 * (hi - lo) * xg
            ws = 0.5 * (hi - lo) * wg
            ring = kernels.ring_primitive(spec, ti + xs) - kernels.ring_primitive(
                spec, np.abs(ti - xs)
            )
            row += (ws * xs * ring) @ _barycentric_rows(pn, xs)
        M[i, cols] = (2.0 * math.pi / ti) * row
    return M


def _self_ring(spec, domain):
    """Node-to-node convolution matrix, cached on the domain."""
    key = spec
    if key not in domain._rings:
        domain._rings[key] = _ring_matrix(spec, domain, domain.nodes)
    return domain._rings[key]


def apply_kernel(spec, alpha, domain, values):
    """alpha(-V * values) on the grid, for arbitrary node values.

    The density-field validation is skipped, so perturbations and other
    signed fields can reuse the same cached ring matrix.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return alpha * (_self_ring(spec, domain) @ np.asarray(values, dtype=float))


def convolve(spec, alpha, fld):
    """Attractive potential -(alpha V*eta) on the field's own grid; positive."""
    return apply_kernel(spec, alpha, fld.domain, fld.values)


def convolve_at(spec, alpha, fld, radii):
    """Attractive potential -(alpha V*eta) at arbitrary radii >= 0."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    r = np.asarray(radii, dtype=float)
    if np.any(r < 0):
        raise ValueError("radii must be non-negative")
    out = alpha * (_ring_matrix(spec, fld.domain, np.atleast_1d(r)) @ fld.values)
    return float(out[0]) if np.ndim(radii) == 0 else out


def _default_model(model):
    return eos.EosModel() if model is None else model


def picard_iterate(spec, alpha, gamma, eta0, max_iter=20000, tol=1e-10, model=None):
    """Fixed-point iteration eta -> wp'(gamma + alpha(-V*eta)).

    Stops only when the sup-norm change drops below tol AND the
    fixed-point residual drops below 1e-9; a stalled but unconverged
    sequence therefore runs into max_iter and raises instead of
    reporting false convergence.  The monotone direction is read off
    the first step.
    """
    model = _default_model(model)
    M = _self_ring(spec, eta0.domain)
    v = eta0.values.copy()
    direction = "none"
    for it in range(1, max_iter + 1):
        u = alpha * (M @ v)
        new = np.asarray(model.wp_prime(gamma + u, side="left"), dtype=float)
        if np.any(new >= 1.0) or np.any(new <= 0.0):
            raise ValueError("iteration left the volume-fraction range (0, 1)")
        change = float(np.max(np.abs(new - v)))
        if it == 1:
            scale = 1e-14 * max(1.0, float(np.max(np.abs(v))))
            if change <= scale:
                direction = "none"
            elif np.all(new >= v - scale):
                direction = "up"
            elif np.all(new <= v + scale):
                direction = "down"
        v = new
        if change < tol:
            u = alpha * (M @ v)
            res = float(
                np.max(np.abs(np.asarray(model.wp_prime(gamma + u, side="left")) - v))
            )
            if res < _RESIDUAL_TOL:
                certified = bool(np.max(gamma + u) < _GAMMA_FS - _FLUID_MARGIN)
                return SolveReport(
                    field=DensityField(eta0.domain, v),
                    iterations=it,
                    residual=res,
                    monotone_direction=direction,
                    branch_label="other",
                    certified_fluid=certified,
                )
    raise RuntimeError(f"no convergence within {max_iter} iterations")


def minimal_solution(spec, alpha, gamma, domain, model=None, max_iter=20000, tol=1e-10):
    """Pointwise smallest solution, grown from the constant wp'(gamma).

    The attraction only raises the argument of wp', so the constant
    wp'(gamma) is a subsolution and the iteration climbs monotonically
    to the minimal solution.
    """
    model = _default_model(model)
    start = constant_field(domain, float(model.wp_prime(gamma, side="left")))
    report = picard_iterate(
        spec, alpha, gamma, start, max_iter=max_iter, tol=tol, model=model
    )
    report.branch_label = "minimal"
    return report


def maximal_solution(spec, alpha, gamma, domain, model=None, max_iter=20000, tol=1e-10):
    """Pointwise largest solution below a constant algebraic supersolution.

    A constant c is a supersolution iff g2(c) >= gamma + alpha Phi c.
    In hard-sphere mode the freezing fraction 0.49 is used whenever it
    qualifies (certification "fluid-ceiling": maximal among all fluid
    fields); otherwise the largest algebraic root at slope alpha Phi
    that is still in the fluid range (certification "algebraic-ceiling":
    maximal below that root).  CS-extended mode always descends from
    the largest algebraic root, which bounds every solution.
    """
    model = _default_model(model)
    if model.mode == eos.MODE_IDEAL_GAS:
        raise ValueError("supersolution construction needs a hard-sphere branch")
    phi = kernels.phi_lambda(spec, domain.R)
    roots = uniform.solve_uniform(alpha * phi, gamma)
    if model.mode == eos.MODE_CS_EXTENDED:
        start_value, certification = roots.roots[-1], "algebraic-ceiling"
    elif gamma - _GAMMA_FS + alpha * phi * eos.ETA_FS_LO <= 0.0:
        start_value, certification = eos.ETA_FS_LO, "fluid-ceiling"
    else:
        fluid = [r for r in roots.roots if r <= eos.ETA_FS_LO + 1e-12]
        if not fluid:
            raise ValueError(
                "supersolution unavailable: no algebraic root in the fluid range"
            )
        start_value, certification = fluid[-1], "algebraic-ceiling"
    report = picard_iterate(
        spec,
        alpha,
        gamma,
        constant_field(domain, start_value),
        max_iter=max_iter,
        tol=tol,
        model=model,
    )
    report.branch_label = "maximal"
    report.certification = certification
    return report


def subsolution_launch(
    spec, alpha, gamma, domain, mu, sigma_grave, max_iter=20000, tol=1e-10
):
    """Monotone-up solve started from a shrunken-ball comparison field.

    The start is wp'(gamma + alpha etabar int_{shrunken ball} (-V)),
    where etabar is the smallest (mu="m") or largest (mu="M") root of
    the algebraic equation at slope alpha Psi of the ball shrunk by
    sigma_grave.  Both starts are subsolutions; mu="M" climbs past the
    minimal branch.  CS-extended equation of state throughout, and
    (alpha, gamma) must lie in the triple-solution bands of both the
    full ball's Phi and the shrunken ball's Psi.
    """
    if mu not in ("m", "M"):
        raise ValueError("mu must be 'm' or 'M'")
    if not 0.0 < sigma_grave <= 1.0:
        raise ValueError("sigma_grave must lie in (0, 1]")
    model = eos.EosModel(mode=eos.MODE_CS_EXTENDED)
    R = domain.R
    phi = kernels.phi_lambda(spec, R)
    psi = kernels.psi_lambda(
        spec, sigma_grave * 2.0 * R, sigma_grave**3 * 4.0 * math.pi * R**3 / 3.0
    )
    for tau in (phi, psi):
        if alpha * tau <= uniform.ALPHA_TAU_MIN:
            raise ValueError("alpha below the triple-solution region")
        lo, hi = uniform.gamma_boundaries(alpha * tau)
        if not lo < gamma < hi:
            raise ValueError("(alpha, gamma) outside the triple-solution region")

    roots = uniform.solve_uniform(alpha * psi, gamma)
    etabar = roots.roots[0] if mu == "m" else roots.roots[-1]
    shrunk = make_domain(sigma_grave * R, n=domain.n, panel=8)
    ones = constant_field(shrunk, etabar)
    u0 = convolve_at(spec, alpha, ones, domain.nodes)
    start = DensityField(
        domain, np.asarray(model.wp_prime(gamma + u0, side="left"), dtype=float)
    )
    report = picard_iterate(
        spec, alpha, gamma, start, max_iter=max_iter, tol=tol, model=model
    )
    report.branch_label = "minimal" if mu == "m" else "other"
    return report


def newton_solve(spec, alpha, gamma, eta0, tol=1e-12, max_iter=60, model=None,
                 callback=None):
    """Damped Newton on F(eta) = eta - wp'(gamma + alpha(-V*eta)).

    The Jacobian I - diag(wp'') alpha M is assembled densely, which the
    node counts in use comfortably allow.  Unlike Picard this also
    reaches iteration-unstable solutions, at quadratic rate near any
    root.  callback, if given, receives (iteration, residual) after
    every accepted step.
    """
    model = _default_model(model)
    M = alpha * _self_ring(spec, eta0.domain)
    v = eta0.values.copy()

    def resid(vec):
        u = M @ vec
        return vec - np.asarray(model.wp_prime(gamma + u, side="left")), u

    F, u = resid(v)
    norm = float(np.max(np.abs(F)))
    if callback is not None:
        callback(0, norm)
    for it in range(1, max_iter + 1):
        if norm < tol:
            u2 = M @ v
            certified = bool(np.max(gamma + u2) < _GAMMA_FS - _FLUID_MARGIN)
            return SolveReport(
                field=DensityField(eta0.domain, v),
                iterations=it - 1,
                residual=norm,
                monotone_direction="none",
                branch_label="other",
                certified_fluid=certified,
            )
        J = np.eye(v.size) - np.asarray(model.wp_double_prime(gamma + u))[:, None] * M
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("singular Jacobian in the density solve") from exc
        lam = 1.0
        while lam > 1e-6:
            cand = v + lam * step
            try:
                Fc, uc = resid(cand)
            except (ValueError, OverflowError):
                # candidate left the branch's invertible range; shorten
                lam *= 0.5
                continue
            nc = float(np.max(np.abs(Fc)))
            if nc < (1.0 - 0.25 * lam) * norm:
                v, F, u, norm = cand, Fc, uc, nc
                if callback is not None:
                    callback(it, norm)
                break
            lam *= 0.5
        else:
            raise RuntimeError("damped step failed to reduce the residual")
    raise RuntimeError(f"no convergence within {max_iter} Newton steps")


def predicates(spec, alpha, gamma, domain, model=None):
    """Closed-form a-priori facts about the solution set on this ball.

    existence_sufficient: the algebraic equation at slope alpha Phi has
    a root in the fluid range, so a constant supersolution exists and
    the extremal fluid solutions with it.  all_fluid_sufficient: the
    freezing constant is a supersolution, so every solution below it is
    fluid everywhere.  no_nonfluid_sufficient: even an fcc-packed field
    cannot push the argument past the kink, so no solution leaves the
    fluid branch.  no_fluid_necessaryviolation: already the pointwise
    lower bound wp'(gamma) pushes the center argument past the kink,
    ruling out certified-fluid solutions.  uniqueness_contraction: the
    fixed-point map is a sup-norm contraction.  triple_candidate: the
    whole-space argument bound keeps even fcc packing below the kink,
    the regime where three branches can coexist.
    """
    model = _default_model(model)
    phi = kernels.phi_lambda(spec, domain.R)
    try:
        root_small = uniform.solve_uniform(alpha * phi, gamma).roots[0]
    except ValueError:
        root_small = math.inf
    existence = root_small <= eos.ETA_FS_LO + 1e-12
    all_fluid = gamma - _GAMMA_FS + alpha * phi * eos.ETA_FS_LO <= 0.0
    no_nonfluid = gamma - _GAMMA_FS + alpha * phi * eos.ETA_FCC <= 0.0
    floor = float(model.wp_prime(gamma, side="left"))
    no_fluid = gamma - _GAMMA_FS + alpha * phi * floor >= 0.0
    contraction = existence and model.K_gamma_fs * alpha * phi < 1.0
    if spec.a_n > 0:
        triple = False  # Newton tail is not integrable over all of space
    else:
        triple = gamma + alpha * kernels.l1_norm_r3(spec) * eos.ETA_FCC <= _GAMMA_FS
    return PredicateReport(
        existence_sufficient=existence,
        all_fluid_sufficient=all_fluid,
        no_nonfluid_sufficient=no_nonfluid,
        no_fluid_necessaryviolation=no_fluid,
        uniqueness_contraction=contraction,
        triple_candidate=triple,
    )


def write_csv(path, fld, spec, alpha, gamma, branch_label="other"):
    """Serialize a density field with a self-describing '#' header."""
    lines = [
        f"# R={fld.domain.R!r}",
        f"# n={fld.domain.n}",
        "# spec=a_w={!r},a_y={!r},a_n={!r},varkappa={!r},kappa={!r}".format(
            spec.a_w, spec.a_y, spec.a_n, spec.varkappa, spec.kappa
        ),
        f"# alpha={float(alpha)!r}",
        f"# gamma={float(gamma)!r}",
        f"# branch_label={branch_label}",
        "r,eta",
    ]
    lines += [
        f"{r!r},{v!r}"
        for r, v in zip(fld.domain.nodes.tolist(), fld.values.tolist())
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Load a density field written by write_csv; returns (field, meta).

    The quadrature weights are not stored, so the grid is rebuilt from
    (R, n) and checked against the stored abscissae.
    """
    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line != "r,eta":
                a, b = line.split(",")
                rows.append((float(a), float(b)))
    kv = dict(part.split("=") for part in meta["spec"].split(","))
    meta["spec"] = kernels.KernelSpec(
        a_w=float(kv["a_w"]),
        a_y=float(kv["a_y"]),
        a_n=float(kv["a_n"]),
        varkappa=float(kv["varkappa"]),
        kappa=float(kv["kappa"]),
    )
    meta["alpha"] = float(meta["alpha"])
    meta["gamma"] = float(meta["gamma"])
    domain = make_domain(float(meta["R"]), n=int(meta["n"]))
    nodes = np.array([r for r, _ in rows])
    if nodes.size != domain.n or np.max(np.abs(nodes - domain.nodes)) > 1e-12 * domain.R:
        raise ValueError("stored abscissae do not match the rebuilt grid")
    values = np.array([v for _, v in rows])
    return DensityField(domain, values), meta
