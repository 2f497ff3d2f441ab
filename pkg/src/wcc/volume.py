"""Harish-Chandra volume engine for ball and parallelotope chamber domains.

The density integrated over a chamber region is  prod_roots sinh(alpha(Y)),
against the Lebesgue measure normalized by the Killing norm.  Everything is
computed in log space (Gauss-Legendre with node doubling), so large t only
costs exponent bookkeeping, never overflow.  Parallelotope domains also get
the exact finite expansion obtained by developing the sinh products into
exponentials in the simple-root dual coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from .errors import NumericError, ParameterError, PreconditionError
from .rootsys import RootSystemA, root_system

QUAD_REL_TOL = 1e-9
MAX_NODES = 3072
LOG_ZERO = -math.inf


# ------------------------------------------------------------------ domains


@dataclass(frozen=True)
class Domain:
    """Census/volume region in the closed chamber.

    ``kind`` is "ball" (Killing radius t) or "box" (dilated parallelotope
    with per-simple-root edge lengths).  ``regular_margin`` keeps only
    points with wall distance above the margin; ``slab`` keeps only points
    within ``slab`` of the walls.  The two filters are mutually exclusive.
    """

    kind: str
    t: float
    edges: tuple | None = None
    regular_margin: float | None = None
    slab: float | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "box"):
            raise ParameterError(f"domain kind must be 'ball' or 'box', got {self.kind!r}")
        if not self.t > 0:
            raise ParameterError(f"domain scale t must be positive, got {self.t}")
        if self.kind == "box":
            if self.edges is None or len(self.edges) == 0:
                raise ParameterError("box domain needs per-simple-root edge lengths")
            if any(e <= 0 for e in self.edges):
                raise ParameterError(f"box edges must be positive, got {self.edges}")
        if self.regular_margin is not None and self.slab is not None:
            raise ParameterError("regular_margin and slab are mutually exclusive")
        if self.slab is not None and not 0.0 < self.slab < self.t:
            raise ParameterError(f"slab must be in (0, t), got {self.slab}")
        if self.regular_margin is not None and self.regular_margin < 0.0:
            raise ParameterError("regular_margin must be nonnegative")

    def for_dimension(self, d: int) -> None:
        if self.kind == "box" and len(self.edges) != d - 1:
            raise ParameterError(
                f"box domain for d={d} needs {d - 1} edge lengths, got {len(self.edges)}"
            )

    def contains_cartan(self, rs: RootSystemA, a) -> bool:
        """Membership of a chamber vector, including the optional filters."""
        a = np.asarray(a, dtype=float)
        if self.kind == "ball":
            if rs.killing_norm(a) > self.t:
                return False
        else:
            self.for_dimension(rs.d)
            for edge, beta in zip(self.edges, rs.simple_roots):
                if float(beta @ a) > self.t * edge:
                    return False
        if self.regular_margin is not None:
            return rs.wall_distance(a) > self.regular_margin
        if self.slab is not None:
            return rs.wall_distance(a) <= self.slab
        return True

    def max_top_weight(self, rs: RootSystemA) -> float:
        """Sup of the top fundamental weight (log of the largest singular
        value) over the unfiltered domain; drives integer entry bounds."""
        chi1 = rs.fundamental_weights[0]
        if self.kind == "ball":
            return self.t * rs.dual_norm(chi1)
        self.for_dimension(rs.d)
        duals = _dual_basis(rs)
        return self.t * sum(
            e * max(0.0, float(chi1 @ u)) for e, u in zip(self.edges, duals)
        )


@dataclass
class VolumeResult:
    value: float
    log_value: float
    method: str
    error_estimate: float
    exponent_data: dict | None = None
    extras: dict = field(default_factory=dict)


def _finish(log_value: float, method: str, error: float, **extras) -> VolumeResult:
    value = math.exp(log_value) if log_value < 700.0 else math.inf
    return VolumeResult(value, log_value, method, error, extras=extras or {})


# --------------------------------------------------------------- integrands


def _log_sinh(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, LOG_ZERO)
    small = (x > 0) & (x <= 20.0)
    large = x > 20.0
    out[small] = np.log(np.sinh(x[small]))
    out[large] = x[large] + np.log1p(-np.exp(-2.0 * x[large])) - math.log(2.0)
    return out


def log_hc_integrand(rs: RootSystemA, ys: np.ndarray) -> np.ndarray:
    """Log of the Harish-Chandra density at chamber points (rows of ys)."""
    ys = np.atleast_2d(ys)
    total = np.zeros(ys.shape[0])
    for root, mult in zip(rs.positive_roots, rs.multiplicities):
        total = total + mult * _log_sinh(ys @ root)
    return total


def hc_integrand(rs_or_d, y) -> float:
    """Harish-Chandra density at one chamber point; zero on the walls."""
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    y = rs.check_traceless(y)
    if not rs.in_closed_chamber(y):
        raise PreconditionError(f"integrand is defined on the closed chamber, got {y}")
    val = log_hc_integrand(rs, y[None, :])[0]
    return 0.0 if val == LOG_ZERO else math.exp(val)


def log_two_rho_integrand(rs: RootSystemA, ys: np.ndarray) -> np.ndarray:
    ys = np.atleast_2d(ys)
    return ys @ rs.two_rho


_INTEGRANDS = {"hc": log_hc_integrand, "two_rho": log_two_rho_integrand}


# ---------------------------------------------------- chamber geometry bits


def _ortho_basis(rs: RootSystemA) -> np.ndarray:
    """Killing-orthonormal basis rows of the traceless subspace."""
    raw = []
    for k in range(1, rs.d):
        v = np.zeros(rs.d)
        v[:k] = 1.0
        v[k] = -float(k)
        raw.append(v)
    basis = []
    for v in raw:
        for b in basis:
            v = v - rs.killing_inner(v, b) * b
        v = v / rs.killing_norm(v)
        basis.append(v)
    return np.array(basis)


def _dual_basis(rs: RootSystemA) -> list[np.ndarray]:
    """Traceless vectors u_beta with beta'(u_beta) = delta."""
    duals = []
    system = np.vstack([np.array(rs.simple_roots), np.ones(rs.d)])
    for i in range(rs.d - 1):
        rhs = np.zeros(rs.d)
        rhs[i] = 1.0
        duals.append(np.linalg.solve(system, rhs))
    return duals


def _chamber_arc(rs: RootSystemA) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Polar frame for d=3: orthonormal (b1, b2) with b1 interior, and the
    angle window of the chamber."""
    basis = _ortho_basis(rs)
    b1 = rs.dual_vector(rs.two_rho)
    b2 = basis[1] - rs.killing_inner(basis[1], b1) * b1
    b2 = b2 / rs.killing_norm(b2)

    def all_roots_nonneg(theta):
        u = math.cos(theta) * b1 + math.sin(theta) * b2
        return all(float(c @ u) >= -1e-15 for c in rs.simple_roots)

    def boundary(side):
        lo, hi = 0.0, side * math.pi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if all_roots_nonneg(mid):
                lo = mid
            else:
                hi = mid
        return lo

    return b1, b2, boundary(-1.0), boundary(+1.0)


def _wall_scale(rs: RootSystemA, direction: np.ndarray) -> float:
    """Wall distance of a unit direction (wall(r u) = r * wall(u))."""
    return min(
        max(0.0, float(c @ direction)) / rs.dual_norm(c) for c in rs.simple_roots
    )


def max_wall_distance(rs: RootSystemA, domain: Domain) -> float:
    """Largest wall distance attained on the unfiltered domain."""
    if domain.kind == "ball":
        if rs.d == 2:
            return domain.t
        b1, b2, lo, hi = _chamber_arc(rs)
        thetas = np.linspace(lo, hi, 2001)
        dirs = np.outer(np.cos(thetas), b1) + np.outer(np.sin(thetas), b2)
        return domain.t * max(_wall_scale(rs, u) for u in dirs)
    domain.for_dimension(rs.d)
    duals = _dual_basis(rs)
    corners = itertools.product(*[(0.0, domain.t * e) for e in domain.edges])
    best = 0.0
    for corner in corners:
        y = sum(c * u for c, u in zip(corner, duals))
        best = max(best, rs.wall_distance(np.asarray(y)))
    return best


# ------------------------------------------------------ quadrature drivers


def _converge(evaluate, start_nodes: int = 24, rel_tol: float = QUAD_REL_TOL):
    """Double node counts until successive log values agree to rel_tol."""
    n = start_nodes
    prev = evaluate(n)
    while n <= MAX_NODES:
        n *= 2
        cur = evaluate(n)
        if prev == LOG_ZERO and cur == LOG_ZERO:
            return cur, 0.0
        delta = abs(cur - prev) if np.isfinite(cur) and np.isfinite(prev) else math.inf
        if delta < rel_tol:
            return cur, delta
        prev = cur
    raise NumericError(f"quadrature did not converge below {rel_tol} by {MAX_NODES} nodes")


def _log_quad_1d(log_density, lo: float, hi: float, rel_tol=QUAD_REL_TOL):
    if hi <= lo:
        return LOG_ZERO, 0.0

    def evaluate(n):
        x, w = leggauss(n)
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        logw = np.log(0.5 * (hi - lo) * w)
        return float(logsumexp(log_density(u) + logw))

    return _converge(evaluate, rel_tol=rel_tol)


def _log_quad_2d(log_density, lo1, hi1, lo2_fn, hi2_fn, rel_tol=QUAD_REL_TOL):
    """Iterated integral with inner bounds depending on the outer variable."""
    if hi1 <= lo1:
        return LOG_ZERO, 0.0

    def evaluate(n):
        x, w = leggauss(n)
        u = 0.5 * (hi1 - lo1) * x + 0.5 * (hi1 + lo1)
        logw_u = np.log(0.5 * (hi1 - lo1) * w)
        pieces = []
        for ui, lwi in zip(u, logw_u):
            lo2, hi2 = lo2_fn(ui), hi2_fn(ui)
            if hi2 <= lo2:
                continue
            v = 0.5 * (hi2 - lo2) * x + 0.5 * (hi2 + lo2)
            logw_v = np.log(0.5 * (hi2 - lo2) * w)
            vals = log_density(np.full_like(v, ui), v)
            pieces.append(logsumexp(vals + logw_v) + lwi)
        if not pieces:
            return LOG_ZERO
        return float(logsumexp(pieces))

    return _converge(evaluate, rel_tol=rel_tol)


# --------------------------------------------------------- region integrals


def _region_log_integral(
    rs: RootSystemA,
    domain: Domain,
    integrand: str,
    margin: float = 0.0,
    rel_tol: float = QUAD_REL_TOL,
) -> float:
    """Log integral over the domain restricted to wall distance >= margin."""
    logf = _INTEGRANDS[integrand]
    d = rs.d
    if domain.kind == "ball":
        t = domain.t
        if d == 2:
            b1 = rs.dual_vector(rs.two_rho)

            def density(u):
                return logf(rs, np.outer(u, b1))

            lo = max(0.0, margin)
            val, err = _log_quad_1d(density, lo, t, rel_tol)
            return val
        if d != 3:
            raise ParameterError("ball quadrature is shipped for d = 2 and 3")
        b1, b2, th_lo, th_hi = _chamber_arc(rs)

        def wall_of(theta):
            return _wall_scale(rs, math.cos(theta) * b1 + math.sin(theta) * b2)

        def refine(fn, a, b):
            # bisect a sign change of fn on [a, b]
            for _ in range(100):
                mid = 0.5 * (a + b)
                if fn(a) * fn(mid) <= 0:
                    b = mid
                else:
                    a = mid
            return 0.5 * (a + b)

        def split_points():
            """Theta pieces on which the inner radial bound is smooth.

            Splits where the nearest wall switches and where the trimmed
            window min(t, margin/w) starts clipping (w = margin/t).
            """
            grid = np.linspace(th_lo, th_hi, 2049)
            cuts = {th_lo, th_hi}
            alphas = [np.array(c) for c in rs.simple_roots]
            scaled = [
                np.array([float(a @ (math.cos(th) * b1 + math.sin(th) * b2)) / rs.dual_norm(a)
                          for th in grid])
                for a in alphas
            ]
            argmins = np.argmin(np.array(scaled), axis=0)
            for idx in np.nonzero(np.diff(argmins))[0]:
                i, j = argmins[idx], argmins[idx + 1]
                cuts.add(refine(
                    lambda th: (float(alphas[i] @ (math.cos(th) * b1 + math.sin(th) * b2)) / rs.dual_norm(alphas[i])
                                - float(alphas[j] @ (math.cos(th) * b1 + math.sin(th) * b2)) / rs.dual_norm(alphas[j])),
                    float(grid[idx]), float(grid[idx + 1]),
                ))
            if margin > 0.0:
                level = margin / t
                vals = np.min(np.array(scaled), axis=0) - level
                for idx in np.nonzero(np.diff(np.sign(vals)))[0]:
                    cuts.add(refine(lambda th: wall_of(th) - level,
                                    float(grid[idx]), float(grid[idx + 1])))
            return sorted(cuts)

        def density(theta, r):
            dirs = np.outer(np.cos(theta), b1) + np.outer(np.sin(theta), b2)
            ys = dirs * r[:, None]
            return logf(rs, ys) + np.log(r)

        pieces = []
        points = split_points() if margin > 0.0 else [th_lo, th_hi]
        for a, b in zip(points[:-1], points[1:]):
            if margin > 0.0:
                w_mid = wall_of(0.5 * (a + b))
                if w_mid <= margin / t:
                    continue  # window empty on this piece

                def r_lo(theta):
                    w = wall_of(theta)
                    if w <= 0.0:
                        return t
                    return min(t, margin / w)
            else:
                def r_lo(theta):
                    return 0.0

            val, _ = _log_quad_2d(density, a, b, r_lo, lambda _: t, rel_tol)
            if val != LOG_ZERO:
                pieces.append(val)
        return float(logsumexp(pieces)) if pieces else LOG_ZERO

    # box domain: simple-root dual coordinates make everything rectangular
    domain.for_dimension(d)
    duals = _dual_basis(rs)
    jac = _box_jacobian(rs, duals)
    wall_factors = [1.0 / rs.dual_norm(c) for c in rs.simple_roots]
    los = [margin / wf if margin > 0 else 0.0 for wf in wall_factors]
    his = [domain.t * e for e in domain.edges]
    if any(lo >= hi for lo, hi in zip(los, his)):
        return LOG_ZERO
    if d == 2:
        def density(z):
            return logf(rs, np.outer(z, duals[0])) + math.log(jac)

        val, _ = _log_quad_1d(density, los[0], his[0], rel_tol)
        return val
    if d == 3:
        u0, u1 = duals

        def density(z0, z1):
            ys = np.outer(z0, u0) + np.outer(z1, u1)
            return logf(rs, ys) + math.log(jac)

        val, _ = _log_quad_2d(density, los[0], his[0],
                              lambda _: los[1], lambda _: his[1], rel_tol)
        return val
    raise ParameterError("box quadrature is shipped for d = 2 and 3")


def _box_jacobian(rs: RootSystemA, duals) -> float:
    basis = _ortho_basis(rs)
    cols = np.array([[rs.killing_inner(u, b) for b in basis] for u in duals]).T
    return abs(float(np.linalg.det(cols)))


def _log_sub(log_a: float, log_b: float) -> float:
    """log(exp(log_a) - exp(log_b)) with the usual guards."""
    if log_b == LOG_ZERO:
        return log_a
    if log_b >= log_a:
        return LOG_ZERO
    return log_a + math.log1p(-math.exp(log_b - log_a))


# ------------------------------------------------------------- ball volume


def closed_form_ball_d2(t: float) -> float:
    """Exact d=2 ball volume: sqrt(2) (cosh(t / sqrt 2) - 1)."""
    return math.sqrt(2.0) * (math.cosh(t / math.sqrt(2.0)) - 1.0)


def ball_volume(rs_or_d, t: float, rel_tol: float = QUAD_REL_TOL) -> VolumeResult:
    """Harish-Chandra volume of the chamber ball of Killing radius t."""
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    domain = Domain("ball", t)
    log_val = _region_log_integral(rs, domain, "hc", 0.0, rel_tol)
    result = _finish(log_val, "quadrature", rel_tol)
    if rs.d == 2:
        exact = closed_form_ball_d2(t)
        if exact > 0 and abs(result.value / exact - 1.0) > 1e-6:
            raise NumericError(
                f"d=2 ball quadrature disagrees with the closed form: {result.value} vs {exact}"
            )
        result.extras["closed_form"] = exact
    return result


def domain_volume(rs: RootSystemA, domain: Domain, rel_tol: float = QUAD_REL_TOL) -> VolumeResult:
    """Volume of a (possibly filtered) domain with the HC density."""
    full = _region_log_integral(rs, domain, "hc", 0.0, rel_tol)
    if domain.regular_margin is not None:
        log_val = _region_log_integral(rs, domain, "hc", domain.regular_margin, rel_tol)
    elif domain.slab is not None:
        reg = _region_log_integral(rs, domain, "hc", domain.slab, rel_tol)
        log_val = _log_sub(full, reg)
    else:
        log_val = full
    return _finish(log_val, "quadrature", rel_tol)


def fit_growth(rs: RootSystemA, t_grid, volumes_log) -> dict:
    """Exponential growth fit with the known polynomial prefactor removed.

    The ball volume grows like t^((dim A - 1)/2) e^(delta0 t); regressing
    log vol - ((dim A - 1)/2) log t on t targets the exponent itself (a
    plain slope carries a +(dim A - 1)/(2 t) bias).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    poly_exp = 0.5 * (rs.d - 2)
    ys = np.asarray(volumes_log, dtype=float) - poly_exp * np.log(t_grid)
    A = np.vstack([t_grid, np.ones_like(t_grid)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    return {
        "delta_fit": float(slope),
        "log_leading_coefficient": float(intercept),
        "poly_exponent_removed": poly_exp,
    }


# ------------------------------------------------------------- box volume


def _expansion_terms(rs: RootSystemA):
    """Signed exponential terms of the sinh-product development.

    Yields (sign, coefficient vector in the simple-root basis) for
    2^(sum of multiplicities) terms; the all-plus term is 2 rho.
    """
    roots = []
    for root, mult in zip(rs.positive_roots, rs.multiplicities):
        roots.extend([np.asarray(root)] * mult)
    simple = np.array(rs.simple_roots).T
    for signs in itertools.product((0, 1), repeat=len(roots)):
        omega = sum((-1.0 if s else 1.0) * r for s, r in zip(signs, roots))
        coeffs, *_ = np.linalg.lstsq(simple, omega, rcond=None)
        coeffs = np.round(coeffs).astype(int)
        if np.max(np.abs(simple @ coeffs - omega)) > 1e-9:
            raise NumericError("expansion term is not an integer root combination")
        yield (-1) ** sum(signs), coeffs


def box_volume(
    rs_or_d, t: float, edges, rel_tol: float = QUAD_REL_TOL, lower_edges=None
) -> VolumeResult:
    """Exact finite expansion of the parallelotope volume.

    Also returns the growth exponent (the sup of 2 rho over the
    parallelotope), the leading coefficient, and the exponent of the
    largest secondary term.

    ``lower_edges`` (experimental): shifted parallelotopes with per-root
    windows [t*lo, t*hi].  The expansion generalizes factor by factor; no
    acceptance target is attached to this mode.
    """
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    edges = tuple(float(e) for e in edges)
    if lower_edges is not None:
        lower_edges = tuple(float(e) for e in lower_edges)
        if len(lower_edges) != len(edges) or any(
            lo < 0 or lo >= hi for lo, hi in zip(lower_edges, edges)
        ):
            raise ParameterError("lower_edges must satisfy 0 <= lo < hi per root")
    domain = Domain("box", t, edges)
    domain.for_dimension(rs.d)

    duals = _dual_basis(rs)
    jac = _box_jacobian(rs, duals)
    n_mult = sum(rs.multiplicities)
    prefactor_log = math.log(jac) - n_mult * math.log(2.0)

    simple = np.array(rs.simple_roots).T
    two_rho_coeffs, *_ = np.linalg.lstsq(simple, rs.two_rho, rcond=None)
    two_rho_coeffs = np.round(two_rho_coeffs).astype(int)
    delta_p = float(sum(n * a for n, a in zip(two_rho_coeffs, edges)))

    # assemble log |term| with signs, while tracking the per-unit-t exponents
    lows = lower_edges if lower_edges is not None else tuple(0.0 for _ in edges)
    pos_logs, neg_logs = [], []
    exponents = set()
    for sign, coeffs in _expansion_terms(rs):
        factor_logs = []
        for n, a, lo in zip(coeffs, edges, lows):
            length = t * (a - lo)
            if n == 0:
                factor_logs.append([(0.0, math.log(length), 1)])
            else:
                # (e^{n t a} - e^{n t lo})/n  ->  two signed exponential pieces
                factor_logs.append(
                    [
                        (n * a, -math.log(abs(n)), 1 if n > 0 else -1),
                        (n * lo, -math.log(abs(n)), -1 if n > 0 else 1),
                    ]
                )
        for combo in itertools.product(*factor_logs):
            rate = sum(c[0] for c in combo)
            log_mag = sum(c[1] for c in combo) + t * rate + prefactor_log
            piece_sign = sign * int(np.prod([c[2] for c in combo]))
            exponents.add(round(rate, 12))
            (pos_logs if piece_sign > 0 else neg_logs).append(log_mag)

    log_pos = logsumexp(pos_logs) if pos_logs else LOG_ZERO
    log_neg = logsumexp(neg_logs) if neg_logs else LOG_ZERO
    log_val = _log_sub(float(log_pos), float(log_neg))
    if log_val == LOG_ZERO:
        raise NumericError("box expansion cancelled to zero; t too small for log-space")

    c_g = jac / (2.0**n_mult * float(np.prod([n for n in two_rho_coeffs])))
    secondary = sorted(x for x in exponents if x < delta_p - 1e-9)
    delta_minus = float(secondary[-1]) if secondary else 0.0
    return _finish(
        log_val,
        "closed_form",
        0.0,
        C_G=c_g,
        delta_P=delta_p,
        delta_minus=delta_minus,
        jacobian=jac,
        rho_coefficients=[int(n) for n in two_rho_coeffs],
    )


def box_volume_quadrature(rs_or_d, t: float, edges, rel_tol: float = QUAD_REL_TOL) -> VolumeResult:
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    domain = Domain("box", t, tuple(float(e) for e in edges))
    log_val = _region_log_integral(rs, domain, "hc", 0.0, rel_tol)
    return _finish(log_val, "quadrature", rel_tol)


# ------------------------------------------------------------ slab volumes


def slab_volume(
    rs_or_d,
    t: float,
    s: float,
    kind: str = "ball",
    edges=None,
    rel_tol: float = QUAD_REL_TOL,
) -> VolumeResult:
    """Upper-bound mass of the almost-singular slab and its ratio to the volume.

    Integrates exp(2 rho) over the part of the domain within wall distance s
    (the integrand dominating the HC density there) and reports the ratio to
    the true domain volume.
    """
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    if not 0.0 < s < t:
        raise ParameterError(f"slab parameter must satisfy 0 < s < t, got s={s}, t={t}")
    domain = Domain(kind, t, tuple(edges) if edges else None)
    full_tworho = _region_log_integral(rs, domain, "two_rho", 0.0, rel_tol)
    regular_tworho = _region_log_integral(rs, domain, "two_rho", s, rel_tol)
    log_slab = _log_sub(full_tworho, regular_tworho)
    vol = domain_volume(rs, domain, rel_tol)
    log_ratio = log_slab - vol.log_value
    return _finish(
        log_slab,
        "quadrature",
        rel_tol,
        log_ratio=log_ratio,
        ratio=math.exp(log_ratio) if log_ratio < 700 else math.inf,
        log_volume=vol.log_value,
    )


def slab_decay_sweep(
    rs_or_d,
    epsilons,
    t_grid,
    kind: str = "ball",
    edges=None,
    rel_tol: float = 1e-7,
) -> dict:
    """Fit the decay of the slab ratio at s = eps * t across a t sweep.

    The fitted exponent is the empirical counterpart of the (non-
    constructive) slab decay rate: log ratio regressed on -log volume.
    """
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    t_grid = list(t_grid)
    report = {"kind": kind, "t_grid": t_grid, "per_epsilon": {}}
    for eps in epsilons:
        rows = []
        for t in t_grid:
            res = slab_volume(rs, t, eps * t, kind, edges, rel_tol)
            rows.append(
                {
                    "t": t,
                    "log_ratio": res.extras["log_ratio"],
                    "log_volume": res.extras["log_volume"],
                }
            )
        log_ratios = np.array([r["log_ratio"] for r in rows])
        log_vols = np.array([r["log_volume"] for r in rows])
        A = np.vstack([log_vols, np.ones_like(log_vols)]).T
        (slope, _), *_ = np.linalg.lstsq(A, log_ratios, rcond=None)
        report["per_epsilon"][float(eps)] = {
            "rows": rows,
            "kappa_fit": float(-slope),
            "strictly_decreasing": bool(np.all(np.diff(log_ratios) < 0.0)),
        }
    return report


# --------------------------------------------------------- regularity probes


def lipschitz_probe(rs_or_d, kind: str, t_grid, eps_grid, edges=None) -> dict:
    """Estimate the local Lipschitz constant of log volume in t (t > 1)."""
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    if any(t <= 1.0 for t in t_grid):
        raise ParameterError("the Lipschitz regime needs t > 1")
    rows = []
    for t in t_grid:
        base = domain_volume(rs, Domain(kind, t, tuple(edges) if edges else None)).log_value
        for eps in eps_grid:
            bumped = domain_volume(
                rs, Domain(kind, t + eps, tuple(edges) if edges else None)
            ).log_value
            rows.append({"t": t, "eps": eps, "slope": (bumped - base) / eps})
    slopes = [r["slope"] for r in rows]
    return {
        "kind": kind,
        "rows": rows,
        "C": max(slopes),
        "finite": all(np.isfinite(slopes)),
    }


def well_rounded_probe(
    rs_or_d,
    kind: str,
    delta: float,
    t: float,
    eps: float,
    edges=None,
    n_samples: int = 2000,
    seed: int = 11,
) -> dict:
    """Stability of the wall-trimmed family under group-ball perturbations.

    (a) products u g v with chamber displacements of u, v at most eps/2 land
    in the family fattened by eps in both the scale and the wall margin (an
    exact consequence of the Cartan comparison bound, re-verified here by
    sampling);  (b) the fattened-minus-shrunk volume is at most C eps times
    the volume, with the fitted C reported.
    """
    from . import projections as pj

    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    if delta <= 0 or eps < 0:
        raise ParameterError("delta must be positive and eps nonnegative")
    edges_t = tuple(edges) if edges else None
    domain = Domain(kind, t, edges_t)

    vol_s = _region_log_integral(rs, domain, "hc", delta)
    if eps == 0.0:
        return {"volume_sandwich_C": 0.0, "samples_ok": True, "vol_S": vol_s,
                "vol_plus": vol_s, "vol_minus": vol_s, "n_samples": 0, "failures": 0}
    vol_plus = _region_log_integral(rs, Domain(kind, t + eps, edges_t), "hc", max(delta - eps, 0.0))
    vol_minus = _region_log_integral(rs, Domain(kind, t - eps, edges_t), "hc", delta + eps)
    diff = _log_sub(vol_plus, vol_minus)
    c_fit = math.exp(diff - vol_s) / eps if diff != LOG_ZERO else 0.0

    rng = np.random.default_rng(seed)
    failures = 0
    fat = Domain(kind, t + eps, edges_t)
    for _ in range(n_samples):
        y = _sample_chamber_point(rs, domain, delta, rng)
        g = pj.random_so(rs.d, rng) @ np.diag(np.exp(y)) @ pj.random_so(rs.d, rng)
        u = _small_displacement(rs, eps / 2.0, rng)
        v = _small_displacement(rs, eps / 2.0, rng)
        a = pj.cartan_vector(pj.GroupElement(u @ g @ v, check=False))
        if not (fat.contains_cartan(rs, a) and rs.wall_distance(a) >= delta - eps - 1e-9):
            failures += 1
    return {
        "volume_sandwich_C": c_fit,
        "vol_S": vol_s,
        "vol_plus": vol_plus,
        "vol_minus": vol_minus,
        "n_samples": n_samples,
        "failures": failures,
        "samples_ok": failures == 0,
    }


def _sample_chamber_point(rs: RootSystemA, domain: Domain, margin: float, rng) -> np.ndarray:
    for _ in range(10000):
        if domain.kind == "ball":
            basis = _ortho_basis(rs)
            u = rng.normal(size=rs.d - 1)
            u *= domain.t * rng.uniform() ** (1.0 / (rs.d - 1)) / np.linalg.norm(u)
            y = u @ basis
        else:
            duals = _dual_basis(rs)
            y = sum(rng.uniform(0, domain.t * e) * u for e, u in zip(domain.edges, duals))
        y = np.asarray(y)
        y = np.sort(y)[::-1]
        if domain.contains_cartan(rs, y) and rs.wall_distance(y) >= margin:
            return y
    raise NumericError("failed to sample a chamber point inside the trimmed domain")


def _small_displacement(rs: RootSystemA, radius: float, rng) -> np.ndarray:
    from . import projections as pj

    y = rng.normal(size=rs.d)
    y -= y.mean()
    norm = rs.killing_norm(y)
    if norm > 0:
        y *= rng.uniform(0.0, radius) / norm
    return pj.random_so(rs.d, rng) @ np.diag(np.exp(np.sort(y)[::-1])) @ pj.random_so(rs.d, rng)


def monte_carlo_volume(rs_or_d, domain: Domain, n_samples: int = 200000, seed: int = 3) -> dict:
    """Uniform-box Monte-Carlo estimate of the domain volume (sanity check)."""
    rs = rs_or_d if isinstance(rs_or_d, RootSystemA) else root_system(rs_or_d)
    rng = np.random.default_rng(seed)
    basis = _ortho_basis(rs)
    if domain.kind == "ball":
        box_lo = np.full(rs.d - 1, -domain.t)
        box_hi = np.full(rs.d - 1, domain.t)
    else:
        duals = _dual_basis(rs)
        corners = np.array(
            [
                [np.dot(sum(c * u for c, u in zip(corner, duals)), b * rs.killing_scale) for b in basis]
                for corner in itertools.product(*[(0.0, domain.t * e) for e in domain.edges])
            ]
        )
        box_lo, box_hi = corners.min(axis=0), corners.max(axis=0)
    coords = rng.uniform(box_lo, box_hi, size=(n_samples, rs.d - 1))
    ys = coords @ basis
    inside = np.array(
        [rs.in_closed_chamber(y) and domain.contains_cartan(rs, y) for y in ys]
    )
    vals = np.zeros(n_samples)
    if inside.any():
        vals[inside] = np.exp(log_hc_integrand(rs, ys[inside]))
    box_vol = float(np.prod(box_hi - box_lo))
    mean = vals.mean()
    std_err = vals.std(ddof=1) / math.sqrt(n_samples)
    return {"value": box_vol * mean, "std_err": box_vol * std_err, "n": n_samples}
