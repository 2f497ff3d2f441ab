"""Root-system, Weyl-group and metric data for the Cartan subspace of sl(d,R).

Cartan vectors are length-d coordinate arrays with zero sum.  The closed
positive chamber consists of vectors with non-increasing coordinates.  All
lengths are measured in the Killing norm, normalized as

    <X, Y> = 2d * trace(XY)   on traceless diagonal matrices,

so ``killing_norm(y) = sqrt(2d * sum(y_i^2))``.  Linear functionals on the
Cartan subspace are stored as coefficient arrays ``c`` acting by ``c @ y``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import NumericError, ParameterError, PreconditionError

ZERO_SUM_TOL = 1e-9
CHAMBER_TOL = 1e-9

# Agreement required between the optimization and closed-form values of the
# growth exponents; a larger discrepancy means a regression somewhere.
OPT_AGREE_TOL = 1e-9


def _as_vector(y, d: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (d,):
        raise PreconditionError(f"expected a length-{d} Cartan vector, got shape {y.shape}")
    return y


class RootSystemA:
    """Static data of the type-A root system in dimension d (sl(d,R))."""

    def __init__(self, d: int):
        if d < 2:
            raise ParameterError(f"dimension must be >= 2, got {d}")
        self.d = d
        self.killing_scale = 2 * d

        # positive roots y_i - y_j, i < j, multiplicity 1 each
        self.positive_roots = []
        for i in range(d):
            for j in range(i + 1, d):
                c = np.zeros(d)
                c[i], c[j] = 1.0, -1.0
                self.positive_roots.append(c)
        self.multiplicities = [1] * len(self.positive_roots)

        # simple roots y_i - y_{i+1}
        self.simple_roots = [self.positive_roots_pair(i, i + 1) for i in range(d - 1)]

        # fundamental weights y_1 + ... + y_k
        self.fundamental_weights = []
        for k in range(1, d):
            c = np.zeros(d)
            c[:k] = 1.0
            self.fundamental_weights.append(c)

        # half the sum of positive roots
        self.rho = 0.5 * np.sum(self.positive_roots, axis=0)
        self.two_rho = 2.0 * self.rho

    def positive_roots_pair(self, i: int, j: int) -> np.ndarray:
        c = np.zeros(self.d)
        c[i], c[j] = 1.0, -1.0
        return c

    # ---------------------------------------------------------------- metric

    def check_traceless(self, y) -> np.ndarray:
        y = _as_vector(y, self.d)
        scale = max(1.0, float(np.max(np.abs(y))))
        if abs(float(np.sum(y))) > ZERO_SUM_TOL * scale:
            raise PreconditionError(f"Cartan vector must have zero coordinate sum, got {y}")
        return y

    def killing_norm(self, y) -> float:
        y = self.check_traceless(y)
        return float(np.sqrt(self.killing_scale * np.dot(y, y)))

    def killing_inner(self, x, y) -> float:
        x = self.check_traceless(x)
        y = self.check_traceless(y)
        return float(self.killing_scale * np.dot(x, y))

    def dual_norm(self, c) -> float:
        """Killing-dual norm of a linear functional: max of c.y on the unit ball."""
        c = _as_vector(c, self.d)
        c0 = c - np.mean(c)
        return float(np.linalg.norm(c0) / np.sqrt(self.killing_scale))

    def dual_vector(self, c) -> np.ndarray:
        """Unit Cartan vector maximizing the functional c on the Killing sphere."""
        c = _as_vector(c, self.d)
        c0 = c - np.mean(c)
        n = np.linalg.norm(c0)
        if n == 0.0:
            raise ParameterError("zero functional has no maximizing direction")
        return c0 / (n * np.sqrt(self.killing_scale))

    # --------------------------------------------------------------- chamber

    def in_closed_chamber(self, y, tol: float = CHAMBER_TOL) -> bool:
        y = self.check_traceless(y)
        scale = max(1.0, float(np.max(np.abs(y))))
        return bool(np.all(np.diff(y) <= tol * scale))

    def chamber_sort(self, y) -> np.ndarray:
        """Weyl representative: coordinates sorted non-increasingly."""
        y = self.check_traceless(y)
        return np.sort(y)[::-1]

    def wall_distance(self, y) -> float:
        """Killing distance from a chamber vector to the chamber boundary.

        Equals min over simple roots of the point-to-hyperplane distance
        alpha(y) / ||alpha||_*, which in type A is sqrt(d) * min_i alpha_i(y).
        """
        y = self.check_traceless(y)
        if not self.in_closed_chamber(y):
            raise PreconditionError(f"wall_distance needs a closed-chamber vector, got {y}")
        vals = [max(0.0, float(c @ y)) / self.dual_norm(c) for c in self.simple_roots]
        return min(vals)

    def opposition(self, y) -> np.ndarray:
        """The involution reversing and negating coordinates; preserves the chamber."""
        y = self.check_traceless(y)
        return -y[::-1]

    def weyl_group(self):
        """Coordinate permutations, as index tuples."""
        return list(itertools.permutations(range(self.d)))

    def reversal_frame(self) -> np.ndarray:
        """Special-orthogonal permutation frame implementing the opposition.

        Conjugation by this frame maps exp(y) to exp(reverse(y)); the sign of
        one antidiagonal entry is flipped when needed to land in SO(d).
        """
        d = self.d
        k = np.zeros((d, d))
        for i in range(d):
            k[d - 1 - i, i] = 1.0
        if np.linalg.det(k) < 0:
            k[:, 0] *= -1.0
        return k

    # ------------------------------------------------------ growth exponents

    def _max_linear_on_sphere(self, c) -> tuple[float, np.ndarray]:
        """Maximize a linear functional on the Killing unit sphere.

        Projected-gradient ascent from two deterministic seeds plus the
        analytic candidate proportional to (1, 0, ..., 0, -1); the three
        results and the closed-form dual norm must agree to OPT_AGREE_TOL.
        """
        c = _as_vector(c, self.d)
        closed = self.dual_norm(c)
        if closed == 0.0:
            return 0.0, np.zeros(self.d)

        def project_sphere(y):
            y = y - np.mean(y)
            n = np.sqrt(self.killing_scale * np.dot(y, y))
            if n < 1e-300:
                y = self.dual_vector(c)
                return y
            return y / n

        # Seeds are nudged toward the analytic candidate so that none sits
        # exactly on the antipodal critical point, where the tangent gradient
        # vanishes and ascent could not move.
        analytic = np.zeros(self.d)
        analytic[0], analytic[-1] = 1.0, -1.0
        nudge = 1e-3 * project_sphere(analytic)
        seeds = [
            project_sphere(np.cos(np.arange(self.d) + 1.0) + nudge),
            project_sphere(np.sin(2.0 * np.arange(self.d) + 0.5) + nudge),
            project_sphere(analytic),
        ]
        grad = (c - np.mean(c)) / self.killing_scale
        results = []
        for y in seeds:
            for _ in range(500):
                if float(c @ -y) > float(c @ y):
                    # escape the antipodal critical point (the only other one
                    # for a linear functional; in d=2 the sphere is just S^0)
                    y = -y
                tangent = grad - (self.killing_scale * np.dot(grad, y)) * y
                tnorm = np.sqrt(self.killing_scale * np.dot(tangent, tangent))
                if tnorm < 1e-14 * max(closed, 1.0):
                    break
                step = 1.0 / max(closed, 1e-12)
                value = float(c @ y)
                while step > 1e-18:
                    y_next = project_sphere(y + step * tangent)
                    if float(c @ y_next) > value:
                        break
                    step *= 0.5
                y = y_next
            results.append((float(c @ y), y))
        best_val, best_y = max(results, key=lambda r: r[0])
        spread = max(abs(v - closed) for v, _ in results)
        if spread > OPT_AGREE_TOL or abs(best_val - closed) > OPT_AGREE_TOL:
            raise NumericError(
                f"sphere-maximum optimization disagrees with closed form: {results} vs {closed}"
            )
        return best_val, best_y

    def delta_zero(self) -> float:
        """Volume growth exponent: max of twice rho over the Killing unit ball."""
        val, _ = self._max_linear_on_sphere(self.two_rho)
        return val

    def delta_zero_direction(self) -> np.ndarray:
        _, y = self._max_linear_on_sphere(self.two_rho)
        return y

    def levi_delta0(self, theta) -> float:
        """Growth exponent of the Levi factor selected by a simple-root subset.

        ``theta`` is a collection of simple-root indices (0-based).  The
        relevant root set is the positive roots supported entirely on the
        complement of theta; the exponent is the max of their sum over the
        unit ball.  theta = empty recovers delta_zero, theta = all gives 0.
        """
        theta = frozenset(theta)
        if not theta.issubset(range(self.d - 1)):
            raise ParameterError(f"theta must be a subset of simple-root indices, got {theta}")
        complement = set(range(self.d - 1)) - theta
        total = np.zeros(self.d)
        for root in self.positive_roots:
            support = self._simple_support(root)
            if support.issubset(complement):
                total += root
        if not np.any(total):
            return 0.0
        val, _ = self._max_linear_on_sphere(total)
        return val

    def _simple_support(self, root) -> set:
        """Indices of simple roots appearing in a positive root y_i - y_j."""
        i = int(np.argmax(root))
        j = int(np.argmin(root))
        return set(range(i, j))

    def c_gap(self) -> float:
        """Uniform gap: min over nonempty theta of delta_zero - levi_delta0."""
        d0 = self.delta_zero()
        gaps = []
        indices = list(range(self.d - 1))
        for r in range(1, len(indices) + 1):
            for theta in itertools.combinations(indices, r):
                gaps.append(d0 - self.levi_delta0(theta))
        gap = min(gaps)
        if gap <= 0.0:
            raise NumericError(f"uniform Levi gap must be positive, got {gap}")
        return gap

    def c_a(self) -> float:
        """Comparison constant between sup_k |chi_k| and the Killing norm.

        Smallest C >= 1 with (1/C)||y|| <= sup_k |chi_k(y)| <= C ||y||.  The
        upper ratio is max_k of the dual norm of chi_k; the lower one is
        attained at a vertex of the polytope { |chi_k(y)| <= 1 for all k }.
        """
        upper = max(self.dual_norm(chi) for chi in self.fundamental_weights)
        worst = 0.0
        n = self.d - 1
        chi_matrix = np.array(self.fundamental_weights)  # (d-1, d)
        ones = np.ones((1, self.d))
        system = np.vstack([chi_matrix, ones])
        for signs in itertools.product((-1.0, 1.0), repeat=n):
            rhs = np.append(np.array(signs), 0.0)
            y = np.linalg.solve(system, rhs)
            worst = max(worst, self.killing_norm(y))
        lower = 1.0 / worst
        return max(upper, 1.0 / lower, 1.0)


@lru_cache(maxsize=None)
def root_system(d: int) -> RootSystemA:
    return RootSystemA(d)


def for_group(name: str) -> RootSystemA:
    """Resolve a CLI group name (sl2, sl3, ... slN) to its root system."""
    name = name.strip().lower()
    if not name.startswith("sl"):
        raise ParameterError(f"unknown group {name!r}; expected sl2 or sl3")
    try:
        d = int(name[2:])
    except ValueError:
        raise ParameterError(f"unknown group {name!r}; expected sl2 or sl3") from None
    if d < 2:
        raise ParameterError(f"unknown group {name!r}; expected sl2 or sl3")
    return root_system(d)
