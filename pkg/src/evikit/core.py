"""Metric-energy systems: the shared contract for every concrete space.

A space is a complete geodesic metric space (E, d) carrying a lower
semi-continuous energy functional E -> (-inf, +inf] whose gradient flow
satisfies the evolution variational inequality with modulus kappa:

    1/2 d+/dt d^2(gamma(t), rho) <= E(rho) - E(gamma(t)) - kappa/2 d^2(gamma(t), rho)

Every implemented space is isometric to a (convex subset of a) Euclidean
space through a global chart:

    d(p, q) = chart_scale * || chart(p) - chart(q) ||_2

which makes geodesics chart-linear and turns minimizing-movement steps
into projected descent in flat coordinates.  The local slope

    |dE|(p) = limsup_{q -> p} (E(p) - E(q))^+ / d(p, q)

has a closed form on each space; a definitional verifier based on
shrinking geodesic spheres is provided for cross-checks.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class UsageError(ValueError):
    """Caller broke an interface contract (wrong dimension, bad parameter)."""


class DomainError(ValueError):
    """A point lies outside the domain a space can represent."""


class ConstructionError(ValueError):
    """A descriptor invariant failed; the message names the predicate."""


class NumericalError(RuntimeError):
    """An iterative solver failed; carries the final residual."""

    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(message)
        self.residual = residual


class UnsupportedFlowError(RuntimeError):
    """No closed-form flow is registered for this space/state family."""


# ---------------------------------------------------------------------------
# Extended reals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=False)
class ExtendedReal:
    """A real number or the distinguished value +inf, as a tagged value.

    Energies take values in (-inf, +inf]; the tag keeps +inf out of the
    finite arithmetic paths.  Addition propagates +inf, comparisons are
    total, and -inf is never representable.  The `value` slot of the
    infinite element is meaningless; check `infinite` first.
    """

    value: float = 0.0
    infinite: bool = False

    @staticmethod
    def finite(v: float) -> "ExtendedReal":
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            raise UsageError(f"finite ExtendedReal requires a finite value, got {v}")
        return ExtendedReal(v, False)

    @property
    def is_finite(self) -> bool:
        return not self.infinite

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def __add__(self, other):
        o = other if isinstance(other, ExtendedReal) else ExtendedReal.finite(other)
        if self.infinite or o.infinite:
            return ExtendedReal.INF
        return ExtendedReal(self.value + o.value, False)

    __radd__ = __add__

    def __mul__(self, scalar: float):
        if scalar < 0:
            raise UsageError("ExtendedReal supports scaling by nonnegative reals only")
        if self.infinite:
            return ExtendedReal.INF if scalar > 0 else ExtendedReal(0.0, False)
        return ExtendedReal(self.value * scalar, False)

    __rmul__ = __mul__

    def _key(self) -> float:
        return math.inf if self.infinite else self.value

    def __lt__(self, other):
        o = other if isinstance(other, ExtendedReal) else ExtendedReal.finite(other)
        return self._key() < o._key()

    def __le__(self, other):
        o = other if isinstance(other, ExtendedReal) else ExtendedReal.finite(other)
        return self._key() <= o._key()

    def __gt__(self, other):
        return not self.__le__(other)

    def __ge__(self, other):
        return not self.__lt__(other)


ExtendedReal.INF = ExtendedReal(0.0, True)


# ---------------------------------------------------------------------------
# State points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StatePoint:
    """Immutable point of a space: an ordered tuple of coordinates.

    The interpretation is owned by the space: a scalar for the half-line
    and quadratic spaces, grid values for the periodic field space,
    quantile values for the one-dimensional transport space.
    """

    coords: tuple

    def __post_init__(self):
        if len(self.coords) == 0:
            raise UsageError("StatePoint needs at least one coordinate")
        if not all(math.isfinite(c) for c in self.coords):
            raise UsageError("StatePoint coordinates must be finite")

    @staticmethod
    def of(values) -> "StatePoint":
        arr = np.atleast_1d(np.asarray(values, dtype=float))
        return StatePoint(tuple(float(v) for v in arr))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @property
    def x(self) -> float:
        if len(self.coords) != 1:
            raise UsageError("scalar access on a non-scalar point")
        return self.coords[0]

    def to_json(self) -> list:
        return [float(c) for c in self.coords]


# ---------------------------------------------------------------------------
# Space contract
# ---------------------------------------------------------------------------

class Space(ABC):
    """A complete geodesic metric space with energy, slope and flow hooks.

    Subclasses fix the chart isometry, the energy in chart coordinates
    and (where available) a closed-form gradient flow.  All operations
    are pure; instances are immutable after construction and safe to
    share across threads.
    """

    name: str = "abstract"
    dimension: int = 1
    kappa: float = 0.0
    tol_metric: float = 1e-9
    tol_geo: float = 1e-6
    chart_scale: float = 1.0

    # -- chart -------------------------------------------------------------

    @abstractmethod
    def to_chart(self, p: StatePoint) -> np.ndarray:
        ...

    @abstractmethod
    def from_chart(self, y: np.ndarray) -> StatePoint:
        ...

    def project_chart(self, y: np.ndarray) -> np.ndarray:
        """Project raw chart coordinates back onto the feasible set."""
        return y

    @abstractmethod
    def chart_energy_value(self, y: np.ndarray) -> float:
        """Energy in chart coordinates; +inf outside the effective domain."""
        ...

    @abstractmethod
    def chart_energy_grad(self, y: np.ndarray) -> np.ndarray:
        ...

    # -- metric ------------------------------------------------------------

    def validate_point(self, p: StatePoint) -> None:
        if len(p.coords) != self.dimension:
            raise UsageError(
                f"{self.name}: expected dimension {self.dimension}, got {len(p.coords)}"
            )

    def distance(self, p: StatePoint, q: StatePoint) -> float:
        self.validate_point(p)
        self.validate_point(q)
        diff = self.to_chart(p) - self.to_chart(q)
        return self.chart_scale * float(np.linalg.norm(diff))

    def geodesic_point(self, p: StatePoint, q: StatePoint, t: float) -> StatePoint:
        if not 0.0 <= t <= 1.0:
            raise UsageError(f"geodesic parameter must lie in [0, 1], got {t}")
        self.validate_point(p)
        self.validate_point(q)
        if p == q or t == 0.0:
            return p  # degenerate geodesic: the constant curve
        if t == 1.0:
            return q
        yp, yq = self.to_chart(p), self.to_chart(q)
        return self.from_chart((1.0 - t) * yp + t * yq)

    # -- energy ------------------------------------------------------------

    def energy(self, p: StatePoint) -> ExtendedReal:
        self.validate_point(p)
        v = self.chart_energy_value(self.to_chart(p))
        return ExtendedReal.INF if math.isinf(v) else ExtendedReal.finite(v)

    @abstractmethod
    def slope(self, p: StatePoint) -> ExtendedReal:
        ...

    def information(self, p: StatePoint) -> ExtendedReal:
        s = self.slope(p)
        if s.infinite:
            return ExtendedReal.INF
        return ExtendedReal.finite(s.value**2)

    # -- flow hooks ----------------------------------------------------------

    def has_exact_flow(self, p: StatePoint) -> bool:
        return False

    def exact_flow(self, p: StatePoint, t: float) -> StatePoint:
        raise UnsupportedFlowError(f"{self.name}: no closed-form flow registered")

    # -- sampling ------------------------------------------------------------

    @abstractmethod
    def sample_point(self, rng: np.random.Generator) -> StatePoint:
        """A random point in the effective domain, for property checks."""
        ...

    def sphere_points(self, p: StatePoint, radius: float,
                      count: int, rng: np.random.Generator) -> list[StatePoint]:
        """Points at geodesic distance `radius` from p (chart sphere)."""
        y = self.to_chart(p)
        n = y.size
        out = []
        if n == 1:
            dirs = [np.array([1.0]), np.array([-1.0])]
        else:
            dirs = []
            while len(dirs) < count:
                v = rng.standard_normal(n)
                nv = np.linalg.norm(v)
                if nv > 1e-12:
                    dirs.append(v / nv)
        for v in dirs[: max(count, 2)]:
            q = y + (radius / self.chart_scale) * v
            if self._chart_feasible(q):
                out.append(self.from_chart(q))
        return out

    def _chart_feasible(self, y: np.ndarray) -> bool:
        return True

    def descriptor(self) -> dict:
        return {"space": self.name, "params": {}}


# ---------------------------------------------------------------------------
# Definitional slope and property verifiers
# ---------------------------------------------------------------------------

def slope_by_definition(space: Space, fn: Callable[[StatePoint], float],
                        p: StatePoint, scale: float = 1.0,
                        radii: Sequence[float] = (1e-2, 1e-3, 1e-4),
                        count: int = 16,
                        rng: np.random.Generator | None = None) -> float:
    """Local slope of `fn` at p, from shrinking geodesic spheres.

    For each radius r the quantity max_q (fn(p) - fn(q))^+ / d(p, q) over
    the sphere of radius r*scale is computed; a least-squares line in r
    extrapolates to radius zero.  The limsup itself is not computable, so
    this is the verifier-grade stand-in used only in cross-checks.
    """
    rng = rng or np.random.default_rng(0)
    fp = fn(p)
    rs, vals = [], []
    for r in radii:
        rr = r * scale
        best = 0.0
        for q in space.sphere_points(p, rr, count, rng):
            d = space.distance(p, q)
            if d <= 0:
                continue
            best = max(best, max(fp - fn(q), 0.0) / d)
        rs.append(rr)
        vals.append(best)
    coeffs = np.polyfit(np.asarray(rs), np.asarray(vals), 1)
    return float(coeffs[1])


@dataclass
class PropertyReport:
    """Worst violation of a sampled property, with the sample count."""

    name: str
    max_violation: float
    samples: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.details.get("tol", math.inf)


def check_metric_axioms(space: Space, n_samples: int = 1000,
                        rng: np.random.Generator | None = None) -> PropertyReport:
    """Symmetry, identity of indiscernibles and triangle inequality on
    random sampled pairs/triples, against the space's metric tolerance."""
    rng = rng or np.random.default_rng(7)
    worst = 0.0
    for _ in range(n_samples):
        p, q, r = (space.sample_point(rng) for _ in range(3))
        dpq, dqp = space.distance(p, q), space.distance(q, p)
        worst = max(worst, abs(dpq - dqp))
        worst = max(worst, abs(space.distance(p, p)))
        worst = max(worst, space.distance(p, r) - dpq - space.distance(q, r))
        worst = max(worst, -dpq)
    return PropertyReport("metric_axioms", worst, n_samples,
                          {"tol": space.tol_metric})


def check_geodesic_property(space: Space, p: StatePoint, q: StatePoint,
                            grid: int = 11) -> float:
    """max |d(gamma(s), gamma(t)) - |t-s| d(p,q)| over a grid x grid mesh."""
    ts = np.linspace(0.0, 1.0, grid)
    d = space.distance(p, q)
    pts = [space.geodesic_point(p, q, t) for t in ts]
    worst = 0.0
    for i, s in enumerate(ts):
        for j, t in enumerate(ts):
            worst = max(worst, abs(space.distance(pts[i], pts[j]) - abs(t - s) * d))
    return worst


def check_kappa_convexity(space: Space, n_geodesics: int = 100,
                          ts: Sequence[float] = tuple(np.linspace(0.1, 0.9, 9)),
                          rng: np.random.Generator | None = None) -> PropertyReport:
    """E(gamma(t)) <= (1-t)E(p) + tE(q) - kappa/2 t(1-t) d^2(p,q) on random
    geodesics with finite endpoint energies."""
    rng = rng or np.random.default_rng(11)
    worst = -math.inf
    used = 0
    while used < n_geodesics:
        p, q = space.sample_point(rng), space.sample_point(rng)
        ep, eq = space.energy(p), space.energy(q)
        if ep.infinite or eq.infinite:
            continue
        used += 1
        d2 = space.distance(p, q) ** 2
        for t in ts:
            em = space.energy(space.geodesic_point(p, q, t))
            if em.infinite:
                worst = math.inf
                continue
            bound = (1 - t) * ep.value + t * eq.value - 0.5 * space.kappa * t * (1 - t) * d2
            worst = max(worst, em.value - bound)
    return PropertyReport("kappa_convexity", worst, used, {"kappa": space.kappa})


def check_noise_identity(space: Space, pairs: Sequence[tuple[StatePoint, StatePoint]],
                         rng: np.random.Generator | None = None) -> PropertyReport:
    """|d(half-squared-distance slope) - d(pi,rho)| via the definitional
    slope, on smooth spaces where the identity |d(1/2 d^2(.,rho))|(pi) =
    d(pi,rho) is expected to hold."""
    rng = rng or np.random.default_rng(13)
    worst = 0.0
    for pi, rho in pairs:
        d = space.distance(pi, rho)
        fn = lambda z: 0.5 * space.distance(z, rho) ** 2
        est = slope_by_definition(space, fn, pi, scale=max(d, 1.0), rng=rng)
        worst = max(worst, abs(est - d))
    return PropertyReport("noise_identity", worst, len(pairs), {})
