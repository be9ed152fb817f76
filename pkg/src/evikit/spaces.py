"""Concrete metric-energy spaces.

Four families are implemented, each through its flat chart:

* ``cir`` -- the positive half-line with the singular metric g(x) = 1/x,
  distance d(x, y) = 2|sqrt(x) - sqrt(y)|, and the mean-reversion energy
  E(x) = -mu log x + x - (mu - mu log mu).  The drift grad E(x) = x - mu
  is the deterministic Cox-Ingersoll-Ross relaxation; E is 1-convex.
* ``quadratic`` -- R^n with E(x) = kappa |x|^2 / 2 + sum_i F(x_i) for a
  convex coordinatewise perturbation F; n = 1, F = 0 is the
  Ornstein-Uhlenbeck case.
* ``allen_cahn`` -- periodic grid fields with the discrete energy
  1/2 int |grad rho|^2 + kappa rho^2 dx + int F(rho) dx, whose gradient
  flow is rho_t = Lap rho - F'(rho) - kappa rho.
* ``wasserstein1d`` -- quadratic-transport space of one-dimensional
  probability measures in quantile coordinates at midpoint levels
  u_i = (i - 1/2)/m, where W_2 is the (1/m)-weighted l2 distance and the
  energy is internal + potential + interaction with integrands under
  McCann's condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConstructionError,
    DomainError,
    ExtendedReal,
    Space,
    StatePoint,
    UnsupportedFlowError,
    UsageError,
)
from .potentials import Potential, sampled_convexity_check

_DENSITY_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CirDescriptor:
    """Half-line space parameters; the domain is truncated to [x_lo, x_hi]
    for flows and resolvent solves (the energy blows up toward 0, which
    keeps trajectories away from the lower cut)."""

    mu: float
    x_lo: float = 1e-4
    x_hi: float | None = None

    def resolved_hi(self) -> float:
        return 50.0 * self.mu if self.x_hi is None else self.x_hi


@dataclass(frozen=True)
class QuadraticDescriptor:
    dimension: int = 1
    kappa: float = 1.0
    perturbation: Potential | None = None  # convex, applied coordinatewise
    energy_offset: float = 0.0  # recentering constant, leaves the flow unchanged
    scale: float = 2.0  # sampling scale for property checks


@dataclass(frozen=True)
class AllenCahnDescriptor:
    grid_size: int
    length: float
    kappa: float
    well: Potential | None = None  # convex C^1, F(0) = 0, F >= 0


@dataclass(frozen=True)
class Wasserstein1DDescriptor:
    m: int
    internal: Potential | None = None      # F, checked via mccann_check
    potential: Potential | None = None     # V, kappa_V-convex
    interaction: Potential | None = None   # W, even, kappa_W-convex, kappa_W >= 0
    kappa_v: float = 0.0
    kappa_w: float = 0.0


# ---------------------------------------------------------------------------
# CIR half-line
# ---------------------------------------------------------------------------

class CirSpace(Space):
    """(0, inf) with d(x, y) = 2|sqrt x - sqrt y| and the energy
    E(x) = -mu log x + x - (mu - mu log mu); chart y = sqrt(x).

    In arc length s = 2 sqrt(x) the energy reads -2 mu log(s/2) + s^2/4
    with second derivative 1/2 + 2 mu / s^2 > 1/2, so E is 1/2-convex
    along geodesics (the infimum 1/2 is approached as x -> inf) and the
    flow satisfies the EVI with modulus kappa = 1/2.  Equivalently, the
    coupled-flow dissipation d/dt 1/2 d^2 = -2 (mu/sqrt(xy) + 1)
    (sqrt x - sqrt y)^2 <= -1/2 d^2.
    """

    name = "cir"
    dimension = 1
    tol_metric = 1e-9
    tol_geo = 1e-9
    chart_scale = 2.0

    def __init__(self, desc: CirDescriptor):
        hi = desc.resolved_hi()
        if not (0.0 < desc.x_lo < desc.mu < hi):
            raise ConstructionError(
                f"cir descriptor requires 0 < x_lo < mu < x_hi, got "
                f"x_lo={desc.x_lo}, mu={desc.mu}, x_hi={hi}"
            )
        self.desc = desc
        self.mu = desc.mu
        self.x_lo = desc.x_lo
        self.x_hi = hi
        self.kappa = 0.5
        self._e0 = desc.mu - desc.mu * math.log(desc.mu)

    def validate_point(self, p: StatePoint) -> None:
        super().validate_point(p)
        if p.coords[0] < 0.0:
            raise DomainError(f"cir coordinate must be nonnegative, got {p.coords[0]}")

    def to_chart(self, p: StatePoint) -> np.ndarray:
        return np.sqrt(p.array)

    def from_chart(self, y: np.ndarray) -> StatePoint:
        return StatePoint.of(np.asarray(y) ** 2)

    def project_chart(self, y: np.ndarray) -> np.ndarray:
        return np.clip(y, math.sqrt(self.x_lo), math.sqrt(self.x_hi))

    def chart_energy_value(self, y: np.ndarray) -> float:
        x = float(np.asarray(y).ravel()[0]) ** 2
        if x <= 0.0:
            return math.inf
        return -self.mu * math.log(x) + x - self._e0

    def chart_energy_grad(self, y: np.ndarray) -> np.ndarray:
        yv = np.asarray(y, dtype=float)
        # d/dy E(y^2) = (1 - mu / y^2) * 2y
        return 2.0 * yv - 2.0 * self.mu / yv

    def slope(self, p: StatePoint) -> ExtendedReal:
        self.validate_point(p)
        x = p.coords[0]
        if x <= 0.0:
            return ExtendedReal.INF
        return ExtendedReal.finite(abs(x - self.mu) / math.sqrt(x))

    def metric_gradient(self, x: float) -> float:
        """grad E in the chart metric: g^{-1}(x) E'(x) = x - mu."""
        return x - self.mu

    def has_exact_flow(self, p: StatePoint) -> bool:
        return True

    def exact_flow(self, p: StatePoint, t: float) -> StatePoint:
        # xdot = -(x - mu)  =>  x(t) = mu + (x0 - mu) exp(-t)
        self.validate_point(p)
        return StatePoint.of(self.mu + (p.coords[0] - self.mu) * math.exp(-t))

    def sample_point(self, rng: np.random.Generator) -> StatePoint:
        lo, hi = max(self.x_lo, 0.05 * self.mu), min(self.x_hi, 8.0 * self.mu)
        return StatePoint.of(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    def _chart_feasible(self, y: np.ndarray) -> bool:
        return bool(np.all(np.asarray(y) > 0.0))

    def descriptor(self) -> dict:
        return {"space": "cir", "params": {"mu": self.mu, "x_lo": self.x_lo,
                                           "x_hi": self.x_hi}}


# ---------------------------------------------------------------------------
# Quadratic / Ornstein-Uhlenbeck
# ---------------------------------------------------------------------------

class QuadraticSpace(Space):
    """R^n, Euclidean metric, E(x) = kappa |x|^2/2 + sum_i F(x_i)."""

    name = "quadratic"
    tol_metric = 1e-9
    tol_geo = 1e-9
    chart_scale = 1.0

    def __init__(self, desc: QuadraticDescriptor):
        if desc.dimension < 1:
            raise ConstructionError("quadratic descriptor requires dimension >= 1")
        if desc.perturbation is not None:
            viol = sampled_convexity_check(desc.perturbation, -desc.scale * 4,
                                           desc.scale * 4)
            if viol > 1e-8:
                raise ConstructionError(
                    f"perturbation convexity violated by {viol:.2e} (sampled "
                    "second differences)"
                )
        self.desc = desc
        self.dimension = desc.dimension
        self.kappa = desc.kappa
        self.perturbation = desc.perturbation

    def to_chart(self, p: StatePoint) -> np.ndarray:
        return p.array

    def from_chart(self, y: np.ndarray) -> StatePoint:
        return StatePoint.of(y)

    def chart_energy_value(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        e = 0.5 * self.kappa * float(np.dot(y, y)) + self.desc.energy_offset
        if self.perturbation is not None:
            e += float(np.sum(self.perturbation(y)))
        return e

    def chart_energy_grad(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        g = self.kappa * y
        if self.perturbation is not None:
            g = g + self.perturbation.df(y)
        return g

    def slope(self, p: StatePoint) -> ExtendedReal:
        self.validate_point(p)
        return ExtendedReal.finite(float(np.linalg.norm(self.chart_energy_grad(p.array))))

    def has_exact_flow(self, p: StatePoint) -> bool:
        return self.perturbation is None

    def exact_flow(self, p: StatePoint, t: float) -> StatePoint:
        if self.perturbation is not None:
            raise UnsupportedFlowError("quadratic flow with perturbation has no closed form")
        self.validate_point(p)
        return StatePoint.of(p.array * math.exp(-self.kappa * t))

    def sample_point(self, rng: np.random.Generator) -> StatePoint:
        return StatePoint.of(rng.normal(0.0, self.desc.scale, self.dimension))

    def descriptor(self) -> dict:
        params = {"dimension": self.dimension, "kappa": self.kappa}
        if self.desc.energy_offset:
            params["energy_offset"] = self.desc.energy_offset
        if self.perturbation is not None:
            params["perturbation"] = self.perturbation.to_json()
        return {"space": "quadratic", "params": params}


# ---------------------------------------------------------------------------
# Allen-Cahn periodic field
# ---------------------------------------------------------------------------

class AllenCahnSpace(Space):
    """Periodic 1-d fields rho with the L^2 metric and
    E(rho) = 1/2 int |grad rho|^2 + kappa rho^2 dx + int F(rho) dx.

    The Laplacian is the circulant second-order stencil, which keeps the
    quadratic part symmetric negative semidefinite (hence maximally
    dissipative); the metric slope is || Lap rho - F'(rho) - kappa rho ||."""

    name = "allen_cahn"

    def __init__(self, desc: AllenCahnDescriptor):
        if desc.grid_size < 4:
            raise ConstructionError("allen_cahn descriptor requires grid_size >= 4")
        if desc.length <= 0:
            raise ConstructionError("allen_cahn descriptor requires length > 0")
        well = desc.well
        if well is not None:
            if abs(float(well(0.0))) > 1e-12:
                raise ConstructionError("well potential must satisfy F(0) = 0")
            samples = np.linspace(-5.0, 5.0, 201)
            if float(np.min(well(samples))) < -1e-12:
                raise ConstructionError("well potential must be nonnegative (F >= 0)")
            viol = sampled_convexity_check(well, -5.0, 5.0)
            if viol > 1e-8:
                raise ConstructionError(
                    f"well potential convexity violated by {viol:.2e}"
                )
        self.desc = desc
        self.dimension = desc.grid_size
        self.kappa = desc.kappa
        self.length = desc.length
        self.dx = desc.length / desc.grid_size
        self.well = well
        self.chart_scale = math.sqrt(self.dx)
        self.tol_metric = 1e-9
        self.tol_geo = 1e-9

    def laplacian(self, rho: np.ndarray) -> np.ndarray:
        return (np.roll(rho, -1) - 2.0 * rho + np.roll(rho, 1)) / self.dx**2

    def to_chart(self, p: StatePoint) -> np.ndarray:
        return p.array

    def from_chart(self, y: np.ndarray) -> StatePoint:
        return StatePoint.of(y)

    def chart_energy_value(self, y: np.ndarray) -> float:
        rho = np.asarray(y, dtype=float)
        grad = (np.roll(rho, -1) - rho) / self.dx
        e = 0.5 * self.dx * float(np.sum(grad**2) + self.kappa * np.sum(rho**2))
        if self.well is not None:
            e += self.dx * float(np.sum(self.well(rho)))
        return e

    def chart_energy_grad(self, y: np.ndarray) -> np.ndarray:
        rho = np.asarray(y, dtype=float)
        g = -self.laplacian(rho) + self.kappa * rho
        if self.well is not None:
            g = g + self.well.df(rho)
        return self.dx * g

    def slope(self, p: StatePoint) -> ExtendedReal:
        self.validate_point(p)
        rho = p.array
        drive = self.laplacian(rho) - self.kappa * rho
        if self.well is not None:
            drive = drive - self.well.df(rho)
        return ExtendedReal.finite(math.sqrt(self.dx * float(np.sum(drive**2))))

    def sample_point(self, rng: np.random.Generator) -> StatePoint:
        # smooth random field: a few low Fourier modes
        n = self.dimension
        xs = np.arange(n) * (2.0 * np.pi / n)
        rho = np.zeros(n)
        for k in range(1, 4):
            rho += rng.normal(0, 1.0 / k) * np.sin(k * xs) + rng.normal(0, 1.0 / k) * np.cos(k * xs)
        return StatePoint.of(rho)

    def descriptor(self) -> dict:
        params = {"grid_size": self.dimension, "length": self.length,
                  "kappa": self.kappa}
        if self.well is not None:
            params["well"] = self.well.to_json()
        return {"space": "allen_cahn", "params": params}


def allen_cahn_information(space: AllenCahnSpace, rho: StatePoint) -> float:
    """Discrete squared L^2 norm of Lap rho - F'(rho) - kappa rho."""
    info = space.information(rho)
    return info.value


# ---------------------------------------------------------------------------
# Wasserstein-1D in quantile coordinates
# ---------------------------------------------------------------------------

class Wasserstein1DSpace(Space):
    """Quantile vectors Q at midpoint levels u_i = (i - 1/2)/m.

    W_2(Q, Q')^2 = (1/m) sum_i (Q_i - Q'_i)^2, geodesics are linear
    quantile interpolation, and the energy of the piecewise-uniform
    interpolant (mass 1/m between consecutive midpoint quantiles) is

        E(Q) = (1/m) sum_j F(1/q_j) q_j  +  (1/m) sum_i V(Q_i)
             + (1/(2 m^2)) sum_{i,j} W(Q_i - Q_j),         q_j = m (Q_{j+1} - Q_j).

    The uniform gap weights give the zero-flux boundary consistent with a
    vanishing tail density; superlinear F forces absolute continuity, so
    a non-increasing Q or a gap density below 1e-12 carries +inf energy."""

    name = "wasserstein1d"

    def __init__(self, desc: Wasserstein1DDescriptor):
        if desc.m < 4:
            raise ConstructionError("wasserstein1d descriptor requires m >= 4")
        if desc.kappa_w < 0:
            raise ConstructionError("interaction modulus kappa_w must be >= 0")
        if desc.potential is not None:
            viol = sampled_convexity_check(desc.potential, -8.0, 8.0, desc.kappa_v)
            if viol > 1e-6:
                raise ConstructionError(
                    f"potential kappa_v-convexity violated by {viol:.2e}"
                )
        if desc.interaction is not None:
            xs = np.linspace(-8.0, 8.0, 101)
            if float(np.max(np.abs(desc.interaction(xs) - desc.interaction(-xs)))) > 1e-10:
                raise ConstructionError("interaction kernel must be even")
            viol = sampled_convexity_check(desc.interaction, -8.0, 8.0, desc.kappa_w)
            if viol > 1e-6:
                raise ConstructionError(
                    f"interaction kappa_w-convexity violated by {viol:.2e}"
                )
        self.desc = desc
        self.m = desc.m
        self.dimension = desc.m
        self.internal = desc.internal
        self.potential = desc.potential
        self.interaction = desc.interaction
        self.kappa = desc.kappa_v + desc.kappa_w
        self.chart_scale = 1.0 / math.sqrt(desc.m)
        self.tol_metric = 1e-6
        self.tol_geo = 1e-6

    @property
    def levels(self) -> np.ndarray:
        m = self.m
        return (np.arange(m) + 0.5) / m

    def validate_point(self, p: StatePoint) -> None:
        super().validate_point(p)
        q = p.array
        if np.any(np.diff(q) < -1e-12):
            raise DomainError("quantile vector must be nondecreasing")

    def to_chart(self, p: StatePoint) -> np.ndarray:
        return p.array

    def from_chart(self, y: np.ndarray) -> StatePoint:
        return StatePoint.of(y)

    def project_chart(self, y: np.ndarray) -> np.ndarray:
        return pava_nondecreasing(np.asarray(y, dtype=float))

    def gaps(self, q: np.ndarray) -> np.ndarray:
        """Quantile derivative estimates q_j = m (Q_{j+1} - Q_j) at the
        m-1 forward gaps."""
        return self.m * np.diff(q)

    def chart_energy_value(self, y: np.ndarray) -> float:
        q = np.asarray(y, dtype=float)
        e = 0.0
        if self.internal is not None:
            g = self.gaps(q)
            if np.any(g <= 0.0) or np.any(1.0 / np.maximum(g, 1e-300) < _DENSITY_FLOOR):
                return math.inf
            e += float(np.sum(self.internal(1.0 / g) * g)) / self.m
        if self.potential is not None:
            e += float(np.sum(self.potential(q))) / self.m
        if self.interaction is not None:
            diffs = q[:, None] - q[None, :]
            e += 0.5 * float(np.sum(self.interaction(diffs))) / self.m**2
        return e

    def chart_energy_grad(self, y: np.ndarray) -> np.ndarray:
        q = np.asarray(y, dtype=float)
        grad = np.zeros_like(q)
        if self.internal is not None:
            g = self.gaps(q)
            # d/dg [F(1/g) g] = F(1/g) - F'(1/g)/g
            rho = 1.0 / g
            dAdg = self.internal(rho) - self.internal.df(rho) * rho
            contrib = dAdg  # (1/m) * dA/dg * dg/dQ with dg/dQ = +-m
            grad[1:] += contrib
            grad[:-1] -= contrib
        if self.potential is not None:
            grad += self.potential.df(q) / self.m
        if self.interaction is not None:
            diffs = q[:, None] - q[None, :]
            grad += np.sum(self.interaction.df(diffs), axis=1) / self.m**2
        return grad

    def slope(self, p: StatePoint) -> ExtendedReal:
        val = wasserstein_information(self, p)
        if math.isinf(val):
            return ExtendedReal.INF
        return ExtendedReal.finite(math.sqrt(val))

    def has_exact_flow(self, p: StatePoint) -> bool:
        return self._heat_family(p) is not None

    def exact_flow(self, p: StatePoint, t: float) -> StatePoint:
        """Heat flow of the pure entropy energy on the Gaussian family:
        N(mean, s^2) evolves to N(mean, s^2 + 2t)."""
        fam = self._heat_family(p)
        if fam is None:
            raise UnsupportedFlowError(
                "wasserstein1d closed-form flow needs pure entropy energy and a "
                "Gaussian quantile vector"
            )
        mean, sd, z = fam
        return StatePoint.of(mean + math.sqrt(sd**2 + 2.0 * t) * z)

    def _heat_family(self, p: StatePoint):
        if self.internal is None or self.internal.name != "entropy":
            return None
        if self.potential is not None or self.interaction is not None:
            return None
        from scipy.special import ndtri

        q = p.array
        z = ndtri(self.levels)
        mean = float(np.mean(q))
        denom = float(np.dot(z, z))
        sd = float(np.dot(q - mean, z)) / denom
        if sd <= 0:
            return None
        resid = float(np.max(np.abs(q - mean - sd * z)))
        if resid > 1e-8 * max(1.0, sd):
            return None
        return mean, sd, z

    def gaussian_state(self, mean: float = 0.0, sd: float = 1.0) -> StatePoint:
        from scipy.special import ndtri

        return StatePoint.of(mean + sd * ndtri(self.levels))

    def sample_point(self, rng: np.random.Generator) -> StatePoint:
        mean = rng.normal(0.0, 1.0)
        sd = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
        q = np.sort(rng.normal(mean, sd, self.m))
        # smooth out near-ties so the entropy stays finite
        q = pava_nondecreasing(q)
        q += np.linspace(0.0, 1e-6, self.m)
        return StatePoint.of(q)

    def descriptor(self) -> dict:
        params: dict = {"m": self.m, "kappa_v": self.desc.kappa_v,
                        "kappa_w": self.desc.kappa_w}
        for key, pot in (("internal", self.internal), ("potential", self.potential),
                         ("interaction", self.interaction)):
            if pot is not None:
                params[key] = pot.to_json()
        return {"space": "wasserstein1d", "params": params}


def pava_nondecreasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators projection onto nondecreasing vectors
    (euclidean, unweighted)."""
    n = len(y)
    vals = np.empty(n)
    wts = np.empty(n)
    k = 0
    for i in range(n):
        cv, cw = y[i], 1.0
        while k > 0 and vals[k - 1] > cv:
            cv = (wts[k - 1] * vals[k - 1] + cw * cv) / (wts[k - 1] + cw)
            cw += wts[k - 1]
            k -= 1
        vals[k] = cv
        wts[k] = cw
        k += 1
    out = np.empty(n)
    idx = 0
    for j in range(k):
        cnt = int(round(wts[j]))
        out[idx:idx + cnt] = vals[j]
        idx += cnt
    return out


def wasserstein_information(space: Wasserstein1DSpace, p: StatePoint) -> float:
    """Squared slope via discrete quadrature of int |w|^2 drho, where

        w = (1/rho) d/dx L_F(rho) + V' + W' * rho

    in quantile coordinates: the pressure part is the u-derivative of
    L_F(1/Q') evaluated at gap centers (central differences at interior
    midpoints, one-sided at the two boundary cells)."""
    space.validate_point(p)
    q = p.array
    m = space.m
    w = np.zeros(m)
    if space.internal is not None:
        g = space.gaps(q)
        if np.any(g <= 0.0):
            return math.inf
        ell = space.internal.pressure(1.0 / g)
        w[1:-1] += (ell[1:] - ell[:-1]) * m
        w[0] += (ell[1] - ell[0]) * m
        w[-1] += (ell[-1] - ell[-2]) * m
    if space.potential is not None:
        w += space.potential.df(q)
    if space.interaction is not None:
        diffs = q[:, None] - q[None, :]
        w += np.sum(space.interaction.df(diffs), axis=1) / m
    return float(np.mean(w**2))


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def make_cir(desc: CirDescriptor) -> CirSpace:
    return CirSpace(desc)


def make_quadratic(desc: QuadraticDescriptor) -> QuadraticSpace:
    return QuadraticSpace(desc)


def make_ou(kappa: float = 1.0) -> QuadraticSpace:
    """Scalar Ornstein-Uhlenbeck space: E(x) = kappa x^2 / 2 on R."""
    return QuadraticSpace(QuadraticDescriptor(dimension=1, kappa=kappa))


def make_allen_cahn(desc: AllenCahnDescriptor) -> AllenCahnSpace:
    return AllenCahnSpace(desc)


def make_wasserstein1d(desc: Wasserstein1DDescriptor) -> Wasserstein1DSpace:
    return Wasserstein1DSpace(desc)


def builtin_spaces() -> list[str]:
    return ["allen_cahn", "cir", "ou", "quadratic", "wasserstein1d"]


# ---------------------------------------------------------------------------
# McCann admissibility report
# ---------------------------------------------------------------------------

@dataclass
class McCannReport:
    passed: bool
    violations: list[str]
    doubling_constant: float
    dimension_map_increasing: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "violations": list(self.violations),
            "doubling_constant": self.doubling_constant,
            "dimension_map_increasing": self.dimension_map_increasing,
        }


def mccann_check(F: Potential, s_max: float = 50.0, n: int = 200,
                 d_spatial: int = 1) -> McCannReport:
    """Admissibility of an internal-energy integrand on a log-spaced grid.

    Checked predicates: convexity of F, convexity of s -> s^d F(s^{-d}),
    superlinear growth (F(s)/s eventually increasing), the doubling bound
    F(z + w) <= C (1 + F(z) + F(w)) with the fitted C reported, F(0) = 0,
    and lim_{s->0} F(s) / s^{-alpha} > -inf at alpha = d/(d+2) + 0.05.

    Monotonicity of the dimensional map is reported separately and does
    not fail the check: the classical condition asks for non-increase,
    and e.g. the entropy integrand yields a decreasing convex map.
    """
    if d_spatial != 1:
        raise UsageError("only d_spatial = 1 is implemented")
    s = np.logspace(-6, math.log10(s_max), n)
    vals = F(s)
    if not np.all(np.isfinite(vals)):
        raise UsageError("integrand produced non-finite values on the test grid")
    violations: list[str] = []

    def convex_on(xs, ys) -> float:
        x0, x1, x2 = xs[:-2], xs[1:-1], xs[2:]
        lam = (x1 - x0) / (x2 - x0)
        chord = (1 - lam) * ys[:-2] + lam * ys[2:]
        return float(np.max(ys[1:-1] - chord))

    if convex_on(s, vals) > 1e-9 * max(1.0, float(np.max(np.abs(vals)))):
        violations.append("convexity: F is not convex on the sampled grid")

    dmap = s * F(1.0 / s)  # s^d F(s^{-d}) with d = 1
    if convex_on(s, dmap) > 1e-9 * max(1.0, float(np.max(np.abs(dmap)))):
        violations.append("dimension_map_convexity: s -> s F(1/s) is not convex")
    increasing = bool(np.all(np.diff(dmap) >= -1e-12))

    hi = s[s >= 1.0]
    ratio = F(hi) / hi
    tail = ratio[-n // 4:]
    if np.any(np.diff(tail) < -1e-10):
        violations.append("superlinearity: F(s)/s is not eventually increasing")

    zs = np.logspace(-3, math.log10(s_max / 2.0), 40)
    z, wgrid = np.meshgrid(zs, zs)
    num = F(z + wgrid)
    den = 1.0 + F(z) + F(wgrid)
    with np.errstate(divide="ignore", invalid="ignore"):
        cgrid = np.where(den > 0, num / den, np.inf)
    C = float(np.max(cgrid))
    if not math.isfinite(C) or C > 1e6:
        violations.append("doubling: no moderate constant C with "
                          "F(z+w) <= C (1 + F(z) + F(w))")

    if abs(float(F(0.0))) > 1e-9:
        violations.append("origin: F(0) != 0")

    alpha = d_spatial / (d_spatial + 2.0) + 0.05
    small = np.logspace(-9, -3, 30)
    lower = F(small) * small**alpha
    if float(np.min(lower)) < -1e3:
        violations.append("tail: F(s) s^alpha unbounded below as s -> 0")

    return McCannReport(
        passed=not violations,
        violations=violations,
        doubling_constant=C,
        dimension_map_increasing=increasing,
    )
