"""Ekeland's variational principle on finite sets, with the four-variable
optimization used to compare sub- and supersolutions.

On a finite candidate set the principle is an exact combinatorial
statement: starting from x_hat, repeatedly move to the candidate
maximizing G(y) - delta/2 B(y, x) whenever that strictly exceeds G(x).
G increases strictly, so the walk terminates at a point x_delta with

    (1) G(x_hat) + delta/2 B(x_delta, x_hat) <= G(x_delta),
    (2) G(y) - delta/2 B(y, x_delta) <= G(x_delta)   for every candidate y,

both checkable exhaustively.  The penalty B is a nonnegative bifunction
with B(x, x) = 0 and the triangle inequality; the Tataru distance
qualifies, which is what makes the machinery usable along gradient flows.

The four-variable construction optimizes, over quadruples
x = (pi, rho, mu, gamma) and a weight eps in (0, 1/3),

    G_a(x) = u(pi)/(1-eps) - v(mu)/(1+eps)
             - a [ d^2(pi,rho)/(2(1-eps)) + d^2(rho,gamma)/2 + d^2(gamma,mu)/(2(1+eps)) ]
             - eps/(1-eps) Ebar(rho) - eps/(1+eps) Ebar(gamma)

with Ebar the energy recentred by a quadratic so that inf Ebar = 0, and
penalizes with the weighted Tataru sum

    B(x, x~) = d_T(pi,pi~)/(1-eps) + d_T(mu,mu~)/(1+eps) + d_T(rho,rho~) + d_T(gamma,gamma~).

Along a growing weight schedule the auxiliary terms a Psi + Xi decay
toward zero, and the drift/squared-distance bounds tested by
verify_key_estimates tighten accordingly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import NumericalError, Space, StatePoint, UsageError
from .flow import fit_quadratic_lower_bound
from .hj import GridFunction
from .tataru import tataru_batch, tataru_distance


# ---------------------------------------------------------------------------
# Finite-set Ekeland principle
# ---------------------------------------------------------------------------

class _ProductGrid:
    """Lazy view of the 4-fold product of a base grid (indexing only)."""

    def __init__(self, base: list[StatePoint]):
        self.base = base
        self.n = len(base)

    def __len__(self) -> int:
        return self.n**4

    def decode(self, flat: int) -> tuple[int, int, int, int]:
        n = self.n
        i3 = flat % n
        flat //= n
        i2 = flat % n
        flat //= n
        i1 = flat % n
        i0 = flat // n
        return i0, i1, i2, i3

    def __getitem__(self, flat: int):
        i0, i1, i2, i3 = self.decode(flat)
        return (self.base[i0], self.base[i1], self.base[i2], self.base[i3])


@dataclass
class EkelandProblem:
    """A finite-set instance: candidates, objective values, penalty.

    `penalty(i, j)` evaluates B(points[i], points[j]); `penalty_batch`
    evaluates B(points[k], points[j]) for every k at once and is what the
    iteration and the exhaustive checks use.
    """

    points: object                 # sequence of candidates
    g_values: np.ndarray           # objective, -inf allowed, bounded above
    penalty: object                # callable (i, j) -> float
    delta: float
    x_hat: int
    penalty_batch: object = None   # callable (j) -> array over all candidates

    def __post_init__(self):
        self.g_values = np.asarray(self.g_values, dtype=float)
        if self.delta <= 0:
            raise UsageError("ekeland delta must be positive")
        if len(self.g_values) != len(self.points):
            raise UsageError("objective values and candidate set sizes differ")
        if np.any(np.isposinf(self.g_values)) or np.any(np.isnan(self.g_values)):
            raise UsageError("objective must be bounded above and well defined")
        if not 0 <= self.x_hat < len(self.points):
            raise UsageError("x_hat index out of range")
        if self.penalty_batch is None:
            pen = self.penalty
            self.penalty_batch = lambda j: np.array(
                [pen(k, j) for k in range(len(self.points))]
            )

    def validate_penalty(self, rng: np.random.Generator | None = None,
                         n_samples: int = 50, tol: float = 1e-9) -> None:
        """Sampled checks of B >= 0, B(x,x) = 0 and the triangle inequality."""
        rng = rng or np.random.default_rng(5)
        n = len(self.points)
        for _ in range(n_samples):
            i, j, k = (int(rng.integers(n)) for _ in range(3))
            bij = self.penalty(i, j)
            if bij < -tol:
                raise UsageError(f"penalty must be nonnegative, B({i},{j}) = {bij}")
            if abs(self.penalty(i, i)) > tol:
                raise UsageError(f"penalty must vanish on the diagonal at {i}")
            if self.penalty(i, k) > bij + self.penalty(j, k) + tol:
                raise UsageError(f"penalty triangle inequality fails at ({i},{j},{k})")


@dataclass
class EkelandResult:
    x_delta: int
    iterations: int
    path: list[int] = field(default_factory=list)


def ekeland_optimize(problem: EkelandProblem) -> EkelandResult:
    """Exact sequential construction on a finite set.

    Moves use the half-weight penalty delta/2, which is what makes both
    result inequalities hold exhaustively at termination (the full-delta
    move rule would only certify the weaker full-delta stopping
    condition).  The walk shortcuts penalty evaluations whenever the
    current point already maximizes G outright.
    """
    g = problem.g_values
    if math.isinf(g[problem.x_hat]):
        raise UsageError("starting point must have a finite objective value")
    half = 0.5 * problem.delta
    current = problem.x_hat
    path = [current]
    g_max = float(np.max(g))
    for it in range(len(g) + 1):
        if g[current] >= g_max:
            return EkelandResult(current, it, path)
        scores = g - half * problem.penalty_batch(current)
        y = int(np.argmax(scores))
        if scores[y] <= g[current] + 0.0:
            return EkelandResult(current, it, path)
        current = y
        path.append(current)
    raise NumericalError("ekeland walk failed to terminate on a finite set")


def verify_ekeland_result(problem: EkelandProblem, result: EkelandResult) -> dict:
    """Exhaustive verification of the two result inequalities, the
    near-optimal-start consequence and strict uniqueness."""
    g = problem.g_values
    xd = result.x_delta
    half = 0.5 * problem.delta
    b_to_xd = problem.penalty_batch(xd)
    inv2 = g - half * b_to_xd - g[xd]
    inv2_max = float(np.max(inv2))
    b_xd_xhat = problem.penalty(xd, problem.x_hat)
    inv1_slack = float(g[xd] - g[problem.x_hat] - half * b_xd_xhat)
    others = np.arange(len(g)) != xd
    strict = g - problem.delta * b_to_xd - g[xd]
    uniqueness_margin = float(-np.max(strict[others])) if np.any(others) else math.inf
    near_optimal_start = bool(
        g[problem.x_hat] >= float(np.max(g)) - 0.5 * problem.delta**2
    )
    return {
        "inv1_slack": inv1_slack,                  # >= 0 required
        "inv2_max": inv2_max,                      # <= 0 required
        "uniqueness_margin": uniqueness_margin,    # > 0 required
        "near_optimal_start": near_optimal_start,
        "penalty_to_start": float(b_xd_xhat),
    }


# ---------------------------------------------------------------------------
# Tataru penalty on quadruples
# ---------------------------------------------------------------------------

def tataru_penalty(space: Space, eps: float, flow_dt: float = 1e-2):
    """Weighted Tataru sum on quadruples x = (pi, rho, mu, gamma):

        B(x, x~) = d_T(pi,pi~)/(1-eps) + d_T(rho,rho~) + d_T(mu,mu~)/(1+eps)
                   + d_T(gamma,gamma~)

    B(x, x) = 0 and the triangle inequality are inherited per component.
    Pairwise values are cached across calls.
    """
    if not 0.0 < eps < 1.0 / 3.0:
        raise UsageError("tataru penalty weight eps must lie in (0, 1/3)")
    weights = (1.0 / (1.0 - eps), 1.0, 1.0 / (1.0 + eps), 1.0)
    cache: dict = {}

    def d_t(p: StatePoint, q: StatePoint) -> float:
        key = (p.coords, q.coords)
        if key not in cache:
            cache[key] = tataru_distance(space, p, q, flow_dt).value
        return cache[key]

    def penalty(x, x_tilde) -> float:
        return sum(w * d_t(p, q) for w, p, q in zip(weights, x, x_tilde))

    return penalty


def tataru_matrix(space: Space, base: list[StatePoint],
                  flow_dt: float = 1e-2) -> np.ndarray:
    """DT[i, j] = d_T(base[i], base[j]) with one flow per column."""
    n = len(base)
    out = np.empty((n, n))
    for j in range(n):
        out[:, j] = tataru_batch(space, base, base[j], flow_dt)
        out[j, j] = 0.0
    return out


# ---------------------------------------------------------------------------
# Four-variable optimization
# ---------------------------------------------------------------------------

@dataclass
class QuadrupleState:
    pi: StatePoint
    rho: StatePoint
    mu: StatePoint
    gamma: StatePoint
    alpha: float
    eps_alpha: float
    nu0: StatePoint
    c1: float
    c2: float

    def __post_init__(self):
        if not 0.0 < self.eps_alpha < 1.0 / 3.0:
            raise UsageError("eps_alpha must lie in (0, 1/3)")


@dataclass
class QuadrupleReport:
    alpha: float
    eps: float
    phi: float
    psi: float
    xi: float
    alpha_psi: float
    key1_residual: float
    key2_residual: float

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "eps": self.eps, "Phi": self.phi,
                "Psi": self.psi, "Xi": self.xi, "alphaPsi": self.alpha_psi,
                "key1_residual": self.key1_residual,
                "key2_residual": self.key2_residual}


@dataclass
class QuadruplicationResult:
    entries: list[tuple[QuadrupleState, QuadrupleReport]]
    sup_gap: float            # sup over the grid of u - v
    gap_constant: float       # fitted C in sup(u-v) <= Phi_a + C a^{-1/2}

    def trend(self) -> list[float]:
        return [rep.alpha_psi + rep.xi for _, rep in self.entries]

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump([rep.to_json() for _, rep in self.entries], fh,
                      indent=2, sort_keys=True)


def _ebar_values(space: Space, base: list[StatePoint], nu0: StatePoint,
                 c1: float, c2: float) -> np.ndarray:
    out = np.empty(len(base))
    for i, p in enumerate(base):
        e = space.energy(p)
        if e.infinite:
            out[i] = math.inf
        else:
            out[i] = e.value + 0.5 * c1 * space.distance(p, nu0) ** 2 + c2
    return out


def quadruplicate(space: Space, u: GridFunction, v: GridFunction,
                  alpha_schedule: list[float], nu0: StatePoint,
                  c1: float | None = None, flow_dt: float = 1e-2,
                  product_cap: int = 10**7) -> QuadruplicationResult:
    """Run the four-variable Ekeland optimization along a weight schedule.

    For each alpha: a doubled-variable warm start picks (pi0, mu0) as the
    exact maximizer of u(pi) - v(mu) - alpha/2 d^2(pi, mu); (rho0, gamma0)
    are the nearest finite-energy grid points; eps_alpha is set
    constructively so that Xi_alpha(x0) + eps_alpha < 1/alpha; the
    four-variable objective is maximized exactly over the product grid
    and polished by the Ekeland walk with delta = 1/alpha under the
    weighted Tataru penalty.
    """
    base = u.points
    n = len(base)
    if [p.coords for p in v.points] != [p.coords for p in base]:
        raise UsageError("u and v must share one grid")
    if n**4 > product_cap:
        raise UsageError(
            f"product grid size {n}^4 exceeds the cap {product_cap}; coarsen the grid"
        )
    if c1 is None:
        c1 = max(1.0, 1.0 - space.kappa)
    c2, _ = fit_quadratic_lower_bound(space, nu0, c1)

    chart = np.stack([space.to_chart(p) for p in base])
    sq = space.chart_scale**2 * (
        np.sum((chart[:, None, :] - chart[None, :, :]) ** 2, axis=2)
    )
    ebar = _ebar_values(space, base, nu0, c1, c2)
    if np.any(np.isinf(ebar)):
        raise UsageError("quadruplication grids must lie in the energy domain")
    dt_matrix = tataru_matrix(space, base, flow_dt)
    sup_gap = float(np.max(u.values - v.values))

    entries = []
    worst_c = 0.0
    for alpha in alpha_schedule:
        pair = u.values[:, None] - v.values[None, :] - 0.5 * alpha * sq
        i_pi0, i_mu0 = np.unravel_index(int(np.argmax(pair)), pair.shape)
        i_rho0, i_gamma0 = int(i_pi0), int(i_mu0)  # same grid, finite energy
        s0 = 1.5 * ebar[i_rho0] + ebar[i_gamma0]
        eps = min(0.25, 0.5 / (alpha * (s0 + 1.0)))

        wm = 1.0 / (1.0 - eps)
        wp = 1.0 / (1.0 + eps)
        g_flat = (
            wm * u.values[:, None, None, None]
            - wp * v.values[None, None, :, None]
            - alpha * (0.5 * wm * sq[:, :, None, None]    # d^2(pi, rho)
                       + 0.5 * sq[None, :, None, :]       # d^2(rho, gamma)
                       + 0.5 * wp * sq[None, None, :, :]) # d^2(gamma, mu)
            - eps * wm * ebar[None, :, None, None]
            - eps * wp * ebar[None, None, None, :]
        ).reshape(-1)

        grid = _ProductGrid(base)
        weights = (wm, 1.0, wp, 1.0)

        def penalty(i: int, j: int) -> float:
            ii, jj = grid.decode(i), grid.decode(j)
            return sum(w * dt_matrix[a, b] for w, a, b in zip(weights, ii, jj))

        def penalty_batch(j: int, _g=grid, _w=weights) -> np.ndarray:
            n1 = _g.n
            jj = _g.decode(j)
            cols = [dt_matrix[:, b] * w for w, b in zip(_w, jj)]
            return (cols[0][:, None, None, None] + cols[1][None, :, None, None]
                    + cols[2][None, None, :, None] + cols[3][None, None, None, :]
                    ).reshape(-1)

        x_hat = int(np.argmax(g_flat))
        problem = EkelandProblem(grid, g_flat, penalty, 1.0 / alpha, x_hat,
                                 penalty_batch=penalty_batch)
        result = ekeland_optimize(problem)
        i_pi, i_rho, i_mu, i_gamma = grid.decode(result.x_delta)

        phi = wm * u.values[i_pi] - wp * v.values[i_mu]
        psi = (0.5 * wm * sq[i_pi, i_rho] + 0.5 * sq[i_rho, i_gamma]
               + 0.5 * wp * sq[i_gamma, i_mu])
        xi = eps * wm * ebar[i_rho] + eps * wp * ebar[i_gamma]
        state = QuadrupleState(base[i_pi], base[i_rho], base[i_mu], base[i_gamma],
                               alpha, eps, nu0, c1, c2)
        key = verify_key_estimates(space, state)
        entries.append((state, QuadrupleReport(
            alpha, eps, float(phi), float(psi), float(xi), float(alpha * psi),
            key["residual1"], key["residual2"])))
        worst_c = max(worst_c, (sup_gap - phi) * math.sqrt(alpha))
    return QuadruplicationResult(entries, sup_gap, worst_c)


def verify_key_estimates(space: Space, q: QuadrupleState,
                         lam: float | None = None) -> dict:
    """Both sides of the drift and squared-distance key bounds at a
    quadruple, with the vanishing terms reported as signed residuals.

    residual1 pairs the weighted energy-difference combination against
    -eps/(1-eps) I(rho) - eps/(1+eps) I(gamma); residual2 pairs the
    weighted squared-distance gap against +eps/(1-eps) I(rho) +
    eps/(1+eps) I(gamma).  Residuals are expected to shrink along a
    growing alpha schedule; callers flag failures of that trend.
    """
    eps, alpha = q.eps_alpha, q.alpha
    wm, wp = 1.0 / (1.0 - eps), 1.0 / (1.0 + eps)
    e_pi, e_rho = float(space.energy(q.pi)), float(space.energy(q.rho))
    e_mu, e_gamma = float(space.energy(q.mu)), float(space.energy(q.gamma))
    i_rho, i_gamma = float(space.information(q.rho)), float(space.information(q.gamma))
    if math.isinf(i_rho) or math.isinf(i_gamma):
        raise UsageError("key estimates need finite information at rho and gamma")
    d2_pr = space.distance(q.pi, q.rho) ** 2
    d2_gm = space.distance(q.gamma, q.mu) ** 2
    k = space.kappa
    lhs1 = alpha * (wm * (e_rho - e_pi + 0.5 * k * d2_pr)
                    - wp * (e_mu - e_gamma - 0.5 * k * d2_pr))
    rhs1 = -eps * wm * i_rho - eps * wp * i_gamma
    lhs2 = 0.5 * alpha**2 * wm * d2_pr - 0.5 * alpha**2 * wp * d2_gm
    rhs2 = eps * wm * i_rho + eps * wp * i_gamma
    return {
        "alpha": alpha, "eps": eps, "lambda": lam,
        "lhs1": lhs1, "rhs1": rhs1, "residual1": lhs1 - rhs1,
        "lhs2": lhs2, "rhs2": rhs2, "residual2": lhs2 - rhs2,
    }


# ---------------------------------------------------------------------------
# Jensen-type inequality for the quadratic distance
# ---------------------------------------------------------------------------

def jensen_distance_check(space: Space,
                          samples: list[tuple[StatePoint, StatePoint,
                                              StatePoint, StatePoint]],
                          eps_grid: tuple[float, ...] = (0.05, 0.15, 0.3),
                          eps_prime_grid: tuple[float, ...] = (0.05, 0.15, 0.3)
                          ) -> float:
    """max violation of

        1/6 1/(1-eps') 1/2 d^2(n1,n4) <= 1/(1-eps) 1/2 d^2(n1,n2)
            + 1/2 d^2(n2,n3) + 1/(1+eps) 1/2 d^2(n3,n4)

    over the sample quadruples and the (eps, eps') grids."""
    for e in (*eps_grid, *eps_prime_grid):
        if not 0.0 < e < 1.0 / 3.0:
            raise UsageError("jensen weights must lie in (0, 1/3)")
    worst = -math.inf
    for n1, n2, n3, n4 in samples:
        d14 = space.distance(n1, n4) ** 2
        d12 = space.distance(n1, n2) ** 2
        d23 = space.distance(n2, n3) ** 2
        d34 = space.distance(n3, n4) ** 2
        for ep in eps_prime_grid:
            lhs = d14 / (12.0 * (1.0 - ep))
            for e in eps_grid:
                rhs = 0.5 * d12 / (1.0 - e) + 0.5 * d23 + 0.5 * d34 / (1.0 + e)
                worst = max(worst, lhs - rhs)
    return worst
