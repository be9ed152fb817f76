"""Config-driven experiment runner.

Usage:
    evikit run <config.json>
    evikit list-builtins

A config is a single JSON object:

    {
      "space":  {"space": "cir", "params": {...}},
      "kind":   "flow" | "evi" | "tataru" | "resolvent" | "viscosity"
                | "comparison" | "quadruplication" | "properties",
      "params": { ... kind-specific ... },
      "output_dir": "out",
      "seed": 0
    }

Result files (CSV per RFC 4180 with '.' decimals, JSON in UTF-8 with
sorted keys) are byte-identical for a fixed config and seed; the
manifest.json echoing the config additionally records versions and wall
time.  Exit codes: 0 all assertions pass, 1 assertion failure, 2 config
error, 3 numerical-solver failure.  EVIKIT_THREADS caps the number of
worker threads used for independent experiment cells.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ConstructionError,
    NumericalError,
    Space,
    StatePoint,
    UsageError,
    check_geodesic_property,
    check_kappa_convexity,
    check_metric_axioms,
    check_noise_identity,
)
from .potentials import builtin_potentials, make_potential
from .spaces import (
    AllenCahnDescriptor,
    CirDescriptor,
    QuadraticDescriptor,
    Wasserstein1DDescriptor,
    builtin_spaces,
    make_allen_cahn,
    make_cir,
    make_ou,
    make_quadratic,
    make_wasserstein1d,
    mccann_check,
)
from .flow import (
    FlowConfig,
    flow_any,
    flow_exact,
    flow_mms,
    verify_contraction,
    verify_energy_identity,
    verify_evi,
)
from .tataru import (
    tataru_batch_csv,
    tataru_distance,
    verify_tataru_flow_lipschitz,
    verify_tataru_lipschitz,
    verify_tataru_triangle,
)
from .hj import (
    GridFunction,
    LowerTestFunction,
    UpperTestFunction,
    builtin_data_functions,
    check_comparison,
    hamiltonian_sandwich_check,
    make_data_function,
    solve_resolvent_cir,
    solve_resolvent_quadratic,
    value_by_rollout,
    verify_subsolution,
    verify_supersolution,
)
from .ekeland import jensen_distance_check, quadruplicate


class ConfigError(ValueError):
    pass


def _require(params: dict, key: str, kind=None):
    if key not in params:
        raise ConfigError(f"missing config field '{key}'")
    val = params[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config field '{key}' has wrong type")
    return val


def _positive(params: dict, key: str) -> float:
    val = float(_require(params, key))
    if val <= 0:
        raise ConfigError(f"config field '{key}' must be positive, got {val}")
    return val


def _potential_from(spec) -> object | None:
    if spec is None:
        return None
    if isinstance(spec, str):
        return make_potential(spec)
    return make_potential(_require(spec, "name"), **spec.get("params", {}))


def build_space(desc: dict) -> Space:
    name = _require(desc, "space")
    params = desc.get("params", {})
    try:
        if name == "cir":
            return make_cir(CirDescriptor(
                mu=_positive(params, "mu"),
                x_lo=float(params.get("x_lo", 1e-4)),
                x_hi=params.get("x_hi"),
            ))
        if name == "ou":
            return make_ou(float(params.get("kappa", 1.0)))
        if name == "quadratic":
            return make_quadratic(QuadraticDescriptor(
                dimension=int(params.get("dimension", 1)),
                kappa=float(params.get("kappa", 1.0)),
                perturbation=_potential_from(params.get("perturbation")),
            ))
        if name == "allen_cahn":
            return make_allen_cahn(AllenCahnDescriptor(
                grid_size=int(_require(params, "grid_size")),
                length=_positive(params, "length"),
                kappa=float(params.get("kappa", 0.0)),
                well=_potential_from(params.get("well")),
            ))
        if name == "wasserstein1d":
            return make_wasserstein1d(Wasserstein1DDescriptor(
                m=int(_require(params, "m")),
                internal=_potential_from(params.get("internal")),
                potential=_potential_from(params.get("potential")),
                interaction=_potential_from(params.get("interaction")),
                kappa_v=float(params.get("kappa_v", 0.0)),
                kappa_w=float(params.get("kappa_w", 0.0)),
            ))
    except ConstructionError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown space '{name}'; available: {builtin_spaces()}")


def _state(space: Space, spec) -> StatePoint:
    if isinstance(spec, dict) and spec.get("gaussian") is not None:
        if not hasattr(space, "gaussian_state"):
            raise ConfigError(f"space '{space.name}' has no gaussian state family")
        g = spec["gaussian"]
        return space.gaussian_state(float(g.get("mean", 0.0)), float(g.get("sd", 1.0)))
    return StatePoint.of(spec)


def _max_workers() -> int:
    env = os.environ.get("EVIKIT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Experiment kinds
# ---------------------------------------------------------------------------

def run_flow(space, params, out: Path, rng):
    dt = _positive(params, "dt")
    T = _positive(params, "T")
    if dt > T:
        raise ConfigError("config field 'dt' must not exceed 'T'")
    x0 = _state(space, _require(params, "x0"))
    mode = params.get("mode", "auto")
    if mode == "exact":
        traj = flow_exact(space, x0, T, dt)
    elif mode == "mms":
        traj = flow_mms(space, x0, FlowConfig(
            dt=dt, horizon=T,
            jko_inner_tol=float(params.get("jko_inner_tol", 1e-9)),
            jko_max_iter=int(params.get("jko_max_iter", 500))))
    else:
        traj = flow_any(space, x0, T, dt)
    traj.to_csv(out / "trajectory.csv")
    assertions = []
    if "energy_tol" in params:
        resid = verify_energy_identity(space, traj)
        assertions.append(("energy_identity", resid <= float(params["energy_tol"]),
                           f"residual {resid:.3e}"))
    if "contraction" in params:
        sub = params["contraction"]
        q0 = _state(space, _require(sub, "q0"))
        viol = verify_contraction(space, x0, q0, T, dt)
        assertions.append(("contraction", viol <= float(sub.get("tol", 1e-6)),
                           f"violation {viol:.3e}"))
    if "mms_convergence" in params:
        sub = params["mms_convergence"]
        dts = [float(v) for v in _require(sub, "dts", list)]
        lo_r, hi_r = sub.get("ratio_range", [1.7, 2.3])
        errs = []
        for dt_k in dts:
            mms = flow_mms(space, x0, FlowConfig(dt=dt_k, horizon=T))
            ref = flow_exact(space, x0, T, dt_k)
            errs.append(space.distance(mms.end, ref.end))
        ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
        ok = all(lo_r <= r <= hi_r for r in ratios)
        assertions.append(("mms_convergence", ok,
                           f"ratios {['%.2f' % r for r in ratios]}"))
    return assertions


def run_evi(space, params, out: Path, rng):
    dt = _positive(params, "dt")
    T = _positive(params, "T")
    tol = _positive(params, "tol")
    x0 = _state(space, _require(params, "x0"))
    probes = [_state(space, p) for p in _require(params, "probes", list)]
    traj = flow_any(space, x0, T, dt)
    report = verify_evi(space, traj, probes)
    report.write_json(out / "evi_report.json")
    return [("evi", report.max_violation <= tol,
             f"max_violation {report.max_violation:.3e} <= {tol}")]


def run_tataru(space, params, out: Path, rng):
    if "pairs_in" in params:
        n = tataru_batch_csv(space, params["pairs_in"], out / "tataru_values.csv",
                             float(params.get("flow_dt", 1e-2)))
        return [("batch", True, f"{n} pairs evaluated")]
    n = int(params.get("n_samples", 1000))
    flow_dt = float(params.get("flow_dt", 5e-3))
    tol = _positive(params, "tol")
    suites = params.get("suites", ["lipschitz", "flow_lipschitz", "triangle"])

    def cell(suite):
        local = np.random.default_rng(rng.integers(2**63))
        if suite == "lipschitz":
            samples = [tuple(space.sample_point(local) for _ in range(4))
                       for _ in range(n)]
            return suite, verify_tataru_lipschitz(space, samples, flow_dt)
        if suite == "flow_lipschitz":
            samples = [tuple(space.sample_point(local) for _ in range(2))
                       for _ in range(n)]
            return suite, verify_tataru_flow_lipschitz(space, samples,
                                                       (1e-2, 1e-3), flow_dt)
        if suite == "triangle":
            samples = [tuple(space.sample_point(local) for _ in range(3))
                       for _ in range(n)]
            return suite, verify_tataru_triangle(space, samples, flow_dt)
        raise ConfigError(f"unknown tataru suite '{suite}'")

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = dict(pool.map(cell, suites))
    payload = {k: results[k] for k in sorted(results)}
    if "oracle" in params:
        o = params["oracle"]
        res = tataru_distance(space, _state(space, o["pi"]), _state(space, o["rho"]),
                              flow_dt)
        payload["oracle"] = {"value": res.value, "t_star": res.t_star}
    _write_json(out / "tataru_report.json", payload)
    return [(k, v <= tol, f"violation {v:.3e} <= {tol}") for k, v in sorted(results.items())]


def _solve_for(space, params, lam, h_fn, n_grid, tol):
    if space.name == "cir":
        return solve_resolvent_cir(space.desc, lam, h_fn, n_grid, tol)
    if space.name == "quadratic" and space.dimension == 1:
        lo = float(params.get("x_lo", -4.0))
        hi = float(params.get("x_hi", 4.0))
        return solve_resolvent_quadratic(space, lam, h_fn, lo, hi, n_grid, tol)
    raise ConfigError(f"resolvent solving is not supported on space '{space.name}'")


def run_resolvent(space, params, out: Path, rng):
    lam = _positive(params, "lambda")
    tol = float(params.get("tol", 1e-6))
    n_grid = int(params.get("n_grid", 800))
    h_spec = _require(params, "h")
    h_fn = make_data_function(_require(h_spec, "name"), **h_spec.get("params", {}))
    sol = _solve_for(space, params, lam, h_fn, n_grid, tol)
    sol.write_csv(out / "resolvent.csv")
    sol.write_json(out / "resolvent.json")
    assertions = [("residual", sol.residual <= tol, f"{sol.residual:.3e} <= {tol}"),
                  ("max_principle",
                   float(np.max(np.abs(sol.f.values)))
                   <= float(np.max(np.abs(h_fn(sol.f.coords())))) + 1e-9,
                   "||f|| <= ||h||")]
    if "rollout" in params:
        ro = params["rollout"]
        cg = ro.get("control", {})
        us = np.linspace(float(cg.get("lo", -3.0)), float(cg.get("hi", 3.0)),
                         int(cg.get("n", 21)))
        dt = float(ro.get("dt", 5e-3))
        T = float(ro.get("T", lam * math.log(1e4)))
        xs = sol.f.coords()
        dx = xs[1] - xs[0]
        rows = []
        ok = True
        for idx in ro.get("nodes", []):
            val = value_by_rollout(space, lam, h_fn, sol.f.points[int(idx)],
                                   us, dt, T, state_grid=xs)
            f_i = float(sol.f.values[int(idx)])
            in_band = f_i - 10 * dt - 5 * dx <= val <= f_i
            ok = ok and in_band
            rows.append({"node": int(idx), "rollout": val, "f": f_i,
                         "in_band": in_band})
        _write_json(out / "rollout.json", rows)
        assertions.append(("rollout_band", ok, f"{len(rows)} nodes"))
    return assertions


def run_viscosity(space, params, out: Path, rng):
    lam = _positive(params, "lambda")
    n_grid = int(params.get("n_grid", 800))
    h_spec = _require(params, "h")
    h_fn = make_data_function(_require(h_spec, "name"), **h_spec.get("params", {}))
    sol = _solve_for(space, params, lam, h_fn, n_grid, float(params.get("tol", 1e-6)))
    xs = sol.f.coords()
    dx = xs[1] - xs[0]
    tol = float(params.get("tol_factor", 10.0)) * dx
    sweep = params.get("sweep", {})
    a_values = sweep.get("a_values", [0.5, 1.0, 2.0, 4.0])
    b_values = sweep.get("b_values", [1e-3, 1e-2, 1e-1])
    n_anchors = int(sweep.get("n_anchors", 5))
    idx = np.linspace(0.05 * n_grid, 0.95 * n_grid, n_anchors).astype(int)
    h_grid = GridFunction(sol.f.points, h_fn(xs))
    tfs_up = [UpperTestFunction(space, a, b, 0.0, sol.f.points[i], sol.f.points[i])
              for a in a_values for b in b_values for i in idx]
    tfs_low = [LowerTestFunction(space, a, b, 0.0, sol.f.points[i], sol.f.points[i])
               for a in a_values for b in b_values for i in idx]
    rep_sub = verify_subsolution(sol.f, tfs_up, lam, h_grid, tol)
    rep_sup = verify_supersolution(sol.f, tfs_low, lam, h_grid, tol)
    _write_json(out / "viscosity_report.json",
                {"subsolution": rep_sub.to_json(), "supersolution": rep_sup.to_json()})
    return [("subsolution_sweep", rep_sub.passed,
             f"{len(tfs_up)} test functions, worst {rep_sub.worst:.3e}"),
            ("supersolution_sweep", rep_sup.passed,
             f"{len(tfs_low)} test functions, worst {rep_sup.worst:.3e}")]


def run_comparison(space, params, out: Path, rng):
    lam = _positive(params, "lambda")
    n_grid = int(params.get("n_grid", 800))
    deltas = [float(d) for d in _require(params, "deltas", list)]
    h_spec = _require(params, "h")
    h_fn = make_data_function(_require(h_spec, "name"), **h_spec.get("params", {}))
    tol_sol = float(params.get("tol", 1e-6))
    base = _solve_for(space, params, lam, h_fn, n_grid, tol_sol)
    xs = base.f.coords()
    dx = xs[1] - xs[0]
    tol = float(params.get("tol_factor", 10.0)) * dx
    h_grid = GridFunction(base.f.points, h_fn(xs))

    def cell(delta):
        shifted = _solve_for(space, params, lam, lambda x: h_fn(x) - delta,
                             n_grid, tol_sol)
        res = check_comparison(base.f, shifted.f, h_grid,
                               GridFunction(base.f.points, h_fn(xs) - delta), tol)
        return delta, res

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = dict(pool.map(cell, deltas))
    same = check_comparison(base.f, base.f, h_grid, h_grid, tol)
    payload = {"identical": same.to_json(),
               "shifted": {repr(d): results[d].to_json() for d in sorted(results)}}
    _write_json(out / "comparison_report.json", payload)
    assertions = [("identical_data", abs(same.lhs) <= tol, f"|lhs| = {abs(same.lhs):.3e}")]
    for d in sorted(results):
        r = results[d]
        assertions.append((f"delta_{d}", r.lhs <= d + tol,
                           f"lhs {r.lhs:.4f} <= {d} + {tol:.4f}"))
    return assertions


def run_quadruplication(space, params, out: Path, rng):
    lam = _positive(params, "lambda")
    grid = params.get("grid", {})
    lo, hi = float(grid.get("lo", -2.0)), float(grid.get("hi", 2.0))
    n = int(grid.get("n", 41))
    alphas = [float(a) for a in params.get("alphas", [10.0, 100.0, 1000.0])]
    h_spec = _require(params, "h")
    h_fn = make_data_function(_require(h_spec, "name"), **h_spec.get("params", {}))
    v_scale = float(params.get("v_scale", 0.9))
    sol_u = _solve_for(space, params, lam, h_fn, n, 1e-8)
    sol_v = _solve_for(space, params, lam, lambda x: v_scale * h_fn(x), n, 1e-8)
    nu0 = _state(space, params.get("nu0", [0.0]))
    result = quadruplicate(space, sol_u.f, sol_v.f, alphas, nu0,
                           flow_dt=float(params.get("flow_dt", 1e-2)))
    result.write_json(out / "quadruplication_report.json")
    trend = result.trend()
    mono = all(trend[i + 1] <= trend[i] + 1e-15 for i in range(len(trend) - 1))
    ratio = trend[-1] / trend[0] if trend[0] > 0 else 0.0
    ratio_max = float(params.get("ratio_max", 0.1))
    shrink_min = float(params.get("shrink_min", 1.5))
    shrinks = []
    for i in range(len(result.entries) - 1):
        r0 = abs(result.entries[i][1].key1_residual) + abs(result.entries[i][1].key2_residual)
        r1 = abs(result.entries[i + 1][1].key1_residual) + abs(result.entries[i + 1][1].key2_residual)
        shrinks.append(r0 / r1 if r1 > 0 else math.inf)
    return [("trend_nonincreasing", mono, f"{trend}"),
            ("trend_ratio", ratio <= ratio_max, f"{ratio:.4f} <= {ratio_max}"),
            ("key_residual_shrink", all(s >= shrink_min for s in shrinks),
             f"ratios {['%.2f' % s for s in shrinks]}"),
            ("gap_bound", True, f"C = {result.gap_constant:.4f}")]


def run_properties(space, params, out: Path, rng):
    checks = params.get("checks", ["metric", "geodesic", "kappa_convexity"])
    n = int(params.get("n_samples", 1000))
    assertions = []
    payload = {}
    for check in checks:
        if check == "metric":
            rep = check_metric_axioms(space, n, rng)
            payload["metric"] = rep.max_violation
            assertions.append(("metric_axioms", rep.max_violation <= space.tol_metric,
                               f"violation {rep.max_violation:.3e}"))
        elif check == "geodesic":
            worst = -math.inf
            for _ in range(int(params.get("n_geodesics", 20))):
                p, q = space.sample_point(rng), space.sample_point(rng)
                worst = max(worst, check_geodesic_property(space, p, q))
            payload["geodesic"] = worst
            assertions.append(("geodesic_property", worst <= space.tol_geo,
                               f"violation {worst:.3e}"))
        elif check == "kappa_convexity":
            rep = check_kappa_convexity(space, int(params.get("n_geodesics", 100)),
                                        rng=rng)
            tol = float(params.get("convexity_tol", 1e-8))
            payload["kappa_convexity"] = rep.max_violation
            assertions.append(("kappa_convexity", rep.max_violation <= tol,
                               f"violation {rep.max_violation:.3e}"))
        elif check == "noise_identity":
            pairs = [(space.sample_point(rng), space.sample_point(rng))
                     for _ in range(int(params.get("n_pairs", 20)))]
            rep = check_noise_identity(space, pairs, rng)
            payload["noise_identity"] = rep.max_violation
            assertions.append(("noise_identity", rep.max_violation <= 1e-4,
                               f"violation {rep.max_violation:.3e}"))
        elif check == "mccann":
            pot = _potential_from(_require(params, "mccann_potential"))
            rep = mccann_check(pot)
            payload["mccann"] = rep.to_json()
            expected = bool(params.get("mccann_expect_pass", True))
            assertions.append(("mccann", rep.passed == expected,
                               "; ".join(rep.violations) or "all predicates hold"))
        elif check == "jensen":
            quads = [tuple(space.sample_point(rng) for _ in range(4))
                     for _ in range(n)]
            worst = jensen_distance_check(space, quads)
            payload["jensen"] = worst
            assertions.append(("jensen", worst <= float(params.get("jensen_tol", 1e-9)),
                               f"violation {worst:.3e}"))
        elif check == "sandwich":
            anchors = [space.sample_point(rng) for _ in range(5)]
            samples = [space.sample_point(rng) for _ in range(20)]
            tf_params = [(a, anchor) for a in (0.5, 1.0, 2.0) for anchor in anchors]
            worst = hamiltonian_sandwich_check(space, tf_params, samples)
            payload["sandwich"] = worst
            assertions.append(("hamiltonian_sandwich", worst <= 1e-4,
                               f"violation {worst:.3e}"))
        elif check == "ekeland":
            ok, detail = _ekeland_exactness_cell(space, params)
            payload["ekeland"] = detail
            assertions.append(("ekeland_exactness", ok, detail))
        else:
            raise ConfigError(f"unknown properties check '{check}'")
    _write_json(out / "properties_report.json", payload)
    return assertions


def _ekeland_exactness_cell(space, params):
    """Exhaustive Ekeland run: a line problem on the space's chart plus a
    Tataru-penalized product-grid problem, both verified exhaustively."""
    from .ekeland import EkelandProblem, ekeland_optimize, tataru_matrix, \
        verify_ekeland_result

    n_line = int(params.get("ekeland_points", 2001))
    xs = np.linspace(-5.0, 5.0, n_line)
    g = np.sin(3.0 * xs) - 0.1 * xs**2
    line = EkelandProblem(list(range(n_line)), g,
                          lambda i, j: abs(xs[i] - xs[j]), 0.05, 0,
                          penalty_batch=lambda j: np.abs(xs - xs[j]))
    res = verify_ekeland_result(line, ekeland_optimize(line))
    ok = (res["inv1_slack"] >= -1e-12 and res["inv2_max"] <= 1e-12
          and res["uniqueness_margin"] > 0.0)

    base = [space.sample_point(np.random.default_rng(5)) for _ in range(6)]
    dt_m = tataru_matrix(space, base, 1e-2)
    n = len(base)
    rng_g = np.random.default_rng(9)
    g4 = rng_g.normal(0.0, 1.0, n**4)

    def decode(f):
        i3 = f % n; f //= n
        i2 = f % n; f //= n
        return f // n, f % n, i2, i3

    def pen(i, j):
        ii, jj = decode(i), decode(j)
        return sum(dt_m[a, b] for a, b in zip(ii, jj))

    def pen_batch(j):
        jj = decode(j)
        cols = [dt_m[:, b] for b in jj]
        return (cols[0][:, None, None, None] + cols[1][None, :, None, None]
                + cols[2][None, None, :, None] + cols[3][None, None, None, :]
                ).reshape(-1)

    prod = EkelandProblem(list(range(n**4)), g4, pen, 0.2, 0,
                          penalty_batch=pen_batch)
    res2 = verify_ekeland_result(prod, ekeland_optimize(prod))
    ok = ok and (res2["inv1_slack"] >= -1e-12 and res2["inv2_max"] <= 1e-12
                 and res2["uniqueness_margin"] > 0.0)
    return ok, f"line({n_line}) and product({n**4}) instances exhaustive"


_RUNNERS = {
    "flow": run_flow,
    "evi": run_evi,
    "tataru": run_tataru,
    "resolvent": run_resolvent,
    "viscosity": run_viscosity,
    "comparison": run_comparison,
    "quadruplication": run_quadruplication,
    "properties": run_properties,
}


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run(config_path: str) -> int:
    t0 = time.time()
    try:
        with open(config_path, encoding="utf-8") as fh:
            config = json.load(fh)
        kind = _require(config, "kind")
        if kind not in _RUNNERS:
            raise ConfigError(f"unknown experiment kind '{kind}'")
        space = build_space(_require(config, "space", dict))
        out = Path(config.get("output_dir", "out"))
        out.mkdir(parents=True, exist_ok=True)
        seed = int(config.get("seed", 0))
        rng = np.random.default_rng(seed)
        params = config.get("params", {})
    except (ConfigError, UsageError, ConstructionError, OSError,
            json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        assertions = _RUNNERS[kind](space, params, out, rng)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    passed = all(ok for _, ok, _ in assertions)
    manifest = {
        "config": config,
        "versions": {
            "evikit": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": round(time.time() - t0, 3),
        "summary": {
            "passed": passed,
            "assertions": [{"name": name, "passed": ok, "detail": detail}
                           for name, ok, detail in assertions],
        },
    }
    _write_json(out / "manifest.json", manifest)
    for name, ok, detail in assertions:
        print(f"[{'PASS' if ok else 'FAIL'}] {kind}.{name}: {detail}")
    return 0 if passed else 1


def list_builtins() -> int:
    print("spaces:")
    for name in builtin_spaces():
        print(f"  {name}")
    print("potentials:")
    for name in builtin_potentials():
        print(f"  {name}")
    print("data functions:")
    for name in builtin_data_functions():
        print(f"  {name}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="evikit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    sub.add_parser("list-builtins", help="list spaces, potentials and data functions")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config)
    return list_builtins()


if __name__ == "__main__":
    sys.exit(main())
