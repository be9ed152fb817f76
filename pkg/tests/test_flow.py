"""Flow engines and EVI-consequence verifiers against closed-form oracles."""

import math

import numpy as np
import pytest

from evikit.core import StatePoint, UnsupportedFlowError, UsageError
from evikit.flow import (
    FlowConfig,
    Trajectory,
    check_semigroup,
    fit_quadratic_lower_bound,
    flow_exact,
    flow_mms,
    verify_contraction,
    verify_energy_identity,
    verify_evi,
)
from evikit.potentials import make_potential
from evikit.spaces import (
    CirDescriptor,
    QuadraticDescriptor,
    Wasserstein1DDescriptor,
    make_cir,
    make_ou,
    make_quadratic,
    make_wasserstein1d,
)


@pytest.fixture(scope="module")
def ou():
    return make_ou(1.0)


@pytest.fixture(scope="module")
def cir():
    return make_cir(CirDescriptor(mu=1.0))


@pytest.fixture(scope="module")
def heat_space():
    return make_wasserstein1d(Wasserstein1DDescriptor(
        m=200, internal=make_potential("entropy")))


# ---------------------------------------------------------------------------
# Exact flows
# ---------------------------------------------------------------------------

class TestExactFlows:
    def test_ou_exponential_decay(self, ou):
        traj = flow_exact(ou, StatePoint.of(1.0), math.log(2.0), 1e-3)
        assert traj.end.x == pytest.approx(0.5, abs=1e-12)

    def test_cir_mean_reversion(self, cir):
        # xdot = mu - x: x(ln 2) = 1 + 2 * 0.5 = 2
        traj = flow_exact(cir, StatePoint.of(3.0), math.log(2.0), 1e-3)
        assert traj.end.x == pytest.approx(2.0, abs=1e-12)

    def test_heat_flow_hits_heat_kernel_convolution(self, heat_space):
        """Quantiles of N(0,1) flowed for t=1.5 against an independent
        density-grid convolution with the heat kernel of variance 2t."""
        t = 1.5
        q0 = heat_space.gaussian_state(0.0, 1.0)
        flowed = heat_space.exact_flow(q0, t)
        xs = np.linspace(-12, 12, 9001)
        dx = xs[1] - xs[0]
        dens0 = np.exp(-xs**2 / 2) / math.sqrt(2 * math.pi)
        kernel = np.exp(-xs**2 / (4 * t)) / math.sqrt(4 * math.pi * t)
        dens_t = np.convolve(dens0, kernel, mode="same") * dx
        cdf = np.cumsum(dens_t) * dx
        oracle_q = np.interp(heat_space.levels, cdf, xs)
        assert np.max(np.abs(flowed.array - oracle_q)) < 5e-3
        # closed form: N(0, 1 + 2t) = N(0, 4)
        assert heat_space.distance(flowed, heat_space.gaussian_state(0.0, 2.0)) < 1e-12

    def test_no_closed_form_raises(self):
        space = make_quadratic(QuadraticDescriptor(
            dimension=1, kappa=1.0, perturbation=make_potential("quartic")))
        with pytest.raises(UnsupportedFlowError):
            flow_exact(space, StatePoint.of(1.0), 1.0, 0.1)

    def test_semigroup_property(self, ou, cir):
        assert check_semigroup(ou, StatePoint.of(1.5), 0.7, 1e-3) <= 1e-12
        assert check_semigroup(cir, StatePoint.of(3.0), 0.7, 1e-3) <= 1e-12


# ---------------------------------------------------------------------------
# Minimizing movement
# ---------------------------------------------------------------------------

class TestMinimizingMovement:
    def test_ou_first_order_accuracy(self, ou):
        traj = flow_mms(ou, StatePoint.of(1.0), FlowConfig(dt=1e-3, horizon=1.0))
        assert abs(traj.end.x - math.exp(-1.0)) <= 1e-3
        assert len(traj.states) == 1001

    def test_stationary_start_stays_constant(self, ou, cir):
        for space, p in ((ou, StatePoint.of(0.0)), (cir, StatePoint.of(1.0))):
            traj = flow_mms(space, p, FlowConfig(dt=1e-2, horizon=0.2))
            assert all(space.distance(s, p) <= 1e-9 for s in traj.states)

    def test_first_order_convergence_ratio(self, ou):
        errs = []
        for dt in (4e-3, 2e-3, 1e-3):
            traj = flow_mms(ou, StatePoint.of(1.0), FlowConfig(dt=dt, horizon=1.0))
            errs.append(abs(traj.end.x - math.exp(-1.0)))
        for i in range(2):
            assert 1.7 <= errs[i] / errs[i + 1] <= 2.3

    def test_cir_mms_matches_closed_form(self, cir):
        traj = flow_mms(cir, StatePoint.of(3.0), FlowConfig(dt=1e-3, horizon=1.0))
        exact = 1.0 + 2.0 * math.exp(-1.0)
        assert abs(traj.end.x - exact) <= 2e-3

    def test_energy_monotone_along_trajectories(self, ou, cir, heat_space):
        cases = [(ou, StatePoint.of(2.0)), (cir, StatePoint.of(3.0)),
                 (heat_space, heat_space.gaussian_state(0.2, 0.8))]
        for space, p in cases:
            traj = flow_mms(space, p, FlowConfig(dt=1e-2, horizon=0.3))
            vals = [float(space.energy(s)) for s in traj.states]
            assert all(vals[i + 1] <= vals[i] + 1e-10 for i in range(len(vals) - 1))

    def test_bad_config_rejected(self):
        with pytest.raises(UsageError):
            FlowConfig(dt=-1e-3, horizon=1.0)
        with pytest.raises(UsageError):
            FlowConfig(dt=2.0, horizon=1.0)


# ---------------------------------------------------------------------------
# EVI verifier
# ---------------------------------------------------------------------------

class TestEvi:
    def test_ou_holds_with_equality(self, ou):
        dt = 1e-3
        traj = flow_exact(ou, StatePoint.of(1.0), 2.0, dt)
        probes = [StatePoint.of(v) for v in np.linspace(-2, 3, 20)]
        rep = verify_evi(ou, traj, probes)
        assert rep.probe_count == 20
        assert -10 * dt <= rep.max_violation <= 10 * dt

    def test_stationary_start_at_probe(self, ou):
        traj = flow_exact(ou, StatePoint.of(0.0), 0.5, 1e-3)
        rep = verify_evi(ou, traj, [StatePoint.of(0.0)])
        assert abs(rep.max_violation) <= 1e-12

    def test_cir_with_finite_probes(self, cir):
        dt = 1e-3
        traj = flow_exact(cir, StatePoint.of(3.0), 2.0, dt)
        rep = verify_evi(cir, traj, [StatePoint.of(v) for v in (0.5, 1.0, 2.0)])
        assert rep.max_violation <= 10 * dt

    def test_infinite_energy_probe_rejected(self, cir):
        traj = flow_exact(cir, StatePoint.of(3.0), 0.1, 1e-2)
        with pytest.raises(UsageError):
            verify_evi(cir, traj, [StatePoint.of(0.0)])

    def test_report_json_shape(self, ou, tmp_path):
        traj = flow_exact(ou, StatePoint.of(1.0), 0.1, 1e-2)
        rep = verify_evi(ou, traj, [StatePoint.of(0.5)])
        rep.write_json(tmp_path / "evi.json")
        data = (tmp_path / "evi.json").read_text()
        assert '"max_violation"' in data and '"records"' in data


# ---------------------------------------------------------------------------
# Contraction and energy identity
# ---------------------------------------------------------------------------

class TestContraction:
    def test_ou_equality(self, ou):
        viol = verify_contraction(ou, StatePoint.of(1.0), StatePoint.of(-2.0),
                                  2.0, 1e-3)
        assert abs(viol) <= 1e-9

    def test_identical_points(self, ou):
        assert verify_contraction(ou, StatePoint.of(1.0), StatePoint.of(1.0),
                                  1.0, 1e-2) <= 1e-15

    def test_heat_flow_zero_modulus_bound(self, heat_space):
        q1 = heat_space.gaussian_state(0.0, 1.0)
        q2 = heat_space.gaussian_state(0.0, 2.0)
        viol = verify_contraction(heat_space, q1, q2, 2.0, 1e-2)
        assert viol <= 1e-3  # kappa = 0: distances may not grow


class TestEnergyIdentity:
    def test_ou_closed_form(self, ou):
        # E drop = 2(1 - e^{-2}); int I = int kappa^2 x0^2 e^{-2 kappa s} ds
        traj = flow_exact(ou, StatePoint.of(2.0), 1.0, 1e-3)
        assert verify_energy_identity(ou, traj) <= 1e-2

    def test_stationary_residual_zero(self, ou):
        traj = flow_exact(ou, StatePoint.of(0.0), 1.0, 1e-2)
        assert verify_energy_identity(ou, traj) <= 1e-14

    def test_gaussian_heat_flow(self, heat_space):
        # E drop = 1/2 log 3 = int_0^1 ds / (1 + 2s)
        q0 = heat_space.gaussian_state(0.0, 1.0)
        traj = flow_exact(heat_space, q0, 1.0, 1e-2)
        assert verify_energy_identity(heat_space, traj) <= 1e-2


# ---------------------------------------------------------------------------
# Quadratic lower bound fitting
# ---------------------------------------------------------------------------

class TestQuadraticLowerBound:
    def test_ou_centered(self, ou):
        c2, est = fit_quadratic_lower_bound(ou, StatePoint.of(0.0), 1.0)
        assert est == pytest.approx(0.0, abs=1e-9)
        assert c2 == pytest.approx(0.0, abs=1e-9)

    def test_concave_energy_with_compensating_c1(self):
        space = make_quadratic(QuadraticDescriptor(dimension=1, kappa=-1.0))
        c2, est = fit_quadratic_lower_bound(space, StatePoint.of(0.0), 2.0)
        assert est == pytest.approx(0.0, abs=1e-9)

    def test_cir_grid_search_reproducible(self, cir):
        vals = [fit_quadratic_lower_bound(cir, StatePoint.of(1.0), 0.5,
                                          rng=np.random.default_rng(3))
                for _ in range(2)]
        assert vals[0] == vals[1]
        assert vals[0][1] == pytest.approx(0.0, abs=1e-6)

    def test_c1_below_minus_kappa_rejected(self, ou):
        with pytest.raises(UsageError):
            fit_quadratic_lower_bound(ou, StatePoint.of(0.0), -1.5)


# ---------------------------------------------------------------------------
# Trajectory container
# ---------------------------------------------------------------------------

class TestTrajectory:
    def test_validation(self):
        p = StatePoint.of(1.0)
        with pytest.raises(UsageError):
            Trajectory(np.array([0.0, 0.0]), [p, p], "ou")
        with pytest.raises(UsageError):
            Trajectory(np.array([0.1, 0.2]), [p, p], "ou")
        with pytest.raises(UsageError):
            Trajectory(np.array([0.0]), [p, p], "ou")

    def test_csv_export_header(self, ou, tmp_path):
        traj = flow_exact(ou, StatePoint.of(1.0), 0.01, 1e-2)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,coord_0"
        assert len(lines) == len(traj.states) + 1

    def test_interpolation(self, ou):
        traj = flow_exact(ou, StatePoint.of(1.0), 1.0, 0.5)
        mid = traj.state_at(ou, 0.25)
        expected = 0.5 * (1.0 + math.exp(-0.5))
        assert mid.x == pytest.approx(expected, abs=1e-12)
