import numpy as np
import pytest

from conftest import hour_problem
from gridcap.acopf import (
    Objective,
    OpfProblem,
    OpfStatus,
    SolverOptions,
    kkt_report,
    objective_cost,
    solve,
)
from gridcap.model import ValidationError

# two-bus fixture constants (mirror data/two_bus.grid)
R, X = 0.02, 0.1
Z = complex(R, X)
C2, C1, C0 = 0.02, 25.0, 40.0
S_BASE = 10.0


def two_bus_pf(v1, pd_pu, qd_pu):
    """Closed-form power-flow solution of the single-line system.

    Solves the textbook quadratic in V2^2 for a load (pd, qd) behind an
    impedance from a source held at v1, then recovers the complex voltage
    and the source injection. Returns None when no real root exists.
    Independent of the package's own residual/Jacobian code.
    """
    b = 2.0 * (pd_pu * R + qd_pu * X) - v1 * v1
    c = (pd_pu**2 + qd_pu**2) * abs(Z) ** 2
    disc = b * b - 4.0 * c
    if disc < 0.0:
        return None
    v2sq = (-b + np.sqrt(disc)) / 2.0  # high-voltage root
    s_load = complex(pd_pu, qd_pu)
    v2c = (v2sq + np.conj(Z) * s_load) / v1
    i = (v1 - v2c) / Z
    s1 = v1 * np.conj(i)
    return {
        "v2": abs(v2c),
        "theta2": np.angle(v2c),
        "pg_pu": s1.real,
        "qg_pu": s1.imag,
    }


def economic_oracle(pd_mw, qd_mvar, v_hi=1.05, step=1e-4):
    """Scan the source voltage at `step` resolution; each point's operating
    state comes from the closed-form power flow. Returns the cheapest
    feasible dispatch."""
    best = None
    for v1 in np.arange(0.95, v_hi + step / 2, step):
        pf = two_bus_pf(v1, pd_mw / S_BASE, qd_mvar / S_BASE)
        if pf is None or not (0.95 <= pf["v2"] <= 1.05):
            continue
        pg = pf["pg_pu"] * S_BASE
        qg = pf["qg_pu"] * S_BASE
        if not (0.0 <= pg <= 10.0 and -8.0 <= qg <= 8.0):
            continue
        cost = C2 * pg**2 + C1 * pg + C0
        if best is None or cost < best["cost"]:
            best = {"cost": cost, "v1": v1, "pg": pg, **pf}
    return best


@pytest.fixture()
def base_problem(two_bus):
    net, _ = two_bus
    return OpfProblem(network=net, p_d=np.array([0.0, 4.0]), q_d=np.array([0.0, 1.5]))


class TestResiduals:
    def test_flat_no_flow_state_is_exactly_balanced(self, two_bus):
        net, _ = two_bus
        prob = OpfProblem(network=net, p_d=np.zeros(2), q_d=np.zeros(2))
        dp, dq = prob.residuals(np.ones(2), np.zeros(2), np.zeros(1), np.zeros(1))
        assert np.all(dp == 0.0) and np.all(dq == 0.0)

    def test_hand_solved_operating_point_has_tiny_residual(self, base_problem):
        pf = two_bus_pf(1.0, 0.4, 0.15)
        dp, dq = base_problem.residuals(
            np.array([1.0, pf["v2"]]),
            np.array([0.0, pf["theta2"]]),
            np.array([pf["pg_pu"] * S_BASE]),
            np.array([pf["qg_pu"] * S_BASE]),
        )
        assert np.abs(dp).max() <= 1e-10
        assert np.abs(dq).max() <= 1e-10

    def test_voltage_perturbation_matches_analytic_jacobian(self, base_problem):
        pf = two_bus_pf(1.0, 0.4, 0.15)
        v = np.array([1.0, pf["v2"]])
        th = np.array([0.0, pf["theta2"]])
        pg = np.array([pf["pg_pu"] * S_BASE])
        qg = np.array([pf["qg_pu"] * S_BASE])
        _, dq0 = base_problem.residuals(v, th, pg, qg)
        v_pert = v.copy()
        v_pert[0] += 0.01
        _, dq1 = base_problem.residuals(v_pert, th, pg, qg)
        # hand derivative of the bus-1 reactive residual w.r.t. V1
        y = 1.0 / Z
        b11, g12, b12 = y.imag, -y.real, -y.imag
        t12 = th[0] - th[1]
        dq1_dv1 = -(-2.0 * b11 * v[0] + v[1] * (g12 * np.sin(t12) - b12 * np.cos(t12)))
        predicted = dq1_dv1 * 0.01
        actual = dq1[0] - dq0[0]
        assert np.sign(actual) == np.sign(predicted)
        assert actual == pytest.approx(predicted, rel=0.2)

    def test_dimension_mismatch_rejected(self, base_problem):
        with pytest.raises(ValidationError, match="dimension"):
            base_problem.residuals(np.ones(3), np.zeros(3), np.zeros(1), np.zeros(1))


class TestObjectiveCost:
    def test_linear_cost(self, two_bus):
        net, _ = two_bus
        prob = OpfProblem(network=net, p_d=np.zeros(2), q_d=np.zeros(2))
        # fixture gen cost is (0.02, 25, 40); hand value at 2 MW
        assert objective_cost([2.0], prob) == pytest.approx(0.02 * 4 + 50 + 40)

    def test_fixed_cost_floor(self, two_bus):
        net, _ = two_bus
        prob = OpfProblem(network=net, p_d=np.zeros(2), q_d=np.zeros(2))
        assert objective_cost([0.0], prob) == pytest.approx(40.0)

    def test_old_shed_penalty(self, two_bus):
        net, _ = two_bus
        prob = OpfProblem(
            network=net,
            p_d=np.array([0.0, 1.0]),
            q_d=np.zeros(2),
            objective=Objective.OPTIMAL_LOAD_DELIVERY,
            dt=1.0,
        )
        full_shed = np.zeros(2)
        full_shed[1] = 1.0
        cost = objective_cost([0.0], prob, shed=full_shed)
        assert cost == pytest.approx(40.0 + 1000.0 * 1.0 * 1.0)


class TestSolve:
    def test_economic_matches_scan_oracle(self, base_problem):
        oracle = economic_oracle(4.0, 1.5)
        sol = solve(base_problem)
        assert sol.status is OpfStatus.OPTIMAL
        assert sol.objective_value == pytest.approx(oracle["cost"], rel=1e-4)
        assert sol.p_g[0] == pytest.approx(oracle["pg"], rel=1e-3)
        assert sol.v[0] == pytest.approx(oracle["v1"], abs=2e-4)
        assert sol.v[1] == pytest.approx(oracle["v2"], abs=2e-3)
        # regression anchor frozen from the oracle
        assert sol.objective_value == pytest.approx(141.1907, rel=1e-4)

    def test_generation_covers_load_plus_losses(self, base_problem):
        sol = solve(base_problem)
        losses = sol.p_g.sum() + sol.p_inj_mw.sum() - sol.p_load_mw.sum()
        assert losses > 0.0
        assert sol.p_g[0] == pytest.approx(4.0 + losses, abs=1e-9)

    def test_pinned_voltages_with_load_is_infeasible(self, two_bus):
        net, _ = two_bus
        # oracle: with both voltages pinned, the angle is the only free
        # variable; show no theta satisfies both bus-2 balances
        y = 1.0 / Z
        g, b = y.real, y.imag
        pd, qd = 0.6, 0.2
        thetas = np.arange(-np.pi, np.pi, 1e-4)
        v1 = v2 = 1.0
        p2 = v2 * v2 * g + v2 * v1 * (-g * np.cos(thetas) - b * np.sin(thetas))
        q2 = -v2 * v2 * b + v2 * v1 * (-g * np.sin(thetas) + b * np.cos(thetas))
        residual = np.maximum(np.abs(p2 + pd), np.abs(q2 + qd))
        assert residual.min() > 0.02  # no admissible steady state exists
        prob = OpfProblem(
            network=net,
            p_d=np.array([0.0, pd * S_BASE]),
            q_d=np.array([0.0, qd * S_BASE]),
            v_min=np.array([1.0, 1.0]),
            v_max=np.array([1.0, 1.0]),
        )
        sol = solve(prob)
        assert sol.status is OpfStatus.INFEASIBLE
        assert sol.max_mismatch > 0.01  # degradation is measurable, not binary

    def test_zero_demand_dispatches_to_minimum(self, two_bus):
        net, _ = two_bus
        prob = OpfProblem(network=net, p_d=np.zeros(2), q_d=np.zeros(2))
        sol = solve(prob)
        assert sol.status is OpfStatus.OPTIMAL
        assert sol.p_g[0] == pytest.approx(0.0, abs=1e-6)
        assert sol.objective_value == pytest.approx(40.0, abs=1e-4)

    def test_slack_angle_exactly_zero(self, base_problem):
        sol = solve(base_problem)
        assert sol.theta[0] == 0.0

    def test_deterministic_solves(self, base_problem):
        a, b = solve(base_problem), solve(base_problem)
        assert a.status == b.status
        assert a.objective_value == b.objective_value
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.lambda_q, b.lambda_q)

    def test_warm_start_reaches_same_optimum(self, two_bus, base_problem):
        net, _ = two_bus
        warm_src = solve(base_problem)
        shifted = OpfProblem(network=net, p_d=np.array([0.0, 4.2]), q_d=np.array([0.0, 1.6]))
        warm = solve(shifted, warm_start=warm_src)
        cold = solve(shifted)
        assert warm.status is OpfStatus.OPTIMAL
        assert warm.objective_value == pytest.approx(cold.objective_value, rel=1e-9)

    def test_warm_start_dimension_mismatch_rejected(self, five_bus, base_problem):
        net5, demand5 = five_bus
        sol2 = solve(base_problem)
        with pytest.raises(ValidationError):
            solve(hour_problem(net5, demand5, 0), warm_start=sol2)

    def test_multiplier_rescaling(self, base_problem):
        sol = solve(base_problem)
        np.testing.assert_allclose(sol.lambda_p_per_mw, sol.lambda_p / 10.0)
        np.testing.assert_allclose(sol.lambda_q_per_mvar, sol.lambda_q / 10.0)


class TestOptimalLoadDelivery:
    def test_no_shedding_when_service_feasible(self, two_bus):
        net, _ = two_bus
        econ = solve(OpfProblem(network=net, p_d=np.array([0.0, 4.0]), q_d=np.array([0.0, 1.5])))
        old = solve(
            OpfProblem(
                network=net,
                p_d=np.array([0.0, 4.0]),
                q_d=np.array([0.0, 1.5]),
                objective=Objective.OPTIMAL_LOAD_DELIVERY,
            )
        )
        assert old.status is OpfStatus.OPTIMAL
        assert float((old.shed * old.p_load_mw).sum()) <= 1e-5
        assert old.objective_value == pytest.approx(econ.objective_value, rel=1e-6)

    def test_overload_sheds_to_capacity(self, two_bus):
        net, _ = two_bus
        # 15 MW demanded, 10 MW generator: shedding is unavoidable
        sol = solve(
            OpfProblem(
                network=net,
                p_d=np.array([0.0, 15.0]),
                q_d=np.array([0.0, 5.0]),
                objective=Objective.OPTIMAL_LOAD_DELIVERY,
            )
        )
        assert sol.status is OpfStatus.OPTIMAL
        assert sol.p_g[0] == pytest.approx(10.0, abs=1e-5)
        assert sol.shed[1] > 0.3
        served = float(((1 - sol.shed) * sol.p_load_mw).sum())
        assert served < 10.0


class TestRelaxationMonotonicity:
    def test_widening_voltage_box_never_costs_more(self, two_bus, five_bus, microgrid9):
        cases = []
        for (net, demand), hours in (
            (two_bus, (0, 3)),
            (five_bus, (1, 3)),
            (microgrid9, (10, 19)),
        ):
            for h in hours:
                cases.append((net, demand, h))
        assert len(cases) >= 5
        for net, demand, h in cases:
            tight = solve(hour_problem(net, demand, h))
            wide = solve(
                hour_problem(
                    net,
                    demand,
                    h,
                    v_min=np.array([b.v_min - 0.02 for b in net.buses]),
                    v_max=np.array([b.v_max + 0.02 for b in net.buses]),
                )
            )
            assert tight.status is OpfStatus.OPTIMAL and wide.status is OpfStatus.OPTIMAL
            # local solutions: allow numerical slack, never a real increase
            assert wide.objective_value <= tight.objective_value + 1e-6 * abs(tight.objective_value)


class TestKktReport:
    def test_optimal_solution_passes(self, base_problem):
        sol = solve(base_problem)
        rep = kkt_report(sol, base_problem)
        assert rep.passed
        assert rep.stationarity <= 1e-6
        assert rep.feasibility <= 1e-6
        assert rep.complementarity <= 1e-6
        assert not rep.nonneg_violation

    def test_corrupted_multiplier_flagged(self, base_problem):
        sol = solve(base_problem)
        sol.mu_v_max[0] = -abs(sol.mu_v_max[0]) - 1.0
        rep = kkt_report(sol, base_problem)
        assert rep.nonneg_violation
        assert not rep.passed

    def test_non_optimal_solutions_report_without_raising(self, five_bus):
        net, demand = five_bus
        sol = solve(hour_problem(net, demand, 3, options=SolverOptions(max_iter=2)))
        assert sol.status is OpfStatus.MAX_ITERATIONS
        rep = kkt_report(sol, hour_problem(net, demand, 3, options=SolverOptions(max_iter=2)))
        assert rep.stationarity >= 0.0


class TestProblemValidation:
    def test_demand_on_dead_bus_rejected(self, microgrid9):
        net, _ = microgrid9
        p_d = np.zeros(net.n_bus)
        p_d[net.bus_index(8)] = 1.0  # POI stub beyond an open switch
        with pytest.raises(ValidationError, match="de-energized"):
            OpfProblem(network=net, p_d=p_d, q_d=np.zeros(net.n_bus))

    def test_negative_demand_rejected(self, two_bus):
        net, _ = two_bus
        with pytest.raises(ValidationError, match="p_d"):
            OpfProblem(network=net, p_d=np.array([0.0, -1.0]), q_d=np.zeros(2))

    def test_wrong_length_rejected(self, two_bus):
        net, _ = two_bus
        with pytest.raises(ValidationError):
            OpfProblem(network=net, p_d=np.zeros(3), q_d=np.zeros(3))
