import math

import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from conftest import alternating_pair, random_periodic_system, spd
from filterlab import (
    ConvergenceError,
    NumericalError,
    PeriodicSequence,
    ValidationError,
    closed_loop,
    dple_spps,
    dpre_spps,
    dpre_monotonicity_probe,
    monodromy,
    monodromy_bounds,
    power_norm_bound,
    transition_product,
    uniform_observability,
)
from filterlab.spps import fixed_point_defect, solution_monodromy

PHI = (1.0 + math.sqrt(5.0)) / 2.0


def brute_riccati(A, C, Q, R, steps, P0=None):
    """Independent oracle: plain forward recursion, no convergence logic."""
    A, C, Q, R = (PeriodicSequence(s) for s in (A, C, Q, R))
    P = np.eye(A.shape[0]) if P0 is None else np.array(P0, dtype=float)
    history = []
    for k in range(steps):
        S = C.at(k) @ P @ C.at(k).T + R.at(k)
        P = (
            A.at(k) @ P @ A.at(k).T
            + Q.at(k)
            - A.at(k) @ P @ C.at(k).T @ np.linalg.solve(S, C.at(k) @ P @ A.at(k).T)
        )
        P = (P + P.T) / 2
        history.append(P)
    return history


class TestDpreSpps:
    def test_scalar_golden_ratio(self):
        sol = dpre_spps([[1.0]], [[1.0]], [[1.0]], [[1.0]], tol=1e-13)
        assert abs(sol.P[0][0, 0] - PHI) < 1e-12
        assert sol.residual < 1e-13
        # Cross-check with brute iteration from a different start.
        brute = brute_riccati([[1.0]], [[1.0]], [[1.0]], [[1.0]], 200, P0=[[1.0]])
        assert abs(brute[-1][0, 0] - sol.P[0][0, 0]) < 1e-12

    def test_unobserved_stable_scalar_is_lyapunov_fixed_point(self):
        sol = dpre_spps([[0.5]], [[0.0]], [[0.75]], [[1.0]], tol=1e-13)
        assert abs(sol.P[0][0, 0] - 1.0) < 1e-11

    def test_alternating_pair_two_periodic(self):
        # Unstable A with per-step-unobservable rows still admits a steady
        # 2-periodic solution; oracle is a long brute recursion.
        A, C = alternating_pair()
        Q = PeriodicSequence([np.eye(2)] * 2)
        R = PeriodicSequence([np.eye(1)] * 2)
        sol = dpre_spps(A, C, Q, R, tol=1e-12)
        assert sol.period == 2
        history = brute_riccati(A, C, Q, R, 10_000)
        assert np.linalg.norm(history[-1] - sol.at(10_000 % 2), 2) < 1e-9
        assert np.linalg.norm(history[-2] - sol.at(9_999 % 2), 2) < 1e-9

    def test_matches_scipy_dare_for_time_invariant(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(3, 3)) * 0.6
        C = rng.normal(size=(2, 3))
        Q = spd(rng, 3)
        R = spd(rng, 2)
        sol = dpre_spps(A, C, Q, R, tol=1e-13)
        # Dual of the control Riccati equation solved directly by scipy.
        P_ref = solve_discrete_are(A.T, C.T, Q, R)
        assert np.linalg.norm(sol.P[0] - P_ref, 2) < 1e-9

    def test_solution_is_periodic_fixed_point(self):
        for seed in range(5):
            A, C, Q, R, _ = random_periodic_system(seed)
            tol = 1e-11
            sol = dpre_spps(A, C, Q, R, tol=tol)
            assert fixed_point_defect(sol, A, C, Q, R) <= 10 * tol
            for Pk in sol.P:
                assert np.abs(Pk - Pk.T).max() < 1e-10

    def test_divergent_recursion_raises(self):
        with pytest.raises(ConvergenceError):
            with np.errstate(over="ignore", invalid="ignore"):
                dpre_spps([[2.0]], [[0.0]], [[1.0]], [[1.0]], max_sweeps=200)

    def test_indefinite_innovation_raises(self):
        bad_R = PeriodicSequence([[[-1.0]]])
        with pytest.raises(NumericalError):
            dpre_spps([[0.5]], [[0.0]], [[1.0]], bad_R, max_sweeps=50)

    def test_bounds_flag_runs(self):
        A, C, Q, R, _ = random_periodic_system(7)
        dpre_spps(A, C, Q, R, check_bounds=True)


class TestDpleSpps:
    def test_scalar_fixed_point(self):
        sol = dple_spps([[0.5]], [[0.75]], tol=1e-13)
        assert abs(sol.P[0][0, 0] - 1.0) < 1e-11

    def test_zero_transition_copies_noise(self):
        Q = PeriodicSequence([[[1.0]], [[2.0]], [[3.0]]])
        A = PeriodicSequence([[[0.0]]] * 3)
        sol = dple_spps(A, Q, tol=1e-14)
        # P_{k+1} = Q_k exactly.
        for k in range(3):
            assert abs(sol.at(k + 1)[0, 0] - Q.at(k)[0, 0]) < 1e-13

    def test_two_periodic_scalar_against_iteration_oracle(self):
        A = PeriodicSequence([[[0.5]], [[0.2]]])
        Q = PeriodicSequence([[[1.0]], [[2.0]]])
        sol = dple_spps(A, Q, tol=1e-14)
        P = np.zeros((1, 1))
        for k in range(400):
            P = A.at(k) @ P @ A.at(k).T + Q.at(k)
        assert abs(P[0, 0] - sol.at(400 % 2)[0, 0]) < 1e-14

    def test_unstable_monodromy_rejected(self):
        with pytest.raises(NumericalError):
            dple_spps([[1.0]], [[1.0]])
        # Per-step norms above one are fine if the period product contracts.
        A = PeriodicSequence([[[1.6]], [[0.3]]])
        sol = dple_spps(A, PeriodicSequence([[[1.0]]] * 2))
        assert sol.residual < 1e-10


class TestClosedLoop:
    def test_zero_covariance_gives_open_loop(self):
        K, A_cl = closed_loop(np.eye(2) * 0.7, np.eye(2), np.eye(2), np.zeros((2, 2)))
        assert np.array_equal(K, np.zeros((2, 2)))
        assert np.allclose(A_cl, 0.7 * np.eye(2))

    def test_golden_ratio_gain(self):
        K, A_cl = closed_loop([[1.0]], [[1.0]], [[1.0]], [[PHI]])
        assert K[0, 0] == pytest.approx(PHI / (PHI + 1.0), abs=1e-12)
        assert A_cl[0, 0] == pytest.approx(1.0 - PHI / (PHI + 1.0), abs=1e-12)

    def test_naive_row_keeps_dynamics(self):
        K, A_cl = closed_loop([[0.9]], [[0.0]], [[1.0]], [[2.0]])
        assert K[0, 0] == 0.0
        assert A_cl[0, 0] == 0.9


class TestMonodromy:
    def test_stabilized_alternating_pair(self):
        # Feedback gains put the pair exactly at 0.2 * I over one period.
        A, C = alternating_pair()
        gains = [np.array([[0.0], [-1.9]]), np.array([[-1.9], [0.0]])]
        loops = PeriodicSequence(
            [A.at(k) + gains[k] @ C.at(k) for k in range(2)]
        )
        rep = monodromy(loops, anchor=0)
        assert np.linalg.norm(rep.phi - 0.2 * np.eye(2), 2) < 1e-12
        assert rep.spectral_radius == pytest.approx(0.2, abs=1e-12)

    def test_constant_scalar(self):
        rep = monodromy(PeriodicSequence([[[0.5]], [[0.5]]]))
        assert rep.phi[0, 0] == pytest.approx(0.25, abs=1e-15)

    def test_spectral_radius_anchor_invariant(self):
        rng = np.random.default_rng(11)
        mats = [0.8 * rng.normal(size=(3, 3)) / 1.8 for _ in range(3)]
        seq = PeriodicSequence(mats)
        radii = [monodromy(seq, anchor=k).spectral_radius for k in range(6)]
        assert max(radii) - min(radii) < 1e-10

    def test_transition_product_ordering(self):
        seq = PeriodicSequence([np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2) * 2])
        # product over [0, 2) must apply slot 0 first: M = A_1 @ A_0
        expected = (np.eye(2) * 2) @ np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.array_equal(transition_product(seq, 0, 2), expected)


class TestMonodromyBounds:
    def test_scalar_golden_ratio_values(self):
        sol = dpre_spps([[1.0]], [[1.0]], [[1.0]], [[1.0]], tol=1e-13)
        rho_bound, norm_bound = monodromy_bounds(sol, [[1.0]])
        assert rho_bound == pytest.approx(math.sqrt(1.0 - 1.0 / PHI), abs=1e-10)
        rep = solution_monodromy([[1.0]], [[1.0]], [[1.0]], [[1.0]], sol)
        assert rep.spectral_radius == pytest.approx(1.0 - PHI / (PHI + 1.0), abs=1e-10)
        assert rep.spectral_radius <= rho_bound
        assert rep.norm2 <= norm_bound

    def test_deadbeat_equality(self):
        # a = 0 forces P = Q, a zero loop, and a zero bound met with equality.
        sol = dpre_spps([[0.0]], [[1.0]], [[1.0]], [[1.0]], tol=1e-13)
        rho_bound, _ = monodromy_bounds(sol, [[1.0]])
        rep = solution_monodromy([[0.0]], [[1.0]], [[1.0]], [[1.0]], sol)
        assert rep.spectral_radius == pytest.approx(0.0, abs=1e-12)
        assert rho_bound == pytest.approx(0.0, abs=1e-7)

    def test_random_systems_respect_bounds(self):
        # Randomized oracle across anchors; the larger sweep lives in the
        # acceptance suite.
        for seed in range(15):
            A, C, Q, R, _ = random_periodic_system(seed + 100)
            sol = dpre_spps(A, C, Q, R)
            rho_bound, norm_bound = monodromy_bounds(sol, Q)
            for anchor in range(sol.period):
                rep = solution_monodromy(A, C, Q, R, sol, anchor=anchor)
                assert rep.spectral_radius <= rho_bound + 1e-8
                assert rep.norm2 <= norm_bound + 1e-8


class TestPowerNormBound:
    def test_identity(self):
        assert power_norm_bound(np.eye(2), 5) >= 1.0
        assert np.linalg.norm(np.linalg.matrix_power(np.eye(2), 5), 2) == 1.0

    def test_diagonal_direct_evaluation(self):
        A = np.diag([0.5, 0.3])
        k = 4
        direct = np.linalg.norm(np.linalg.matrix_power(A, k), 2)
        assert direct == pytest.approx(0.0625, abs=1e-15)
        assert direct <= power_norm_bound(A, k)

    def test_nilpotent_jordan_block(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(np.linalg.matrix_power(A, 2), 0.0)
        assert power_norm_bound(A, 2) >= 0.0

    def test_dominates_random_powers(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            A = rng.normal(size=(n, n))
            for k in (0, 1, 3, 7):
                direct = np.linalg.norm(np.linalg.matrix_power(A, k), 2)
                assert direct <= power_norm_bound(A, k) * (1.0 + 1e-12)


class TestUniformObservability:
    def test_alternating_pair_observable_despite_per_step_rank_loss(self):
        A, C = alternating_pair()
        assert uniform_observability(A, C)
        for k in range(2):
            per_step = np.vstack([C.at(k), C.at(k) @ A.at(k)])
            assert np.linalg.matrix_rank(per_step) == 1

    def test_blind_unstable_pair(self):
        A = PeriodicSequence(2.0 * np.eye(2))
        C = PeriodicSequence(np.zeros((1, 2)))
        assert not uniform_observability(A, C)

    def test_benchmark_network_pair(self, bench_plant):
        from filterlab import stacked_observation

        C_full = PeriodicSequence(
            [stacked_observation(bench_plant, k)[0] for k in range(30)]
        )
        assert uniform_observability(bench_plant.A, C_full)


class TestMonotonicityProbe:
    def test_equal_noise_is_trivially_monotone(self):
        assert dpre_monotonicity_probe(
            [[1.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]]
        )

    def test_scalar_quadratic_roots(self):
        # P solves P^2 = P + r, so r = 2 gives P = 2 and r = 1 gives PHI.
        sol2 = dpre_spps([[1.0]], [[1.0]], [[1.0]], [[2.0]], tol=1e-13)
        assert sol2.P[0][0, 0] == pytest.approx(2.0, abs=1e-11)
        assert dpre_monotonicity_probe([[1.0]], [[1.0]], [[1.0]], [[2.0]], [[1.0]])

    def test_violated_precondition(self):
        with pytest.raises(ValidationError):
            dpre_monotonicity_probe([[1.0]], [[1.0]], [[1.0]], [[1.0]], [[2.0]])

    def test_random_bumps_stay_monotone(self):
        for seed in range(10):
            A, C, Q, R, rng = random_periodic_system(seed + 300)
            m = C.shape[0]
            bumps = [spd(rng, m, scale=0.5) for _ in range(R.period)]
            R1 = PeriodicSequence([R.at(k) + bumps[k] for k in range(R.period)])
            assert dpre_monotonicity_probe(A, C, Q, R1, R)


class TestInformationFormEquivalence:
    def test_random_instances(self):
        # Covariance-form and information-form corrections must agree.
        rng = np.random.default_rng(42)
        for _ in range(30):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            P = spd(rng, n)
            R = spd(rng, m)
            C = rng.normal(size=(m, n))
            info = np.linalg.inv(np.linalg.inv(P) + C.T @ np.linalg.solve(R, C))
            S = C @ P @ C.T + R
            cov = P - P @ C.T @ np.linalg.solve(S, C @ P)
            rel = np.linalg.norm(info - cov, 2) / np.linalg.norm(info, 2)
            assert rel < 1e-10


class TestSolutionExports:
    def test_json_and_csv(self, tmp_path):
        sol = dpre_spps([[1.0]], [[1.0]], [[1.0]], [[1.0]])
        jpath = tmp_path / "sol.json"
        cpath = tmp_path / "sol.csv"
        sol.to_json(jpath)
        sol.to_csv(cpath)
        import csv as csv_mod
        import json

        with open(jpath) as fh:
            data = json.load(fh)
        assert data["period"] == 1
        assert data["P"][0][0][0] == pytest.approx(PHI, abs=1e-10)
        with open(cpath) as fh:
            rows = list(csv_mod.reader(fh))
        assert rows[0] == ["k", "i", "j", "value"]
        assert float(rows[1][3]) == pytest.approx(PHI, abs=1e-10)
