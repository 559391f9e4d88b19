"""Periodic orbit solvers, Floquet multipliers and the fixed-point ledger.

Frozen oracles (reference system, p = 1.3 unless said otherwise):

    N*_-(0) = 0.0200672     N*_+(0) = 0.9831365
    interior orbit (0.982777, 4.59083e-05), |multipliers| (0.3866, 2.291e-14)
    lambda2 at N*_+ = 9.27325
    origin logs = (T nu*, -T mean delta1) = (-0.807016, -69.35)

with nu* = -mean(r K- K+) = -0.11 * 0.02 * (1 + 0.1^2/2) = -0.0022110
(the r and K+ harmonics are in phase, so their product contributes s^2/2;
the K- harmonic is a quarter period out and averages out).
"""

import math

import numpy as np
import pytest

from floquet_allee import (DEFAULT_SETTINGS, DegenerateOrbit, NoConvergence,
                           NuAboveThreshold, PeriodicOrbit, Stability,
                           detect_period, embed_on_prey_axis,
                           find_orbit_multiple_shooting, find_orbit_newton,
                           floquet, grid_search_orbits, in_invariant_set,
                           index_ledger, integrate, invariant_box,
                           mean_low_density_growth, poincare_map,
                           predator_only_orbit_lg, prey_only_orbit_weak,
                           table1_model, write_orbits_csv)

NU_STAR_T1 = -0.11 * 0.02 * (1.0 + 0.1 ** 2 / 2.0)


class TestPoincareMap:

    def test_orbit_is_fixed_point(self, table1, table1_interior):
        x0 = table1_interior.initial_state
        x1 = poincare_map(table1, x0)
        assert np.linalg.norm(x1 - x0) < 1e-8

    def test_multiple_rejected(self, table1):
        with pytest.raises(ValueError):
            poincare_map(table1, (0.5, 0.1), n=0)


class TestNewton:

    def test_interior_orbit_oracle(self, table1_interior):
        orbit = table1_interior
        assert orbit.initial_state[0] == pytest.approx(0.982777, abs=1e-5)
        assert orbit.initial_state[1] == pytest.approx(4.59083e-05, rel=1e-3)
        mags = sorted(abs(l) for l in orbit.multipliers)
        assert mags[1] == pytest.approx(0.3866, rel=1e-3)
        assert mags[0] == pytest.approx(2.291e-14, rel=1e-2)
        assert orbit.stability is Stability.STABLE
        assert orbit.residual < 1e-9

    def test_multiple_shooting_agrees_on_axis(self, table1,
                                              table1_prey_orbits):
        # The generic 2D shooter and the scalar cyclic shooter are
        # independent implementations; they must find the same orbit.
        _, plus = table1_prey_orbits
        orbit = find_orbit_multiple_shooting(table1, np.array([0.9, 0.0]),
                                             segments=8,
                                             settings=DEFAULT_SETTINGS)
        assert orbit.location == "prey-axis"
        assert orbit.initial_state[0] == pytest.approx(
            plus.initial_state[0], rel=1e-9)
        assert orbit.log_multipliers is not None
        assert orbit.log_multipliers[1] == pytest.approx(
            plus.log_multipliers[1], rel=1e-8)

    def test_multiple_shooting_interior_large_amplitude(self, table2):
        # States of size ~15 put the integrator noise floor above the node
        # iteration tolerance; the stall must hand over to the polish
        # instead of failing.
        ms = find_orbit_multiple_shooting(table2, np.array([10.0, 15.0]),
                                          segments=8,
                                          settings=DEFAULT_SETTINGS)
        newton = find_orbit_newton(table2, np.array([10.0, 15.0]),
                                   settings=DEFAULT_SETTINGS)
        assert ms.location == "interior"
        assert np.allclose(ms.initial_state, newton.initial_state,
                           rtol=0.0, atol=1e-8)
        assert ms.residual < 1e-9

    def test_floquet_recompute_consistent(self, table1, table1_interior):
        fresh = floquet(table1, table1_interior)
        for a, b in zip(fresh, table1_interior.multipliers):
            assert abs(a - b) <= 1e-6 * max(abs(b), 1e-12)

    def test_no_convergence_far_from_orbits(self, small_model):
        with pytest.raises(NoConvergence):
            find_orbit_newton(small_model, np.array([0.9, 2.0]), tol=1e-12,
                              max_iter=3, settings=DEFAULT_SETTINGS)


class TestBoundaryOrbits:

    def test_strong_prey_pair_oracles(self, table1_prey_orbits):
        minus, plus = table1_prey_orbits
        assert minus.initial_state[0] == pytest.approx(0.0200672, rel=1e-4)
        assert plus.initial_state[0] == pytest.approx(0.9831365, rel=1e-4)
        assert minus.initial_state[1] == plus.initial_state[1] == 0.0
        assert minus.residual < 1e-9 and plus.residual < 1e-9
        # The threshold orbit repels, the carrying-capacity orbit attracts
        # along the prey axis.
        assert minus.log_multipliers[0] > 0.0 > plus.log_multipliers[0]
        lam2_plus = math.exp(plus.log_multipliers[1])
        assert lam2_plus == pytest.approx(9.27325, rel=1e-4)
        assert plus.log_multipliers[1] > minus.log_multipliers[1]

    def test_shooting_nodes_recorded(self, table1_prey_orbits):
        minus, plus = table1_prey_orbits
        for orbit in (minus, plus):
            assert orbit.nodes is not None
            assert len(orbit.nodes) == 48
            assert orbit.nodes[0] == pytest.approx(orbit.initial_state[0],
                                                   rel=1e-12)

    def test_origin_embedding_closed_form(self, table1):
        origin = embed_on_prey_axis(table1, 0.0, DEFAULT_SETTINGS)
        assert origin.location == "origin"
        T = table1.period
        # log lambda1 = T nu*; log lambda2 = -T mean(delta1) since f = 0.
        assert origin.log_multipliers[0] == pytest.approx(T * NU_STAR_T1,
                                                          rel=1e-9)
        assert origin.log_multipliers[1] == pytest.approx(-T * 0.19,
                                                          rel=1e-9)

    def test_weak_orbit_is_constant_carrying_capacity(self, weak_model):
        orbit = prey_only_orbit_weak(weak_model, settings=DEFAULT_SETTINGS)
        # k_plus is the constant 1, so the orbit is exactly N(t) = 1.
        assert orbit.value0 == pytest.approx(1.0, abs=1e-10)
        for t in np.linspace(0.0, weak_model.period, 17):
            assert orbit(t) == pytest.approx(1.0, abs=1e-8)
        # multiplier = exp(-(1 + m)/2 * integral of r) = exp(-22.0825).
        # The propagated map derivative decays to ~2.6e-10, where abs_tol
        # becomes the error floor, so only ~1e-5 relative is available.
        assert math.log(orbit.multiplier) == pytest.approx(
            -0.55 * 0.11 * 365.0, rel=1e-5)

    def test_weak_harvest_threshold(self, weak_model):
        # nu* = mean of k(t, 0) = mean(r) * m * K = 0.011.
        assert mean_low_density_growth(weak_model) == pytest.approx(
            0.011, rel=1e-9)
        harvested = prey_only_orbit_weak(weak_model, nu=0.005,
                                         settings=DEFAULT_SETTINGS)
        assert 0.0 < harvested.value0 < 1.0
        with pytest.raises(NuAboveThreshold):
            prey_only_orbit_weak(weak_model, nu=0.05,
                                 settings=DEFAULT_SETTINGS)

    def test_table1_nu_star(self, table1):
        assert mean_low_density_growth(table1) == pytest.approx(NU_STAR_T1,
                                                                rel=1e-9)

    def test_predator_only_leslie_gower(self, table2):
        orbit = predator_only_orbit_lg(table2, settings=DEFAULT_SETTINGS)
        assert orbit.location == "predator-axis"
        assert orbit.initial_state[1] == pytest.approx(0.149308, rel=1e-4)
        assert orbit.stability is Stability.STABLE
        assert orbit.residual < 1e-9


class TestGridSearch:

    def test_finds_reference_census(self, table1):
        found = grid_search_orbits(table1, grid=(5, 5),
                                   settings=DEFAULT_SETTINGS)
        locations = sorted(o.location for o in found)
        assert locations.count("interior") == 1
        assert locations.count("prey-axis") == 2
        assert "origin" in locations

    def test_results_deduplicated(self, table1):
        found = grid_search_orbits(table1, grid=(4, 4),
                                   settings=DEFAULT_SETTINGS,
                                   extra_seeds=[(0.98, 5e-5), (0.98, 5e-5)])
        states = [o.initial_state for o in found]
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                assert np.linalg.norm(states[i] - states[j]) >= 1e-6


class TestDetectPeriod:

    def test_periodic_one_at_reference(self, table1):
        verdict = detect_period(table1, (0.2, 0.1), n_max=4,
                                transient_periods=100,
                                settings=DEFAULT_SETTINGS)
        assert verdict == "periodic(1)"
        assert verdict.n == 1

    def test_extinction_detected(self):
        m = table1_model(p_mean=1.0)
        verdict = detect_period(m, (0.2, 0.1), n_max=4, transient_periods=50,
                                settings=DEFAULT_SETTINGS)
        assert verdict == "extinct"

    def test_validation(self, table1):
        with pytest.raises(ValueError):
            detect_period(table1, (0.2, 0.1), n_max=0)
        with pytest.raises(ValueError):
            detect_period(table1, (0.2, 0.1), transient_periods=-1)


class TestIndexLedger:

    def test_reference_census_is_consistent(self, table1, table1_prey_orbits,
                                            table1_interior):
        minus, plus = table1_prey_orbits
        origin = embed_on_prey_axis(table1, 0.0, DEFAULT_SETTINGS)
        ledger = index_ledger(table1, [origin, minus, plus, table1_interior])
        assert ledger.total == 1
        assert ledger.consistent
        by_loc = {e.location: e for e in ledger.entries}
        assert by_loc["origin"].index == 1
        assert by_loc["interior"].index == 1
        assert by_loc["interior"].multiplicity == 4
        # Both prey-axis orbits are saddles of the extended map.
        prey_entries = [e for e in ledger.entries if e.location == "prey-axis"]
        assert all(e.index == -1 and e.multiplicity == 2
                   for e in prey_entries)
        assert "consistent" in ledger.summary()

    def test_missing_orbit_reports_deficit(self, table1, table1_prey_orbits):
        minus, plus = table1_prey_orbits
        origin = embed_on_prey_axis(table1, 0.0, DEFAULT_SETTINGS)
        ledger = index_ledger(table1, [origin, minus, plus])
        assert not ledger.consistent
        assert ledger.total == -3
        assert "deficit +4" in ledger.summary()
        assert "1 undetected interior orbit" in ledger.summary()

    def test_unit_multiplier_is_degenerate(self, table1):
        orbit = PeriodicOrbit(
            initial_state=np.array([0.5, 0.5]), period_multiple=1,
            monodromy=np.diag([1.0, 0.5]), multipliers=(1.0 + 0j, 0.5 + 0j),
            stability=Stability.MARGINAL, residual=0.0,
            log_det=math.log(0.5))
        with pytest.raises(DegenerateOrbit):
            index_ledger(table1, [orbit])


class TestContainment:

    def test_box_traps_trajectories(self, table1):
        rng = np.random.default_rng(29)
        box = invariant_box(table1)
        starts = []
        while len(starts) < 5:
            x = rng.uniform((0.0, 0.0), box)
            if in_invariant_set(table1, x):
                starts.append(x)
        T = table1.period
        for x0 in starts:
            marks = np.arange(11) * T
            sol = integrate(table1, x0, 0.0, 10.0 * T, DEFAULT_SETTINGS,
                            t_eval=marks)
            for state in sol.y_eval:
                assert in_invariant_set(table1, state, slack=1e-8)


class TestCsvExport:

    def test_orbit_csv(self, tmp_path, table1, table1_interior):
        path = tmp_path / "orbits.csv"
        write_orbits_csv(path, [table1_interior])
        lines = path.read_text().splitlines()
        assert lines[0] == ("n,N0,P0,lambda1_re,lambda1_im,lambda2_re,"
                            "lambda2_im,stability,residual")
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert fields[0] == "1"
        assert float(fields[1]) == pytest.approx(0.982777, abs=1e-5)
        assert fields[7] == "stable"
