"""Decision quantities, regime classification and parameter sweeps.

Closed-form oracles on the weak reference model (constant prey orbit
N(t) = 1, constant p = 1.3, constant gamma = 0.39):

    R0   = gamma * b * p / ((1 + p) * delta1)   (means)
         = 0.39 * 0.88 * 1.3 / (2.3 * 0.19)     = 1.02096109839...
    R0 is linear in gamma, so R0 = 1 at
    gamma* = delta1 * (1 + p) / (b * p) = 0.19 * 2.3 / (0.88 * 1.3)

Frozen numerical oracles (reference system): lambda1- = 2.20545 (does not
depend on the response), lambda2+ = 9.27325 at p = 1.3, alpha of the
interior orbit = -32.3574, lambda2+ = 1 at p = 1.20947.
"""

import json
import math

import numpy as np
import pytest

from floquet_allee import (AlleeKind, CaseLabel, Family, FunctionalResponse,
                           ModelSystem, Phase, RegimeReport, ResponseKind,
                           ResponseNotPreyDependentAtAxis, SeasonalCoefficient,
                           SweepResult, SweepSample, classify_regime,
                           compute_R0, compute_alpha,
                           compute_boundary_multipliers, constant,
                           get_parameter, lg_boundary_analysis,
                           sweep_parameter, table1_model, with_parameter,
                           write_sweep_csv)

R0_WEAK = 0.39 * 0.88 * 1.3 / (2.3 * 0.19)
GAMMA_STAR = 0.19 * 2.3 / (0.88 * 1.3)


@pytest.fixture(scope="module")
def report_b(table1):
    return classify_regime(table1)


@pytest.fixture(scope="module")
def report_w(weak_model):
    return classify_regime(weak_model)


@pytest.fixture(scope="module")
def lg_report(table2):
    return lg_boundary_analysis(table2)


@pytest.fixture(scope="module")
def strong_sweep(table1):
    return sweep_parameter(table1, "response.p.mean", 1.0, 1.45, n_samples=10)


class TestDecisionQuantities:

    def test_weak_R0_closed_form(self, weak_model):
        assert compute_R0(weak_model) == pytest.approx(R0_WEAK, rel=1e-9)

    def test_R0_validation(self, table1, table2):
        with pytest.raises(ValueError):
            compute_R0(table1)  # strong effect: two prey-only orbits
        with pytest.raises(ValueError):
            compute_R0(table2)  # Leslie-Gower family

    def test_boundary_multipliers_reference(self, table1):
        l1m, l1p, l2m, l2p = compute_boundary_multipliers(table1)
        assert l1m == pytest.approx(2.20545, rel=1e-4)
        assert l1p < 1.0
        assert l2m < 1.0 < l2p
        assert l2p == pytest.approx(9.27325, rel=1e-4)

    def test_boundary_multipliers_need_strong(self, weak_model):
        with pytest.raises(ValueError):
            compute_boundary_multipliers(weak_model)

    def test_alpha_reference_orbit(self, table1, table1_interior):
        alpha = compute_alpha(table1, table1_interior)
        assert alpha == pytest.approx(-32.3574, rel=1e-5)
        # exp(alpha) is the product of the multipliers (Liouville).
        assert alpha == pytest.approx(table1_interior.log_det, abs=1e-6)

    def test_alpha_needs_interior(self, table1, table1_prey_orbits):
        minus, _ = table1_prey_orbits
        with pytest.raises(ValueError):
            compute_alpha(table1, minus)


class TestClassifyStrong:

    def test_case_b_reference(self, report_b):
        assert report_b.allee_kind is AlleeKind.STRONG
        assert report_b.case_label is CaseLabel.B
        assert "case B" in report_b.verdict
        assert report_b.conjecture is None
        assert report_b.lambda2_plus == pytest.approx(9.27325, rel=1e-4)
        assert report_b.lambda2_minus < 1.0
        assert report_b.nu_star == pytest.approx(-0.0022110, rel=1e-6)

    def test_case_b_interior_orbit(self, report_b):
        assert len(report_b.interior_orbits) == 1
        rep = report_b.interior_orbits[0]
        assert rep.orbit.initial_state[0] == pytest.approx(0.982777, abs=1e-5)
        assert rep.alpha == pytest.approx(-32.3574, rel=1e-5)
        assert report_b.ledger is not None
        assert report_b.ledger.consistent

    def test_case_b_as_dict_is_json_ready(self, report_b):
        doc = report_b.as_dict()
        text = json.dumps(doc, indent=2)
        back = json.loads(text)
        assert back["case_label"] == "B"
        assert back["ledger"]["consistent"] is True
        assert back["hypotheses"]["passed"] is True
        assert back["R0"] is None

    def test_case_a_low_pressure(self):
        report = classify_regime(table1_model(p_mean=1.0))
        assert report.case_label is CaseLabel.A
        assert report.lambda2_plus < 1.0
        assert "die out" in report.verdict
        assert report.interior_orbits == ()
        # Origin, two prey-only orbits: the census is already complete.
        assert report.ledger.consistent

    def test_case_c_high_pressure(self):
        report = classify_regime(table1_model(p_mean=70.0))
        assert report.case_label is CaseLabel.C
        assert report.lambda2_minus > 1.0
        assert report.conjecture is not None
        assert "extinction" in report.conjecture

    def test_family_validation(self, table2):
        with pytest.raises(ValueError):
            classify_regime(table2)


class TestClassifyWeak:

    def test_weak_verdict(self, report_w):
        assert report_w.allee_kind is AlleeKind.WEAK
        assert report_w.case_label is None
        assert report_w.R0 == pytest.approx(R0_WEAK, rel=1e-9)
        assert "persist" in report_w.verdict
        assert math.isnan(report_w.lambda1_minus)
        assert report_w.nu_star == pytest.approx(0.011, rel=1e-9)

    def test_weak_as_dict_nan_encoding(self, report_w):
        doc = report_w.as_dict()
        json.dumps(doc)
        assert doc["lambda1_minus"] == "nan"
        assert doc["R0"] == pytest.approx(R0_WEAK, rel=1e-9)


class TestReportValidation:

    def test_label_must_match_multipliers(self):
        with pytest.raises(ValueError):
            RegimeReport(allee_kind=AlleeKind.STRONG, lambda1_minus=2.0,
                         lambda1_plus=0.5, lambda2_minus=0.5,
                         lambda2_plus=2.0, nu_star=0.0, verdict="x",
                         case_label=CaseLabel.A)

    def test_multiplier_ordering_enforced(self):
        with pytest.raises(ValueError):
            RegimeReport(allee_kind=AlleeKind.STRONG, lambda1_minus=2.0,
                         lambda1_plus=0.5, lambda2_minus=3.0,
                         lambda2_plus=2.0, nu_star=0.0, verdict="x",
                         case_label=CaseLabel.C)

    def test_no_labels_for_weak(self):
        with pytest.raises(ValueError):
            RegimeReport(allee_kind=AlleeKind.WEAK, lambda1_minus=math.nan,
                         lambda1_plus=0.5, lambda2_minus=math.nan,
                         lambda2_plus=2.0, nu_star=0.0, verdict="x",
                         case_label=CaseLabel.B)


class TestLGBoundary:

    def test_axis_multiplier_closed_form(self, lg_report):
        # integral of pred_growth = mean * T exactly (the seasonal part
        # integrates to zero over a full period).
        assert math.log(lg_report.lambda2_axis) == pytest.approx(
            1.5 * 365.0, rel=1e-9)

    def test_boundary_census(self, lg_report):
        assert lg_report.origin.location == "origin"
        assert lg_report.prey_minus is not None
        assert lg_report.prey_minus.initial_state[0] == pytest.approx(
            2.3998, rel=1e-3)
        assert lg_report.prey_plus.initial_state[0] == pytest.approx(
            11.9892, rel=1e-3)
        assert lg_report.predator_only.initial_state[1] == pytest.approx(
            0.149308, rel=1e-4)

    def test_prey_extinct_orbit_stable(self, lg_report):
        assert lg_report.prey_dependent_at_axis
        assert lg_report.lambda1_predator_only < 1.0
        assert lg_report.lambda2_predator_only < 1.0
        assert any("stabilizes the prey-extinct orbit" in n
                   for n in lg_report.notes)

    def test_summary_and_dict(self, lg_report):
        text = lg_report.summary()
        assert "lambda2 across the prey axis" in text
        doc = lg_report.as_dict()
        json.dumps(doc)
        assert doc["prey_minus"]["location"] == "prey-axis"
        assert doc["predator_only"]["stability"] == "stable"

    def test_family_validation(self, table1):
        with pytest.raises(ValueError):
            lg_boundary_analysis(table1)

    def test_response_with_axis_predator_dependence(self, small_model):
        # A response that does not vanish at N = 0 leaves the monodromy
        # non-triangular at the prey-extinct orbit: the integral formulas
        # must refuse (strict) or fall back to eigenvalues.
        leaky = FunctionalResponse(
            kind=ResponseKind.CUSTOM,
            fn=lambda t, N, P: 0.3 * (N + 0.1 * P) / (1.0 + N))
        m = ModelSystem(
            family=Family.LESLIE_GOWER_PM, growth=small_model.growth,
            response=leaky,
            pred_growth=SeasonalCoefficient(1.0, 0.2, Phase.FAVORABLE,
                                            small_model.period),
            pred_refuge=constant(0.1, small_model.period),
            period=small_model.period)
        with pytest.raises(ResponseNotPreyDependentAtAxis):
            lg_boundary_analysis(m, strict=True)
        report = lg_boundary_analysis(m)
        assert not report.prey_dependent_at_axis
        assert any("monodromy" in n for n in report.notes)


class TestParameterAccess:

    def test_get_nested_and_flat(self, table1):
        assert get_parameter(table1, "response.p.mean") == 1.3
        assert get_parameter(table1, "gamma.mean") == 0.39
        assert get_parameter(table1, "growth.k_plus.amplitude") == 0.1

    def test_with_parameter_round_trip(self, table1):
        changed = with_parameter(table1, "response.p.mean", 1.5)
        assert get_parameter(changed, "response.p.mean") == 1.5
        assert get_parameter(table1, "response.p.mean") == 1.3
        back = with_parameter(changed, "response.p.mean", 1.3)
        assert back == table1

    def test_path_errors(self, table1):
        with pytest.raises(ValueError, match="no coefficient"):
            get_parameter(table1, "response.q.mean")
        with pytest.raises(ValueError, match="swept field"):
            get_parameter(table1, "response.p.phase")
        with pytest.raises(ValueError, match="no coefficient"):
            get_parameter(table1, "pred_growth.mean")
        with pytest.raises(ValueError, match="cannot resolve"):
            get_parameter(table1, "pressure")


class TestSweep:

    def test_invasion_threshold_located(self, strong_sweep):
        assert len(strong_sweep.thresholds) == 1
        value, desc = strong_sweep.thresholds[0]
        assert value == pytest.approx(1.20947, abs=2e-3)
        assert "lambda2_plus crosses 1" in desc
        assert "(A -> B)" in desc

    def test_sample_columns_consistent(self, strong_sweep):
        assert len(strong_sweep.samples) == 10
        for s in strong_sweep.samples:
            assert s.ok
            assert math.exp(s.log_lambda2_plus) == pytest.approx(
                s.lambda2_plus, rel=1e-12)
            # lambda1 along the prey axis does not involve the response.
            assert s.lambda1_minus == pytest.approx(2.20545, rel=1e-4)
        cases = [s.case_label for s in strong_sweep.samples]
        assert cases[0] is CaseLabel.A and cases[-1] is CaseLabel.B

    def test_weak_gamma_threshold_closed_form(self, weak_model):
        result = sweep_parameter(weak_model, "gamma.mean", 0.2, 0.6,
                                 n_samples=5)
        assert len(result.thresholds) == 1
        value, desc = result.thresholds[0]
        assert "R0 crosses 1" in desc
        assert value == pytest.approx(GAMMA_STAR, abs=2e-3)
        verdicts = [s.verdict for s in result.samples]
        assert verdicts[0] == "extinct" and verdicts[-1] == "persist"

    def test_failed_samples_recorded(self, table1):
        result = sweep_parameter(table1, "growth.k_minus.mean", -0.02, 0.08,
                                 n_samples=2)
        bad, good = result.samples
        assert not bad.ok and "mean" in bad.error
        assert good.ok
        assert result.thresholds == ()
        assert "2 samples (1 evaluated)" in result.summary()

    def test_validation(self, table1, table2):
        with pytest.raises(ValueError):
            sweep_parameter(table2, "gamma.mean", 0.1, 0.2, n_samples=3)
        with pytest.raises(ValueError):
            sweep_parameter(table1, "response.p.mean", 1.5, 1.0, n_samples=3)
        with pytest.raises(ValueError):
            sweep_parameter(table1, "response.p.mean", 1.0, 1.5, n_samples=1)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError, match="ordered"):
            SweepResult(parameter_path="response.p.mean",
                        samples=(SweepSample(value=2.0),
                                 SweepSample(value=1.0)),
                        thresholds=())

    def test_csv_export(self, tmp_path, strong_sweep):
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, strong_sweep)
        lines = path.read_text().splitlines()
        assert lines[0] == "param,lambda1m,lambda1p,lambda2m,lambda2p,case"
        assert len(lines) == 1 + 10 + 1 + 1
        assert lines[11] == "# thresholds"
        assert lines[12].startswith("# 1.20")
        assert lines[1].endswith(",A") and lines[10].endswith(",B")
