import math
import unittest

import numpy as np

from src import analytic
from src.config import parse_config_dict
from src.models import CavityParams, CombParams, FrequencyGrid, PulseSpec, SechPulseParams, SpinParams, SpinWaveTimeline
from src.scenario import (
    optimize_cavity_design,
    run_bloch,
    run_cavity_linewidth,
    run_comb,
    run_design,
    run_impedance,
    run_scenario,
    run_spin_wave,
    run_two_level,
)

ECHO_GRID = FrequencyGrid(2**16, 40e6)
PULSE = PulseSpec(fwhm=450e-9, center=4.5e-6)
CONTROL_PULSE = SechPulseParams(omega_max=250e3, duration=5e-6, chirp_range=1.2e6, truncation=4e-6)


def _comb(spacing: float = 500e3) -> CombParams:
    return CombParams(peak_depth=0.8, tooth_spacing=spacing, finesse=5.0, total_bandwidth=10e6)


class TwoLevelTests(unittest.TestCase):
    def test_cavity_echo_against_closed_form(self) -> None:
        report = run_two_level(_comb(), PULSE, ECHO_GRID, CavityParams(r1=0.73, epsilon=0.03))
        results = report.results
        self.assertAlmostEqual(results["analytic"], 0.7224, delta=0.01)
        self.assertLess(abs(results["relative_deviation"]), 0.05)
        self.assertGreater(results["cavity_gain_analytic"], 8.0)
        self.assertAlmostEqual(results["impedance_match_r1"], math.exp(-0.32), places=12)
        self.assertIn("echo_trace.csv", report.tables)
        self.assertEqual(report.kind, "cavity")

    def test_single_pass_at_optimal_finesse(self) -> None:
        finesse = analytic.optimal_finesse(0.8)
        comb = CombParams(peak_depth=0.8, tooth_spacing=250e3, finesse=finesse, total_bandwidth=5e6)
        report = run_two_level(comb, PulseSpec(fwhm=1e-6, center=10e-6), FrequencyGrid(2**16, 20e6), tables=False)
        self.assertAlmostEqual(report.results["efficiency"], 0.044, delta=0.003)
        self.assertEqual(report.tables, {})

    def test_echo_timing_follows_tooth_spacing(self) -> None:
        dt = ECHO_GRID.time_grid().dt
        for spacing in (500e3, 100e3, 40e3):
            with self.subTest(spacing=spacing):
                report = run_two_level(_comb(spacing), PULSE, ECHO_GRID, tables=False)
                self.assertAlmostEqual(report.results["echo_peak_time_s"], PULSE.center + 1.0 / spacing, delta=dt)


class SpinWaveScenarioTests(unittest.TestCase):
    def setUp(self) -> None:
        self.timeline = SpinWaveTimeline(input_center=2e-6, control_first=4e-6, control_second=9.3e-6, afc_delay=10e-6)
        self.comb = CombParams(peak_depth=0.8, tooth_spacing=100e3, finesse=5.0, total_bandwidth=10e6)
        self.spin = SpinParams(gamma_spin=26.5e3)

    def test_budget_from_measured_factors(self) -> None:
        report = run_spin_wave(self.timeline, self.comb, CONTROL_PULSE, self.spin, 0.28, eta_t=0.70)
        results = report.results
        self.assertEqual(results["eta_2l_source"], "measured")
        self.assertAlmostEqual(results["eta_sw"], 0.87, delta=0.005)
        self.assertAlmostEqual(results["eta_total"], 0.119, delta=0.002)
        self.assertAlmostEqual(results["eta_total_extrapolated"], 0.137, delta=0.003)
        self.assertAlmostEqual(results["output_time_s"], 17.3e-6, places=12)
        self.assertTrue(report.tables["spinwave_trace.csv"].startswith("time_s,input,control,output,total"))

    def test_two_level_efficiency_is_simulated_when_not_measured(self) -> None:
        # 1 kHz bins hold each 20 kHz tooth on exactly twenty samples
        grid = FrequencyGrid(2**14, 16.384e6)
        pulse = PulseSpec(fwhm=1e-6, center=5e-6)
        report = run_spin_wave(
            self.timeline, self.comb, CONTROL_PULSE, self.spin, None, pulse=pulse, grid=grid, eta_t=0.7, tables=False
        )
        results = report.results
        predicted = analytic.eta_single_pass(self.comb.average_depth, self.comb.finesse)
        self.assertEqual(results["eta_2l_source"], "simulated")
        self.assertEqual(results["eta_t_source"], "measured")
        self.assertNotIn("eta_t_input_bandwidth_hz", results)
        self.assertAlmostEqual(results["eta_2l"], predicted, delta=0.03 * predicted)
        self.assertAlmostEqual(results["eta_total"], results["eta_2l"] * 0.7**2 * results["eta_sw"], places=12)

    def test_simulated_transfer_reports_its_averaging_span(self) -> None:
        report = run_spin_wave(
            self.timeline, self.comb, CONTROL_PULSE, self.spin, 0.28, input_bandwidth=1e6, n_detunings=5, tables=False
        )
        results = report.results
        self.assertEqual(results["eta_t_source"], "simulated")
        self.assertEqual(results["eta_t_input_bandwidth_hz"], 1e6)
        self.assertEqual(results["eta_t_detunings"], 5)

    def test_no_transfer_no_output(self) -> None:
        report = run_spin_wave(self.timeline, self.comb, CONTROL_PULSE, self.spin, 0.28, eta_t=0.0, tables=False)
        self.assertEqual(report.results["eta_total"], 0.0)


class DesignTests(unittest.TestCase):
    def test_single_pass_optimum_for_depth_twelve(self) -> None:
        report = run_design(12.0, 0.0, 20.0, 191, "single_pass")
        self.assertAlmostEqual(report.results["finesse"], 6.5, delta=0.1)
        self.assertAlmostEqual(report.results["finesse"], report.results["optimal_finesse_closed_form"], delta=0.1)
        self.assertTrue(report.validity.ok)

    def test_lossless_cavity_optimum_sits_on_the_boundary(self) -> None:
        result = optimize_cavity_design(0.8, epsilon=0.0, max_finesse=20.0, n_finesse=50)
        self.assertEqual(result.finesse, 20.0)
        self.assertFalse(result.validity.ok)

    def test_scan_optimum_is_the_best_row(self) -> None:
        result = optimize_cavity_design(0.8, epsilon=0.03, max_finesse=20.0, n_finesse=200)
        self.assertEqual(result.efficiency, float(np.max(result.scan[:, 3])))
        self.assertAlmostEqual(result.r1, math.exp(-2.0 * result.d_tilde), places=12)
        dense = [analytic.eta_cavity(0.8 / f, f, 0.03).value for f in np.linspace(1.0, 20.0, 2000)]
        self.assertAlmostEqual(result.efficiency, max(dense), delta=1e-3)


class CavityStudyTests(unittest.TestCase):
    def test_linewidth_narrowing(self) -> None:
        cav = CavityParams(r1=0.73, r2=0.995)
        report = run_cavity_linewidth(cav, 1.2, 15e6, FrequencyGrid(2**14, 80e6), probe_span=15e6)
        results = report.results
        self.assertAlmostEqual(results["empty_linewidth_hz"], 25e6, delta=1e6)
        self.assertGreater(results["window_linewidth_hz"], 1e6)
        self.assertLess(results["window_linewidth_hz"], 5e6)
        predicted = results["narrowing_ratio_predicted"]
        self.assertAlmostEqual(results["narrowing_ratio"], predicted, delta=0.25 * predicted)
        self.assertIn("reflection.csv", report.tables)

    def test_impedance_matched_reflectance(self) -> None:
        report = run_impedance(CavityParams(r1=math.exp(-0.32)), 0.16, FrequencyGrid(2**12, 80e6))
        self.assertLess(report.results["reflectance"], 1e-3)

    def test_comb_report(self) -> None:
        report = run_comb(_comb(), ECHO_GRID)
        self.assertEqual(report.results["tooth_count"], 20)
        self.assertAlmostEqual(report.results["mean_depth"], 0.16, delta=0.002)
        self.assertIn("comb_profile.csv", report.tables)


class BlochScenarioTests(unittest.TestCase):
    def test_curve_and_efficiency(self) -> None:
        report = run_bloch(CONTROL_PULSE, n_detunings=5, curve_points=5)
        results = report.results
        self.assertGreater(results["transfer_at_center"], 0.95)
        self.assertLess(results["max_norm_error"], 1e-6)
        self.assertGreater(results["eta_t"], 0.0)
        self.assertLessEqual(results["eta_t"], 1.0)
        self.assertEqual(results["eta_t_input_bandwidth_hz"], 0.5e6)
        self.assertEqual(results["eta_t_detunings"], 5)
        self.assertEqual(len(report.tables["bloch_curve.csv"].strip().splitlines()), 6)


class DispatchTests(unittest.TestCase):
    def test_config_runs_the_named_scenario(self) -> None:
        config = parse_config_dict(
            {
                "general": {"kind": "spinwave"},
                "comb": {"peak_depth": 0.8, "finesse": 5.0, "echo_delay_s": 1e-5, "total_bandwidth_hz": 10e6},
                "control": {"truncation_s": 4e-6},
                "spin": {"gamma_spin_hz": 26.5e3},
                "timeline": {"input_center_s": 2e-6, "control_first_s": 4e-6, "control_second_s": 9.3e-6},
                "budget": {"measured_eta_2l": 0.28, "eta_t": 0.7},
            }
        )
        report = run_scenario(config, tables=False)
        self.assertEqual(report.kind, "spinwave")
        self.assertAlmostEqual(report.results["eta_total"], 0.119, delta=0.002)

    def test_missing_cavity_reflectivity_is_impedance_matched(self) -> None:
        config = parse_config_dict(
            {
                "general": {"kind": "impedance"},
                "grid": {"n_points": 4096, "span_hz": 80e6},
                "cavity": {},
                "impedance": {"d_tilde": 0.16},
            }
        )
        report = run_scenario(config)
        self.assertAlmostEqual(report.results["r1"], math.exp(-0.32), places=12)
        self.assertLess(report.results["reflectance"], 1e-3)


if __name__ == "__main__":
    unittest.main()
