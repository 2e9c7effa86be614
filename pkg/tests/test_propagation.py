import math
import unittest

import numpy as np

from src import analytic
from src.errors import GridError, NoEchoFoundError, WindowError
from src.models import CombParams, ComplexResponse, FrequencyGrid
from src.propagation import (
    centroid,
    echo_efficiency,
    first_echo_peak_time,
    gaussian_pulse,
    propagate,
    pulse_spectrum,
    spectral_fwhm,
)
from src.spectrum import build_comb, group_delay, kramers_kronig_response, lorentzian_line, transparency_window

GRID = FrequencyGrid(2**16, 20e6)
TIME = GRID.time_grid()


def _single_pass(comb: CombParams, fwhm: float = 1e-6, center: float = 10e-6, grid: FrequencyGrid = GRID):
    medium = kramers_kronig_response(build_comb(comb, grid))
    pulse = gaussian_pulse(fwhm, center, grid.time_grid())
    return propagate(pulse, medium)


class PulseTests(unittest.TestCase):
    def test_gaussian_pulse_has_unit_energy(self) -> None:
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        self.assertAlmostEqual(pulse.energy, 1.0, places=12)
        self.assertAlmostEqual(centroid(pulse, 0.0, 20e-6), 10e-6, delta=TIME.dt / 100)

    def test_spectrum_width(self) -> None:
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        power = np.abs(pulse_spectrum(pulse)) ** 2
        above = GRID.frequencies[power >= power.max() / 2]
        self.assertAlmostEqual(above[-1] - above[0], spectral_fwhm(1e-6), delta=3 * GRID.resolution)

    def test_unresolved_pulse_is_rejected(self) -> None:
        with self.assertRaises(GridError):
            gaussian_pulse(3 * TIME.dt, 10e-6, TIME)

    def test_pulse_cut_by_grid_edge_is_rejected(self) -> None:
        with self.assertRaises(GridError):
            gaussian_pulse(1e-6, 1e-6, TIME)

    def test_mismatched_grids_are_rejected(self) -> None:
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        other = ComplexResponse(FrequencyGrid(2**16, 40e6), np.ones(2**16))
        with self.assertRaises(GridError):
            propagate(pulse, other)


class SinglePassEchoTests(unittest.TestCase):
    def test_empty_medium_returns_the_input(self) -> None:
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        out = propagate(pulse, ComplexResponse(GRID, np.ones(GRID.n_points)))
        np.testing.assert_allclose(out.envelope, pulse.envelope, atol=1e-9)

    def test_efficiency_matches_closed_form(self) -> None:
        finesse = analytic.optimal_finesse(0.8)
        comb = CombParams(peak_depth=0.8, tooth_spacing=250e3, finesse=finesse, total_bandwidth=5e6)
        out = _single_pass(comb)
        efficiency = echo_efficiency(out, 10e-6 + comb.echo_delay)
        predicted = analytic.eta_single_pass(comb.average_depth, finesse)
        self.assertAlmostEqual(efficiency, predicted, delta=0.03 * predicted)
        self.assertAlmostEqual(efficiency, 0.044, delta=0.003)

    def test_longer_pulse_fits_the_default_window(self) -> None:
        finesse = analytic.optimal_finesse(0.8)
        comb = CombParams(peak_depth=0.8, tooth_spacing=250e3, finesse=finesse, total_bandwidth=5e6)
        out = _single_pass(comb, fwhm=1.5e-6)
        self.assertAlmostEqual(echo_efficiency(out, 10e-6 + comb.echo_delay), 0.044, delta=0.003)

    def test_echo_appears_at_inverse_tooth_spacing(self) -> None:
        comb = CombParams(peak_depth=2.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        out = _single_pass(comb)
        peak = first_echo_peak_time(out)
        self.assertAlmostEqual(peak, 10e-6 + 4e-6, delta=TIME.dt)

    def test_efficiency_does_not_depend_on_input_amplitude(self) -> None:
        comb = CombParams(peak_depth=2.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        medium = kramers_kronig_response(build_comb(comb, GRID))
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        small = echo_efficiency(propagate(pulse, medium), 14e-6)
        large = echo_efficiency(propagate(pulse.scaled(7.5), medium), 14e-6)
        self.assertAlmostEqual(small, large, places=12)

    def test_grid_refinement_is_stable(self) -> None:
        comb = CombParams(peak_depth=2.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        coarse = echo_efficiency(_single_pass(comb), 14e-6)
        fine = echo_efficiency(_single_pass(comb, grid=FrequencyGrid(2**17, 40e6)), 14e-6)
        self.assertAlmostEqual(fine, coarse, delta=0.005 * coarse)

    def test_no_comb_no_echo(self) -> None:
        comb = CombParams(peak_depth=0.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        out = _single_pass(comb)
        self.assertAlmostEqual(echo_efficiency(out, 14e-6), 0.0, delta=1e-5)
        with self.assertRaises(NoEchoFoundError):
            first_echo_peak_time(out)

    def test_nothing_arrives_before_the_input(self) -> None:
        medium = kramers_kronig_response(lorentzian_line(2.0, 0.5e6, GRID))
        pulse = gaussian_pulse(1e-6, 20e-6, TIME)
        out = propagate(pulse, medium)
        early = out.energy_between(0.0, 20e-6 - 6e-6)
        self.assertLess(early, 1e-6 * pulse.energy)


class EchoInvariantTests(unittest.TestCase):
    # 250 Hz bins put every 250 kHz tooth period on a whole number of samples
    ALIGNED = FrequencyGrid(2**16, 16.384e6)

    def test_second_echo_is_weaker_than_the_first(self) -> None:
        for d_tilde in (0.2, 1.0):
            with self.subTest(d_tilde=d_tilde):
                comb = CombParams(peak_depth=5.0 * d_tilde, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
                out = _single_pass(comb)
                first = echo_efficiency(out, 14e-6)
                second = echo_efficiency(out, 18e-6)
                self.assertGreater(first, 0.0)
                self.assertLess(second, first)

    def test_delaying_the_input_delays_the_output(self) -> None:
        comb = CombParams(peak_depth=2.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        medium = kramers_kronig_response(build_comb(comb, GRID))
        shift = int(round(2e-6 / TIME.dt))
        early = propagate(gaussian_pulse(1e-6, 10e-6, TIME), medium)
        late = propagate(gaussian_pulse(1e-6, 12e-6, TIME), medium)
        self.assertAlmostEqual(first_echo_peak_time(late) - first_echo_peak_time(early), 2e-6, delta=TIME.dt)
        np.testing.assert_allclose(late.envelope, np.roll(early.envelope, shift), atol=1e-6)
        eta_early = echo_efficiency(early, 14e-6)
        self.assertAlmostEqual(echo_efficiency(late, 16e-6), eta_early, delta=1e-4 * eta_early)

    def test_passive_media_never_add_energy(self) -> None:
        deep = CombParams(peak_depth=12.0, tooth_spacing=250e3, finesse=6.5, total_bandwidth=5e6)
        media = {
            "deep comb": build_comb(deep, GRID),
            "lorentzian": lorentzian_line(2.0, 1e6, GRID),
            "transparency window": transparency_window(1.2, 2e6, GRID),
        }
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        for name, profile in media.items():
            with self.subTest(medium=name):
                out = propagate(pulse, kramers_kronig_response(profile))
                self.assertLessEqual(out.energy, pulse.energy * (1.0 + 1e-9))

    def test_simulated_efficiency_tracks_closed_form(self) -> None:
        cases = ((3.0, 0.05), (3.0, 1.0), (6.0, 0.5), (10.0, 0.05), (10.0, 1.0))
        for finesse, d_tilde in cases:
            with self.subTest(finesse=finesse, d_tilde=d_tilde):
                comb = CombParams(
                    peak_depth=finesse * d_tilde, tooth_spacing=250e3, finesse=finesse, total_bandwidth=5e6
                )
                efficiency = echo_efficiency(_single_pass(comb, grid=self.ALIGNED), 14e-6)
                predicted = analytic.eta_single_pass(d_tilde, finesse)
                self.assertAlmostEqual(efficiency, predicted, delta=0.03 * predicted)

    def test_deep_comb_near_its_optimum(self) -> None:
        comb = CombParams(peak_depth=12.0, tooth_spacing=250e3, finesse=6.5, total_bandwidth=5e6)
        efficiency = echo_efficiency(_single_pass(comb, grid=self.ALIGNED), 14e-6)
        self.assertAlmostEqual(efficiency, 0.50, delta=0.02)


class WindowTests(unittest.TestCase):
    def setUp(self) -> None:
        comb = CombParams(peak_depth=2.0, tooth_spacing=250e3, finesse=5.0, total_bandwidth=5e6)
        self.out = _single_pass(comb)

    def test_window_overlapping_input_is_rejected(self) -> None:
        with self.assertRaises(WindowError):
            echo_efficiency(self.out, 14e-6, window=7e-6)

    def test_short_window_is_rejected(self) -> None:
        with self.assertRaises(WindowError):
            echo_efficiency(self.out, 14e-6, window=2e-6)

    def test_window_past_grid_end_is_rejected(self) -> None:
        with self.assertRaises(WindowError):
            echo_efficiency(self.out, TIME.duration - 1e-6)

    def test_input_energy_is_required_for_bare_waveforms(self) -> None:
        bare = gaussian_pulse(1e-6, 10e-6, TIME)
        with self.assertRaises(WindowError):
            echo_efficiency(bare, 14e-6)
        self.assertGreaterEqual(echo_efficiency(bare, 14e-6, input_energy=1.0), 0.0)


class DelayTests(unittest.TestCase):
    def test_centroid_shift_matches_group_delay(self) -> None:
        medium = kramers_kronig_response(lorentzian_line(1.0, 2e6, GRID, center=3e6))
        pulse = gaussian_pulse(1e-6, 10e-6, TIME)
        out = propagate(pulse, medium)
        shift = centroid(out, 5e-6, 15e-6) - 10e-6
        expected = group_delay(medium).center
        self.assertAlmostEqual(shift, expected, delta=0.1 * abs(expected) + 1e-10)
        self.assertFalse(math.isnan(shift))


if __name__ == "__main__":
    unittest.main()
