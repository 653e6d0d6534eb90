#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de la famille d'évolution discrète: grille, propagateurs, contraction,
positivité, ultracontractivité et bornes spectrales
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.assembly import coercivity_estimate, nash_check
from core.errors import InvalidInputError, OffGridTimeError, WindowTooNarrowError
from core.evolution import (
    TimeGrid, fractional_power_bound_check, generator_derivative_bound, generator_spectrum,
    interpolated_smoothing_check, lp_contraction_check, positivity_check, positivity_sweep, power_law_fit,
    prefactor_within_bound, semigroup_difference_check, smoothing_envelope, step_contraction_check,
    ultracontractivity_bound, ultracontractivity_fit, ultracontractivity_sweep
)
from core.norms import lp_norm
from tests import helpers


class TestTimeGrid(unittest.TestCase):
    """Grille uniforme et localisation des instants"""

    def test_uniform(self):
        grid = TimeGrid.uniform(0.2, 0.02)
        self.assertEqual(grid.steps, 10)
        self.assertEqual(len(grid), 11)
        self.assertAlmostEqual(grid.dt, 0.02)
        self.assertEqual(grid.index_of(0.1), 5)

    def test_non_integer_steps(self):
        with self.assertRaises(InvalidInputError):
            TimeGrid.uniform(0.2, 0.03)

    def test_off_grid_time(self):
        grid = TimeGrid.uniform(0.2, 0.02)
        with self.assertRaises(OffGridTimeError):
            grid.index_of(0.03)
        with self.assertRaises(OffGridTimeError):
            grid.index_of(0.4)

    def test_refined(self):
        grid = TimeGrid.uniform(0.2, 0.02).refined(4)
        self.assertEqual(grid.steps, 40)
        self.assertAlmostEqual(grid.dt, 0.005)


class TestPropagators(unittest.TestCase):
    """U_h(t, τ) et trajectoires"""

    def setUp(self):
        self.family = helpers.family(0.5)
        self.phi = np.linspace(0.0, 1.0, self.family.n_dofs)

    def test_propagate_matches_matrix(self):
        direct = self.family.propagate(self.phi, 0.0, 0.1)
        np.testing.assert_allclose(direct, self.family.propagator_matrix(5, 0) @ self.phi, atol=1e-13)

    def test_semigroup_composition(self):
        middle = self.family.propagate(self.phi, 0.0, 0.06)
        np.testing.assert_allclose(self.family.propagate(middle, 0.06, 0.2),
                                   self.family.propagate(self.phi, 0.0, 0.2), atol=1e-13)

    def test_reversed_times(self):
        with self.assertRaises(InvalidInputError):
            self.family.propagate(self.phi, 0.1, 0.0)

    def test_trajectory_table(self):
        table = self.family.trajectory_table(self.phi)
        self.assertEqual(list(table.columns), ["t", "l1", "l2", "linf", "min", "energy"])
        self.assertEqual(len(table), 11)
        self.assertTrue(np.all(np.diff(table["l2"].to_numpy()) <= 1e-12))

    @settings(deadline=None, max_examples=30)
    @given(hnp.arrays(np.float64, 9, elements=st.floats(-10.0, 10.0)))
    def test_l2_contraction_property(self, phi):
        family = helpers.family(0.5)
        out = family.propagate(phi, 0.0, 0.2)
        self.assertLessEqual(lp_norm(out, family.m, 2), lp_norm(phi, family.m, 2) * (1 + 1e-10) + 1e-14)


class TestContraction(unittest.TestCase):
    """Normes ℓ^p(m) des propagateurs"""

    def test_l2_contraction(self):
        report = lp_contraction_check(helpers.family(0.5), 2, trials=20)
        self.assertTrue(report.passed)
        self.assertEqual(len(report.per_time), 10)
        self.assertLessEqual(report.sampled_norm, report.exact_norm * (1 + 1e-10))
        self.assertLessEqual(report.power_iteration_norm, report.exact_norm * (1 + 1e-8))

    def test_sampled_below_exact(self):
        for p in (1, np.inf):
            report = lp_contraction_check(helpers.family(0.5), p, trials=20)
            self.assertLessEqual(report.sampled_norm, report.exact_norm * (1 + 1e-10) + 1e-12, msg=p)
            self.assertIsNone(report.power_iteration_norm)

    def test_unsupported_exponent(self):
        with self.assertRaises(InvalidInputError):
            lp_contraction_check(helpers.family(0.5), 3)

    def test_step_contraction(self):
        self.assertLessEqual(step_contraction_check(helpers.family(0.5), trials=20), 1.0 + 1e-12)

    def test_positivity_report(self):
        report = positivity_check(helpers.family(0.5), trials=20)
        self.assertEqual(report.trials, 20)
        self.assertLessEqual(report.matrix_defect, 0.0)
        self.assertEqual(report.passed, report.sampled_min >= -report.tol_pos)

    def test_positivity_sweep(self):
        families = [helpers.family(0.5), helpers.family(0.25)]
        sweep = positivity_sweep(families, trials=10, floor=1e-14)
        self.assertEqual(len(sweep.values), 2)
        self.assertTrue(all(v >= 0.0 for v in sweep.values))
        self.assertEqual(sweep.passed, sweep.values[1] <= sweep.values[0])


class TestPowerLaws(unittest.TestCase):
    """Ajustements log-log"""

    def test_synthetic_power_law(self):
        times = np.array([0.02, 0.05, 0.1, 0.2])
        exponent, prefactor, residual = power_law_fit(times, 3.0 * times ** -1.5)
        self.assertAlmostEqual(exponent, 1.5, places=10)
        self.assertAlmostEqual(prefactor, 3.0, places=9)
        self.assertLess(residual, 1e-10)

    def test_ultracontractivity_fit(self):
        fit = ultracontractivity_fit(helpers.family(0.5), (0.02, 0.2), lam=4.0)
        self.assertEqual(len(fit.times), 10)
        self.assertEqual(fit.target, 2.0)
        self.assertTrue(math.isfinite(fit.exponent))
        self.assertTrue(all(v > 0 for v in fit.norms))

    def test_ultracontractivity_prefactor_bound(self):
        assembler = helpers.assembler(0.5)
        snapshot = assembler.snapshot(0.0)
        C_emp = nash_check(snapshot, assembler.hs_gram, 4.0, samples=50).C_emp
        beta = coercivity_estimate(snapshot, assembler.hs_gram)
        fit = ultracontractivity_fit(helpers.family(0.5), (0.02, 0.2), lam=4.0)
        prefactor, limit, bounded = prefactor_within_bound(fit, 4.0, C_emp, beta)
        self.assertEqual(prefactor, fit.prefactor)
        self.assertAlmostEqual(limit, 10.0 * ultracontractivity_bound(4.0, C_emp, beta))
        self.assertAlmostEqual(ultracontractivity_bound(4.0, C_emp, beta), (2.0 * C_emp / beta) ** 2)
        self.assertTrue(bounded)

    def test_ultracontractivity_refinement(self):
        sweep = ultracontractivity_sweep([helpers.family(0.5), helpers.family(0.25)], (0.02, 0.2), 4.0)
        self.assertEqual(len(sweep.values), 2)
        self.assertLess(sweep.values[1], sweep.values[0])
        self.assertTrue(sweep.passed)

    def test_window_too_narrow(self):
        with self.assertRaises(WindowTooNarrowError):
            ultracontractivity_fit(helpers.family(0.5), (0.1, 0.2))

    def test_interpolated_smoothing(self):
        fit = interpolated_smoothing_check(helpers.family(0.5), 3.0, 4.0)
        self.assertAlmostEqual(fit.target, 2.0 / 3.0)
        self.assertEqual(len(fit.norms), 10)
        with self.assertRaises(InvalidInputError):
            interpolated_smoothing_check(helpers.family(0.5), 0.5, 4.0)


class TestSpectralBounds(unittest.TestCase):
    """Puissances fractionnaires de A_h à coefficients figés"""

    @classmethod
    def setUpClass(cls):
        cls.snapshot = helpers.assembler(0.5).snapshot(0.0)

    def test_spectrum_positive(self):
        self.assertGreater(generator_spectrum(self.snapshot)[0], 0.0)

    def test_smoothing_envelope(self):
        self.assertEqual(smoothing_envelope(0.0), 1.0)
        self.assertAlmostEqual(smoothing_envelope(1.0), 1.0 / math.e)

    def test_fractional_power_bound(self):
        report = fractional_power_bound_check(self.snapshot, 0.5, dt=0.02)
        self.assertTrue(report.passed)
        self.assertEqual(report.warnings, [])
        self.assertEqual(len(report.euler_values), 10)

    def test_theta_outside_range_warns(self):
        report = fractional_power_bound_check(self.snapshot, 1.5)
        self.assertEqual(len(report.warnings), 1)
        self.assertTrue(report.passed)

    def test_generator_derivative(self):
        report = generator_derivative_bound(self.snapshot)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.envelope, 1.0 / math.e)

    def test_semigroup_difference(self):
        result = semigroup_difference_check(self.snapshot, xi=0.5)
        self.assertTrue(result["passed"])
        with self.assertRaises(InvalidInputError):
            semigroup_difference_check(self.snapshot, xi=1.0)


if __name__ == "__main__":
    unittest.main()
