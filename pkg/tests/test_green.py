#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de l'opérateur régional en valeur principale, de la dérivée conormale,
de la formule de Green et des résidus de la forme forte
"""

import sys
import unittest
from pathlib import Path
from types import SimpleNamespace

import numpy as np

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import GeometryError, InvalidInputError, OffGridTimeError
from core.geometry import PrefractalFamily, build_prefractal_sequence
from core.green import (
    conormal, green_identity_check, lipschitz_approx_convergence, regional_laplacian_apply,
    residual_convergence, strong_residuals
)
from core.semilinear import power_nonlinearity
from tests import helpers


def square_x1(points):
    return np.asarray(points)[..., 0] ** 2


class TestRegionalOperator(unittest.TestCase):
    """B u(x) loin du bord"""

    def test_affine_field_at_center(self):
        laplacian = helpers.laplacian(0.25)
        u = helpers.mesh(0.25).vertices[:, 0]
        self.assertAlmostEqual(float(laplacian.evaluate(u, 0.0, [[0.5, 0.5]])[0]), 0.0, places=8)
        self.assertAlmostEqual(regional_laplacian_apply(laplacian, u, 0.0, [0.5, 0.5]), 0.0, places=8)

    def test_smooth_field_against_oracle(self):
        laplacian = helpers.laplacian(0.25)
        x = [0.4, 0.55]
        value = float(laplacian.evaluate(square_x1, 0.0, [x])[0])
        expected = helpers.regional_oracle(lambda a, b: a ** 2, x, 0.75, laplacian.CNs,
                                           helpers.square_angular_cuts(x))
        self.assertAlmostEqual(value / expected, 1.0, delta=1e-3)
        extrapolated = regional_laplacian_apply(laplacian, square_x1, 0.0, x, rtol=1e-4)
        self.assertAlmostEqual(extrapolated / value, 1.0, delta=1e-3)

    def test_constant_field(self):
        laplacian = helpers.laplacian(0.5)
        np.testing.assert_array_equal(laplacian.evaluate(np.ones(9), 0.0, [[0.5, 0.5], [0.3, 0.6]]), 0.0)

    def test_point_too_close_to_boundary(self):
        laplacian = helpers.laplacian(0.25)
        with self.assertRaises(InvalidInputError):
            regional_laplacian_apply(laplacian, square_x1, 0.0, [0.1, 0.5])

    def test_short_epsilon_sequence(self):
        laplacian = helpers.laplacian(0.25)
        with self.assertRaises(InvalidInputError):
            regional_laplacian_apply(laplacian, square_x1, 0.0, [0.5, 0.5], eps_sequence=[0.1, 0.05])
        with self.assertRaises(InvalidInputError):
            regional_laplacian_apply(laplacian, square_x1, 0.0, [0.5, 0.5], eps_sequence=[0.05, 0.1, 0.2])


class TestConormal(unittest.TestCase):
    """Fonctionnelle conormale et formule de Green"""

    def test_constant_has_zero_conormal(self):
        functional = conormal(helpers.laplacian(0.5), helpers.assembler(0.5), np.full(9, 2.0), 0.0)
        np.testing.assert_array_equal(functional.values, 0.0)
        self.assertEqual(functional.interior_defect, 0.0)

    def test_supported_on_boundary(self):
        assembler = helpers.assembler(0.5)
        u = helpers.mesh(0.5).vertices[:, 0]
        functional = conormal(helpers.laplacian(0.5), assembler, u, 0.0)
        interior = np.setdiff1d(np.arange(9), assembler.boundary.nodes)
        np.testing.assert_array_equal(functional.values[interior], 0.0)
        self.assertEqual(len(functional.on_boundary), len(assembler.boundary.nodes))
        v = np.arange(9, dtype=float)
        self.assertAlmostEqual(functional.pairing(v), float(functional.values @ v))
        self.assertTrue(np.isfinite(functional.interior_defect))

    def test_green_identity(self):
        mesh = helpers.mesh(0.5)
        u, v = mesh.vertices[:, 0], 1.0 + mesh.vertices[:, 1]
        report = green_identity_check(helpers.laplacian(0.5), helpers.assembler(0.5), u, v, 0.0, rtol=0.05)
        self.assertTrue(report.passed, report.relative_gap)
        self.assertAlmostEqual(report.boundary_pairing, report.seminorm_term - report.volume_term)


class TestLipschitzApproximation(unittest.TestCase):
    """Formes l_n(u, v) sur la famille préfractale"""

    def test_constant_field_vanishes(self):
        table = lipschitz_approx_convergence(
            lambda p: np.ones(len(p)), lambda p: np.asarray(p)[:, 0],
            build_prefractal_sequence(2, 0.5), 0.0, helpers.coefficients(), helpers.mesh(0.5)
        )
        self.assertEqual(table.l_full, 0.0)
        self.assertTrue(np.all(table.table["l_n"] == 0.0))
        self.assertTrue(table.passed)

    def test_linear_in_test_function(self):
        family = build_prefractal_sequence(1, 0.5)
        u = lambda p: np.asarray(p)[:, 0]
        once = lipschitz_approx_convergence(u, lambda p: 1.0 + np.asarray(p)[:, 1], family, 0.0,
                                            helpers.coefficients(), helpers.mesh(0.5))
        twice = lipschitz_approx_convergence(u, lambda p: 2.0 + 2.0 * np.asarray(p)[:, 1], family, 0.0,
                                             helpers.coefficients(), helpers.mesh(0.5))
        self.assertAlmostEqual(twice.l_full, 2.0 * once.l_full, places=9)
        np.testing.assert_allclose(twice.table["l_n"], 2.0 * once.table["l_n"], rtol=1e-9, atol=1e-12)

    def test_decreasing_areas_rejected(self):
        family = build_prefractal_sequence(2, 0.5)
        reversed_family = PrefractalFamily(family.meshes[::-1], family.deltas[::-1])
        with self.assertRaises(GeometryError):
            lipschitz_approx_convergence(square_x1, square_x1, reversed_family, 0.0,
                                         helpers.coefficients(), helpers.mesh(0.5))


class TestStrongResiduals(unittest.TestCase):
    """Résidus de la forme forte pour une trajectoire spatialement constante"""

    def setUp(self):
        times = np.linspace(0.0, 0.2, 11)
        n = helpers.mesh(0.25).n_vertices
        self.solution = SimpleNamespace(times=times, states=(1.0 + times)[:, None] * np.ones(n))

    def test_interior_residual(self):
        residuals = strong_residuals(self.solution, power_nonlinearity(3.0), 0.1, helpers.assembler(0.25),
                                     helpers.laplacian(0.25), cutoff=0.2)
        self.assertGreater(len(residuals.interior), 0)
        np.testing.assert_allclose(residuals.interior, 1.0 - 1.1 ** 3, rtol=1e-10)
        self.assertTrue(np.isfinite(residuals.boundary_norm))

    def test_off_grid_time(self):
        with self.assertRaises(OffGridTimeError):
            strong_residuals(self.solution, power_nonlinearity(3.0), 0.11, helpers.assembler(0.25),
                             helpers.laplacian(0.25), cutoff=0.2)

    def test_too_few_times(self):
        short = SimpleNamespace(times=self.solution.times[:2], states=self.solution.states[:2])
        with self.assertRaises(InvalidInputError):
            strong_residuals(short, power_nonlinearity(3.0), 0.0, helpers.assembler(0.25),
                             helpers.laplacian(0.25))


class TestResidualConvergence(unittest.TestCase):
    """Ordre en Δt des résidus forts, h et Δt raffinés ensemble"""

    @staticmethod
    def levels(profile):
        stages = []
        for h, steps in ((0.25, 10), (0.125, 20)):
            times = np.linspace(0.0, 0.2, steps + 1)
            n = helpers.mesh(h).n_vertices
            solution = SimpleNamespace(times=times, states=profile(times)[:, None] * np.ones(n))
            stages.append((solution, helpers.assembler(h), helpers.laplacian(h)))
        return stages

    def test_interior_first_order(self):
        # u' = u³, u(0) = 1: seule la différence finie en t reste à l'intérieur
        result = residual_convergence(self.levels(lambda t: (1.0 - 2.0 * t) ** -0.5),
                                      power_nonlinearity(3.0), 0.2, cutoff=0.25)
        self.assertEqual(list(result.table.columns), ["h", "dt", "t", "interior", "boundary"])
        self.assertGreaterEqual(result.interior_order, 0.8)
        self.assertLessEqual(result.interior_order, 1.2)
        # le bord porte en plus b u, qui ne s'annule pas
        self.assertLess(result.boundary_order, 0.8)
        self.assertFalse(result.passed)

    def test_boundary_first_order(self):
        # u' = u³ - u, u(0) = 1/2
        result = residual_convergence(self.levels(lambda t: (1.0 + 3.0 * np.exp(2.0 * t)) ** -0.5),
                                      power_nonlinearity(3.0), 0.2, cutoff=0.25)
        self.assertGreaterEqual(result.boundary_order, 0.8)
        self.assertLessEqual(result.boundary_order, 1.2)
        self.assertAlmostEqual(result.order, result.interior_order)

    def test_single_level(self):
        with self.assertRaises(InvalidInputError):
            residual_convergence(self.levels(lambda t: 1.0 + t)[:1], power_nonlinearity(3.0), 0.2)

    def test_levels_must_refine_dt(self):
        with self.assertRaises(InvalidInputError):
            residual_convergence(self.levels(lambda t: 1.0 + t)[::-1], power_nonlinearity(3.0), 0.2,
                                 cutoff=0.25)


if __name__ == "__main__":
    unittest.main()
