#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de l'assemblage: oracles exacts pour u = x1, structure des matrices,
coercivité, constante de Nash et continuité höldérienne en t
"""

import math
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.assembly import (
    FormSnapshot, QuadratureOptions, assemble_boundary_mass, assemble_interior, assemble_theta,
    RefinementSweep, coercivity_estimate, coercivity_sweep, continuity_estimate, hoelder_bound,
    hoelder_in_t_check, nash_check, nash_ratio, nash_sweep
)
from core.coefficients import InteriorKernel, compute_CNs, constant_kernel, constant_potential
from core.errors import CoercivityFailure, HypothesisViolation, InvalidInputError, QuadratureConfigError
from tests import helpers
from utils.common import read_coo


class TestInteriorForm(unittest.TestCase):
    """S_int(t) pour K constant"""

    @classmethod
    def setUpClass(cls):
        cls.mesh = helpers.mesh(0.25)
        cls.S = assemble_interior(cls.mesh, None, 0.0, 0.75, max_workers=2)

    def test_linear_oracle(self):
        u = self.mesh.vertices[:, 0]
        expected = helpers.interior_linear_oracle(0.75)
        self.assertAlmostEqual(float(u @ self.S @ u) / expected, 1.0, delta=0.03)

    def test_structure(self):
        np.testing.assert_allclose(self.S, self.S.T, atol=1e-14)
        np.testing.assert_allclose(self.S @ np.ones(self.mesh.n_vertices), 0.0, atol=1e-12)
        eigenvalues = np.linalg.eigvalsh(self.S)
        self.assertGreater(eigenvalues[0], -1e-10 * eigenvalues[-1])

    def test_constant_kernel_scales(self):
        kernel = constant_kernel(1.3)
        scaled = assemble_interior(self.mesh, kernel, 0.0, 0.75, max_workers=2)
        np.testing.assert_allclose(scaled, 1.3 * self.S, rtol=1e-12, atol=1e-14)

    def test_explicit_normalization(self):
        doubled = assemble_interior(self.mesh, None, 0.0, 0.75, CNs=2.0 * compute_CNs(2, 0.75), max_workers=2)
        np.testing.assert_allclose(doubled, 2.0 * self.S, rtol=1e-12, atol=1e-14)

    def test_thread_count_does_not_change_result(self):
        mesh = helpers.mesh(0.5)
        # noyau non constant: chemin général
        kernel = InteriorKernel(evaluator=lambda t, x, y: 1.0 + 0.1 * np.cos(x[..., 0] - y[..., 0]),
                              k1=0.5, k2=1.5, hoelder_constant=0.0, eta=0.75)
        one = assemble_interior(mesh, kernel, 0.0, 0.75, max_workers=1, deterministic=True)
        four = assemble_interior(mesh, kernel, 0.0, 0.75, max_workers=4, deterministic=True)
        np.testing.assert_array_equal(one, four)

    def test_quadrature_options(self):
        with self.assertRaises(QuadratureConfigError):
            QuadratureOptions(singular_order=1)
        with self.assertRaises(QuadratureConfigError):
            QuadratureOptions(far_order=0)


class TestBoundaryForm(unittest.TestCase):
    """Θ(t) et masse de bord"""

    def test_linear_oracle(self):
        mesh, boundary = helpers.mesh(0.25), helpers.boundary(0.25)
        theta = assemble_theta(boundary, None, 0.0, 0.25)
        u = mesh.vertices[:, 0]
        expected = helpers.boundary_linear_oracle(0.25)
        self.assertAlmostEqual(float(u @ theta @ u) / expected, 1.0, delta=0.02)

    def test_structure(self):
        boundary = helpers.boundary(0.25)
        theta = assemble_theta(boundary, None, 0.0, 0.25)
        np.testing.assert_allclose(theta, theta.T, atol=1e-14)
        np.testing.assert_allclose(theta.sum(axis=1), 0.0, atol=1e-12)
        interior = np.setdiff1d(np.arange(len(theta)), boundary.nodes)
        self.assertFalse(np.any(theta[interior]))

    def test_alpha_range(self):
        with self.assertRaises(InvalidInputError):
            assemble_theta(helpers.boundary(0.5), None, 0.0, 1.2)

    def test_boundary_mass(self):
        # u = x1, b = 2: trapèzes sur le bord, 2·(5/3 + h²/3)
        for h, expected in ((0.5, 3.5), (0.25, 3.375)):
            boundary = helpers.boundary(h)
            mass = assemble_boundary_mass(boundary, constant_potential(2.0, b_sup=3.0), 0.0)
            self.assertAlmostEqual(np.trace(mass), 8.0)
            u = helpers.mesh(h).vertices[:, 0]
            self.assertAlmostEqual(float(u @ mass @ u), expected, places=12)
            self.assertAlmostEqual(float(u @ mass @ u), 2.0 * (5.0 / 3.0 + h ** 2 / 3.0), places=12)

    def test_nonpositive_potential(self):
        with self.assertRaises(HypothesisViolation):
            assemble_boundary_mass(helpers.boundary(0.5), constant_potential(-1.0), 0.0)


class TestFormAssembler(unittest.TestCase):
    """Instantanés E_h(t) et diagnostics"""

    def test_snapshot_cache_for_autonomous_coefficients(self):
        assembler = helpers.assembler(0.5)
        first, second = assembler.snapshot(0.0), assembler.snapshot(0.1)
        self.assertIs(first.S_int, second.S_int)
        self.assertAlmostEqual(first.m_weights.sum(), 5.0)

    def test_coercivity(self):
        assembler = helpers.assembler(0.5)
        snapshot = assembler.snapshot(0.0)
        beta = coercivity_estimate(snapshot, assembler.hs_gram)
        self.assertGreater(beta, 0.0)
        self.assertGreaterEqual(continuity_estimate(snapshot, assembler.hs_gram), beta)

    def test_coercivity_failure(self):
        n = 4
        snapshot = FormSnapshot(0.3, np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n)), np.eye(n))
        with self.assertRaises(CoercivityFailure) as ctx:
            coercivity_estimate(snapshot, np.eye(n))
        self.assertEqual(ctx.exception.to_record()["t"], 0.3)

    def test_nash_constant_ratio(self):
        assembler = helpers.assembler(0.5)
        report = nash_check(assembler.snapshot(0.0), assembler.hs_gram, 4.0, samples=100)
        self.assertAlmostEqual(report.constant_ratio, math.sqrt(5.0), places=10)
        self.assertEqual(len(report.ratios), 100)
        self.assertAlmostEqual(
            float(nash_ratio(report.worst_sample, assembler.hs_gram, assembler.snapshot(0.0).m_weights, 4.0)),
            report.C_emp
        )
        self.assertGreaterEqual(report.C_emp, report.constant_ratio)

    def test_hoelder_autonomous(self):
        report = hoelder_in_t_check(helpers.assembler(0.5), [0.0, 0.1, 0.2])
        self.assertEqual(report.constant, 0.0)
        self.assertTrue(report.passed)

    def test_hoelder_sinusoidal(self):
        assembler = helpers.assembler(0.5, "sinusoidal")
        times = [0.0, 0.1, 0.2]
        report = hoelder_in_t_check(assembler, times)
        factor = assembler.seminorm_factor
        expected = max(
            0.25 * abs(math.sin(t) - math.sin(tau)) * factor / abs(t - tau) ** 0.75
            for i, t in enumerate(times) for tau in times[i + 1:]
        )
        self.assertAlmostEqual(report.constant / expected, 1.0, places=8)
        self.assertEqual(report.pairs, 3)

    def test_hoelder_bound_sinusoidal(self):
        assembler = helpers.assembler(0.5, "sinusoidal")
        bound = hoelder_bound(assembler)
        self.assertAlmostEqual(bound, 0.25 * 0.2 ** 0.25 * assembler.seminorm_factor, places=12)
        report = hoelder_in_t_check(assembler, [0.0, 0.1, 0.2], bound)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.constant, bound)

    def test_hoelder_bound_autonomous(self):
        self.assertEqual(hoelder_bound(helpers.assembler(0.5)), 0.0)

    def test_export_coo(self):
        assembler = helpers.assembler(0.5)
        snapshot = assembler.snapshot(0.0)
        with tempfile.TemporaryDirectory() as temp_dir:
            written = assembler.export_coo(snapshot, temp_dir)
            self.assertEqual(len(written), 4)
            np.testing.assert_array_equal(read_coo(written[0]), snapshot.S_int)


class TestRefinement(unittest.TestCase):
    """Constantes discrètes sous raffinement du maillage"""

    def setUp(self):
        self.assemblers = [helpers.assembler(0.25), helpers.assembler(0.125)]

    def test_coercivity_stable(self):
        sweep = coercivity_sweep(self.assemblers, limit=1.2)
        self.assertEqual(len(sweep.values), 2)
        self.assertTrue(all(v > 0 for v in sweep.values))
        self.assertLessEqual(sweep.spread, 1.2)
        self.assertTrue(sweep.passed)

    def test_nash_stable(self):
        sweep = nash_sweep(self.assemblers, 4.0, samples=50, limit=2.0)
        self.assertTrue(sweep.passed)
        for value in sweep.values:
            self.assertGreaterEqual(value, math.sqrt(5.0) - 1e-12)
        table = sweep.table()
        self.assertEqual(list(table.columns), ["quantity", "h", "value"])
        self.assertEqual(len(table), 2)

    def test_stable_rejects_spread(self):
        sweep = RefinementSweep.stable("x", [0.25, 0.125], [1.0, 1.3], 1.2)
        self.assertAlmostEqual(sweep.spread, 1.3)
        self.assertFalse(sweep.passed)

    def test_stable_zero_value(self):
        sweep = RefinementSweep.stable("x", [0.25, 0.125], [0.0, 1.0], 1.2)
        self.assertEqual(sweep.spread, math.inf)
        self.assertFalse(sweep.passed)

    def test_nonincreasing(self):
        self.assertTrue(RefinementSweep.nonincreasing("x", [0.25, 0.125], [2e-9, 1e-9]).passed)
        self.assertFalse(RefinementSweep.nonincreasing("x", [0.25, 0.125], [1e-9, 2e-9]).passed)

    def test_nonincreasing_floor(self):
        sweep = RefinementSweep.nonincreasing("x", [0.25, 0.125], [1e-16, 2e-16], floor=1e-14)
        self.assertEqual(sweep.values, [0.0, 0.0])
        self.assertTrue(sweep.passed)


if __name__ == "__main__":
    unittest.main()
