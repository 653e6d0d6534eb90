#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests du maillage, de la frontière, des mesures et de la famille préfractale
"""

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import DSetMismatchError, GeometryError, InvalidInputError, MeshSizeError
from core.geometry import (
    Mesh, build_measure, build_prefractal_sequence, build_unit_square_mesh, dset_ratio,
    extract_boundary, read_mesh_tables, verify_dset, write_mesh_tables
)
from tests import helpers


class TestMesh(unittest.TestCase):
    """Maillage structuré du carré unité"""

    def test_counts_and_area(self):
        mesh = helpers.mesh(0.25)
        self.assertEqual(mesh.n_vertices, 25)
        self.assertEqual(mesh.n_triangles, 32)
        self.assertAlmostEqual(mesh.total_area, 1.0, places=12)
        self.assertAlmostEqual(mesh.h, np.sqrt(2) * 0.25, places=12)

    def test_invalid_sizes(self):
        for h in (0.0, -0.5, 1.5, 0.3):
            with self.assertRaises(MeshSizeError):
                build_unit_square_mesh(h)

    def test_orientation_is_repaired(self):
        mesh = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 2, 1]]))
        self.assertAlmostEqual(mesh.areas[0], 0.5)
        self.assertEqual(mesh.triangles[0].tolist(), [0, 1, 2])

    def test_degenerate_triangle(self):
        with self.assertRaises(GeometryError):
            Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]))

    def test_lumped_weights_partition(self):
        mesh = helpers.mesh(0.25)
        self.assertAlmostEqual(mesh.lumped_weights().sum(), 1.0, places=12)

    def test_gradients_of_affine_field(self):
        mesh = helpers.mesh(0.25)
        values = 2.0 * mesh.vertices[:, 0] - 3.0 * mesh.vertices[:, 1] + 1.0
        np.testing.assert_allclose(mesh.gradients(values), np.tile([2.0, -3.0], (mesh.n_triangles, 1)),
                                   atol=1e-12)

    def test_locate_outside(self):
        mesh = helpers.mesh(0.5)
        self.assertEqual(mesh.locate(np.array([[1.5, 0.5]]))[0], -1)
        with self.assertRaises(InvalidInputError):
            mesh.interpolate(np.zeros(mesh.n_vertices), [[1.5, 0.5]])

    @settings(deadline=None, max_examples=30)
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_interpolation_reproduces_affine(self, x, y):
        mesh = helpers.mesh(0.25)
        values = mesh.vertices[:, 0] + 0.5 * mesh.vertices[:, 1]
        self.assertAlmostEqual(float(mesh.interpolate(values, [[x, y]])[0]), x + 0.5 * y, places=10)

    def test_tables_round_trip(self):
        mesh = helpers.mesh(0.5)
        with tempfile.TemporaryDirectory() as temp_dir:
            nodes, elements = Path(temp_dir) / "nodes.txt", Path(temp_dir) / "elements.txt"
            write_mesh_tables(mesh, nodes, elements)
            again = read_mesh_tables(nodes, elements)
        np.testing.assert_array_equal(again.vertices, mesh.vertices)
        np.testing.assert_array_equal(again.triangles, mesh.triangles)


class TestBoundary(unittest.TestCase):
    """Frontière ordonnée, poids μ et mesure m"""

    def test_closed_boundary(self):
        boundary = helpers.boundary(0.25)
        self.assertEqual(boundary.n_nodes, 16)
        self.assertAlmostEqual(boundary.total_measure, 4.0, places=12)
        self.assertAlmostEqual(boundary.weights.sum(), 4.0, places=12)
        np.testing.assert_array_equal(boundary.segments[:-1, 1], boundary.segments[1:, 0])
        self.assertEqual(boundary.segments[-1, 1], boundary.segments[0, 0])

    def test_measure_total(self):
        mesh = helpers.mesh(0.25)
        measure = build_measure(mesh, helpers.boundary(0.25))
        self.assertAlmostEqual(measure.mass, 5.0, places=12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DSetMismatchError):
            extract_boundary(helpers.mesh(0.5), d=1.5)

    def test_dset_ratio_on_edge_and_corner(self):
        boundary = helpers.boundary(0.25)
        self.assertAlmostEqual(dset_ratio(boundary, [0.5, 0.0], 0.25), 2.0, places=12)
        self.assertAlmostEqual(dset_ratio(boundary, [0.0, 0.0], 0.5), 2.0, places=12)

    def test_verify_dset_bounds(self):
        boundary = helpers.boundary(0.25)
        estimate = verify_dset(boundary, 1.0, [0.1, 0.3, 0.5])
        self.assertEqual(estimate.skipped_radii, [0.1])
        self.assertEqual(len(estimate.warnings), 1)
        self.assertLessEqual(estimate.c1, 2.0 + 1e-9)
        self.assertGreaterEqual(estimate.c1, 1.5)
        self.assertGreaterEqual(estimate.c2, 2.0)

    def test_verify_dset_without_usable_radius(self):
        with self.assertRaises(InvalidInputError):
            verify_dset(helpers.boundary(0.25), 1.0, [0.01, 5.0])


class TestPrefractal(unittest.TestCase):
    """Famille emboîtée de carrés rétrécis"""

    def test_areas_increase(self):
        family = build_prefractal_sequence(3, 0.25)
        self.assertEqual(len(family), 3)
        np.testing.assert_allclose(family.areas, [0.25, 0.5625, 0.765625], rtol=1e-12)
        self.assertAlmostEqual(family.exhaustion_gap, 1.0 - 0.765625)

    def test_invalid_depth(self):
        with self.assertRaises(InvalidInputError):
            build_prefractal_sequence(0)


if __name__ == "__main__":
    unittest.main()
