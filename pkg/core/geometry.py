# -*- coding: utf-8 -*-
"""
Géométrie: maillage du carré unité, frontière avec la mesure μ, mesure m,
vérification empirique de la propriété de d-ensemble et famille préfractale.

Tous les objets sont immuables après construction et se partagent en lecture
entre les tâches d'assemblage.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from config.settings import GeometryConfig
from core.errors import DSetMismatchError, GeometryError, InvalidInputError, MeshSizeError
from utils.common import print_status


# ===== MAILLAGE VOLUMIQUE =====

@dataclass(frozen=True, eq=False)
class Mesh:
    """Maillage triangulaire conforme d'un domaine plan (orientation directe)"""
    vertices: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray = field(init=False, repr=False)
    _inverse_maps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        triangles = np.array(self.triangles, dtype=np.int64, copy=True)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise GeometryError("Les sommets doivent former un tableau (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise GeometryError("Les triangles doivent former un tableau (m, 3)")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise GeometryError("Indice de sommet hors limites")

        signed = _signed_areas(vertices, triangles)
        flip = signed < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        areas = np.abs(signed)
        scale = max(1.0, float(np.ptp(vertices, axis=0).max()) ** 2) if len(vertices) else 1.0
        if np.any(areas <= GeometryConfig.MEASURE_RTOL * scale):
            raise GeometryError("Triangle d'aire nulle ou négative")

        a = vertices[triangles[:, 0]]
        jac = np.stack([vertices[triangles[:, 1]] - a, vertices[triangles[:, 2]] - a], axis=2)

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "_inverse_maps", np.linalg.inv(jac))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def total_area(self):
        return float(self.areas.sum())

    @property
    def h(self):
        """Plus grande longueur d'arête"""
        corners = self.vertices[self.triangles]
        lengths = np.linalg.norm(corners - np.roll(corners, -1, axis=1), axis=2)
        return float(lengths.max())

    @property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def edges(self):
        """Arêtes non orientées uniques et nombre de triangles incidents"""
        all_edges = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(all_edges, axis=0, return_counts=True)

    def lumped_weights(self):
        """Poids nodaux de Lebesgue condensés (un tiers des aires adjacentes)"""
        weights = np.zeros(self.n_vertices)
        np.add.at(weights, self.triangles.ravel(), np.repeat(self.areas / 3.0, 3))
        return weights

    def gradients(self, values):
        """Gradient constant de l'interpolé P1 sur chaque triangle"""
        values = np.asarray(values, dtype=float)
        local = values[self.triangles]
        diffs = np.stack([local[:, 1] - local[:, 0], local[:, 2] - local[:, 0]], axis=1)
        # ∇u = J^{-T} (u1-u0, u2-u0)
        return np.einsum("mji,mj->mi", self._inverse_maps, diffs)

    def barycentric(self, points, tri_index):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.vertices[self.triangles[tri_index, 0]]
        lam12 = np.einsum("mij,mj->mi", self._inverse_maps[tri_index], points - a)
        return np.column_stack([1.0 - lam12.sum(axis=1), lam12])

    def locate(self, points, chunk=512):
        """Indice du triangle contenant chaque point (-1 hors du maillage)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        located = np.empty(len(points), dtype=np.int64)
        a = self.vertices[self.triangles[:, 0]]
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            rel = block[:, None, :] - a[None, :, :]
            lam12 = np.einsum("mij,pmj->pmi", self._inverse_maps, rel)
            min_bary = np.minimum(1.0 - lam12.sum(axis=2), lam12.min(axis=2))
            best = np.argmax(min_bary, axis=1)
            inside = min_bary[np.arange(len(block)), best] >= -GeometryConfig.POINT_TOL
            located[start:start + chunk] = np.where(inside, best, -1)
        return located

    def interpolate(self, values, points):
        """Évaluation de l'interpolé P1 aux points donnés"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self.locate(points)
        if np.any(tri < 0):
            raise InvalidInputError(f"{int(np.sum(tri < 0))} point(s) hors du maillage")
        bary = self.barycentric(points, tri)
        return np.einsum("pi,pi->p", bary, np.asarray(values, dtype=float)[self.triangles[tri]])


def _signed_areas(vertices, triangles):
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def build_square_mesh(lower, upper, n):
    """Triangulation structurée d'un carré: n×n cellules coupées par la diagonale montante"""
    if n < 1:
        raise MeshSizeError("Au moins une cellule par côté")
    xs = np.linspace(lower[0], upper[0], n + 1)
    ys = np.linspace(lower[1], upper[1], n + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    triangles = np.concatenate([
        np.column_stack([v00, v10, v11]),
        np.column_stack([v00, v11, v01])
    ])
    return Mesh(vertices, triangles)


def build_unit_square_mesh(h):
    """Maillage de (0,1)² avec (1/h+1)² sommets et 2/h² triangles"""
    if not 0 < h <= 1:
        raise MeshSizeError(f"h = {h} hors de (0, 1]")
    n = int(round(1.0 / h))
    if abs(n * h - 1.0) > 1e-9:
        raise MeshSizeError(f"1/h = {1.0 / h:.6g} n'est pas entier")
    return build_square_mesh((0.0, 0.0), (1.0, 1.0), n)


# ===== FRONTIÈRE ET MESURES =====

@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    """Frontière polygonale fermée, parcourue dans le sens direct"""
    vertices: np.ndarray
    segments: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    d: float = 1.0

    @property
    def lengths(self):
        ends = self.vertices[self.segments]
        return np.linalg.norm(ends[:, 1] - ends[:, 0], axis=1)

    @property
    def total_measure(self):
        return float(self.lengths.sum())

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def h(self):
        return float(self.lengths.max())

    @property
    def diameter(self):
        return float(pdist(self.vertices[self.nodes]).max()) if self.n_nodes > 1 else 0.0

    def weights_full(self, n_vertices=None):
        """Poids μ prolongés par zéro sur tous les sommets du maillage"""
        full = np.zeros(n_vertices or len(self.vertices))
        full[self.nodes] = self.weights
        return full

    def local_index(self):
        """Correspondance sommet global → position dans `nodes` (-1 hors frontière)"""
        index = np.full(len(self.vertices), -1, dtype=np.int64)
        index[self.nodes] = np.arange(self.n_nodes)
        return index


@dataclass(frozen=True, eq=False)
class MeasureM:
    """Mesure m condensée: Lebesgue aux nœuds plus μ sur la frontière"""
    interior: np.ndarray
    boundary: np.ndarray

    @property
    def total(self):
        return self.interior + self.boundary

    @property
    def mass(self):
        return float(self.total.sum())


def extract_boundary(mesh: Mesh, d: float = GeometryConfig.BOUNDARY_DIMENSION) -> BoundaryMesh:
    """Segments de bord ordonnés et poids μ condensés (demi-longueurs adjacentes)"""
    if abs(d - 1.0) > 1e-12:
        raise DSetMismatchError(
            f"d = {d} demandé alors qu'une frontière polygonale est un 1-ensemble"
        )

    edges, counts = mesh.edges()
    if np.any(counts > 2):
        raise GeometryError("Maillage non conforme: arête partagée par plus de deux triangles")

    directed = mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = np.sort(directed, axis=1)
    boundary_keys = edges[counts == 1]
    if len(boundary_keys) == 0:
        raise GeometryError("Aucune arête de bord")
    is_boundary = (key[:, None, :] == boundary_keys[None, :, :]).all(axis=2).any(axis=1)
    oriented = directed[is_boundary]

    successor = {}
    for start, end in oriented:
        if start in successor:
            raise GeometryError(f"Frontière non étanche au sommet {start}")
        successor[int(start)] = int(end)

    first = int(oriented[0, 0])
    walk = [first]
    current = successor[first]
    while current != first:
        if current not in successor:
            raise GeometryError(f"Frontière ouverte au sommet {current}")
        walk.append(current)
        current = successor[current]
        if len(walk) > len(oriented):
            raise GeometryError("Parcours de frontière sans retour")
    if len(walk) != len(oriented):
        raise GeometryError("Frontière non connexe (plusieurs composantes)")

    nodes = np.array(walk, dtype=np.int64)
    segments = np.column_stack([nodes, np.roll(nodes, -1)])
    lengths = np.linalg.norm(mesh.vertices[segments[:, 1]] - mesh.vertices[segments[:, 0]], axis=1)
    weights = 0.5 * (lengths + np.roll(lengths, 1))
    return BoundaryMesh(mesh.vertices, segments, nodes, weights, float(d))


def build_measure(mesh: Mesh, boundary: BoundaryMesh) -> MeasureM:
    return MeasureM(mesh.lumped_weights(), boundary.weights_full(mesh.n_vertices))


# ===== PROPRIÉTÉ DE d-ENSEMBLE =====

@dataclass
class DSetEstimate:
    c1: float
    c2: float
    n_samples: int
    radii: List[float]
    skipped_radii: List[float]
    worst_low: Tuple[float, float, float]
    worst_high: Tuple[float, float, float]
    warnings: List[str] = field(default_factory=list)


def _disk_lengths(boundary, centers, radii):
    """μ(B(x,r) ∩ ∂Ω) exact pour chaque (centre, rayon)"""
    ends = boundary.vertices[boundary.segments]
    a, e = ends[:, 0], ends[:, 1] - ends[:, 0]
    f = a[None, :, :] - centers[:, None, :]
    A = np.einsum("si,si->s", e, e)[None, None, :]
    B = 2.0 * np.einsum("csi,si->cs", f, e)[:, None, :]
    C = np.einsum("csi,csi->cs", f, f)[:, None, :] - radii[None, :, None] ** 2
    disc = B * B - 4.0 * A * C
    root = np.sqrt(np.maximum(disc, 0.0))
    t1 = np.clip((-B - root) / (2.0 * A), 0.0, 1.0)
    t2 = np.clip((-B + root) / (2.0 * A), 0.0, 1.0)
    inside = np.where(disc > 0, np.maximum(t2 - t1, 0.0), 0.0) * np.sqrt(A)
    return inside.sum(axis=2)


def dset_ratio(boundary: BoundaryMesh, center, r, d=1.0):
    """Rapport μ(B(x,r)∩∂Ω)/r^d en un seul point"""
    value = _disk_lengths(boundary, np.atleast_2d(center), np.array([float(r)]))[0, 0]
    return float(value / r ** d)


def verify_dset(boundary: BoundaryMesh, d: float, radii: Sequence[float],
                centers: Optional[np.ndarray] = None) -> DSetEstimate:
    """Estime (c1, c2) par balayage des centres de bord et des rayons dans (h, diam ∂Ω)"""
    radii = [float(r) for r in radii]
    if not radii:
        raise InvalidInputError("Liste de rayons vide")

    h, diam = boundary.h, boundary.diameter
    used = [r for r in radii if h < r < diam]
    skipped = [r for r in radii if not h < r < diam]
    warnings = []
    if skipped:
        message = f"Rayons hors de ({h:.4g}, {diam:.4g}) ignorés: {skipped}"
        warnings.append(message)
        print_status(message, 'warning')
    if not used:
        raise InvalidInputError("Aucun rayon exploitable dans (h, diam ∂Ω)")

    if centers is None:
        ends = boundary.vertices[boundary.segments]
        centers = np.concatenate([boundary.vertices[boundary.nodes], ends.mean(axis=1)])
    centers = np.atleast_2d(centers)
    used_arr = np.array(used)
    ratios = _disk_lengths(boundary, centers, used_arr) / used_arr[None, :] ** d

    lo = np.unravel_index(np.argmin(ratios), ratios.shape)
    hi = np.unravel_index(np.argmax(ratios), ratios.shape)
    return DSetEstimate(
        c1=float(ratios[lo]),
        c2=float(ratios[hi]),
        n_samples=int(ratios.size),
        radii=used,
        skipped_radii=skipped,
        worst_low=(float(centers[lo[0], 0]), float(centers[lo[0], 1]), used[lo[1]]),
        worst_high=(float(centers[hi[0], 0]), float(centers[hi[0], 1]), used[hi[1]]),
        warnings=warnings
    )


def default_dset_radii(boundary: BoundaryMesh, count=GeometryConfig.DSET_RADII_COUNT):
    h, diam = boundary.h, boundary.diameter
    return list(np.geomspace(1.5 * h, 0.9 * diam, count))


# ===== FAMILLE PRÉFRACTALE =====

@dataclass(frozen=True, eq=False)
class PrefractalFamily:
    """Domaines lipschitziens emboîtés Ω_n = (δ_n, 1-δ_n)²"""
    meshes: Tuple[Mesh, ...]
    deltas: Tuple[float, ...]

    @property
    def areas(self):
        return [m.total_area for m in self.meshes]

    @property
    def exhaustion_gap(self):
        return 1.0 - self.areas[-1]

    def __len__(self):
        return len(self.meshes)


def prefractal_delta(n):
    return 2.0 ** (-n - 1)


def build_prefractal_sequence(n_max: int, h: float = GeometryConfig.DEFAULT_H) -> PrefractalFamily:
    """Carrés rétrécis maillés au pas ≈ h, avec contrôle d'emboîtement"""
    if n_max < 1:
        raise InvalidInputError("n_max ≥ 1 requis")

    meshes, deltas = [], []
    for n in range(1, n_max + 1):
        delta = prefractal_delta(n)
        side = 1.0 - 2.0 * delta
        cells = max(1, int(round(side / h)))
        meshes.append(build_square_mesh((delta, delta), (1.0 - delta, 1.0 - delta), cells))
        deltas.append(delta)

    tol = GeometryConfig.POINT_TOL
    for inner, outer in zip(meshes[:-1], meshes[1:]):
        lo, hi = outer.vertices.min(axis=0), outer.vertices.max(axis=0)
        if np.any(inner.vertices < lo - tol) or np.any(inner.vertices > hi + tol):
            raise GeometryError("Famille préfractale non emboîtée")
        if not inner.total_area < outer.total_area:
            raise GeometryError("Aires préfractales non strictement croissantes")
    return PrefractalFamily(tuple(meshes), tuple(deltas))


# ===== EXPORT / IMPORT TEXTE =====

def write_mesh_tables(mesh: Mesh, nodes_path, elements_path):
    """Tables texte: 'indice x y' pour les nœuds, 'indice v0 v1 v2' pour les éléments"""
    with open(nodes_path, "w", encoding="utf-8") as f:
        f.write("# index x y\n")
        for i, (x, y) in enumerate(mesh.vertices):
            f.write(f"{i} {x:.17g} {y:.17g}\n")
    with open(elements_path, "w", encoding="utf-8") as f:
        f.write("# index v0 v1 v2\n")
        for k, (a, b, c) in enumerate(mesh.triangles):
            f.write(f"{k} {a} {b} {c}\n")
    return Path(nodes_path), Path(elements_path)


def read_mesh_tables(nodes_path, elements_path) -> Mesh:
    nodes = pd.read_csv(nodes_path, sep=r"\s+", comment="#", header=None, names=["index", "x", "y"])
    elements = pd.read_csv(elements_path, sep=r"\s+", comment="#", header=None,
                           names=["index", "v0", "v1", "v2"])
    nodes = nodes.sort_values("index")
    elements = elements.sort_values("index")
    return Mesh(nodes[["x", "y"]].to_numpy(float), elements[["v0", "v1", "v2"]].to_numpy(np.int64))
