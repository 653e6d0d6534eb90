# -*- coding: utf-8 -*-
"""
Assemblage P1 de la forme E(t,u,v): partie non locale intérieure, opérateur
de bord Θ, potentiel de bord et matrice de masse de L²(Ω, m)

Les intégrales non locales sont assemblées sous forme de différences
(φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y)), ce qui rend la semi-définie positivité structurelle.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, sparse

from config.settings import FitConfig, QuadratureConfig, RuntimeConfig
from core.coefficients import CoefficientSet, compute_CNs
from core.errors import (
    CoercivityFailure, HypothesisViolation, InvalidInputError, QuadratureConfigError
)
from core.geometry import BoundaryMesh, Mesh, build_measure
from core.norms import lp_norm
from core.quadrature import (
    pair_tensor_rule, sauter_schwab_rule, segment_identical_rule, segment_tensor_rule,
    segment_vertex_rule
)
from utils.common import print_status, write_coo

DETERMINISTIC_BLOCKS = 16


@dataclass(frozen=True)
class QuadratureOptions:
    singular_order: int = QuadratureConfig.SINGULAR_ORDER
    near_order: int = QuadratureConfig.NEAR_ORDER
    far_order: int = QuadratureConfig.FAR_ORDER
    near_factor: float = QuadratureConfig.NEAR_FACTOR
    boundary_order: int = QuadratureConfig.BOUNDARY_ORDER

    def __post_init__(self):
        if self.singular_order < QuadratureConfig.MIN_SINGULAR_ORDER:
            raise QuadratureConfigError(
                f"Ordre {self.singular_order} insuffisant pour les paires en contact "
                f"(minimum {QuadratureConfig.MIN_SINGULAR_ORDER})"
            )
        if min(self.near_order, self.far_order, self.boundary_order) < 1:
            raise QuadratureConfigError("Ordres de quadrature ≥ 1 requis")

    @classmethod
    def from_section(cls, section):
        return cls(section.singular_order, section.near_order, section.far_order,
                   section.near_factor, section.boundary_order)


# ===== CLASSIFICATION DES PAIRES =====

@dataclass(frozen=True, eq=False)
class PairClasses:
    """Paires non ordonnées de triangles (sommets réordonnés selon le contact)

    Chaque classe est un triplet (tri1, tri2, jac) avec jac = (2|T1|)(2|T2|).
    """
    identical: tuple
    edge: tuple
    vertex: tuple
    near: tuple
    far: tuple
    remote: tuple


def _reorder_shared(tri_a, tri_b):
    """Place les sommets communs en tête, dans le même ordre pour les deux triangles"""
    first, second = [], []
    for a, b in zip(tri_a.tolist(), tri_b.tolist()):
        common = [v for v in a if v in b]
        first.append(common + [v for v in a if v not in common])
        second.append(common + [v for v in b if v not in common])
    return np.array(first, dtype=np.int64).reshape(-1, 3), np.array(second, dtype=np.int64).reshape(-1, 3)


@lru_cache(maxsize=8)
def classify_pairs(mesh: Mesh, near_factor: float) -> PairClasses:
    m, n = mesh.n_triangles, mesh.n_vertices
    incidence = sparse.csr_matrix(
        (np.ones(3 * m), (np.repeat(np.arange(m), 3), mesh.triangles.ravel())), shape=(m, n)
    )
    shared = (incidence @ incidence.T).toarray().astype(np.int8)
    i, j = np.triu_indices(m, 1)
    counts = shared[i, j]
    tris, areas = mesh.triangles, mesh.areas

    def jac(a, b):
        return 4.0 * areas[a] * areas[b]

    ei, ej = i[counts == 2], j[counts == 2]
    vi, vj = i[counts == 1], j[counts == 1]
    di, dj = i[counts == 0], j[counts == 0]
    dist = np.linalg.norm(mesh.centroids[di] - mesh.centroids[dj], axis=1)
    radius = near_factor * mesh.h
    tiers = [dist < radius, (dist >= radius) & (dist < 3.0 * radius), dist >= 3.0 * radius]
    disjoint = [(tris[di[k]], tris[dj[k]], jac(di[k], dj[k])) for k in tiers]

    all_idx = np.arange(m)
    return PairClasses(
        identical=(tris, tris, jac(all_idx, all_idx)),
        edge=(*_reorder_shared(tris[ei], tris[ej]), jac(ei, ej)),
        vertex=(*_reorder_shared(tris[vi], tris[vj]), jac(vi, vj)),
        near=disjoint[0],
        far=disjoint[1],
        remote=disjoint[2],
    )


def _barycentric(points):
    return np.column_stack([1.0 - points[:, 0] - points[:, 1], points[:, 0], points[:, 1]])


def _difference_vectors(kind, rule):
    lam, mu = _barycentric(rule.test), _barycentric(rule.trial)
    if kind == "identical":
        return lam - mu
    if kind == "edge":
        return np.column_stack([lam[:, 0] - mu[:, 0], lam[:, 1] - mu[:, 1], lam[:, 2], -mu[:, 2]])
    if kind == "vertex":
        return np.column_stack([lam[:, 0] - mu[:, 0], lam[:, 1], lam[:, 2], -mu[:, 1], -mu[:, 2]])
    return np.column_stack([lam, -mu])


def _local_nodes(kind, tri1, tri2):
    if kind == "identical":
        return tri1
    if kind == "edge":
        return np.column_stack([tri1, tri2[:, 2]])
    if kind == "vertex":
        return np.column_stack([tri1, tri2[:, 1:]])
    return np.column_stack([tri1, tri2])


@dataclass(frozen=True, eq=False)
class _PairTask:
    kind: str
    tri1: np.ndarray
    tri2: np.ndarray
    jac: np.ndarray
    rule: object
    diffs: np.ndarray


def _map_points(vertices, tri, ref):
    a = vertices[tri[:, 0]]
    return (a[:, None, :]
            + ref[None, :, 0:1] * (vertices[tri[:, 1]] - a)[:, None, :]
            + ref[None, :, 1:2] * (vertices[tri[:, 2]] - a)[:, None, :])


def _run_tasks(tasks, n_nodes, evaluate, max_workers, deterministic):
    """Évalue des paquets de paires sur des tampons denses fusionnés par réduction en arbre"""
    if not tasks:
        return np.zeros((n_nodes, n_nodes))
    n_blocks = DETERMINISTIC_BLOCKS if deterministic else max(1, max_workers)
    blocks = [tasks[k::n_blocks] for k in range(n_blocks) if tasks[k::n_blocks]]

    def work(block):
        acc = np.zeros((n_nodes, n_nodes))
        for task in block:
            nodes, local = evaluate(task)
            np.add.at(acc, (nodes[:, :, None], nodes[:, None, :]), local)
        return acc

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        if deterministic:
            partial = [f.result() for f in [pool.submit(work, b) for b in blocks]]
        else:
            partial = [f.result() for f in as_completed([pool.submit(work, b) for b in blocks])]

    while len(partial) > 1:
        merged = [partial[k] + partial[k + 1] for k in range(0, len(partial) - 1, 2)]
        if len(partial) % 2:
            merged.append(partial[-1])
        partial = merged
    return partial[0]


def _finalize(matrix):
    """Symétrise et impose une somme nulle par ligne (noyau = constantes)"""
    matrix = 0.5 * (matrix + matrix.T)
    np.fill_diagonal(matrix, 0.0)
    np.fill_diagonal(matrix, -matrix.sum(axis=1))
    return matrix


def _interior_raw(mesh, s, quadrature, kernel_eval, max_workers, deterministic):
    """∬ κ(x,y)(φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y))|x-y|^{-2-2s} sans préfacteur"""
    classes = classify_pairs(mesh, quadrature.near_factor)
    singular = quadrature.singular_order
    schedule = [
        ("identical", classes.identical, sauter_schwab_rule(singular, "identical", s), 1.0),
        ("edge", classes.edge, sauter_schwab_rule(singular, "edge", s), 2.0),
        ("vertex", classes.vertex, sauter_schwab_rule(singular, "vertex", s), 2.0),
        ("disjoint", classes.near, pair_tensor_rule(quadrature.near_order), 2.0),
        ("disjoint", classes.far, pair_tensor_rule(quadrature.far_order), 2.0),
        ("disjoint", classes.remote, pair_tensor_rule(max(1, quadrature.far_order - 1)), 2.0),
    ]
    chunk = QuadratureConfig.PAIR_CHUNK
    tasks = []
    for kind, (tri1, tri2, jac), rule, factor in schedule:
        if len(tri1) == 0:
            continue
        diffs = _difference_vectors(kind, rule)
        # paquets bornés en nombre de points de quadrature
        size = max(1, chunk * 625 // len(rule))
        for start in range(0, len(tri1), size):
            block = slice(start, start + size)
            tasks.append(_PairTask(kind, tri1[block], tri2[block], factor * jac[block], rule, diffs))

    vertices = mesh.vertices
    exponent = 2.0 + 2.0 * s

    def evaluate(task):
        x = _map_points(vertices, task.tri1, task.rule.test)
        y = _map_points(vertices, task.tri2, task.rule.trial)
        r = np.linalg.norm(x - y, axis=2)
        F = task.rule.weights[None, :] * task.jac[:, None] / r ** exponent
        if kernel_eval is not None:
            F = F * kernel_eval(x, y)
        local = np.einsum("pq,qa,qb->pab", F, task.diffs, task.diffs)
        return _local_nodes(task.kind, task.tri1, task.tri2), local

    return _finalize(_run_tasks(tasks, mesh.n_vertices, evaluate, max_workers, deterministic))


@lru_cache(maxsize=8)
def _unit_interior(mesh, s, quadrature, deterministic):
    return _interior_raw(mesh, s, quadrature, None, RuntimeConfig.MAX_WORKERS, deterministic)


def assemble_interior(mesh: Mesh, kernel, t, s, quadrature: Optional[QuadratureOptions] = None,
                      CNs=None, max_workers=None, deterministic=RuntimeConfig.DETERMINISTIC):
    """S_int(t): (C_{N,s}/2) ∬ K(t,x,y)(φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y))/|x-y|^{N+2s}"""
    quadrature = quadrature or QuadratureOptions()
    prefactor = 0.5 * (compute_CNs(2, s) if CNs is None else CNs)
    if kernel is None or kernel.spatially_constant:
        value = 1.0 if kernel is None else constant_kernel_value(kernel, t)
        return prefactor * value * _unit_interior(mesh, s, quadrature, deterministic)
    kernel_eval = lambda x, y: kernel(t, x, y)
    return prefactor * _interior_raw(mesh, s, quadrature, kernel_eval,
                                     max_workers or RuntimeConfig.MAX_WORKERS, deterministic)


def constant_kernel_value(kernel, t):
    if kernel.time_factor is not None and kernel.spatial is None:
        return float(kernel.time_factor(t))
    return float(np.ravel(kernel(t, np.array([0.25, 0.25]), np.array([0.75, 0.75])))[0])


# ===== OPÉRATEUR DE BORD Θ =====

def _segment_pairs(segments):
    """Paires de segments: identiques, à nœud commun (réorientés depuis ce nœud), disjointes"""
    k = len(segments)
    vertex_pairs, disjoint = [], []
    for a in range(k):
        for b in range(a + 1, k):
            common = set(segments[a]) & set(segments[b])
            if len(common) == 1:
                node = common.pop()
                sa = [node, segments[a][0] if segments[a][1] == node else segments[a][1]]
                sb = [node, segments[b][0] if segments[b][1] == node else segments[b][1]]
                vertex_pairs.append((sa, sb))
            elif not common:
                disjoint.append((list(segments[a]), list(segments[b])))
    return vertex_pairs, disjoint


def _theta_raw(boundary, alpha, order, kernel_eval):
    verts = boundary.vertices
    segments = [tuple(int(v) for v in seg) for seg in boundary.segments]
    n = len(verts)
    exponent = boundary.d + 2.0 * alpha
    matrix = np.zeros((n, n))

    def points(seg, u):
        p0, p1 = verts[seg[:, 0]], verts[seg[:, 1]]
        return p0[:, None, :] + u[None, :, None] * (p1 - p0)[:, None, :], np.linalg.norm(p1 - p0, axis=1)

    def accumulate(seg1, seg2, u, v, w, diffs, nodes, factor):
        x, l1 = points(seg1, u)
        y, l2 = points(seg2, v)
        r = np.linalg.norm(x - y, axis=2)
        F = w[None, :] * (l1 * l2 * factor)[:, None] / r ** exponent
        if kernel_eval is not None:
            F = F * kernel_eval(x, y)
        local = np.einsum("pq,qa,qb->pab", F, diffs, diffs)
        np.add.at(matrix, (nodes[:, :, None], nodes[:, None, :]), local)

    seg = np.array(segments, dtype=np.int64)
    u, v, w = segment_identical_rule(order, alpha)
    accumulate(seg, seg, u, v, w, np.column_stack([v - u, u - v]), seg, 1.0)

    vertex_pairs, disjoint = _segment_pairs(segments)
    if vertex_pairs:
        s1 = np.array([p[0] for p in vertex_pairs], dtype=np.int64)
        s2 = np.array([p[1] for p in vertex_pairs], dtype=np.int64)
        u, v, w = segment_vertex_rule(order, alpha)
        diffs = np.column_stack([v - u, u, -v])
        accumulate(s1, s2, u, v, w, diffs, np.column_stack([s1, s2[:, 1]]), 2.0)
    if disjoint:
        s1 = np.array([p[0] for p in disjoint], dtype=np.int64)
        s2 = np.array([p[1] for p in disjoint], dtype=np.int64)
        u, v, w = segment_tensor_rule(order)
        diffs = np.column_stack([1.0 - u, u, v - 1.0, -v])
        accumulate(s1, s2, u, v, w, diffs, np.column_stack([s1, s2]), 2.0)
    return _finalize(matrix)


@lru_cache(maxsize=8)
def _unit_theta(boundary, alpha, order):
    return _theta_raw(boundary, alpha, order, None)


def assemble_theta(boundary: BoundaryMesh, kernel, t, alpha, order=QuadratureConfig.BOUNDARY_ORDER):
    """⟨Θ u, v⟩ = ∬ ζ(t,x,y)(u(x)-u(y))(v(x)-v(y))/|x-y|^{d+2α} dμ dμ"""
    if not 0 < alpha < 1:
        raise InvalidInputError(f"α = {alpha} hors de (0, 1)")
    if kernel is None or kernel.spatially_constant:
        value = 1.0 if kernel is None else constant_kernel_value(kernel, t)
        return value * _unit_theta(boundary, alpha, order)
    return _theta_raw(boundary, alpha, order, lambda x, y: kernel(t, x, y))


# ===== MASSES CONDENSÉES =====

def assemble_boundary_mass(boundary: BoundaryMesh, potential, t):
    """Diagonale b(t, P_i)·μ_i sur les nœuds de bord"""
    values = np.asarray(potential(t, boundary.vertices[boundary.nodes]), dtype=float)
    if np.any(values <= 0):
        worst = int(np.argmin(values))
        raise HypothesisViolation(
            "inf b > b_0",
            f"b({t:g}, P) = {values[worst]:.6g} ≤ 0 au nœud {int(boundary.nodes[worst])}"
        )
    diagonal = np.zeros(len(boundary.vertices))
    diagonal[boundary.nodes] = values * boundary.weights
    return np.diag(diagonal)


def assemble_mass_m(mesh: Mesh, boundary: BoundaryMesh):
    """Masse condensée de L²(Ω, m): Lebesgue partout plus μ sur le bord"""
    return np.diag(build_measure(mesh, boundary).total)


# ===== INSTANTANÉS =====

@dataclass(frozen=True, eq=False)
class FormSnapshot:
    t: float
    S_int: np.ndarray
    S_bdy: np.ndarray
    M_b: np.ndarray
    M_m: np.ndarray

    @cached_property
    def E(self):
        return self.S_int + self.M_b + self.S_bdy

    @property
    def m_weights(self):
        return np.diag(self.M_m).copy()


@dataclass
class NashReport:
    C_emp: float
    samples: int
    worst_sample: np.ndarray
    constant_ratio: float
    ratios: np.ndarray = field(repr=False, default=None)


@dataclass
class HoelderReport:
    constant: float
    worst_pair: tuple
    pairs: int
    bound: Optional[float] = None
    passed: bool = True


class FormAssembler:
    """Assemble et met en cache les instantanés E_h(t) d'un jeu de coefficients"""

    def __init__(self, mesh: Mesh, boundary: BoundaryMesh, coefficients: CoefficientSet,
                 quadrature: Optional[QuadratureOptions] = None,
                 max_workers=None, deterministic=RuntimeConfig.DETERMINISTIC):
        self.mesh = mesh
        self.boundary = boundary
        self.coefficients = coefficients
        self.quadrature = quadrature or QuadratureOptions()
        self.max_workers = max_workers or RuntimeConfig.MAX_WORKERS
        self.deterministic = deterministic
        self.measure = build_measure(mesh, boundary)
        self.M_m = np.diag(self.measure.total)
        self._snapshots = {}
        self._separable = {}

    @property
    def pack(self):
        return self.coefficients.pack

    def _separable_base(self, name, kernel, assemble):
        if name not in self._separable:
            print_status(f"Assemblage de la partie spatiale de {kernel.name}", 'process')
            self._separable[name] = assemble(lambda x, y: kernel.spatial(x, y))
        return self._separable[name]

    def interior(self, t):
        kernel, pack = self.coefficients.interior, self.pack
        if kernel.spatial is not None and not kernel.spatially_constant:
            base = self._separable_base("interior", kernel, lambda ev: 0.5 * self.coefficients.CNs
                                        * _interior_raw(self.mesh, pack.s, self.quadrature, ev,
                                                        self.max_workers, self.deterministic))
            return kernel.time_factor(t) * base
        return assemble_interior(self.mesh, kernel, t, pack.s, self.quadrature, self.coefficients.CNs,
                                 self.max_workers, self.deterministic)

    def theta(self, t):
        kernel, pack = self.coefficients.boundary, self.pack
        order = self.quadrature.boundary_order
        if kernel.spatial is not None and not kernel.spatially_constant:
            base = self._separable_base("boundary", kernel,
                                        lambda ev: _theta_raw(self.boundary, pack.alpha, order, ev))
            return kernel.time_factor(t) * base
        return assemble_theta(self.boundary, kernel, t, pack.alpha, order)

    def snapshot(self, t) -> FormSnapshot:
        key = float(t)
        if key in self._snapshots:
            return self._snapshots[key]
        if not self.coefficients.time_dependent and self._snapshots:
            cached = next(iter(self._snapshots.values()))
            snapshot = FormSnapshot(key, cached.S_int, cached.S_bdy, cached.M_b, self.M_m)
            snapshot.__dict__["E"] = cached.E
        else:
            snapshot = FormSnapshot(
                key,
                self.interior(key),
                self.theta(key),
                assemble_boundary_mass(self.boundary, self.coefficients.potential, key),
                self.M_m
            )
        self._snapshots[key] = snapshot
        return snapshot

    @cached_property
    def unit_interior(self):
        """S_int pour K ≡ 1 (préfacteur C_{N,s}/2 inclus)"""
        return assemble_interior(self.mesh, None, 0.0, self.pack.s, self.quadrature,
                                 self.coefficients.CNs, self.max_workers, self.deterministic)

    @cached_property
    def hs_gram(self):
        """H_h = (2/C_{N,s})·S_int(K ≡ 1) + masse de Lebesgue condensée"""
        return 2.0 / self.coefficients.CNs * self.unit_interior + np.diag(self.measure.interior)

    @cached_property
    def seminorm_factor(self):
        """λ_max(S_int(K ≡ 1), H_h): équivalence semi-norme / norme H^s discrète"""
        return float(_pencil_eigenvalues(self.unit_interior, self.hs_gram)[-1])

    def export_coo(self, snapshot: FormSnapshot, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name in ("S_int", "S_bdy", "M_b", "M_m"):
            written.append(write_coo(getattr(snapshot, name), directory / f"{name}_t{snapshot.t:g}.coo"))
        return written


# ===== DIAGNOSTICS =====

def _pencil_eigenvalues(A, B):
    return linalg.eigh(0.5 * (A + A.T), 0.5 * (B + B.T), eigvals_only=True)


def coercivity_estimate(snapshot: FormSnapshot, hs_gram) -> float:
    """β_h = plus petite valeur propre du faisceau (E_h(t), H_h)"""
    beta = float(_pencil_eigenvalues(snapshot.E, hs_gram)[0])
    if not beta > 0:
        raise CoercivityFailure(f"β_h = {beta:.6g} ≤ 0 à t = {snapshot.t:g}", beta=beta, t=snapshot.t)
    return beta


def continuity_estimate(snapshot: FormSnapshot, hs_gram) -> float:
    """Plus grande valeur propre du faisceau (E_h(t), H_h)"""
    return float(_pencil_eigenvalues(snapshot.E, hs_gram)[-1])


def nash_ratio(u, hs_gram, m_weights, lam):
    """‖u‖_{L²(m)}^{2+4/λ} / (‖u‖²_{H^s} ‖u‖_{L¹(m)}^{4/λ})"""
    u = np.asarray(u, dtype=float)
    l2 = lp_norm(u, m_weights, 2)
    l1 = lp_norm(u, m_weights, 1)
    hs2 = np.einsum("i...,ij,j...->...", u, hs_gram, u)
    return l2 ** (2.0 + 4.0 / lam) / (hs2 * l1 ** (4.0 / lam))


def nash_check(snapshot: FormSnapshot, hs_gram, lam, samples=FitConfig.NASH_SAMPLES, seed=0) -> NashReport:
    """Échantillonne des u ≥ 0 et de signe quelconque et rapporte C̄_emp

    La constante entre dans le maximum: son rapport ne dépend pas du maillage.
    """
    rng = np.random.default_rng(seed)
    n = hs_gram.shape[0]
    half = samples // 2
    U = np.concatenate([rng.uniform(0.0, 1.0, (n, half)),
                        rng.standard_normal((n, samples - half))], axis=1)
    m = snapshot.m_weights
    ratios = nash_ratio(U, hs_gram, m, lam)
    constant_ratio = float(nash_ratio(np.ones(n), hs_gram, m, lam))
    worst = int(np.argmax(ratios))
    if constant_ratio >= ratios[worst]:
        C_emp, worst_sample = constant_ratio, np.ones(n)
    else:
        C_emp, worst_sample = float(ratios[worst]), U[:, worst].copy()
    return NashReport(
        C_emp=C_emp,
        samples=samples,
        worst_sample=worst_sample,
        constant_ratio=constant_ratio,
        ratios=ratios
    )


def hoelder_in_t_check(assembler: FormAssembler, times, bound=None) -> HoelderReport:
    """max |E_h(t)(u,v) - E_h(τ)(u,v)| / (|t-τ|^η ‖u‖_{H^s}‖v‖_{H^s}) sur les paires de la grille"""
    times = [float(t) for t in times]
    eta = assembler.pack.eta
    H = assembler.hs_gram
    if not assembler.coefficients.time_dependent:
        return HoelderReport(0.0, (times[0], times[-1]), 0, bound, True)

    snapshots = {t: assembler.snapshot(t).E for t in times}
    best, worst, pairs = 0.0, (times[0], times[0]), 0
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            t, tau = times[a], times[b]
            diff = snapshots[t] - snapshots[tau]
            if not np.any(diff):
                ratio = 0.0
            else:
                eig = _pencil_eigenvalues(diff, H)
                ratio = float(np.max(np.abs(eig))) / abs(t - tau) ** eta
            pairs += 1
            if ratio > best:
                best, worst = ratio, (t, tau)
    passed = bound is None or best <= bound * (1 + 1e-9)
    return HoelderReport(best, worst, pairs, bound, passed)


def hoelder_bound(assembler: FormAssembler) -> Optional[float]:
    """Borne a priori du rapport de Hölder quand seul K dépend du temps

    K(t) = f(t)·K_0 avec f höldérienne de constante c sur [0,T]: la différence
    E_h(t) - E_h(τ) est (f(t) - f(τ))·S_int(K_0), bornée par c·λ_max(S_int(1), H_h).
    """
    coefficients = assembler.coefficients
    interior = coefficients.interior
    if coefficients.boundary.time_dependent or coefficients.potential.time_dependent:
        return None
    if interior.hoelder_constant is None:
        return None
    if not interior.time_dependent:
        return 0.0
    if not interior.spatially_constant:
        return None
    return float(interior.hoelder_constant * assembler.seminorm_factor)


# ===== STABILITÉ SOUS RAFFINEMENT =====

@dataclass
class RefinementSweep:
    """Une grandeur mesurée sur des maillages de plus en plus fins"""
    name: str
    h: List[float]
    values: List[float]
    criterion: str
    limit: float
    passed: bool

    @property
    def spread(self):
        values = np.asarray(self.values, dtype=float)
        return float(values.max() / values.min()) if values.min() > 0 else math.inf

    @classmethod
    def stable(cls, name, h, values, limit):
        """max/min ≤ limit"""
        sweep = cls(name, list(h), [float(v) for v in values], "max/min", float(limit), False)
        sweep.passed = bool(sweep.spread <= limit)
        return sweep

    @classmethod
    def nonincreasing(cls, name, h, values, floor=0.0):
        """Chaque valeur ≤ la précédente; les valeurs sous floor comptent pour zéro"""
        clipped = [0.0 if v <= floor else float(v) for v in values]
        passed = all(b <= a for a, b in zip(clipped, clipped[1:]))
        return cls(name, list(h), clipped, "non croissante", float(floor), bool(passed))

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"quantity": self.name, "h": self.h, "value": self.values})


def coercivity_sweep(assemblers: Sequence[FormAssembler], t=0.0, limit=1.2) -> RefinementSweep:
    """β_h(t) sur chaque maillage; stable si max/min ≤ limit"""
    values = [coercivity_estimate(a.snapshot(t), a.hs_gram) for a in assemblers]
    return RefinementSweep.stable("beta_h", [a.mesh.h for a in assemblers], values, limit)


def nash_sweep(assemblers: Sequence[FormAssembler], lam, samples=FitConfig.NASH_SAMPLES, seed=0,
               limit=2.0) -> RefinementSweep:
    """C̄_emp sur chaque maillage; stable si max/min ≤ limit"""
    values = [nash_check(a.snapshot(0.0), a.hs_gram, lam, samples, seed).C_emp for a in assemblers]
    return RefinementSweep.stable("nash_C_emp", [a.mesh.h for a in assemblers], values, limit)
