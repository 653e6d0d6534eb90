# -*- coding: utf-8 -*-
"""
Opérateur régional B^{s,t}_Ω en valeur principale, dérivée conormale fractionnaire
discrète, formule de Green généralisée et résidus de la forme forte

L'évaluation ponctuelle intègre le long de rayons opposés (θ, θ+π) issus de x.
La partie linéaire locale de u est retirée analytiquement: les termes divergents
en ε se compensent exactement entre les deux rayons d'une paire.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy import linalg

from config.settings import FitConfig, QuadratureConfig, RuntimeConfig
from core.assembly import (
    FormAssembler, QuadratureOptions, assemble_interior, assemble_theta, constant_kernel_value
)
from core.errors import (
    GeometryError, InvalidInputError, OffGridTimeError, PrincipalValueFailure
)
from core.geometry import BoundaryMesh, Mesh, PrefractalFamily, extract_boundary
from core.quadrature import gauss_jacobi_01, gauss_legendre_01, graded_triangle_rule
from utils.common import print_status

RAY_TOL = 1e-12


# ===== RÈGLE VOLUMIQUE =====

@dataclass(frozen=True, eq=False)
class VolumeRule:
    """Points, poids, triangle porteur et coordonnées barycentriques dans ce triangle"""
    points: np.ndarray
    weights: np.ndarray
    triangles: np.ndarray
    bary: np.ndarray


@lru_cache(maxsize=16)
def volume_rule(mesh: Mesh, order=QuadratureConfig.GREEN_ORDER, subset=None) -> VolumeRule:
    """Triangles coupés au barycentre, chaque sous-triangle raffiné vers son arête extérieure"""
    ref, w = graded_triangle_rule(order)
    xi, eta = ref[:, 0], ref[:, 1]
    idx = np.arange(mesh.n_triangles) if subset is None else np.asarray(subset, dtype=np.int64)
    corners = mesh.vertices[mesh.triangles[idx]]
    eye = np.eye(3)
    points, weights, owners, bary = [], [], [], []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        lam = (1.0 - xi - eta)[:, None] * eye[a] + xi[:, None] * eye[b] + eta[:, None] / 3.0
        points.append(np.einsum("qk,tkd->tqd", lam, corners).reshape(-1, 2))
        weights.append(np.outer(mesh.areas[idx] * 2.0 / 3.0, w).ravel())
        owners.append(np.repeat(idx, len(w)))
        bary.append(np.tile(lam, (len(idx), 1)))
    return VolumeRule(np.concatenate(points), np.concatenate(weights),
                      np.concatenate(owners), np.concatenate(bary))


# ===== GÉOMÉTRIE DES RAYONS =====

def _ray_hits(x, omega, start, direction):
    """Intersections x + rω = a + λd pour chaque rayon et chaque segment"""
    e = start - x
    den = np.outer(omega[:, 0], direction[:, 1]) - np.outer(omega[:, 1], direction[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (e[:, 0] * direction[:, 1] - e[:, 1] * direction[:, 0])[None, :] / den
        lam = (e[None, :, 0] * omega[:, None, 1] - e[None, :, 1] * omega[:, None, 0]) / den
    return r, lam, den


def _segment_distance(x, start, direction):
    length2 = np.einsum("ij,ij->i", direction, direction)
    lam = np.clip(np.einsum("ij,ij->i", x - start, direction) / length2, 0.0, 1.0)
    return np.linalg.norm(start + lam[:, None] * direction - x, axis=1)


def _antiderivative(r, e):
    """Primitive de r^{e-1}"""
    return np.log(r) if abs(e) < 1e-12 else r ** e / e


@dataclass(frozen=True, eq=False)
class _Field:
    nodal: Optional[np.ndarray]
    func: Optional[Callable]
    gradients: Optional[np.ndarray] = None
    constant: bool = False
    scale: float = 1.0


# ===== OPÉRATEUR RÉGIONAL =====

class RegionalLaplacian:
    """B^{s,t}_Ω u(x) = C_{N,s} v.p. ∫_Ω K(t,x,y)(u(x)-u(y))|x-y|^{-N-2s} dy

    Domaine convexe (une sortie par rayon). u est un champ nodal P1 ou une fonction
    vectorisée des points.
    """

    def __init__(self, mesh: Mesh, boundary: BoundaryMesh, kernel, s, CNs,
                 angular_order=QuadratureConfig.ANGULAR_ORDER, radial_order=QuadratureConfig.RADIAL_ORDER,
                 green_order=QuadratureConfig.GREEN_ORDER, max_workers=None):
        self.mesh = mesh
        self.boundary = boundary
        self.kernel = kernel
        self.s = float(s)
        self.CNs = float(CNs)
        self.angular_order = angular_order
        self.radial_order = radial_order
        self.green_order = green_order
        self.max_workers = max_workers or RuntimeConfig.MAX_WORKERS

        segments = np.asarray(boundary.segments)
        self._seg_a = boundary.vertices[segments[:, 0]]
        self._seg_d = boundary.vertices[segments[:, 1]] - self._seg_a
        edges, _ = mesh.edges()
        self._edges = edges
        self._edge_a = mesh.vertices[edges[:, 0]]
        self._edge_d = mesh.vertices[edges[:, 1]] - self._edge_a
        self._boundary_points = boundary.vertices[boundary.nodes]
        self._diameter = float(np.ptp(mesh.vertices, axis=0).max())

    @classmethod
    def from_assembler(cls, assembler: FormAssembler, angular_order=QuadratureConfig.ANGULAR_ORDER):
        coefficients = assembler.coefficients
        return cls(assembler.mesh, assembler.boundary, coefficients.interior, coefficients.pack.s,
                   coefficients.CNs, angular_order=angular_order, max_workers=assembler.max_workers)

    def as_field(self, u) -> _Field:
        if isinstance(u, _Field):
            return u
        if callable(u):
            return _Field(None, u)
        values = np.asarray(u, dtype=float)
        if values.shape != (self.mesh.n_vertices,):
            raise InvalidInputError(f"Champ nodal de taille {values.shape} ≠ ({self.mesh.n_vertices},)")
        gradients = self.mesh.gradients(values)
        scale = max(1.0, float(np.max(np.abs(values))),
                    float(np.max(np.linalg.norm(gradients, axis=1))) * self._diameter)
        return _Field(values, None, gradients, bool(np.ptp(values) == 0.0), scale)

    def boundary_distance(self, x):
        return float(np.min(_segment_distance(np.asarray(x, float), self._seg_a, self._seg_d)))

    def _constant(self, t):
        kernel = self.kernel
        if kernel is None:
            return 1.0
        return constant_kernel_value(kernel, t) if kernel.spatially_constant else None

    def _local_state(self, field, x, hint=None):
        """(u(x), gradient local, distance au premier pli)"""
        if field.func is not None:
            step = 1e-6
            stencil = np.vstack([x, x + [step, 0.0], x - [step, 0.0], x + [0.0, step], x - [0.0, step]])
            values = np.asarray(field.func(stencil), dtype=float)
            g = np.array([values[1] - values[2], values[3] - values[4]]) / (2.0 * step)
            return float(values[0]), g, self.boundary_distance(x)

        tri = int(self.mesh.locate(x[None])[0]) if hint is None else int(hint)
        if tri < 0:
            raise InvalidInputError(f"Point {x.tolist()} hors du maillage")
        corners = self.mesh.vertices[self.mesh.triangles[tri]]
        bary = self.mesh.barycentric(x[None], np.array([tri]))[0]
        u_x = float(bary @ field.nodal[self.mesh.triangles[tri]])
        kink = float(np.min(_segment_distance(x, corners, np.roll(corners, -1, axis=0) - corners)))
        return u_x, field.gradients[tri], kink

    def _angles(self, x, field):
        """Secteurs de [0, π) délimités par les directions des sommets (modulo π)"""
        targets = self.mesh.vertices if field.nodal is not None else self._boundary_points
        rel = targets - x
        rel = rel[np.linalg.norm(rel, axis=1) > RAY_TOL]
        cuts = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), np.pi)
        cuts = np.unique(np.concatenate([[0.0, np.pi], cuts]))
        lo, hi = cuts[:-1], cuts[1:]
        keep = hi - lo > 1e-12
        lo, hi = lo[keep], hi[keep]
        nodes, weights = gauss_legendre_01(self.angular_order)
        theta = (lo[:, None] + (hi - lo)[:, None] * nodes[None, :]).ravel()
        return theta, ((hi - lo)[:, None] * weights[None, :]).ravel()

    def _exit(self, x, rays):
        r, lam, den = _ray_hits(x, rays, self._seg_a, self._seg_d)
        valid = (np.abs(den) > RAY_TOL) & (lam >= -1e-10) & (lam <= 1 + 1e-10) & (r > RAY_TOL)
        R = np.where(valid, r, np.inf).min(axis=1)
        if not np.all(np.isfinite(R)):
            raise GeometryError(f"Rayon sans sortie depuis {x.tolist()}")
        return R

    # --- intégrales radiales régularisées ∫ K (u(x) - u(x+rω) + r ∇u·ω) r^{-1-2s} dr ---

    def _pieces(self, x, rays, lo, hi, A, B, active, t, constant, tiny):
        s = self.s
        at_zero = active & (lo <= 0.0)
        divergent = np.any(at_zero & ((np.abs(A) > tiny) | (np.abs(B) > tiny)), axis=1)
        regular = active & ~at_zero
        lo = np.where(regular, lo, 1.0)
        hi = np.where(regular, hi, 1.0)

        if constant is not None:
            terms = (A * (_antiderivative(hi, -2 * s) - _antiderivative(lo, -2 * s))
                     + B * (_antiderivative(hi, 1 - 2 * s) - _antiderivative(lo, 1 - 2 * s)))
            total = constant * np.where(regular, terms, 0.0).sum(axis=1)
        else:
            nodes, weights = gauss_legendre_01(self.radial_order)
            span = np.log(hi / lo)
            r = lo[..., None] * np.exp(span[..., None] * nodes)
            y = x + r[..., None] * rays[:, None, None, :]
            K = self.kernel(t, np.broadcast_to(x, y.shape), y)
            values = K * (A[..., None] + B[..., None] * r) * r ** (-2 * s) * weights * span[..., None]
            total = np.where(regular, values.sum(axis=-1), 0.0).sum(axis=1)
        return np.where(divergent, np.inf, total)

    def _nodal_radial(self, field, x, u_x, g, rays, R, eps, t, constant):
        r, lam, den = _ray_hits(x, rays, self._edge_a, self._edge_d)
        valid = ((np.abs(den) > RAY_TOL) & (lam >= -1e-10) & (lam <= 1 + 1e-10)
                 & (r > RAY_TOL) & (r <= R[:, None] * (1 + 1e-10)))
        u0, u1 = field.nodal[self._edges[:, 0]], field.nodal[self._edges[:, 1]]
        values = u0[None, :] + np.clip(np.nan_to_num(lam), 0.0, 1.0) * (u1 - u0)[None, :]
        r = np.where(valid, r, np.inf)
        order = np.argsort(r, axis=1)
        r = np.take_along_axis(r, order, axis=1)
        values = np.take_along_axis(values, order, axis=1)

        n_rays = len(rays)
        r = np.hstack([np.zeros((n_rays, 1)), r])
        values = np.hstack([np.full((n_rays, 1), u_x), values])
        a, b = r[:, :-1], r[:, 1:]
        ua, ub = values[:, :-1], values[:, 1:]
        with np.errstate(invalid="ignore"):
            active = np.isfinite(b) & (b - a > RAY_TOL)
        span = np.where(active, b - a, 1.0)
        slope = np.where(active, (ub - ua) / span, 0.0)
        a = np.where(active, a, 0.0)
        b = np.where(active, b, 0.0)
        A = np.where(active, u_x - ua + slope * a, 0.0)
        B = np.where(active, (rays @ g)[:, None] - slope, 0.0)

        lo = np.maximum(a, eps)
        active &= b > lo
        hi = np.where(active, b, lo)
        return self._pieces(x, rays, lo, hi, A, B, active, t, constant, 1e-9 * field.scale)

    def _smooth_radial(self, field, x, u_x, g, rays, R, eps, t, constant):
        s = self.s
        order = 2 * self.radial_order
        if eps == 0:
            beta = 1.0 - 2.0 * s
            xi, w = gauss_jacobi_01(order, beta)
            r = R[:, None] * xi[None, :]
            jac = R[:, None] * (w / xi ** beta)[None, :]
        else:
            lo = np.minimum(eps, R)
            span = np.log(R / lo)
            xi, w = gauss_legendre_01(order)
            r = lo[:, None] * np.exp(span[:, None] * xi[None, :])
            jac = w[None, :] * r * span[:, None]
        y = x + r[..., None] * rays[:, None, :]
        u_y = np.asarray(field.func(y.reshape(-1, 2)), dtype=float).reshape(r.shape)
        h = u_x - u_y + r * (rays @ g)[:, None]
        K = constant if constant is not None else self.kernel(t, np.broadcast_to(x, y.shape), y)
        return np.sum(K * h * r ** (-1.0 - 2.0 * s) * jac, axis=1)

    def _odd_term(self, x, g, omega, R_plus, R_minus, eps, t, constant):
        """-∇u·ω [∫_ε^{R+} K(x,x+rω) r^{-2s} dr - ∫_ε^{R-} K(x,x-rω) r^{-2s} dr]"""
        s = self.s
        e = 1.0 - 2.0 * s
        gw = omega @ g
        if constant is not None:
            return -constant * gw * (_antiderivative(R_plus, e) - _antiderivative(R_minus, e))

        order = 2 * self.radial_order
        rho = np.minimum(R_plus, R_minus)

        def kernel_along(r, sign):
            y = x + sign * r[..., None] * omega[:, None, :]
            return self.kernel(t, np.broadcast_to(x, y.shape), y)

        if eps == 0:
            xi, w = gauss_jacobi_01(order, e)
            r = rho[:, None] * xi[None, :]
            jac = rho[:, None] * (w / xi ** e)[None, :]
        else:
            lo = np.minimum(eps, rho)
            span = np.log(rho / lo)
            xi, w = gauss_legendre_01(order)
            r = lo[:, None] * np.exp(span[:, None] * xi[None, :])
            jac = w[None, :] * r * span[:, None]
        paired = np.sum((kernel_along(r, 1.0) - kernel_along(r, -1.0)) * r ** (-2 * s) * jac, axis=1)

        def tail(R, sign):
            lo = np.maximum(rho, eps)
            hi = np.maximum(R, lo)
            span = np.log(hi / lo)
            xi, w = gauss_legendre_01(order)
            r = lo[:, None] * np.exp(span[:, None] * xi[None, :])
            return np.sum(kernel_along(r, sign) * r ** (1.0 - 2 * s) * w[None, :] * span[:, None], axis=1)

        return -gw * (paired + tail(R_plus, 1.0) - tail(R_minus, -1.0))

    def _point_value(self, field, x, t, eps, hint=None):
        u_x, g, _ = self._local_state(field, x, hint)
        theta, weights = self._angles(x, field)
        omega = np.column_stack([np.cos(theta), np.sin(theta)])
        rays = np.vstack([omega, -omega])
        R = self._exit(x, rays)
        constant = self._constant(t)
        radial = (self._nodal_radial if field.nodal is not None else self._smooth_radial)(
            field, x, u_x, g, rays, R, eps, t, constant
        )
        k = len(theta)
        odd = self._odd_term(x, g, omega, R[:k], R[k:], eps, t, constant)
        return self.CNs * float(np.sum(weights * (radial[:k] + radial[k:] + odd)))

    def truncated(self, u, t, x, eps):
        """Intégrale tronquée sur {|x-y| > ε}"""
        field = self.as_field(u)
        if field.constant:
            return 0.0
        return self._point_value(field, np.asarray(x, dtype=float), t, float(eps))

    def evaluate(self, u, t, points, hints=None):
        """Limite ε → 0 aux points donnés (évaluations indépendantes en parallèle)"""
        field = self.as_field(u)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if field.constant:
            return np.zeros(len(points))
        hints = [None] * len(points) if hints is None else list(hints)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            values = np.fromiter(
                pool.map(lambda k: self._point_value(field, points[k], t, 0.0, hints[k]), range(len(points))),
                dtype=float, count=len(points)
            )
        bad = ~np.isfinite(values)
        if np.any(bad):
            raise PrincipalValueFailure(
                f"Valeur principale divergente en {int(bad.sum())} point(s) (point sur un pli de u)",
                values[bad][:10]
            )
        return values

    def kink_distance(self, u, x):
        field = self.as_field(u)
        x = np.asarray(x, dtype=float)
        return min(self._local_state(field, x)[2], self.boundary_distance(x))

    def volume_vector(self, u, t, rule: Optional[VolumeRule] = None):
        """b_j = ∫_Ω (B u) φ_j"""
        rule = rule or volume_rule(self.mesh, self.green_order)
        values = self.evaluate(u, t, rule.points, rule.triangles)
        vector = np.zeros(self.mesh.n_vertices)
        np.add.at(vector, self.mesh.triangles[rule.triangles], (rule.weights * values)[:, None] * rule.bary)
        return vector

    def volume_integral(self, u, v_values, t, rule: Optional[VolumeRule] = None):
        """∫_Ω (B u) v par quadrature directe (v nodal)"""
        rule = rule or volume_rule(self.mesh, self.green_order)
        values = self.evaluate(u, t, rule.points, rule.triangles)
        v_at = np.einsum("pk,pk->p", rule.bary, np.asarray(v_values, float)[self.mesh.triangles[rule.triangles]])
        return float(np.sum(rule.weights * values * v_at))


def regional_laplacian_apply(laplacian: RegionalLaplacian, u, t, x, eps_sequence=None,
                             rtol=FitConfig.PRINCIPAL_VALUE_RTOL, cutoff=None):
    """Intégrales tronquées sur une suite ε_k décroissante puis extrapolation de Richardson

    Les rayons appariés ne laissent que les puissances paires du développement:
    I(ε) = I(0) + c_1 ε^{2-2s} + c_2 ε^{4-2s} + ..., éliminées colonne par colonne.
    """
    x = np.asarray(x, dtype=float)
    cutoff = laplacian.mesh.h if cutoff is None else cutoff
    distance = laplacian.boundary_distance(x)
    if not distance > cutoff:
        raise InvalidInputError(f"x à distance {distance:.3g} ≤ {cutoff:.3g} du bord")

    field = laplacian.as_field(u)
    if eps_sequence is None:
        reach = laplacian.kink_distance(field, x)
        if reach <= RAY_TOL:
            reach = distance
        eps_sequence = 0.5 * reach * 2.0 ** -np.arange(6)
    eps = np.asarray(eps_sequence, dtype=float)
    if len(eps) < 3 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise InvalidInputError("Suite ε strictement décroissante d'au moins trois termes requise")

    values = np.array([laplacian.truncated(field, t, x, e) for e in eps])
    column = values
    for j in range(len(eps) - 2):
        gamma = 2.0 + 2.0 * j - 2.0 * laplacian.s
        q = (eps[1:len(column)] / eps[:len(column) - 1]) ** gamma
        column = (column[1:] - q * column[:-1]) / (1.0 - q)
    gap = abs(column[-1] - column[-2])
    if not np.all(np.isfinite(column)) or gap > rtol * max(1.0, abs(column[-1])):
        raise PrincipalValueFailure(f"Suite ε non convergente (écart {gap:.3g})", values)
    return float(column[-1])


# ===== DÉRIVÉE CONORMALE ET FORMULE DE GREEN =====

@dataclass
class ConormalFunctional:
    """⟨C_s N u, v⟩ = g·v sur les traces des fonctions chapeaux de bord"""
    t: float
    values: np.ndarray
    boundary_nodes: np.ndarray
    interior_defect: float

    def pairing(self, v):
        return float(self.values @ np.asarray(v, dtype=float))

    @property
    def on_boundary(self):
        return self.values[self.boundary_nodes]


def conormal(laplacian: RegionalLaplacian, assembler: FormAssembler, u, t) -> ConormalFunctional:
    """g_j = (S_int(t) u)_j - ∫_Ω (B u) φ_j, restreint aux nœuds de bord"""
    field = laplacian.as_field(u)
    nodes = assembler.boundary.nodes
    n = assembler.mesh.n_vertices
    if field.constant:
        return ConormalFunctional(float(t), np.zeros(n), nodes, 0.0)
    full = assembler.interior(t) @ field.nodal - laplacian.volume_vector(field, t)
    interior = np.setdiff1d(np.arange(n), nodes)
    values = np.zeros(n)
    values[nodes] = full[nodes]
    defect = float(np.max(np.abs(full[interior]))) if interior.size else 0.0
    return ConormalFunctional(float(t), values, nodes, defect)


@dataclass
class GreenIdentityReport:
    seminorm_term: float
    volume_term: float
    volume_independent: float
    boundary_pairing: float
    relative_gap: float
    passed: bool


def green_identity_check(laplacian: RegionalLaplacian, assembler: FormAssembler, u, v, t,
                         rtol=1e-2) -> GreenIdentityReport:
    """(C_{N,s}/2)(u,v)_{s,K} et ∫ B u v: via le vecteur conormal et par une quadrature plus fine"""
    field = laplacian.as_field(u)
    v = np.asarray(v, dtype=float)
    seminorm = float(v @ assembler.interior(t) @ field.nodal)
    if field.constant:
        return GreenIdentityReport(seminorm, 0.0, 0.0, seminorm, 0.0, True)
    volume = float(v @ laplacian.volume_vector(field, t))
    fine = volume_rule(laplacian.mesh, laplacian.green_order + 2)
    independent = laplacian.volume_integral(field, v, t, fine)
    gap = abs(volume - independent) / max(abs(independent), abs(seminorm), 1e-14)
    return GreenIdentityReport(seminorm, volume, independent, seminorm - volume, gap, gap <= rtol)


# ===== APPROXIMATION LIPSCHITZIENNE =====

@dataclass
class ConvergenceTable:
    table: pd.DataFrame
    l_full: float
    monotone: bool
    reduction: float
    passed: bool


def _pairing_on(mesh, coefficients, quadrature, u, v, t, angular_order):
    boundary = extract_boundary(mesh)
    pack = coefficients.pack
    S = assemble_interior(mesh, coefficients.interior, t, pack.s, quadrature, coefficients.CNs)
    u_nodes = np.asarray(u(mesh.vertices), dtype=float)
    v_nodes = np.asarray(v(mesh.vertices), dtype=float)
    if np.ptp(u_nodes) == 0.0:
        return 0.0
    laplacian = RegionalLaplacian(mesh, boundary, coefficients.interior, pack.s, coefficients.CNs,
                                  angular_order=angular_order)
    return float(v_nodes @ S @ u_nodes) - laplacian.volume_integral(u, v_nodes, t)


def lipschitz_approx_convergence(u, v, family: PrefractalFamily, t, coefficients, full_mesh: Mesh,
                                 quadrature: Optional[QuadratureOptions] = None,
                                 angular_order=QuadratureConfig.ANGULAR_ORDER) -> ConvergenceTable:
    """l_n(u,v) = -∫_{Ω_n} B u v + (C_{N,s}/2)(u,v)_{s,K,Ω_n} le long de la famille emboîtée"""
    areas = family.areas
    if any(b <= a for a, b in zip(areas[:-1], areas[1:])):
        raise GeometryError("Aires préfractales non monotones")
    quadrature = quadrature or QuadratureOptions()
    l_full = _pairing_on(full_mesh, coefficients, quadrature, u, v, t, angular_order)
    rows = []
    for n, (mesh, delta) in enumerate(zip(family.meshes, family.deltas), start=1):
        print_status(f"Préfractale n = {n} (δ = {delta:g})", 'process')
        value = _pairing_on(mesh, coefficients, quadrature, u, v, t, angular_order)
        rows.append({"n": n, "delta": delta, "area": mesh.total_area, "l_n": value,
                     "gap": abs(value - l_full)})
    table = pd.DataFrame(rows)
    gaps = table["gap"].to_numpy()
    table["ratio"] = np.concatenate([[np.nan], gaps[1:] / np.where(gaps[:-1] > 0, gaps[:-1], np.nan)])
    tail = gaps[len(gaps) // 2:]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * max(1.0, abs(l_full))))
    reduction = float(gaps[-1] / gaps[0]) if gaps[0] > 0 else 0.0
    return ConvergenceTable(table, l_full, monotone, reduction, monotone and reduction < 0.1)


# ===== RÉSIDUS FORTS =====

@dataclass
class StrongResiduals:
    t: float
    points: np.ndarray
    interior: np.ndarray
    interior_norm: float
    boundary: np.ndarray
    boundary_norm: float
    warnings: List[str] = field(default_factory=list)


def boundary_gram(assembler: FormAssembler):
    """Θ(ζ ≡ 1) + diag(μ) restreint aux nœuds de bord"""
    boundary = assembler.boundary
    theta = assemble_theta(boundary, None, 0.0, assembler.pack.alpha, assembler.quadrature.boundary_order)
    nodes = boundary.nodes
    return theta[np.ix_(nodes, nodes)] + np.diag(boundary.weights)


def strong_residuals(solution, nonlinearity, t, assembler: FormAssembler, laplacian: RegionalLaplacian,
                     cutoff=None) -> StrongResiduals:
    """∂u/∂t + B u - J(u) à l'intérieur et ∂u/∂t + C_s N u + b u + Θ u - J(u) au bord (dual)"""
    times, states = np.asarray(solution.times), np.asarray(solution.states)
    if len(times) < 3:
        raise InvalidInputError("Au moins trois nœuds temporels requis pour ∂u/∂t")
    n = int(np.argmin(np.abs(times - t)))
    if abs(times[n] - t) > 1e-9 * max(1.0, abs(t)):
        raise OffGridTimeError(f"t = {t} hors de la grille de la solution")
    rates = np.gradient(states, times[1] - times[0], axis=0, edge_order=1)
    u, u_t = states[n], rates[n]
    mesh, boundary = assembler.mesh, assembler.boundary

    centroids = mesh.centroids
    distance = np.array([laplacian.boundary_distance(c) for c in centroids])
    if cutoff is None:
        # maillages grossiers: au moins les barycentres les plus centraux
        cutoff = min(2.0 * mesh.h, 0.5 * float(distance.max()))
    chosen = np.nonzero(distance >= cutoff)[0]
    if chosen.size == 0:
        raise InvalidInputError(f"Aucun barycentre à distance ≥ {cutoff:g} du bord")
    local = mesh.triangles[chosen]
    B_u = laplacian.evaluate(u, times[n], centroids[chosen], chosen)
    interior = u_t[local].mean(axis=1) + B_u - nonlinearity(u[local].mean(axis=1))
    interior_norm = float(np.sqrt(np.sum(mesh.areas[chosen] * interior ** 2)))

    nodes = boundary.nodes
    strip = np.nonzero(np.isin(mesh.triangles, nodes).any(axis=1))[0]
    rule = volume_rule(mesh, laplacian.green_order, tuple(strip.tolist()))
    volume = laplacian.volume_vector(u, times[n], rule)
    E = assembler.snapshot(times[n]).E
    mu = boundary.weights
    residual = mu * (u_t[nodes] - nonlinearity(u[nodes])) + (E @ u)[nodes] - volume[nodes]
    factor = linalg.cho_factor(boundary_gram(assembler))
    boundary_norm = float(np.sqrt(max(residual @ linalg.cho_solve(factor, residual), 0.0)))
    return StrongResiduals(float(times[n]), centroids[chosen], interior, interior_norm, residual, boundary_norm)


@dataclass
class ResidualConvergence:
    table: pd.DataFrame
    interior_order: float
    boundary_order: float
    threshold: float

    @property
    def order(self):
        return min(self.interior_order, self.boundary_order)

    @property
    def passed(self):
        return bool(self.order >= self.threshold)


def _observed_order(steps, values):
    """Pente de log(valeur) contre log(Δt); inf si le résidu s'annule"""
    values = np.asarray(values, dtype=float)
    if values[-1] == 0.0:
        return math.inf
    if np.any(values <= 0.0):
        return math.nan
    slope, _ = np.polyfit(np.log(steps), np.log(values), 1)
    return float(slope)


def residual_convergence(levels, nonlinearity, t, threshold=FitConfig.RESIDUAL_ORDER,
                         cutoff=None) -> ResidualConvergence:
    """Résidus forts sur une suite de niveaux (solution, assembleur, opérateur) raffinés ensemble

    L'ordre mesuré est la pente en Δt des normes intérieure et de bord.
    """
    if len(levels) < 2:
        raise InvalidInputError("Au moins deux niveaux de raffinement requis")
    rows = []
    for solution, assembler, laplacian in levels:
        residual = strong_residuals(solution, nonlinearity, t, assembler, laplacian, cutoff)
        times = np.asarray(solution.times)
        rows.append({"h": assembler.mesh.h, "dt": float(times[1] - times[0]), "t": residual.t,
                     "interior": residual.interior_norm, "boundary": residual.boundary_norm})
    table = pd.DataFrame(rows)
    if np.any(np.diff(table["dt"].to_numpy()) >= 0):
        raise InvalidInputError("Les niveaux doivent raffiner Δt strictement")
    steps = table["dt"].to_numpy()
    return ResidualConvergence(table, _observed_order(steps, table["interior"]),
                               _observed_order(steps, table["boundary"]), threshold)
