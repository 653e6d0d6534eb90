# -*- coding: utf-8 -*-
"""
Jeux de données partagés par les tests (maillages de bureau, assembleurs, familles)
et oracles indépendants
"""

import math
import sys
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.assembly import FormAssembler
from core.coefficients import build_coefficients, compute_CNs, exponents
from core.evolution import EvolutionFamily, TimeGrid
from core.geometry import build_unit_square_mesh, extract_boundary
from core.green import RegionalLaplacian

DEFAULT_T = 0.2


@lru_cache(maxsize=None)
def default_pack(T=DEFAULT_T):
    return exponents(2, 1.0, 0.75, 3.0, T=T)


@lru_cache(maxsize=None)
def coefficients(preset="constant", T=DEFAULT_T):
    return build_coefficients(default_pack(T), preset)


@lru_cache(maxsize=None)
def mesh(h):
    return build_unit_square_mesh(h)


@lru_cache(maxsize=None)
def boundary(h):
    return extract_boundary(mesh(h))


@lru_cache(maxsize=None)
def assembler(h, preset="constant", T=DEFAULT_T):
    return FormAssembler(mesh(h), boundary(h), coefficients(preset, T), max_workers=2)


@lru_cache(maxsize=None)
def family(h, dt=0.02, T=DEFAULT_T, preset="constant"):
    return EvolutionFamily(assembler(h, preset, T), TimeGrid.uniform(T, dt))


@lru_cache(maxsize=None)
def laplacian(h, preset="constant"):
    return RegionalLaplacian.from_assembler(assembler(h, preset))


# ===== ORACLES =====

def _square_exit(x, theta):
    """Distance de sortie du carré unité depuis x dans la direction θ"""
    c, s = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore"):
        rx = np.where(c > 0, (1.0 - x[..., 0]) / c, np.where(c < 0, -x[..., 0] / c, np.inf))
        ry = np.where(s > 0, (1.0 - x[..., 1]) / s, np.where(s < 0, -x[..., 1] / s, np.inf))
    return np.minimum(rx, ry)


def interior_linear_oracle(s, order=48, angular=24):
    """(C_{N,s}/2) ∬_{Ω×Ω} (x1-y1)² |x-y|^{-2-2s} dx dy par rayons depuis chaque x

    ∫_0^R r² cos²θ r^{-2-2s} r dr = cos²θ R^{2-2s}/(2-2s), secteurs coupés aux coins.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    points = np.stack([X1, X2], axis=-1)
    a, b = np.polynomial.legendre.leggauss(angular)
    a, b = 0.5 * (a + 1.0), 0.5 * b
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

    total = 0.0
    for i in range(order):
        for j in range(order):
            p = points[i, j]
            cuts = np.sort(np.mod(np.arctan2(corners[:, 1] - p[1], corners[:, 0] - p[0]), 2 * np.pi))
            cuts = np.concatenate([cuts, [cuts[0] + 2 * np.pi]])
            lo, hi = cuts[:-1], cuts[1:]
            theta = (lo[:, None] + (hi - lo)[:, None] * a[None, :]).ravel()
            weights = ((hi - lo)[:, None] * b[None, :]).ravel()
            R = _square_exit(np.broadcast_to(p, (len(theta), 2)), theta)
            inner = np.sum(weights * np.cos(theta) ** 2 * R ** (2 - 2 * s)) / (2 - 2 * s)
            total += W[i, j] * inner
    return 0.5 * compute_CNs(2, s) * total


def boundary_linear_oracle(alpha):
    """∬_{∂Ω×∂Ω} (x1-y1)² |x-y|^{-1-2α} dμ dμ pour le bord du carré unité (mpmath)"""
    with mpmath.workdps(20):
        return _boundary_linear(alpha)


def _boundary_linear(alpha):
    e = 1 + 2 * mpmath.mpf(alpha)
    sides = [
        lambda u: (u, mpmath.mpf(0)),
        lambda u: (mpmath.mpf(1), u),
        lambda u: (1 - u, mpmath.mpf(1)),
        lambda u: (mpmath.mpf(0), 1 - u),
    ]
    total = mpmath.mpf(0)
    for i, side_a in enumerate(sides):
        for j, side_b in enumerate(sides):
            if i == j:
                if i in (0, 2):
                    # ∬ |u-v|^{2-e} du dv
                    total += 2 / ((3 - e) * (4 - e))
                continue

            def f(u, v, side_a=side_a, side_b=side_b):
                x, y = side_a(u), side_b(v)
                dist2 = (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2
                return (x[0] - y[0]) ** 2 / dist2 ** (e / 2)

            total += mpmath.quad(f, [0, 1], [0, 1])
    return float(total)


def regional_oracle(func, x, s, cns, angular_cuts):
    """v.p. C_{N,s}∫_Ω (u(x)-u(y))|x-y|^{-2-2s} dy sur le carré unité, par rayons appariés (mpmath)"""
    with mpmath.workdps(30):
        return _regional(func, x, s, cns, angular_cuts)


def _regional(func, x, s, cns, angular_cuts):
    x = [mpmath.mpf(float(x[0])), mpmath.mpf(float(x[1]))]
    u_x = func(x[0], x[1])

    def exit_distance(c, sn):
        candidates = []
        if c > 0:
            candidates.append((1 - x[0]) / c)
        elif c < 0:
            candidates.append(-x[0] / c)
        if sn > 0:
            candidates.append((1 - x[1]) / sn)
        elif sn < 0:
            candidates.append(-x[1] / sn)
        return min(candidates)

    def angular(theta):
        c, sn = mpmath.cos(theta), mpmath.sin(theta)
        r_plus, r_minus = exit_distance(c, sn), exit_distance(-c, -sn)
        rho = min(r_plus, r_minus)
        paired = mpmath.quad(
            lambda r: (2 * u_x - func(x[0] + r * c, x[1] + r * sn) - func(x[0] - r * c, x[1] - r * sn))
            * r ** (-1 - 2 * s), [0, rho])
        tail_plus = mpmath.quad(lambda r: (u_x - func(x[0] + r * c, x[1] + r * sn)) * r ** (-1 - 2 * s),
                                [rho, r_plus]) if r_plus > rho else 0
        tail_minus = mpmath.quad(lambda r: (u_x - func(x[0] - r * c, x[1] - r * sn)) * r ** (-1 - 2 * s),
                                 [rho, r_minus]) if r_minus > rho else 0
        return paired + tail_plus + tail_minus

    return float(cns * mpmath.quad(angular, angular_cuts))


def square_angular_cuts(x):
    """Directions (mod π) des coins du carré vues depuis x, triées dans [0, π]"""
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    rel = corners - np.asarray(x, dtype=float)
    cuts = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), math.pi)
    return sorted(set([0.0, math.pi] + cuts.tolist()))
