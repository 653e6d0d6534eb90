# -*- coding: utf-8 -*-
"""
Règles de quadrature: Gauss sur [0,1], Gauss-Jacobi, triangle effondré,
Sauter-Schwab pour les paires de triangles en contact et règles de segments.

Toutes les règles sont tabulées une fois (lru_cache) et partagées en lecture.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from config.settings import QuadratureConfig
from core.errors import QuadratureConfigError

ADJACENCIES = ("identical", "edge", "vertex")


@dataclass(frozen=True, eq=False)
class PairRule:
    """Points de référence appariés (test, essai) et poids"""
    test: np.ndarray
    trial: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_legendre_01(n):
    """Gauss-Legendre à n points sur [0, 1]"""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi_01(n, beta):
    """Nœuds et poids pour ∫_0^1 ξ^β g(ξ) dξ (β > -1)"""
    if beta == 0:
        return gauss_legendre_01(n)
    if beta <= -1:
        raise QuadratureConfigError(f"Poids ξ^{beta} non intégrable")
    x, w = special.roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w / 2.0 ** (beta + 1.0)


@lru_cache(maxsize=None)
def triangle_rule(order):
    """Règle effondrée sur le triangle (0,0), (1,0), (0,1); somme des poids 1/2"""
    x, w = gauss_legendre_01(order)
    a, b = np.meshgrid(x, x, indexing="ij")
    wa, wb = np.meshgrid(w, w, indexing="ij")
    points = np.column_stack([a.ravel(), (b * (1.0 - a)).ravel()])
    return points, (wa * wb * (1.0 - a)).ravel()


@lru_cache(maxsize=None)
def graded_triangle_rule(order):
    """Règle raffinée vers l'arête r2 = 0 (r2 = τ²)"""
    x, w = gauss_legendre_01(order)
    a, tau = np.meshgrid(x, x, indexing="ij")
    wa, wt = np.meshgrid(w, w, indexing="ij")
    r2 = tau ** 2
    points = np.column_stack([(a * (1.0 - r2)).ravel(), r2.ravel()])
    return points, (wa * wt * (1.0 - r2) * 2.0 * tau).ravel()


def pair_tensor_rule(order):
    """Produit tensoriel de deux règles de triangle (paires disjointes)"""
    points, weights = triangle_rule(order)
    n = len(weights)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return PairRule(points[i.ravel()], points[j.ravel()], (weights[i] * weights[j]).ravel())


def _regions(adjacency, xi, e1, e2, e3):
    """Régions (test_a, test_b, essai_a, essai_b, facteur) sur le triangle (0,0),(1,0),(1,1)"""
    if adjacency == "identical":
        e12, e123 = e1 * e2, e1 * e2 * e3
        jac = xi ** 3 * e1 ** 2 * e2
        return [
            (xi, xi * (1 - e1 + e12), xi * (1 - e123), xi * (1 - e1), jac),
            (xi * (1 - e123), xi * (1 - e1), xi, xi * (1 - e1 + e12), jac),
            (xi, xi * (e1 - e12 + e123), xi * (1 - e12), xi * (e1 - e12), jac),
            (xi * (1 - e12), xi * (e1 - e12), xi, xi * (e1 - e12 + e123), jac),
            (xi * (1 - e123), xi * (e1 - e123), xi, xi * (e1 - e12), jac),
            (xi, xi * (e1 - e12), xi * (1 - e123), xi * (e1 - e123), jac),
        ]
    if adjacency == "edge":
        e12, e123 = e1 * e2, e1 * e2 * e3
        jac = xi ** 3 * e1 ** 2
        return [
            (xi, xi * e1 * e3, xi * (1 - e12), xi * e1 * (1 - e2), jac),
            (xi, xi * e1, xi * (1 - e123), xi * e12 * (1 - e3), jac * e2),
            (xi * (1 - e12), xi * e1 * (1 - e2), xi, xi * e123, jac * e2),
            (xi * (1 - e123), xi * e12 * (1 - e3), xi, xi * e1, jac * e2),
            (xi * (1 - e123), xi * e1 * (1 - e2 * e3), xi, xi * e12, jac * e2),
        ]
    jac = xi ** 3 * e2
    return [
        (xi, xi * e1, xi * e2, xi * e2 * e3, jac),
        (xi * e2, xi * e2 * e3, xi, xi * e1, jac),
    ]


@lru_cache(maxsize=None)
def sauter_schwab_rule(order, adjacency, s):
    """Règle pour ∬_{T̂×T̂} G(x̂, ŷ) avec G ≍ |x-y|^{-2s} près du contact

    Conventions: arête commune = sommets locaux 0→1 dans les deux triangles,
    sommet commun = sommet local 0. Les directions où |x-y| s'annule
    (ξ, puis η1 et η2 selon le contact) sont intégrées par Gauss-Jacobi.
    """
    if adjacency not in ADJACENCIES:
        raise QuadratureConfigError(f"Contact inconnu: {adjacency}")
    if order < QuadratureConfig.MIN_SINGULAR_ORDER:
        raise QuadratureConfigError(
            f"Ordre singulier {order} < {QuadratureConfig.MIN_SINGULAR_ORDER}"
        )

    betas = {
        "identical": (3 - 2 * s, 2 - 2 * s, 1 - 2 * s, 0.0),
        "edge": (3 - 2 * s, 2 - 2 * s, 0.0, 0.0),
        "vertex": (3 - 2 * s, 0.0, 0.0, 0.0),
    }[adjacency]
    rules = [gauss_jacobi_01(order, b) for b in betas]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    xi, e1, e2, e3 = (g.ravel() for g in grids)
    base = np.prod([g.ravel() for g in wgrids], axis=0)
    graded = np.prod([v ** b for v, b in zip((xi, e1, e2, e3), betas)], axis=0)

    tests, trials, weights = [], [], []
    for ta, tb, sa, sb, jac in _regions(adjacency, xi, e1, e2, e3):
        # passage au triangle (0,0), (1,0), (0,1)
        tests.append(np.column_stack([ta - tb, tb]))
        trials.append(np.column_stack([sa - sb, sb]))
        weights.append(base * jac / graded)
    return PairRule(np.concatenate(tests), np.concatenate(trials), np.concatenate(weights))


# ===== SEGMENTS (FRONTIÈRE) =====

@lru_cache(maxsize=None)
def segment_identical_rule(order, alpha):
    """(u, v, w) sur [0,1]² pour G ≍ |u-v|^{1-2α}, symétrie u ↔ v exploitée"""
    beta = 1.0 - 2.0 * alpha
    z, wz = gauss_jacobi_01(order, beta)
    tau, wt = gauss_legendre_01(order)
    Z, Tau = np.meshgrid(z, tau, indexing="ij")
    W = np.outer(wz, wt)
    v = (1.0 - Z) * Tau
    u = v + Z
    weights = 2.0 * W * (1.0 - Z) / Z ** beta
    return u.ravel(), v.ravel(), weights.ravel()


@lru_cache(maxsize=None)
def segment_vertex_rule(order, alpha):
    """Segments issus d'un même nœud (u = v = 0 au nœud), Duffy sur les deux moitiés"""
    beta = 2.0 - 2.0 * alpha
    xi, wx = gauss_jacobi_01(order, beta)
    eta, we = gauss_legendre_01(order)
    X, E = np.meshgrid(xi, eta, indexing="ij")
    W = (np.outer(wx, we) * X / X ** beta).ravel()
    X, E = X.ravel(), E.ravel()
    u = np.concatenate([X, X * E])
    v = np.concatenate([X * E, X])
    return u, v, np.concatenate([W, W])


@lru_cache(maxsize=None)
def segment_tensor_rule(order):
    x, w = gauss_legendre_01(order)
    U, V = np.meshgrid(x, x, indexing="ij")
    return U.ravel(), V.ravel(), np.outer(w, w).ravel()
