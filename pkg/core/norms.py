# -*- coding: utf-8 -*-
"""
Normes ℓ^p(m) pondérées par la mesure condensée et normes d'opérateurs associées
"""

import numpy as np

from config.settings import FitConfig


def lp_norm(u, weights, p):
    """(Σ m_i |u_i|^p)^{1/p}; p = inf donne le maximum sur les nœuds de poids > 0"""
    u = np.asarray(u, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.isinf(p):
        support = weights > 0
        return np.max(np.abs(u[support]), axis=0) if np.any(support) else np.zeros(u.shape[1:])
    w = weights.reshape((-1,) + (1,) * (u.ndim - 1))
    return np.sum(w * np.abs(u) ** p, axis=0) ** (1.0 / p)


def op_norm_inf(U):
    """Norme ℓ^∞ → ℓ^∞: plus grande somme absolue de ligne"""
    return float(np.max(np.sum(np.abs(U), axis=1)))


def op_norm_l1(U, weights):
    """Norme ℓ¹(m) → ℓ¹(m): max_j Σ_i m_i |U_ij| / m_j"""
    weights = np.asarray(weights, dtype=float)
    return float(np.max(weights @ np.abs(U) / weights))


def op_norm_l1_to_inf(U, weights):
    """Norme ℓ¹(m) → ℓ^∞: max |U_ij| / m_j"""
    return float(np.max(np.abs(U) / np.asarray(weights, dtype=float)[None, :]))


def op_norm_l2(U, weights):
    """Norme ℓ²(m) → ℓ²(m) exacte (valeur singulière de D U D^{-1})"""
    root = np.sqrt(np.asarray(weights, dtype=float))
    return float(np.linalg.norm(root[:, None] * U / root[None, :], 2))


def positivity_defect(U):
    """Pire valeur de min(Uφ) sur les φ ≥ 0 avec ‖φ‖_∞ ≤ 1"""
    return float(-np.max(np.sum(np.maximum(-U, 0.0), axis=1)))


def _dual_map(v, r):
    return np.sign(v) * np.abs(v) ** (r - 1.0)


def op_norm_p_to_q(U, weights, p, q, starts=None, iterations=FitConfig.POWER_ITERATIONS, seed=0):
    """Estimation de ‖U‖_{ℓ^p(m)→ℓ^q(m)} par itération de puissance non linéaire

    Minorant garanti (rapport atteint par le meilleur vecteur trouvé).
    """
    weights = np.asarray(weights, dtype=float)
    A = weights[:, None] ** (1.0 / q) * U / weights[None, :] ** (1.0 / p)
    p_dual = p / (p - 1.0) if p > 1 else np.inf
    rng = np.random.default_rng(seed)

    if starts is None:
        starts = [np.ones(A.shape[1])] + [rng.standard_normal(A.shape[1]) for _ in range(3)]
    best = 0.0
    for x in starts:
        x = np.asarray(x, dtype=float)
        x = x / np.linalg.norm(x, p)
        for _ in range(iterations):
            y = A @ x
            z = A.T @ _dual_map(y, q)
            x_new = _dual_map(z, p_dual) if np.isfinite(p_dual) else np.sign(z)
            norm = np.linalg.norm(x_new, p)
            if norm == 0:
                break
            x_new = x_new / norm
            if np.allclose(x_new, x, rtol=0, atol=1e-14):
                x = x_new
                break
            x = x_new
        best = max(best, float(np.linalg.norm(A @ x, q)))
    return best


def op_norm_power_l2(U, weights, iterations=FitConfig.POWER_ITERATIONS, seed=0):
    """Itération de puissance sur (D U D^{-1})ᵀ(D U D^{-1}) (contrôle de op_norm_l2)"""
    root = np.sqrt(np.asarray(weights, dtype=float))
    A = root[:, None] * U / root[None, :]
    x = np.random.default_rng(seed).standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    value = 0.0
    for _ in range(iterations):
        y = A.T @ (A @ x)
        value = np.linalg.norm(y)
        if value == 0:
            return 0.0
        x = y / value
    return float(np.sqrt(value))
