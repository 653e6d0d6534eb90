# -*- coding: utf-8 -*-
"""
Famille d'évolution discrète U_h(t, τ) par Euler implicite et diagnostics associés
(contraction, positivité, ultracontractivité, régularisation, puissances fractionnaires)
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from config.settings import FitConfig, SolverConfig
from core.assembly import FormAssembler, FormSnapshot, RefinementSweep
from core.errors import CoercivityFailure, InvalidInputError, OffGridTimeError, WindowTooNarrowError
from core.norms import (
    lp_norm, op_norm_inf, op_norm_l1, op_norm_l1_to_inf, op_norm_l2, op_norm_p_to_q,
    op_norm_power_l2, positivity_defect
)
from utils.common import print_status


# ===== GRILLE TEMPORELLE =====

@dataclass(frozen=True)
class TimeGrid:
    """Nœuds uniformes start = t_0 < ... < t_M = T"""
    start: float
    T: float
    steps: int

    def __post_init__(self):
        if self.steps < 1 or not self.T > self.start:
            raise InvalidInputError("Grille temporelle vide")

    @classmethod
    def uniform(cls, T, dt, start=0.0):
        steps = int(round((T - start) / dt))
        if steps < 1 or abs(steps * dt - (T - start)) > 1e-9 * max(1.0, T):
            raise InvalidInputError(f"(T - t0)/dt = {(T - start) / dt:.6g} n'est pas entier")
        return cls(float(start), float(T), steps)

    @property
    def dt(self):
        return (self.T - self.start) / self.steps

    @property
    def nodes(self):
        return np.linspace(self.start, self.T, self.steps + 1)

    def __len__(self):
        return self.steps + 1

    def index_of(self, t):
        position = (float(t) - self.start) / self.dt
        index = int(round(position))
        if abs(position - index) > 1e-9 or not 0 <= index <= self.steps:
            raise OffGridTimeError(f"t = {t} hors de la grille (pas {self.dt:g})")
        return index

    def refined(self, factor):
        return TimeGrid(self.start, self.T, self.steps * int(factor))


# ===== FAMILLE D'ÉVOLUTION =====

class EvolutionFamily:
    """Propagateurs à un pas (M_m + Δt E_h(t_{n+1}))⁻¹ M_m, factorisés une fois par nœud"""

    def __init__(self, assembler: FormAssembler, grid: TimeGrid):
        self.assembler = assembler
        self.grid = grid
        self.M = assembler.M_m
        self.m = np.diag(self.M).copy()
        self._factors = {}
        self._matrices = {}

    @property
    def n_dofs(self):
        return len(self.m)

    def snapshot(self, n) -> FormSnapshot:
        return self.assembler.snapshot(self.grid.nodes[n])

    def _factor(self, n):
        key = n if self.assembler.coefficients.time_dependent else 0
        if key not in self._factors:
            t = self.grid.nodes[n + 1]
            system = self.M + self.grid.dt * self.snapshot(n + 1).E
            try:
                self._factors[key] = linalg.cho_factor(system)
            except linalg.LinAlgError:
                raise CoercivityFailure(f"M_m + Δt E_h({t:g}) non définie positive", t=float(t))
        return self._factors[key]

    def step(self, u, n):
        """u⁺ = (M_m + Δt E_h(t_{n+1}))⁻¹ M_m u (u vecteur ou colonnes)"""
        if not 0 <= n < self.grid.steps:
            raise InvalidInputError(f"Intervalle {n} hors de [0, {self.grid.steps})")
        u = np.asarray(u, dtype=float)
        rhs = self.m[:, None] * u if u.ndim == 2 else self.m * u
        return linalg.cho_solve(self._factor(n), rhs)

    def propagate(self, phi, tau, t):
        """U_h(t, τ)φ pour des instants de la grille τ ≤ t"""
        k, n = self.grid.index_of(tau), self.grid.index_of(t)
        if k > n:
            raise InvalidInputError(f"τ = {tau} > t = {t}")
        return self.propagate_index(phi, k, n)

    def propagate_index(self, phi, k, n):
        u = np.array(phi, dtype=float, copy=True)
        for j in range(k, n):
            u = self.step(u, j)
        return u

    def propagator_matrix(self, n, k=0):
        """U_h(t_n, t_k) explicite (colonnes = images des vecteurs de base)"""
        if (n, k) not in self._matrices:
            if n == k:
                matrix = np.eye(self.n_dofs)
            elif (n - 1, k) in self._matrices:
                matrix = self.step(self._matrices[(n - 1, k)], n - 1)
            else:
                matrix = self.propagate_index(np.eye(self.n_dofs), k, n)
            self._matrices[(n, k)] = matrix
        return self._matrices[(n, k)]

    def trajectory(self, phi, start=0):
        """Champs nodaux aux nœuds start, ..., M"""
        states = [np.array(phi, dtype=float, copy=True)]
        for j in range(start, self.grid.steps):
            states.append(self.step(states[-1], j))
        return np.array(states)

    def trajectory_table(self, phi) -> pd.DataFrame:
        states = self.trajectory(phi)
        rows = []
        for n, u in enumerate(states):
            E = self.snapshot(n).E
            rows.append({
                "t": self.grid.nodes[n],
                "l1": float(lp_norm(u, self.m, 1)),
                "l2": float(lp_norm(u, self.m, 2)),
                "linf": float(lp_norm(u, self.m, np.inf)),
                "min": float(u.min()),
                "energy": float(u @ E @ u)
            })
        return pd.DataFrame(rows, columns=["t", "l1", "l2", "linf", "min", "energy"])


# ===== CONTRACTION ET POSITIVITÉ =====

@dataclass
class ContractionReport:
    p: float
    exact_norm: float
    sampled_norm: float
    per_time: List[Tuple[float, float]]
    passed: bool
    power_iteration_norm: Optional[float] = None


def lp_contraction_check(family: EvolutionFamily, p, trials=FitConfig.TRIALS, seed=0,
                         tolerance=1e-10) -> ContractionReport:
    """Norme ℓ^p(m) de U_h(t, 0): matrice explicite (p ∈ {1, 2, ∞}) et entrées aléatoires"""
    if p not in (1, 2, np.inf):
        raise InvalidInputError(f"p = {p} non pris en charge (1, 2 ou inf)")
    rng = np.random.default_rng(seed)
    m = family.m
    per_time, sampled, power = [], 0.0, None
    inputs = rng.standard_normal((family.n_dofs, trials))
    in_norms = lp_norm(inputs, m, p)

    for n in range(1, family.grid.steps + 1):
        U = family.propagator_matrix(n, 0)
        if p == 1:
            exact = op_norm_l1(U, m)
        elif p == 2:
            exact = op_norm_l2(U, m)
        else:
            exact = op_norm_inf(U)
        per_time.append((float(family.grid.nodes[n]), float(exact)))
        sampled = max(sampled, float(np.max(lp_norm(U @ inputs, m, p) / in_norms)))

    if p == 2:
        U = family.propagator_matrix(family.grid.steps, 0)
        power = op_norm_power_l2(U, m, seed=seed)
    worst = max(v for _, v in per_time)
    return ContractionReport(p, worst, sampled, per_time, worst <= 1.0 + tolerance, power)


def step_contraction_check(family: EvolutionFamily, trials=FitConfig.TRIALS, seed=0):
    """Plus grand rapport ‖u⁺‖/‖u‖ en ℓ²(m) sur tous les pas et des φ aléatoires"""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((family.n_dofs, trials))
    worst = 0.0
    for n in range(family.grid.steps):
        nxt = family.step(u, n)
        worst = max(worst, float(np.max(lp_norm(nxt, family.m, 2) / lp_norm(u, family.m, 2))))
        u = nxt
    return worst


@dataclass
class PositivityReport:
    sampled_min: float
    matrix_defect: float
    tol_pos: float
    trials: int
    passed: bool


def positivity_check(family: EvolutionFamily, trials=FitConfig.TRIALS,
                     tol_pos=SolverConfig.TOL_POS, seed=0) -> PositivityReport:
    """min(U_h(t,0)φ)/‖φ‖_∞ pour φ ≥ 0 aléatoires et balayage exact de la matrice"""
    rng = np.random.default_rng(seed)
    phis = rng.uniform(0.0, 1.0, (family.n_dofs, trials))
    scale = np.max(phis, axis=0)
    sampled, defect = np.inf, 0.0
    for n in range(1, family.grid.steps + 1):
        U = family.propagator_matrix(n, 0)
        sampled = min(sampled, float(np.min((U @ phis).min(axis=0) / scale)))
        defect = min(defect, positivity_defect(U))
    return PositivityReport(sampled, defect, tol_pos, trials, sampled >= -tol_pos)


def positivity_sweep(families: Sequence[EvolutionFamily], trials=FitConfig.TRIALS,
                     tol_pos=SolverConfig.TOL_POS, seed=0,
                     floor=FitConfig.POSITIVITY_FLOOR) -> RefinementSweep:
    """Pire violation max(0, -min U_h φ/‖φ‖_∞) du plus grossier au plus fin; non croissante attendue"""
    violations = [max(0.0, -positivity_check(f, trials, tol_pos, seed).sampled_min) for f in families]
    return RefinementSweep.nonincreasing("positivity_violation", [f.assembler.mesh.h for f in families],
                                         violations, floor)


# ===== AJUSTEMENTS EN LOI DE PUISSANCE =====

def _window_nodes(grid, window):
    lo, hi = window
    if not 0 < lo < hi:
        raise InvalidInputError(f"Fenêtre {window} invalide")
    if hi / lo < FitConfig.MIN_WINDOW_RATIO:
        raise WindowTooNarrowError(f"Fenêtre [{lo:g}, {hi:g}] inférieure à une demi-décade")
    nodes = grid.nodes
    selected = [n for n in range(1, len(nodes)) if lo - 1e-12 <= nodes[n] <= hi + 1e-12]
    if len(selected) < 3:
        raise WindowTooNarrowError(f"Moins de trois nœuds de grille dans [{lo:g}, {hi:g}]")
    return selected


def power_law_fit(times, values):
    """Ajuste values ≈ C t^{-γ}; renvoie (γ, C, résidu RMS en log)"""
    log_t, log_v = np.log(np.asarray(times)), np.log(np.asarray(values))
    slope, intercept = np.polyfit(log_t, log_v, 1)
    residual = float(np.sqrt(np.mean((log_v - (slope * log_t + intercept)) ** 2)))
    return float(-slope), float(math.exp(intercept)), residual


@dataclass
class UltraFit:
    times: List[float]
    norms: List[float]
    exponent: float
    prefactor: float
    residual: float
    target: Optional[float] = None


def ultracontractivity_fit(family: EvolutionFamily, window=FitConfig.FIT_WINDOW, lam=None) -> UltraFit:
    """log ‖U_h(t,0)‖_{ℓ¹(m)→ℓ^∞} contre log t sur la fenêtre"""
    selected = _window_nodes(family.grid, window)
    times = [float(family.grid.nodes[n]) for n in selected]
    norms = [op_norm_l1_to_inf(family.propagator_matrix(n, 0), family.m) for n in selected]
    exponent, prefactor, residual = power_law_fit(times, norms)
    return UltraFit(times, norms, exponent, prefactor, residual, None if lam is None else lam / 2.0)


def ultracontractivity_bound(lam, C_emp, beta):
    """Préfacteur (λ C̄ / 2β)^{λ/2}"""
    return (lam * C_emp / (2.0 * beta)) ** (lam / 2.0)


def prefactor_within_bound(fit: UltraFit, lam, C_emp, beta, safety=FitConfig.ULTRA_SAFETY):
    """(préfacteur ajusté, borne × sécurité, préfacteur ≤ borne × sécurité)"""
    limit = safety * ultracontractivity_bound(lam, C_emp, beta)
    return fit.prefactor, limit, bool(fit.prefactor <= limit)


def ultracontractivity_sweep(families: Sequence[EvolutionFamily], window=FitConfig.FIT_WINDOW,
                             lam=4.0) -> RefinementSweep:
    """|γ_h - λ/2| du plus grossier au plus fin; doit décroître sous raffinement"""
    gaps = [abs(ultracontractivity_fit(f, window, lam).exponent - lam / 2.0) for f in families]
    return RefinementSweep.nonincreasing("ultra_exponent_gap", [f.assembler.mesh.h for f in families], gaps)


def interpolated_smoothing_check(family: EvolutionFamily, p, lam, window=FitConfig.FIT_WINDOW,
                                 seed=0) -> UltraFit:
    """Décroissance de ‖U_h(t,0)‖_{ℓ²(m)→ℓ^{2p}(m)} comparée à a = (λ/4)(1 - 1/p)"""
    if p < 1:
        raise InvalidInputError("p ≥ 1 requis")
    selected = _window_nodes(family.grid, window)
    times = [float(family.grid.nodes[n]) for n in selected]
    if p == 1:
        norms = [op_norm_l2(family.propagator_matrix(n, 0), family.m) for n in selected]
    else:
        norms = [op_norm_p_to_q(family.propagator_matrix(n, 0), family.m, 2.0, 2.0 * p, seed=seed)
                 for n in selected]
    exponent, prefactor, residual = power_law_fit(times, norms)
    return UltraFit(times, norms, exponent, prefactor, residual, lam / 4.0 * (1.0 - 1.0 / p))


# ===== PUISSANCES FRACTIONNAIRES (COEFFICIENTS FIGÉS) =====

def generator_spectrum(snapshot: FormSnapshot):
    """Valeurs propres de A_h = M_m⁻¹ E_h (faisceau symétrique (E_h, M_m))"""
    return linalg.eigh(snapshot.E, snapshot.M_m, eigvals_only=True)


def smoothing_envelope(theta):
    """sup_x x^θ e^{-x} = (θ/e)^θ (1 pour θ = 0)"""
    return 1.0 if theta == 0 else (theta / math.e) ** theta


def difference_envelope(xi):
    """sup_x (1 - e^{-x}) x^{-ξ} pour 0 < ξ < 1"""
    result = optimize.minimize_scalar(
        lambda log_x: -(-math.expm1(-math.exp(log_x))) * math.exp(-xi * log_x),
        bounds=(-20.0, 20.0), method="bounded", options={"xatol": 1e-12}
    )
    return float(-result.fun)


@dataclass
class FractionalPowerReport:
    theta: float
    times: List[float]
    values: List[float]
    weighted_sup: float
    envelope: float
    exponent: float
    euler_values: List[float]
    passed: bool
    warnings: List[str] = field(default_factory=list)


def fractional_power_bound_check(snapshot: FormSnapshot, theta, window=FitConfig.FIT_WINDOW,
                                 eta=SolverConfig.ETA, dt=None, samples=200) -> FractionalPowerReport:
    """max_k λ_k^θ e^{-tλ_k} sur la fenêtre, borne sup t^θ‖A^θ e^{-tA}‖ ≤ (θ/e)^θ"""
    warnings = []
    if theta < 0:
        raise InvalidInputError("θ ≥ 0 requis")
    if theta >= eta + 0.5:
        message = f"θ = {theta:g} ≥ η + 1/2 = {eta + 0.5:g}: hors du domaine de la borne"
        warnings.append(message)
        print_status(message, 'warning')
    lo, hi = window
    if hi / lo < FitConfig.MIN_WINDOW_RATIO:
        raise WindowTooNarrowError(f"Fenêtre [{lo:g}, {hi:g}] inférieure à une demi-décade")

    lam = np.maximum(generator_spectrum(snapshot), 0.0)
    times = np.geomspace(lo, hi, samples)
    powered = lam[None, :] ** theta if theta > 0 else np.ones((1, len(lam)))
    values = np.max(powered * np.exp(-times[:, None] * lam[None, :]), axis=1)
    weighted = float(np.max(times ** theta * values))
    exponent = power_law_fit(times, values)[0] if np.all(values > 0) else float("nan")

    euler = []
    if dt is not None:
        steps = np.arange(1, int(round(hi / dt)) + 1)
        euler = [float(np.max(powered[0] * (1.0 + dt * lam) ** (-float(n)))) for n in steps]

    envelope = smoothing_envelope(theta)
    return FractionalPowerReport(
        theta, times.tolist(), values.tolist(), weighted, envelope, exponent, euler,
        weighted <= envelope + 1e-6, warnings
    )


def generator_derivative_bound(snapshot: FormSnapshot, window=FitConfig.FIT_WINDOW):
    """Cas θ = 1: sup t‖A_h e^{-tA_h}‖ ≤ 1/e"""
    return fractional_power_bound_check(snapshot, 1.0, window, eta=1.0)


def semigroup_difference_check(snapshot: FormSnapshot, xi=0.5, taus=None):
    """max_k (1 - e^{-τλ_k}) λ_k^{-ξ} / τ^ξ comparé à sup_x (1 - e^{-x}) x^{-ξ}"""
    if not 0 < xi < 1:
        raise InvalidInputError("0 < ξ < 1 requis")
    lam = generator_spectrum(snapshot)
    if lam[0] <= 0:
        raise CoercivityFailure("Spectre non strictement positif", beta=float(lam[0]), t=snapshot.t)
    taus = np.geomspace(1e-3, 1.0, 40) if taus is None else np.asarray(taus)
    ratios = [float(np.max(-np.expm1(-tau * lam) * lam ** (-xi)) / tau ** xi) for tau in taus]
    envelope = difference_envelope(xi)
    return {"xi": xi, "constant": max(ratios), "envelope": envelope,
            "passed": max(ratios) <= envelope * (1 + 1e-9)}
