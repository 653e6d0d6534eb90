# -*- coding: utf-8 -*-
"""
Problème semi-linéaire: non-linéarité J, itération de Picard de la solution douce
dans l'espace pondéré Y, test de fenêtre initiale, critère global petites données
et schéma IMEX de référence
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy import integrate, special

from config.settings import FitConfig, SolverConfig
from core.coefficients import ExponentPack
from core.errors import (
    DivergentIntegralError, InvalidInputError, LeavesWeightedSpaceError, NonContractionError
)
from core.evolution import EvolutionFamily
from core.norms import lp_norm, op_norm_p_to_q
from utils.common import print_status


# ===== NON-LINÉARITÉ =====

@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """J ponctuelle avec module de Lipschitz l(r) sur la boule de rayon r de ℓ^{2p}(m)"""
    func: Callable
    p: float
    modulus: Callable
    name: str = "J"

    def __call__(self, u):
        return self.func(np.asarray(u, dtype=float))

    @property
    def vanishes_at_zero(self):
        return float(np.max(np.abs(self.func(np.zeros(3))))) == 0.0


def power_nonlinearity(p) -> Nonlinearity:
    """J(u) = |u|^{p-1}u, l(r) = p·r^{p-1}"""
    if not p > 1:
        raise InvalidInputError(f"p > 1 requis (p = {p})")
    p = float(p)
    return Nonlinearity(
        func=lambda u: np.abs(u) ** (p - 1.0) * u,
        p=p,
        modulus=lambda r: p * np.asarray(r, dtype=float) ** (p - 1.0),
        name=f"|u|^{p - 1:g}u"
    )


def zero_nonlinearity(p) -> Nonlinearity:
    return Nonlinearity(func=np.zeros_like, p=float(p), modulus=lambda r: np.zeros_like(np.asarray(r, float)),
                        name="0")


def lipschitz_ratio_sample(nonlinearity: Nonlinearity, weights, r, samples=FitConfig.NASH_SAMPLES, seed=0):
    """max ‖J(u)-J(v)‖_{ℓ²(m)} / ‖u-v‖_{ℓ^{2p}(m)} sur des paires de la boule de rayon r

    Renvoie (rapport maximal, l(r)).
    """
    rng = np.random.default_rng(seed)
    p = nonlinearity.p
    n = len(weights)
    pairs = rng.standard_normal((2, n, samples))
    radii = r * rng.uniform(0.0, 1.0, (2, 1, samples))
    u = pairs[0] / lp_norm(pairs[0], weights, 2 * p) * radii[0]
    v = pairs[1] / lp_norm(pairs[1], weights, 2 * p) * radii[1]
    gap = lp_norm(u - v, weights, 2 * p)
    keep = gap > 0
    ratios = lp_norm(nonlinearity(u) - nonlinearity(v), weights, 2)[keep] / gap[keep]
    return float(np.max(ratios)), float(nonlinearity.modulus(r))


@dataclass
class GrowthReport:
    exponent: float
    radii: List[float]
    ratios: List[float]
    slope: float
    growth_constant: float
    passed: bool


def growth_condition_check(nonlinearity: Nonlinearity, pack: ExponentPack, radii=None) -> GrowthReport:
    """l(r)/r^{(1-a)/b_w} borné sur un balayage logarithmique en r"""
    radii = np.geomspace(1.0, 1e6, 40) if radii is None else np.asarray(radii, dtype=float)
    exponent = (1.0 - pack.a) / pack.b_w
    ratios = np.asarray(nonlinearity.modulus(radii), dtype=float) / radii ** exponent
    if np.all(ratios > 0):
        slope = float(np.polyfit(np.log(radii), np.log(ratios), 1)[0])
    else:
        slope = 0.0
    return GrowthReport(exponent, radii.tolist(), ratios.tolist(), slope,
                        float(np.max(ratios)), bool(np.all(np.isfinite(ratios))) and slope <= 1e-9)


# ===== ITÉRÉS DE LA SOLUTION DOUCE =====

def _weighted_norms(times, states, weights, b_w, p):
    """t^{b_w}‖u(t)‖_{ℓ^{2p}(m)} aux nœuds (0 en t = 0)"""
    norms = lp_norm(states.T, weights, 2 * p)
    return np.where(times > 0, np.maximum(times, 0.0) ** b_w * norms, 0.0)


def y_distance(times, w, v, weights, b_w, p):
    """Métrique de Y: max(sup ‖w-v‖_{ℓ²(m)}, sup t^{b_w}‖w-v‖_{ℓ^{2p}(m)})"""
    diff = w - v
    plain = float(np.max(lp_norm(diff.T, weights, 2)))
    return max(plain, float(np.max(_weighted_norms(times, diff, weights, b_w, p))))


@dataclass
class MildIterate:
    times: np.ndarray
    states: np.ndarray
    weighted_norm: float
    plain_norm: float
    iterations: int = 0
    history: List[float] = field(default_factory=list)
    residual: Optional[float] = None
    blowup_time: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def ratios(self):
        h = self.history
        return [h[k] / h[k - 1] for k in range(1, len(h)) if h[k - 1] > 0]

    @property
    def final(self):
        return self.states[-1]

    def table(self, weights, p, b_w) -> pd.DataFrame:
        l2p = lp_norm(self.states.T, weights, 2 * p)
        return pd.DataFrame({
            "t": self.times,
            "l2": lp_norm(self.states.T, weights, 2),
            "l2p": l2p,
            "weighted": np.where(self.times > 0, np.maximum(self.times, 0) ** b_w * l2p, 0.0)
        })

    def convergence_table(self) -> pd.DataFrame:
        ratios = [float("nan")] + self.ratios
        ratios += [float("nan")] * (len(self.history) - len(ratios))
        return pd.DataFrame({
            "iteration": np.arange(1, len(self.history) + 1),
            "distance": self.history,
            "ratio": ratios[:len(self.history)]
        })


def _make_iterate(times, states, weights, b_w, p, **extra) -> MildIterate:
    return MildIterate(
        times=times, states=states,
        weighted_norm=float(np.max(_weighted_norms(times, states, weights, b_w, p))),
        plain_norm=float(np.max(lp_norm(states.T, weights, 2))),
        **extra
    )


# ===== FENÊTRE INITIALE =====

@dataclass
class WindowReport:
    kappa: float
    measured: float
    passed: bool
    T_bar: float
    phi_q_norm: float
    times: List[float]
    values: List[float]


def initial_window_check(phi, family: EvolutionFamily, pack: ExponentPack, kappa=None,
                         start=0, nodes=SolverConfig.WINDOW_NODES) -> WindowReport:
    """max de t^{b_w}‖U_h(t,0)φ‖_{ℓ^{2p}(m)} sur la première décade de la grille

    T̄ est le plus grand instant jusqu'auquel la quantité reste ≤ κ en chaque nœud.
    """
    kappa = pack.kappa if kappa is None else kappa
    if not kappa > 0:
        raise InvalidInputError(f"κ > 0 requis (κ = {kappa})")
    grid, m = family.grid, family.m
    states = family.trajectory(phi, start)
    times = grid.nodes[start:] - grid.nodes[start]
    weighted = _weighted_norms(times, states, m, pack.b_w, pack.p)

    early = slice(1, min(nodes, len(times) - 1) + 1)
    measured = float(np.max(weighted[early]))
    above = np.nonzero(weighted[1:] > kappa)[0]
    last = len(times) - 1 if above.size == 0 else int(above[0])
    return WindowReport(
        kappa=float(kappa), measured=measured, passed=measured < kappa,
        T_bar=float(times[last]), phi_q_norm=float(lp_norm(phi, m, pack.q)),
        times=times[early].tolist(), values=weighted[early].tolist()
    )


# ===== ITÉRATION DE PICARD =====

def duhamel_map(family: EvolutionFamily, linear, w, nonlinearity, start, stop):
    """F(w)(t_n) = U_h(t_n,t_0)φ + Σ_{k<n} Δt U_h(t_n,t_{k+1}) J(w(t_{k+1}))

    Somme évaluée par la récurrence D_n = U_h(t_n,t_{n-1})D_{n-1} + Δt J(w_n).
    """
    dt = family.grid.dt
    out = np.empty_like(linear)
    out[0] = linear[0]
    duhamel = np.zeros(linear.shape[1])
    for j, n in enumerate(range(start + 1, stop + 1), start=1):
        duhamel = family.step(duhamel, n - 1) + dt * nonlinearity(w[j])
        out[j] = linear[j] + duhamel
    return out


def picard_solve(phi, family: EvolutionFamily, nonlinearity: Nonlinearity, pack: ExponentPack,
                 tol=SolverConfig.PICARD_TOL, max_iter=SolverConfig.MAX_ITER, kappa=None,
                 T_bar=None, seed="linear", strict=True, start=0) -> MildIterate:
    """Point fixe w ← F(w) sur [t_start, T̄] en métrique de Y"""
    kappa = pack.kappa if kappa is None else kappa
    grid, m = family.grid, family.m
    stop = grid.steps if T_bar is None else grid.index_of(grid.nodes[start] + T_bar)
    if stop <= start:
        raise InvalidInputError("Horizon de Picard vide")
    warnings = []

    window = initial_window_check(phi, family, pack, kappa, start)
    if not window.passed:
        message = (f"Fenêtre initiale non satisfaite: {window.measured:.6g} ≥ κ = {kappa:g}")
        if strict:
            raise LeavesWeightedSpaceError(message, window.measured, kappa, 0)
        warnings.append(message)
        print_status(message, 'warning')

    times = grid.nodes[start:stop + 1] - grid.nodes[start]
    linear = family.trajectory(phi, start)[:stop - start + 1]
    w = linear.copy() if seed == "linear" else np.vstack([linear[:1], np.zeros_like(linear[1:])])
    history = []

    for iteration in range(1, max_iter + 1):
        new = duhamel_map(family, linear, w, nonlinearity, start, stop)
        distance = y_distance(times, new, w, m, pack.b_w, pack.p)
        history.append(distance)
        w = new
        weighted = float(np.max(_weighted_norms(times, w, m, pack.b_w, pack.p)))
        if weighted >= 2.0 * kappa:
            message = f"t^b‖u(t)‖_{{2p}} = {weighted:.6g} ≥ 2κ = {2 * kappa:g} (itération {iteration})"
            if strict:
                raise LeavesWeightedSpaceError(message, weighted, 2.0 * kappa, iteration)
            if message not in warnings:
                warnings.append(message)
        if not np.all(np.isfinite(w)):
            raise NonContractionError("Itéré non fini", history)
        if distance < tol:
            residual = y_distance(times, duhamel_map(family, linear, w, nonlinearity, start, stop),
                                  w, m, pack.b_w, pack.p)
            times_abs = grid.nodes[start:stop + 1]
            return _make_iterate(times_abs, w, m, pack.b_w, pack.p, iterations=iteration,
                                 history=history, residual=residual, warnings=warnings)

    raise NonContractionError(
        f"Picard non convergent en {max_iter} itérations (dernière distance {history[-1]:.3g})", history
    )


# ===== RÉFÉRENCE IMEX =====

def refined_family(family: EvolutionFamily, factor=SolverConfig.IMEX_REFINEMENT) -> EvolutionFamily:
    return EvolutionFamily(family.assembler, family.grid.refined(factor))


def imex_reference(phi, family: EvolutionFamily, nonlinearity: Nonlinearity,
                   cap=SolverConfig.BLOWUP_CAP, coarse_steps=None, b_w=0.0) -> MildIterate:
    """(M_m + Δt E_h(t_{n+1}))u^{n+1} = M_m(u^n + Δt J(u^n)), arrêt si ‖u‖_∞ > cap"""
    if coarse_steps is not None and family.grid.steps < SolverConfig.IMEX_REFINEMENT * coarse_steps:
        raise InvalidInputError(
            f"Grille IMEX trop grossière ({family.grid.steps} pas pour {coarse_steps} pas de Picard)"
        )
    dt, m = family.grid.dt, family.m
    states = [np.array(phi, dtype=float, copy=True)]
    blowup = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(family.grid.steps):
            u = states[-1]
            nxt = family.step(u + dt * nonlinearity(u), n)
            if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > cap:
                blowup = float(family.grid.nodes[n + 1])
                print_status(f"Garde d'explosion déclenchée à t = {blowup:g}", 'warning')
                break
            states.append(nxt)
    states = np.array(states)
    times = family.grid.nodes[:len(states)]
    return _make_iterate(times, states, m, b_w, nonlinearity.p, blowup_time=blowup)


# ===== UNICITÉ ET STABILITÉ DE GRILLE =====

def uniqueness_check(phi, family: EvolutionFamily, nonlinearity: Nonlinearity, pack: ExponentPack,
                     tol=SolverConfig.PICARD_TOL, max_iter=SolverConfig.MAX_ITER):
    """Distance en métrique de Y entre les points fixes partis de zéro et de U_h(t,0)φ"""
    runs = [picard_solve(phi, family, nonlinearity, pack, tol, max_iter, seed=seed, strict=False)
            for seed in ("zero", "linear")]
    distance = y_distance(family.grid.nodes, runs[0].states, runs[1].states, family.m, pack.b_w, pack.p)
    return distance, bool(distance <= 2.0 * tol)


@dataclass
class GridStabilityReport:
    steps: List[int]
    restart_moves: List[float]
    gaps: List[float]
    tol: float

    @property
    def ratio(self):
        if self.gaps[-1] == 0.0:
            return math.inf
        return self.gaps[0] / self.gaps[-1]

    @property
    def passed(self):
        settled = all(move < self.tol for move in self.restart_moves)
        return bool(settled and (self.gaps[0] == 0.0 or self.ratio > 1.0))


def grid_stability_check(phi, family: EvolutionFamily, nonlinearity: Nonlinearity, pack: ExponentPack,
                         tol=SolverConfig.PICARD_TOL, max_iter=SolverConfig.MAX_ITER,
                         levels=3) -> GridStabilityReport:
    """Point fixe sur Δt, Δt/2, Δt/4...

    restart_moves: ‖F(u) - u‖_Y au point fixe convergé de chaque grille;
    gaps: écarts ℓ²(m) en T entre grilles successives, décroissants si le point fixe est stable.
    """
    if levels < 3:
        raise InvalidInputError("Au moins trois grilles requises")
    finals, moves, steps = [], [], []
    for level in range(levels):
        current = family if level == 0 else refined_family(family, 2 ** level)
        solution = picard_solve(phi, current, nonlinearity, pack, tol, max_iter, strict=False)
        finals.append(solution.final)
        moves.append(float(solution.residual))
        steps.append(current.grid.steps)
    gaps = [float(lp_norm(finals[k + 1] - finals[k], family.m, 2)) for k in range(levels - 1)]
    return GridStabilityReport(steps, moves, gaps, tol)


# ===== INTERVALLE MAXIMAL =====

@dataclass
class MaximalSolution:
    times: np.ndarray
    states: np.ndarray
    segments: List[tuple]
    T_phi: Optional[float]
    reason: str

    @property
    def reached_horizon(self):
        return self.T_phi is None


def maximal_solution(phi, family: EvolutionFamily, nonlinearity: Nonlinearity, pack: ExponentPack,
                     cap=SolverConfig.BLOWUP_CAP, tol=SolverConfig.PICARD_TOL,
                     max_iter=SolverConfig.MAX_ITER, max_restarts=SolverConfig.MAX_RESTARTS):
    """Prolongement par redémarrages depuis u(T̄) jusqu'à l'horizon ou à l'explosion"""
    grid = family.grid
    start, state = 0, np.array(phi, dtype=float, copy=True)
    times, states, segments = [grid.nodes[0]], [state], []

    for _ in range(max_restarts):
        if start >= grid.steps:
            return MaximalSolution(np.array(times), np.array(states), segments, None, "horizon")
        window = initial_window_check(state, family, pack, start=start)
        stop = min(grid.steps, max(grid.index_of(grid.nodes[start] + window.T_bar), start + 1))
        try:
            piece = picard_solve(state, family, nonlinearity, pack, tol, max_iter,
                                 T_bar=grid.nodes[stop] - grid.nodes[start], strict=False, start=start)
        except NonContractionError:
            return MaximalSolution(np.array(times), np.array(states), segments,
                                   float(grid.nodes[stop]), "non-contraction")
        sup = np.max(np.abs(piece.states), axis=1)
        over = np.nonzero(~np.isfinite(sup) | (sup > cap))[0]
        if over.size:
            end = int(over[0])
            times += list(piece.times[1:end])
            states += list(piece.states[1:end])
            segments.append((float(grid.nodes[start]), float(piece.times[end])))
            return MaximalSolution(np.array(times), np.array(states), segments,
                                   float(piece.times[end]), "blow-up")
        times += list(piece.times[1:])
        states += list(piece.states[1:])
        segments.append((float(grid.nodes[start]), float(grid.nodes[stop])))
        start, state = stop, piece.final

    reason = "horizon" if start >= grid.steps else "restarts"
    return MaximalSolution(np.array(times), np.array(states), segments,
                           None if reason == "horizon" else float(grid.nodes[start]), reason)


# ===== EXISTENCE GLOBALE =====

def beta_integral(a, b_w):
    """B = ∫_0^1 (1-τ)^{-a} τ^{a-1-b_w} dτ par quadrature à poids algébrique"""
    if not a < 1 or not b_w < a:
        raise DivergentIntegralError(f"B diverge pour a = {a:g}, b_w = {b_w:g}")
    value, _ = integrate.quad(lambda tau: 1.0, 0.0, 1.0, weight="alg", wvar=(a - 1.0 - b_w, -a),
                              epsabs=1e-14, epsrel=1e-12)
    return float(value), float(special.beta(1.0 - a, a - b_w))


def smoothing_constant(family: EvolutionFamily, pack: ExponentPack, seed=0):
    """M empirique: sup_t t^{b_w}‖U_h(t,0)‖_{ℓ^q(m)→ℓ^{2p}(m)}"""
    values = [
        family.grid.nodes[n] ** pack.b_w
        * op_norm_p_to_q(family.propagator_matrix(n, 0), family.m, pack.q, 2 * pack.p, seed=seed)
        for n in range(1, family.grid.steps + 1)
    ]
    return float(max(values))


@dataclass
class GlobalReport:
    q: float
    B: float
    B_beta: float
    M: float
    epsilon: float
    growth_constant: float
    margin: float
    threshold: float
    f_T: float
    bound: float
    small: bool
    passed: bool
    f_values: List[float] = field(default_factory=list)


def global_smalldata_check(phi, family: EvolutionFamily, nonlinearity: Nonlinearity, pack: ExponentPack,
                           tol=SolverConfig.PICARD_TOL, max_iter=SolverConfig.MAX_ITER,
                           M=None, seed=0) -> GlobalReport:
    """Inégalité d'amorçage f(T) < 2ε et marge 2^{(1-a+b)/b} Λ B M ε^{(1-a)/b} < 1"""
    a, b_w = pack.a, pack.b_w
    B, B_beta = beta_integral(a, b_w)
    M = smoothing_constant(family, pack, seed) if M is None else M
    Lambda = growth_condition_check(nonlinearity, pack).growth_constant
    phi_q = float(lp_norm(phi, family.m, pack.q))
    epsilon = M * phi_q

    power = (1.0 - a) / b_w
    factor = 2.0 ** ((1.0 - a + b_w) / b_w) * Lambda * B * M
    margin = factor * epsilon ** power
    threshold = math.inf if factor == 0 else (1.0 / factor) ** (1.0 / power) / M

    solution = picard_solve(phi, family, nonlinearity, pack, tol, max_iter, strict=False)
    f_values = np.maximum.accumulate(_weighted_norms(solution.times, solution.states, family.m, b_w, pack.p))
    f_T = float(f_values[-1])
    return GlobalReport(
        q=pack.q, B=B, B_beta=B_beta, M=M, epsilon=epsilon, growth_constant=Lambda,
        margin=margin, threshold=threshold, f_T=f_T, bound=2.0 * epsilon,
        small=margin < 1.0, passed=f_T < 2.0 * epsilon or f_T == 0.0, f_values=f_values.tolist()
    )


# ===== RÉGULARITÉ HÖLDER EN TEMPS =====

@dataclass
class RegularityFit:
    lags: List[float]
    increments: List[float]
    gamma: float
    constant: float
    upper: float
    passed: bool


def hoelder_regularity_fit(solution: MildIterate, weights, p, a, t_start, max_lag=None) -> RegularityFit:
    """sup_t ‖u(t+σ)-u(t)‖_{ℓ^{2p}(m)} ≤ Cσ^γ sur [t_start, T̄]"""
    times, states = solution.times, solution.states
    first = int(np.searchsorted(times, t_start - 1e-12))
    available = len(times) - 1 - first
    if available < 3:
        raise InvalidInputError(f"Trop peu de nœuds après t = {t_start:g}")
    max_lag = max(2, available // 2) if max_lag is None else max_lag
    dt = times[1] - times[0]
    lags, increments = [], []
    for k in range(1, max_lag + 1):
        diff = states[first + k:] - states[first:len(states) - k]
        lags.append(k * dt)
        increments.append(float(np.max(lp_norm(diff.T, weights, 2 * p))))
    if min(increments) <= 0:
        return RegularityFit(lags, increments, float("inf"), 0.0, 1.0 - a, True)
    slope, intercept = np.polyfit(np.log(lags), np.log(increments), 1)
    return RegularityFit(lags, increments, float(slope), float(math.exp(intercept)), 1.0 - a,
                         bool(slope > 0))
