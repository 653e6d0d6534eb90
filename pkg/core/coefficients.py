# -*- coding: utf-8 -*-
"""
Coefficients dépendant du temps (K, ζ, b), constantes explicites et jeu d'exposants

Les noyaux sont des évaluateurs vectorisés accompagnés de leurs constantes
déclarées; la validation des hypothèses est faite par échantillonnage.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
from scipy import integrate, special

from config.settings import FitConfig, PresetConfig, QuadratureConfig
from core.errors import (
    ExponentConstraintError, InfeasibleExponentError, InvalidInputError,
    SingularNormalizationError
)
from core.expressions import POTENTIAL_VARIABLES, compile_expression
from utils.common import print_status


# ===== CONSTANTES =====

def compute_CNs(N, s):
    """C_{N,s} = s 2^{2s} Γ((N+2s)/2) / (π^{N/2} Γ(1-s))"""
    if not 0 < s < 1:
        raise InvalidInputError(f"s = {s} hors de (0, 1)")
    if N < 1:
        raise InvalidInputError(f"N = {N} doit être ≥ 1")
    return float(s * 2.0 ** (2 * s) * special.gamma((N + 2 * s) / 2)
                 / (math.pi ** (N / 2) * special.gamma(1 - s)))


def conormal_integrand(z, s):
    z = np.asarray(z, dtype=float)
    beta = 1.0 - 2.0 * s
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.abs(z - 1.0) ** beta - np.maximum(z, 1.0) ** beta) / z ** (2.0 - 2.0 * s)


def compute_Cs(s):
    """Constante de la dérivée conormale, intégrale coupée en z = 1"""
    if not 0 < s < 1:
        raise InvalidInputError(f"s = {s} hors de (0, 1)")
    if s == 0.5:
        raise SingularNormalizationError("C_s non définie pour s = 1/2 (2s - 1 = 0)")

    options = dict(epsabs=QuadratureConfig.CS_ABS_TOL, epsrel=1e-12, limit=QuadratureConfig.CS_LIMIT)
    f = lambda z: float(conormal_integrand(z, s))
    total = sum(integrate.quad(f, lo, hi, **options)[0] for lo, hi in ((0.0, 1.0), (1.0, 2.0)))
    total += integrate.quad(f, 2.0, np.inf, **options)[0]
    return float(compute_CNs(1, s) / (2 * s * (2 * s - 1)) * total)


# ===== JEU D'EXPOSANTS =====

@dataclass(frozen=True)
class ExponentPack:
    s: float
    N: int
    d: float
    alpha: float
    lam: float
    p: float
    a: float
    b_w: float
    q: float
    kappa: float
    T: float
    eta: float
    warnings: tuple = ()


def default_growth_exponent(p, lam):
    """Poids b_w = 1/(p-1) - λ/(4p) associé à J(u) = |u|^{p-1}u"""
    if not p > 1 + 4.0 / lam:
        raise InfeasibleExponentError(f"p > 1 + 4/λ requis ({p:g} ≤ {1 + 4.0 / lam:g})")
    b_w = 1.0 / (p - 1.0) - lam / (4.0 * p)
    if b_w <= 0:
        raise InfeasibleExponentError(f"b_w = {b_w:.6g} ≤ 0 pour p = {p:g}, λ = {lam:g}")
    return b_w


def growth_exponent_q(lam, p, b_w):
    return 2.0 * lam * p / (lam + 4.0 * p * b_w)


def exponents(N, d, s, p, b_w=None, kappa=0.1, T=1.0, eta=0.75) -> ExponentPack:
    """Calcule α, λ, a, b_w, q et contrôle chaque inégalité séparément"""
    violations = []
    warnings = []

    if not N - d < 2 * s:
        violations.append(f"N − d < 2s ({N - d:g} < {2 * s:g})")
    if not 2 * s < N:
        violations.append(f"2s < N ({2 * s:g} < {N:g})")
    if not p > 1:
        violations.append(f"p > 1 (p = {p:g})")
    if not kappa > 0:
        violations.append(f"κ > 0 (κ = {kappa:g})")
    if not T > 0:
        violations.append(f"T > 0 (T = {T:g})")
    if not 0.5 < eta < 1:
        violations.append(f"1/2 < η < 1 (η = {eta:g})")
    if violations and any(v.startswith(("N − d", "2s", "p >")) for v in violations):
        raise ExponentConstraintError(violations)

    alpha = s - (N - d) / 2.0
    lam = 2.0 * d / (d - N + 2.0 * s)
    a = lam / 4.0 * (1.0 - 1.0 / p)
    if not 0 < alpha < 1:
        violations.append(f"0 < α < 1 (α = {alpha:g})")
    if not lam > 2:
        violations.append(f"λ > 2 (λ = {lam:g})")
    if a >= 1:
        message = f"0 < a < 1 (N − 2s ≤ d/2) non satisfaite: a = {a:.6g}"
        warnings.append(message)
        print_status(message, 'warning')

    if b_w is None:
        try:
            b_w = default_growth_exponent(p, lam)
        except InfeasibleExponentError as e:
            violations.append(f"0 < b_w < a ({e})")
            b_w = float("nan")
    elif not 0 < b_w < a:
        violations.append(f"0 < b_w < a (b_w = {b_w:g}, a = {a:g})")

    if violations:
        raise ExponentConstraintError(violations)

    return ExponentPack(
        s=float(s), N=int(N), d=float(d), alpha=alpha, lam=lam, p=float(p), a=a,
        b_w=float(b_w), q=growth_exponent_q(lam, p, b_w), kappa=float(kappa),
        T=float(T), eta=float(eta), warnings=tuple(warnings)
    )


# ===== NOYAUX ET POTENTIEL =====

@dataclass(frozen=True, eq=False)
class InteriorKernel:
    """K(t, x, y) symétrique, k1 ≤ K ≤ k2, η-höldérien en t"""
    evaluator: Callable
    k1: float
    k2: float
    hoelder_constant: Optional[float]
    eta: float
    time_factor: Optional[Callable] = None
    spatial: Optional[Callable] = None
    spatially_constant: bool = False
    name: str = "K"

    def __call__(self, t, x, y):
        return self.evaluator(t, x, y)

    @property
    def time_dependent(self):
        return self.hoelder_constant != 0.0

    def scaled(self, c):
        """Noyau c·K (bornes et constante de Hölder multipliées)"""
        base, factor = self.evaluator, self.time_factor
        return replace(
            self,
            evaluator=lambda t, x, y: c * base(t, x, y),
            k1=c * self.k1, k2=c * self.k2,
            hoelder_constant=None if self.hoelder_constant is None else c * self.hoelder_constant,
            time_factor=None if factor is None else (lambda t: c * factor(t))
        )


@dataclass(frozen=True, eq=False)
class BoundaryKernel(InteriorKernel):
    """ζ(t, x, y) sur ∂Ω × ∂Ω"""
    name: str = "ζ"

    @property
    def zeta1(self):
        return self.k1

    @property
    def zeta2(self):
        return self.k2


@dataclass(frozen=True, eq=False)
class BoundaryPotential:
    """b(t, P) sur [0, T] × ∂Ω avec inf b > b0 > 0"""
    evaluator: Callable
    b0: float
    b_sup: float
    hoelder_constant: Optional[float]
    eta: float
    time_factor: Optional[Callable] = None
    spatial: Optional[Callable] = None
    spatially_constant: bool = False
    name: str = "b"

    def __call__(self, t, points):
        return self.evaluator(t, points)

    @property
    def time_dependent(self):
        return self.hoelder_constant != 0.0

    def scaled(self, c):
        base, factor = self.evaluator, self.time_factor
        return replace(
            self,
            evaluator=lambda t, p: c * base(t, p),
            b0=c * self.b0, b_sup=c * self.b_sup,
            hoelder_constant=None if self.hoelder_constant is None else c * self.hoelder_constant,
            time_factor=None if factor is None else (lambda t: c * factor(t))
        )


def constant_kernel(value=1.0, bounds=PresetConfig.K_BOUNDS, eta=0.75, cls=InteriorKernel):
    value = float(value)
    return cls(
        evaluator=lambda t, x, y: np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1]), value),
        k1=bounds[0], k2=bounds[1], hoelder_constant=0.0, eta=eta,
        time_factor=lambda t: value, spatial=None, spatially_constant=True
    )


def sinusoidal_kernel(T, eta=0.75, amplitude=PresetConfig.SINUSOIDAL_AMPLITUDE,
                      bounds=PresetConfig.K_BOUNDS):
    """K = 1 + a·sin t, constante de Hölder a·T^{1-η}"""
    factor = lambda t: 1.0 + amplitude * math.sin(float(t))
    return InteriorKernel(
        evaluator=lambda t, x, y: np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1]),
                                          factor(t)),
        k1=bounds[0], k2=bounds[1], hoelder_constant=amplitude * T ** (1.0 - eta), eta=eta,
        time_factor=factor, spatial=None, spatially_constant=True, name="K sinusoïdal"
    )


def constant_potential(value=1.0, b0=PresetConfig.B_LOWER, b_sup=PresetConfig.B_SUP, eta=0.75):
    value = float(value)
    return BoundaryPotential(
        evaluator=lambda t, p: np.full(np.shape(p)[:-1], value),
        b0=b0, b_sup=b_sup, hoelder_constant=0.0, eta=eta,
        time_factor=lambda t: value, spatially_constant=True
    )


def _pair_evaluator(compiled):
    return lambda t, x, y: compiled(
        t=t, x1=np.asarray(x)[..., 0], x2=np.asarray(x)[..., 1],
        y1=np.asarray(y)[..., 0], y2=np.asarray(y)[..., 1]
    )


def expression_kernel(source, bounds, hoelder_constant, eta, cls=InteriorKernel):
    """Noyau défini par une expression textuelle en (t, x1, x2, y1, y2)"""
    compiled = compile_expression(source)
    time_factor = spatial = None
    split = compiled.time_factorization()
    if split is not None:
        temporal, space = split
        time_factor = lambda t: float(temporal(t=t))
        spatial = _pair_evaluator(space)
    if not compiled.time_dependent and hoelder_constant is None:
        hoelder_constant = 0.0
    return cls(
        evaluator=_pair_evaluator(compiled), k1=bounds[0], k2=bounds[1],
        hoelder_constant=hoelder_constant, eta=eta, time_factor=time_factor, spatial=spatial,
        spatially_constant=compiled.spatially_constant, name=source
    )


def expression_potential(source, b0, b_sup, hoelder_constant, eta):
    compiled = compile_expression(source, POTENTIAL_VARIABLES)
    evaluator = lambda t, p: compiled(t=t, x1=np.asarray(p)[..., 0], x2=np.asarray(p)[..., 1])
    time_factor = spatial = None
    split = compiled.time_factorization()
    if split is not None:
        temporal, space = split
        time_factor = lambda t: float(temporal(t=t))
        spatial = lambda p: space(x1=np.asarray(p)[..., 0], x2=np.asarray(p)[..., 1])
    if not compiled.time_dependent and hoelder_constant is None:
        hoelder_constant = 0.0
    return BoundaryPotential(
        evaluator=evaluator, b0=b0, b_sup=b_sup, hoelder_constant=hoelder_constant, eta=eta,
        time_factor=time_factor, spatial=spatial,
        spatially_constant=compiled.spatially_constant, name=source
    )


# ===== ENSEMBLE DE COEFFICIENTS =====

@dataclass(frozen=True, eq=False)
class CoefficientSet:
    interior: InteriorKernel
    boundary: BoundaryKernel
    potential: BoundaryPotential
    pack: ExponentPack
    CNs: float
    Cs: float
    preset: str = "constant"

    @property
    def time_dependent(self):
        return self.interior.time_dependent or self.boundary.time_dependent or self.potential.time_dependent

    def scaled(self, c):
        """Les trois familles de coefficients multipliées par c"""
        return replace(self, interior=self.interior.scaled(c), boundary=self.boundary.scaled(c),
                       potential=self.potential.scaled(c))


def build_coefficients(pack: ExponentPack, preset="constant", section=None) -> CoefficientSet:
    """Construit K, ζ, b à partir d'un préréglage nommé ou d'expressions"""
    eta = pack.eta
    k_bounds = (section.k1, section.k2) if section else PresetConfig.K_BOUNDS
    z_bounds = (section.zeta1, section.zeta2) if section else PresetConfig.ZETA_BOUNDS
    b0 = section.b0 if section else PresetConfig.B_LOWER
    b_sup = section.b_sup if section else PresetConfig.B_SUP

    if preset == "constant":
        interior = constant_kernel(1.0, k_bounds, eta)
    elif preset == "sinusoidal":
        interior = sinusoidal_kernel(pack.T, eta, bounds=k_bounds)
    elif preset == "custom":
        if section is None:
            raise InvalidInputError("Le préréglage 'custom' exige des expressions")
        interior = expression_kernel(section.interior, k_bounds, section.interior_hoelder, eta)
    else:
        raise InvalidInputError(f"Préréglage inconnu: {preset}")

    if preset == "custom":
        boundary = expression_kernel(section.boundary, z_bounds, section.boundary_hoelder, eta,
                                     cls=BoundaryKernel)
        potential = expression_potential(section.potential, b0, b_sup, section.potential_hoelder, eta)
    else:
        boundary = constant_kernel(1.0, z_bounds, eta, cls=BoundaryKernel)
        potential = constant_potential(1.0, b0, b_sup, eta)

    return CoefficientSet(interior, boundary, potential, pack,
                          compute_CNs(pack.N, pack.s), compute_Cs(pack.s), preset)


# ===== VALIDATION DES HYPOTHÈSES =====

@dataclass
class HypothesisCheck:
    name: str
    statement: str
    measured: float
    bound: Optional[float]
    passed: bool


@dataclass
class ValidationReport:
    entries: List[HypothesisCheck] = field(default_factory=list)
    samples: int = 0

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def failures(self):
        return [e.name for e in self.entries if not e.passed]

    def get(self, name):
        return next(e for e in self.entries if e.name == name)


def sample_unit_square_boundary(rng, n):
    """Points uniformes (en abscisse curviligne) sur le bord de (0,1)²"""
    arc = rng.uniform(0.0, 4.0, n)
    side, frac = np.floor(arc).astype(int) % 4, arc - np.floor(arc)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    directions = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return corners[side] + frac[:, None] * directions[side]


def _hoelder_ratio(values_t, values_tau, t, tau, eta):
    gap = np.abs(t - tau) ** eta
    return float(np.max(np.abs(values_t - values_tau) / gap))


def _kernel_checks(kernel, label, lower_name, upper_name, x, y, t, tau, eta):
    values = np.array([kernel(ti, x[i], y[i]) for i, ti in enumerate(t)], dtype=float)
    swapped = np.array([kernel(ti, y[i], x[i]) for i, ti in enumerate(t)], dtype=float)
    at_tau = np.array([kernel(ti, x[i], y[i]) for i, ti in enumerate(tau)], dtype=float)
    scale = max(1.0, float(np.max(np.abs(values))))

    asym = float(np.max(np.abs(values - swapped)))
    checks = [
        HypothesisCheck(f"symétrie {label}", f"{label}(t,x,y) = {label}(t,y,x)",
                        asym, 1e-12 * scale, asym <= 1e-12 * scale),
        HypothesisCheck(f"{lower_name} ≤ {label}", f"inf {label} ≥ {lower_name}",
                        float(values.min()), kernel.k1, values.min() >= kernel.k1 and kernel.k1 > 0),
        HypothesisCheck(f"{label} ≤ {upper_name}", f"sup {label} ≤ {upper_name}",
                        float(values.max()), kernel.k2, values.max() <= kernel.k2 and kernel.k1 < kernel.k2),
    ]
    ratio = _hoelder_ratio(values, at_tau, t, tau, eta)
    bound = kernel.hoelder_constant
    checks.append(HypothesisCheck(
        f"Hölder {label} en t", f"|{label}(t)-{label}(τ)| ≤ C|t-τ|^η",
        ratio, bound, bool(np.isfinite(ratio)) and (bound is None or ratio <= bound * (1 + 1e-9) + 1e-14)
    ))
    return checks


def validate_hypotheses(coefficients: CoefficientSet, samples=FitConfig.HYPOTHESIS_SAMPLES,
                        seed=0) -> ValidationReport:
    """Contrôle échantillonné: symétrie, bornes, inf b > b_0 et Hölder en t"""
    rng = np.random.default_rng(seed)
    pack = coefficients.pack
    t = rng.uniform(0.0, pack.T, samples)
    tau = rng.uniform(0.0, pack.T, samples)
    tau = np.where(np.abs(t - tau) < 1e-9, (t + 0.5 * pack.T) % pack.T, tau)

    report = ValidationReport(samples=samples)
    x, y = rng.uniform(0.0, 1.0, (samples, 2)), rng.uniform(0.0, 1.0, (samples, 2))
    report.entries += _kernel_checks(coefficients.interior, "K", "k1", "k2", x, y, t, tau, pack.eta)

    xb, yb = sample_unit_square_boundary(rng, samples), sample_unit_square_boundary(rng, samples)
    report.entries += _kernel_checks(coefficients.boundary, "ζ", "ζ1", "ζ2", xb, yb, t, tau, pack.eta)

    potential = coefficients.potential
    b_t = np.array([potential(ti, xb[i]) for i, ti in enumerate(t)], dtype=float)
    b_tau = np.array([potential(ti, xb[i]) for i, ti in enumerate(tau)], dtype=float)
    report.entries.append(HypothesisCheck(
        "inf b > b_0", "inf b(t,P) > b_0 > 0", float(b_t.min()), potential.b0,
        bool(b_t.min() > potential.b0 > 0)
    ))
    report.entries.append(HypothesisCheck(
        "sup b ≤ b_sup", "b bornée", float(b_t.max()), potential.b_sup, bool(b_t.max() <= potential.b_sup)
    ))
    ratio = _hoelder_ratio(b_t, b_tau, t, tau, pack.eta)
    bound = potential.hoelder_constant
    report.entries.append(HypothesisCheck(
        "Hölder b en t", "|b(t)-b(τ)| ≤ C|t-τ|^η", ratio, bound,
        bool(np.isfinite(ratio)) and (bound is None or ratio <= bound * (1 + 1e-9) + 1e-14)
    ))

    for entry in report.entries:
        if not entry.passed:
            print_status(f"Hypothèse violée: {entry.name} (mesuré {entry.measured:.6g})", 'warning')
    return report
