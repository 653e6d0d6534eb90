# -*- coding: utf-8 -*-
"""
Schéma de la configuration d'exécution (fichier JSON versionné)
Validation par modèles Pydantic; les clés inconnues sont rejetées
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.settings import (
    FitConfig, GeometryConfig, PresetConfig, QuadratureConfig, RuntimeConfig, SolverConfig
)
from core.errors import InvalidConfigError

Command = Literal["assemble", "evolve", "semilinear", "verify", "fit-ultra", "green-check"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainSection(_Section):
    """Domaine et famille préfractale"""
    h: float = Field(GeometryConfig.DEFAULT_H, gt=0, le=1, description="Pas du maillage, 1/h entier")
    prefractal_depth: int = Field(GeometryConfig.PREFRACTAL_DEPTH, ge=1, le=8)
    refinement_h: List[float] = Field(default_factory=lambda: list(GeometryConfig.REFINEMENT_H), min_length=2,
                                      description="Pas décroissants des contrôles sous raffinement")

    @model_validator(mode="after")
    def _check_refinement(self):
        steps = self.refinement_h
        if any(not 0 < h <= 1 for h in steps):
            raise ValueError("refinement_h: chaque pas dans (0, 1]")
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise ValueError("refinement_h doit être strictement décroissant")
        return self


class ExponentSection(_Section):
    """Entrées du jeu d'exposants (N = 2 fixé par le carré)"""
    s: float = Field(0.75, gt=0, lt=1)
    d: float = Field(GeometryConfig.BOUNDARY_DIMENSION, gt=0, le=2)
    p: float = Field(3.0, description="Exposant de la non-linéarité")
    b_w: Optional[float] = Field(None, description="Poids de la solution douce; défaut 1/(p-1) - λ/(4p)")
    kappa: float = Field(SolverConfig.KAPPA)
    eta: float = Field(SolverConfig.ETA)


class CoefficientSection(_Section):
    """Noyaux K, ζ et potentiel b"""
    preset: Literal["constant", "sinusoidal", "custom"] = "constant"
    interior: Optional[str] = Field(None, description="K(t,x1,x2,y1,y2)")
    boundary: Optional[str] = Field(None, description="ζ(t,x1,x2,y1,y2)")
    potential: Optional[str] = Field(None, description="b(t,x1,x2)")
    k1: float = Field(PresetConfig.K_BOUNDS[0], gt=0)
    k2: float = Field(PresetConfig.K_BOUNDS[1], gt=0)
    zeta1: float = Field(PresetConfig.ZETA_BOUNDS[0], gt=0)
    zeta2: float = Field(PresetConfig.ZETA_BOUNDS[1], gt=0)
    b0: float = Field(PresetConfig.B_LOWER, gt=0)
    b_sup: float = Field(PresetConfig.B_SUP, gt=0)
    interior_hoelder: Optional[float] = Field(None, ge=0)
    boundary_hoelder: Optional[float] = Field(None, ge=0)
    potential_hoelder: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _check_custom(self):
        if self.preset == "custom":
            missing = [name for name in ("interior", "boundary", "potential")
                       if getattr(self, name) is None]
            if missing:
                raise ValueError(f"préréglage 'custom' sans expression pour: {', '.join(missing)}")
        if not self.k1 < self.k2:
            raise ValueError("k1 < k2 requis")
        if not self.zeta1 < self.zeta2:
            raise ValueError("zeta1 < zeta2 requis")
        return self


class GridSection(_Section):
    """Grille temporelle uniforme de [0, T]"""
    dt: float = Field(SolverConfig.DT, gt=0)
    T: float = Field(SolverConfig.HORIZON, gt=0)

    @model_validator(mode="after")
    def _check_steps(self):
        if self.dt > self.T:
            raise ValueError("dt doit être ≤ T")
        return self


class QuadratureSection(_Section):
    singular_order: int = Field(QuadratureConfig.SINGULAR_ORDER, ge=1)
    near_order: int = Field(QuadratureConfig.NEAR_ORDER, ge=1)
    far_order: int = Field(QuadratureConfig.FAR_ORDER, ge=1)
    near_factor: float = Field(QuadratureConfig.NEAR_FACTOR, ge=0)
    boundary_order: int = Field(QuadratureConfig.BOUNDARY_ORDER, ge=1)
    angular_order: int = Field(QuadratureConfig.ANGULAR_ORDER, ge=1)


class ToleranceSection(_Section):
    picard_tol: float = Field(SolverConfig.PICARD_TOL, gt=0)
    max_iter: int = Field(SolverConfig.MAX_ITER, ge=1)
    tol_pos: float = Field(SolverConfig.TOL_POS, ge=0)
    blowup_cap: float = Field(SolverConfig.BLOWUP_CAP, gt=0)
    imex_refinement: int = Field(SolverConfig.IMEX_REFINEMENT, ge=1)
    fit_window: Tuple[float, float] = FitConfig.FIT_WINDOW
    smoothing_window: Tuple[float, float] = FitConfig.FIT_WINDOW
    nash_samples: int = Field(FitConfig.NASH_SAMPLES, ge=1)
    trials: int = Field(FitConfig.TRIALS, ge=1)
    hypothesis_samples: int = Field(FitConfig.HYPOTHESIS_SAMPLES, ge=2)

    @model_validator(mode="after")
    def _check_window(self):
        for name in ("fit_window", "smoothing_window"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise ValueError(f"{name} doit vérifier 0 < début < fin")
        return self


class InitialDatumSection(_Section):
    expression: str = Field("0.05", description="φ(x1, x2)")
    blowup_scale: float = Field(100.0, gt=0)


class RunConfig(_Section):
    """Configuration complète d'une exécution"""
    schema_version: Literal[1] = RuntimeConfig.SCHEMA_VERSION
    domain: DomainSection = Field(default_factory=DomainSection)
    exponents: ExponentSection = Field(default_factory=ExponentSection)
    coefficients: CoefficientSection = Field(default_factory=CoefficientSection)
    grid: GridSection = Field(default_factory=GridSection)
    quadrature: QuadratureSection = Field(default_factory=QuadratureSection)
    tolerances: ToleranceSection = Field(default_factory=ToleranceSection)
    initial_datum: InitialDatumSection = Field(default_factory=InitialDatumSection)
    commands: List[Command] = Field(default_factory=lambda: ["verify"])
    output_dir: str = RuntimeConfig.DEFAULT_OUTPUT_DIR
    deterministic: bool = RuntimeConfig.DETERMINISTIC
    seed: int = Field(0, ge=0)
    threads: Optional[int] = Field(None, ge=1)


def load_run_config(path) -> RunConfig:
    """Lit et valide un fichier de configuration JSON"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidConfigError(f"Fichier de configuration introuvable: {path}")
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidConfigError(f"Configuration illisible ({path}): {e}")

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise InvalidConfigError(f"Configuration invalide: {details}")
