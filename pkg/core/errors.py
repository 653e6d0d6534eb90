# -*- coding: utf-8 -*-
"""
Hiérarchie des erreurs du solveur

Deux familles: les entrées invalides (code de sortie 1) et les échecs numériques
(code de sortie 2, accompagnés d'un enregistrement lisible par machine).
"""

from typing import Any, Dict, List, Optional, Sequence


class WentzellError(Exception):
    """Erreur de base du projet"""

    def to_record(self) -> Dict[str, Any]:
        return {"type": type(self).__name__, "message": str(self)}


# ===== ENTRÉES INVALIDES =====

class InvalidInputError(WentzellError, ValueError):
    """Entrée ou configuration rejetée avant tout calcul"""


class InvalidConfigError(InvalidInputError):
    """Fichier de configuration illisible ou non conforme au schéma"""


class MeshSizeError(InvalidInputError):
    """Pas de maillage h hors de (0, 1] ou 1/h non entier"""


class DSetMismatchError(InvalidInputError):
    """Dimension d incompatible avec la frontière construite"""


class ExponentConstraintError(InvalidInputError):
    """Une ou plusieurs inégalités du jeu d'exposants sont violées"""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("Contraintes violées: " + "; ".join(self.violations))

    def to_record(self):
        record = super().to_record()
        record["violations"] = self.violations
        return record


class InfeasibleExponentError(InvalidInputError):
    """Exposant de croissance b_w impossible pour (p, λ)"""


class SingularNormalizationError(InvalidInputError):
    """Constante de normalisation non définie (s = 1/2 pour C_s)"""


class QuadratureConfigError(InvalidInputError):
    """Ordres de quadrature insuffisants"""


class OffGridTimeError(InvalidInputError):
    """Instant hors de la grille temporelle (pas d'interpolation)"""


class WindowTooNarrowError(InvalidInputError):
    """Fenêtre d'ajustement plus étroite qu'une demi-décade"""


class DivergentIntegralError(InvalidInputError):
    """Intégrale B divergente (a ≥ 1 ou b_w ≥ a)"""


class ExpressionError(InvalidInputError):
    """Expression de noyau hors de la grammaire autorisée"""


class HypothesisViolation(InvalidInputError):
    """Hypothèse structurelle violée par les coefficients"""

    def __init__(self, hypothesis: str, message: str):
        self.hypothesis = hypothesis
        super().__init__(f"{hypothesis}: {message}")

    def to_record(self):
        record = super().to_record()
        record["hypothesis"] = self.hypothesis
        return record


# ===== ÉCHECS NUMÉRIQUES =====

class NumericalFailure(WentzellError, RuntimeError):
    """Échec d'un calcul sur une entrée valide"""


class GeometryError(NumericalFailure):
    """Maillage non conforme, frontière ouverte ou famille non emboîtée"""


class CoercivityFailure(NumericalFailure):
    """Forme discrète non définie positive"""

    def __init__(self, message: str, beta: Optional[float] = None, t: Optional[float] = None):
        self.beta = beta
        self.t = t
        super().__init__(message)

    def to_record(self):
        record = super().to_record()
        record.update({"beta": self.beta, "t": self.t})
        return record


class PrincipalValueFailure(NumericalFailure):
    """Extrapolation en ε non convergente"""

    def __init__(self, message: str, values: Sequence[float] = ()):
        self.values = [float(v) for v in values]
        super().__init__(message)

    def to_record(self):
        record = super().to_record()
        record["values"] = self.values
        return record


class NonContractionError(NumericalFailure):
    """Itération de Picard non convergente dans le budget"""

    def __init__(self, message: str, history: Sequence[float]):
        self.history: List[float] = [float(v) for v in history]
        super().__init__(message)

    def to_record(self):
        record = super().to_record()
        record["history"] = self.history
        return record


class LeavesWeightedSpaceError(NumericalFailure):
    """Un itéré de Picard quitte la boule t^{b_w}‖u(t)‖ < 2κ"""

    def __init__(self, message: str, weighted_norm: float, bound: float, iteration: int):
        self.weighted_norm = float(weighted_norm)
        self.bound = float(bound)
        self.iteration = iteration
        super().__init__(message)

    def to_record(self):
        record = super().to_record()
        record.update({
            "weighted_norm": self.weighted_norm,
            "bound": self.bound,
            "iteration": self.iteration
        })
        return record
