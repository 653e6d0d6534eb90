"""
Configuration centralisée du solveur Wentzell fractionnaire
Valeurs par défaut des calculs; les réglages d'exécution se surchargent par l'environnement
"""
import os
from pathlib import Path

# Dossier racine du projet
ROOT_DIR = Path(__file__).parent.parent


def _env_bool(name, default):
    return os.environ.get(name, default).lower() in ("1", "true", "yes")


# Géométrie
class GeometryConfig:
    """Maillages du carré unité et des préfractales"""

    DEFAULT_H = 0.125
    SPACE_DIMENSION = 2
    BOUNDARY_DIMENSION = 1.0

    # Tolérance relative des contrôles de partition et de poids μ
    MEASURE_RTOL = 1e-12
    # Tolérance géométrique (inclusion de sommets, localisation)
    POINT_TOL = 1e-10

    PREFRACTAL_DEPTH = 5
    REFINEMENT_H = (0.25, 0.125, 0.0625)
    DSET_RADII_COUNT = 8


# Quadratures
class QuadratureConfig:
    """Ordres des règles de quadrature de l'assemblage"""

    SINGULAR_ORDER = 5
    NEAR_ORDER = 5
    FAR_ORDER = 3
    NEAR_FACTOR = 2.0
    BOUNDARY_ORDER = 6
    MIN_SINGULAR_ORDER = 2

    # Évaluation ponctuelle de l'opérateur régional (secteurs angulaires)
    ANGULAR_ORDER = 3
    RADIAL_ORDER = 8
    GREEN_ORDER = 4

    # Constante C_s
    CS_ABS_TOL = 1e-12
    CS_LIMIT = 200

    # Taille des paquets de paires d'éléments par tâche
    PAIR_CHUNK = 256


# Solveurs
class SolverConfig:
    """Évolution linéaire et itération de Picard"""

    DT = 0.005
    HORIZON = 0.2
    PICARD_TOL = 1e-10
    MAX_ITER = 50
    KAPPA = 0.1
    ETA = 0.75
    BLOWUP_CAP = 1e6
    TOL_POS = 1e-8
    IMEX_REFINEMENT = 4
    MAX_RESTARTS = 20
    WINDOW_NODES = 10


# Ajustements et diagnostics
class FitConfig:
    """Fenêtres d'ajustement et budgets d'échantillonnage"""

    FIT_WINDOW = (0.02, 0.2)
    # Demi-décade minimale
    MIN_WINDOW_RATIO = 10 ** 0.5
    NASH_SAMPLES = 1000
    TRIALS = 50
    HYPOTHESIS_SAMPLES = 200
    POWER_ITERATIONS = 60
    PRINCIPAL_VALUE_RTOL = 1e-6
    # Contrôles sous raffinement
    ULTRA_SAFETY = 10.0
    COERCIVITY_SPREAD = 1.2
    NASH_SPREAD = 2.0
    RESIDUAL_ORDER = 0.8
    POSITIVITY_FLOOR = 1e-14


# Préréglages des coefficients
class PresetConfig:
    """Coefficients nommés sélectionnables dans la configuration"""

    PRESETS = ("constant", "sinusoidal", "custom")
    SINUSOIDAL_AMPLITUDE = 0.25

    # Bornes déclarées par défaut
    K_BOUNDS = (0.5, 1.5)
    ZETA_BOUNDS = (0.5, 1.5)
    B_LOWER = 0.5
    B_SUP = 1.5


# Exécution
class RuntimeConfig:
    """Réglages d'exécution (journalisation, parallélisme)"""

    LOG_LEVEL = os.environ.get("WENTZELL_LOG_LEVEL", "INFO")
    MAX_WORKERS = int(os.environ.get("WENTZELL_THREADS", min(8, os.cpu_count() or 1)))
    DETERMINISTIC = _env_bool("WENTZELL_DETERMINISTIC", "true")

    SCHEMA_VERSION = 1
    DEFAULT_OUTPUT_DIR = "results"
    CSV_FLOAT_FORMAT = "%.15g"
