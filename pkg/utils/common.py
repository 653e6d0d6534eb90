# -*- coding: utf-8 -*-
"""
Utilitaires communs pour éviter la duplication de code
Journalisation formatée, chemins de sortie, exports JSON/CSV/COO
"""

import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from config.settings import RuntimeConfig

# ===== UTILITAIRES DE LOGGING =====

logger = logging.getLogger("wentzell")

_LEVELS = {
    'info': logging.INFO,
    'success': logging.INFO,
    'process': logging.INFO,
    'data': logging.INFO,
    'file': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR,
    'debug': logging.DEBUG
}

_ICONS = {
    'info': '📋',
    'success': '✅',
    'warning': '⚠️',
    'error': '❌',
    'process': '🔄',
    'data': '📊',
    'file': '📁',
    'debug': '🔍'
}


def configure_logging(level=None):
    """Installe un gestionnaire console unique sur le logger du projet"""
    level = level or RuntimeConfig.LOG_LEVEL
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    logger.propagate = False
    return logger


def print_status(message, level='info'):
    """Affichage formaté avec icônes"""
    icon = _ICONS.get(level, '💬')
    logger.log(_LEVELS.get(level, logging.INFO), f"{icon} {message}")


def print_section(title):
    """Affiche un titre de section"""
    logger.info(f"\n🎯 {title}")
    logger.info("=" * (len(title) + 4))


def get_system_info():
    """Retourne les informations système consignées dans le manifeste"""
    return {
        'python_version': sys.version.split()[0],
        'platform': sys.platform,
        'machine': platform.machine(),
        'numpy': np.__version__,
        'pandas': pd.__version__
    }

# ===== GESTION DES CHEMINS =====

class OutputPaths:
    """Dossier de sortie d'une exécution et registre des fichiers écrits"""

    def __init__(self, root_dir):
        self.root = Path(root_dir)
        self.written = []

    def ensure(self):
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def file(self, filename):
        self.ensure()
        return self.root / filename

    def register(self, path):
        path = Path(path)
        name = str(path.relative_to(self.root)) if path.is_relative_to(self.root) else str(path)
        if name not in self.written:
            self.written.append(name)
        return path

# ===== UTILITAIRES D'EXPORT/IMPORT =====

def safe_json_dump(data, filepath, encoding='utf-8'):
    """Sauvegarde JSON sécurisée"""
    try:
        with open(filepath, 'w', encoding=encoding) as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        return True, f"Sauvegardé: {filepath}"
    except Exception as e:
        return False, f"Erreur sauvegarde: {e}"


def safe_json_load(filepath, encoding='utf-8'):
    """Chargement JSON sécurisé"""
    try:
        with open(filepath, 'r', encoding=encoding) as f:
            return True, json.load(f)
    except FileNotFoundError:
        return False, "Fichier non trouvé"
    except Exception as e:
        return False, f"Erreur chargement: {e}"


def write_csv(rows, filepath, columns=None):
    """Écrit un tableau CSV (en-tête d'une ligne, séparateur décimal '.')"""
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows, columns=columns)
    frame.to_csv(
        filepath,
        index=False,
        float_format=RuntimeConfig.CSV_FLOAT_FORMAT,
        lineterminator="\n"
    )
    return Path(filepath)


def write_coo(matrix, filepath):
    """Exporte une matrice au format coordonnées: 'ligne colonne valeur' par ligne"""
    dense = np.asarray(matrix)
    rows, cols = np.nonzero(dense)
    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(f"# {dense.shape[0]} {dense.shape[1]} {rows.size}\n")
        for i, j in zip(rows, cols):
            f.write(f"{i} {j} {dense[i, j]:.17g}\n")
    return Path(filepath)


def read_coo(filepath):
    """Relit une matrice exportée par write_coo"""
    with open(filepath, 'r', encoding='utf-8') as f:
        header = f.readline().lstrip('#').split()
        n_rows, n_cols = int(header[0]), int(header[1])
        matrix = np.zeros((n_rows, n_cols))
        for line in f:
            i, j, value = line.split()
            matrix[int(i), int(j)] = float(value)
    return matrix


def config_hash(config_dict):
    """Empreinte SHA-256 canonique d'une configuration"""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
