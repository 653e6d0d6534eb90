#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Point d'entrée en ligne de commande du solveur Wentzell fractionnaire

Codes de sortie: 0 succès, 1 configuration ou entrée invalide,
2 échec numérique (failure.json écrit dans le dossier de sortie)
"""

import argparse
import sys
from pathlib import Path

# Ajout du chemin du projet au PYTHONPATH
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config.run_config import load_run_config
from config.settings import RuntimeConfig
from core.errors import InvalidInputError, NumericalFailure
from core.verification import VerificationOrchestrator, build_context
from utils.common import (
    OutputPaths, config_hash, configure_logging, get_system_info, print_section, print_status, safe_json_dump
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

COMMANDS = ("assemble", "evolve", "semilinear", "verify", "fit-ultra", "green-check")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wentzell",
        description="Laplacien fractionnaire régional avec condition de Wentzell - calculs et vérifications",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemples d'utilisation:
  python main.py verify --config run.json                 # Suite complète
  python main.py evolve --config run.json --out results   # Trajectoire linéaire
  python main.py green-check --config run.json --threads 4
        """
    )
    parser.add_argument('subcommand', choices=COMMANDS + ("all",),
                        help="Sous-commande ('all' exécute la liste 'commands' de la configuration)")
    parser.add_argument('--config', required=True, help='Fichier de configuration JSON')
    parser.add_argument('--out', default=None, help='Dossier de sortie (remplace output_dir)')
    parser.add_argument('--seed', type=int, default=None, help='Graine aléatoire (remplace seed)')
    parser.add_argument('--threads', type=int, default=None, help='Nombre maximal de threads')
    parser.add_argument('--deterministic', action='store_true',
                        help='Réduction dans un ordre fixe (sorties identiques octet par octet)')
    return parser


def _apply_overrides(config, args):
    updates = {}
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.seed is not None:
        if args.seed < 0:
            raise InvalidInputError(f"Graine négative: {args.seed}")
        updates["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise InvalidInputError(f"--threads doit être ≥ 1 ({args.threads})")
        updates["threads"] = args.threads
    if args.deterministic:
        updates["deterministic"] = True
    return config.model_copy(update=updates) if updates else config


def _write_manifest(outputs: OutputPaths, config, commands, results, status):
    manifest = {
        "config_sha256": config_hash(config.model_dump(mode="json")),
        "schema_version": config.schema_version,
        "commands": list(commands),
        "status": status,
        "results": {name: result.get("success") for name, result in results.items()},
        "files": list(outputs.written),
        "system": get_system_info()
    }
    ok, message = safe_json_dump(manifest, outputs.file("manifest.json"))
    print_status(message, 'file' if ok else 'error')


def run(argv=None) -> int:
    """Exécute la ligne de commande et renvoie le code de sortie"""
    args = build_parser().parse_args(argv)
    configure_logging(RuntimeConfig.LOG_LEVEL)

    try:
        config = _apply_overrides(load_run_config(args.config), args)
    except InvalidInputError as e:
        print_status(str(e), 'error')
        return EXIT_INVALID

    commands = config.commands if args.subcommand == "all" else [args.subcommand]
    outputs = None
    results = {}
    try:
        context = build_context(config)
        outputs = context.outputs
        orchestrator = VerificationOrchestrator(context)
        for command in commands:
            results[command] = orchestrator.run(command)
    except InvalidInputError as e:
        print_status(f"Entrée invalide: {e}", 'error')
        return EXIT_INVALID
    except NumericalFailure as e:
        print_status(f"Échec numérique: {e}", 'error')
        outputs = outputs or OutputPaths(config.output_dir)
        record = {**e.to_record(), "commands": list(commands)}
        safe_json_dump(record, outputs.file("failure.json"))
        outputs.register(outputs.file("failure.json"))
        _write_manifest(outputs, config, commands, results, "failure")
        return EXIT_NUMERICAL

    _write_manifest(outputs.ensure(), config, commands, results, "success")
    print_section("Résumé final")
    for command, result in results.items():
        level = 'success' if result["success"] else 'warning'
        print_status(f"{command}: {'réussi' if result['success'] else 'propriétés en échec'}", level)
    return EXIT_OK


def main():
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print_status("Exécution interrompue par l'utilisateur", 'warning')
        sys.exit(EXIT_INVALID)


if __name__ == "__main__":
    main()
