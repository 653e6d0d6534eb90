"""
Package d'utilitaires communs du solveur Wentzell fractionnaire
"""

from .common import (
    OutputPaths,
    configure_logging,
    print_status,
    print_section,
    get_system_info,
    safe_json_dump,
    safe_json_load,
    write_csv,
    write_coo,
    read_coo,
    config_hash
)

__all__ = [
    'OutputPaths',
    'configure_logging',
    'print_status',
    'print_section',
    'get_system_info',
    'safe_json_dump',
    'safe_json_load',
    'write_csv',
    'write_coo',
    'read_coo',
    'config_hash'
]
