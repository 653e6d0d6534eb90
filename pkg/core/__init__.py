"""
Package core: géométrie, formes de Dirichlet, évolution et problème semi-linéaire

Les sous-modules s'importent explicitement (core.geometry, core.assembly, ...).
"""
