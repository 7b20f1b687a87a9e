"""Exact-arithmetic workbench for canonical bases of two-parameter-free
q-deformations of symmetric group algebras realized inside Hecke tensor
products, together with the crystal-base and positivity machinery needed to
check the structural claims made about them at desk scale."""

__version__ = "0.1.0"
