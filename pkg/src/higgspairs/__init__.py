"""Poincare polynomials of rank-2 Higgs-pair moduli and a doubly coupled
vortex solver on a flat-torus lattice."""

__all__ = ["series", "stability", "strata", "betti", "vortex", "cli"]
__version__ = "0.1.0"
