"""Benchmarking classical optimizers on the truncated Variational Hamiltonian
Ansatz (tVHA) with exact and shot-sampled energies."""

from tvha_bench.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
