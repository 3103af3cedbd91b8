"""Poincare, log-Sobolev and Phi-Sobolev constants for joint and
mixture distributions arising from iterative sampling algorithms.

Subpackages:

* ``phi``        convex generators, Phi-entropies, exact identities
* ``kernels``    conditional families (Langevin step, proximal pair,
                 exact-HMC Gaussian flow) and score identities
* ``criteria``   two-scale variance / MGF criterion checks
* ``constants``  closed-form constants (zeta, xi, products,
                 convolutions) and the three recursions
* ``samplers``   chain execution with counter-based per-chain streams
* ``estimators`` empirical certificates and estimation-error splits
* ``cli``        JSON-config batch front-end
* ``backend``    numba-jitted hot kernels with a numpy fallback
"""

from . import backend, constants, criteria, estimators, kernels, linalg, phi, rng, samplers

__all__ = [
    "backend", "constants", "criteria", "estimators", "kernels",
    "linalg", "phi", "rng", "samplers",
]

__version__ = "0.1.0"
