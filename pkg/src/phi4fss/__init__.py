"""Finite-size-scaling laboratory for the n-component |phi|^4 model on periodic lattices.

Modules
-------
lattice     torus geometry, Fourier transforms, operator symbols, Green's functions
frd         finite-range covariance decompositions (window and polynomial backends)
ptfamily    positive polynomial family used by the finite-range backend
rgflow      perturbative coupling flows and critical-point shooting
predictor   closed-form finite-size-scaling predictions
zeromode    zero-mode integral reductions and brute-force oracles
montecarlo  Metropolis / Fourier-accelerated HMC samplers and observables
cli         command-line front end (decompose | flow | predict | mc | verify | report)
"""

__version__ = "0.1.0"
