"""Numerical laboratory for the 1D symmetric exclusion process with slowed reservoirs.

Subpackages map onto the main objects of the model:

* :mod:`ssep_lab.spectral` -- Robin Sturm-Liouville eigenbasis, heat semigroup,
  inverse Laplacian and the test-function space checks.
* :mod:`ssep_lab.lattice` -- exact-in-law kinetic Monte Carlo of the particle
  system plus a small-n exact-chain oracle.
* :mod:`ssep_lab.hydro` -- discrete and continuum mean-density evolution.
* :mod:`ssep_lab.correlations` -- two-point correlation ODE on the triangle.
* :mod:`ssep_lab.fluctuations` -- density fluctuation field, martingale terms
  and limit covariance formulas.
* :mod:`ssep_lab.cli` -- the ``ssep`` command line front end.
"""

__version__ = "0.1.0"
