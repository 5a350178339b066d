"""Simulation and verification tools for non-simple CLE on Liouville quantum gravity.

Modules
-------
formulas       closed-form parameter relations
stable_levy    truncated alpha'-stable jump processes and ladder indices
looptree       discrete stable looptrees, boundary measure, rerooting
fragmentation  boundary-length process, gasket tree, area identity
lattice        divide-and-color percolation arm exponents
cli            command-line front end
"""
from . import formulas

__version__ = "0.1.0"
__all__ = ["formulas", "__version__"]
