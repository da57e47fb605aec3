"""Domains of closure for singular almost-Riemannian Laplacians.

The package mechanizes a limit-operator analysis: classify singular points of
a local chart, build the Laplacian, conjugate by weights, freeze coefficients
at singular points and decide left-invertibility of the resulting
constant-coefficient operators, with numerical cross-checks.
"""

__version__ = "0.1.0"
