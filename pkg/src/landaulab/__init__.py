"""Numerical laboratory for the Landau-Coulomb entropy dissipation.

Submodules: ``kernels``, ``quadrature``, ``densities``, ``functionals``,
``geometry``, ``counterexample`` and ``experiments``.  They are loaded on
first attribute access so that the thread count of the compiled kernels can
still be set beforehand.
"""

__version__ = "0.1.0"

_SUBMODULES = ("counterexample", "densities", "engine", "errors", "experiments",
               "functionals", "geometry", "kernels", "profile", "quadrature")


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(name)
