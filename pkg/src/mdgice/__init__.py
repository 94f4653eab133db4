"""Moving space-time discontinuous Galerkin solver with interface conservation
enforcement for 1D conservation laws."""
__version__ = "0.1.0"
