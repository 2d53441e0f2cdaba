"""Berwald scalar curvature toolkit.

Curvature of Finsler metrics from Taylor jets: spray, Berwald and Landsberg
curvatures, mean Berwald curvature, S-curvature, classification and an
identity verification suite.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("berwald-scalar")
except PackageNotFoundError:
    # Package is not installed (development mode)
    __version__ = "0.0.0+dev"

__all__ = ["__version__"]
