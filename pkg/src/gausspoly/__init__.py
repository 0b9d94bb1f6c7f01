"""Numerical laboratory for the norm of random Gaussian polytopes.

The unit ball is ``P = conv{+-X_1, ..., +-X_N}`` for i.i.d. standard
Gaussian ``X_j`` in ``R^n``.  Submodules:

``ensemble``   reproducible sampling of the generator matrix ``A``
``numerics``   Jacobi eigen/singular value kernels, subspaces, projectors
``l1norm``     the polytope norm as an exact L1-minimization
``geometry``   in-radius sandwich, compressibility, singular value events
``grassmann``  nets on the Grassmannian and projection decompositions
``cotype``     sign averages, cotype estimates, dyadic statistics
``embedding``  l_inf embedding constructions and distortion certificates
``experiments`` seeded batch runs behind the ``gausspoly`` command
"""
__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
from .ensemble import Ensemble, EnsembleConfig, sample_ensemble  # noqa: E402
from .l1norm import minkowski_norm  # noqa: E402

__all__ = ["BACKEND", "Ensemble", "EnsembleConfig", "sample_ensemble", "minkowski_norm", "__version__"]
