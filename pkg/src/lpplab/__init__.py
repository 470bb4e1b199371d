"""lpplab: lattice last passage percolation and directed polymer lab.

Library layout:

- ``boxes``: lattice-box geometry, crossing relations, Markov configurations,
  and hypothesis validators for the invariance statements.
- ``environments``: weight grids, seeded samplers, exhaustive enumerators.
- ``partition``: single- and multi-point partition functions, geodesics,
  quenched sampling, determinant route.
- ``rsk``: integer partitions, the staircase encoding map, scrambled and
  moon-polyomino correspondences with bijectivity verification.
- ``verify``: exact generating-series certificates, conditional-independence
  checks, Monte Carlo two-sample invariance tests, negative controls.
- ``cli``: scenario-driven command line front end.
"""

__version__ = "0.1.0"

from .boxes import Box, classify, CrossingKind  # noqa: F401
from .semiring import BOTTOM, NumericMode, SemiringTag  # noqa: F401
