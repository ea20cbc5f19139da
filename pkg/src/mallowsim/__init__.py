"""Simulation and exact verification of descent statistics of Mallows permutations.

The package has three layers:

* exact small-n machinery (:mod:`mallowsim.perms`, :mod:`mallowsim.exact_law`,
  :mod:`mallowsim.coupling`) that enumerates S_n and checks identities to
  floating-point accuracy;
* samplers and regenerative-process tooling for large n
  (:mod:`mallowsim.sampling`, :mod:`mallowsim.regen`);
* Monte Carlo experiments with their reference bounds
  (:mod:`mallowsim.experiments`) and a CLI (:mod:`mallowsim.cli`) that emits
  JSON/CSV reports.
"""

from .perms import (
    IndexSet,
    Permutation,
    descent_count,
    descent_indicator,
    from_one_line,
    identity,
    induced,
    inverse,
    inversions,
    relative_order,
    reverse,
    two_sided_descents,
)
from .exact_law import MallowsParams, enumerate_law
from .sampling import RngStream, sample_finite

__all__ = [
    "IndexSet",
    "MallowsParams",
    "Permutation",
    "RngStream",
    "descent_count",
    "descent_indicator",
    "enumerate_law",
    "from_one_line",
    "identity",
    "induced",
    "inverse",
    "inversions",
    "relative_order",
    "reverse",
    "sample_finite",
    "two_sided_descents",
]

__version__ = "0.1.0"
