"""Numerical entropy of dynamical systems on compact and non-compact spaces.

Modules:

- ``dynamics``: spaces, maps, metrics, orbits and the Bowen metric
- ``cover_entropy``: open coverings, refinements and exact minimal subcovers
- ``bowen``: spanning-set counts and the metric entropy estimator
- ``measure``: partitions, invariant measures and partition entropy
- ``linear``: multiplicative Jordan decomposition and recurrence
- ``heisenberg``: the Heisenberg group, its automorphisms and semiconjugacy checks
- ``experiments``, ``presets``, ``cli``: the experiment harness
"""

from .errors import (CapabilityError, ConsistencyError, CoverageError, DivergenceError,
                     DomainError, EntropyLabError)

__version__ = "0.1.0"

__all__ = ["EntropyLabError", "DomainError", "DivergenceError", "CoverageError",
           "CapabilityError", "ConsistencyError", "__version__"]
