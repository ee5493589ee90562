"""Scattering diagrams with matrix-valued wall functions.

Submodules:

``series``        truncated formal series and their rings
``lie``           the vertex Lie algebra, BCH and the group action
``scattering``    walls, path-ordered products and order-by-order completion
``perturbation``  completion by generic translates of factored lines
``tropical``      rational tropical curves and their weighted counts
``gw``            invariants read off wall functions
``wcf``           groupoid rings and 2d-4d wall-crossing identities
``documents``     plain-text input and output
"""

from .lie import GroupElement, LieElement, bch, bracket
from .perturbation import StandardDiagram, perturbed_completion
from .scattering import ScatteringDiagram, Wall, check_consistency, complete_ks
from .series import RingSpec, Series
from .tropical import count_tropical, oracle_enumerate

__all__ = [
    "GroupElement", "LieElement", "RingSpec", "ScatteringDiagram", "Series", "StandardDiagram",
    "Wall", "bch", "bracket", "check_consistency", "complete_ks", "count_tropical",
    "oracle_enumerate", "perturbed_completion",
]
__version__ = "0.1.0"
