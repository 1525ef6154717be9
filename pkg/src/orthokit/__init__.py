"""orthokit: a workbench for finite test spaces and probabilistic models.

Core objects: test spaces and events (``testspace``), models with exact or
float state spaces (``states``), structure-respecting outcome maps
(``morphisms``), the perspectivity-quotient logic (``logic``), the
coarse-graining construction and its algebras (``coarsening``), forward
products and depth-truncated sequential compounding (``compounding``), the
law connecting the two constructions plus interference detection
(``interference``), concrete generators (``quantum``), a fixture corpus
(``corpus``), and a JSON document format with a CLI (``document``, ``cli``).
"""

from .errors import *  # noqa: F401,F403
from .testspace import Event, PredicateResult, TestSpace, build_test_space, event_key  # noqa: F401
from .states import (  # noqa: F401
    Model,
    StateReport,
    StateSpace,
    Weight,
    adjoin_failure_outcome,
    full_model,
    generator_model,
    weight_from_labels,
)
