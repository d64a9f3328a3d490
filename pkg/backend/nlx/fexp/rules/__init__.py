"""Rule classes behind the F-expectation checkers."""

from .axiom_rules import AxiomRules
from .domination_rules import DominationRules
from .stopping_rules import KINDS, StoppingRules

__all__ = ["AxiomRules", "DominationRules", "KINDS", "StoppingRules"]
