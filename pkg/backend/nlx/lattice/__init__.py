"""
Exact discrete filtration: time grid, Rademacher tree, adapted fields,
stopping times and events.
"""

from .field import AdaptedField
from .grid import TimeGrid
from .stopping import Event, StoppingTime, stopped_value
from .tree import FiltrationTree, build_tree, cond_expect, increment_table, project_increment

__all__ = [
    "AdaptedField",
    "Event",
    "FiltrationTree",
    "StoppingTime",
    "TimeGrid",
    "build_tree",
    "cond_expect",
    "increment_table",
    "project_increment",
    "stopped_value",
]
