"""
Stopping times and events on the tree.

A stopping time is stored per leaf; it is valid when every event {tau = k}
is a union of step-k blocks. Events are leaf masks remembering the first
step at which they become measurable.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, List

import numpy as np

from ..errors import ContractError
from .field import AdaptedField

if TYPE_CHECKING:
    from .tree import FiltrationTree


@dataclass(frozen=True, eq=False)
class StoppingTime:
    """Per-leaf stopping step in 0..N."""

    tree: "FiltrationTree"
    leaf_steps: np.ndarray
    label: str = ""

    def __post_init__(self):
        steps = np.array(self.leaf_steps, dtype=np.int64)
        tree = self.tree
        if steps.shape != (tree.leaf_count,):
            raise ContractError(f"stopping time needs {tree.leaf_count} leaf steps, got {steps.shape}")
        if steps.min() < 0 or steps.max() > tree.N:
            raise ContractError("stopping steps must lie in 0..N")
        for k in range(tree.N + 1):
            rows = (steps == k).reshape(tree.node_count(k), -1)
            mixed = rows.any(axis=1) != rows.all(axis=1)
            if mixed.any():
                node = int(np.flatnonzero(mixed)[0])
                raise ContractError(f"{{tau = {k}}} is not F_{k}-measurable (node {node})")
        steps.flags.writeable = False
        object.__setattr__(self, "leaf_steps", steps)

    # ==================== CONSTRUCTORS ====================

    @classmethod
    def deterministic(cls, tree: "FiltrationTree", k: int) -> "StoppingTime":
        return cls(tree, np.full(tree.leaf_count, k), f"t={k}")

    @classmethod
    def hitting_time(
        cls, field: AdaptedField, barrier: float, direction: str = "up"
    ) -> "StoppingTime":
        """First step the scalar process reaches the barrier (N if never)."""
        tree = field.tree
        if direction not in ("up", "down"):
            raise ContractError(f"direction must be 'up' or 'down', got {direction!r}")
        steps = np.full(tree.leaf_count, tree.N, dtype=np.int64)
        open_ = np.ones(tree.leaf_count, dtype=bool)
        for k in range(tree.N + 1):
            values = field.lifted(k)
            hit = values >= barrier if direction == "up" else values <= barrier
            hit &= open_
            steps[hit] = k
            open_ &= ~hit
        return cls(tree, steps, f"hit({direction},{barrier:g})")

    def minimum(self, other: "StoppingTime") -> "StoppingTime":
        """sigma ^ tau"""
        return StoppingTime(self.tree, np.minimum(self.leaf_steps, other.leaf_steps),
                            f"min({self.label},{other.label})")

    # ==================== QUERIES ====================

    def node_mask(self, k: int, relation: str = "eq") -> np.ndarray:
        """Step-k node mask of {tau = k} ("eq"), {tau <= k} ("le") or {tau > k} ("gt")."""
        first = self.leaf_steps[:: self.tree.block(k)]
        if relation == "eq":
            return first == k
        if relation == "le":
            return first <= k
        return first > k

    def is_measurable_at(self, leaves: np.ndarray, tol: float = 0.0) -> bool:
        """True if the leaf array is F_tau-measurable."""
        tree = self.tree
        leaves = np.asarray(leaves, dtype=float)
        for k in range(tree.N + 1):
            stop = self.node_mask(k)
            if not stop.any():
                continue
            rows = leaves.reshape(tree.node_count(k), -1)[stop]
            if np.any(np.abs(rows - rows[:, :1]) > tol):
                return False
        return True


def stopped_value(f: AdaptedField, tau: StoppingTime) -> AdaptedField:
    """Leaf claim f_tau."""
    tree = f.tree
    if not f.is_process:
        raise ContractError("stopped_value needs a process defined at every step")
    out = np.empty(tree.leaf_count)
    for k in range(tree.N + 1):
        mask = tau.leaf_steps == k
        if mask.any():
            out[mask] = f.lifted(k)[mask]
    return AdaptedField.claim(tree, out, f"{f.label}@{tau.label}")


@dataclass(frozen=True, eq=False)
class Event:
    """Leaf mask plus the first step at which it is measurable."""

    tree: "FiltrationTree"
    leaf_mask: np.ndarray
    step: int
    label: str = ""

    @classmethod
    def at_step(cls, tree: "FiltrationTree", k: int, node_mask, label: str = "") -> "Event":
        node_mask = np.asarray(node_mask, dtype=bool)
        if node_mask.shape != (tree.node_count(k),):
            raise ContractError(f"event at step {k} needs {tree.node_count(k)} node flags")
        return cls(tree, tree.lift(node_mask, k), k, label)

    @classmethod
    def from_leaves(cls, tree: "FiltrationTree", leaf_mask, label: str = "") -> "Event":
        leaf_mask = np.asarray(leaf_mask, dtype=bool)
        step = tree.measurable_step(leaf_mask.astype(float))
        return cls(tree, leaf_mask, step, label)

    @classmethod
    def whole(cls, tree: "FiltrationTree") -> "Event":
        return cls(tree, np.ones(tree.leaf_count, dtype=bool), 0, "Omega")

    @classmethod
    def cylinders(cls, tree: "FiltrationTree", steps: Iterable[int] = (1, 2)) -> List["Event"]:
        """Every single-history cylinder at each listed step (capped at N)."""
        events = []
        for k in steps:
            if k > tree.N:
                continue
            for node in range(tree.node_count(k)):
                mask = np.zeros(tree.node_count(k), dtype=bool)
                mask[node] = True
                events.append(cls.at_step(tree, k, mask, f"cyl(k={k},node={node})"))
        return events

    def node_mask(self, k: int) -> np.ndarray:
        """Step-k node mask; k must be at or after the event's step."""
        if k < self.step:
            raise ContractError(f"event {self.label} is not F_{k}-measurable")
        return self.leaf_mask[:: self.tree.block(k)]

    def indicator(self) -> AdaptedField:
        return AdaptedField.claim(self.tree, self.leaf_mask.astype(float), f"1[{self.label}]")

    def complement(self) -> "Event":
        return Event(self.tree, ~self.leaf_mask, self.step, f"not({self.label})")
