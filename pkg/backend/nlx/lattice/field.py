"""
Adapted Fields

A value (scalar or d-vector) at every node of some steps of a tree. Claims
are fields defined only at step N; processes are defined at every step;
slices carry a single step. Arrays are copied and frozen on construction,
and fields hash by identity so they can key per-claim caches.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError, NumericError

if TYPE_CHECKING:
    from .tree import FiltrationTree


def _frozen(values, expected_rows: int, step: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(expected_rows, float(arr))
    if arr.shape[0] != expected_rows:
        raise ContractError(
            f"step {step} needs {expected_rows} node values, got {arr.shape[0]}"
        )
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class AdaptedField:
    """Per-step node arrays on a tree; `values[k]` is None where undefined."""

    tree: "FiltrationTree"
    values: Tuple[Optional[np.ndarray], ...]
    label: str = ""

    # ==================== CONSTRUCTORS ====================

    @classmethod
    def claim(cls, tree: "FiltrationTree", leaves, label: str = "") -> "AdaptedField":
        """Terminal claim defined on the leaves only."""
        arr = _frozen(leaves, tree.leaf_count, tree.N)
        if arr.ndim == 1 and not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NumericError("claim has non-finite leaf value", step=tree.N, node=bad)
        return cls(tree, (None,) * tree.N + (arr,), label)

    @classmethod
    def process(cls, tree: "FiltrationTree", steps: Sequence, label: str = "") -> "AdaptedField":
        """Process defined at every step 0..N."""
        if len(steps) != tree.N + 1:
            raise ContractError(f"process needs {tree.N + 1} steps, got {len(steps)}")
        return cls(
            tree,
            tuple(_frozen(v, tree.node_count(k), k) for k, v in enumerate(steps)),
            label,
        )

    @classmethod
    def partial(cls, tree: "FiltrationTree", steps: Dict[int, Any], label: str = "") -> "AdaptedField":
        """Field defined on an arbitrary set of steps."""
        values = [None] * (tree.N + 1)
        for k, v in steps.items():
            values[k] = _frozen(v, tree.node_count(k), k)
        return cls(tree, tuple(values), label)

    @classmethod
    def slice(cls, tree: "FiltrationTree", k: int, values, label: str = "") -> "AdaptedField":
        """Field defined at a single step k."""
        return cls.partial(tree, {k: values}, label)

    @classmethod
    def constant(cls, tree: "FiltrationTree", value: float, label: str = "") -> "AdaptedField":
        return cls.claim(tree, np.full(tree.leaf_count, float(value)), label or f"const({value:g})")

    # ==================== ACCESS ====================

    def has(self, k: int) -> bool:
        return 0 <= k < len(self.values) and self.values[k] is not None

    def at(self, k: int) -> np.ndarray:
        if not self.has(k):
            raise ContractError(f"field {self.label or '<unnamed>'} is not defined at step {k}")
        return self.values[k]

    @property
    def terminal(self) -> np.ndarray:
        return self.at(self.tree.N)

    @property
    def steps(self) -> Tuple[int, ...]:
        return tuple(k for k, v in enumerate(self.values) if v is not None)

    @property
    def is_terminal_only(self) -> bool:
        return self.steps == (self.tree.N,)

    @property
    def is_process(self) -> bool:
        return len(self.steps) == self.tree.N + 1

    def lifted(self, k: int, m: int = None) -> np.ndarray:
        """Step-k values broadcast to step m (default: leaves)."""
        return self.tree.lift(self.at(k), k, m)

    def as_claim(self, k: int, label: str = "") -> "AdaptedField":
        """The step-k slice viewed as a terminal claim (F_k-measurable)."""
        return AdaptedField.claim(self.tree, self.lifted(k), label or f"{self.label}@{k}")

    def relabel(self, label: str) -> "AdaptedField":
        return AdaptedField(self.tree, self.values, label)

    # ==================== ARITHMETIC ====================

    def _combine(self, other, op, label: str) -> "AdaptedField":
        steps = {}
        for k in self.steps:
            if isinstance(other, AdaptedField):
                if not other.has(k):
                    raise ContractError(f"step {k} missing from right operand")
                steps[k] = op(self.values[k], other.values[k])
            else:
                steps[k] = op(self.values[k], other)
        return AdaptedField.partial(self.tree, steps, label)

    def __add__(self, other) -> "AdaptedField":
        return self._combine(other, np.add, f"({self.label}+{getattr(other, 'label', other)})")

    def __sub__(self, other) -> "AdaptedField":
        return self._combine(other, np.subtract, f"({self.label}-{getattr(other, 'label', other)})")

    def __mul__(self, other) -> "AdaptedField":
        return self._combine(other, np.multiply, f"({self.label}*{getattr(other, 'label', other)})")

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "AdaptedField":
        return self._combine(-1.0, np.multiply, f"-{self.label}")

    def map(self, fn, label: str = "") -> "AdaptedField":
        return AdaptedField.partial(
            self.tree, {k: fn(self.values[k]) for k in self.steps}, label or self.label
        )

    def max_abs_diff(self, other: "AdaptedField") -> float:
        """sup over common steps and nodes of |self - other|."""
        common = [k for k in self.steps if other.has(k)]
        return max((float(np.max(np.abs(self.values[k] - other.values[k]))) for k in common), default=0.0)

    # ==================== SERIALIZATION ====================

    def to_json(self) -> Dict[str, Any]:
        tree = self.tree
        return {
            "T": tree.T,
            "N": tree.N,
            "d": tree.d,
            "label": self.label,
            "steps": {str(k): self.values[k].tolist() for k in self.steps},
        }

    @classmethod
    def from_json(cls, tree: "FiltrationTree", data: Union[str, Dict[str, Any]]) -> "AdaptedField":
        if isinstance(data, str):
            data = json.loads(data)
        _check_header(tree, data)
        return cls.partial(
            tree, {int(k): np.asarray(v) for k, v in data["steps"].items()}, data.get("label", "")
        )

    def save_npz(self, path: Union[str, Path]) -> None:
        tree = self.tree
        arrays = {f"step_{k}": self.values[k] for k in self.steps}
        np.savez(path, header=np.array([tree.T, tree.N, tree.d], dtype=float), **arrays)

    @classmethod
    def load_npz(cls, tree: "FiltrationTree", path: Union[str, Path], label: str = "") -> "AdaptedField":
        with np.load(path) as data:
            T, N, d = data["header"]
            _check_header(tree, {"T": T, "N": int(N), "d": int(d)})
            steps = {int(name.split("_")[1]): data[name] for name in data.files if name.startswith("step_")}
        return cls.partial(tree, steps, label)


def _check_header(tree: "FiltrationTree", data: Dict[str, Any]) -> None:
    if int(data["N"]) != tree.N or int(data["d"]) != tree.d or abs(float(data["T"]) - tree.T) > 1e-14:
        raise ContractError(
            f"field header (T={data['T']}, N={data['N']}, d={data['d']}) does not match {tree!r}"
        )
