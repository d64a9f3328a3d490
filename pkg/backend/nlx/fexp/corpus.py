"""
Default claim and event corpora.

Claims are built from the first Brownian coordinate (and |B_T| from the
full vector) so every corpus works for any d. Noise claims are seeded from
settings so reruns see the same draws.
"""

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..errors import ContractError
from ..generators import znorm
from ..lattice import AdaptedField, Event, FiltrationTree
from .operators import classical

ClaimPair = Tuple[AdaptedField, AdaptedField]


def brownian_terminal(tree: FiltrationTree) -> AdaptedField:
    return AdaptedField.claim(tree, tree.brownian.terminal[:, 0], "B_T")


def abs_brownian(tree: FiltrationTree) -> AdaptedField:
    return AdaptedField.claim(tree, znorm(tree.brownian.terminal), "|B_T|")


def squared_brownian(tree: FiltrationTree) -> AdaptedField:
    return AdaptedField.claim(tree, znorm(tree.brownian.terminal) ** 2, "B_T^2")


def running_max(tree: FiltrationTree) -> AdaptedField:
    """max_k B_k (first coordinate)."""
    out = np.zeros(tree.leaf_count)
    for k in range(tree.N + 1):
        out = np.maximum(out, tree.brownian.lifted(k)[:, 0])
    return AdaptedField.claim(tree, out, "max B")


def brownian_at(tree: FiltrationTree, k: int) -> AdaptedField:
    """B_k lifted to the leaves (F_k-measurable)."""
    return AdaptedField.claim(tree, tree.brownian.lifted(k)[:, 0], f"B_{k}")


def noise_claim(tree: FiltrationTree, seed: Optional[int] = None, label: str = "noise") -> AdaptedField:
    rng = np.random.default_rng(settings.VALIDATION_SEED if seed is None else seed)
    return AdaptedField.claim(tree, rng.uniform(-1.0, 1.0, tree.leaf_count), label)


CLAIM_BUILDERS = {
    "B_T": brownian_terminal,
    "abs_B_T": abs_brownian,
    "B_T_sq": squared_brownian,
    "running_max": running_max,
    "indicator_up": lambda tree: AdaptedField.claim(
        tree, (tree.brownian.terminal[:, 0] > 0).astype(float), "1[B_T>0]"),
    "indicator_first_up": lambda tree: AdaptedField.claim(
        tree, (tree.brownian.lifted(1)[:, 0] > 0).astype(float), "1[B_1>0]"),
    "call": lambda tree: AdaptedField.claim(
        tree, np.maximum(tree.brownian.terminal[:, 0], 0.0), "(B_T)+"),
}

DEFAULT_CLAIM_KEYS = ("const", "B_T", "abs_B_T", "B_T_sq", "running_max", "indicator_up",
                      "indicator_first_up")


def default_claims(
    tree: FiltrationTree, keys: Sequence[str] = DEFAULT_CLAIM_KEYS, constants: Iterable[float] = (1.0, -0.5)
) -> List[AdaptedField]:
    """Build the named claims; "const" expands to one claim per constant."""
    claims = []
    for key in keys:
        if key == "const":
            claims.extend(AdaptedField.constant(tree, c) for c in constants)
        elif key == "noise":
            claims.append(noise_claim(tree))
        elif key in CLAIM_BUILDERS:
            claims.append(CLAIM_BUILDERS[key](tree))
        else:
            raise ContractError(f"unknown claim key {key!r}; known: const, noise, {sorted(CLAIM_BUILDERS)}")
    return claims


def measurable_claims(tree: FiltrationTree, claims: Sequence[AdaptedField]) -> List[Tuple[int, AdaptedField]]:
    """(k, claim) pairs with claim F_k-measurable, for constant preservation."""
    out = [(0, AdaptedField.constant(tree, c)) for c in (0.0, 1.0, -2.5)]
    out += [(k, brownian_at(tree, k)) for k in range(tree.N + 1)]
    mid = tree.N // 2
    expectation = classical(tree)
    for xi in claims:
        out.append((mid, expectation.process(xi).as_claim(mid, f"E[{xi.label}|F_{mid}]")))
    return out


def default_events(tree: FiltrationTree, steps: Sequence[int] = (1, 2)) -> List[Event]:
    return [Event.whole(tree)] + Event.cylinders(tree, steps)


def ordered_pairs(claims: Sequence[AdaptedField], shift: float = 1.0) -> List[ClaimPair]:
    """Every (X, Y) in the corpus with X >= Y on all leaves, plus (X, X - shift)."""
    pairs = []
    for x in claims:
        for y in claims:
            if x is not y and np.all(x.terminal >= y.terminal):
                pairs.append((x, y))
    pairs += [(x, x - shift) for x in claims]
    return pairs


def all_pairs(claims: Sequence[AdaptedField]) -> List[ClaimPair]:
    """Every ordered (X, Y) pair including X = Y."""
    return [(x, y) for x in claims for y in claims]


def shift_claims(tree: FiltrationTree, t: int, constants: Iterable[float] = (1.0, -0.5)) -> List[AdaptedField]:
    """F_t-measurable shifts: constants and B_t."""
    return [AdaptedField.constant(tree, c) for c in constants] + [brownian_at(tree, t)]

