"""
Generator Validation - deterministic sampled checks of the modulus bound,
the y-Lipschitz constant and g(t, y, 0) = 0.

Each rule returns (ok, witnesses); the validators fold them into a
CheckReport. Failures are reported, never raised.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..config import settings
from ..errors import ContractError
from ..schemas import CheckReport, Witness
from .generator import Generator, znorm
from .modulus import Modulus

logger = structlog.get_logger(__name__)

TOL = 1e-12


def _witnesses(lhs, rhs, bad, detail_fn) -> List[Witness]:
    return [
        Witness(lhs=float(lhs[i]), rhs=float(rhs[i]), detail=detail_fn(i))
        for i in np.flatnonzero(bad)
    ]


class ModulusRules:
    """Grid checks for a modulus phi"""

    @staticmethod
    def finite(modulus: Modulus, grid: np.ndarray) -> Tuple[bool, List[Witness]]:
        values = modulus(grid)
        bad = ~np.isfinite(values)
        return not bad.any(), _witnesses(values, np.zeros_like(grid), bad,
                                         lambda i: f"non-finite phi({grid[i]:g})")

    @staticmethod
    def zero_at_zero(modulus: Modulus) -> Tuple[bool, List[Witness]]:
        value = float(modulus(np.zeros(1))[0])
        if abs(value) <= TOL:
            return True, []
        return False, [Witness(lhs=value, rhs=0.0, detail="phi(0) != 0")]

    @staticmethod
    def monotone(modulus: Modulus, grid: np.ndarray) -> Tuple[bool, List[Witness]]:
        x = np.sort(grid)
        values = modulus(x)
        lhs, rhs = values[:-1], values[1:]
        bad = ~(lhs <= rhs + TOL)
        return not bad.any(), _witnesses(lhs, rhs, bad,
                                         lambda i: f"increasing at ({x[i]:g}, {x[i + 1]:g})")

    @staticmethod
    def subadditive(modulus: Modulus, grid: np.ndarray) -> Tuple[bool, List[Witness]]:
        x, y = np.meshgrid(grid, grid, indexing="ij")
        x, y = x.ravel(), y.ravel()
        lhs = modulus(x + y)
        rhs = modulus(x) + modulus(y)
        bad = ~(lhs <= rhs + TOL)
        return not bad.any(), _witnesses(lhs, rhs, bad,
                                         lambda i: f"subadditive at ({x[i]:g}, {y[i]:g})")

    @staticmethod
    def linear_growth(modulus: Modulus, grid: np.ndarray) -> Tuple[bool, List[Witness]]:
        lhs = modulus(grid)
        rhs = modulus.nu * (grid + 1.0)
        bad = ~(lhs <= rhs + TOL)
        return not bad.any(), _witnesses(lhs, rhs, bad,
                                         lambda i: f"growth at {grid[i]:g}")


def validate_modulus(modulus: Modulus, grid: Optional[Sequence[float]] = None) -> CheckReport:
    """Check phi(0) = 0, monotonicity, subadditivity and growth on a grid."""
    grid = np.asarray(settings.MODULUS_TEST_GRID if grid is None else grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0):
        raise ContractError("modulus test grid must be nonempty and nonnegative")

    report = CheckReport(check=f"modulus:{modulus.name}")
    ok, witnesses = ModulusRules.finite(modulus, grid)
    for w in witnesses:
        report.add_witness(w)
    if not ok:
        return report

    for rule in (
        lambda: ModulusRules.zero_at_zero(modulus),
        lambda: ModulusRules.monotone(modulus, grid),
        lambda: ModulusRules.subadditive(modulus, grid),
        lambda: ModulusRules.linear_growth(modulus, grid),
    ):
        _, witnesses = rule()
        for w in witnesses:
            report.add_witness(w)
    return report


# ==================== GENERATOR ====================

class GeneratorRules:
    """Sampled checks for a generator on (t, y, z) draws"""

    @staticmethod
    def zero_at_zero(g: Generator, t, y, d: int) -> Tuple[bool, List[Witness]]:
        values = np.array([float(g(ti, np.array([yi]), np.zeros((1, d)))[0]) for ti, yi in zip(t, y)])
        bad = ~(np.abs(values) <= TOL)
        return not bad.any(), _witnesses(values, np.zeros_like(values), bad,
                                         lambda i: f"g(t={t[i]:.4g}, y={y[i]:.4g}, 0) != 0")

    @staticmethod
    def z_modulus(g: Generator, t, y, z1, z2) -> Tuple[bool, List[Witness]]:
        lhs = np.array([
            abs(float(g(ti, np.array([yi]), a[None, :])[0]) - float(g(ti, np.array([yi]), b[None, :])[0]))
            for ti, yi, a, b in zip(t, y, z1, z2)
        ])
        rhs = g.modulus(znorm(z1 - z2))
        bad = ~(lhs <= rhs + TOL)
        return not bad.any(), _witnesses(lhs, rhs, bad, lambda i: f"z-modulus at sample {i}")

    @staticmethod
    def y_lipschitz(g: Generator, t, y1, y2, z) -> Tuple[bool, List[Witness]]:
        lhs = np.array([
            abs(float(g(ti, np.array([a]), c[None, :])[0]) - float(g(ti, np.array([b]), c[None, :])[0]))
            for ti, a, b, c in zip(t, y1, y2, z)
        ])
        rhs = g.lipschitz_y * np.abs(y1 - y2)
        bad = ~(lhs <= rhs + TOL)
        return not bad.any(), _witnesses(lhs, rhs, bad, lambda i: f"y-Lipschitz at sample {i}")


def validate_generator(
    g: Generator,
    d: int = 1,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    horizon: float = 1.0,
) -> CheckReport:
    """Sampled modulus/Lipschitz checks plus g(t, y, 0) = 0 when flagged."""
    samples = settings.VALIDATION_SAMPLES if samples is None else samples
    rng = np.random.default_rng(settings.VALIDATION_SEED if seed is None else seed)

    t = rng.uniform(0.0, horizon, samples)
    y1 = rng.normal(0.0, 2.0, samples)
    y2 = rng.normal(0.0, 2.0, samples)
    z1 = rng.normal(0.0, 2.0, (samples, d))
    z2 = rng.normal(0.0, 2.0, (samples, d))
    # small separations test the modulus near zero
    z2[: samples // 4] = z1[: samples // 4] + rng.normal(0.0, 1e-3, (samples // 4, d))

    report = CheckReport(check=f"generator:{g.name}")
    report.merge(validate_modulus(g.modulus))

    with np.errstate(all="ignore"):
        rules = [
            GeneratorRules.z_modulus(g, t, y1, z1, z2),
            GeneratorRules.y_lipschitz(g, t, y1, y2, z1),
        ]
        if g.zero_at_zero:
            rules.append(GeneratorRules.zero_at_zero(g, t, y1, d))
    for _, witnesses in rules:
        for w in witnesses:
            report.add_witness(w)

    report.notes.append("square integrability holds trivially on a finite tree")
    if report.passed:
        logger.debug("✓ generator validated", generator=g.name, samples=samples)
    else:
        logger.info("✗ generator validation failed", generator=g.name,
                    violations=report.violation_count)
    return report
