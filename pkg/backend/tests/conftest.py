"""
PyTest Configuration and Fixtures

Shared trees, claim corpora and operators for all tests.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from nlx.fexp import classical, default_claims, drift_uncertainty  # noqa: E402
from nlx.lattice import build_tree  # noqa: E402


@pytest.fixture
def tree4():
    """T = 1, N = 4, d = 1"""
    return build_tree(1.0, d=1, steps=4)


@pytest.fixture
def tree8():
    """T = 1, N = 8, d = 1"""
    return build_tree(1.0, d=1, steps=8)


@pytest.fixture
def tree10():
    """T = 1, N = 10, d = 1"""
    return build_tree(1.0, d=1, steps=10)


@pytest.fixture
def tree2d():
    """T = 1, N = 3, d = 2"""
    return build_tree(1.0, d=2, steps=3)


@pytest.fixture
def claims8(tree8):
    """Default claim corpus on the N = 8 tree"""
    return default_claims(tree8)


@pytest.fixture
def classical8(tree8):
    return classical(tree8)


@pytest.fixture
def drift8(tree8):
    """Drift uncertainty with mu = 0.1 on the N = 8 tree"""
    return drift_uncertainty(0.1, tree8)


@pytest.fixture
def experiment_dict():
    """Minimal valid experiment config as parsed TOML"""
    return {
        "name": "fixture",
        "run": ["axioms"],
        "tree": {"T": 1.0, "N": 4},
        "operator": {"kind": "drift_uncertainty", "mu": 0.1},
        "claims": {"keys": ["const", "B_T", "indicator_up"]},
    }


MARKERS = {
    "unit": "single-module tests on small trees",
    "integration": "config-to-report pipelines writing output files",
    "slow": "full penalization schedules and property sweeps",
}

INTEGRATION_MODULES = {"test_cli"}
SLOW_MODULES = {"test_doobmeyer", "test_properties"}


def pytest_configure(config):
    for name, description in MARKERS.items():
        config.addinivalue_line("markers", f"{name}: {description}")


def pytest_collection_modifyitems(config, items):
    """Tag every test by its module so run_all_tests.py can select suites."""
    for item in items:
        module = Path(str(item.fspath)).stem
        item.add_marker(pytest.mark.integration if module in INTEGRATION_MODULES else pytest.mark.unit)
        if module in SLOW_MODULES:
            item.add_marker(pytest.mark.slow)
