import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from landaulab.quadrature import QuadratureSpec  # noqa: E402

# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def small_spec():
    """Cheap resolution for unit tests."""
    return QuadratureSpec(nodes_per_axis=16, radial_nodes=8, sphere_nodes=32,
                          patch_radial_nodes=8, patch_sphere_nodes=32)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
