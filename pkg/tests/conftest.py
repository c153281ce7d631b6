import json
from pathlib import Path

import pytest

from svlab import pseudospin

REGRESSION = json.loads((Path(__file__).parent / "data" / "regression.json").read_text())
BENCH_R = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]


@pytest.fixture(scope="session")
def regression():
    return REGRESSION


@pytest.fixture(scope="session")
def ghz_states():
    """Auto-cutoff states on the benchmark grid, built once per session."""
    return {r: pseudospin.ghz_state_fock(r) for r in BENCH_R}
