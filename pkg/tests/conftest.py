import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture(autouse=True)
def reset_telemetry():
    """Each test starts with an empty telemetry buffer."""
    from alignkit.instrumentation import telemetry_store

    telemetry_store.reset()
    yield
    telemetry_store.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain_scm():
    """A -> B -> C over binary domains."""
    from alignkit.scm import Domain, Scm

    b = Domain.binary()
    return Scm.build(
        [
            ("A", b, [], [[0.6, 0.4]]),
            ("B", b, ["A"], [[0.7, 0.3], [0.2, 0.8]]),
            ("C", b, ["B"], [[0.9, 0.1], [0.5, 0.5]]),
        ]
    )


@pytest.fixture
def independent_factors():
    """Two independent ternary factors with uniform priors."""
    from alignkit.scm import Domain, Scm

    t = Domain.of([0, 1, 2])
    third = [[1 / 3, 1 / 3, 1 / 3]]
    return Scm.build([("G1", t, [], third), ("G2", t, [], third)])
