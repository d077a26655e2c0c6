import sys
from pathlib import Path

import pytest
from mpmath import mpf, workprec

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from lorenzhist import BoxSpec, FlowParams, MapParams  # noqa: E402


def agrees(value, decimal_str: str, tol: str = "1e-26", prec: int = 256) -> bool:
    """High-precision closeness check against a frozen decimal string."""
    with workprec(prec):
        v = value.value if hasattr(value, "value") else mpf(value)
        return abs(v - mpf(decimal_str)) < mpf(tol)


@pytest.fixture(scope="session")
def map_params():
    return MapParams()


@pytest.fixture(scope="session")
def flow_params():
    return FlowParams()


@pytest.fixture(scope="session")
def box():
    return BoxSpec()
