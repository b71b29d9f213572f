from __future__ import annotations

import pytest

from holderconvex.cantor_base import ConstructionParams
from holderconvex.scalar import Mode


@pytest.fixture(scope="session")
def small():
    """N=4, alpha=1/2, exact: the hand-checkable configuration."""
    return ConstructionParams.relaxed(4, "1/2")


@pytest.fixture(scope="session")
def small_guarded():
    return ConstructionParams.relaxed(4, "1/2", mode=Mode.GUARDED)


@pytest.fixture(scope="session")
def strict():
    return ConstructionParams(N=128)


@pytest.fixture(scope="session")
def strict_guarded():
    return ConstructionParams(N=128, mode=Mode.GUARDED)
