from __future__ import annotations

import pytest

from formflow.backends import demo_script
from formflow.prompts import DEFAULT_REGISTRY


@pytest.fixture
def customer_task():
    return DEFAULT_REGISTRY.get("IsCustomerConfirmed")


@pytest.fixture
def demo_outputs():
    """The three canonical scripted model outputs, in conversation order."""
    return [entry.response_text for entry in demo_script()]


@pytest.fixture
def fixed_clock():
    """Deterministic millisecond clock: 1, 2, 3, ..."""
    state = {"now": 0}

    def clock() -> int:
        state["now"] += 1
        return state["now"]

    return clock
