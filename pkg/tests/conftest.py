import pytest

from src.metering import Waveform

from .helpers import sine


@pytest.fixture
def voltage() -> Waveform:
    return sine()
