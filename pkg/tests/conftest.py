import sys
from pathlib import Path

import pytest

from shufflesr import tensor

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(autouse=True)
def _reset_precision():
    yield
    tensor.set_precision("float32")
