import os

import pytest

# keep thread fan-out small on CI boxes; results do not depend on it
os.environ.setdefault("NUMBA_NUM_THREADS", "1")


@pytest.fixture(scope="session")
def workers():
    return 2
