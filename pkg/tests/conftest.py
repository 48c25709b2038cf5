import pytest
from hypothesis import settings

settings.register_profile("local", deadline=None, max_examples=50)
settings.load_profile("local")


@pytest.fixture(scope="session", autouse=True)
def kernels_warm():
    # compile (or load from disk cache) the jitted kernels once up front so
    # individual tests do not absorb the first-call latency
    from smoothchol import _kernels

    if _kernels.HAVE_NUMBA:
        _kernels.warmup()
    yield
