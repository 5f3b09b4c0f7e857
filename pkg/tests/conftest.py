import re

import numpy as np
import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print the FAIL side of the acceptance summary lines."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not report.failed:
        return
    match = re.search(r"test_c(\d\d)_", item.nodeid)
    if match:
        print(f"\nACCEPTANCE {int(match.group(1))}: FAIL - {item.name}")


@pytest.fixture(scope="session", autouse=True)
def charge_cache(tmp_path_factory):
    """Keep generated-charge caching hermetic for the test session."""
    import os

    path = tmp_path_factory.mktemp("charge-cache")
    os.environ["TROTTERCHAIN_CACHE"] = str(path)
    return path


@pytest.fixture(scope="session")
def delta03():
    return float(np.tan(0.3))


def random_product_spec(rng, n):
    from trotterchain.circuit import InitialStateSpec

    letters = "".join(rng.choice(list("XYZ")) for _ in range(n))
    bits = tuple(int(b) for b in rng.integers(0, 2, size=n))
    return InitialStateSpec(letters, bits)
