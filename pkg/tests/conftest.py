import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_PREFIX = "tests/test_acceptance.py::"


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    nodeid = report.nodeid.replace("\\", "/")
    if "test_acceptance.py::" not in nodeid:
        return
    name = nodeid.split("::")[-1].replace("test_", "", 1)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {verdict}", flush=True)
