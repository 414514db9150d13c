import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks (minutes)")
    config.addinivalue_line(
        "markers", "acceptance: desk-scale acceptance criteria (tens of minutes)"
    )
