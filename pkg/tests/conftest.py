import os

import pytest
from hypothesis import HealthCheck, settings

from ladderexit import verify
from ladderexit.increments import PRESETS, build_law
from ladderexit.ladder import wiener_hopf_iterate
from ladderexit.renewal import build_tables

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def laws():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = build_law(PRESETS[name])
        return cache[name]

    return get


@pytest.fixture(scope="session")
def tables(laws):
    cache = {}

    def get(name, H):
        if (name, H) not in cache:
            lad = wiener_hopf_iterate(laws(name), H)
            cache[(name, H)] = (lad, build_tables(lad))
        return cache[(name, H)]

    return get


@pytest.fixture(scope="session")
def acceptance_ctx():
    return verify.Context("full")


acceptance_lines = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(acceptance_lines, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(acceptance_lines, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
