import pytest

from ocsim.config import parse_config_text
from ocsim.io import load_inputs

DESK_REGIONS = ("AK", "AZ", "CA", "GA", "IL", "MA", "SD", "VT", "WI", "WY")


@pytest.fixture(scope="session")
def desk():
    """Bundled network and inputs for the ten desk-scale regions."""
    cfg = parse_config_text(f"regions = {', '.join(DESK_REGIONS)}\nhorizon = 150\n")
    network, inputs = load_inputs(cfg)
    return network, inputs


@pytest.fixture(scope="session")
def bundled():
    """Bundled network and inputs for every region."""
    cfg = parse_config_text("horizon = 150\n")
    return load_inputs(cfg)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
