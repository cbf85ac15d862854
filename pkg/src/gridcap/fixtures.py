"""Access to the bundled example networks and demand series."""

from __future__ import annotations

from importlib import resources

from .netfile import parse_demand, parse_network

FIXTURES = ("two_bus", "five_bus", "microgrid9")


def fixture_text(name: str) -> str:
    return resources.files("gridcap.data").joinpath(name).read_text(encoding="utf-8")


def load_fixture(name: str, dt: float = 1.0) -> tuple:
    """(Network, DemandSeries) for one of the bundled fixtures."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {FIXTURES}")
    net = parse_network(fixture_text(f"{name}.grid"))
    demand = parse_demand(fixture_text(f"{name}_demand.csv"), net=net, dt=dt)
    return net, demand


def fixture_path(name: str):
    """Filesystem path of a bundled data file (for CLI-level tests)."""
    return resources.files("gridcap.data").joinpath(name)
