"""Shared builders for scenario texts used across the suite."""

from __future__ import annotations

import pytest

from dtnsim import scenario

# desk-scale variant of the stadium scenario: 30 nodes, 2 h
DESK_TEXT = """
sim_duration = 2h
buffer_size = {buffer}
router.protocol = {protocol}
map.ring_radius = 600
map.exit_count = 8
map.road_length = 500
group.audience.count = 16
group.rescue.count = 4
group.ambulance.count = 2
group.media.count = 2
group.sensors.count = 4
group.exits.count = 2
"""

# isolated playground for scripted contacts: stationary nodes, an
# effectively instant interface and near-infinite buffers
SCRIPT_TEXT = """
sim_duration = {duration}
buffer_size = 1000000M
ttl = {ttl}
group.audience.count = 0
group.rescue.count = 0
group.ambulance.count = 0
group.media.count = 0
group.sensors.count = 0
group.exits.count = 0
group.n.count = {nodes}
group.n.movement = stationary
group.n.interfaces = instant
group.n.roles = message_source,message_destination
interface.instant.bandwidth = 1000000000000M
interface.instant.range = 1
"""


def desk_config(protocol: str = "epidemic", buffer: str = "5M",
                sim_duration: float | None = None) -> scenario.ScenarioConfig:
    import dataclasses
    cfg = scenario.parse_scenario(DESK_TEXT.format(protocol=protocol, buffer=buffer))
    if sim_duration is not None:
        cfg = dataclasses.replace(cfg, sim_duration=float(sim_duration))
    return cfg


def script_config(nodes: int, duration: float = 200.0,
                  ttl: float = 10_800.0) -> scenario.ScenarioConfig:
    return scenario.parse_scenario(
        SCRIPT_TEXT.format(nodes=nodes, duration=duration, ttl=ttl))


@pytest.fixture
def tiny_config():
    """Fast mixed scenario: 12 nodes, 10 minutes."""
    return scenario.parse_scenario("""
sim_duration = 600
seed = 5
map.ring_radius = 150
map.exit_count = 4
map.road_length = 100
group.audience.count = 6
group.rescue.count = 2
group.ambulance.count = 1
group.media.count = 1
group.sensors.count = 1
group.exits.count = 1
""")
