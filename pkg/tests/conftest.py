import contextlib

import pytest

from fleetpilot import link, sim


S1_SCRIPT = """\
takeoff(1)
fly(1, left, 50)
flip(1, right)
fly(1, forward, 50)
flip(1, back)
land(1)
"""

S2_SCRIPT = """\
takeoff(1)
takeoff(2)
fly(1, left, 50)
fly(2, right, 50)
flip(1, right)
flip(2, left)
land(1)
land(2)
"""

S3_SCRIPT = """\
takeoff(1)
fly(1, right, 50)
flip(1, left)
barrier()
takeoff(2)
fly(2, left, 50)
flip(2, right)
barrier()
land(1)
land(2)
"""


@contextlib.contextmanager
def sim_fleet(n_drones, time_scale=0.01, faults=(), telemetry_addr=None):
    """Spawn an ephemeral-port simulated fleet; always stopped on exit."""
    config = sim.SimConfig(
        [sim.SimDroneSpec(i + 1) for i in range(n_drones)],
        time_scale=time_scale,
        faults=tuple(faults),
        telemetry_addr=telemetry_addr,
    )
    fleet = sim.spawn_fleet(config)
    try:
        yield fleet
    finally:
        fleet.stop()


@contextlib.contextmanager
def connected_fleet(n_drones, time_scale=0.01, faults=(), timeout=2.0,
                    telemetry_addr=None):
    """Simulated fleet plus one connected control session per drone."""
    with sim_fleet(n_drones, time_scale, faults, telemetry_addr) as fleet:
        sessions = {}
        try:
            for drone_id in range(1, n_drones + 1):
                host, port = fleet.address(drone_id)
                entry = link.FleetEntry(drone_id, host, port)
                sessions[drone_id] = link.connect(entry, timeout=timeout)
            yield fleet, sessions
        finally:
            for session in sessions.values():
                session.close()


@pytest.fixture
def two_drone_fleet():
    with connected_fleet(2) as pair:
        yield pair
