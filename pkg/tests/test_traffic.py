import random

from dtnsim import traffic
from dtnsim.engine import rng_stream
from dtnsim.netcore import Buffer, BufferedCopy, Message
from dtnsim.scenario import TrafficConfig

CFG = TrafficConfig(interval_range=(30.0, 60.0), size_range=(100_000, 300_000),
                    ttl=10_800.0)


def test_schedule_next_within_interval():
    rng = random.Random(1)
    for _ in range(200):
        t = traffic.schedule_next(100.0, (30.0, 60.0), rng)
        assert 130.0 <= t <= 160.0


def test_schedule_next_degenerate_interval():
    assert traffic.schedule_next(5.0, (30.0, 30.0), random.Random(0)) == 35.0


def test_schedule_mean_close_to_midpoint():
    rng = rng_stream(7, "traffic")
    draws = [traffic.schedule_next(0.0, (30.0, 60.0), rng) for _ in range(10_000)]
    mean = sum(draws) / len(draws)
    assert 43.0 <= mean <= 47.0


def test_create_message_fields():
    state = traffic.TrafficState(0.0)
    rng = random.Random(3)
    sources = [0, 1, 2]
    destinations = [7, 8]
    seen = set()
    for _ in range(300):
        m = traffic.create_message(state, rng, sources, destinations, CFG, 50.0)
        assert m.src in sources
        assert m.dst in destinations
        assert 100_000 <= m.size <= 300_000
        assert m.ttl == 10_800.0
        assert m.created_at == 50.0
        assert m.id not in seen
        seen.add(m.id)
    assert state.created_count == 300
    assert m.id == "M300"


def test_size_mean_near_center():
    state = traffic.TrafficState(0.0)
    rng = rng_stream(11, "traffic")
    sizes = [traffic.create_message(state, rng, [0], [1], CFG, 0.0).size
             for _ in range(2_000)]
    mean = sum(sizes) / len(sizes)
    assert abs(mean - 200_000) <= 0.05 * 200_000


class _Node:
    def __init__(self, nid):
        self.id = nid
        self.buffer = Buffer(10_000_000)


def _hold(node, seq, created):
    msg = Message(f"M{seq}", seq, 0, 1, 100_000, created, 10_800.0)
    node.buffer.insert(BufferedCopy(msg, created, 0))


def test_purge_strict_boundary():
    node = _Node(0)
    _hold(node, 1, created=0.0)
    assert traffic.purge_expired([node], now=10_800.0) == []
    assert "M1" in node.buffer
    dropped = traffic.purge_expired([node], now=10_801.0)
    assert [(nid, c.msg.id) for nid, c in dropped] == [(0, "M1")]
    assert "M1" not in node.buffer


def test_purge_only_expired_copies():
    node = _Node(0)
    _hold(node, 1, created=0.0)
    _hold(node, 2, created=5_000.0)
    dropped = traffic.purge_expired([node], now=12_000.0)
    assert [c.msg.id for _, c in dropped] == ["M1"]
    assert "M2" in node.buffer
