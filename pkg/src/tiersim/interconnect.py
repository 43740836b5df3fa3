"""Intra-cluster coherent bus and inter-cluster mesh NoC.

The bus is three independent FIFO channels (request, response, snoop) with
beat-serial occupancy. The NoC is a 2D/3D mesh with deterministic XYZ
dimension-order routing, input-buffered routers with unbounded queues, and
pipelined flit serialization: a packet's zero-load latency is
hops * (router_delay + per-hop link/TSV latency) + flit count.

Bus and NoC are disjoint fabrics; nothing ever bridges them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .engine import EventQueue

MESSAGE = "message"
MEM_REQUEST = "mem_request"
MEM_RESPONSE = "mem_response"

LOCAL = "local"
PORTS = ("+x", "-x", "+y", "-y", "+z", "-z")


# --- cluster bus -------------------------------------------------------------

REQUEST = "request"
RESPONSE = "response"
SNOOP = "snoop"


class BusChannel:
    """One bus layer: FIFO grants, one transfer in flight at a time,
    occupancy of ceil(bytes / beat_width) cycles per grant."""

    def __init__(self, name: str, beat_width: int = 16, clock_period_ps: int = 1000):
        self.name = name
        self.beat_width = beat_width
        self.clock_period_ps = clock_period_ps
        self.free_at_ps = 0
        self.grants = 0
        self.busy_ps = 0

    def occupancy_cycles(self, nbytes: int) -> int:
        return max(1, -(-nbytes // self.beat_width))

    def request(self, t_ps: int, nbytes: int) -> tuple[int, int]:
        """Enqueue a transfer arriving at t_ps (callers enqueue in arrival
        order). Returns (grant time, completion time)."""
        grant = max(t_ps, self.free_at_ps)
        hold = self.occupancy_cycles(nbytes) * self.clock_period_ps
        self.free_at_ps = grant + hold
        self.grants += 1
        self.busy_ps += hold
        return grant, grant + hold


@dataclass
class ClusterBus:
    """CCI-style three-layered bus: requests, responses, snoops."""

    beat_width: int = 16
    clock_period_ps: int = 1000
    request: BusChannel = field(init=False)
    response: BusChannel = field(init=False)
    snoop: BusChannel = field(init=False)

    def __post_init__(self) -> None:
        self.request = BusChannel(REQUEST, self.beat_width, self.clock_period_ps)
        self.response = BusChannel(RESPONSE, self.beat_width, self.clock_period_ps)
        self.snoop = BusChannel(SNOOP, self.beat_width, self.clock_period_ps)

    @property
    def total_grants(self) -> int:
        return self.request.grants + self.response.grants + self.snoop.grants


def arbitrate_channel(queue: list[tuple[int, int]], channel: BusChannel) -> list[int]:
    """Grant a batch of queued (arrival cycle, bytes) requests in FIFO order;
    returns the grant cycle of each. Convenience wrapper over the channel's
    continuous-time model for cycle-level reasoning and tests."""
    grants = []
    for t_cycle, nbytes in queue:
        g, _ = channel.request(t_cycle * channel.clock_period_ps, nbytes)
        grants.append(g // channel.clock_period_ps)
    return grants


# --- mesh topology and analytics ---------------------------------------------


@dataclass(frozen=True)
class MeshTopology:
    dims: tuple[int, int, int]
    link_latency: int = 1     # cycles per horizontal hop
    tsv_latency: int = 1      # cycles per vertical hop
    router_delay: int = 1     # cycles per router traversal
    flit_width: int = 16      # bytes

    def violations(self, path: str = "noc") -> list[str]:
        out = []
        if any(d < 1 for d in self.dims):
            out.append(f"{path}.dims: all dimensions must be >= 1 ({self.dims})")
        if self.link_latency < 1 or self.tsv_latency < 1:
            out.append(f"{path}: link/TSV latencies must be >= 1 cycle")
        if self.router_delay < 1:
            out.append(f"{path}.router_delay: must be >= 1 ({self.router_delay})")
        if self.flit_width < 1:
            out.append(f"{path}.flit_width: must be >= 1 ({self.flit_width})")
        return out

    def contains(self, coord: tuple[int, int, int]) -> bool:
        return all(0 <= c < d for c, d in zip(coord, self.dims))


def hop_count(src: tuple[int, int, int], dst: tuple[int, int, int],
              topo: MeshTopology) -> int:
    """Manhattan distance between two mesh nodes."""
    if not topo.contains(src) or not topo.contains(dst):
        raise ValueError(f"coordinate out of range for mesh {topo.dims}: {src} -> {dst}")
    return sum(abs(a - b) for a, b in zip(src, dst))


def route_next_hop(current: tuple[int, int, int],
                   dst: tuple[int, int, int]) -> str:
    """XYZ dimension-order routing: correct X, then Y, then Z."""
    if current[0] != dst[0]:
        return "+x" if dst[0] > current[0] else "-x"
    if current[1] != dst[1]:
        return "+y" if dst[1] > current[1] else "-y"
    if current[2] != dst[2]:
        return "+z" if dst[2] > current[2] else "-z"
    return LOCAL


def step_toward(current: tuple[int, int, int], port: str) -> tuple[int, int, int]:
    x, y, z = current
    return {
        "+x": (x + 1, y, z), "-x": (x - 1, y, z),
        "+y": (x, y + 1, z), "-y": (x, y - 1, z),
        "+z": (x, y, z + 1), "-z": (x, y, z - 1),
    }[port]


def _dim_mean_distance(n: int) -> Fraction:
    # sum over ordered pairs of |i-j| in 0..n-1 is n(n^2-1)/3
    return Fraction(n * n * n - n, 3 * n * n)


def mean_hop_count(dims: tuple[int, int, int], include_self: bool = True) -> Fraction:
    """Exact average Manhattan distance over ordered (src, dst) pairs.

    Self-pairs are included by default; excluding them rescales by
    n/(n-1) with n the node count, which cancels in 2D-vs-3D ratios.
    """
    if any(d < 1 for d in dims):
        raise ValueError(f"invalid mesh dims {dims}")
    mean = sum((_dim_mean_distance(d) for d in dims), Fraction(0))
    if not include_self:
        n = dims[0] * dims[1] * dims[2]
        if n == 1:
            raise ValueError("a 1-node mesh has no non-self pairs")
        mean = mean * Fraction(n, n - 1)
    return mean


def packetize(kind: str, payload_bytes: int, flit_width: int) -> tuple[int, int]:
    """(flit count, serialization cycles) for a payload: one header flit plus
    ceil(payload / flit_width) body flits, at one flit per cycle per link."""
    if flit_width <= 0:
        raise ValueError("flit_width must be > 0")
    if payload_bytes < 0:
        raise ValueError("payload must be >= 0")
    flits = 1 + -(-payload_bytes // flit_width)
    return flits, flits


# --- timed mesh network --------------------------------------------------------


@dataclass
class Packet:
    src: tuple[int, int, int]
    dst: tuple[int, int, int]
    kind: str
    payload: int
    flits: int
    t_inject: int
    t_deliver: int | None = None


class MeshNetwork:
    """Packet-level timed mesh on the shared event queue.

    Each directed link is a FIFO resource occupied for `flits` cycles per
    packet; the head flit advances router by router, so queueing delay is the
    only congestion effect (unbounded input buffers, no drops).
    """

    def __init__(self, topo: MeshTopology, engine: EventQueue,
                 clock_period_ps: int = 1000):
        self.topo = topo
        self.engine = engine
        self.clock_period_ps = clock_period_ps
        self._link_free: dict[tuple[tuple[int, int, int], str], int] = {}
        self.injected = 0
        self.delivered = 0
        self.latency_samples_ps: list[int] = []
        self.packets_delivered: list[Packet] = []

    @property
    def in_flight(self) -> int:
        return self.injected - self.delivered

    def inject(self, t_ps: int, src: tuple[int, int, int],
               dst: tuple[int, int, int], kind: str, payload_bytes: int) -> Packet:
        if not self.topo.contains(src) or not self.topo.contains(dst):
            raise ValueError(f"packet endpoints outside mesh {self.topo.dims}")
        flits, _ = packetize(kind, payload_bytes, self.topo.flit_width)
        pkt = Packet(src=src, dst=dst, kind=kind, payload=payload_bytes,
                     flits=flits, t_inject=t_ps)
        self.injected += 1
        self.engine.schedule(t_ps, self._at_router, (pkt, src))
        return pkt

    def _at_router(self, payload: tuple[Packet, tuple[int, int, int]]) -> None:
        pkt, node = payload
        port = route_next_hop(node, pkt.dst)
        now = self.engine.now
        if port == LOCAL:
            pkt.t_deliver = now + pkt.flits * self.clock_period_ps
            self.delivered += 1
            self.latency_samples_ps.append(pkt.t_deliver - pkt.t_inject)
            self.packets_delivered.append(pkt)
            return
        hop_latency = self.topo.tsv_latency if port in ("+z", "-z") else self.topo.link_latency
        ready = now + self.topo.router_delay * self.clock_period_ps
        key = (node, port)
        depart = max(ready, self._link_free.get(key, 0))
        self._link_free[key] = depart + pkt.flits * self.clock_period_ps
        arrive = depart + hop_latency * self.clock_period_ps
        self.engine.schedule(arrive, self._at_router, (pkt, step_toward(node, port)))
