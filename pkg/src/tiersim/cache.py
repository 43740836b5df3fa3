"""Set-associative cache levels.

One CacheLevel models one cache array: LRU or seeded pseudo-random
replacement, NUCA bank latency, optional hybrid technology regions that
partition the ways, per-word partial-write tracking, and write-endurance
wear. Policy is write-back + write-allocate throughout; writeback writes
that miss are forwarded to the next level without allocating.

Coherence state lives in the line's `state` field but is driven externally
(see coherence module); standalone use via `access` treats the level as a
plain trace-driven cache.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .engine import cycles_for_latency
from .memtech import READ, TechnologyParams

WORD_SIZE = 8  # bytes per partial-write word

LRU = "lru"
PSEUDO_RANDOM = "pseudo_random"

M, O, E, S, I = "M", "O", "E", "S", "I"
VALID_STATES = (M, O, E, S)
DIRTY_STATES = (M, O)


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Region:
    """Contiguous way range [way_lo, way_hi) backed by one technology."""

    way_lo: int
    way_hi: int
    tech: str


@dataclass(frozen=True)
class CacheGeometry:
    capacity: int                 # bytes
    block_size: int               # bytes
    associativity: int            # ways
    banks: int = 1
    replacement: str = LRU
    nuca_base_latency: int = 0    # cycles, bank-routing cost at the controller
    nuca_per_hop: int = 0         # cycles per bank of distance
    regions: tuple[Region, ...] = ()   # empty means single implicit region
    partial_writes: bool = False

    @property
    def sets(self) -> int:
        return self.capacity // (self.associativity * self.block_size)

    @property
    def words_per_block(self) -> int:
        return max(1, self.block_size // WORD_SIZE)

    def violations(self, path: str = "geometry") -> list[str]:
        """All constraint violations, each prefixed with a location path."""
        out = []
        if not _is_pow2(self.block_size):
            out.append(f"{path}.block_size: not a power of two ({self.block_size})")
        if self.associativity < 1:
            out.append(f"{path}.associativity: must be >= 1 ({self.associativity})")
        if self.capacity % (self.associativity * self.block_size) != 0:
            out.append(f"{path}.capacity: {self.capacity} not sets*ways*block_size")
            return out
        if not _is_pow2(self.sets):
            out.append(f"{path}.capacity: derived set count {self.sets} not a power of two")
        if self.banks < 1 or self.sets % self.banks != 0:
            out.append(f"{path}.banks: {self.banks} does not divide {self.sets} sets")
        if self.replacement not in (LRU, PSEUDO_RANDOM):
            out.append(f"{path}.replacement: unknown policy {self.replacement!r}")
        if self.nuca_base_latency < 0 or self.nuca_per_hop < 0:
            out.append(f"{path}.nuca: latencies must be >= 0")
        if self.regions:
            cover = sorted(self.regions, key=lambda r: r.way_lo)
            expect = 0
            for r in cover:
                if r.way_lo != expect or r.way_hi <= r.way_lo:
                    out.append(f"{path}.regions: way ranges must partition "
                               f"[0, {self.associativity})")
                    break
                expect = r.way_hi
            else:
                if expect != self.associativity:
                    out.append(f"{path}.regions: way ranges must partition "
                               f"[0, {self.associativity})")
        return out


def decompose_address(addr: int, geom: CacheGeometry) -> tuple[int, int, int]:
    """(tag, set_index, block_offset) for a physical address."""
    offset = addr % geom.block_size
    block = addr // geom.block_size
    return block // geom.sets, block % geom.sets, offset


def compose_address(tag: int, set_index: int, offset: int, geom: CacheGeometry) -> int:
    return (tag * geom.sets + set_index) * geom.block_size + offset


def check_wear(line: "CacheLine", params: TechnologyParams) -> bool:
    """True when the line has exceeded the technology's write endurance."""
    return line.write_count > params.endurance


@dataclass
class CacheLine:
    tag: int = 0
    state: str = I
    lru_stamp: int = 0
    write_count: int = 0
    dirty_words: int = 0          # bitmask over words in the block
    worn: bool = False
    data: list[int] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.state != I and not self.worn


@dataclass
class Eviction:
    """Dirty victim handed back to the caller for write-back."""

    addr: int
    dirty_words: int
    data: list[int]
    state: str


@dataclass
class AccessResult:
    hit: bool
    set_index: int
    way: int | None = None        # hit way or filled way
    victim_way: int | None = None
    nuca_cycles: int = 0
    bypass: bool = False          # worn line matched: forward to next level
    wear_event: bool = False
    writeback: Eviction | None = None
    data: list[int] | None = None


class CacheLevel:
    """One cache array instance with counters for reporting."""

    def __init__(self, name: str, geom: CacheGeometry,
                 tech_by_region: list[TechnologyParams],
                 clock_period_ps: int = 1000,
                 rng: random.Random | None = None,
                 write_mix: float = 0.5):
        regions = geom.regions or (Region(0, geom.associativity, tech_by_region[0].name),)
        if len(tech_by_region) != len(regions):
            raise ValueError(f"{name}: {len(regions)} regions but "
                             f"{len(tech_by_region)} technology records")
        self.name = name
        self.geom = geom
        self.regions = regions
        self.tech_by_region = list(tech_by_region)
        self.clock_period_ps = clock_period_ps
        self.write_mix = write_mix
        self.rng = rng or random.Random(0)
        self._stamp = 0
        self.lines = [[CacheLine() for _ in range(geom.associativity)]
                      for _ in range(geom.sets)]
        self._region_of_way = [0] * geom.associativity
        for idx, r in enumerate(regions):
            for w in range(r.way_lo, r.way_hi):
                self._region_of_way[w] = idx

        # Reporting counters. n_read/n_write count accesses (demand reads,
        # core reads/writes, writeback writes); fills are responses, not
        # accesses, so energy recomputes from these counts alone.
        self.n_read = 0
        self.n_write = 0
        self.hits = 0
        self.misses = 0
        self.fills = 0
        self.evictions = 0
        self.writebacks = 0
        self.region_reads = [0] * len(regions)
        self.region_writes = [0] * len(regions)
        self.wear_events = 0
        self.worn_lines = 0
        self.max_write_count = 0
        self.first_wear_time_ps: int | None = None
        self.invalidations = 0
        self.hit_latency_sum_ps = 0
        self.hit_latency_samples = 0
        self._busy_end_ps = 0
        self.busy_ps = 0
        self.free_at_ps = 0  # single-ported array: one access in service at a time

        per_region_write_ns = [
            write_mix * t.write_set_latency + (1.0 - write_mix) * t.write_reset_latency
            for t in tech_by_region]
        self._read_cycles = [cycles_for_latency(t.read_latency, clock_period_ps)
                             for t in tech_by_region]
        self._write_cycles = [cycles_for_latency(ns, clock_period_ps)
                              for ns in per_region_write_ns]

    # -- geometry helpers ---------------------------------------------------

    def decompose(self, addr: int) -> tuple[int, int, int]:
        return decompose_address(addr, self.geom)

    def bank_of_set(self, set_index: int) -> int:
        return set_index % self.geom.banks

    def nuca_cycles(self, set_index: int) -> int:
        return self.geom.nuca_base_latency + self.geom.nuca_per_hop * self.bank_of_set(set_index)

    def op_cycles(self, way: int, kind: str) -> int:
        region = self._region_of_way[way]
        return (self._read_cycles if kind == READ else self._write_cycles)[region]

    def region_of_way(self, way: int) -> int:
        return self._region_of_way[way]

    def tech_of_way(self, way: int) -> TechnologyParams:
        return self.tech_by_region[self._region_of_way[way]]

    # -- lookup / replacement -------------------------------------------------

    def probe(self, addr: int) -> tuple[int, int, int | None, bool]:
        """(tag, set_index, hit way or None, worn-line tag match)."""
        tag, set_index, _ = self.decompose(addr)
        worn_match = False
        for way, line in enumerate(self.lines[set_index]):
            if line.tag != tag:
                continue
            if line.worn:
                worn_match = True
            elif line.state != I:
                return tag, set_index, way, False
        return tag, set_index, None, worn_match

    def touch(self, set_index: int, way: int) -> None:
        self._stamp += 1
        self.lines[set_index][way].lru_stamp = self._stamp

    def select_victim(self, set_index: int) -> int | None:
        """Way to fill: first usable invalid way, else the policy's choice.

        Returns None when every way of the set is worn out.
        """
        usable = [w for w, line in enumerate(self.lines[set_index]) if not line.worn]
        if not usable:
            return None
        for w in usable:
            if self.lines[set_index][w].state == I:
                return w
        if self.geom.replacement == LRU:
            return min(usable, key=lambda w: self.lines[set_index][w].lru_stamp)
        return usable[self.rng.randrange(len(usable))]

    def evict(self, set_index: int, way: int) -> Eviction | None:
        """Invalidate a way; dirty victims come back for write-back."""
        line = self.lines[set_index][way]
        if line.state == I:
            return None
        self.evictions += 1
        out = None
        if line.state in DIRTY_STATES:
            self.writebacks += 1
            out = Eviction(
                addr=compose_address(line.tag, set_index, 0, self.geom),
                dirty_words=line.dirty_words,
                data=list(line.data),
                state=line.state)
        line.state = I
        line.dirty_words = 0
        line.data = []
        return out

    def fill(self, addr: int, state: str, data: list[int] | None = None,
             write_fill_words: int = 0, now_ps: int = 0) -> AccessResult:
        """Install a block (miss response). write_fill_words > 0 marks a
        write-allocate fill and charges wear for it."""
        tag, set_index, _ = self.decompose(addr)
        for line in self.lines[set_index]:
            if line.worn and line.tag == tag:
                return AccessResult(hit=False, set_index=set_index, bypass=True)
        victim = self.select_victim(set_index)
        if victim is None:
            return AccessResult(hit=False, set_index=set_index, bypass=True)
        writeback = self.evict(set_index, victim)
        line = self.lines[set_index][victim]
        # write_count survives refills: endurance wears the physical way,
        # not the block that happens to occupy it.
        line.tag = tag
        line.state = state
        line.dirty_words = 0
        line.data = list(data) if data is not None else [0] * self.geom.words_per_block
        self.fills += 1
        self.touch(set_index, victim)
        wear = False
        if write_fill_words:
            wear = self._charge_write(set_index, victim, write_fill_words, now_ps)
        return AccessResult(hit=True, set_index=set_index, way=victim,
                            victim_way=victim, writeback=writeback,
                            wear_event=wear, data=line.data)

    # -- wear ---------------------------------------------------------------

    def _charge_write(self, set_index: int, way: int, words: int, now_ps: int) -> bool:
        """Bump write_count per the partial-write rule; True on a wear event."""
        line = self.lines[set_index][way]
        line.write_count += words if self.geom.partial_writes else 1
        self.max_write_count = max(self.max_write_count, line.write_count)
        if not line.worn and check_wear(line, self.tech_of_way(way)):
            line.worn = True
            self.wear_events += 1
            self.worn_lines += 1
            if self.first_wear_time_ps is None:
                self.first_wear_time_ps = now_ps
            return True
        return False

    def _words_covered(self, offset: int, size: int) -> tuple[int, int]:
        """(mask, count) of block words covered by an access."""
        first = offset // WORD_SIZE
        last = (offset + size - 1) // WORD_SIZE
        mask = 0
        for w in range(first, min(last + 1, self.geom.words_per_block)):
            mask |= 1 << w
        return mask, min(last + 1, self.geom.words_per_block) - first

    def write_touch(self, set_index: int, way: int, offset: int, size: int,
                    values: list[int] | None = None, now_ps: int = 0) -> bool:
        """Apply a write hit to a resident line. Returns True on a wear event."""
        line = self.lines[set_index][way]
        mask, count = self._words_covered(offset, size)
        line.dirty_words |= mask
        if values is not None:
            first = offset // WORD_SIZE
            for k, v in enumerate(values):
                if first + k < len(line.data):
                    line.data[first + k] = v
        self.touch(set_index, way)
        return self._charge_write(set_index, way, count, now_ps)

    # -- system-facing access paths -------------------------------------------

    def demand_read(self, addr: int) -> AccessResult:
        """Fetch request from the level above. No allocation here; the caller
        fills on the miss response."""
        self.n_read += 1
        tag, set_index, way, worn = self.probe(addr)
        if way is not None:
            self.hits += 1
            self.region_reads[self._region_of_way[way]] += 1
            self.touch(set_index, way)
            return AccessResult(hit=True, set_index=set_index, way=way,
                                nuca_cycles=self.nuca_cycles(set_index),
                                data=self.lines[set_index][way].data)
        self.misses += 1
        self.region_reads[0] += 1
        return AccessResult(hit=False, set_index=set_index, bypass=worn,
                            nuca_cycles=self.nuca_cycles(set_index))

    def writeback_write(self, addr: int, dirty_words: int,
                        data: list[int] | None = None,
                        now_ps: int = 0) -> AccessResult:
        """Write-back arriving from the level above. Hits merge in place;
        misses (and worn lines) are forwarded, never allocated."""
        self.n_write += 1
        tag, set_index, way, worn = self.probe(addr)
        if way is None:
            self.misses += 1
            self.region_writes[0] += 1
            return AccessResult(hit=False, set_index=set_index, bypass=True,
                                nuca_cycles=self.nuca_cycles(set_index))
        self.hits += 1
        self.region_writes[self._region_of_way[way]] += 1
        line = self.lines[set_index][way]
        line.state = M
        line.dirty_words |= dirty_words
        if data is not None:
            for w in range(self.geom.words_per_block):
                if dirty_words >> w & 1 and w < len(line.data):
                    line.data[w] = data[w]
        self.touch(set_index, way)
        words = bin(dirty_words).count("1") or 1
        wear = self._charge_write(set_index, way, words, now_ps)
        return AccessResult(hit=True, set_index=set_index, way=way,
                            nuca_cycles=self.nuca_cycles(set_index),
                            wear_event=wear)

    def access(self, op: str, addr: int, size: int = WORD_SIZE,
               now_ps: int = 0) -> AccessResult:
        """Standalone lookup-and-update: write-back write-allocate semantics
        with immediate fill on miss (no data plumbing)."""
        if op == "R":
            self.n_read += 1
        else:
            self.n_write += 1
        tag, set_index, way, worn = self.probe(addr)
        _, _, offset = self.decompose(addr)
        if way is not None:
            self.hits += 1
            (self.region_reads if op == "R" else self.region_writes)[
                self._region_of_way[way]] += 1
            wear = False
            if op == "W":
                wear = self.write_touch(set_index, way, offset, size, now_ps=now_ps)
            else:
                self.touch(set_index, way)
            return AccessResult(hit=True, set_index=set_index, way=way,
                                nuca_cycles=self.nuca_cycles(set_index),
                                wear_event=wear)
        self.misses += 1
        (self.region_reads if op == "R" else self.region_writes)[0] += 1
        if worn:
            return AccessResult(hit=False, set_index=set_index, bypass=True,
                                nuca_cycles=self.nuca_cycles(set_index))
        mask, count = self._words_covered(offset, size)
        filled = self.fill(addr, state=M if op == "W" else S,
                           write_fill_words=count if op == "W" else 0,
                           now_ps=now_ps)
        if op == "W" and filled.way is not None:
            self.lines[set_index][filled.way].dirty_words |= mask
        return AccessResult(hit=False, set_index=set_index, way=filled.way,
                            victim_way=filled.way,
                            nuca_cycles=self.nuca_cycles(set_index),
                            writeback=filled.writeback,
                            wear_event=filled.wear_event, bypass=filled.bypass)

    def invalidate(self, set_index: int, way: int) -> None:
        """Drop a copy on a remote invalidation; ownership travels with the
        bus data, so nothing is written back."""
        line = self.lines[set_index][way]
        if line.state != I:
            self.invalidations += 1
        line.state = I
        line.dirty_words = 0
        line.data = []

    # -- accounting -----------------------------------------------------------

    def count_access(self, op: str, way: int | None, hit: bool) -> None:
        """Externally driven access accounting (the coherence layer owns the
        L1 hit/miss decision)."""
        if op == "R":
            self.n_read += 1
        else:
            self.n_write += 1
        if hit:
            self.hits += 1
        else:
            self.misses += 1
        region = self._region_of_way[way] if way is not None else 0
        (self.region_reads if op == "R" else self.region_writes)[region] += 1

    def service(self, arrival_ps: int, cycles: int) -> tuple[int, int]:
        """Occupy the array for an access; returns (start, done) in ps."""
        start = max(arrival_ps, self.free_at_ps)
        done = start + cycles * self.clock_period_ps
        self.free_at_ps = done
        self.merge_busy(start, done)
        return start, done

    def record_hit_latency(self, latency_ps: int) -> None:
        self.hit_latency_sum_ps += latency_ps
        self.hit_latency_samples += 1

    def merge_busy(self, start_ps: int, end_ps: int) -> None:
        """Union of access windows; callers present windows with
        non-decreasing start times."""
        if end_ps <= self._busy_end_ps:
            return
        self.busy_ps += end_ps - max(start_ps, self._busy_end_ps)
        self._busy_end_ps = end_ps

    def capacity_mib(self) -> float:
        return self.geom.capacity / (1024.0 * 1024.0)

    def region_capacity_mib(self, region_index: int) -> float:
        r = self.regions[region_index]
        frac = (r.way_hi - r.way_lo) / self.geom.associativity
        return self.capacity_mib() * frac
