"""Deterministic lane-group tree-reduction argmax.

Models a fixed-width group of lockstep lanes that can read each other's
registers. In every step, lane ``i`` reads the record held by lane
``i + offset`` (its own record if that lane does not exist) and keeps it if
its objective is strictly larger; the offset starts at half the group width
and halves until 1, after which the winner sits in lane 0. A block-level
argmax runs this pass over every consecutive group and once more over the
group winners, so it can cover up to ``width**2`` records.

All reads of a step observe the register values from before the step
(double buffering), mirroring lockstep execution where reads and writes of
one step never interleave.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LANE_GROUP_WIDTH = 32
MAX_BLOCK_RECORDS = LANE_GROUP_WIDTH * LANE_GROUP_WIDTH


@dataclass(frozen=True)
class LaneRecord:
    """Registers carried by one lane: an objective and the index it scored."""

    objective: float
    index_k: int = 0
    index_l: int = 0


@dataclass
class LaneGroup:
    """Fixed-width group of lockstep lanes holding up to ``width`` records."""

    lanes: list[LaneRecord] = field(default_factory=list)
    width: int = LANE_GROUP_WIDTH

    def __post_init__(self):
        _check_width(self.width)
        if len(self.lanes) > self.width:
            raise ValueError("lane group holds more records than lanes")


def _check_width(width: int) -> None:
    if width < 1 or (width & (width - 1)) != 0:
        raise ValueError("lane group width must be a power of two")


def _records_to_arrays(records):
    obj = np.array([r.objective for r in records], dtype=np.float64)
    kk = np.array([r.index_k for r in records], dtype=np.int64)
    ll = np.array([r.index_l for r in records], dtype=np.int64)
    return obj, kk, ll


def _lane_pass(obj, kk, ll, width: int) -> None:
    """Reduce the active lanes in place; the winner ends up at index 0."""
    active = obj.size
    lanes = np.arange(active)
    offset = width // 2
    while offset >= 1:
        partner = lanes + offset
        partner = np.where(partner < active, partner, lanes)
        # gather first: every read observes pre-step register values
        got_obj = obj[partner]
        got_kk = kk[partner]
        got_ll = ll[partner]
        take = got_obj > obj
        np.copyto(obj, got_obj, where=take)
        np.copyto(kk, got_kk, where=take)
        np.copyto(ll, got_ll, where=take)
        offset //= 2


def lane_group_argmax(group: LaneGroup, active: int | None = None) -> LaneRecord:
    """Reduce one lane group and return lane 0's record.

    ``active`` limits the reduction to the first lanes of the group; lanes
    past it are treated as out of bounds, so reads aimed at them return the
    reader's own record. The returned objective equals the exact maximum
    over the active lanes.
    """
    if active is None:
        active = len(group.lanes)
    if active < 1:
        raise ValueError("empty reduction")
    if active > len(group.lanes):
        raise ValueError("active lane count exceeds stored records")
    obj, kk, ll = _records_to_arrays(group.lanes[:active])
    _lane_pass(obj, kk, ll, group.width)
    return LaneRecord(float(obj[0]), int(kk[0]), int(ll[0]))


def block_argmax_arrays(obj, kk, ll, width: int = LANE_GROUP_WIDTH):
    """Two-phase reduction over parallel record arrays.

    Phase 1 reduces every consecutive group of ``width`` records (records
    are assigned to groups consecutively), phase 2 reduces the per-group
    winners in a single group. Returns the winning ``(objective, index_k,
    index_l)`` triple. Only comparisons and copies happen here, so the
    objective is bitwise equal to a linear scan's.

    Phase 1 runs all groups at once on a (groups, width) register grid.
    Lanes of the last group past its record count exist only as readers:
    an active lane never reads past the active count (the self-read rule
    fires first), so their filler registers cannot propagate.
    """
    _check_width(width)
    n = obj.size
    if n == 0:
        raise ValueError("empty reduction")
    if n > width * width:
        raise ValueError("record count exceeds two-phase capacity")
    ngroups = (n + width - 1) // width

    g_obj = np.full((ngroups, width), -np.inf, dtype=np.float64)
    g_kk = np.zeros((ngroups, width), dtype=np.int64)
    g_ll = np.zeros((ngroups, width), dtype=np.int64)
    g_obj.reshape(-1)[:n] = obj
    g_kk.reshape(-1)[:n] = kk
    g_ll.reshape(-1)[:n] = ll
    active = np.full((ngroups, 1), width, dtype=np.int64)
    active[-1, 0] = n - (ngroups - 1) * width

    lanes = np.arange(width, dtype=np.int64)[None, :]
    offset = width // 2
    while offset >= 1:
        partner = lanes + offset
        partner = np.where(partner < active, partner, lanes)
        got_obj = np.take_along_axis(g_obj, partner, axis=1)
        got_kk = np.take_along_axis(g_kk, partner, axis=1)
        got_ll = np.take_along_axis(g_ll, partner, axis=1)
        take = got_obj > g_obj
        g_obj = np.where(take, got_obj, g_obj)
        g_kk = np.where(take, got_kk, g_kk)
        g_ll = np.where(take, got_ll, g_ll)
        offset //= 2

    win_obj = g_obj[:, 0].copy()
    win_kk = g_kk[:, 0].copy()
    win_ll = g_ll[:, 0].copy()
    _lane_pass(win_obj, win_kk, win_ll, width)
    return float(win_obj[0]), int(win_kk[0]), int(win_ll[0])


def block_argmax(records, width: int = LANE_GROUP_WIDTH) -> LaneRecord:
    """Two-phase argmax over a sequence of records (at most ``width**2``)."""
    records = list(records)
    if not records:
        raise ValueError("empty reduction")
    obj, kk, ll = _records_to_arrays(records)
    o, k, l = block_argmax_arrays(obj, kk, ll, width)
    return LaneRecord(o, k, l)


def linear_argmax(records) -> LaneRecord:
    """Baseline scan: first record attaining the maximum objective."""
    records = list(records)
    if not records:
        raise ValueError("empty reduction")
    obj = np.array([r.objective for r in records], dtype=np.float64)
    best = int(np.argmax(obj))
    r = records[best]
    return LaneRecord(float(r.objective), int(r.index_k), int(r.index_l))
