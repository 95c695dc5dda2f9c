import numpy as np
import pytest

from trackfuse.assignment import match_track_seg
from trackfuse.masks import SegmentSet, union
from trackfuse.memory import (
    MemoryBank,
    refine,
    track_reference,
    track_window_remainder,
)
from trackfuse.warp import IDENTITY_AFFINE, SyntheticWarpPropagator, WarpField

from conftest import block_mask


def identity_propagator(num_frames=64):
    return SyntheticWarpPropagator(
        [WarpField(f, f + 1, IDENTITY_AFFINE) for f in range(num_frames - 1)]
    )


def run_window(bank, prop, ref_frame, window_index, segs, **kw):
    """Wire one reference-frame step: track, match, refine."""
    tracks = track_reference(bank, ref_frame, prop)
    matching = match_track_seg([tracks[i] for i in sorted(tracks)], segs.segments,
                               kw.pop("matched_iou_min", 0.0))
    return refine(
        bank, tracks, segs, matching,
        lambda1=kw.pop("lambda1", 1),
        lambda2=kw.pop("lambda2", 3),
        theta=kw.pop("theta", 0.5),
        ref_frame=ref_frame,
        window_index=window_index,
        propagator=prop,
        **kw,
    )


class TestTrackReference:
    def test_empty_bank(self):
        assert track_reference(MemoryBank(), 0, identity_propagator()) == {}

    def test_static_trajectory_identity(self):
        bank = MemoryBank()
        m = block_mask(10, 10, 2, 2, 5, 5)
        traj = bank.new_trajectory(m, 0)
        out = track_reference(bank, 3, identity_propagator())
        assert out == {traj.id: m}

    def test_cardinality(self):
        bank = MemoryBank()
        bank.new_trajectory(block_mask(10, 10, 0, 0, 2, 2), 0)
        bank.new_trajectory(block_mask(10, 10, 5, 5, 8, 8), 0)
        assert len(track_reference(bank, 2, identity_propagator())) == 2


class TestRefine:
    def test_first_window_promotion_with_lambda1_one(self):
        bank = MemoryBank()
        prop = identity_propagator()
        seg = block_mask(12, 12, 1, 1, 6, 6)
        refined = run_window(bank, prop, 0, 0, SegmentSet(0, [seg]))
        assert list(refined.values()) == [seg]
        (tid,) = refined.keys()
        assert bank.trajectories[tid].latest_mask == seg
        assert bank.trajectories[tid].latest_frame == 0

    def test_matched_pair_takes_union(self):
        bank = MemoryBank()
        prop = identity_propagator()
        track_mask = block_mask(12, 12, 1, 1, 8, 8)
        traj = bank.new_trajectory(track_mask, 0)
        seg = block_mask(12, 12, 1, 1, 6, 6)  # subset of the track
        refined = run_window(bank, prop, 3, 1, SegmentSet(3, [seg]))
        assert refined[traj.id] == track_mask  # union absorbs the subset
        assert bank.trajectories[traj.id].miss_count == 0

    def test_union_grows_with_partial_overlap(self):
        bank = MemoryBank()
        prop = identity_propagator()
        track_mask = block_mask(12, 12, 1, 1, 5, 5)
        traj = bank.new_trajectory(track_mask, 0)
        seg = block_mask(12, 12, 4, 4, 8, 8)
        refined = run_window(bank, prop, 3, 1, SegmentSet(3, [seg]))
        assert refined[traj.id] == union(track_mask, seg)

    def test_miss_counter_and_eviction(self):
        bank = MemoryBank()
        prop = identity_propagator()
        traj = bank.new_trajectory(block_mask(12, 12, 2, 2, 7, 7), 0)
        for w, ref in enumerate([3, 6, 9], start=1):
            refined = run_window(bank, prop, ref, w, SegmentSet(ref, []), lambda2=3)
            assert refined == {}  # missed: never rendered
            if ref < 9:
                assert bank.trajectories[traj.id].miss_count == w
        assert traj.id not in bank.trajectories  # evicted at the third miss

    def test_miss_count_resets_on_match(self):
        bank = MemoryBank()
        prop = identity_propagator()
        m = block_mask(12, 12, 2, 2, 7, 7)
        traj = bank.new_trajectory(m, 0)
        run_window(bank, prop, 3, 1, SegmentSet(3, []))
        assert bank.trajectories[traj.id].miss_count == 1
        run_window(bank, prop, 6, 2, SegmentSet(6, [m]))
        assert bank.trajectories[traj.id].miss_count == 0
        # interleave again: survives two more misses after the reset
        run_window(bank, prop, 9, 3, SegmentSet(9, []))
        run_window(bank, prop, 12, 4, SegmentSet(12, []))
        assert traj.id in bank.trajectories

    def test_missed_trajectory_not_refreshed(self):
        bank = MemoryBank()
        prop = identity_propagator()
        traj = bank.new_trajectory(block_mask(12, 12, 2, 2, 7, 7), 0)
        run_window(bank, prop, 3, 1, SegmentSet(3, []))
        assert bank.trajectories[traj.id].latest_frame == 0  # stale on purpose

    def test_render_missed_flag(self):
        bank = MemoryBank()
        prop = identity_propagator()
        m = block_mask(12, 12, 2, 2, 7, 7)
        traj = bank.new_trajectory(m, 0)
        refined = run_window(bank, prop, 3, 1, SegmentSet(3, []), render_missed=True)
        assert refined == {traj.id: m}
        assert bank.trajectories[traj.id].miss_count == 1
        assert bank.trajectories[traj.id].latest_frame == 3

    def test_candidate_needs_consecutive_windows(self):
        bank = MemoryBank()
        prop = identity_propagator()
        seg = block_mask(12, 12, 1, 1, 6, 6)
        # lambda1=2: first sighting only creates a candidate
        refined = run_window(bank, prop, 0, 0, SegmentSet(0, [seg]), lambda1=2)
        assert refined == {} and len(bank.candidates) == 1
        # second consecutive sighting promotes
        refined = run_window(bank, prop, 3, 1, SegmentSet(3, [seg]), lambda1=2)
        assert len(refined) == 1 and bank.candidates == []

    def test_candidate_dropped_after_gap(self):
        bank = MemoryBank()
        prop = identity_propagator()
        seg = block_mask(12, 12, 1, 1, 6, 6)
        run_window(bank, prop, 0, 0, SegmentSet(0, [seg]), lambda1=2)
        run_window(bank, prop, 3, 1, SegmentSet(3, []), lambda1=2)  # not re-observed
        assert bank.candidates == []
        # reappearing later starts over as a fresh candidate
        refined = run_window(bank, prop, 6, 2, SegmentSet(6, [seg]), lambda1=2)
        assert refined == {} and len(bank.candidates) == 1

    def test_ids_never_reused(self):
        bank = MemoryBank()
        prop = identity_propagator()
        seg = block_mask(12, 12, 1, 1, 6, 6)
        seen = set()
        ref = 0
        for w in range(6):
            # birth, then starve to eviction, repeatedly
            refined = run_window(bank, prop, ref, 2 * w, SegmentSet(ref, [seg]), lambda2=1)
            seen.update(refined.keys())
            ref += 3
            run_window(bank, prop, ref, 2 * w + 1, SegmentSet(ref, []), lambda2=1)
            ref += 3
        assert len(seen) == 6  # every rebirth received a fresh id

    def test_refined_masks_disjoint(self):
        bank = MemoryBank()
        prop = identity_propagator()
        a = block_mask(16, 16, 0, 0, 7, 7)
        b = block_mask(16, 16, 4, 4, 11, 11)  # overlaps a
        t1 = bank.new_trajectory(a, 0)
        refined = run_window(bank, prop, 3, 1, SegmentSet(3, [a, b]))
        # a matches t1 (iou 1); b is new; overlap resolves to the matched mask
        assert refined[t1.id] == a
        other = [tid for tid in refined if tid != t1.id]
        assert len(other) == 1
        assert not np.any(refined[other[0]].to_array() & a.to_array())

    def test_deterministic_via_snapshot(self):
        prop = identity_propagator()
        seg1 = block_mask(16, 16, 0, 0, 6, 6)
        seg2 = block_mask(16, 16, 9, 9, 14, 14)

        def build():
            bank = MemoryBank()
            run_window(bank, prop, 0, 0, SegmentSet(0, [seg1]))
            run_window(bank, prop, 3, 1, SegmentSet(3, [seg1, seg2]))
            run_window(bank, prop, 6, 2, SegmentSet(6, [seg2]))
            return bank.to_json()

        assert build() == build()

    def test_snapshot_round_trip(self):
        bank = MemoryBank()
        prop = identity_propagator()
        run_window(bank, prop, 0, 0, SegmentSet(0, [block_mask(16, 16, 0, 0, 6, 6)]), lambda1=2)
        bank.new_trajectory(block_mask(16, 16, 9, 9, 14, 14), 0)
        restored = MemoryBank.from_json(bank.to_json())
        assert restored.to_json() == bank.to_json()

    def test_snapshot_schema_valid(self):
        from trackfuse import schemas

        bank = MemoryBank()
        prop = identity_propagator()
        run_window(bank, prop, 0, 0, SegmentSet(0, [block_mask(16, 16, 0, 0, 6, 6)]), lambda1=2)
        bank.new_trajectory(block_mask(16, 16, 9, 9, 14, 14), 3)
        schemas.validate(bank.to_json(), schemas.BANK_SNAPSHOT_SCHEMA)

    def test_snapshot_version_checked(self):
        import pytest as _pytest

        snap = MemoryBank().to_json()
        snap["version"] = 99
        with _pytest.raises(Exception, match="version"):
            MemoryBank.from_json(snap)


class TestTrackWindowRemainder:
    def test_empty_bank(self):
        out = track_window_remainder(MemoryBank(), 0, [1, 2], identity_propagator())
        assert out == {1: {}, 2: {}}

    def test_static_object_repeats(self):
        bank = MemoryBank()
        m = block_mask(10, 10, 2, 2, 6, 6)
        traj = bank.new_trajectory(m, 0)
        out = track_window_remainder(bank, 0, [1, 2], identity_propagator())
        assert out[1] == {traj.id: m} and out[2] == {traj.id: m}

    def test_translating_object_follows_warps(self):
        prop = SyntheticWarpPropagator(
            [WarpField(f, f + 1, (1.0, 0.0, 1.0, 0.0, 1.0, 0.0)) for f in range(5)]
        )
        bank = MemoryBank()
        m = block_mask(12, 12, 2, 4, 5, 7)
        traj = bank.new_trajectory(m, 0)
        out = track_window_remainder(bank, 0, [1, 2], prop)
        assert out[1][traj.id] == block_mask(12, 12, 3, 4, 6, 7)
        assert out[2][traj.id] == block_mask(12, 12, 4, 4, 7, 7)

    def test_stale_trajectories_not_rendered(self):
        bank = MemoryBank()
        fresh = bank.new_trajectory(block_mask(10, 10, 0, 0, 2, 2), 3)
        stale = bank.new_trajectory(block_mask(10, 10, 6, 6, 8, 8), 0)  # missed this window
        out = track_window_remainder(bank, 3, [4, 5], identity_propagator())
        assert set(out[4]) == {fresh.id}
        assert stale.id not in out[5]

    def test_outputs_disjoint_by_ascending_id(self):
        bank = MemoryBank()
        a = block_mask(12, 12, 0, 0, 6, 6)
        b = block_mask(12, 12, 4, 4, 10, 10)
        t1 = bank.new_trajectory(a, 0)
        t2 = bank.new_trajectory(b, 0)
        out = track_window_remainder(bank, 0, [1], identity_propagator())
        assert out[1][t1.id] == a
        assert not np.any(out[1][t2.id].to_array() & a.to_array())
