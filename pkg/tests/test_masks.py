import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackfuse.errors import DimensionMismatch, MaskFormatError
from trackfuse.masks import (
    BBox,
    Mask,
    SegmentSet,
    enforce_nonoverlap,
    intersection,
    iou,
    rle_encode,
    tightest_bbox,
    union,
)

from conftest import block_mask, mask_from_rows, random_mask


class TestRLE:
    def test_all_false(self):
        assert rle_encode(np.zeros((2, 2), dtype=bool)).runs == (4,)

    def test_all_true(self):
        assert rle_encode(np.ones((2, 2), dtype=bool)).runs == (0, 4)

    def test_single_top_left(self):
        grid = np.zeros((2, 2), dtype=bool)
        grid[0, 0] = True
        assert rle_encode(grid).runs == (0, 1, 3)

    def test_row_major_scan(self):
        # ".#" / "#." scans to 0,1,1,0 -> runs (1,2,1)
        assert mask_from_rows([".#", "#."]).runs == (1, 2, 1)

    def test_zero_sized_grid_rejected(self):
        with pytest.raises(MaskFormatError):
            rle_encode(np.zeros((0, 3), dtype=bool))
        with pytest.raises(MaskFormatError):
            Mask(0, 4, (0,))

    def test_invalid_runs_rejected(self):
        with pytest.raises(MaskFormatError):
            Mask(2, 2, (1, 0, 3))  # interior zero run
        with pytest.raises(MaskFormatError):
            Mask(2, 2, (1, 2))  # wrong total
        with pytest.raises(MaskFormatError):
            Mask(2, 2, (-1, 5))

    def test_round_trip_seeded_fuzz(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            h = int(rng.integers(1, 65))
            w = int(rng.integers(1, 65))
            grid = rng.random((h, w)) < rng.random()
            mask = rle_encode(grid)
            assert np.array_equal(mask.to_array(), grid)

    @given(
        st.integers(1, 16),
        st.integers(1, 16),
        st.integers(0, 2**32 - 1),
        st.floats(0.0, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_round_trip_hypothesis(self, w, h, seed, density):
        grid = np.random.default_rng(seed).random((h, w)) < density
        mask = rle_encode(grid)
        assert np.array_equal(mask.to_array(), grid)
        # re-encoding the decode is canonical
        assert rle_encode(mask.to_array()) == mask

    def test_json_round_trip(self):
        m = block_mask(5, 4, 1, 1, 3, 2)
        assert Mask.from_json(m.to_json()) == m


class TestIoU:
    def test_identical_nonempty(self):
        m = block_mask(4, 4, 0, 0, 2, 2)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = block_mask(6, 6, 0, 0, 1, 1)
        b = block_mask(6, 6, 4, 4, 5, 5)
        assert iou(a, b) == 0.0

    def test_half_overlap(self):
        left = block_mask(4, 4, 0, 0, 1, 3)
        assert iou(left, Mask.full(4, 4)) == pytest.approx(8 / 16)

    def test_both_empty_is_zero(self):
        assert iou(Mask.empty(3, 3), Mask.empty(3, 3)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            iou(Mask.empty(3, 3), Mask.empty(4, 3))

    def test_symmetry_and_range(self, rng):
        for _ in range(200):
            a = random_mask(rng, 9, 7, 0.4)
            b = random_mask(rng, 9, 7, 0.4)
            v = iou(a, b)
            assert v == iou(b, a)
            assert 0.0 <= v <= 1.0


class TestUnionIntersection:
    def test_union_with_empty_is_identity(self):
        a = block_mask(5, 5, 1, 1, 3, 3)
        assert union(a, Mask.empty(5, 5)) == a

    def test_union_idempotent(self):
        a = block_mask(5, 5, 0, 2, 4, 4)
        assert union(a, a) == a

    def test_disjoint_union_area(self):
        a = block_mask(8, 8, 0, 0, 2, 2)
        b = block_mask(8, 8, 5, 5, 7, 7)
        assert union(a, b).area == a.area + b.area

    def test_inclusion_exclusion(self, rng):
        for _ in range(200):
            a = random_mask(rng, 8, 8, 0.4)
            b = random_mask(rng, 8, 8, 0.4)
            assert union(a, b).area + intersection(a, b).area == a.area + b.area


class TestBBox:
    def test_single_pixel(self):
        arr = np.zeros((8, 8), dtype=bool)
        arr[5, 3] = True
        assert tightest_bbox(rle_encode(arr)) == BBox(3, 5, 3, 5)

    def test_full_frame(self):
        assert tightest_bbox(Mask.full(6, 4)) == BBox(0, 0, 5, 3)

    def test_two_pixels(self):
        arr = np.zeros((5, 6), dtype=bool)
        arr[1, 1] = True
        arr[2, 4] = True
        assert tightest_bbox(rle_encode(arr)) == BBox(1, 1, 4, 2)

    def test_empty_is_none(self):
        assert tightest_bbox(Mask.empty(4, 4)) is None

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            BBox(3, 0, 1, 0)


class TestEnforceNonoverlap:
    def test_disjoint_unchanged(self):
        a = block_mask(8, 8, 0, 0, 2, 2)
        b = block_mask(8, 8, 5, 5, 7, 7)
        assert enforce_nonoverlap([a, b], [0, 1]) == [a, b]

    def test_total_overlap_priority(self):
        m = Mask.full(3, 3)
        out = enforce_nonoverlap([m, m], [1, 2])
        assert out[0] == m
        assert out[1].is_empty()

    def test_partial_overlap_pixelwise(self):
        a = block_mask(6, 6, 0, 0, 3, 3)
        b = block_mask(6, 6, 2, 2, 5, 5)
        out = enforce_nonoverlap([a, b], [0, 1])
        assert out[0] == a
        expected = b.to_array() & ~a.to_array()
        assert np.array_equal(out[1].to_array(), expected)

    def test_priority_ranks_not_order(self):
        a = block_mask(6, 6, 0, 0, 3, 3)
        b = block_mask(6, 6, 2, 2, 5, 5)
        out = enforce_nonoverlap([a, b], [5, 1])  # b outranks a
        assert out[1] == b
        assert np.array_equal(out[0].to_array(), a.to_array() & ~b.to_array())

    def test_disjoint_and_covering(self, rng):
        for _ in range(100):
            masks = [random_mask(rng, 7, 7, 0.5) for _ in range(4)]
            out = enforce_nonoverlap(masks, list(range(4)))
            acc = np.zeros((7, 7), dtype=bool)
            want = np.zeros((7, 7), dtype=bool)
            for m_in, m_out in zip(masks, out):
                assert not np.any(acc & m_out.to_array())
                acc |= m_out.to_array()
                want |= m_in.to_array()
            assert np.array_equal(acc, want)


class TestSegmentSet:
    def test_validate_rejects_overlap(self):
        m = Mask.full(3, 3)
        with pytest.raises(MaskFormatError):
            SegmentSet(0, [m, m]).validate()

    def test_empty_frame_normalizes(self):
        assert SegmentSet(0, [], ids=[]).ids is None

    def test_scores_default_to_one(self):
        s = SegmentSet(0, [Mask.full(2, 2)])
        assert s.effective_scores() == (1.0,)
