import numpy as np
import pytest

from trackfuse.masks import Mask, SegmentSet, rle_encode
from trackfuse.metrics import (
    box_iou,
    count_fp_instance_frames,
    detection_scores,
    foreground,
    frame_dice,
    frame_iou,
    mae,
    temporal_consistency,
    video_seg_scores,
)
from trackfuse.warp import IDENTITY_AFFINE, WarpField

from conftest import block_mask, random_mask


def invert(m: Mask) -> Mask:
    return rle_encode(~m.to_array())


def identity_warps(n):
    return [WarpField(f, f + 1, IDENTITY_AFFINE) for f in range(n - 1)]


class TestFrameDice:
    def test_identical(self):
        m = block_mask(6, 6, 1, 1, 4, 4)
        assert frame_dice(m, m) == 1.0

    def test_disjoint(self):
        a = block_mask(6, 6, 0, 0, 1, 1)
        b = block_mask(6, 6, 4, 4, 5, 5)
        assert frame_dice(a, b) == 0.0

    def test_half(self):
        # |p| = |g| = 8, overlap 4
        p = block_mask(8, 8, 0, 0, 7, 0)
        g = block_mask(8, 8, 4, 0, 7, 1)
        assert frame_dice(p, g) == pytest.approx(0.5)

    def test_both_empty_is_one(self):
        assert frame_dice(None, None) == 1.0
        assert frame_dice(Mask.empty(4, 4), None) == 1.0

    def test_symmetry_and_dominates_iou(self, rng):
        for _ in range(100):
            p = random_mask(rng, 8, 8, 0.4)
            g = random_mask(rng, 8, 8, 0.4)
            assert frame_dice(p, g) == frame_dice(g, p)
            assert frame_dice(p, g) >= frame_iou(p, g)


class TestMae:
    def test_identical(self):
        m = block_mask(6, 6, 1, 1, 4, 4)
        assert mae(m, m) == 0.0

    def test_complement(self):
        g = block_mask(6, 6, 1, 1, 4, 4)
        assert mae(invert(g), g) == 1.0

    def test_one_wrong_pixel(self):
        g = block_mask(10, 10, 2, 2, 4, 4)
        arr = g.to_array().copy()
        arr[0, 0] = True
        assert mae(rle_encode(arr), g) == pytest.approx(0.01)

    def test_complement_identity(self, rng):
        for _ in range(50):
            p = random_mask(rng, 7, 7, 0.5)
            g = random_mask(rng, 7, 7, 0.5)
            assert mae(p, g) + mae(p, invert(g)) == pytest.approx(1.0)


class TestTemporalConsistency:
    def test_static_prediction_is_one(self):
        m = block_mask(8, 8, 2, 2, 5, 5)
        assert temporal_consistency([m] * 4, identity_warps(4)) == 1.0

    def test_alternating_disjoint_is_zero(self):
        a = block_mask(8, 8, 0, 0, 1, 1)
        b = block_mask(8, 8, 5, 5, 7, 7)
        assert temporal_consistency([a, b, a, b], identity_warps(4)) == 0.0

    def test_motion_following_prediction_is_one(self):
        warps = [WarpField(f, f + 1, (1.0, 0.0, 1.0, 0.0, 1.0, 0.0)) for f in range(3)]
        preds = [block_mask(16, 16, 2 + f, 4, 6 + f, 8) for f in range(4)]
        assert temporal_consistency(preds, warps) == 1.0

    def test_single_frame_undefined(self):
        assert temporal_consistency([block_mask(4, 4, 0, 0, 1, 1)], []) is None

    def test_identity_equals_consecutive_dice(self, rng):
        preds = [random_mask(rng, 8, 8, 0.4) for _ in range(5)]
        tc = temporal_consistency(preds, identity_warps(5))
        expected = np.mean([frame_dice(preds[f], preds[f + 1]) for f in range(4)])
        assert tc == pytest.approx(expected)

    def test_empty_frames_agree(self):
        assert temporal_consistency([None, None, None], identity_warps(3)) == 1.0


class TestVideoSegScores:
    def _video(self, masks):
        return [SegmentSet(f, [m] if m is not None else []) for f, m in enumerate(masks)]

    def test_perfect_prediction(self):
        m = block_mask(8, 8, 1, 1, 5, 5)
        preds = self._video([m, m, m])
        scores = video_seg_scores(preds, preds, identity_warps(3))
        assert scores.dice == 1.0 and scores.iou == 1.0
        assert scores.mae == 0.0 and scores.tc == 1.0

    def test_positives_only_skips_negative_frames(self):
        m = block_mask(8, 8, 1, 1, 5, 5)
        fp = block_mask(8, 8, 6, 6, 7, 7)
        preds = self._video([m, fp, m])
        gts = self._video([m, None, m])
        default = video_seg_scores(preds, gts)
        assert default.dice == 1.0  # the false positive on a negative frame is ignored
        everything = video_seg_scores(preds, gts, positives_only=False)
        assert everything.dice < 1.0

    def test_all_negative_video_has_no_seg_scores(self):
        preds = self._video([None, None])
        scores = video_seg_scores(preds, preds, identity_warps(2))
        assert scores.dice is None and scores.tc == 1.0

    def test_instances_flatten_to_foreground(self):
        a = block_mask(8, 8, 0, 0, 3, 3)
        b = block_mask(8, 8, 5, 5, 7, 7)
        both = SegmentSet(0, [a, b])
        merged = foreground(both)
        assert merged.area == a.area + b.area
        scores = video_seg_scores([both], [SegmentSet(0, [merged])])
        assert scores.dice == 1.0


class TestDetectionScores:
    def test_perfect_detection(self):
        m = block_mask(16, 16, 2, 2, 9, 9)
        frames = [SegmentSet(0, [m]), SegmentSet(1, [m])]
        scores = detection_scores(frames, frames)
        assert scores.f1_50 == 1.0
        assert scores.ap_50 == 1.0
        assert scores.ap_50_95 == 1.0

    def test_no_predictions(self):
        m = block_mask(16, 16, 2, 2, 9, 9)
        preds = [SegmentSet(0, [])]
        gts = [SegmentSet(0, [m])]
        scores = detection_scores(preds, gts)
        assert scores.f1_50 == 0.0 and scores.ap_50 == 0.0 and scores.ap_50_95 == 0.0

    def test_one_tp_one_fp_equal_scores(self):
        gt = block_mask(24, 24, 2, 2, 9, 9)
        fp = block_mask(24, 24, 14, 14, 21, 21)
        preds = [SegmentSet(0, [gt, fp])]
        gts = [SegmentSet(0, [gt])]
        scores = detection_scores(preds, gts)
        assert scores.f1_50 == pytest.approx(2 / 3)  # precision 0.5, recall 1.0

    def test_score_ranking_prefers_confident_tp(self):
        gt = block_mask(24, 24, 2, 2, 9, 9)
        fp = block_mask(24, 24, 14, 14, 21, 21)
        preds = [SegmentSet(0, [fp, gt], scores=[0.4, 0.9])]
        gts = [SegmentSet(0, [gt])]
        scores = detection_scores(preds, gts)
        assert scores.ap_50 == 1.0  # TP ranked first -> full precision at full recall

    def test_ap_hierarchy(self, rng):
        from conftest import random_disjoint_segments

        for _ in range(25):
            preds = [
                SegmentSet(f, random_disjoint_segments(rng, 16, 16, 3)) for f in range(4)
            ]
            gts = [
                SegmentSet(f, random_disjoint_segments(rng, 16, 16, 3)) for f in range(4)
            ]
            scores = detection_scores(preds, gts)
            assert scores.ap_50_95 <= scores.ap_50 + 1e-12

    def test_loose_box_fails_at_high_tau(self):
        gt = block_mask(24, 24, 2, 2, 11, 11)  # 10x10 box
        loose = block_mask(24, 24, 2, 2, 11, 8)  # 10x7: IoU 0.7
        scores = detection_scores([SegmentSet(0, [loose])], [SegmentSet(0, [gt])])
        assert scores.ap_50 == 1.0
        assert scores.ap_50_95 < 1.0


class TestBoxIoU:
    def test_identical(self):
        from trackfuse.masks import BBox

        assert box_iou(BBox(0, 0, 3, 3), BBox(0, 0, 3, 3)) == 1.0

    def test_disjoint(self):
        from trackfuse.masks import BBox

        assert box_iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0

    def test_half(self):
        from trackfuse.masks import BBox

        # 2x2 vs the 2x4 containing it
        assert box_iou(BBox(0, 0, 1, 1), BBox(0, 0, 1, 3)) == pytest.approx(0.5)


class TestFpInstanceFrames:
    def test_counts_unmatched_predictions(self):
        gt = block_mask(16, 16, 2, 2, 9, 9)
        fp = block_mask(16, 16, 12, 12, 14, 14)
        preds = [SegmentSet(0, [gt, fp]), SegmentSet(1, [fp])]
        gts = [SegmentSet(0, [gt]), SegmentSet(1, [gt])]
        assert count_fp_instance_frames(preds, gts) == 2

    def test_overlapping_prediction_not_counted(self):
        gt = block_mask(16, 16, 2, 2, 9, 9)
        close = block_mask(16, 16, 3, 3, 9, 9)
        assert count_fp_instance_frames([SegmentSet(0, [close])], [SegmentSet(0, [gt])]) == 0
