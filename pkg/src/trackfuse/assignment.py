"""Optimal one-to-one matching between tracked masks and detected segments.

The square assignment problem is solved exactly with an O(n^3)
augmenting-path method.  Among equally optimal assignments the
lexicographically smallest permutation is returned, so runs are
byte-reproducible.  When track and segment counts differ, the smaller
side is padded with zero masks before matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .masks import Mask, iou

_TIE_TOL = 1e-9


def _solve_min_cost(cost: list[list[float]]) -> tuple[float, list[int]]:
    """Exact minimum-cost assignment via shortest augmenting paths.

    Returns (total cost, column assigned to each row).
    """
    n = len(cost)
    if n == 0:
        return 0.0, []
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    total = sum(cost[i][col_of_row[i]] for i in range(n))
    return total, col_of_row


def hungarian(cost: Sequence[Sequence[float]]) -> list[int]:
    """Permutation minimizing total cost over a square matrix.

    Ties between optimal assignments resolve to the lexicographically
    smallest permutation (row 0's column first, then row 1's, ...).
    """
    n = len(cost)
    rows = []
    for r, row in enumerate(cost):
        row = [float(x) for x in row]
        if len(row) != n:
            raise ValueError(f"cost matrix is not square: row {r} has {len(row)} entries")
        if any(not math.isfinite(x) for x in row):
            raise ValueError(f"cost matrix contains non-finite entries in row {r}")
        rows.append(row)
    if n == 0:
        return []
    best_total, _ = _solve_min_cost(rows)
    tol = _TIE_TOL * max(1.0, abs(best_total))

    # Fix rows in order; for each, take the smallest column that still
    # admits an optimal completion.
    chosen: list[int] = []
    cols_left = list(range(n))
    prefix = 0.0
    for r in range(n):
        rest_rows = range(r + 1, n)
        for k, c in enumerate(cols_left):
            rest_cols = cols_left[:k] + cols_left[k + 1:]
            sub = [[rows[i][j] for j in rest_cols] for i in rest_rows]
            rest_total, _ = _solve_min_cost(sub)
            if prefix + rows[r][c] + rest_total <= best_total + tol:
                chosen.append(c)
                cols_left.pop(k)
                prefix += rows[r][c]
                break
        else:  # pragma: no cover - the optimum always admits a completion
            raise RuntimeError("no optimal completion found (internal error)")
    return chosen


@dataclass(frozen=True)
class MatchPair:
    """One slot pairing; ``None`` marks a padding slot."""

    track_slot: Optional[int]
    seg_slot: Optional[int]
    iou: float
    matched: bool


@dataclass(frozen=True)
class Matching:
    pairs: tuple[MatchPair, ...]

    @property
    def matched_pairs(self) -> list[MatchPair]:
        return [p for p in self.pairs if p.matched]

    @property
    def unmatched_track_slots(self) -> list[int]:
        return [p.track_slot for p in self.pairs if p.track_slot is not None and not p.matched]

    @property
    def unmatched_seg_slots(self) -> list[int]:
        return [p.seg_slot for p in self.pairs if p.seg_slot is not None and not p.matched]


def match_track_seg(
    tracks: Sequence[Mask],
    segs: Sequence[Mask],
    matched_iou_min: float = 0.0,
) -> Matching:
    """Assign tracked masks to detected segments with zero-mask padding.

    The smaller list is padded to ``N = max(P, Q)``; the cost of pairing
    track q with segment p is ``-IoU``.  A pair counts as matched only
    when both slots are real and its IoU strictly exceeds
    ``matched_iou_min``; padding can never match.
    """
    if matched_iou_min < 0:
        raise ValueError("matched_iou_min must be >= 0")
    q_n, p_n = len(tracks), len(segs)
    n = max(q_n, p_n)
    if n == 0:
        return Matching(())
    overlap = [[0.0] * p_n for _ in range(q_n)]
    for q, track in enumerate(tracks):
        for p, seg in enumerate(segs):
            overlap[q][p] = iou(track, seg)
    cost = [[0.0] * n for _ in range(n)]
    for q in range(q_n):
        for p in range(p_n):
            cost[q][p] = -overlap[q][p]
    perm = hungarian(cost)
    pairs = []
    for q in range(n):
        p = perm[q]
        track_slot = q if q < q_n else None
        seg_slot = p if p < p_n else None
        pair_iou = overlap[q][p] if (track_slot is not None and seg_slot is not None) else 0.0
        matched = (
            track_slot is not None and seg_slot is not None and pair_iou > matched_iou_min
        )
        pairs.append(MatchPair(track_slot, seg_slot, pair_iou, matched))
    return Matching(tuple(pairs))
