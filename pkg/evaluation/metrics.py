"""
Perception and tracking outcome counts, increments over baseline, and the
summary table.

Detections are scored against sensor-frame truth boxes, confirmed tracks
against world-frame truth boxes. Only objects within eval_range of the sensor
count on either side.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from tracking.association import associate, bev_distance_matrix
from utils.exceptions import AlignmentError, ConfigError

logger = logging.getLogger(__name__)

FRAME_FIELDS = ('frame', 'fp', 'fn', 'ft', 'mt', 'unsafe_count', 'false_alarm', 'attributed_fp', 'attributed_ft')
REPORT_FIELDS = ('scene', 'av', 'attack', 'frames', 'fp_inc', 'fn_inc', 'ft_inc', 'mt_inc', 'unsafe_scene',
                 'false_alarm_frames', 'attributed_fp_inc', 'attributed_ft_inc')
SUMMARY_FIELDS = ('av', 'attack', 'scenes', 'fp_inc', 'fn_inc', 'ft_inc', 'mt_inc', 'unsafe_fraction')


@dataclass(frozen=True)
class MetricsConfig:
    gate: float = 2.0
    eval_range: float = 50.0
    attribution_radius: float = 3.0
    attributed: bool = False

    def __post_init__(self):
        if self.gate <= 0 or self.eval_range <= 0 or self.attribution_radius <= 0:
            raise ConfigError("metrics gate, eval_range and attribution_radius must be positive")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid metrics section: {e}") from e


def bev_centers(items) -> np.ndarray:
    """(N, 2) BEV centers of detections, tracks, boxes or raw (x, y) pairs."""
    centers = []
    for item in items:
        if hasattr(item, 'box') and hasattr(item, 'status'):
            centers.append(item.position[:2])
        elif hasattr(item, 'box') and item.box is not None:
            centers.append(item.box.center[:2])
        elif hasattr(item, 'center'):
            centers.append(item.center[:2])
        else:
            centers.append(item[:2])
    return np.asarray(centers, dtype=float).reshape(-1, 2)


def match(predictions, truth, gate: float):
    return associate(bev_distance_matrix(bev_centers(predictions), bev_centers(truth)), gate)


def match_and_count(predictions, truth, gate: float = 2.0):
    """
    Gated one-to-one matching on BEV center distance.

    Returns:
        tuple: (unmatched predictions, unmatched truths), i.e. (FP, FN) for
        detections and (FT, MT) for confirmed tracks
    """
    if gate <= 0:
        raise ValueError(f"gate must be positive, got {gate}")
    assignment = match(predictions, truth, gate)
    return len(assignment.unmatched_rows), len(assignment.unmatched_cols)


def within_range(items, origin_xy, eval_range: float) -> list:
    centers = bev_centers(items)
    if len(centers) == 0:
        return []
    near = np.hypot(*(centers - np.asarray(origin_xy, dtype=float)).T) <= eval_range
    return [item for item, keep in zip(items, near) if keep]


def attributed_count(predictions, truth, gate: float, location_xy, radius: float) -> int:
    """Unmatched predictions within radius of where the attacker put something."""
    if location_xy is None:
        return 0
    assignment = match(predictions, truth, gate)
    centers = bev_centers(predictions)
    return sum(1 for r in assignment.unmatched_rows
               if np.hypot(*(centers[r] - np.asarray(location_xy, dtype=float))) <= radius)


@dataclass(frozen=True)
class FrameMetrics:
    frame: int
    fp: int = 0
    fn: int = 0
    ft: int = 0
    mt: int = 0
    unsafe_count: int = 0
    false_alarm: bool = False
    attributed_fp: int = 0
    attributed_ft: int = 0

    def __post_init__(self):
        for name in ('fp', 'fn', 'ft', 'mt', 'unsafe_count', 'attributed_fp', 'attributed_ft'):
            if getattr(self, name) < 0:
                raise ValueError(f"FrameMetrics.{name} must be >= 0")

    def as_row(self):
        return [getattr(self, name) for name in FRAME_FIELDS]

    @classmethod
    def from_row(cls, row):
        return cls(
            frame=int(row['frame']),
            **{name: int(row[name]) for name in FRAME_FIELDS[1:6] + FRAME_FIELDS[7:]},
            false_alarm=row['false_alarm'] == 'true',
        )


def frame_metrics(frame: int, detections, tracks, truth, sensor_pose, unsafe_count: int = 0,
                  false_alarm: bool = False, cfg: MetricsConfig = MetricsConfig(), attack_location=None) -> FrameMetrics:
    """
    Count one frame's outcomes.

    Args:
        frame: Frame index
        detections: Victim LiDAR detections (sensor frame)
        tracks: Confirmed victim tracks (world frame)
        truth: Scene TruthObjects (carrying both box and box_sensor)
        sensor_pose: Victim sensor pose for the frame
        unsafe_count: Perceived unsafe objects this frame
        false_alarm: Perceived unsafe while the truth is safe
        cfg: Matching gate, evaluation range and attribution settings
        attack_location: Sensor-frame (x, y) the attacker targeted, if any

    Returns:
        FrameMetrics
    """
    truth_sensor = within_range([t.box_sensor for t in truth], (0.0, 0.0), cfg.eval_range)
    truth_world = within_range([t.box for t in truth], sensor_pose.position[:2], cfg.eval_range)
    detections = within_range(detections, (0.0, 0.0), cfg.eval_range)
    tracks = within_range(tracks, sensor_pose.position[:2], cfg.eval_range)

    fp, fn = match_and_count(detections, truth_sensor, cfg.gate)
    ft, mt = match_and_count(tracks, truth_world, cfg.gate)
    attributed_fp = attributed_ft = 0
    if cfg.attributed and attack_location is not None:
        location = np.asarray(attack_location[:2], dtype=float)
        world = sensor_pose.to_world(np.array([location[0], location[1], 0.0]))[:2]
        attributed_fp = attributed_count(detections, truth_sensor, cfg.gate, location, cfg.attribution_radius)
        attributed_ft = attributed_count(tracks, truth_world, cfg.gate, world, cfg.attribution_radius)
    return FrameMetrics(frame=frame, fp=fp, fn=fn, ft=ft, mt=mt, unsafe_count=unsafe_count,
                        false_alarm=false_alarm, attributed_fp=attributed_fp, attributed_ft=attributed_ft)


@dataclass(frozen=True)
class IncrementReport:
    frames: int
    fp_inc: float = 0.0
    fn_inc: float = 0.0
    ft_inc: float = 0.0
    mt_inc: float = 0.0
    unsafe_scene: bool = False
    false_alarm_frames: int = 0
    attributed_fp_inc: float = 0.0
    attributed_ft_inc: float = 0.0

    def as_dict(self):
        return asdict(self)


def increment_over_baseline(attacked, baseline) -> IncrementReport:
    """
    Mean per-frame (attacked - baseline) counts.

    A scene is unsafe when any frame's perceived unsafe count differs from
    the baseline's.

    Raises:
        AlignmentError: runs differ in length or frame numbering
    """
    attacked, baseline = list(attacked), list(baseline)
    if len(attacked) != len(baseline):
        raise AlignmentError(f"Attacked run has {len(attacked)} frames, baseline {len(baseline)}")
    if [m.frame for m in attacked] != [m.frame for m in baseline]:
        raise AlignmentError("Attacked and baseline frame indices differ")
    if not attacked:
        return IncrementReport(frames=0)

    def increment(name):
        return float(np.mean([getattr(a, name) - getattr(b, name) for a, b in zip(attacked, baseline)]))

    return IncrementReport(
        frames=len(attacked),
        fp_inc=increment('fp'),
        fn_inc=increment('fn'),
        ft_inc=increment('ft'),
        mt_inc=increment('mt'),
        unsafe_scene=any(a.unsafe_count != b.unsafe_count for a, b in zip(attacked, baseline)),
        false_alarm_frames=sum(1 for a in attacked if a.false_alarm),
        attributed_fp_inc=increment('attributed_fp'),
        attributed_ft_inc=increment('attributed_ft'),
    )


@dataclass(frozen=True)
class SummaryRow:
    av: int
    attack: str
    scenes: int
    fp_inc: float
    fn_inc: float
    ft_inc: float
    mt_inc: float
    unsafe_fraction: float

    def as_row(self):
        return [getattr(self, f.name) for f in fields(self)]

    @classmethod
    def from_row(cls, row):
        return cls(
            av=int(row['av']),
            attack=row['attack'],
            scenes=int(row['scenes']),
            **{name: float(row[name]) for name in SUMMARY_FIELDS[3:]},
        )


def aggregate_table(reports, attack_order=None) -> list:
    """
    Average reports over scenes for every (av, attack) cell.

    Args:
        reports: {(av, attack, scene): IncrementReport}
        attack_order: Optional attack ordering for the rows

    Returns:
        list[SummaryRow]: sorted by av, then attack
    """
    cells = defaultdict(list)
    for (av, attack, _scene), report in reports.items():
        cells[(av, attack)].append(report)

    order = {name: i for i, name in enumerate(attack_order or ())}
    rows = []
    for (av, attack), group in sorted(cells.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], len(order)), kv[0][1])):
        rows.append(SummaryRow(
            av=av,
            attack=attack,
            scenes=len(group),
            fp_inc=float(np.mean([r.fp_inc for r in group])),
            fn_inc=float(np.mean([r.fn_inc for r in group])),
            ft_inc=float(np.mean([r.ft_inc for r in group])),
            mt_inc=float(np.mean([r.mt_inc for r in group])),
            unsafe_fraction=sum(1 for r in group if r.unsafe_scene) / len(group),
        ))
    logger.debug(f"Aggregated {len(reports)} reports into {len(rows)} summary cells")
    return rows
