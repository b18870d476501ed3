"""
Execution subroutines: every one of them edits ranges of existing rows only.

    find_missing_angles        grid cells with no return
    point_mask_from_trace      rows inside the angular hull of a trace
    point_mask_from_object     rows inside a (Cartesian) box
    inpaint_as_object          ranges from a smooth surface fitted to a trace
    inpaint_as_background      ranges from the angular neighbourhood

Angles are unwrapped around a reference azimuth before any planar geometry,
so regions straddling theta = 0 behave like any other.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy import ndimage
from scipy.interpolate import RBFInterpolator
from scipy.spatial import ConvexHull, cKDTree

from sensors.geometry import OrientedBox, SensorModel, wrap_pi
from sensors.pointcloud import RANGE_RESOLUTION, Sweep, make_points, quantize_range
from sensors.raycast import cast, ray_directions

logger = logging.getLogger(__name__)

NEIGHBOUR_KERNEL = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]])
RBF_NEIGHBORS = 32
HULL_TOLERANCE = 1e-9
MAX_TRACE_SAMPLES = 64


def circular_mean(theta) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(math.atan2(np.sin(theta).mean(), np.cos(theta).mean()))


def unwrap_about(theta, reference: float) -> np.ndarray:
    return wrap_pi(np.asarray(theta, dtype=float) - reference)


def occupancy_grid(sweep: Sweep, sensor: SensorModel) -> np.ndarray:
    occupied = np.zeros((sensor.azimuth_count, sensor.channel_count), dtype=bool)
    if len(sweep):
        occupied[sensor.azimuth_index(sweep.points['azimuth']), sensor.channel_index(sweep.points['elevation'])] = True
    return occupied


def find_missing_angles(sweep: Sweep, sensor: SensorModel, fill_threshold: int = 7) -> np.ndarray:
    """
    (theta, phi) of grid cells without a return, after filling spurious holes.

    A cell is filled when at least fill_threshold of its 8 neighbours are
    occupied; azimuth wraps around, channels do not.

    Returns:
        np.ndarray: (K, 2) array of missing (theta, phi)
    """
    missing = missing_cells(sweep, sensor, fill_threshold)
    az, ch = np.nonzero(missing)
    return np.column_stack([sensor.azimuths[az], sensor.elevations[ch]])


def missing_cells(sweep: Sweep, sensor: SensorModel, fill_threshold: int = 7) -> np.ndarray:
    occupied = occupancy_grid(sweep, sensor).astype(np.int64)
    padded = np.pad(occupied, ((1, 1), (0, 0)), mode='wrap')
    padded = np.pad(padded, ((0, 0), (1, 1)), mode='constant')
    neighbours = ndimage.convolve(padded, NEIGHBOUR_KERNEL, mode='constant')[1:-1, 1:-1]
    filled = occupied.astype(bool) | (neighbours >= fill_threshold)
    return ~filled


def _hull_mask(points_2d: np.ndarray, trace_2d: np.ndarray) -> np.ndarray:
    unique = np.unique(trace_2d, axis=0)
    centered = unique - unique.mean(axis=0)
    if len(unique) < 3 or np.linalg.matrix_rank(centered, tol=1e-12) < 2:
        # Degenerate trace: its bounding rectangle is all there is
        return np.ones(len(points_2d), dtype=bool)
    hull = ConvexHull(unique)
    normals, offsets = hull.equations[:, :2], hull.equations[:, 2]
    return np.all(points_2d @ normals.T + offsets <= HULL_TOLERANCE, axis=1)


def point_mask_from_trace(sweep: Sweep, trace: np.ndarray) -> np.ndarray:
    """Rows whose (theta, phi) lies inside the convex hull of the trace's angles."""
    mask = np.zeros(len(sweep), dtype=bool)
    if len(trace) == 0 or len(sweep) == 0:
        return mask
    reference = circular_mean(trace['azimuth'])
    t_theta = unwrap_about(trace['azimuth'], reference)
    t_phi = np.asarray(trace['elevation'], dtype=float)
    s_theta = unwrap_about(sweep.points['azimuth'], reference)
    s_phi = sweep.points['elevation']

    coarse = ((s_theta >= t_theta.min() - HULL_TOLERANCE) & (s_theta <= t_theta.max() + HULL_TOLERANCE)
              & (s_phi >= t_phi.min() - HULL_TOLERANCE) & (s_phi <= t_phi.max() + HULL_TOLERANCE))
    rows = np.flatnonzero(coarse)
    if len(rows):
        inside = _hull_mask(np.column_stack([s_theta[rows], s_phi[rows]]), np.column_stack([t_theta, t_phi]))
        mask[rows[inside]] = True
    return mask


def point_mask_from_object(sweep: Sweep, box: OrientedBox) -> np.ndarray:
    """Rows whose return lies inside the box; returns beyond it on the same ray are untouched."""
    if len(sweep) == 0:
        return np.zeros(0, dtype=bool)
    return box.contains(sweep.cartesian())


def ground_ray_ranges(phi, sensor_height: float, max_range: float) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    with np.errstate(divide='ignore'):
        ground = sensor_height / np.sin(np.abs(phi))
    return np.where(phi < 0.0, np.minimum(ground, max_range), max_range)


def _finish_ranges(rho, phi, sensor_height):
    if sensor_height is not None:
        rho = np.minimum(rho, ground_ray_ranges(phi, sensor_height, np.inf))
    return np.maximum(quantize_range(rho), RANGE_RESOLUTION)


class TraceSurface:
    """
    Smooth surface rho = f(theta, phi) fitted once to a trace.

    A thin-plate spline with a linear polynomial tail; with too few trace
    points, or when the fit fails, each query takes the nearest trace range.
    """

    def __init__(self, trace: np.ndarray, min_trace_points: int = 16):
        self.reference = circular_mean(trace['azimuth'])
        self.coords = np.column_stack([unwrap_about(trace['azimuth'], self.reference), trace['elevation']])
        self.ranges = np.asarray(trace['range'])
        self.spline = None
        if len(trace) >= min_trace_points:
            try:
                self.spline = RBFInterpolator(self.coords, self.ranges, kernel='thin_plate_spline', degree=1,
                                              neighbors=min(RBF_NEIGHBORS, len(trace)))
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.warning(f"Trace surface fit failed ({e}); using nearest trace ranges")
        self._nearest = None

    def __call__(self, azimuth, elevation) -> np.ndarray:
        query = np.column_stack([unwrap_about(azimuth, self.reference), elevation])
        if self.spline is not None:
            try:
                return self.spline(query)
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.warning(f"Trace surface evaluation failed ({e}); using nearest trace ranges")
        if self._nearest is None:
            self._nearest = cKDTree(self.coords)
        _, nearest = self._nearest.query(query)
        return self.ranges[nearest]


def inpaint_as_object(sweep: Sweep, mask: np.ndarray, trace: np.ndarray, sensor_height=None,
                      min_trace_points: int = 16, surface: TraceSurface = None) -> Sweep:
    """
    Replace masked ranges by a smooth surface fitted to the trace.

    A surface already fitted to the same trace may be passed in. No masked
    row may end up below the ground plane.
    """
    out = sweep.copy()
    rows = np.flatnonzero(mask)
    if len(rows) == 0 or len(trace) == 0:
        return out
    if surface is None:
        surface = TraceSurface(trace, min_trace_points)
    rho = surface(sweep.points['azimuth'][rows], sweep.points['elevation'][rows])
    out.points['range'][rows] = _finish_ranges(rho, out.points['elevation'][rows], sensor_height)
    return out


def inpaint_as_background(sweep: Sweep, mask: np.ndarray, sensor_height: float, k_neighbors: int = 5,
                          elevation_weight: float = 10.0, radius: float = 0.25, max_range: float = 130.0) -> Sweep:
    """
    Replace masked ranges by the mean range of their k nearest unmasked rows.

    Distances are measured in (theta, elevation_weight * phi) so neighbours on
    the same channel are preferred. Rows with no neighbour within radius fall
    back to the ground-plane range (or max_range above the horizon).
    """
    out = sweep.copy()
    rows = np.flatnonzero(mask)
    if len(rows) == 0:
        return out
    points = sweep.points
    reference = circular_mean(points['azimuth'][rows])
    coords = np.column_stack([unwrap_about(points['azimuth'], reference), elevation_weight * points['elevation']])
    # only rows within radius of the masked azimuth span can be neighbours
    low, high = coords[rows, 0].min() - radius, coords[rows, 0].max() + radius
    context = np.flatnonzero(~mask & (coords[:, 0] >= low) & (coords[:, 0] <= high))

    fill = ground_ray_ranges(points['elevation'][rows], sensor_height, max_range)
    if len(context):
        k = min(k_neighbors, len(context))
        distance, index = cKDTree(coords[context]).query(coords[rows], k=k, distance_upper_bound=radius)
        distance = distance.reshape(len(rows), k)
        index = index.reshape(len(rows), k)
        found = np.isfinite(distance)
        context_ranges = np.append(points['range'][context], 0.0)
        total = np.where(found, context_ranges[np.minimum(index, len(context))], 0.0).sum(axis=1)
        count = found.sum(axis=1)
        fill = np.where(count > 0, total / np.maximum(count, 1), fill)

    out.points['range'][rows] = _finish_ranges(fill, points['elevation'][rows], None)
    return out


def box_trace(sensor: SensorModel, box: OrientedBox, sensor_height: float, resolution: float = 0.005) -> np.ndarray:
    """
    Returns a box would produce, sampled on a regular angular grid.

    Only rays that reach the box before the ground contribute, so the trace
    holds the victim-facing faces.
    """
    corners = box.corners()
    reference = math.atan2(box.center[1], box.center[0])
    theta = unwrap_about(np.arctan2(corners[:, 1], corners[:, 0]), reference)
    phi = np.arctan2(corners[:, 2], np.hypot(corners[:, 0], corners[:, 1]))
    phi_low = max(phi.min(), sensor.elevations.min())
    phi_high = min(phi.max(), sensor.elevations.max())
    if phi_low > phi_high:
        return make_points([], [], [])

    def samples(low, high):
        count = int(np.clip(math.ceil((high - low) / resolution) + 1, 2, MAX_TRACE_SAMPLES))
        return np.linspace(low, high, count)

    grid_theta, grid_phi = np.meshgrid(samples(theta.min(), theta.max()), samples(phi_low, phi_high), indexing='ij')
    grid_theta, grid_phi = grid_theta.ravel(), grid_phi.ravel()
    distance, hit = cast(ray_directions(grid_theta + reference, grid_phi), [box], sensor_height, sensor.max_range,
                         elevations=grid_phi)
    on_box = hit == 0
    azimuth = np.mod(grid_theta[on_box] + reference, 2.0 * math.pi)
    return make_points(distance[on_box], azimuth, grid_phi[on_box])


def car_trace(sensor: SensorModel, theta: float, rho: float, sensor_height: float, dims=(4.0, 2.0, 1.5),
              resolution: float = 0.005, min_range: float = 0.5) -> np.ndarray:
    """
    Trace of a car centered rho ahead along bearing theta, heading along the bearing.

    The center is kept far enough out that the near face stays min_range away.
    """
    center_range = max(rho, dims[0] / 2.0 + min_range)
    box = OrientedBox(
        (center_range * math.cos(theta), center_range * math.sin(theta), -sensor_height + dims[2] / 2.0),
        dims, theta,
    )
    return box_trace(sensor, box, sensor_height, resolution)


def missing_trace_rows(trace: np.ndarray, missing: np.ndarray, sensor: SensorModel) -> np.ndarray:
    """Trace points whose grid cell carries no return; they cannot be realized by editing ranges."""
    if len(trace) == 0:
        return np.zeros(0, dtype=bool)
    return missing[sensor.azimuth_index(trace['azimuth']), sensor.channel_index(trace['elevation'])]
