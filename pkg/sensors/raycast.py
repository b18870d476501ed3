"""
Ray casting against oriented boxes (slab method) and the ground plane.

Rays start at the sensor origin; distances are along unit direction vectors.
"""
import numpy as np

from .geometry import OrientedBox, rotation_2d, wrap_pi

SECTOR_TOLERANCE = 1e-9


def ray_directions(theta, phi) -> np.ndarray:
    cos_phi = np.cos(phi)
    return np.stack([cos_phi * np.cos(theta), cos_phi * np.sin(theta), np.sin(phi)], axis=-1)


def ray_box_distances(directions, box: OrientedBox) -> np.ndarray:
    """
    Entry distance of each ray into the box, np.inf where the ray misses.

    A ray starting inside the box reports no hit.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    rot = rotation_2d(box.yaw)
    local_dir = np.empty_like(directions)
    local_dir[:, :2] = directions[:, :2] @ rot
    local_dir[:, 2] = directions[:, 2]
    origin = -np.asarray(box.center, dtype=float)
    origin[:2] = origin[:2] @ rot
    half = np.asarray(box.dims) / 2.0

    with np.errstate(divide='ignore', invalid='ignore'):
        t1 = (-half - origin) / local_dir
        t2 = (half - origin) / local_dir
    t_low = np.minimum(t1, t2)
    t_high = np.maximum(t1, t2)

    # Axis-parallel rays: inside the slab spans everything, outside spans nothing
    parallel = local_dir == 0.0
    inside_slab = np.abs(origin) <= half
    t_low = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), t_low)
    t_high = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), t_high)

    t_near = t_low.max(axis=1)
    t_far = t_high.min(axis=1)
    hit = (t_near <= t_far) & (t_near > 0.0)
    return np.where(hit, t_near, np.inf)


def ground_distances(phi, mount_height) -> np.ndarray:
    """Range to the ground plane z = -mount_height, np.inf for rays at or above the horizon."""
    phi = np.asarray(phi, dtype=float)
    with np.errstate(divide='ignore'):
        distance = mount_height / np.sin(np.abs(phi))
    return np.where(phi < 0.0, distance, np.inf)


def bearing_sector(box: OrientedBox):
    """
    (center bearing, half width) of the azimuths a box can occupy, or None
    when the sensor stands over the box footprint.
    """
    local = box.to_local(np.zeros((1, 3)))[0]
    half = np.asarray(box.dims) / 2.0
    if abs(local[0]) <= half[0] and abs(local[1]) <= half[1]:
        return None
    corners = box.corners()
    bearing = float(np.arctan2(box.center[1], box.center[0]))
    offsets = wrap_pi(np.arctan2(corners[:, 1], corners[:, 0]) - bearing)
    return bearing, float(np.abs(offsets).max())


def cast(directions, boxes, mount_height, max_range, elevations=None, azimuths=None):
    """
    Nearest hit over boxes and the ground.

    Each box is only tested against the rays inside its bearing sector.

    Returns:
        tuple: (distance array with np.inf for no return, index of the hit
        box or -1 for ground / no hit)
    """
    directions = np.atleast_2d(directions)
    if elevations is None:
        elevations = np.arcsin(np.clip(directions[:, 2], -1.0, 1.0))
    distance = ground_distances(elevations, mount_height)
    hit_index = np.full(len(directions), -1, dtype=np.int64)
    if boxes and azimuths is None:
        azimuths = np.arctan2(directions[:, 1], directions[:, 0])
    for index, box in enumerate(boxes):
        sector = bearing_sector(box)
        if sector is None:
            rows = np.arange(len(directions))
        else:
            bearing, half_width = sector
            rows = np.flatnonzero(np.abs(wrap_pi(azimuths - bearing)) <= half_width + SECTOR_TOLERANCE)
        box_distance = ray_box_distances(directions[rows], box)
        closer = box_distance < distance[rows]
        distance[rows[closer]] = box_distance[closer]
        hit_index[rows[closer]] = index
    distance = np.where(distance <= max_range, distance, np.inf)
    hit_index[~np.isfinite(distance)] = -1
    return distance, hit_index
