"""
Sweep file format: header {magic "LSWP", version u32, N u32} followed by N
records of (range f32, azimuth f32, elevation f32, timestamp f64, intensity f32),
all little-endian.
"""
from pathlib import Path

import numpy as np

from utils.exceptions import FrameError

from .pointcloud import Sweep, empty_points

MAGIC = b'LSWP'
VERSION = 1

HEADER_DTYPE = np.dtype([('magic', 'S4'), ('version', '<u4'), ('count', '<u4')])
RECORD_DTYPE = np.dtype([
    ('range', '<f4'),
    ('azimuth', '<f4'),
    ('elevation', '<f4'),
    ('timestamp', '<f8'),
    ('intensity', '<f4'),
])


def write_sweep_file(path, sweep: Sweep):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([(MAGIC, VERSION, len(sweep))], dtype=HEADER_DTYPE)
    records = np.zeros(len(sweep), dtype=RECORD_DTYPE)
    for name in RECORD_DTYPE.names:
        records[name] = sweep.points[name]
    with path.open('wb') as handle:
        handle.write(header.tobytes())
        handle.write(records.tobytes())
    return path


def read_sweep_file(path, index=0) -> Sweep:
    data = Path(path).read_bytes()
    if len(data) < HEADER_DTYPE.itemsize:
        raise FrameError(f"{path}: truncated sweep header")
    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if header['magic'] != MAGIC:
        raise FrameError(f"{path}: bad magic {header['magic']!r}")
    count = int(header['count'])
    expected = HEADER_DTYPE.itemsize + count * RECORD_DTYPE.itemsize
    if len(data) != expected:
        raise FrameError(f"{path}: expected {expected} bytes for {count} points, got {len(data)}")
    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=HEADER_DTYPE.itemsize)
    points = empty_points(count)
    for name in RECORD_DTYPE.names:
        points[name] = records[name]
    timestamp = float(points['timestamp'].min()) if count else 0.0
    return Sweep(points=points, index=index, timestamp=timestamp)
