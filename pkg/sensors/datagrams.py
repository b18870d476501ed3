"""
Bit-exact LiDAR datagram codec, sweep assembly and reverse-engineering of
datagrams from a point-cloud matrix.

Wire layout (little-endian, 1206 bytes):
    12 blocks x [flag 0xFF 0xEE | azimuth u16 (0.01 deg) | 32 x (range u16 (2 mm), intensity u8)]
    timestamp u32 (us) | mode u8 | model u8
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from utils.exceptions import AssignmentConflict, DatagramError, FrameError, MalformedError, OrderingError

from .geometry import SensorModel, wrap_pi
from .pointcloud import (
    BLOCKS_PER_DATAGRAM, INTENSITY_SCALE, RANGE_RESOLUTION, Sweep, azimuths_per_datagram,
    datagram_point_times, datagram_timestamps_us, empty_points, sort_points,
)

logger = logging.getLogger(__name__)

CELLS_PER_BLOCK = 32
FLAG_BYTES = (0xFF, 0xEE)
PADDING_AZIMUTH = 0xFFFF
AZIMUTH_UNITS = 36000
WRAP_THRESHOLD = AZIMUTH_UNITS // 2

MODE_STRONGEST = 0x37
MODE_LAST = 0x38
MODE_DUAL = 0x39
MODEL_HDL32E = 0x21

CELL_DTYPE = np.dtype([('range', '<u2'), ('intensity', 'u1')])
BLOCK_DTYPE = np.dtype([
    ('flag', 'u1', (2,)),
    ('azimuth', '<u2'),
    ('cells', CELL_DTYPE, (CELLS_PER_BLOCK,)),
])
PACKET_DTYPE = np.dtype([
    ('blocks', BLOCK_DTYPE, (BLOCKS_PER_DATAGRAM,)),
    ('timestamp', '<u4'),
    ('mode', 'u1'),
    ('model', 'u1'),
])
DATAGRAM_SIZE = PACKET_DTYPE.itemsize


@dataclass(eq=False)
class Datagram:
    """One decoded LiDAR packet."""

    azimuth_raw: np.ndarray
    range_raw: np.ndarray
    intensity_raw: np.ndarray
    timestamp_us: int = 0
    mode_byte: int = MODE_STRONGEST
    model_byte: int = MODEL_HDL32E

    def __post_init__(self):
        self.azimuth_raw = np.asarray(self.azimuth_raw, dtype=np.uint16).reshape(BLOCKS_PER_DATAGRAM)
        self.range_raw = np.asarray(self.range_raw, dtype=np.uint16).reshape(BLOCKS_PER_DATAGRAM, CELLS_PER_BLOCK)
        self.intensity_raw = np.asarray(self.intensity_raw, dtype=np.uint8).reshape(BLOCKS_PER_DATAGRAM, CELLS_PER_BLOCK)
        self.timestamp_us = int(self.timestamp_us)

    @classmethod
    def empty(cls, timestamp_us=0, mode_byte=MODE_STRONGEST):
        return cls(
            azimuth_raw=np.zeros(BLOCKS_PER_DATAGRAM, dtype=np.uint16),
            range_raw=np.zeros((BLOCKS_PER_DATAGRAM, CELLS_PER_BLOCK), dtype=np.uint16),
            intensity_raw=np.zeros((BLOCKS_PER_DATAGRAM, CELLS_PER_BLOCK), dtype=np.uint8),
            timestamp_us=timestamp_us,
            mode_byte=mode_byte,
        )

    @property
    def is_dual(self) -> bool:
        return self.mode_byte == MODE_DUAL

    @property
    def valid_blocks(self) -> np.ndarray:
        return self.azimuth_raw != PADDING_AZIMUTH

    def __eq__(self, other):
        if not isinstance(other, Datagram):
            return NotImplemented
        return (np.array_equal(self.azimuth_raw, other.azimuth_raw)
                and np.array_equal(self.range_raw, other.range_raw)
                and np.array_equal(self.intensity_raw, other.intensity_raw)
                and self.timestamp_us == other.timestamp_us
                and self.mode_byte == other.mode_byte
                and self.model_byte == other.model_byte)


def encode(d: Datagram) -> bytes:
    packet = np.zeros((), dtype=PACKET_DTYPE)
    blocks = packet['blocks']
    blocks['flag'] = FLAG_BYTES
    blocks['azimuth'] = d.azimuth_raw
    blocks['cells']['range'] = d.range_raw
    blocks['cells']['intensity'] = d.intensity_raw
    packet['timestamp'] = d.timestamp_us & 0xFFFFFFFF
    packet['mode'] = d.mode_byte
    packet['model'] = d.model_byte
    return packet.tobytes()


def decode(data: bytes) -> Datagram:
    """
    Parse one 1206-byte datagram.

    Raises:
        FrameError: wrong length
        MalformedError: any block flag other than 0xFF 0xEE
    """
    if len(data) != DATAGRAM_SIZE:
        raise FrameError(f"Datagram must be {DATAGRAM_SIZE} bytes, got {len(data)}")
    packet = np.frombuffer(data, dtype=PACKET_DTYPE, count=1)[0]
    blocks = packet['blocks']
    flags = blocks['flag']
    if np.any(flags[:, 0] != FLAG_BYTES[0]) or np.any(flags[:, 1] != FLAG_BYTES[1]):
        bad = int(np.flatnonzero((flags[:, 0] != FLAG_BYTES[0]) | (flags[:, 1] != FLAG_BYTES[1]))[0])
        raise MalformedError(f"Block {bad} has flag bytes {flags[bad].tolist()}, expected 0xFF 0xEE")
    return Datagram(
        azimuth_raw=blocks['azimuth'].copy(),
        range_raw=blocks['cells']['range'].copy(),
        intensity_raw=blocks['cells']['intensity'].copy(),
        timestamp_us=int(packet['timestamp']),
        mode_byte=int(packet['mode']),
        model_byte=int(packet['model']),
    )


def azimuth_raw_for_index(index, sensor: SensorModel) -> np.ndarray:
    """Grid azimuth index to hundredths of a degree."""
    return np.rint(AZIMUTH_UNITS * np.asarray(index, dtype=float) / sensor.azimuth_count).astype(np.uint16)


def azimuth_index_for_raw(raw, sensor: SensorModel) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    return np.mod(np.rint(raw * sensor.azimuth_count / AZIMUTH_UNITS), sensor.azimuth_count).astype(np.int64)


def _check_ordering(azimuths: np.ndarray):
    drops = np.flatnonzero(np.diff(azimuths.astype(np.int64)) < 0)
    if len(drops):
        at = int(drops[0])
        raise OrderingError(f"Azimuth decreased from {int(azimuths[at])} to {int(azimuths[at + 1])} inside a sweep")


def assemble_sweep(datagrams, sensor: SensorModel, index: int = 0) -> Sweep:
    """
    Build one sweep from an ordered run of datagrams.

    Zero-range cells and padding blocks are skipped; angles come from the
    sensor grid so a wire round trip reproduces the original matrix exactly.

    Raises:
        OrderingError: azimuth sequence decreases
    """
    datagrams = list(datagrams)
    if not datagrams:
        raise DatagramError("assemble_sweep needs at least one datagram")

    returns = 2 if datagrams[0].is_dual else 1
    mode = 'dual' if returns == 2 else 'single'
    m = sensor.channel_count

    azimuth_raw = np.stack([d.azimuth_raw for d in datagrams])
    valid = azimuth_raw != PADDING_AZIMUTH
    _check_ordering(azimuth_raw[valid])

    range_raw = np.stack([d.range_raw for d in datagrams])[:, :, :m]
    intensity_raw = np.stack([d.intensity_raw for d in datagrams])[:, :, :m]
    stamps = np.array([d.timestamp_us for d in datagrams], dtype=np.int64)

    returned = (range_raw > 0) & valid[:, :, None]
    d_idx, b_idx, c_idx = np.nonzero(returned)
    azimuth_index = azimuth_index_for_raw(azimuth_raw[d_idx, b_idx], sensor)

    points = empty_points(len(d_idx))
    points['range'] = range_raw[d_idx, b_idx, c_idx] * RANGE_RESOLUTION
    points['azimuth'] = sensor.azimuths[azimuth_index]
    points['elevation'] = sensor.elevations[c_idx]
    points['timestamp'] = datagram_point_times(stamps[d_idx], azimuth_index, sensor, returns)
    points['intensity'] = intensity_raw[d_idx, b_idx, c_idx] / INTENSITY_SCALE

    return Sweep(
        points=sort_points(points),
        index=index,
        timestamp=stamps[0] * 1e-6,
        source_datagram_count=len(datagrams),
        mode=mode,
    )


def assign_grid_cells(points: np.ndarray, sensor: SensorModel):
    """
    Nearest grid cell for every row, gated at half the grid spacing.

    With the gate at half the spacing each row has at most one admissible
    cell, so the gated rectangular assignment reduces to this lookup plus
    conflict resolution between rows sharing a cell.

    Returns:
        tuple: (azimuth index, channel index, admissible mask)
    """
    azimuth_index = sensor.azimuth_index(points['azimuth'])
    channel = sensor.channel_index(points['elevation'])
    d_theta = np.abs(wrap_pi(points['azimuth'] - sensor.azimuths[azimuth_index]))
    d_phi = np.abs(points['elevation'] - sensor.elevations[channel])
    admissible = (d_theta <= sensor.azimuth_spacing / 2.0) & (d_phi <= sensor.channel_half_gap(channel))
    return azimuth_index, channel, admissible


def reverse_engineer_datagrams(sweep: Sweep, sensor: SensorModel, start_us=None, strict=False):
    """
    Pack a point-cloud matrix back into wire datagrams.

    Args:
        sweep: Sweep whose angles lie within noise of the sensor grid
        sensor: Sensor model defining the grid and timing
        start_us: Timestamp of the first datagram; defaults to the sweep's
        strict: Raise AssignmentConflict instead of dropping the weaker row

    Returns:
        list[Datagram]: ceil(n * returns / 12) datagrams covering every azimuth
    """
    points = sweep.points
    returns = 2 if sweep.mode == 'dual' else 1
    n, m = sensor.azimuth_count, sensor.channel_count
    start_us = sweep.start_us if start_us is None else int(start_us)

    azimuth_index, channel, admissible = assign_grid_cells(points, sensor)
    if not np.all(admissible):
        logger.warning(f"Sweep {sweep.index}: {int((~admissible).sum())} rows outside the angle grid gate were dropped")

    rows = np.flatnonzero(admissible)
    cell = azimuth_index[rows] * m + channel[rows]

    # Rank rows within each cell by intensity (higher wins), then row order
    order = np.lexsort((rows, -points['intensity'][rows], cell))
    rows, cell = rows[order], cell[order]
    first_of_cell = np.concatenate([[True], cell[1:] != cell[:-1]]) if len(cell) else np.zeros(0, dtype=bool)
    group_start = np.maximum.accumulate(np.where(first_of_cell, np.arange(len(cell)), 0)) if len(cell) else np.zeros(0, dtype=np.int64)
    rank = np.arange(len(cell)) - group_start
    kept = rank < returns

    if not np.all(kept):
        conflicts = [(int(r), int(c)) for r, c in zip(rows[~kept], cell[~kept])]
        message = f"Sweep {sweep.index}: {len(conflicts)} rows lost a grid cell to a higher-intensity row"
        if strict:
            raise AssignmentConflict(message, conflicts)
        logger.warning(message)

    rows, cell = rows[kept], cell[kept]
    # Return slot follows the original row order within a cell
    order = np.lexsort((rows, cell))
    rows, cell = rows[order], cell[order]
    first_of_cell = np.concatenate([[True], cell[1:] != cell[:-1]]) if len(cell) else np.zeros(0, dtype=bool)
    group_start = np.maximum.accumulate(np.where(first_of_cell, np.arange(len(cell)), 0)) if len(cell) else np.zeros(0, dtype=np.int64)
    slot = np.arange(len(cell)) - group_start

    range_grid = np.zeros((n, returns, CELLS_PER_BLOCK), dtype=np.uint16)
    intensity_grid = np.zeros((n, returns, CELLS_PER_BLOCK), dtype=np.uint8)
    range_raw = np.clip(np.rint(points['range'][rows] / RANGE_RESOLUTION), 1, 0xFFFF).astype(np.uint16)
    intensity_raw = np.clip(np.rint(points['intensity'][rows] * INTENSITY_SCALE), 0, 255).astype(np.uint8)
    range_grid[cell // m, slot, cell % m] = range_raw
    intensity_grid[cell // m, slot, cell % m] = intensity_raw

    # Blocks in azimuth order, returns interleaved, padded to whole datagrams
    block_azimuth = np.repeat(azimuth_raw_for_index(np.arange(n), sensor), returns)
    block_range = range_grid.reshape(n * returns, CELLS_PER_BLOCK)
    block_intensity = intensity_grid.reshape(n * returns, CELLS_PER_BLOCK)
    padding = (-len(block_azimuth)) % BLOCKS_PER_DATAGRAM
    if padding:
        block_azimuth = np.concatenate([block_azimuth, np.full(padding, PADDING_AZIMUTH, dtype=np.uint16)])
        block_range = np.concatenate([block_range, np.zeros((padding, CELLS_PER_BLOCK), dtype=np.uint16)])
        block_intensity = np.concatenate([block_intensity, np.zeros((padding, CELLS_PER_BLOCK), dtype=np.uint8)])

    stamps = datagram_timestamps_us(start_us, sensor, returns)
    mode_byte = MODE_DUAL if returns == 2 else MODE_STRONGEST
    datagrams = []
    for d in range(len(block_azimuth) // BLOCKS_PER_DATAGRAM):
        span = slice(d * BLOCKS_PER_DATAGRAM, (d + 1) * BLOCKS_PER_DATAGRAM)
        datagrams.append(Datagram(
            azimuth_raw=block_azimuth[span],
            range_raw=block_range[span],
            intensity_raw=block_intensity[span],
            timestamp_us=int(stamps[d]),
            mode_byte=mode_byte,
        ))
    return datagrams


def datagrams_per_sweep(sensor: SensorModel) -> int:
    per = azimuths_per_datagram(sensor.returns_per_azimuth)
    return -(-sensor.azimuth_count // per)


class SweepAssembler:
    """
    Streaming assembler for one datagram stream.

    A sweep ends when the azimuth wraps from near 360 deg back to near 0 deg.
    """

    def __init__(self, sensor: SensorModel):
        self.sensor = sensor
        self.pending = []
        self.last_azimuth = None
        self.next_index = 0

    def push(self, datagram: Datagram):
        """
        Add a datagram; returns the sweeps completed by it (0 or 1).

        Raises:
            OrderingError: azimuth went backwards without wrapping
        """
        valid = datagram.azimuth_raw[datagram.valid_blocks].astype(np.int64)
        if len(valid) == 0:
            return []
        _check_ordering(valid)

        completed = []
        if self.last_azimuth is not None and valid[0] < self.last_azimuth:
            if self.last_azimuth - valid[0] <= WRAP_THRESHOLD:
                raise OrderingError(f"Azimuth decreased from {self.last_azimuth} to {int(valid[0])} without a wrap")
            completed = self.flush()
        self.pending.append(datagram)
        self.last_azimuth = int(valid[-1])
        return completed

    def flush(self):
        if not self.pending:
            return []
        sweep = assemble_sweep(self.pending, self.sensor, index=self.next_index)
        self.next_index += 1
        self.pending = []
        self.last_azimuth = None
        return [sweep]
