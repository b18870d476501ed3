import math
from pathlib import Path
import tempfile

import numpy as np
from django.test import SimpleTestCase

from sensors.datagrams import (
    DATAGRAM_SIZE, MODE_DUAL, MODE_STRONGEST, Datagram, SweepAssembler, assemble_sweep,
    assign_grid_cells, datagrams_per_sweep, decode, encode, reverse_engineer_datagrams,
)
from sensors.geometry import SensorModel, expected_angle_grid
from sensors.pointcloud import Sweep, make_points, point_times, quantize_intensity, quantize_range, restamp
from sensors.sweepfile import read_sweep_file, write_sweep_file
from utils.exceptions import AssignmentConflict, FrameError, MalformedError, OrderingError

FIXTURES = Path(__file__).resolve().parent / 'fixtures'


def random_datagram(rng):
    return Datagram(
        azimuth_raw=np.sort(rng.integers(0, 36000, 12)),
        range_raw=rng.integers(0, 65536, (12, 32)),
        intensity_raw=rng.integers(0, 256, (12, 32)),
        timestamp_us=int(rng.integers(0, 2 ** 32)),
        mode_byte=int(rng.choice([0x37, 0x38, 0x39])),
        model_byte=0x21,
    )


def grid_sweep(sensor, start_us=1_000_000, intensity=0.8, keep=None):
    """Noise-free matrix with one return on every grid cell (or the cells in keep)."""
    grid = expected_angle_grid(sensor)
    rng = np.random.default_rng(3)
    rho = quantize_range(rng.uniform(2.0, 60.0, len(grid)))
    azimuth_index = np.repeat(np.arange(sensor.azimuth_count), sensor.channel_count)
    points = make_points(rho, grid[:, 0], grid[:, 1], point_times(azimuth_index, start_us, sensor), quantize_intensity(intensity))
    if keep is not None:
        points = points[keep]
    return Sweep(points=points, index=0, timestamp=start_us * 1e-6)


class CodecTests(SimpleTestCase):

    def test_size(self):
        self.assertEqual(DATAGRAM_SIZE, 1206)
        self.assertEqual(len(encode(Datagram.empty())), 1206)

    def test_golden_vector(self):
        azimuth = 100 * np.arange(12)
        ranges = (np.arange(12)[:, None] * 32 + np.arange(32)[None, :] + 1)
        intensity = (np.arange(12)[:, None] + np.arange(32)[None, :]) % 256
        d = Datagram(azimuth, ranges, intensity, timestamp_us=123456789, mode_byte=MODE_STRONGEST, model_byte=0x21)

        golden = (FIXTURES / 'golden_datagram.bin').read_bytes()
        self.assertEqual(encode(d), golden)
        self.assertEqual(decode(golden), d)

    def test_field_offsets(self):
        d = Datagram.empty()
        d.azimuth_raw[0] = 9000
        d.range_raw[0, 0] = int(round(10.0 / 0.002))
        data = encode(d)
        self.assertEqual(data[0:2], b'\xff\xee')
        self.assertEqual(int.from_bytes(data[2:4], 'little'), 9000)
        self.assertEqual(int.from_bytes(data[4:6], 'little'), 5000)

    def test_all_zero_ranges(self):
        data = encode(Datagram.empty())
        self.assertTrue(np.all(decode(data).range_raw == 0))

    def test_round_trip_random_datagrams(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            d = random_datagram(rng)
            data = encode(d)
            self.assertEqual(decode(data), d)
            self.assertEqual(encode(decode(data)), data)

    def test_wrong_length(self):
        with self.assertRaises(FrameError):
            decode(bytes(1205))

    def test_bad_flag(self):
        data = bytearray(encode(Datagram.empty()))
        data[0:2] = b'\x00\x00'
        with self.assertRaises(MalformedError):
            decode(bytes(data))


class AssemblyTests(SimpleTestCase):

    def setUp(self):
        self.sensor = SensorModel.uniform(azimuth_count=24)

    def test_full_small_sweep(self):
        sweep = grid_sweep(self.sensor)
        datagrams = reverse_engineer_datagrams(sweep, self.sensor)
        self.assertEqual(len(datagrams), 2)

        assembled = assemble_sweep(datagrams, self.sensor)
        self.assertEqual(len(assembled), 24 * 32)
        self.assertTrue(assembled.same_points(sweep))
        self.assertEqual(assembled.timestamp, sweep.timestamp)

    def test_zero_range_datagram_contributes_nothing(self):
        sweep = assemble_sweep([Datagram.empty()], self.sensor)
        self.assertEqual(len(sweep), 0)

    def test_hdl32e_datagram_count(self):
        count = datagrams_per_sweep(SensorModel.hdl32e())
        self.assertEqual(count, 182)
        self.assertTrue(170 <= count <= 190)

    def test_decreasing_azimuth(self):
        first, second = reverse_engineer_datagrams(grid_sweep(self.sensor), self.sensor)
        with self.assertRaises(OrderingError):
            assemble_sweep([second, first], self.sensor)

    def test_round_trip_with_missing_cells(self):
        rng = np.random.default_rng(5)
        keep = np.sort(rng.choice(24 * 32, 500, replace=False))
        sweep = grid_sweep(self.sensor, keep=keep)
        assembled = assemble_sweep(reverse_engineer_datagrams(sweep, self.sensor), self.sensor)
        self.assertTrue(assembled.same_points(sweep))

    def test_default_sensor_round_trip(self):
        sensor = SensorModel.default()
        sweep = grid_sweep(sensor, start_us=2_500_000)
        datagrams = reverse_engineer_datagrams(sweep, sensor)
        self.assertEqual(len(datagrams), 150)
        self.assertTrue(assemble_sweep(datagrams, sensor).same_points(sweep))

    def test_empty_matrix_gives_zero_datagrams(self):
        sweep = Sweep(points=make_points([], [], []), timestamp=0.0)
        datagrams = reverse_engineer_datagrams(sweep, self.sensor)
        self.assertEqual(len(datagrams), 2)
        self.assertTrue(all(np.all(d.range_raw == 0) for d in datagrams))

    def test_padding_blocks(self):
        sensor = SensorModel.uniform(azimuth_count=30)
        datagrams = reverse_engineer_datagrams(grid_sweep(sensor), sensor)
        self.assertEqual(len(datagrams), 3)
        self.assertTrue(np.all(datagrams[-1].azimuth_raw[6:] == 0xFFFF))
        self.assertEqual(len(assemble_sweep(datagrams, sensor)), 30 * 32)

    def test_dual_mode_pairs(self):
        sensor = SensorModel.uniform(azimuth_count=24, mode='dual')
        base = grid_sweep(sensor)
        second = base.points.copy()
        second["range"] = quantize_range(base.points["range"] + 1.0)
        points = np.empty(2 * len(base), dtype=base.points.dtype)
        points[0::2] = base.points
        points[1::2] = second
        sweep = Sweep(points=points, timestamp=base.timestamp, mode='dual')
        # Dual datagrams carry 6 azimuths, so point times follow that packing
        sweep = restamp(sweep, base.start_us, sensor)

        datagrams = reverse_engineer_datagrams(sweep, sensor)
        self.assertEqual(len(datagrams), 4)
        self.assertTrue(all(d.mode_byte == MODE_DUAL for d in datagrams))
        self.assertEqual(datagrams[0].azimuth_raw[0], datagrams[0].azimuth_raw[1])

        assembled = assemble_sweep(datagrams, sensor)
        self.assertEqual(assembled.mode, 'dual')
        self.assertTrue(assembled.same_points(sweep))


class ReverseEngineeringTests(SimpleTestCase):

    def test_noisy_angles_assigned_to_nearest_cell(self):
        sensor = SensorModel.default()
        grid = expected_angle_grid(sensor)
        rng = np.random.default_rng(17)
        noise = np.radians(0.02)
        theta = np.mod(grid[:, 0] + rng.uniform(-noise, noise, len(grid)), 2 * math.pi)
        phi = grid[:, 1] + rng.uniform(-noise, noise, len(grid))
        points = make_points(np.full(len(grid), 10.0), theta, phi)

        azimuth_index, channel, admissible = assign_grid_cells(points, sensor)

        self.assertTrue(np.all(admissible))
        np.testing.assert_array_equal(azimuth_index * 32 + channel, np.arange(len(grid)))

        # Brute-force nearest-neighbour oracle on a sample of rows
        sample = rng.choice(len(grid), 2000, replace=False)
        d_theta = np.abs(np.angle(np.exp(1j * (theta[sample, None] - sensor.azimuths[None, :]))))
        d_phi = np.abs(phi[sample, None] - sensor.elevations[None, :])
        np.testing.assert_array_equal(azimuth_index[sample], d_theta.argmin(axis=1))
        np.testing.assert_array_equal(channel[sample], d_phi.argmin(axis=1))

    def test_conflict_keeps_higher_intensity(self):
        sensor = SensorModel.uniform(azimuth_count=24)
        phi = sensor.elevations[5]
        points = make_points([10.0, 12.0], [0.0, 0.001], [phi, phi], 0.0, [0.2, 0.9])
        sweep = Sweep(points=points, timestamp=0.0)

        datagrams = reverse_engineer_datagrams(sweep, sensor)
        self.assertEqual(datagrams[0].range_raw[0, 5], 6000)

        with self.assertRaises(AssignmentConflict) as ctx:
            reverse_engineer_datagrams(sweep, sensor, strict=True)
        self.assertEqual(len(ctx.exception.conflicts), 1)


class StreamingAssemblerTests(SimpleTestCase):

    def test_wrap_delimits_sweeps(self):
        sensor = SensorModel.uniform(azimuth_count=24)
        assembler = SweepAssembler(sensor)
        completed = []
        for k in range(3):
            sweep = grid_sweep(sensor, start_us=k * 100_000)
            for d in reverse_engineer_datagrams(sweep, sensor):
                completed += assembler.push(d)
        completed += assembler.flush()

        self.assertEqual([s.index for s in completed], [0, 1, 2])
        self.assertEqual([len(s) for s in completed], [768, 768, 768])
        self.assertAlmostEqual(completed[2].timestamp, 0.2)

    def test_small_decrease_is_an_ordering_error(self):
        sensor = SensorModel.uniform(azimuth_count=24)
        first, _ = reverse_engineer_datagrams(grid_sweep(sensor), sensor)
        assembler = SweepAssembler(sensor)
        assembler.push(first)
        with self.assertRaises(OrderingError):
            assembler.push(first)


class SweepFileTests(SimpleTestCase):

    def test_write_and_read(self):
        sensor = SensorModel.uniform(azimuth_count=24)
        sweep = grid_sweep(sensor)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_sweep_file(Path(tmp) / 'sweep.lswp', sweep)
            data = path.read_bytes()
            self.assertEqual(data[:4], b'LSWP')
            self.assertEqual(len(data), 12 + 24 * len(sweep))

            loaded = read_sweep_file(path)
        np.testing.assert_allclose(loaded.points['range'], sweep.points['range'], rtol=1e-6)
        np.testing.assert_array_equal(loaded.points['timestamp'], sweep.points['timestamp'])

    def test_truncated_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.lswp'
            path.write_bytes(b'LSWP')
            with self.assertRaises(FrameError):
                read_sweep_file(path)
