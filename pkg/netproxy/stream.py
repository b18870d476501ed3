"""
Live UDP path: sender -> attacker proxy -> receiver.

The three roles run independently and only share the datagram wire format.
Inside the proxy a receive thread feeds a queue and a single worker owns the
attacker, the sweep assembler and the forwarding socket.
"""
from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from attacks.config import ATTACK_CHOICES, AttackConfig
from attacks.engine import NAIVE_APPEND, Attacker
from sensors.datagrams import (
    DATAGRAM_SIZE, SweepAssembler, datagrams_per_sweep, decode, encode, reverse_engineer_datagrams,
)
from sensors.geometry import SensorModel
from sensors.integrity import IntegrityConfig, IntegrityMonitor
from sensors.sweepfile import write_sweep_file
from scenes.render import render_sweep
from utils.csv_utils import write_rows
from utils.exceptions import ConfigError, DatagramError, TransportError

logger = logging.getLogger(__name__)

PACING_CHOICES = ('realtime', 'max_rate')
INTEGRITY_FIELDS = ('sweep', 'timestamp', 'points', 'zeta_alpha', 'zeta_beta', 'zeta_gamma', 'zeta_rho', 'zeta')


@dataclass(frozen=True)
class StreamConfig:
    host: str = '127.0.0.1'
    sender_port: int = 2370
    proxy_listen_port: int = 2368
    receiver_port: int = 2369
    pacing: str = 'realtime'
    idle_timeout: float = 1.0
    start_timeout: float = 10.0
    recv_buffer_bytes: int = 4 * 1024 * 1024
    attack: str = 'baseline'

    def __post_init__(self):
        ports = [p for p in (self.sender_port, self.proxy_listen_port, self.receiver_port) if p]
        if len(ports) != len(set(ports)):
            raise ConfigError(f"Stream ports must be distinct, got sender={self.sender_port} "
                              f"proxy={self.proxy_listen_port} receiver={self.receiver_port}")
        if self.pacing not in PACING_CHOICES:
            raise ConfigError(f"Unknown pacing '{self.pacing}' (choose from {PACING_CHOICES})")
        if self.idle_timeout <= 0 or self.start_timeout <= 0:
            raise ConfigError("Stream timeouts must be positive")
        if self.attack not in ATTACK_CHOICES + (NAIVE_APPEND,):
            raise ConfigError(f"Unknown attack '{self.attack}'")

    @classmethod
    def from_config(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid net section: {e}") from e

    @property
    def proxy_address(self):
        return (self.host, self.proxy_listen_port)

    @property
    def receiver_address(self):
        return (self.host, self.receiver_port)


def open_socket(cfg: StreamConfig, port: int, timeout: Optional[float] = None) -> socket.socket:
    """UDP socket bound to (cfg.host, port); port 0 picks a free one."""
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, cfg.recv_buffer_bytes)
        sock.bind((cfg.host, port))
    except OSError as e:
        sock.close()
        raise TransportError(f"Cannot bind UDP {cfg.host}:{port}: {e}") from e
    sock.settimeout(timeout)
    return sock


def scene_datagrams(scene, frames=None):
    """Yields (frame, datagrams) for each rendered sweep of the scene."""
    count = scene.frame_count if frames is None else min(frames, scene.frame_count)
    for k in range(count):
        sweep, _ = render_sweep(scene, k)
        yield k, reverse_engineer_datagrams(sweep, scene.sensor, start_us=sweep.start_us)


def run_sender(scene, cfg: StreamConfig, frames=None) -> int:
    """
    Stream a scene to the proxy.

    Args:
        scene: Scene to render
        cfg: Stream configuration; sends to cfg.proxy_address
        frames: Optional cap on the number of sweeps

    Returns:
        int: packets sent

    Raises:
        TransportError: the socket could not be opened or a send failed
    """
    sent = 0
    sock = open_socket(cfg, cfg.sender_port)
    try:
        origin_us = None
        origin = time.monotonic()
        for k, datagrams in scene_datagrams(scene, frames):
            for datagram in datagrams:
                if cfg.pacing == 'realtime':
                    if origin_us is None:
                        origin_us = datagram.timestamp_us
                    delay = origin + (datagram.timestamp_us - origin_us) * 1e-6 - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                try:
                    sock.sendto(encode(datagram), cfg.proxy_address)
                except OSError as e:
                    raise TransportError(f"Send to {cfg.proxy_address} failed: {e}") from e
                sent += 1
            logger.debug(f"Sent sweep {k} ({len(datagrams)} packets)")
    finally:
        sock.close()
    logger.info(f"Sender finished scene '{scene.name}': {sent} packets")
    return sent


class StreamProxy:
    """
    Man-in-the-middle between sensor and receiver.

    With the baseline attack every packet is forwarded byte for byte. Otherwise
    packets are assembled into sweeps, each completed sweep goes through the
    attacker and is re-encoded with the timestamp of the sweep it replaces.
    Packets that do not decode are forwarded untouched.
    """

    def __init__(self, cfg: StreamConfig, sensor: SensorModel, attack_cfg: AttackConfig = AttackConfig()):
        self.cfg = cfg
        self.sensor = sensor
        self.attacker = None if cfg.attack == 'baseline' else Attacker(cfg.attack, sensor, attack_cfg)
        self.assembler = SweepAssembler(sensor)
        self.sweep_packets = datagrams_per_sweep(sensor)
        self.packets = queue.Queue()
        self.forwarded = 0
        self.passed_through = 0

    def handle(self, payload: bytes) -> list:
        """Payloads to forward in response to one received packet."""
        if self.attacker is None:
            return [payload]
        try:
            datagram = decode(payload)
            completed = self.assembler.push(datagram)
        except DatagramError as e:
            self.passed_through += 1
            logger.warning(f"Forwarding undecodable packet unmodified ({len(payload)} bytes): {e}")
            return [payload]
        if len(self.assembler.pending) >= self.sweep_packets:
            completed += self.assembler.flush()
        return [out for sweep in completed for out in self.attack_sweep(sweep)]

    def flush(self) -> list:
        if self.attacker is None:
            return []
        return [out for sweep in self.assembler.flush() for out in self.attack_sweep(sweep)]

    def attack_sweep(self, sweep) -> list:
        attacked = self.attacker.attack_step(sweep)
        datagrams = reverse_engineer_datagrams(attacked, self.sensor, start_us=attacked.start_us)
        return [encode(d) for d in datagrams]

    def receive_loop(self, sock: socket.socket, stop: threading.Event):
        timeout = self.cfg.start_timeout
        while not stop.is_set():
            sock.settimeout(timeout)
            try:
                payload, _ = sock.recvfrom(DATAGRAM_SIZE * 2)
            except socket.timeout:
                logger.info(f"Proxy idle for {timeout}s, stopping")
                break
            except OSError as e:
                logger.error(f"Proxy receive failed: {e}", exc_info=True)
                break
            self.packets.put(payload)
            timeout = self.cfg.idle_timeout
        self.packets.put(None)

    def forward_loop(self, sock: socket.socket):
        while True:
            payload = self.packets.get()
            outgoing = self.flush() if payload is None else self.handle(payload)
            for out in outgoing:
                sock.sendto(out, self.cfg.receiver_address)
                self.forwarded += 1
            if payload is None:
                return

    def run(self, ready: Optional[threading.Event] = None, stop: Optional[threading.Event] = None) -> int:
        stop = stop or threading.Event()
        sock = open_socket(self.cfg, self.cfg.proxy_listen_port)
        if ready is not None:
            ready.set()
        worker = threading.Thread(target=self.forward_loop, args=(sock,), name='proxy-forward', daemon=True)
        worker.start()
        try:
            self.receive_loop(sock, stop)
            worker.join()
        finally:
            sock.close()
        logger.info(f"Proxy ({self.cfg.attack}) forwarded {self.forwarded} packets, "
                    f"{self.passed_through} passed through undecoded")
        return self.forwarded


def run_proxy(cfg: StreamConfig, sensor: SensorModel = None, attack_cfg: AttackConfig = AttackConfig(),
              ready: Optional[threading.Event] = None, stop: Optional[threading.Event] = None) -> int:
    """
    Run the attacker proxy until the stream goes idle.

    Returns:
        int: packets forwarded to the receiver
    """
    proxy = StreamProxy(cfg, sensor or SensorModel.default(), attack_cfg)
    return proxy.run(ready=ready, stop=stop)


@dataclass
class ReceiverResult:
    sweeps: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    undecodable: int = 0

    @property
    def all_consistent(self) -> bool:
        return all(v.zeta for v in self.verdicts)


class StreamChecker:
    """Sweep assembly plus per-datagram and per-sweep integrity for one incoming stream."""

    def __init__(self, sensor: SensorModel, integrity: IntegrityConfig):
        self.assembler = SweepAssembler(sensor)
        self.monitor = IntegrityMonitor(sensor, integrity)

    def push(self, datagram) -> list:
        """(sweep, verdict) for every sweep this datagram completes."""
        completed = self._checked(self.assembler.push(datagram))
        # counts toward the sweep still pending, not the ones just completed
        self.monitor.check_datagram(datagram)
        return completed

    def flush(self) -> list:
        return self._checked(self.assembler.flush())

    def _checked(self, sweeps):
        return [(sweep, self.monitor.check(sweep, packets_checked=True)) for sweep in sweeps]


def _integrity_row(sweep, verdict):
    return [sweep.index, sweep.timestamp, len(sweep), verdict.zeta_alpha, verdict.zeta_beta,
            verdict.zeta_gamma, verdict.zeta_rho, verdict.zeta]


def run_receiver(cfg: StreamConfig, sensor: SensorModel = None, integrity: IntegrityConfig = None,
                 out_dir=None, ready: Optional[threading.Event] = None, max_sweeps=None) -> ReceiverResult:
    """
    Assemble the incoming stream and check every sweep's integrity.

    The receiver waits 2 * idle_timeout after the last packet, so a proxy that
    flushes on its own idle timeout still gets its final sweep through.

    Args:
        cfg: Stream configuration; listens on cfg.receiver_port
        sensor: Sensor model of the stream
        integrity: Integrity thresholds; defaults derived from the sensor
        out_dir: If given, sweep files and integrity.csv are written there
        ready: Set once the socket is bound
        max_sweeps: Stop after this many sweeps

    Returns:
        ReceiverResult
    """
    sensor = sensor or SensorModel.default()
    checker = StreamChecker(sensor, integrity or IntegrityConfig.for_sensor(sensor))
    result = ReceiverResult()
    out_dir = Path(out_dir) if out_dir is not None else None

    def accept(checked):
        for sweep, verdict in checked:
            result.verdicts.append(verdict)
            result.rows.append(_integrity_row(sweep, verdict))
            if checker.monitor.cfg.drop_failed and not verdict.zeta:
                logger.warning(f"Dropping sweep {sweep.index}: failed {', '.join(verdict.failed())}")
                continue
            result.sweeps.append(sweep)
            if out_dir is not None:
                write_sweep_file(out_dir / 'sweeps' / f'{sweep.index:06d}.lswp', sweep)

    sock = open_socket(cfg, cfg.receiver_port)
    if ready is not None:
        ready.set()
    timeout = cfg.start_timeout
    try:
        while max_sweeps is None or len(result.verdicts) < max_sweeps:
            sock.settimeout(timeout)
            try:
                payload, _ = sock.recvfrom(DATAGRAM_SIZE * 2)
            except socket.timeout:
                break
            except OSError as e:
                raise TransportError(f"Receive on port {cfg.receiver_port} failed: {e}") from e
            timeout = 2 * cfg.idle_timeout
            try:
                accept(checker.push(decode(payload)))
            except DatagramError as e:
                result.undecodable += 1
                logger.warning(f"Receiver skipped a packet: {e}")
        accept(checker.flush())
    finally:
        sock.close()

    if out_dir is not None:
        write_rows(out_dir / 'integrity.csv', INTEGRITY_FIELDS, result.rows)
    failed = sum(1 for v in result.verdicts if not v.zeta)
    logger.info(f"Receiver assembled {len(result.verdicts)} sweeps, {failed} failed integrity")
    return result
