"""Live telemetry and guidance-command service.

Protocol: length-prefixed JSON over TCP.  Every frame is a 4-byte unsigned
big-endian payload length followed by that many bytes of UTF-8 JSON.

Server -> client frames::

    {"type": "snapshot", "t_s": ..., "state": [12 floats], ...}
    {"type": "error", "message": "..."}

Client -> server frames::

    {"type": "force_command", "force_n": [fx, fy, fz], "timestamp_ms": ...}

A force command stays in effect for ``COMMAND_TIMEOUT_S`` after receipt;
if the operator stops sending (or disconnects), the force decays to zero
and the admittance gate closes, so the vehicle holds position.
"""

from __future__ import annotations

import json
import math
import socket
import struct
import threading
import time

from . import simulation
from .scenario import Scenario

COMMAND_TIMEOUT_S = 0.2
SNAPSHOT_HZ = 30.0
MAX_FRAME_BYTES = 1 << 20
_HEADER = struct.Struct(">I")


def encode_frame(message: dict) -> bytes:
    payload = json.dumps(message, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(len(payload)) + payload


class FrameDecoder:
    """Incremental decoder for length-prefixed JSON frames."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, chunk: bytes) -> list:
        """Consume bytes; returns every complete message they finish."""
        self._buffer.extend(chunk)
        messages = []
        while True:
            if len(self._buffer) < _HEADER.size:
                break
            (length,) = _HEADER.unpack_from(self._buffer)
            if length > MAX_FRAME_BYTES:
                raise ValueError(f"frame of {length} bytes exceeds limit")
            end = _HEADER.size + length
            if len(self._buffer) < end:
                break
            payload = bytes(self._buffer[_HEADER.size:end])
            del self._buffer[:end]
            messages.append(json.loads(payload.decode("utf-8")))
        return messages


def _parse_force_command(message: dict) -> tuple[float, float, float]:
    force = message.get("force_n")
    if (not isinstance(force, (list, tuple)) or len(force) != 3
            or not all(isinstance(v, (int, float)) and math.isfinite(v)
                       for v in force)):
        raise ValueError("force_n must be a finite 3-vector")
    return tuple(float(v) for v in force)


class TelemetryServer:
    """Accepts console connections, fans out snapshots, receives commands.

    The simulation loop talks to this object only through ``current_force``
    and ``broadcast``; all socket work happens on daemon threads, and the
    latest command is held in a single slot under a lock (no queues to
    drain, stale data simply expires).
    """

    def __init__(self, port: int = 0, host: str = "127.0.0.1",
                 command_timeout_s: float = COMMAND_TIMEOUT_S):
        self.command_timeout_s = command_timeout_s
        self._lock = threading.Lock()
        self._clients: list[socket.socket] = []
        self._command = (0.0, 0.0, 0.0)
        self._command_received = -math.inf
        self._closing = False
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(0.2)
        self.host, self.port = self._listener.getsockname()[:2]
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="telemetry-accept", daemon=True)
        self._accept_thread.start()

    # -- simulation-facing API -------------------------------------------

    def current_force(self, _t_sim: float = 0.0) -> tuple[float, float, float]:
        """Latest commanded force, or zero once it has gone stale."""
        with self._lock:
            if time.monotonic() - self._command_received > self.command_timeout_s:
                return (0.0, 0.0, 0.0)
            return self._command

    def broadcast(self, snapshot: dict) -> None:
        frame = encode_frame(snapshot)
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            try:
                client.sendall(frame)
            except OSError:
                self._drop(client)

    @property
    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def close(self) -> None:
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
            self._clients.clear()
        for client in clients:
            try:
                client.close()
            except OSError:
                pass

    # -- socket plumbing --------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(0.5)
            with self._lock:
                self._clients.append(conn)
            threading.Thread(target=self._reader_loop, args=(conn,),
                             name="telemetry-reader", daemon=True).start()

    def _reader_loop(self, conn: socket.socket) -> None:
        decoder = FrameDecoder()
        while not self._closing:
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                break
            try:
                messages = decoder.feed(chunk)
            except (ValueError, UnicodeDecodeError) as exc:
                self._send_error(conn, f"bad frame: {exc}")
                break
            for message in messages:
                self._handle(conn, message)
        self._drop(conn)

    def _handle(self, conn: socket.socket, message) -> None:
        if not isinstance(message, dict) or message.get("type") != "force_command":
            self._send_error(conn, "expected a force_command message")
            return
        try:
            force = _parse_force_command(message)
        except ValueError as exc:
            self._send_error(conn, str(exc))
            return
        with self._lock:
            self._command = force
            self._command_received = time.monotonic()

    def _send_error(self, conn: socket.socket, text: str) -> None:
        try:
            conn.sendall(encode_frame({"type": "error", "message": text}))
        except OSError:
            self._drop(conn)

    def _drop(self, conn: socket.socket) -> None:
        with self._lock:
            if conn in self._clients:
                self._clients.remove(conn)
        try:
            conn.close()
        except OSError:
            pass


def serve(scenario: Scenario, port: int, host: str = "127.0.0.1",
          pace_real_time: bool = True) -> simulation.RunLog:
    """Run a live session: scripted profile replaced by console commands."""
    server = TelemetryServer(port=port, host=host)
    print(f"telemetry listening on {server.host}:{server.port}")
    try:
        return simulation.run(
            scenario,
            force_source=server.current_force,
            snapshot_sink=server.broadcast,
            snapshot_hz=SNAPSHOT_HZ,
            pace_real_time=pace_real_time,
        )
    finally:
        server.close()
