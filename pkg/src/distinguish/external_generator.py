"""Subprocess protocol for pluggable generators.

A request is one ASCII header line "GEN v1 n=<batch> dim=60 cols=64
rows=64\\n" followed by n*60 little-endian float64 latent values. The
response is "OK n=<batch>\\n" followed by n*rows*cols*3 little-endian
float64 probabilities in (member, row, col, channel) order with channels
(channel, crevasse, shale). Anything else is a protocol error.

Running this module as a script serves the built-in procedural generator
over stdin/stdout, which doubles as the protocol's reference peer.
"""

from __future__ import annotations

import re
import subprocess
import sys
import threading

import numpy as np

from .generator import LATENT_DIM, GeneratorConfig, LatentEnsemble, generate_probs_batch
from .geomodel import FaciesImage, GridGeometry

PROTOCOL = "GEN v1"

_HEADER_RE = re.compile(rb"^GEN v1 n=(\d+) dim=(\d+) cols=(\d+) rows=(\d+)\n$")
_OK_RE = re.compile(rb"^OK n=(\d+)\n$")


class ExternalGeneratorError(RuntimeError):
    """Protocol violation, invalid image, or unresponsive peer."""


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            break
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _request_frame(z: np.ndarray, geometry: GridGeometry) -> bytes:
    header = (f"{PROTOCOL} n={z.shape[0]} dim={LATENT_DIM} "
              f"cols={geometry.n_cols} rows={geometry.n_rows}\n")
    return header.encode("ascii") + np.ascontiguousarray(z, dtype="<f8").tobytes()


class ExternalGeneratorHandle:
    """One external generator subprocess; batches are strictly serialized."""

    def __init__(self, command: list[str], geometry: GridGeometry | None = None,
                 timeout: float = 30.0):
        self.command = list(command)
        self.geometry = geometry or GridGeometry()
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        return self._proc

    def _exchange(self, proc: subprocess.Popen, frame: bytes, n: int) -> np.ndarray:
        geo = self.geometry
        proc.stdin.write(frame)
        proc.stdin.flush()
        line = proc.stdout.readline()
        m = _OK_RE.match(line)
        if not m or int(m.group(1)) != n:
            raise ExternalGeneratorError(f"bad response header {line!r}")
        nbytes = n * geo.n_rows * geo.n_cols * 3 * 8
        payload = _read_exact(proc.stdout, nbytes)
        if len(payload) != nbytes:
            raise ExternalGeneratorError("short response payload")
        data = np.frombuffer(payload, dtype="<f8")
        return data.reshape(n, geo.n_rows, geo.n_cols, 3)

    def generate_batch(self, zmat: np.ndarray) -> np.ndarray:
        """Raw (n, rows, cols, 3) probabilities from the peer."""
        z = np.asarray(zmat, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != LATENT_DIM or z.shape[0] < 1:
            raise ValueError(f"latent batch must be (n>=1, {LATENT_DIM})")
        with self._lock:
            proc = self._ensure_process()
            box: dict = {}

            def talk():
                try:
                    box["data"] = self._exchange(proc, _request_frame(z, self.geometry),
                                                 z.shape[0])
                except Exception as e:
                    box["error"] = e

            worker = threading.Thread(target=talk, daemon=True)
            worker.start()
            worker.join(self.timeout)
            if worker.is_alive():
                self.close()
                raise ExternalGeneratorError(
                    f"external generator timed out after {self.timeout} s")
            if "error" in box:
                self.close()
                err = box["error"]
                if isinstance(err, ExternalGeneratorError):
                    raise err
                raise ExternalGeneratorError(f"external generator failed: {err}")
            return box["data"]

    def close(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def external_generate(zbatch, handle: ExternalGeneratorHandle) -> list[FaciesImage]:
    """Generate a batch through an external process and validate each image."""
    if isinstance(zbatch, LatentEnsemble):
        zbatch = zbatch.members
    probs = handle.generate_batch(zbatch)
    images = []
    for i in range(probs.shape[0]):
        try:
            images.append(FaciesImage(handle.geometry, probs[i]))
        except ValueError as e:
            raise ExternalGeneratorError(f"invalid image from external generator: {e}")
    return images


def _parse_header(line: bytes, geometry: GridGeometry) -> int:
    m = _HEADER_RE.match(line)
    if not m:
        raise ValueError(f"bad request header {line!r}")
    n, dim, cols, rows = (int(g) for g in m.groups())
    if n < 1:
        raise ValueError("batch must hold at least one vector")
    if dim != LATENT_DIM:
        raise ValueError(f"dim must be {LATENT_DIM}, got {dim}")
    if cols != geometry.n_cols or rows != geometry.n_rows:
        raise ValueError(f"grid {cols}x{rows} does not match {geometry.n_cols}x{geometry.n_rows}")
    return n


def serve(stdin=None, stdout=None, cfg: GeneratorConfig | None = None,
          geometry: GridGeometry | None = None) -> int:
    """Answer protocol requests with the built-in generator until EOF."""
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    cfg = cfg or GeneratorConfig()
    geometry = geometry or GridGeometry()
    while True:
        line = stdin.readline()
        if not line:
            return 0
        try:
            n = _parse_header(line, geometry)
        except ValueError as e:
            stdout.write(f"ERR {e}\n".encode("ascii"))
            stdout.flush()
            return 1
        payload = _read_exact(stdin, n * LATENT_DIM * 8)
        if len(payload) != n * LATENT_DIM * 8:
            stdout.write(b"ERR short request payload\n")
            stdout.flush()
            return 1
        z = np.frombuffer(payload, dtype="<f8").reshape(n, LATENT_DIM)
        if not np.all(np.isfinite(z)):
            stdout.write(b"ERR latent values must be finite\n")
            stdout.flush()
            return 1
        probs = generate_probs_batch(z, cfg, geometry).astype("<f8")
        stdout.write(f"OK n={n}\n".encode("ascii"))
        stdout.write(probs.tobytes())
        stdout.flush()


def main(argv=None) -> int:
    return serve()


if __name__ == "__main__":
    raise SystemExit(main())
