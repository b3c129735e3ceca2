"""Tests for the external generator subprocess protocol."""

import io
import sys

import numpy as np
import pytest

from distinguish.external_generator import (
    ExternalGeneratorError,
    ExternalGeneratorHandle,
    external_generate,
    serve,
)
from distinguish.generator import (
    LATENT_DIM,
    GeneratorConfig,
    generate,
    sample_prior,
)
from distinguish.geomodel import GridGeometry

SELF_SERVE = [sys.executable, "-m", "distinguish.external_generator"]


def self_handle(**kw):
    kw.setdefault("timeout", 60.0)
    return ExternalGeneratorHandle(SELF_SERVE, **kw)


# ---------------------------------------------------------------- serve loop

def run_serve(request: bytes, geometry=None):
    out = io.BytesIO()
    code = serve(io.BytesIO(request), out, geometry=geometry)
    return code, out.getvalue()


def make_request(z):
    z = np.asarray(z, dtype="<f8")
    header = f"GEN v1 n={z.shape[0]} dim=60 cols=64 rows=64\n"
    return header.encode() + z.tobytes()


def test_serve_round_trip_in_memory():
    z = sample_prior(3, 5).members
    code, reply = run_serve(make_request(z))
    assert code == 0
    head, body = reply.split(b"\n", 1)
    assert head == b"OK n=3"
    probs = np.frombuffer(body, dtype="<f8").reshape(3, 64, 64, 3)
    for i in range(3):
        local = generate(z[i]).probs
        assert np.array_equal(probs[i].astype(np.float32), local)


def test_serve_handles_back_to_back_requests():
    z = sample_prior(2, 6).members
    code, reply = run_serve(make_request(z) + make_request(z))
    assert code == 0
    assert reply.count(b"OK n=2\n") == 2


@pytest.mark.parametrize("header", [
    b"GEN v2 n=1 dim=60 cols=64 rows=64\n",
    b"GEN v1 n=0 dim=60 cols=64 rows=64\n",
    b"GEN v1 n=1 dim=59 cols=64 rows=64\n",
    b"GEN v1 n=1 dim=60 cols=32 rows=64\n",
    b"hello\n",
])
def test_serve_rejects_bad_headers(header):
    code, reply = run_serve(header + b"\x00" * (LATENT_DIM * 8))
    assert code == 1
    assert reply.startswith(b"ERR ")


def test_serve_rejects_short_payload():
    z = np.zeros((2, LATENT_DIM))
    frame = make_request(z)
    code, reply = run_serve(frame[:-16])
    assert code == 1
    assert b"short" in reply


def test_serve_rejects_nonfinite_latents():
    z = np.zeros((1, LATENT_DIM))
    z[0, 0] = np.nan
    code, reply = run_serve(make_request(z))
    assert code == 1
    assert b"finite" in reply


def test_serve_eof_is_clean_exit():
    code, reply = run_serve(b"")
    assert code == 0
    assert reply == b""


# ---------------------------------------------------------------- subprocess

def test_external_matches_local_generator():
    z = sample_prior(4, 17).members
    with self_handle() as handle:
        images = external_generate(z, handle)
    assert len(images) == 4
    for zi, img in zip(z, images):
        assert np.array_equal(img.probs.astype(np.float32), generate(zi).probs)


def test_handle_serializes_multiple_batches():
    with self_handle() as handle:
        a = external_generate(sample_prior(2, 1).members, handle)
        b = external_generate(sample_prior(3, 2).members, handle)
    assert len(a) == 2 and len(b) == 3


def test_latent_ensemble_input():
    ens = sample_prior(2, 9)
    with self_handle() as handle:
        images = external_generate(ens, handle)
    assert np.array_equal(images[0].probs.astype(np.float32), generate(ens.members[0]).probs)


def test_batch_shape_validation():
    with self_handle() as handle:
        with pytest.raises(ValueError):
            handle.generate_batch(np.zeros((0, LATENT_DIM)))
        with pytest.raises(ValueError):
            handle.generate_batch(np.zeros((2, 59)))


def test_garbage_peer_raises_protocol_error():
    cmd = [sys.executable, "-c",
           "import sys; sys.stdout.write('NOPE\\n'); sys.stdout.flush(); sys.stdin.read()"]
    with ExternalGeneratorHandle(cmd, timeout=20.0) as handle:
        with pytest.raises(ExternalGeneratorError):
            handle.generate_batch(np.zeros((1, LATENT_DIM)))


def test_invalid_probabilities_raise():
    rows = GridGeometry().n_rows
    cols = GridGeometry().n_cols
    script = (
        "import sys, numpy as np\n"
        "line = sys.stdin.buffer.readline()\n"
        f"sys.stdin.buffer.read(1 * {LATENT_DIM} * 8)\n"
        "sys.stdout.buffer.write(b'OK n=1\\n')\n"
        f"sys.stdout.buffer.write(np.full(({rows}, {cols}, 3), 0.9).tobytes())\n"
        "sys.stdout.buffer.flush()\n"
    )
    with ExternalGeneratorHandle([sys.executable, "-c", script], timeout=20.0) as handle:
        with pytest.raises(ExternalGeneratorError):
            external_generate(np.zeros((1, LATENT_DIM)), handle)


def test_timeout_kills_the_peer():
    cmd = [sys.executable, "-c", "import time; time.sleep(600)"]
    with ExternalGeneratorHandle(cmd, timeout=0.8) as handle:
        with pytest.raises(ExternalGeneratorError, match="timed out"):
            handle.generate_batch(np.zeros((1, LATENT_DIM)))
    assert handle._proc is None


def test_geometry_mismatch_between_peer_and_handle():
    geo = GridGeometry(n_cols=8, n_rows=8, dx=10.0, dz=0.5)
    with self_handle(geometry=geo) as handle:
        with pytest.raises(ExternalGeneratorError):
            handle.generate_batch(np.zeros((1, LATENT_DIM)))
