"""Latent-vector parameterization of fluvial cross sections.

A 60-dimensional Gaussian vector is mapped deterministically to a 64x64x3
facies-probability image. The map is procedural rather than learned: the
vector is split into five 12-component blocks, each describing one channel
body (geometry, top-surface waviness, crevasse halo, presence gate), and
memberships are blended with sigmoids so that small latent changes produce
small image changes. That smoothness is what lets a Monte-Carlo Kalman
update steer the latent vectors from log misfits.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .geomodel import Facies, FaciesImage, GridGeometry

LATENT_DIM = 60
PARAMS_PER_BODY = 12

THREADS_ENV = "DISTINGUISH_THREADS"


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class LatentEnsemble:
    """Ordered ensemble of latent vectors, one row per member."""

    members: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.members)
        if m.ndim != 2 or m.shape[1] != LATENT_DIM:
            raise ValueError(f"ensemble must have shape (n, {LATENT_DIM})")
        if m.shape[0] < 2:
            raise ValueError("ensemble needs at least 2 members")
        if not np.all(np.isfinite(m)):
            raise ValueError("latent components must be finite")

    @property
    def size(self) -> int:
        return self.members.shape[0]


def ensure_latent(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (LATENT_DIM,):
        raise ValueError(f"latent vector must have {LATENT_DIM} components")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent components must be finite")
    return z


@dataclass(frozen=True)
class GeneratorConfig:
    """Ranges of the physical body attributes each latent block maps onto.

    Attribute values are mid + half_span * tanh(squash_scale * component), so
    every range is attained smoothly and saturates gracefully for extreme
    latents. The presence gate is a plain sigmoid of the block's last
    component.
    """

    n_bodies: int = 5
    depth_range: tuple[float, float] = (3.0, 29.0)
    thickness_range: tuple[float, float] = (1.0, 4.0)
    lateral_range: tuple[float, float] = (0.0, 640.0)
    half_length_range: tuple[float, float] = (50.0, 200.0)
    wave_amplitude: float = 2.0
    halo_range: tuple[float, float] = (0.5, 2.0)
    tilt_range: tuple[float, float] = (-3.0, 3.0)
    sharpness: float = 2.0
    squash_scale: float = 0.5
    wave_harmonics: int = 4
    gate_bias: float = 0.5

    def __post_init__(self):
        if self.n_bodies * PARAMS_PER_BODY > LATENT_DIM:
            raise ValueError("latent vector too short for the requested body count")
        if self.n_bodies < 1:
            raise ValueError("need at least one body")
        for name in ("depth_range", "thickness_range", "lateral_range", "half_length_range", "halo_range", "tilt_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"{name} is degenerate")
        if self.wave_amplitude <= 0:
            raise ValueError("wave_amplitude must be positive")
        if self.sharpness <= 0 or self.squash_scale <= 0:
            raise ValueError("sharpness and squash_scale must be positive")


def sample_prior(n: int, seed: int) -> LatentEnsemble:
    """Draw n independent standard-normal latent vectors from a seeded stream."""
    if n < 2:
        raise ValueError("prior ensemble needs at least 2 members")
    rng = np.random.default_rng(seed)
    return LatentEnsemble(rng.standard_normal((n, LATENT_DIM)))


def _squash(z, lo, hi, scale):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid + half * np.tanh(scale * z)


def _body_memberships(zmat: np.ndarray, body: int, cfg: GeneratorConfig, geometry: GridGeometry):
    """Channel and halo memberships of one body, shape (n, rows, cols) float32."""
    blk = zmat[:, body * PARAMS_PER_BODY:(body + 1) * PARAMS_PER_BODY]
    q = cfg.squash_scale

    zc = _squash(blk[:, 0], *cfg.depth_range, q)
    thick = _squash(blk[:, 1], *cfg.thickness_range, q)
    xc = _squash(blk[:, 2], *cfg.lateral_range, q)
    half_len = _squash(blk[:, 3], *cfg.half_length_range, q)
    coeff = (cfg.wave_amplitude / cfg.wave_harmonics) * np.tanh(blk[:, 4:4 + cfg.wave_harmonics])
    halo = _squash(blk[:, 8], *cfg.halo_range, q)
    phase = np.pi * np.tanh(q * blk[:, 9])
    tilt = _squash(blk[:, 10], *cfg.tilt_range, q)
    gate = expit(blk[:, 11] + cfg.gate_bias)

    f32 = np.float32
    x64 = geometry.x_centers()
    x = x64.astype(f32)
    z = geometry.z_centers().astype(f32)
    s = f32(cfg.sharpness)

    # top-surface undulation: low harmonics of the section width, shared phase
    k = np.arange(1, cfg.wave_harmonics + 1, dtype=np.float64)
    wave_arg = (2.0 * np.pi / geometry.width) * k[None, :, None] * x64[None, None, :] + phase[:, None, None]
    wave = np.einsum("nk,nkc->nc", coeff, np.cos(wave_arg))

    along = (x64[None, :] - xc[:, None]) / half_len[:, None]
    center_line = zc[:, None] + tilt[:, None] * along
    top = (center_line - 0.5 * thick[:, None] + wave).astype(f32)
    bot = (center_line + 0.5 * thick[:, None]).astype(f32)

    # vertical memberships; sigmoid(a)*sigmoid(b) = 1/((1+e^-a)(1+e^-b)), and the
    # halo arguments differ from the channel ones by the constant s*h, so both
    # memberships share the two big exponentials
    # exp args capped at 80 so steep tilts cannot overflow float32; memberships
    # out there are ~1e-35 either way
    cap = f32(80.0)
    zz = z[None, :, None]
    e_top = np.exp(np.minimum(-s * (zz - top[:, None, :]), cap))
    e_bot = np.exp(np.minimum(-s * (bot[:, None, :] - zz), cap))
    h = halo.astype(f32)[:, None]
    eh = np.exp(-s * h)[..., None]
    vert_ch = (1.0 + e_top) * (1.0 + e_bot)
    vert_halo = (1.0 + e_top * eh) * (1.0 + e_bot * eh)

    xlo = (xc - half_len).astype(f32)[:, None]
    xhi = (xc + half_len).astype(f32)[:, None]
    lat = expit(s * (x[None, :] - xlo)) * expit(s * (xhi - x[None, :]))
    hlat = expit(s * (x[None, :] - (xlo - h))) * expit(s * ((xhi + h) - x[None, :]))

    g = gate.astype(f32)[:, None]
    mu_ch = (g * lat)[:, None, :] / vert_ch
    mu_halo = (g * hlat)[:, None, :] / vert_halo
    return mu_ch, mu_halo


def _generate_probs(zmat: np.ndarray, cfg: GeneratorConfig, geometry: GridGeometry) -> np.ndarray:
    """Facies probabilities for a batch of latent vectors, (n, rows, cols, 3) float32."""
    n = zmat.shape[0]
    shape = (n, geometry.n_rows, geometry.n_cols)
    not_ch = np.ones(shape, dtype=np.float32)
    not_halo = np.ones(shape, dtype=np.float32)
    for b in range(cfg.n_bodies):
        mu_ch, mu_halo = _body_memberships(zmat, b, cfg, geometry)
        not_ch *= 1.0 - mu_ch
        not_halo *= 1.0 - mu_halo
    channel = 1.0 - not_ch
    halo = 1.0 - not_halo
    crevasse = np.clip(halo - channel, 0.0, 1.0)
    probs = np.empty(shape + (3,), dtype=np.float32)
    probs[..., Facies.CHANNEL] = channel
    probs[..., Facies.CREVASSE] = crevasse
    probs[..., Facies.SHALE] = not_halo
    probs /= probs.sum(axis=-1, keepdims=True)
    np.clip(probs, 0.0, 1.0, out=probs)
    return probs


def generate(z, cfg: GeneratorConfig | None = None, geometry: GridGeometry | None = None) -> FaciesImage:
    """Map one latent vector to a facies-probability image. Pure and deterministic."""
    cfg = cfg or GeneratorConfig()
    geometry = geometry or GridGeometry()
    z = ensure_latent(z)
    probs = _generate_probs(z[None, :], cfg, geometry)[0]
    return FaciesImage(geometry, probs)


def generate_probs_batch(zmat: np.ndarray, cfg: GeneratorConfig | None = None,
                         geometry: GridGeometry | None = None) -> np.ndarray:
    """Batch kernel behind generate_ensemble; honors the DISTINGUISH_THREADS cap.

    Chunks write disjoint slices of a preallocated output, so results are
    identical for any thread count.
    """
    cfg = cfg or GeneratorConfig()
    geometry = geometry or GridGeometry()
    zmat = np.asarray(zmat, dtype=np.float64)
    n = zmat.shape[0]
    threads = min(_thread_count(), n)
    if threads <= 1:
        return _generate_probs(zmat, cfg, geometry)
    out = np.empty((n, geometry.n_rows, geometry.n_cols, 3), dtype=np.float32)
    bounds = np.linspace(0, n, threads + 1, dtype=int)

    def work(i):
        lo, hi = bounds[i], bounds[i + 1]
        if hi > lo:
            out[lo:hi] = _generate_probs(zmat[lo:hi], cfg, geometry)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out


def generate_ensemble(ensemble: LatentEnsemble, cfg: GeneratorConfig | None = None,
                      geometry: GridGeometry | None = None) -> list[FaciesImage]:
    """Element-wise generate over the ensemble, order preserving."""
    geometry = geometry or GridGeometry()
    probs = generate_probs_batch(ensemble.members, cfg, geometry)
    return [FaciesImage(geometry, probs[i]) for i in range(probs.shape[0])]
