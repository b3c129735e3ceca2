"""Stochastic ensemble Kalman analysis in latent space.

One analysis step nudges every latent vector toward agreement with the
current tool response:

    M_a = M_p + C_mg (C_gg + C_d)^-1 (D - G + E)

with all covariances Monte-Carlo estimates from mean-centered anomalies
divided by (N_e - 1), diagonal C_d, and perturbed observations E drawn
fresh per call. Members are rows throughout.

The update itself is dimension-agnostic (any latent and data dimension),
which keeps it testable against closed-form Kalman results in one
dimension; production use is 60 latent components against 13-component
logs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .generator import LatentEnsemble
from .geomodel import ToolPosition

JITTER_REL = 1e-10


@dataclass(frozen=True)
class Observation:
    """One noisy multi-component measurement at a tool position."""

    d: np.ndarray
    noise_std: np.ndarray
    position: ToolPosition

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        s = np.asarray(self.noise_std, dtype=np.float64)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("observation must be a 1-D vector")
        if s.shape != d.shape:
            raise ValueError("noise_std must match the observation shape")
        if not np.all(np.isfinite(d)):
            raise ValueError("observation values must be finite")
        if not (np.all(np.isfinite(s)) and np.all(s > 0)):
            raise ValueError("noise standard deviations must be positive and finite")

    @property
    def size(self) -> int:
        return np.asarray(self.d).size


@dataclass(frozen=True)
class AnalysisReport:
    """Diagnostics of one analysis step."""

    prior_misfit: float
    posterior_misfit: float
    kalman_gain_norm: float
    spread_before: np.ndarray
    spread_after: np.ndarray

    def __post_init__(self):
        if self.prior_misfit < 0 or self.posterior_misfit < 0:
            raise ValueError("misfits must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "prior_misfit": float(self.prior_misfit),
            "posterior_misfit": float(self.posterior_misfit),
            "kalman_gain_norm": float(self.kalman_gain_norm),
            "spread_before": [float(v) for v in np.asarray(self.spread_before)],
            "spread_after": [float(v) for v in np.asarray(self.spread_after)],
        }


def observation_noise_std(d, rel: float = 0.10, floor_frac: float = 0.01) -> np.ndarray:
    """Per-component noise std: rel·|d_c| floored at floor_frac·median|d_c|.

    The floor keeps near-zero components (the vertical derivative, mostly)
    from dominating the misfit weighting or zeroing a C_d entry.
    """
    d = np.asarray(d, dtype=np.float64)
    scale = np.median(np.abs(d))
    if scale == 0.0:
        scale = 1.0
    return np.maximum(rel * np.abs(d), floor_frac * scale)


def perturb_observations(obs: Observation, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Replicated observations D and zero-mean perturbations E, each (n, m)."""
    if n < 2:
        raise ValueError("need at least 2 members")
    rng = np.random.default_rng(seed)
    d = np.asarray(obs.d, dtype=np.float64)
    s = np.asarray(obs.noise_std, dtype=np.float64)
    D = np.tile(d, (n, 1))
    E = rng.standard_normal((n, d.size)) * s
    return D, E


def normalized_misfit(G, obs: Observation) -> float:
    """Mean over members of the per-component chi-square misfit / m."""
    G = np.asarray(G, dtype=np.float64)
    d = np.asarray(obs.d, dtype=np.float64)
    s = np.asarray(obs.noise_std, dtype=np.float64)
    if G.ndim == 1:
        G = G[None, :]
    if G.shape[1] != d.size:
        raise ValueError(f"predicted data have {G.shape[1]} components, observation has {d.size}")
    z = (G - d) / s
    return float(np.mean(z * z))


def _solve_spd(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve S X = B for symmetric positive-definite S, with a jitter retry."""
    try:
        return cho_solve(cho_factor(S), B)
    except LinAlgError:
        jitter = JITTER_REL * np.trace(S) / S.shape[0]
        return cho_solve(cho_factor(S + jitter * np.eye(S.shape[0])), B)


Members = Union[LatentEnsemble, np.ndarray]


def enkf_analysis(members: Members, G, obs: Observation, seed,
                  inflation: float = 1.0) -> tuple[Members, AnalysisReport]:
    """One perturbed-observation EnKF analysis.

    members: LatentEnsemble or (n, k) array, rows are members; the return
    ensemble has the same type. G holds the predicted data, (n, m). The
    seed feeds the perturbation draws only.
    """
    wrap = isinstance(members, LatentEnsemble)
    M = np.asarray(members.members if wrap else members, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 2:
        raise ValueError("ensemble must be (n>=2, k)")
    if G.ndim != 2 or G.shape[0] != M.shape[0]:
        raise ValueError("predicted data must have one row per member")
    if G.shape[1] != obs.size:
        raise ValueError("predicted data and observation dimensions differ")
    if not np.all(np.isfinite(M)) or not np.all(np.isfinite(G)):
        raise ValueError("inputs must be finite")
    if inflation <= 0:
        raise ValueError("inflation must be positive")
    n = M.shape[0]

    D, E = perturb_observations(obs, n, seed)
    Y = D + E - G

    A_m = M - M.mean(axis=0)
    A_g = G - G.mean(axis=0)
    C_mg = A_m.T @ A_g / (n - 1)
    C_gg = A_g.T @ A_g / (n - 1)
    s = np.asarray(obs.noise_std, dtype=np.float64)
    S = C_gg + np.diag(s * s)

    X = _solve_spd(S, Y.T)            # (m, n)
    M_a = M + (C_mg @ X).T

    if inflation != 1.0:
        center = M_a.mean(axis=0)
        M_a = center + inflation * (M_a - center)

    K = _solve_spd(S, C_mg.T).T       # gain, (k, m)
    G_a = G + (C_gg @ X).T            # linearized posterior data, diagnostics only
    report = AnalysisReport(
        prior_misfit=normalized_misfit(G, obs),
        posterior_misfit=normalized_misfit(G_a, obs),
        kalman_gain_norm=float(np.linalg.norm(K)),
        spread_before=M.std(axis=0, ddof=1),
        spread_after=M_a.std(axis=0, ddof=1),
    )
    out = LatentEnsemble(M_a) if wrap else M_a
    return out, report
