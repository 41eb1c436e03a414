"""End-to-end stochastic channel: release, Poisson propagation, thresholded reception.

One snapshot works in three stages.  Release turns a one-hot transmit signal
into per-molecule-type counts ``u = N_rls * M s``.  Propagation thins each
count through its channel gain and draws the received counts ``x_q ~
Pois(v_q u_q)`` independently.  Reception adds per-receptor-type baseline noise
``n_r ~ Pois(lambda)`` to the affinity response and clips through the
activation nonlinearity ``max(z - x_thr, 0)``, so a receptor produces output
only above its activation threshold.  Inhibitory (negative) affinities can pull
the pre-activation signal below zero; the output is still nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import AffinityMatrix
from .config import SystemConfig
from .errors import DimensionMismatch
from .mixtures import MixtureMatrix, one_hot_signal


@dataclass(frozen=True)
class MoleculeCounts:
    """Released counts u (length Q) and received counts x (length Q)."""

    released: np.ndarray
    received: np.ndarray


@dataclass(frozen=True)
class ArrayObservation:
    """One snapshot of the receptor array.

    ``activated`` / ``non_activated`` partition the receptor indices by strict
    positivity of the output.  ``ground_truth_mixture`` and ``counts`` are
    simulation metadata; recovery never reads them.
    """

    y: np.ndarray
    activated: np.ndarray
    non_activated: np.ndarray
    ground_truth_mixture: int | None = None
    counts: MoleculeCounts | None = None

    @property
    def num_receptors(self) -> int:
        return self.y.shape[0]


def release(s: np.ndarray, mixtures: MixtureMatrix, molecules_per_release: int) -> np.ndarray:
    """Deterministic release counts u = N_rls * M s for a one-hot (or zero) s."""
    s = np.asarray(s, dtype=float)
    if s.shape != (mixtures.num_mixtures,):
        raise DimensionMismatch(
            f"transmit signal has shape {s.shape}, expected ({mixtures.num_mixtures},)"
        )
    return molecules_per_release * (mixtures.entries @ s)


def sample_poisson(mean: float, rng: np.random.Generator) -> int:
    """One Poisson draw; exact (always 0) for mean 0."""
    if mean < 0 or not np.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    return int(rng.poisson(mean))


def propagate(u: np.ndarray, gain: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Received counts x_q ~ Pois(v_q u_q), independent across molecule types."""
    u = np.asarray(u, dtype=float)
    gain = np.asarray(gain, dtype=float)
    if u.shape != gain.shape:
        raise DimensionMismatch(f"u has shape {u.shape} but gain has shape {gain.shape}")
    return rng.poisson(gain * u).astype(float)


def activation_fn(z, x_thr: float):
    """Shifted rectifier max(z - x_thr, 0); elementwise on arrays."""
    return np.maximum(np.asarray(z, dtype=float) - x_thr, 0.0)


def receive(
    x: np.ndarray,
    affinity: AffinityMatrix,
    noise_mean: float,
    x_thr: float,
    rng: np.random.Generator,
) -> ArrayObservation:
    """Array output y_r = f([A x]_r + n_r) and its activation partition.

    A receptor belongs to the activated set iff its output is strictly
    positive; a receptor sitting exactly at the threshold outputs 0 and counts
    as non-activated.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (affinity.num_molecules,):
        raise DimensionMismatch(
            f"x has shape {x.shape}, expected ({affinity.num_molecules},)"
        )
    noise = rng.poisson(noise_mean, size=affinity.num_receptors).astype(float)
    y = activation_fn(affinity.entries @ x + noise, x_thr)
    activated = np.flatnonzero(y > 0.0)
    non_activated = np.flatnonzero(y == 0.0)
    return ArrayObservation(y=y, activated=activated, non_activated=non_activated)


def simulate_snapshot(
    cfg: SystemConfig,
    affinity: AffinityMatrix,
    mixtures: MixtureMatrix,
    mixture_index: int,
    rng: np.random.Generator,
) -> ArrayObservation:
    """Simulate one release of mixture ``mixture_index`` (0-based) end to end."""
    s = one_hot_signal(mixture_index, mixtures.num_mixtures)
    u = release(s, mixtures, cfg.molecules_per_release)
    x = propagate(u, cfg.gain_vector, rng)
    obs = receive(x, affinity, cfg.noise_mean, cfg.activation_threshold, rng)
    return ArrayObservation(
        y=obs.y,
        activated=obs.activated,
        non_activated=obs.non_activated,
        ground_truth_mixture=mixture_index,
        counts=MoleculeCounts(released=u, received=x),
    )
