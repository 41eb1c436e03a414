"""System parameters, validation, and the reproducible random-stream contract.

Every stochastic operation in the package draws from a ``numpy.random.Generator``
obtained through an :class:`RngStream`.  Streams are pure values: the same
(seed, stream_id) pair always yields the bit-identical draw sequence, no matter
which thread or process materializes it, which is what makes Monte Carlo trials
embarrassingly parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonPositiveDimension, OutOfRange, ParseError

_MASK64 = (1 << 64) - 1

#: keys accepted in a system config file, in canonical order
CONFIG_KEYS = ("R", "Q", "M", "N_rls", "v", "lambda", "x_thr", "eps", "delta", "seed")


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of the end-to-end system.

    ``channel_gain`` is stored as a tuple of length ``num_molecule_types``; a
    scalar passed to the constructor is broadcast.  Instances are immutable and
    safe to share across threads.
    """

    num_receptor_types: int = 10
    num_molecule_types: int = 20
    num_mixtures: int = 16
    molecules_per_release: int = 5000
    channel_gain: tuple = 0.01
    noise_mean: float = 10.0
    activation_threshold: float = 5.0
    recon_error_eps: float = 1.0
    deviation_delta: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        v = self.channel_gain
        if np.isscalar(v):
            v = (float(v),) * int(self.num_molecule_types)
        else:
            v = tuple(float(g) for g in v)
        object.__setattr__(self, "channel_gain", v)

    @property
    def gain_vector(self) -> np.ndarray:
        return np.asarray(self.channel_gain, dtype=float)

    def override(self, **changes) -> "SystemConfig":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Check every invariant of ``cfg`` and return it unchanged.

    Never clamps or repairs a value: a bad parameter always raises.  Validating
    an already-valid config is a no-op, so the function is idempotent.

    Raises:
        NonPositiveDimension: R, Q, M, or N_rls below 1.
        OutOfRange: a gain outside [0, 1], a negative noise mean or threshold,
            a non-positive eps/delta, or any non-finite real.
        DimensionMismatch: channel gain length differs from Q.
    """
    for name, value in (
        ("R", cfg.num_receptor_types),
        ("Q", cfg.num_molecule_types),
        ("M", cfg.num_mixtures),
        ("N_rls", cfg.molecules_per_release),
    ):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise NonPositiveDimension(f"{name} must be an integer, got {value!r}")
        if value < 1:
            raise NonPositiveDimension(f"{name} must be >= 1, got {value}")

    if len(cfg.channel_gain) != cfg.num_molecule_types:
        raise DimensionMismatch(
            f"channel gain has length {len(cfg.channel_gain)}, expected Q={cfg.num_molecule_types}"
        )
    for q, g in enumerate(cfg.channel_gain):
        if not math.isfinite(g) or not 0.0 <= g <= 1.0:
            raise OutOfRange(f"channel gain v[{q}]={g} outside [0, 1]")

    for name, value, low, strict in (
        ("lambda", cfg.noise_mean, 0.0, False),
        ("x_thr", cfg.activation_threshold, 0.0, False),
        ("eps", cfg.recon_error_eps, 0.0, True),
        ("delta", cfg.deviation_delta, 0.0, True),
    ):
        if not math.isfinite(value):
            raise OutOfRange(f"{name} must be finite, got {value}")
        if value < low or (strict and value == low):
            bound = "> 0" if strict else ">= 0"
            raise OutOfRange(f"{name} must be {bound}, got {value}")

    if not isinstance(cfg.master_seed, (int, np.integer)) or isinstance(cfg.master_seed, bool):
        raise OutOfRange(f"seed must be an integer, got {cfg.master_seed!r}")

    return cfg


def _mix64(a: int, b: int) -> int:
    """Avalanche two 64-bit values into one (splitmix64-style)."""
    z = (a * 0x9E3779B97F4A7C15 + b + 0x632BE59BD9B4E019) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass(frozen=True)
class RngStream:
    """Address of one deterministic random stream.

    The pair (seed, stream_id) identifies the stream completely; materializing
    it twice gives bit-identical generators.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Materialize a fresh generator positioned at the start of the stream."""
        sid = self.stream_id & _MASK64
        ss = np.random.SeedSequence(
            entropy=self.seed & _MASK64,
            spawn_key=(sid & 0xFFFFFFFF, (sid >> 32) & 0xFFFFFFFF),
        )
        return np.random.default_rng(ss)

    def child(self, index: int) -> "RngStream":
        """Derive a sub-stream, e.g. one per Monte Carlo trial."""
        return RngStream(self.seed, _mix64(self.stream_id & _MASK64, index & _MASK64))


def derive_stream(master_seed: int, trial_index: int) -> RngStream:
    """Map a trial index to its own independent stream (injective in the index)."""
    return RngStream(master_seed, trial_index)


def parse_config_text(text: str, source: str = "<string>") -> dict:
    """Parse ``key = value`` lines into an ordered dict of raw strings.

    Blank lines and ``#`` comments are ignored.  Later duplicates of a key
    raise, to avoid silently shadowed parameters.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ParseError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _parse_gain(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        return float(parts[0])
    return tuple(float(p) for p in parts)


def config_from_mapping(raw: dict, source: str = "<mapping>") -> SystemConfig:
    """Build and validate a SystemConfig from raw key/value strings.

    Accepts exactly the keys in :data:`CONFIG_KEYS`; missing keys take the
    defaults.  ``v`` may be a scalar (broadcast to length Q) or a
    comma-separated list of Q values.
    """
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ParseError(f"{source}: unknown config keys {sorted(unknown)}")
    kwargs = {}
    try:
        if "R" in raw:
            kwargs["num_receptor_types"] = int(raw["R"])
        if "Q" in raw:
            kwargs["num_molecule_types"] = int(raw["Q"])
        if "M" in raw:
            kwargs["num_mixtures"] = int(raw["M"])
        if "N_rls" in raw:
            kwargs["molecules_per_release"] = int(raw["N_rls"])
        if "v" in raw:
            kwargs["channel_gain"] = _parse_gain(raw["v"])
        if "lambda" in raw:
            kwargs["noise_mean"] = float(raw["lambda"])
        if "x_thr" in raw:
            kwargs["activation_threshold"] = float(raw["x_thr"])
        if "eps" in raw:
            kwargs["recon_error_eps"] = float(raw["eps"])
        if "delta" in raw:
            kwargs["deviation_delta"] = float(raw["delta"])
        if "seed" in raw:
            kwargs["master_seed"] = int(raw["seed"])
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from exc
    return validate_config(SystemConfig(**kwargs))


def load_system_config(path) -> SystemConfig:
    """Read a system config from a ``key = value`` text file."""
    path = Path(path)
    return config_from_mapping(parse_config_text(path.read_text(), str(path)), str(path))
