"""Parameter sweeps, CSV emission, and plotting.

A sweep varies exactly one knob (the reconstruction-error pair, the release
count, the noise mean, the activation threshold, or the alphabet size) and
estimates the detection error probability at every value.  Each sweep point
derives its random streams from the master seed and a stable hash of the
swept *value* (not its position), so inserting or removing grid points never
perturbs the other rows, and re-running a sweep with the same seed reproduces
the CSV byte for byte.

To keep that byte-level determinism, the ``solve_ms`` CSV column reports a
deterministic solver-effort proxy (mean interior-point iterations per trial)
rather than wall-clock milliseconds, which would differ between runs.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import matplotlib
from matplotlib.figure import Figure

from .affinity import AffinityMatrix, fixture_affinity_matrix, load_affinity
from .config import RngStream, SystemConfig, config_from_mapping, parse_config_text, validate_config
from .detection import run_trials
from .errors import ParseError
from .mixtures import MixtureMatrix, build_mixture_matrix, load_mixture_matrix

SWEEP_VARIABLES = ("eps_delta", "N_rls", "lambda", "x_thr", "alphabet_size")

CSV_HEADER = "value,p_e,ci,infeasible_frac,solve_ms"


@dataclass(frozen=True)
class GeneratedAlphabet:
    """Recipe for a reproducible random alphabet: n_mix molecule types per mixture."""

    n_mix: int = 4
    seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    trials_per_point: int
    base_config: SystemConfig
    alphabet_source: GeneratedAlphabet | str = GeneratedAlphabet()
    affinity_source: str = "fixture"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


def validate_spec(spec: SweepSpec) -> SweepSpec:
    if spec.variable not in SWEEP_VARIABLES:
        raise ParseError(f"unknown sweep variable {spec.variable!r}; choose from {SWEEP_VARIABLES}")
    if not spec.values:
        raise ParseError("sweep needs at least one value")
    if any(b <= a for a, b in zip(spec.values, spec.values[1:])):
        raise ParseError("sweep values must be strictly increasing")
    if spec.trials_per_point < 100:
        raise ParseError("trials_per_point must be >= 100 for meaningful confidence intervals")
    if spec.variable == "alphabet_size" and not isinstance(spec.alphabet_source, GeneratedAlphabet):
        raise ParseError("an alphabet_size sweep requires a generated alphabet source")
    validate_config(spec.base_config)
    return spec


@dataclass(frozen=True)
class SweepPoint:
    value: float
    p_e: float
    ci_halfwidth: float
    infeasible_fraction: float
    solver_effort: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def _hash_value(value: float) -> int:
    digest = hashlib.blake2b(struct.pack("<d", float(value)), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _apply_variable(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    if variable == "eps_delta":
        return cfg.override(recon_error_eps=value, deviation_delta=value)
    if variable == "N_rls":
        return cfg.override(molecules_per_release=int(value))
    if variable == "lambda":
        return cfg.override(noise_mean=value)
    if variable == "x_thr":
        return cfg.override(activation_threshold=value)
    if variable == "alphabet_size":
        return cfg.override(num_mixtures=int(value))
    raise ParseError(f"unknown sweep variable {variable!r}")


def resolve_affinity(source: str) -> AffinityMatrix:
    if source == "fixture":
        return fixture_affinity_matrix()
    return load_affinity(source)


def resolve_alphabet(source, cfg: SystemConfig) -> MixtureMatrix:
    """Materialize the alphabet for one sweep point.

    Generated alphabets are keyed by (alphabet seed, alphabet size), so every
    sweep point at the same size sees the same alphabet, and alphabet-size
    sweeps regenerate deterministically per size.
    """
    if isinstance(source, GeneratedAlphabet):
        stream = RngStream(source.seed, _hash_value(float(cfg.num_mixtures)))
        return build_mixture_matrix(
            cfg.num_molecule_types, cfg.num_mixtures, source.n_mix, stream.generator()
        )
    mat = load_mixture_matrix(source)
    if mat.num_mixtures != cfg.num_mixtures or mat.num_molecules != cfg.num_molecule_types:
        raise ParseError(
            f"alphabet file is {mat.num_molecules}x{mat.num_mixtures}, "
            f"config wants {cfg.num_molecule_types}x{cfg.num_mixtures}"
        )
    return mat


def sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Run the sweep and return one row per value, deterministically."""
    validate_spec(spec)
    affinity = resolve_affinity(spec.affinity_source)
    points = []
    for value in spec.values:
        cfg = _apply_variable(spec.base_config, spec.variable, value)
        alphabet = resolve_alphabet(spec.alphabet_source, cfg)
        stream = RngStream(cfg.master_seed, _hash_value(value))
        est = run_trials(cfg, affinity, alphabet, spec.trials_per_point, stream, threads=threads)
        points.append(
            SweepPoint(
                value=float(value),
                p_e=float(est.p_e),
                ci_halfwidth=float(est.ci_halfwidth),
                infeasible_fraction=float(est.infeasible_fraction),
                solver_effort=float(est.mean_solver_iterations),
            )
        )
    return SweepResult(points=tuple(points))


def emit_csv(result: SweepResult, path) -> None:
    """Write the sweep as CSV, byte-stable for a fixed seed.

    Floats are rendered with ``repr`` (shortest exact form, always a ``.``
    decimal point regardless of locale), so parsing the file back yields the
    identical SweepResult.  The ``solve_ms`` column carries the deterministic
    effort proxy described in the module docstring.
    """
    lines = [CSV_HEADER]
    for p in result.points:
        lines.append(
            f"{p.value!r},{p.p_e!r},{p.ci_halfwidth!r},"
            f"{p.infeasible_fraction!r},{p.solver_effort!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> SweepResult:
    """Parse a CSV produced by :func:`emit_csv` back into a SweepResult."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"{path}: missing sweep CSV header {CSV_HEADER!r}")
    points = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"{path}:{i}: expected 5 columns")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: non-numeric field") from exc
        points.append(SweepPoint(*vals))
    return SweepResult(points=tuple(points))


def _style_axes(ax, xlabel: str):
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error probability")
    ax.grid(True, which="both", alpha=0.3)


def _plot_points(ax, points, label=None):
    xs = np.array([p.value for p in points])
    ys = np.array([max(p.p_e, 1e-6) for p in points])  # display floor for log axis
    err = np.array([p.ci_halfwidth for p in points])
    lower = np.minimum(err, ys - 1e-7)
    ax.errorbar(xs, ys, yerr=np.vstack([lower, err]), marker="o", capsize=3, label=label)


def _save_svg(fig: Figure, path) -> None:
    # fixed hash salt and no date stamp keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": "mixsense"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def emit_plot(result: SweepResult, path, xlabel: str = "swept value") -> None:
    """Render the sweep as a log-log curve with confidence whiskers (SVG)."""
    if not result.points:
        raise ParseError("cannot plot an empty sweep result")
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.add_subplot(111)
    _plot_points(ax, result.points)
    _style_axes(ax, xlabel)
    _save_svg(fig, path)


def plot_curves(curves: dict, path, xlabel: str = "swept value") -> None:
    """Overlay several labeled sweeps in one figure (used for multi-curve configs)."""
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.add_subplot(111)
    for label, result in curves.items():
        _plot_points(ax, result.points, label=label)
    _style_axes(ax, xlabel)
    ax.legend()
    _save_svg(fig, path)


_SWEEP_KEYS = ("variable", "values", "trials", "affinity", "alphabet", "n_mix", "alphabet_seed")


def load_sweep_file(path) -> list:
    """Parse a sweep config file into labeled (curve label, SweepSpec) jobs.

    The file shares the system-config keys and adds the sweep keys
    ``variable``, ``values``, ``trials``, ``affinity`` (``fixture`` or a matrix
    file path), ``alphabet`` (``generated`` or a matrix file path), ``n_mix``
    and ``alphabet_seed``.  Optional ``curve.<label> = key=value[, ...]`` lines
    fan the sweep out into several curves with per-curve config overrides.
    """
    path = Path(path)
    raw = parse_config_text(path.read_text(), str(path))

    curve_overrides = {}
    base_raw = {}
    sweep_raw = {}
    for key, value in raw.items():
        if key.startswith("curve."):
            curve_overrides[key[len("curve.") :]] = value
        elif key in _SWEEP_KEYS:
            sweep_raw[key] = value
        else:
            base_raw[key] = value

    for key in ("variable", "values", "trials"):
        if key not in sweep_raw:
            raise ParseError(f"{path}: missing sweep key {key!r}")

    def build_spec(mapping: dict) -> SweepSpec:
        cfg = config_from_mapping(mapping, str(path))
        try:
            values = tuple(float(v) for v in sweep_raw["values"].split(","))
            trials = int(sweep_raw["trials"])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        alphabet = sweep_raw.get("alphabet", "generated")
        if alphabet == "generated":
            try:
                n_mix = int(sweep_raw.get("n_mix", "4"))
                alph_seed = int(sweep_raw.get("alphabet_seed", str(cfg.master_seed)))
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}") from exc
            source = GeneratedAlphabet(n_mix=n_mix, seed=alph_seed)
        else:
            source = alphabet
        return validate_spec(
            SweepSpec(
                variable=sweep_raw["variable"],
                values=values,
                trials_per_point=trials,
                base_config=cfg,
                alphabet_source=source,
                affinity_source=sweep_raw.get("affinity", "fixture"),
            )
        )

    if not curve_overrides:
        return [("", build_spec(base_raw))]

    jobs = []
    for label, override_text in curve_overrides.items():
        mapping = dict(base_raw)
        for item in override_text.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ParseError(f"{path}: curve override {item!r} is not key=value")
            k, v = item.split("=", 1)
            mapping[k.strip()] = v.strip()
        jobs.append((label, build_spec(mapping)))
    return jobs
