"""Molecule-mixture alphabets.

A mixture alphabet is a Q x M column-stochastic matrix: column m lists the
fraction of each molecule type in mixture m.  Every mixture here uses exactly
``n_mix`` molecule types in equal fractions, and no two mixtures share the same
support, so messages stay distinguishable at the support level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AlphabetTooLarge, BadArity, InvariantViolation
from .matrix_io import read_matrix, write_matrix

#: tolerance for column sums / uniform fractions when importing a matrix
_LOAD_TOL = 1e-9


@dataclass(frozen=True)
class MixtureMatrix:
    """Q x M mixture construction matrix with ``n_mix`` molecule types per column."""

    entries: np.ndarray
    n_mix: int

    @property
    def num_molecules(self) -> int:
        return self.entries.shape[0]

    @property
    def num_mixtures(self) -> int:
        return self.entries.shape[1]


def one_hot_signal(index: int, num_mixtures: int) -> np.ndarray:
    """Transmit signal for releasing mixture ``index`` (0-based) alone."""
    if not 0 <= index < num_mixtures:
        raise IndexError(f"mixture index {index} outside [0, {num_mixtures})")
    s = np.zeros(num_mixtures)
    s[index] = 1.0
    return s


def build_mixture_matrix(
    num_molecules: int, num_mixtures: int, n_mix: int, rng: np.random.Generator
) -> MixtureMatrix:
    """Draw ``num_mixtures`` distinct supports uniformly from C(Q, n_mix) choices.

    Each selected support carries uniform fractions 1/n_mix.  When the number
    of possible supports is small the choice is made by explicit enumeration;
    otherwise supports are rejection-sampled against the set already taken
    (still uniform over the remaining supports).
    """
    if not 1 <= n_mix <= num_molecules:
        raise BadArity(f"n_mix={n_mix} must lie in [1, Q={num_molecules}]")
    total = comb(num_molecules, n_mix)
    if num_mixtures > total:
        raise AlphabetTooLarge(
            f"M={num_mixtures} mixtures requested but only C({num_molecules},{n_mix})={total} "
            "distinct supports exist"
        )

    if total <= 200_000:
        all_supports = list(itertools.combinations(range(num_molecules), n_mix))
        picked = rng.choice(total, size=num_mixtures, replace=False)
        supports = [all_supports[i] for i in picked]
    else:
        seen: set[tuple[int, ...]] = set()
        supports = []
        while len(supports) < num_mixtures:
            cand = tuple(sorted(rng.choice(num_molecules, size=n_mix, replace=False).tolist()))
            if cand not in seen:
                seen.add(cand)
                supports.append(cand)

    entries = np.zeros((num_molecules, num_mixtures))
    for m, support in enumerate(supports):
        entries[list(support), m] = 1.0 / n_mix
    return MixtureMatrix(entries=entries, n_mix=n_mix)


def _check_invariants(entries: np.ndarray) -> int:
    """Validate mixture-matrix invariants, returning the common support size."""
    if np.any(entries < 0.0):
        col = int(np.argwhere(entries < 0.0)[0][1])
        raise InvariantViolation(f"column {col + 1} has a negative entry")
    sums = entries.sum(axis=0)
    bad = np.argwhere(np.abs(sums - 1.0) > _LOAD_TOL)
    if bad.size:
        col = int(bad[0][0])
        raise InvariantViolation(f"column {col + 1} sums to {sums[col]:.12g}, expected 1")
    counts = (entries != 0.0).sum(axis=0)
    n_mix = int(counts[0])
    if np.any(counts != n_mix):
        col = int(np.argwhere(counts != n_mix)[0][0])
        raise InvariantViolation(
            f"column {col + 1} has {counts[col]} nonzero entries, expected {n_mix}"
        )
    nonzero = entries[entries != 0.0]
    if np.any(np.abs(nonzero - 1.0 / n_mix) > _LOAD_TOL):
        raise InvariantViolation(f"nonzero fractions must all equal 1/{n_mix}")
    supports = {tuple(np.flatnonzero(entries[:, m]).tolist()) for m in range(entries.shape[1])}
    if len(supports) != entries.shape[1]:
        raise InvariantViolation("two columns share the same support")
    return n_mix


def load_mixture_matrix(path) -> MixtureMatrix:
    """Read a mixture matrix and verify all its invariants."""
    entries = read_matrix(path)
    n_mix = _check_invariants(entries)
    return MixtureMatrix(entries=entries, n_mix=n_mix)


def save_mixture_matrix(path, matrix: MixtureMatrix) -> None:
    write_matrix(path, matrix.entries)
