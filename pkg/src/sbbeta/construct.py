"""Forward sampling: stick-breaking beta processes, Bernoulli processes and
the Indian buffet process.

Locations live on [0, 1) with the base measure taken as ``gamma`` times the
uniform distribution. Within a round the draw order is fixed: atom count,
then locations, then the Beta(1, alpha) breaks, then the Gamma auxiliaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measure import ProcessParams, check_round

_PI_MIN = np.finfo(float).tiny
_PI_MAX = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class Atom:
    theta: float
    pi: float
    round: int


@dataclass(frozen=True)
class BetaProcessDraw:
    """Atoms of a beta process truncated after ``rounds_kept`` rounds.

    Stored column-wise; ``atoms`` materializes the per-atom view.
    """

    params: ProcessParams
    rounds_kept: int
    theta: np.ndarray
    pi: np.ndarray
    rounds: np.ndarray

    def __post_init__(self):
        for arr in (self.theta, self.pi, self.rounds):
            arr.setflags(write=False)
        if self.rounds.size and self.rounds.max() > self.rounds_kept:
            raise ValueError("atom round exceeds rounds_kept")

    @property
    def atoms(self) -> list[Atom]:
        return [Atom(float(t), float(p), int(r)) for t, p, r in zip(self.theta, self.pi, self.rounds)]

    def __len__(self):
        return self.pi.size

    def total_mass(self) -> float:
        return float(self.pi.sum())


@dataclass(frozen=True)
class FeatureAllocation:
    """Binary observations-by-atoms matrix with atom identifiers."""

    atom_ids: tuple
    indicators: np.ndarray

    def __post_init__(self):
        z = self.indicators
        if z.ndim != 2 or z.shape[1] != len(self.atom_ids):
            raise ValueError("indicator matrix must be (n, len(atom_ids))")
        if not np.all((z == 0) | (z == 1)):
            raise ValueError("indicator entries must be 0 or 1")
        z.setflags(write=False)

    @property
    def n(self) -> int:
        return self.indicators.shape[0]

    def row_totals(self) -> np.ndarray:
        return self.indicators.sum(axis=1)

    def n_observed_atoms(self) -> int:
        return int(np.count_nonzero(self.indicators.any(axis=0)))


@dataclass(frozen=True)
class Cell:
    """One set of a measurable partition: its base mass, the concentration
    as a function of location, and a sampler ``(rng, size) -> locations``."""

    mass: float
    alpha_fn: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.random.Generator, int], np.ndarray] = field(
        default=lambda rng, size: rng.random(size)
    )


@dataclass(frozen=True)
class PartitionedBase:
    cells: Sequence[Cell]

    def __post_init__(self):
        for cell in self.cells:
            if not (np.isfinite(cell.mass) and cell.mass >= 0):
                raise ValueError(f"cell mass must be finite and >= 0, got {cell.mass!r}")


def _clip_weights(pi):
    return np.clip(pi, _PI_MIN, _PI_MAX)


def round_weights(i: int, alpha, size: int, rng: np.random.Generator) -> np.ndarray:
    """Weights of ``size`` round-``i`` atoms: ``V * exp(-T)``.

    ``alpha`` may be a scalar or a per-atom array.
    """
    v = rng.beta(1.0, alpha, size=size)
    if i == 1:
        return _clip_weights(v)
    t = rng.gamma(i - 1.0, 1.0 / np.asarray(alpha, dtype=float), size=size)
    return _clip_weights(v * np.exp(-t))


def round_weights_and_aux(i: int, alpha, size: int, rng: np.random.Generator):
    """Like :func:`round_weights` but also returns ``w = exp(-T)`` (NaN for round 1)."""
    v = rng.beta(1.0, alpha, size=size)
    if i == 1:
        return _clip_weights(v), np.full(size, np.nan)
    w = np.exp(-rng.gamma(i - 1.0, 1.0 / np.asarray(alpha, dtype=float), size=size))
    return _clip_weights(v * w), w


def draw_round(i: int, params: ProcessParams, rng: np.random.Generator) -> list[Atom]:
    i = check_round(i)
    theta, pi = _draw_round_arrays(i, params, rng)
    return [Atom(float(t), float(p), i) for t, p in zip(theta, pi)]


def _draw_round_arrays(i, params, rng):
    count = rng.poisson(params.gamma)
    theta = rng.random(count)
    return theta, round_weights(i, params.alpha, count, rng)


def _assemble(params, R, pieces):
    if pieces:
        theta = np.concatenate([p[0] for p in pieces])
        pi = np.concatenate([p[1] for p in pieces])
        rounds = np.concatenate([np.full(p[1].size, p[2], dtype=np.int64) for p in pieces])
    else:
        theta, pi, rounds = np.empty(0), np.empty(0), np.empty(0, dtype=np.int64)
    return BetaProcessDraw(params, R, theta, pi, rounds)


def draw_beta_process(params: ProcessParams, R: int, rng: np.random.Generator) -> BetaProcessDraw:
    """Rounds ``1..R`` of the stick-breaking construction."""
    R = check_round(R)
    pieces = []
    for i in range(1, R + 1):
        theta, pi = _draw_round_arrays(i, params, rng)
        pieces.append((theta, pi, i))
    return _assemble(params, R, pieces)


def draw_beta_process_general(base: PartitionedBase, R: int, rng: np.random.Generator,
                              params: ProcessParams | None = None) -> BetaProcessDraw:
    """Superposition of per-cell constructions with location-dependent concentration.

    Every round visits the cells in order; each atom takes its own
    ``alpha(theta)`` for both its Beta break and its Gamma auxiliary.
    ``params`` is only recorded on the result (defaults to the mean
    concentration of the first cell at 0.5 and the summed mass).
    """
    R = check_round(R)
    if params is None:
        total = float(sum(c.mass for c in base.cells))
        a0 = float(np.asarray(base.cells[0].alpha_fn(np.array([0.5])))[0]) if base.cells else 1.0
        params = ProcessParams(a0, total if total > 0 else 1.0)
    pieces = []
    for i in range(1, R + 1):
        for cell in base.cells:
            count = rng.poisson(cell.mass)
            theta = np.asarray(cell.sampler(rng, count), dtype=float)
            alpha = np.asarray(cell.alpha_fn(theta), dtype=float)
            if np.any(~np.isfinite(alpha) | (alpha <= 0)):
                raise ValueError("alpha_fn must return finite positive values")
            pieces.append((theta, round_weights(i, alpha, count, rng), i))
    return _assemble(params, R, pieces)


def draw_bernoulli_process(H: BetaProcessDraw, n: int, rng: np.random.Generator) -> FeatureAllocation:
    """``n`` independent Bernoulli-process rows over the atoms of ``H``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = (rng.random((n, len(H))) < H.pi).astype(np.int8)
    return FeatureAllocation(tuple(range(len(H))), z)


def draw_ibp(n: int, params: ProcessParams | tuple, rng: np.random.Generator) -> FeatureAllocation:
    """Sequential (marginal) Indian buffet process with concentration and mass.

    Row ``m + 1`` takes each existing dish with probability
    ``count / (alpha + m)`` and ``Poisson(alpha * gamma / (alpha + m))`` new ones.
    ``params`` may be a ``(alpha, gamma)`` tuple, which also admits ``gamma = 0``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    alpha, gamma = (params.alpha, params.gamma) if isinstance(params, ProcessParams) else params
    counts = np.zeros(0, dtype=np.int64)
    rows = []
    for m in range(n):
        old = rng.random(counts.size) < counts / (alpha + m)
        new = rng.poisson(alpha * gamma / (alpha + m))
        row = np.concatenate([old, np.ones(new, dtype=bool)])
        counts = np.concatenate([counts, np.zeros(new, dtype=np.int64)]) + row
        rows.append(row)
    z = np.zeros((n, counts.size), dtype=np.int8)
    for m, row in enumerate(rows):
        z[m, :row.size] = row
    return FeatureAllocation(tuple(range(counts.size)), z)
