"""CSV readers and writers.

Floats are written with ``repr``, the shortest string that reads back to the
same double (at most 17 significant digits), so every file round-trips
losslessly. Files always carry a header row and end each row with ``\\n``.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .construct import BetaProcessDraw, FeatureAllocation
from .measure import ProcessParams
from .model import Dataset, FactorState
from .truncation import BoundCurve


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def _check_header(path, header, expected):
    if header != list(expected):
        raise ValueError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")


# -- beta process draws and allocations --------------------------------------

DRAW_HEADER = ("theta", "pi", "round")


def write_draw(path, draw: BetaProcessDraw) -> Path:
    rows = ([fmt(t), fmt(p), str(int(r))] for t, p, r in zip(draw.theta, draw.pi, draw.rounds))
    return write_rows(path, DRAW_HEADER, rows)


def read_draw(path, params: ProcessParams, rounds_kept: int | None = None) -> BetaProcessDraw:
    header, rows = read_rows(path)
    _check_header(path, header, DRAW_HEADER)
    theta = np.array([float(r[0]) for r in rows])
    pi = np.array([float(r[1]) for r in rows])
    rounds = np.array([int(r[2]) for r in rows], dtype=np.int64)
    if rounds_kept is None:
        rounds_kept = int(rounds.max()) if rounds.size else 0
    return BetaProcessDraw(params, rounds_kept, theta, pi, rounds)


def write_allocation(path, alloc: FeatureAllocation) -> Path:
    rows = ([str(int(v)) for v in row] for row in alloc.indicators)
    return write_rows(path, [str(a) for a in alloc.atom_ids], rows)


def read_allocation(path) -> FeatureAllocation:
    header, rows = read_rows(path)
    z = np.array([[int(v) for v in row] for row in rows], dtype=np.int8).reshape(len(rows), len(header))
    ids = tuple(int(h) if h.lstrip("-").isdigit() else h for h in header)
    return FeatureAllocation(ids, z)


# -- bounds --------------------------------------------------------------------

BOUND_HEADER = ("R", "theorem3", "corollary1", "legacy")
GRID_HEADER = ("alpha", "gamma", "M", "l1_gap")


def write_bound_curve(path, curve: BoundCurve) -> Path:
    rows = ([str(int(r)), fmt(t), fmt(c), fmt(g)]
            for r, t, c, g in zip(curve.R, curve.theorem3, curve.corollary1, curve.legacy))
    return write_rows(path, BOUND_HEADER, rows)


def read_bound_curve(path, params: ProcessParams, M: int) -> BoundCurve:
    header, rows = read_rows(path)
    _check_header(path, header, BOUND_HEADER)
    cols = list(zip(*rows)) if rows else [(), (), (), ()]
    return BoundCurve(params, M, np.array(cols[0], dtype=np.int64),
                      *(np.array(c, dtype=float) for c in cols[1:]))


def write_gap_grid(path, alphas, gammas, M: int, gaps: np.ndarray) -> Path:
    rows = ([fmt(float(a)), fmt(float(g)), str(int(M)), fmt(gaps[i, j])]
            for i, a in enumerate(alphas) for j, g in enumerate(gammas))
    return write_rows(path, GRID_HEADER, rows)


# -- factor model --------------------------------------------------------------

def write_matrix(path, A: np.ndarray, prefix: str) -> Path:
    A = np.atleast_2d(A)
    header = [f"{prefix}{j}" for j in range(A.shape[1])]
    return write_rows(path, header, ([fmt(v) for v in row] for row in A))


def read_matrix(path, dtype=float) -> np.ndarray:
    header, rows = read_rows(path)
    return np.array(rows, dtype=float).reshape(len(rows), len(header)).astype(dtype)


def write_dataset(directory, data: Dataset, truth: FactorState | None = None, pi=None) -> dict:
    """Writes ``Y.csv`` (rows are dimensions, columns observations) and, when
    given, the ground truth ``Theta.csv``, ``W.csv``, ``Z.csv``, ``pi.csv``."""
    d = Path(directory)
    out = {"Y": write_matrix(d / "Y.csv", data.Y, "n")}
    if truth is not None:
        out["Theta"] = write_matrix(d / "Theta.csv", truth.Theta, "k")
        out["W"] = write_matrix(d / "W.csv", truth.W, "n")
        out["Z"] = write_rows(d / "Z.csv", [f"n{j}" for j in range(truth.Z.shape[1])],
                              ([str(int(v)) for v in row] for row in truth.Z))
        out["noise_var"] = write_rows(d / "noise_var.csv", ["noise_var"], [[fmt(truth.noise_var)]])
    if pi is not None:
        out["pi"] = write_rows(d / "pi.csv", ["k", "pi"], ([str(k), fmt(p)] for k, p in enumerate(pi)))
    return out


def read_dataset(directory):
    """Returns ``(Dataset, FactorState or None, pi or None)``."""
    d = Path(directory)
    data = Dataset(read_matrix(d / "Y.csv"))
    truth = pi = None
    if (d / "Theta.csv").exists():
        noise = float(read_rows(d / "noise_var.csv")[1][0][0])
        truth = FactorState(read_matrix(d / "Theta.csv"), read_matrix(d / "W.csv"),
                            read_matrix(d / "Z.csv", dtype=np.int8), noise)
    if (d / "pi.csv").exists():
        pi = np.array([float(r[1]) for r in read_rows(d / "pi.csv")[1]])
    return data, truth, pi


def write_loadings(path, iterations, loadings) -> Path:
    """Long format: one row per (retained sample, observed factor) with the
    D loading entries."""
    D = loadings[0].shape[0] if loadings else 0
    header = ["iteration", "factor"] + [f"theta_{i}" for i in range(D)]
    rows = ([str(it), str(k)] + [fmt(v) for v in L[:, k]]
            for it, L in zip(iterations, loadings) for k in range(L.shape[1]))
    return write_rows(path, header, rows)


def read_loadings(path) -> dict:
    header, rows = read_rows(path)
    out: dict = {}
    for row in rows:
        out.setdefault(int(row[0]), []).append([float(v) for v in row[2:]])
    D = len(header) - 2
    return {it: np.array(cols).T.reshape(D, len(cols)) for it, cols in out.items()}
