"""Finite truncations of Z^n and T^n with the exact Fourier calculus on them.

A :class:`LatticeWindow` is the cube of integer points with ``|k_j| <= N``;
a :class:`TorusGrid` is the uniform grid ``x = j/M`` on the torus.  All
transforms are direct (dense) sums, which are exact for data supported in
the window whenever ``M >= 2N+1``, so quadrature error never enters tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AliasingError, DimensionMismatchError

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=64)
def _window_points(n: int, N: int) -> np.ndarray:
    axes = [np.arange(-N, N + 1)] * n
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@lru_cache(maxsize=64)
def _grid_nodes(n: int, M: int) -> np.ndarray:
    axes = [np.arange(M) / M] * n
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class LatticeWindow:
    """Cube ``{k in Z^n : |k_j| <= N}`` in lexicographic order."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("dimension and half-width must be positive")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def size(self) -> int:
        return self.side ** self.n

    @property
    def points(self) -> np.ndarray:
        """(size, n) integer array, lexicographic in k."""
        return _window_points(self.n, self.N)

    def index_of(self, k) -> int:
        k = np.asarray(k, dtype=int)
        if k.shape != (self.n,):
            raise DimensionMismatchError(f"point of dimension {k.shape} on window of dimension {self.n}")
        if np.any(np.abs(k) > self.N):
            raise IndexError(f"point {k.tolist()} outside window N={self.N}")
        idx = 0
        for j in range(self.n):
            idx = idx * self.side + (int(k[j]) + self.N)
        return idx

    def contains(self, k) -> bool:
        k = np.asarray(k, dtype=int)
        return k.shape == (self.n,) and bool(np.all(np.abs(k) <= self.N))

    def interior_mask(self, margin: int) -> np.ndarray:
        """Boolean mask of points at least ``margin`` layers from the boundary."""
        return np.all(np.abs(self.points) <= self.N - margin, axis=1)

    def shell_labels(self) -> np.ndarray:
        """Dyadic shell index j with 2^j <= 1+|k| < 2^{j+1} per point."""
        r = 1.0 + np.linalg.norm(self.points, axis=1)
        return np.floor(np.log2(r)).astype(int)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid ``x = j/M`` on the n-torus; quadrature weight M^-n."""

    n: int
    M: int

    def __post_init__(self):
        if self.n < 1 or self.M < 1:
            raise ValueError("dimension and grid size must be positive")

    @property
    def size(self) -> int:
        return self.M ** self.n

    @property
    def nodes(self) -> np.ndarray:
        """(size, n) array of nodes in [0,1)^n, lexicographic in j."""
        return _grid_nodes(self.n, self.M)

    @property
    def weight(self) -> float:
        return self.M ** (-self.n)


def default_grid(window: LatticeWindow) -> TorusGrid:
    """Odd grid M = 2N+3, exact for all kernels from window-supported data."""
    return TorusGrid(window.n, 2 * window.N + 3)


@dataclass
class LatticeSequence:
    """Complex values on a window, extended by zero outside it."""

    window: LatticeWindow
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.shape[0] != self.window.size:
            raise DimensionMismatchError(
                f"{self.values.shape[0]} values on a window of {self.window.size} points"
            )

    @classmethod
    def zeros(cls, window: LatticeWindow) -> "LatticeSequence":
        return cls(window, np.zeros(window.size, dtype=complex))

    @classmethod
    def delta(cls, window: LatticeWindow, k=None) -> "LatticeSequence":
        f = cls.zeros(window)
        if k is None:
            k = np.zeros(window.n, dtype=int)
        f.values[window.index_of(k)] = 1.0
        return f

    @classmethod
    def random(cls, window: LatticeWindow, rng: np.random.Generator,
               margin: int = 0) -> "LatticeSequence":
        """Seeded complex Gaussian data, optionally zero within ``margin`` of the boundary."""
        v = rng.standard_normal(window.size) + 1j * rng.standard_normal(window.size)
        if margin > 0:
            v = np.where(window.interior_mask(margin), v, 0.0)
        return cls(window, v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __getitem__(self, k) -> complex:
        return complex(self.values[self.window.index_of(k)])


@dataclass
class TorusFunction:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.shape[0] != self.grid.size:
            raise DimensionMismatchError(
                f"{self.values.shape[0]} values on a grid of {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("torus function carries non-finite values")


@dataclass(frozen=True)
class MultiIndex:
    entries: tuple

    def __init__(self, entries):
        entries = tuple(int(e) for e in np.atleast_1d(entries))
        if any(e < 0 for e in entries):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "entries", entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def multiindex_range(n: int, max_order: int):
    """All alpha in N0^n with |alpha| <= max_order, lexicographic."""
    out = []

    def rec(prefix, remaining):
        if len(prefix) == n:
            out.append(MultiIndex(prefix))
            return
        for a in range(remaining + 1):
            rec(prefix + [a], remaining - a)

    rec([], max_order)
    return out


def binomial_multi(alpha: MultiIndex, beta: MultiIndex) -> int:
    return int(np.prod([math.comb(a, b) for a, b in zip(alpha, beta)]))


def multiindices_leq(alpha: MultiIndex):
    """All beta <= alpha componentwise."""
    axes = [range(a + 1) for a in alpha]
    grids = np.meshgrid(*[list(ax) for ax in axes], indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=-1)
    return [MultiIndex(c) for c in combos]


# -- transform kernels -------------------------------------------------------

@lru_cache(maxsize=32)
def _dft_matrix(n: int, N: int, M: int) -> np.ndarray:
    """(grid.size, window.size) matrix E with E[x,k] = exp(-2 pi i k.x)."""
    K = _window_points(n, N).astype(float)
    X = _grid_nodes(n, M)
    return np.exp(-1j * TWO_PI * (X @ K.T))


def phase_matrix(window: LatticeWindow, grid: TorusGrid) -> np.ndarray:
    """(window.size, grid.size) matrix with entries exp(+2 pi i k.x)."""
    return _dft_matrix(window.n, window.N, grid.M).conj().T


def forward_dft(f: LatticeSequence, grid: TorusGrid) -> TorusFunction:
    """Sampled transform F(x) = sum_k exp(-2 pi i k.x) f(k) over the window."""
    if grid.n != f.window.n:
        raise DimensionMismatchError(f"grid dimension {grid.n} != window dimension {f.window.n}")
    E = _dft_matrix(f.window.n, f.window.N, grid.M)
    return TorusFunction(grid, E @ f.values)


def inverse_dft(F: TorusFunction, window: LatticeWindow) -> LatticeSequence:
    """f(k) = M^-n sum_x exp(+2 pi i k.x) F(x); refuses aliasing grids."""
    if window.n != F.grid.n:
        raise DimensionMismatchError(f"window dimension {window.n} != grid dimension {F.grid.n}")
    if F.grid.M < 2 * window.N + 1:
        raise AliasingError(
            f"grid M={F.grid.M} cannot resolve window N={window.N} (need M >= {2 * window.N + 1})"
        )
    B = phase_matrix(window, F.grid)
    return LatticeSequence(window, F.grid.weight * (B @ F.values))


def torus_quadrature(F: TorusFunction) -> complex:
    """Exact mean M^-n sum_x F(x); the integral for resolved trig polynomials."""
    return complex(F.grid.weight * np.sum(F.values))


# -- difference calculus -----------------------------------------------------

def _shift_values(f: LatticeSequence, shift) -> np.ndarray:
    """Values of k -> f(k + shift) on the window, zero beyond it."""
    w = f.window
    arr = f.values.reshape((w.side,) * w.n)
    out = np.zeros_like(arr)
    src = []
    dst = []
    for s in shift:
        s = int(s)
        if abs(s) >= w.side:
            return out.reshape(-1)
        if s >= 0:
            src.append(slice(s, w.side))
            dst.append(slice(0, w.side - s))
        else:
            src.append(slice(0, w.side + s))
            dst.append(slice(-s, w.side))
    out[tuple(dst)] = arr[tuple(src)]
    return out.reshape(-1)


@dataclass
class DifferenceResult:
    """Difference of a window-truncated sequence plus its validity margin.

    Points within ``margin`` layers of the affected boundary used the
    zero extension and are flagged in ``valid_mask``.
    """

    sequence: LatticeSequence
    margin: int
    valid_mask: np.ndarray = field(repr=False, default=None)


def forward_difference(f: LatticeSequence, alpha: MultiIndex) -> DifferenceResult:
    """Iterated forward difference; upper-boundary margin of |alpha| layers."""
    if alpha.n != f.window.n:
        raise DimensionMismatchError("multi-index dimension mismatch")
    vals = f.values
    w = f.window
    for j, a in enumerate(alpha):
        e = np.zeros(w.n, dtype=int)
        e[j] = 1
        g = LatticeSequence(w, vals)
        for _ in range(a):
            vals = _shift_values(g, e) - g.values
            g = LatticeSequence(w, vals)
    m = alpha.order
    pts = w.points
    valid = np.all(pts + np.array(tuple(alpha)) <= w.N, axis=1)
    return DifferenceResult(LatticeSequence(w, vals), m, valid)


def backward_difference(f: LatticeSequence, alpha: MultiIndex) -> DifferenceResult:
    """Iterated backward difference; lower-boundary margin of |alpha| layers."""
    if alpha.n != f.window.n:
        raise DimensionMismatchError("multi-index dimension mismatch")
    vals = f.values
    w = f.window
    for j, a in enumerate(alpha):
        e = np.zeros(w.n, dtype=int)
        e[j] = 1
        g = LatticeSequence(w, vals)
        for _ in range(a):
            vals = g.values - _shift_values(g, -e)
            g = LatticeSequence(w, vals)
    pts = w.points
    valid = np.all(pts - np.array(tuple(alpha)) >= -w.N, axis=1)
    return DifferenceResult(LatticeSequence(w, vals), alpha.order, valid)


def forward_difference_closed_form(f: LatticeSequence, alpha: MultiIndex) -> DifferenceResult:
    """Same operator through the alternating binomial sum over beta <= alpha."""
    if alpha.n != f.window.n:
        raise DimensionMismatchError("multi-index dimension mismatch")
    w = f.window
    acc = np.zeros(w.size, dtype=complex)
    for beta in multiindices_leq(alpha):
        sign = (-1) ** (alpha.order - beta.order)
        acc += sign * binomial_multi(alpha, beta) * _shift_values(f, tuple(beta))
    pts = w.points
    valid = np.all(pts + np.array(tuple(alpha)) <= w.N, axis=1)
    return DifferenceResult(LatticeSequence(w, acc), alpha.order, valid)


# -- sequence file format ----------------------------------------------------

def write_sequence_csv(path, f: LatticeSequence) -> None:
    """CSV with header k1..kn,re,im, one row per window point, lexicographic."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"k{j + 1}" for j in range(f.window.n)] + ["re", "im"])
        for k, v in zip(f.window.points, f.values):
            writer.writerow([*map(int, k), repr(float(v.real)), repr(float(v.imag))])


def read_sequence_csv(path, window: LatticeWindow = None) -> LatticeSequence:
    """Read a sequence CSV; rows may arrive in any order.

    Without an explicit window, the smallest window covering all listed
    points is used (unlisted points are zero).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = len(header) - 2
        if n < 1 or header[-2:] != ["re", "im"]:
            raise ValueError(f"bad sequence header: {header}")
        for row in reader:
            if not row:
                continue
            k = tuple(int(c) for c in row[:n])
            rows.append((k, complex(float(row[n]), float(row[n + 1]))))
    if window is None:
        N = max(1, max((max(abs(c) for c in k) for k, _ in rows), default=1))
        window = LatticeWindow(n, N)
    elif window.n != n:
        raise DimensionMismatchError(f"file dimension {n} != window dimension {window.n}")
    f = LatticeSequence.zeros(window)
    for k, v in rows:
        f.values[window.index_of(k)] = v
    return f
