"""Quantization of symbols on truncated l^2(Z^n).

The operator acts by (T_sigma f)(k) = integral of exp(2 pi i k.x)
sigma(k,x) fhat(x) dx; on a window x grid truncation this becomes dense
linear algebra, exact whenever the grid resolves the window (M >= 2N+1).
Composition and adjoints are finite-section constructions, so grid-backed
results carry an interior margin outside which truncation contaminates
the recovered symbol.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .core import (
    LatticeSequence,
    LatticeWindow,
    TorusGrid,
    forward_dft,
    phase_matrix,
    _dft_matrix,
)
from .errors import AliasingError, DimensionMismatchError
from .symbols import DualToroidalSymbol, GridSymbol, Symbol


def interior_margin(window: LatticeWindow) -> int:
    """Default layer count treated as truncation-contaminated: N/4, min 1."""
    return max(1, window.N // 4)


def _check_resolution(window: LatticeWindow, grid: TorusGrid):
    if window.n != grid.n:
        raise DimensionMismatchError(f"window dimension {window.n} != grid dimension {grid.n}")
    if grid.M < 2 * window.N + 1:
        raise AliasingError(
            f"grid M={grid.M} cannot resolve window N={window.N} (need M >= {2 * window.N + 1})")


@dataclass
class OperatorMatrix:
    """Dense finite section of T_sigma on a window."""

    window: LatticeWindow
    grid: TorusGrid
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        P = self.window.size
        if self.entries.shape != (P, P):
            raise DimensionMismatchError(
                f"entries shape {self.entries.shape}, window size {P}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("operator matrix carries non-finite entries")

    def matvec(self, f: LatticeSequence) -> LatticeSequence:
        return LatticeSequence(self.window, self.entries @ f.values)

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.window, self.grid, self.entries.conj().T)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)


def apply(sigma: Symbol, f: LatticeSequence, grid: TorusGrid) -> LatticeSequence:
    """Quantized action: transform, multiply by sigma(k,.), invert with phase."""
    window = f.window
    _check_resolution(window, grid)
    fhat = forward_dft(f, grid)
    S = sigma.sample(window, grid)
    B = phase_matrix(window, grid)
    out = grid.weight * ((B * S) @ fhat.values)
    return LatticeSequence(window, out)


def assemble_matrix(sigma: Symbol, window: LatticeWindow, grid: TorusGrid) -> OperatorMatrix:
    """entries(k,l) = quadrature of exp(2 pi i (k-l).x) sigma(k,x), built per row."""
    _check_resolution(window, grid)
    S = sigma.sample(window, grid)
    B = phase_matrix(window, grid)
    E = _dft_matrix(window.n, window.N, grid.M)
    A = grid.weight * ((B * S) @ E)
    return OperatorMatrix(window, grid, A)


def assemble_toroidal_matrix(tau: DualToroidalSymbol, window: LatticeWindow,
                             grid: TorusGrid) -> np.ndarray:
    """Grid-side section C(x,y) = M^-n sum_k exp(2 pi i (x-y).k) tau(x,k)."""
    _check_resolution(window, grid)
    T = tau.sample_toroidal(window, grid)  # (Q, P)
    B = phase_matrix(window, grid)         # (P, Q): exp(+2 pi i k.x)
    # columns of B.T are exp(2 pi i x.k); rows of B are exp(-...) after conj
    return grid.weight * ((B.T * T) @ B.conj())


def extract_symbol(A: OperatorMatrix, order: float = None,
                   margin: int = None) -> GridSymbol:
    """Recover the grid-backed symbol sigma(k,x) = exp(-2 pi i k.x) (A e_x)(k)."""
    window, grid = A.window, A.grid
    B = phase_matrix(window, grid)
    G = A.entries @ B  # (A e_x)(k), e_x(l) = exp(2 pi i l.x)
    values = B.conj() * G
    if margin is None:
        margin = interior_margin(window)
    return GridSymbol(window, grid, values, order=order, interior_margin=margin)


def compose(sigma: Symbol, tau: Symbol, window: LatticeWindow,
            grid: TorusGrid) -> GridSymbol:
    """Finite-section product symbol of T_sigma T_tau (orders add)."""
    A = assemble_matrix(sigma, window, grid)
    Bm = assemble_matrix(tau, window, grid)
    order = None
    if sigma.order is not None and tau.order is not None:
        order = sigma.order + tau.order
    prod = OperatorMatrix(window, grid, A.entries @ Bm.entries)
    return extract_symbol(prod, order=order)


def adjoint_symbol(sigma: Symbol, window: LatticeWindow,
                   grid: TorusGrid) -> GridSymbol:
    """Symbol of the formal adjoint via the conjugate-transposed section."""
    A = assemble_matrix(sigma, window, grid)
    return extract_symbol(A.adjoint(), order=sigma.order)


# -- matrix file format ------------------------------------------------------

_MAGIC = b"LOPM"


def write_matrix_binary(path, A: OperatorMatrix) -> None:
    """Header + row-major little-endian float64 (re, im) pairs."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4i", A.window.n, A.window.N, A.grid.n, A.grid.M))
        inter = np.empty(A.entries.size * 2, dtype="<f8")
        inter[0::2] = A.entries.real.ravel()
        inter[1::2] = A.entries.imag.ravel()
        fh.write(inter.tobytes())


def read_matrix_binary(path) -> OperatorMatrix:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not an operator-matrix file")
        n, N, gn, M = struct.unpack("<4i", fh.read(16))
        window = LatticeWindow(n, N)
        grid = TorusGrid(gn, M)
        raw = np.frombuffer(fh.read(), dtype="<f8")
        entries = (raw[0::2] + 1j * raw[1::2]).reshape(window.size, window.size)
        return OperatorMatrix(window, grid, entries)


def write_matrix_json(path, A: OperatorMatrix) -> None:
    payload = {
        "window": {"n": A.window.n, "N": A.window.N},
        "grid": {"n": A.grid.n, "M": A.grid.M},
        "entries": np.stack(
            [A.entries.real.ravel(), A.entries.imag.ravel()], axis=-1).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def read_matrix_json(path) -> OperatorMatrix:
    with open(path) as fh:
        d = json.load(fh)
    window = LatticeWindow(d["window"]["n"], d["window"]["N"])
    grid = TorusGrid(d["grid"]["n"], d["grid"]["M"])
    raw = np.asarray(d["entries"], dtype=float)
    entries = (raw[:, 0] + 1j * raw[:, 1]).reshape(window.size, window.size)
    return OperatorMatrix(window, grid, entries)
