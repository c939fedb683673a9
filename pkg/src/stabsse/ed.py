"""Exact diagonalization reference for thermal energies.

Dense matrices use ``np.kron`` ordering: qubit 0 is the leftmost factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CapabilityError, TruncationError
from .kernels import jacobi_eigenvalues
from .models import CX, HamiltonianCatalog

MAX_DENSE_QUBITS = 14
MAX_TRACE_QUBITS = 10

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.diag([1.0, -1.0])
_P0 = np.diag([1.0, 0.0])
_P1 = np.diag([0.0, 1.0])


def _kron_sites(n: int, placed: dict[int, np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [placed.get(i, _I) for i in range(n)])


def term_matrix(catalog: HamiltonianCatalog, k: int) -> np.ndarray:
    """Dense matrix of the bare term ``T_k`` (coupling not included)."""
    n = catalog.n_qubits
    op = catalog.terms[k].op
    if isinstance(op, CX):
        return (_kron_sites(n, {op.control: _P0})
                + _kron_sites(n, {op.control: _P1, op.target: _X}))
    g = op.pauli
    placed = {}
    for i in range(n):
        xi, zi = (g.x >> i) & 1, (g.z >> i) & 1
        if xi and zi:
            placed[i] = _X @ _Z
        elif xi:
            placed[i] = _X
        elif zi:
            placed[i] = _Z
    return 0.5 * (np.eye(1 << n) + g.sign * _kron_sites(n, placed))


def build_dense(catalog: HamiltonianCatalog) -> np.ndarray:
    """``H = -sum_k c_k T_k`` as a dense ``2**n x 2**n`` array."""
    n = catalog.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CapabilityError(
            f"dense Hamiltonian on {n} qubits exceeds the {MAX_DENSE_QUBITS}-qubit bound")
    h = np.zeros((1 << n, 1 << n))
    for k, term in enumerate(catalog.terms):
        if term.coupling:
            h -= term.coupling * term_matrix(catalog, k)
    return h


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None = None
    sweeps: int = 0

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


def symmetric_eigenvalues(h: np.ndarray, vectors: bool = False, rtol: float = 1e-10,
                          max_sweeps: int = 100, backend: str | None = None) -> Spectrum:
    """Full spectrum of a real symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm is below ``rtol * ||H||_F``.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.abs(h).max()) if h.size else 0.0
    if not np.allclose(h, h.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise ValueError("matrix is not symmetric")
    work = np.ascontiguousarray(0.5 * (h + h.T))
    tol = rtol * float(np.linalg.norm(work))
    diag, vecs, sweeps = jacobi_eigenvalues(work, tol, max_sweeps, vectors, backend=backend)
    order = np.argsort(diag, kind="stable")
    return Spectrum(diag[order], None if vecs is None else vecs[:, order], sweeps)


def mean_energy_full(spectrum: Spectrum | np.ndarray, beta: float) -> float:
    """Thermal average ``-d log Z / d beta`` from the spectrum."""
    e = _energies(spectrum)
    w = np.exp(-beta * (e - e.min()))
    return float(np.dot(e, w) / w.sum())


def mean_energy_truncated(spectrum: Spectrum | np.ndarray, beta: float, L: int) -> float:
    """``-d log Z_L / d beta`` for the order-``L`` truncated partition function.

    With ``S_k(x) = sum_{m<=k} x**m / m!`` this is
    ``sum_i E_i S_{L-1}(-beta E_i) / sum_i S_L(-beta E_i)``.  All terms share
    one scale factor so large ``beta * |E|`` cannot overflow; each sum is
    accumulated with ``math.fsum``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if L < 1:
        raise ValueError("L must be at least 1")
    e = _energies(spectrum)
    xs = [-beta * float(ei) for ei in e]
    lgam = [math.lgamma(k + 1) for k in range(L + 1)]
    logmax = 0.0
    for x in xs:
        if x:
            lx = math.log(abs(x))
            logmax = max(logmax, max(k * lx - lgam[k] for k in range(L + 1)))
    num, den = [], []
    for ei, x in zip(e, xs):
        terms = _scaled_series(x, L, lgam, logmax)
        den.extend(terms)
        num.extend(float(ei) * t for t in terms[:L])
    z = math.fsum(den)
    if not z > 0:
        raise TruncationError(f"truncated partition function Z_L <= 0 at beta={beta}, L={L}")
    return math.fsum(num) / z


def _scaled_series(x: float, L: int, lgam, logmax: float) -> list[float]:
    """``x**m / m! * exp(-logmax)`` for m = 0..L."""
    if x == 0.0:
        return [math.exp(-logmax)] + [0.0] * L
    lx = math.log(abs(x))
    neg = x < 0
    out = []
    for k in range(L + 1):
        t = math.exp(k * lx - lgam[k] - logmax)
        out.append(-t if neg and k & 1 else t)
    return out


def trace_powers(h: np.ndarray, L_max: int) -> np.ndarray:
    """``Tr[H**n]`` for n = 0..L_max by repeated dense multiplication."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] > 1 << MAX_TRACE_QUBITS:
        raise CapabilityError(
            f"trace moments beyond {MAX_TRACE_QUBITS} qubits: O(8^N) cost per product")
    out = np.empty(L_max + 1)
    power = np.eye(h.shape[0])
    for n in range(L_max + 1):
        out[n] = np.trace(power)
        if n < L_max:
            power = power @ h
    return out


def mean_energy_from_moments(traces, beta: float, L: int) -> float:
    """``-d log Z_L / d beta`` with ``Z_L = sum_n (-beta)**n / n! Tr[H**n]``."""
    if len(traces) < L + 1:
        raise ValueError(f"need Tr[H^n] up to n={L}")
    z = math.fsum((-beta) ** n / math.factorial(n) * traces[n] for n in range(L + 1))
    if not z > 0:
        raise TruncationError(f"truncated partition function Z_L <= 0 at beta={beta}, L={L}")
    num = math.fsum((-beta) ** (n - 1) / math.factorial(n - 1) * traces[n]
                    for n in range(1, L + 1))
    return num / z


def _energies(spectrum) -> np.ndarray:
    e = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else spectrum
    return np.asarray(e, dtype=np.float64)
