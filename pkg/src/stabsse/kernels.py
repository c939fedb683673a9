"""Backend selection for the hot kernels.

The compiled extension ``stabsse._core`` is used when it imports; otherwise
(or with ``STABSSE_BACKEND=python``) the pure-Python :mod:`stabsse._pycore`
runs the same algorithm with the same random stream.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pycore
from .engine import Configuration, as_bitgen
from .models import HamiltonianCatalog
from .stabilizer import MatrixElement

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

COMPILED_MAX_QUBITS = 64

if _core is not None and os.environ.get("STABSSE_BACKEND", "").lower() != "python":
    DEFAULT_BACKEND = "compiled"
else:
    DEFAULT_BACKEND = "python"


def available_backends() -> list[str]:
    return ["compiled", "python"] if _core is not None else ["python"]


def select_backend(catalog: HamiltonianCatalog | None = None, backend: str | None = None) -> str:
    name = backend or DEFAULT_BACKEND
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled":
        if _core is None:
            if backend is not None:
                raise ImportError("compiled backend requested but stabsse._core is not built")
            name = "python"
        elif catalog is not None and catalog.n_qubits > COMPILED_MAX_QUBITS:
            name = "python"
    return name


def run_cycles(config: Configuration, catalog: HamiltonianCatalog, beta: float,
               n_cycles: int, rng, n_trace: np.ndarray | None = None, flip: bool = False,
               backend: str | None = None) -> tuple[int, int]:
    """Advance ``config`` in place by ``n_cycles`` Monte Carlo cycles.

    Returns ``(state_accepts, operator_accepts)``; ``n_trace[c]`` receives the
    operator count after cycle ``c``.
    """
    if config.n_qubits != catalog.n_qubits:
        raise ValueError("configuration and catalog disagree on the qubit count")
    if n_trace is not None and len(n_trace) < n_cycles:
        raise ValueError("n_trace is shorter than n_cycles")
    if config.weight.is_zero:
        raise ValueError("configuration has zero weight")
    bitgen = as_bitgen(rng)
    if n_cycles <= 0:
        return 0, 0
    if select_backend(catalog, backend) == "python":
        return _pycore.run_cycles(config, catalog, beta, n_cycles, bitgen, n_trace, flip)

    kinds, a, b, cum = catalog.kernel_arrays
    if n_trace is None:
        trace = np.empty(0, dtype=np.int64)
    else:
        trace = np.ascontiguousarray(n_trace, dtype=np.int64)
    if config.ops.dtype != np.int32 or not config.ops.flags.c_contiguous:
        config.ops = np.ascontiguousarray(config.ops, dtype=np.int32)
    bits, k, n, s_acc, o_acc = _core.run_cycles(
        config.n_qubits, config.bits, config.weight.exponent, config.n, config.ops,
        kinds, a, b, cum, beta, n_cycles, bitgen, trace, flip)
    config.bits, config.weight, config.n = bits, MatrixElement(k), n
    if n_trace is not None and trace is not n_trace:
        n_trace[:n_cycles] = trace[:n_cycles]
    return s_acc, o_acc


def jacobi_eigenvalues(a: np.ndarray, tol: float, max_sweeps: int = 100,
                       want_vectors: bool = False, backend: str | None = None):
    """Dispatch to the compiled or Python cyclic Jacobi; ``a`` is overwritten."""
    if select_backend(None, backend) == "compiled":
        return _core.jacobi_eigenvalues(a, tol, max_sweeps, want_vectors)
    return _pycore.jacobi_eigenvalues(a, tol, max_sweeps, want_vectors)
