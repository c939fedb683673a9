"""Pure-Python fallback for the hot kernels in :mod:`stabsse._core`.

Same algorithm and random stream as the compiled module, so both backends
produce identical chains for a given seed.

The sweep avoids re-applying the whole string for every proposal.  With
slot ``L-1`` acting first, write the weight at slot ``p`` as
``<left_p| T_p |right_p>`` where ``right_p = T_{p+1} ... T_{L-1} |s>`` and
``left_p = T_{p-1} ... T_0 |s>`` (every term is real symmetric).  The right
states are tabulated once per cycle; the left state grows by one term per
slot; a proposal costs one term application and one stabilizer inner
product.
"""

from __future__ import annotations

import numpy as np

from .engine import (IDENTITY, Configuration, draw_double, insertion_ratio,
                     propose_bits, removal_ratio, state_ratio)
from .models import HamiltonianCatalog
from .stabilizer import StabilizerState, inner_product


def _right_chain(catalog, n_qubits, bits, ops):
    states = [None] * (len(ops) + 1)
    state = StabilizerState.from_bits(n_qubits, bits)
    states[len(ops)] = state
    for p in range(len(ops) - 1, -1, -1):
        k = ops[p]
        if k != IDENTITY:
            state = state.copy()
            catalog.apply_term(state, int(k))
        states[p] = state
    return states


def run_cycles(config: Configuration, catalog: HamiltonianCatalog, beta: float,
               n_cycles: int, bitgen, n_trace=None, flip: bool = False) -> tuple[int, int]:
    n_qubits = config.n_qubits
    ops = config.ops
    L = len(ops)
    total = catalog.total_coupling
    state_acc = op_acc = 0
    for c in range(n_cycles):
        new_bits = propose_bits(bitgen, n_qubits, config.bits, flip)
        chain = _right_chain(catalog, n_qubits, new_bits, ops)
        w_new = chain[0].overlap_with_bits(new_bits)
        if draw_double(bitgen) < state_ratio(w_new, config.weight):
            config.bits, config.weight = new_bits, w_new
            state_acc += 1
        else:
            chain = _right_chain(catalog, n_qubits, config.bits, ops)

        left = StabilizerState.from_bits(n_qubits, config.bits)
        for p in range(L):
            right = chain[p + 1]
            if ops[p] == IDENTITY:
                k = catalog.choose_term(draw_double(bitgen))
                trial = right.copy()
                catalog.apply_term(trial, k)
                w_op = inner_product(left, trial)
                if draw_double(bitgen) < insertion_ratio(beta, total, L, config.n, w_op,
                                                         config.weight):
                    ops[p] = k
                    config.n += 1
                    config.weight = w_op
                    op_acc += 1
            else:
                w_id = inner_product(left, right)
                if draw_double(bitgen) < removal_ratio(beta, total, L, config.n, w_id,
                                                       config.weight):
                    ops[p] = IDENTITY
                    config.n -= 1
                    config.weight = w_id
                    op_acc += 1
            if ops[p] != IDENTITY:
                catalog.apply_term(left, int(ops[p]))
        if n_trace is not None:
            n_trace[c] = config.n
    return state_acc, op_acc


def jacobi_eigenvalues(a: np.ndarray, tol: float, max_sweeps: int,
                       want_vectors: bool) -> tuple[np.ndarray, np.ndarray | None, int]:
    """Cyclic Jacobi on a symmetric matrix (overwritten).

    Stops once the off-diagonal Frobenius norm is at most ``tol``.
    Returns ``(diagonal, rotations or None, sweeps used)``.
    """
    d = a.shape[0]
    v = np.eye(d) if want_vectors else None
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                _rotate(a, p, q, c, s)
                if v is not None:
                    vp, vq = v[:, p].copy(), v[:, q]
                    v[:, p] = c * vp - s * vq
                    v[:, q] = s * vp + c * vq
    raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")


def _rotation(app, aqq, apq):
    diff = aqq - app
    if abs(apq) < 1e-150 * abs(diff):
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


def _rotate(a, p, q, c, s):
    # A <- J^T A J with J the (p, q) plane rotation zeroing a[p, q]
    rp, rq = a[p, :].copy(), a[q, :].copy()
    a[p, :] = c * rp - s * rq
    a[q, :] = s * rp + c * rq
    cp, cq = a[:, p].copy(), a[:, q].copy()
    a[:, p] = c * cp - s * cq
    a[:, q] = s * cp + c * cq
    a[p, q] = a[q, p] = 0.0
