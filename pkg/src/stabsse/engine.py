"""Stochastic series expansion over (basis state, operator string) configurations.

A configuration is a basis state ``|s>`` plus a length-``L`` string of term
indices (``-1`` is the identity).  Its weight is

    beta**n (L - n)! / L! * prod_k c_k * <s| T_{i_0} T_{i_1} ... T_{i_{L-1}} |s>

where slot ``L-1`` acts first on the ket.  The matrix element is evaluated
exactly with the stabilizer tableau.

Random stream layout (shared by every backend, so a seed fixes the chain):

* state update: ``ceil(N/64)`` raw 64-bit words whose low bits give the
  proposed basis state (or one double picking the flipped site when
  single-site flips are enabled), then one double for acceptance;
* operator update at an identity slot: one double choosing the term, one
  double for acceptance; at an occupied slot: one double for acceptance.

Doubles are ``(raw >> 11) * 2**-53``.  A proposal is accepted when the
double is below the Metropolis ratio.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EstimationError
from .models import HamiltonianCatalog
from .stabilizer import MatrixElement, StabilizerState, _basis_bits, pow_sqrt_half

log = logging.getLogger(__name__)

IDENTITY = -1
_INV_2_53 = 1.0 / 9007199254740992.0


def as_bitgen(rng) -> np.random.BitGenerator:
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator
    if isinstance(rng, np.random.BitGenerator):
        return rng
    raise TypeError(f"expected a numpy Generator or BitGenerator, got {type(rng).__name__}")


def draw_double(bitgen: np.random.BitGenerator) -> float:
    return (int(bitgen.random_raw()) >> 11) * _INV_2_53


def draw_bits(bitgen: np.random.BitGenerator, n: int) -> int:
    bits = 0
    for w in range((n + 63) // 64):
        bits |= int(bitgen.random_raw()) << (64 * w)
    return bits & ((1 << n) - 1)


@dataclass
class Configuration:
    """Markov-chain element; ``weight`` and ``n`` are caches kept coherent by the updates."""

    n_qubits: int
    bits: int
    ops: np.ndarray
    weight: MatrixElement
    n: int

    @classmethod
    def initial(cls, catalog: HamiltonianCatalog, L: int,
                sigma: Sequence[int] | None = None) -> Configuration:
        n_qubits = catalog.n_qubits
        bits = 0 if sigma is None else _basis_bits(sigma)
        if sigma is not None and len(sigma) != n_qubits:
            raise ValueError("basis state has the wrong number of sites")
        ops = np.full(L, IDENTITY, dtype=np.int32)
        return cls(n_qubits, bits, ops, MatrixElement(0), 0)

    @property
    def L(self) -> int:
        return len(self.ops)

    @property
    def sigma(self) -> tuple[int, ...]:
        return tuple(-1 if (self.bits >> i) & 1 else 1 for i in range(self.n_qubits))

    def copy(self) -> Configuration:
        return Configuration(self.n_qubits, self.bits, self.ops.copy(), self.weight, self.n)

    def check(self, catalog: HamiltonianCatalog) -> None:
        """Raise if the cached weight or operator count is stale."""
        fresh = evaluate_bits(catalog, self.bits, self.ops)
        if fresh != self.weight:
            raise AssertionError(f"cached weight {self.weight} != recomputed {fresh}")
        if self.weight.is_zero:
            raise AssertionError("configuration has zero weight")
        if self.n != int(np.count_nonzero(self.ops != IDENTITY)):
            raise AssertionError("cached operator count is stale")


def evaluate_matrix_element(catalog: HamiltonianCatalog, sigma: Sequence[int],
                            ops: Sequence[int]) -> MatrixElement:
    """``<s| T_{ops[0]} ... T_{ops[L-1]} |s>``; identity slots are ``-1``."""
    if len(sigma) != catalog.n_qubits:
        raise ValueError("basis state has the wrong number of sites")
    return evaluate_bits(catalog, _basis_bits(sigma), ops)


def evaluate_bits(catalog: HamiltonianCatalog, bits: int, ops: Sequence[int]) -> MatrixElement:
    state = StabilizerState.from_bits(catalog.n_qubits, bits)
    for k in reversed(ops):
        if k == IDENTITY:
            continue
        catalog.apply_term(state, int(k))
        if state.is_zero:
            return MatrixElement.zero()
    return state.overlap_with_bits(bits)


def insertion_ratio(beta: float, total: float, L: int, n: int,
                    w_op: MatrixElement, w_id: MatrixElement) -> float:
    """Metropolis ratio for identity -> term (term drawn with probability c_k/C)."""
    if w_op.is_zero:
        return 0.0
    return beta * total / (L - n) * pow_sqrt_half(w_op.exponent - w_id.exponent)


def removal_ratio(beta: float, total: float, L: int, n: int,
                  w_id: MatrixElement, w_op: MatrixElement) -> float:
    """Metropolis ratio for term -> identity; ``n`` counts the term being removed."""
    if w_id.is_zero:
        return 0.0
    return (L - n + 1) / (beta * total) * pow_sqrt_half(w_id.exponent - w_op.exponent)


def state_ratio(w_new: MatrixElement, w_old: MatrixElement) -> float:
    if w_new.is_zero:
        return 0.0
    return pow_sqrt_half(w_new.exponent - w_old.exponent)


def propose_bits(bitgen, n_qubits: int, bits: int, flip: bool) -> int:
    if flip:
        return bits ^ (1 << int(draw_double(bitgen) * n_qubits))
    return draw_bits(bitgen, n_qubits)


def propose_state_update(config: Configuration, catalog: HamiltonianCatalog, rng,
                         flip: bool = False) -> bool:
    """Metropolis move to a new basis state, string unchanged."""
    bitgen = as_bitgen(rng)
    new_bits = propose_bits(bitgen, config.n_qubits, config.bits, flip)
    w_new = evaluate_bits(catalog, new_bits, config.ops)
    if draw_double(bitgen) < state_ratio(w_new, config.weight):
        config.bits, config.weight = new_bits, w_new
        return True
    return False


def propose_operator_update(config: Configuration, catalog: HamiltonianCatalog, p: int,
                            beta: float, rng) -> bool:
    """Insert a term at identity slot ``p`` or remove the term sitting there."""
    L = config.L
    if not 0 <= p < L:
        raise ValueError(f"slot {p} outside [0, {L})")
    bitgen = as_bitgen(rng)
    total = catalog.total_coupling
    ops = config.ops
    if ops[p] == IDENTITY:
        k = catalog.choose_term(draw_double(bitgen))
        ops[p] = k
        w_op = evaluate_bits(catalog, config.bits, ops)
        ratio = insertion_ratio(beta, total, L, config.n, w_op, config.weight)
        if draw_double(bitgen) < ratio:
            config.weight = w_op
            config.n += 1
            return True
        ops[p] = IDENTITY
        return False
    k = int(ops[p])
    ops[p] = IDENTITY
    w_id = evaluate_bits(catalog, config.bits, ops)
    ratio = removal_ratio(beta, total, L, config.n, w_id, config.weight)
    if draw_double(bitgen) < ratio:
        config.weight = w_id
        config.n -= 1
        return True
    ops[p] = k
    return False


def mc_cycle(config: Configuration, catalog: HamiltonianCatalog, beta: float, rng,
             flip: bool = False, debug: bool = False) -> tuple[bool, int]:
    """One state update followed by an operator update at every slot in order.

    Reference implementation: each proposal re-evaluates the full string.
    Returns ``(state_accepted, operator_accepts)``.
    """
    bitgen = as_bitgen(rng)
    state_acc = propose_state_update(config, catalog, bitgen, flip)
    op_acc = 0
    for p in range(config.L):
        op_acc += propose_operator_update(config, catalog, p, beta, bitgen)
    if debug:
        config.check(catalog)
    return state_acc, op_acc


# -- measurement ---------------------------------------------------------------


def estimate_error(samples, bin_count: int = 50) -> float:
    """Standard error of the mean from ``bin_count`` equal bins.

    Trailing samples that do not fill a whole bin are dropped.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if bin_count < 2:
        raise EstimationError("need at least two bins for a variance")
    if samples.size < 2 * bin_count:
        raise EstimationError(f"{samples.size} samples cannot fill {bin_count} bins of size >= 2")
    size = samples.size // bin_count
    means = samples[: size * bin_count].reshape(bin_count, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(bin_count))


def temperature_grid(t_start: float, t_end: float, t_step: float) -> list[float]:
    """Descending grid ``t_start, t_start - t_step, ...`` down to ``t_end``."""
    if not (t_start >= t_end > 0):
        raise ValueError("need t_start >= t_end > 0")
    if not t_step > 0:
        raise ValueError("t_step must be positive")
    count = int(math.floor((t_start - t_end) / t_step + 1e-9)) + 1
    return [round(t_start - i * t_step, 12) for i in range(count)]


@dataclass
class TemperatureRecord:
    T: float
    beta: float
    mean_n: float
    energy: float
    energy_stderr: float
    state_accept_rate: float
    op_accept_rate: float
    max_n: int = 0


@dataclass
class RunResult:
    L: int
    seed: int | None
    records: list[TemperatureRecord] = field(default_factory=list)
    backend: str = ""

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])


def run_schedule(catalog: HamiltonianCatalog, L: int, temperatures: Sequence[float],
                 cycles_therm: int, cycles_meas: int, seed: int | None = None, *,
                 bin_count: int = 50, flip: bool = False, backend: str | None = None,
                 config: Configuration | None = None) -> RunResult:
    """Anneal one chain through ``temperatures`` (in the given order).

    The chain starts from ``|+1 ... +1>`` with an all-identity string and is
    carried from each temperature to the next.
    """
    from .kernels import run_cycles, select_backend

    if L < 1:
        raise ValueError("expansion cutoff L must be at least 1")
    if any(not T > 0 for T in temperatures):
        raise ValueError("temperatures must be positive")
    if cycles_meas < 1 or cycles_therm < 0:
        raise ValueError("cycle counts must be positive")
    name = select_backend(catalog, backend)
    rng = np.random.default_rng(seed)
    if config is None:
        config = Configuration.initial(catalog, L)
    result = RunResult(L=L, seed=seed, backend=name)
    trace = np.empty(cycles_meas, dtype=np.int64)
    for T in temperatures:
        beta = 1.0 / T
        run_cycles(config, catalog, beta, cycles_therm, rng, flip=flip, backend=name)
        s_acc, o_acc = run_cycles(config, catalog, beta, cycles_meas, rng, n_trace=trace,
                                  flip=flip, backend=name)
        mean_n = float(trace.mean())
        bins = min(bin_count, cycles_meas // 2)
        stderr = estimate_error(trace, bins) / beta if bins >= 2 else float("nan")
        max_n = int(trace.max())
        if max_n >= L:
            log.warning("T=%g: <n>=%.2f reached the cutoff L=%d; increase L", T, mean_n, L)
        result.records.append(TemperatureRecord(
            T=T, beta=beta, mean_n=mean_n, energy=-mean_n / beta, energy_stderr=stderr,
            state_accept_rate=s_acc / cycles_meas,
            op_accept_rate=o_acc / (cycles_meas * L), max_n=max_n))
    return result
