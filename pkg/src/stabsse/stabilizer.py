"""Stabilizer states with a norm counter, driven by CX gates and Pauli projectors.

The tableau holds ``n`` generators as parallel lists of X masks, Z masks and
signs (see :mod:`stabsse.pauli`).  ``halving`` counts how many projections
shrank the norm by ``sqrt(2)``, so the tracked (unnormalized) vector is
``2**(-halving/2) |psi>``.

All mutating operations work in place; use :meth:`StabilizerState.copy`
to branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapabilityError
from .pauli import PauliString, parity

MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class MatrixElement:
    """Exact value ``2**(-exponent/2)``, or zero when ``exponent`` is None."""

    exponent: int | None

    @classmethod
    def zero(cls) -> MatrixElement:
        return cls(None)

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    @property
    def value(self) -> float:
        if self.exponent is None:
            return 0.0
        return pow_sqrt_half(self.exponent)

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        if self.exponent is None:
            return "MatrixElement(0)"
        return f"MatrixElement(2^(-{self.exponent}/2))"


def pow_sqrt_half(k: int) -> float:
    """``2**(-k/2)`` for any integer ``k``, exact to the last bit for even k."""
    value = math.ldexp(1.0, -(k // 2))
    if k & 1:
        value *= math.sqrt(0.5)
    return value


def _basis_bits(sigma: Sequence[int]) -> int:
    bits = 0
    for i, s in enumerate(sigma):
        if s == -1:
            bits |= 1 << i
        elif s != 1:
            raise ValueError(f"basis-state entries must be +1 or -1, got {s!r} at {i}")
    return bits


class StabilizerState:
    __slots__ = ("n_qubits", "xs", "zs", "signs", "halving", "is_zero")

    def __init__(self, n_qubits, xs, zs, signs, halving=0, is_zero=False):
        self.n_qubits = n_qubits
        self.xs = list(xs)
        self.zs = list(zs)
        self.signs = list(signs)
        self.halving = halving
        self.is_zero = is_zero

    @classmethod
    def from_basis_state(cls, sigma: Sequence[int]) -> StabilizerState:
        """Product state ``|sigma_0 ... sigma_{n-1}>`` stabilized by ``sigma_m Z_m``."""
        n = len(sigma)
        if n < 1:
            raise ValueError("need at least one qubit")
        return cls.from_bits(n, _basis_bits(sigma))

    @classmethod
    def from_bits(cls, n_qubits: int, bits: int) -> StabilizerState:
        """Basis state where bit ``m`` set means ``sigma_m = -1``."""
        return cls(
            n_qubits,
            [0] * n_qubits,
            [1 << m for m in range(n_qubits)],
            [-1 if (bits >> m) & 1 else 1 for m in range(n_qubits)],
        )

    @classmethod
    def from_generators(cls, generators: Sequence[PauliString], halving: int = 0) -> StabilizerState:
        n = generators[0].n_qubits
        if len(generators) != n:
            raise ValueError(f"need exactly {n} generators, got {len(generators)}")
        return cls(n, [g.x for g in generators], [g.z for g in generators],
                   [g.sign for g in generators], halving)

    def copy(self) -> StabilizerState:
        return StabilizerState(self.n_qubits, self.xs, self.zs, self.signs,
                               self.halving, self.is_zero)

    @property
    def generators(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, x, z, s)
                for x, z, s in zip(self.xs, self.zs, self.signs)]

    def __repr__(self) -> str:
        gens = ", ".join(str(g) for g in self.generators)
        tag = " zero" if self.is_zero else ""
        return f"StabilizerState(<{gens}>, F={self.halving}{tag})"

    # -- gates ---------------------------------------------------------------

    def apply_cx(self, control: int, target: int) -> None:
        n = self.n_qubits
        if control == target or not (0 <= control < n and 0 <= target < n):
            raise ValueError(f"invalid CX({control}, {target}) on {n} qubits")
        if self.is_zero:
            return
        cbit, tbit = 1 << control, 1 << target
        xs, zs = self.xs, self.zs
        for m in range(n):
            if xs[m] & cbit:
                xs[m] ^= tbit
            if zs[m] & tbit:
                zs[m] ^= cbit

    def apply_pauli_projector(self, g: PauliString) -> None:
        """Apply ``(1 + g)/2`` for a sign +1 string ``g`` that squares to one."""
        if g.sign != 1 or not g.squares_to_identity:
            raise ValueError(f"projector string must be +1 and square to identity, got {g}")
        if g.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        self._project(g.x, g.z)

    def _project(self, gx: int, gz: int) -> None:
        if self.is_zero:
            return
        xs, zs, signs = self.xs, self.zs, self.signs
        first = -1
        for m in range(self.n_qubits):
            if parity((gz & xs[m]) ^ (gx & zs[m])):
                if first < 0:
                    first = m
                    continue
                # G_m <- G_first * G_m
                signs[m] *= signs[first] * (-1 if parity(zs[first] & xs[m]) else 1)
                xs[m] ^= xs[first]
                zs[m] ^= zs[first]
        if first >= 0:
            xs[first], zs[first], signs[first] = gx, gz, 1
            self.halving += 1
            return
        # g commutes with the whole group, so +g or -g is a member
        if _group_sign(self, gx, gz) < 0:
            self.is_zero = True

    # -- overlaps ------------------------------------------------------------

    def overlap_with_basis(self, sigma: Sequence[int]) -> MatrixElement:
        """``<sigma| state>`` as an exact power of ``2**(-1/2)``."""
        if len(sigma) != self.n_qubits:
            raise ValueError("basis state has the wrong number of sites")
        return self.overlap_with_bits(_basis_bits(sigma))

    def overlap_with_bits(self, bits: int) -> MatrixElement:
        if self.is_zero:
            return MatrixElement.zero()
        rank, pure_z = _x_block_reduce(self)
        for z, s in pure_z:
            if s != (-1 if parity(z & bits) else 1):
                return MatrixElement.zero()
        return MatrixElement(self.halving + rank)

    def to_dense(self) -> np.ndarray:
        """Amplitudes of ``2**(-F/2) |psi>`` in the Z basis.

        Qubit 0 is the most significant bit of the amplitude index
        (``np.kron`` ordering).  The global phase makes the first nonzero
        amplitude positive.
        """
        n = self.n_qubits
        if n > MAX_DENSE_QUBITS:
            raise CapabilityError(f"to_dense supports at most {MAX_DENSE_QUBITS} qubits")
        dim = 1 << n
        if self.is_zero:
            return np.zeros(dim)
        # start from a basis state with nonzero overlap, then project onto |psi>
        vec = np.zeros(dim)
        vec[_dense_index(_supported_bits(self), n)] = 1.0
        idx = np.arange(dim)
        for x, z, s in zip(self.xs, self.zs, self.signs):
            xr, zr = _dense_index(x, n), _dense_index(z, n)
            phase = np.where(np.bitwise_count(idx & zr) & 1, -1.0, 1.0)
            gvec = np.empty(dim)
            gvec[idx ^ xr] = s * phase * vec
            vec = 0.5 * (vec + gvec)
        vec /= np.linalg.norm(vec)
        lead = vec[np.flatnonzero(np.abs(vec) > 1e-12)[0]]
        return np.sign(lead) * vec * pow_sqrt_half(self.halving)


def from_basis_state(sigma: Sequence[int]) -> StabilizerState:
    return StabilizerState.from_basis_state(sigma)


def inner_product(a: StabilizerState, b: StabilizerState) -> MatrixElement:
    """Magnitude of ``<a|b>`` including both norm counters.

    For states reached from basis states through CX and X-/Z-type projectors
    both vectors are entrywise non-negative, so this is the overlap itself.
    The value is zero when some Pauli appears as ``+P`` in one group and
    ``-P`` in the other; otherwise it is ``2**(-(F_a + F_b + n - d)/2)`` with
    ``d`` the dimension of the shared (unsigned) subgroup.
    """
    n = a.n_qubits
    if b.n_qubits != n:
        raise ValueError("qubit count mismatch")
    if a.is_zero or b.is_zero:
        return MatrixElement.zero()
    pivots = _full_echelon([(x | (z << n), s) for x, z, s in zip(b.xs, b.zs, b.signs)], n)
    avecs = [x | (z << n) for x, z in zip(a.xs, a.zs)]
    residual = []
    for m, v in enumerate(avecs):
        for bit, pv, _ in pivots:
            if v & bit:
                v ^= pv
        residual.append([v, 1 << m])
    kernel = []
    rows = residual
    while rows:
        v, combo = rows.pop()
        if v == 0:
            kernel.append(combo)
            continue
        low = v & -v
        for row in rows:
            if row[0] & low:
                row[0] ^= v
                row[1] ^= combo
    mask = (1 << n) - 1
    for combo in kernel:
        acc_v, acc_s = 0, 1
        for m in range(n):
            if (combo >> m) & 1:
                acc_v, acc_s = _mul(acc_v, acc_s, avecs[m], a.signs[m], n, mask)
        for bit, pv, ps in pivots:
            if acc_v & bit:
                acc_v, acc_s = _mul(acc_v, acc_s, pv, ps, n, mask)
        if acc_s < 0:
            return MatrixElement.zero()
    return MatrixElement(a.halving + b.halving + n - len(kernel))


# -- GF(2) helpers on combined vectors v = x | (z << n) ------------------------


def _mul(va, sa, vb, sb, n, mask):
    s = sa * sb
    if parity((va >> n) & vb & mask):
        s = -s
    return va ^ vb, s


def _full_echelon(rows, n):
    """Reduced row echelon form of commuting signed rows.

    Returns ``(pivot_bit, v, sign)`` triples; every pivot bit is clear in all
    other returned rows.
    """
    mask = (1 << n) - 1
    rows = [list(r) for r in rows]
    pivots = []
    used = [False] * len(rows)
    for col in range(2 * n):
        bit = 1 << col
        piv = next((r for r in range(len(rows)) if not used[r] and rows[r][0] & bit), None)
        if piv is None:
            continue
        used[piv] = True
        pv, ps = rows[piv]
        for r in range(len(rows)):
            if r != piv and rows[r][0] & bit:
                rows[r][0], rows[r][1] = _mul(pv, ps, rows[r][0], rows[r][1], n, mask)
        pivots.append((bit, piv))
    return [(bit, rows[p][0], rows[p][1]) for bit, p in pivots]


def _group_sign(state: StabilizerState, gx: int, gz: int) -> int:
    """Sign ``s`` such that ``s*g`` is in the group (g must commute with it)."""
    n = state.n_qubits
    mask = (1 << n) - 1
    pivots = _full_echelon(
        [(x | (z << n), s) for x, z, s in zip(state.xs, state.zs, state.signs)], n)
    acc_v, acc_s = gx | (gz << n), 1
    for bit, pv, ps in pivots:
        if acc_v & bit:
            acc_v, acc_s = _mul(acc_v, acc_s, pv, ps, n, mask)
    if acc_v:
        raise AssertionError("operator commutes with the group but is not a member")
    return acc_s


def _x_block_reduce(state: StabilizerState) -> tuple[int, list[tuple[int, int]]]:
    """Row-reduce the X block; return its rank and the pure-Z rows ``(z, sign)``.

    Pivot columns run left to right; the pivot row is the lowest-index
    generator not yet used that has a 1 in that column.
    """
    n = state.n_qubits
    xs, zs, signs = list(state.xs), list(state.zs), list(state.signs)
    used = [False] * n
    rank = 0
    for col in range(n):
        bit = 1 << col
        piv = next((m for m in range(n) if not used[m] and xs[m] & bit), None)
        if piv is None:
            continue
        used[piv] = True
        rank += 1
        px, pz, ps = xs[piv], zs[piv], signs[piv]
        for m in range(n):
            if m != piv and xs[m] & bit:
                signs[m] *= ps * (-1 if parity(pz & xs[m]) else 1)
                xs[m] ^= px
                zs[m] ^= pz
    pure_z = [(zs[m], signs[m]) for m in range(n) if not used[m]]
    return rank, pure_z


def _supported_bits(state: StabilizerState) -> int:
    """A basis state with nonzero overlap: solve the pure-Z sign constraints."""
    _, pure_z = _x_block_reduce(state)
    rows = [[z, 1 if s < 0 else 0] for z, s in pure_z]
    bits = 0
    pivots = []
    for r in range(len(rows)):
        z, rhs = rows[r]
        for pbit, pz, prhs in pivots:
            if z & pbit:
                z ^= pz
                rhs ^= prhs
        if z == 0:
            continue
        pivots.append((z & -z, z, rhs))
    # back-substitute, lowest pivot bit determined by the others (free bits 0)
    for pbit, pz, prhs in reversed(pivots):
        if parity(pz & bits & ~pbit) != prhs:
            bits |= pbit
    return bits


def _dense_index(mask: int, n: int) -> int:
    out = 0
    for i in range(n):
        if (mask >> i) & 1:
            out |= 1 << (n - 1 - i)
    return out
