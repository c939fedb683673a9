"""Operator-term catalogs for Hamiltonians ``H = -sum_k c_k T_k``.

Each term ``T_k`` is either a CX gate or a projector ``(1 + g)/2`` onto the
+1 eigenspace of a real Pauli string ``g``.  Projector strings are restricted
to pure-X or pure-Z type so every term is an entrywise non-negative matrix in
the Z basis.  Sites are 0-based and boundaries are periodic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import accumulate
from typing import Union

import numpy as np

from .errors import ModelError
from .pauli import PauliString
from .stabilizer import StabilizerState


@dataclass(frozen=True)
class CX:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target or min(self.control, self.target) < 0:
            raise ModelError(f"bad CX sites ({self.control}, {self.target})")

    def apply(self, state: StabilizerState) -> None:
        state.apply_cx(self.control, self.target)

    def sites(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class Projector:
    """``(1 + pauli)/2``."""

    pauli: PauliString

    def __post_init__(self):
        g = self.pauli
        if g.sign != 1:
            raise ModelError(f"projector string must carry sign +1, got {g}")
        if g.x and g.z:
            raise ModelError(f"mixed X/Z projector strings are not sign-free: {g}")
        if not (g.x or g.z):
            raise ModelError("projector string must not be the identity")

    def apply(self, state: StabilizerState) -> None:
        state.apply_pauli_projector(self.pauli)

    def sites(self) -> tuple[int, ...]:
        mask = self.pauli.x | self.pauli.z
        return tuple(i for i in range(self.pauli.n_qubits) if (mask >> i) & 1)


Operator = Union[CX, Projector]


@dataclass(frozen=True)
class OperatorTerm:
    op: Operator
    coupling: float
    label: str = ""

    def __post_init__(self):
        if not self.coupling >= 0.0:
            raise ModelError(f"coupling must be non-negative, got {self.coupling}")


# kernel encoding of a term
KIND_CX = 0
KIND_PROJECTOR = 1


@dataclass(frozen=True)
class HamiltonianCatalog:
    n_qubits: int
    terms: tuple[OperatorTerm, ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.n_qubits < 1:
            raise ModelError("catalog needs at least one qubit")
        for term in self.terms:
            op = term.op
            if isinstance(op, Projector):
                if op.pauli.n_qubits != self.n_qubits:
                    raise ModelError(f"term {term.label!r} acts on the wrong qubit count")
            elif isinstance(op, CX):
                if not (0 <= op.control < self.n_qubits and 0 <= op.target < self.n_qubits):
                    raise ModelError(f"term {term.label!r} has a site outside the lattice")
                if op.control == op.target:
                    raise ModelError(f"term {term.label!r} has control == target")
            else:
                raise ModelError(f"unknown operator {op!r}")
        if not self.total_coupling > 0.0:
            raise ModelError("total coupling must be positive")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def total_coupling(self) -> float:
        return self.cumulative_couplings[-1] if self.terms else 0.0

    @cached_property
    def cumulative_couplings(self) -> tuple[float, ...]:
        return tuple(accumulate(t.coupling for t in self.terms))

    def choose_term(self, u: float) -> int:
        """Term index for a uniform draw ``u`` in [0, 1), picked with weight c_k / C."""
        cum = self.cumulative_couplings
        target = u * cum[-1]
        for k, c in enumerate(cum):
            if target < c:
                return k
        # rounding fallback: last term with positive weight
        return max(k for k, t in enumerate(self.terms) if t.coupling > 0)

    def apply_term(self, state: StabilizerState, k: int) -> None:
        self.terms[k].op.apply(state)

    @cached_property
    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(kind, a, b, cumulative)`` arrays for the compiled kernel.

        CX terms store ``(control, target)`` in ``a, b``; projectors store
        the string's X and Z masks.  Masks need ``n_qubits <= 64``.
        """
        kinds = np.empty(len(self.terms), dtype=np.uint8)
        a = np.empty(len(self.terms), dtype=np.uint64)
        b = np.empty(len(self.terms), dtype=np.uint64)
        for k, term in enumerate(self.terms):
            op = term.op
            if isinstance(op, CX):
                kinds[k], a[k], b[k] = KIND_CX, op.control, op.target
            else:
                kinds[k], a[k], b[k] = KIND_PROJECTOR, op.pauli.x, op.pauli.z
        cum = np.array(self.cumulative_couplings, dtype=np.float64)
        return kinds, a, b, cum


def _check_fields(h: float, J: float) -> None:
    if h < 0:
        raise ModelError(f"field h={h} < 0 gives negative weights")
    if J <= 0:
        raise ModelError(f"coupling J={J} must be positive")


def build_cnot_chain(n: int, h: float, J: float = 1.0) -> HamiltonianCatalog:
    """``H = -J sum_i CX(i, i+1) - h sum_i (1 + X_i)/2`` on a ring."""
    if n < 2:
        raise ModelError("CNOT chain needs at least two qubits")
    _check_fields(h, J)
    terms = []
    for i in range(n):
        terms.append(OperatorTerm(CX(i, (i + 1) % n), J, f"CX{i},{(i + 1) % n}"))
    for i in range(n):
        terms.append(OperatorTerm(Projector(PauliString.from_sites(n, x_sites=[i])), h, f"Pi{i}"))
    return HamiltonianCatalog(n, terms, name="cnot_chain")


def build_tfi_chain(n: int, h: float, J: float = 1.0) -> HamiltonianCatalog:
    """``H = -J sum_i (1 + Z_i Z_{i+1})/2 - h sum_i (1 + X_i)/2`` on a ring.

    For ``n == 2`` the ring has the double bond (0,1), (1,0).
    """
    if n < 2:
        raise ModelError("TFI chain needs at least two qubits")
    _check_fields(h, J)
    terms = []
    for i in range(n):
        j = (i + 1) % n
        g = PauliString.from_sites(n, z_sites=[i, j])
        terms.append(OperatorTerm(Projector(g), J, f"PiZZ{i},{j}"))
    for i in range(n):
        terms.append(OperatorTerm(Projector(PauliString.from_sites(n, x_sites=[i])), h, f"Pi{i}"))
    return HamiltonianCatalog(n, terms, name="tfi_chain")


def build_field_only(n: int, h: float) -> HamiltonianCatalog:
    """Free spins in a transverse field, ``H = -h sum_i (1 + X_i)/2``."""
    if n < 1:
        raise ModelError("need at least one qubit")
    if not h > 0:
        raise ModelError(f"field h={h} must be positive")
    terms = [OperatorTerm(Projector(PauliString.from_sites(n, x_sites=[i])), h, f"Pi{i}")
             for i in range(n)]
    return HamiltonianCatalog(n, terms, name="field")


def z2_edge_index(kind: str, x: int, y: int, lx: int, ly: int) -> int:
    """Qubit of an edge: horizontal edges first, each block row-major.

    Horizontal edge ``(x, y)`` joins vertex ``(x, y)`` to ``(x+1, y)``;
    vertical edge ``(x, y)`` joins ``(x, y)`` to ``(x, y+1)``.
    """
    x %= lx
    y %= ly
    base = 0 if kind == "h" else lx * ly
    return base + y * lx + x


def build_z2_plaquette_model(lx: int, ly: int, j_star: float = 1.0,
                             j_plaq: float = 1.0) -> HamiltonianCatalog:
    """Star ``(1 + XXXX)/2`` and plaquette ``(1 + ZZZZ)/2`` projectors on a torus."""
    if lx < 2 or ly < 2:
        raise ValueError("lattice must be at least 2x2")
    if not (j_star > 0 and j_plaq > 0):
        raise ModelError("star and plaquette couplings must be positive")
    n = 2 * lx * ly
    terms = []
    for y in range(ly):
        for x in range(lx):
            edges = [z2_edge_index("h", x, y, lx, ly), z2_edge_index("h", x - 1, y, lx, ly),
                     z2_edge_index("v", x, y, lx, ly), z2_edge_index("v", x, y - 1, lx, ly)]
            g = PauliString.from_sites(n, x_sites=edges)
            terms.append(OperatorTerm(Projector(g), j_star, f"star{x},{y}"))
    for y in range(ly):
        for x in range(lx):
            edges = [z2_edge_index("h", x, y, lx, ly), z2_edge_index("h", x, y + 1, lx, ly),
                     z2_edge_index("v", x, y, lx, ly), z2_edge_index("v", x + 1, y, lx, ly)]
            g = PauliString.from_sites(n, z_sites=edges)
            terms.append(OperatorTerm(Projector(g), j_plaq, f"plaq{x},{y}"))
    return HamiltonianCatalog(n, terms, name="z2_plaquette")
