"""Signed real Pauli strings in X-then-Z normal order.

A string on ``n`` qubits is stored as two integer bit masks; bit ``i`` of
``x`` (``z``) is the exponent of ``X_i`` (``Z_i``).  The represented operator
is ``sign * prod_i X_i**x_i Z_i**z_i``.  Products of such strings stay in this
form (no factors of ``i``), which is all the engine needs: the only gates it
applies are CX and projectors ``(1 + g)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


def parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise ValueError("mask has bits outside the qubit range")

    @classmethod
    def from_sites(
        cls,
        n_qubits: int,
        x_sites: Iterable[int] = (),
        z_sites: Iterable[int] = (),
        sign: int = 1,
    ) -> PauliString:
        x = z = 0
        for i in x_sites:
            _check_site(i, n_qubits)
            x ^= 1 << i
        for i in z_sites:
            _check_site(i, n_qubits)
            z ^= 1 << i
        return cls(n_qubits, x, z, sign)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse e.g. ``"+XIZ"`` or ``"-ZZ"``; qubit 0 is the leftmost letter.

        Only ``I``, ``X`` and ``Z`` are accepted per site; a site carrying both
        factors is written with :meth:`from_sites`.
        """
        sign = 1
        if label[:1] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        x = z = 0
        for i, ch in enumerate(label.upper()):
            if ch == "X":
                x |= 1 << i
            elif ch == "Z":
                z |= 1 << i
            elif ch != "I":
                raise ValueError(f"unsupported Pauli letter {ch!r}")
        return cls(len(label), x, z, sign)

    def x_bits(self) -> list[int]:
        return [(self.x >> i) & 1 for i in range(self.n_qubits)]

    def z_bits(self) -> list[int]:
        return [(self.z >> i) & 1 for i in range(self.n_qubits)]

    @property
    def squares_to_identity(self) -> bool:
        return parity(self.x & self.z) == 0

    def commutes_with(self, other: PauliString) -> bool:
        return parity((self.x & other.z) ^ (self.z & other.x)) == 0

    def __neg__(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, -self.sign)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __str__(self) -> str:
        letters = []
        for i in range(self.n_qubits):
            xi, zi = (self.x >> i) & 1, (self.z >> i) & 1
            letters.append({(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "(XZ)"}[xi, zi])
        return ("+" if self.sign > 0 else "-") + "".join(letters)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Return the normal-ordered product ``a @ b``.

    Moving every ``X`` of ``b`` left past the ``Z`` of ``a`` on the same site
    costs a factor ``-1``; the sign picks up ``(-1)**(a.z . b.x)``.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit count mismatch")
    sign = a.sign * b.sign * (-1 if parity(a.z & b.x) else 1)
    return PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z, sign)


def _check_site(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise ValueError(f"site {i} outside [0, {n})")
