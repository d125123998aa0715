"""GHZ-like meter states and the strength/angle dictionary.

A single measurement round of an N-site product observable uses an
N-qubit meter prepared in cos(theta)|GHZ+> + sin(theta)|GHZ->, where
|GHZ+-> = (|0...0> +- |1...1>)/sqrt(2).  Measuring K commuting products
jointly uses one entangled register of N*K qubits whose amplitudes are

    2**(-K/2) * alpha                    on |0...0>,
    2**(-K/2) * beta                     on every other block pattern
                                         (each round's N qubits all equal),
    0                                    elsewhere,

with alpha = cos(theta) + sqrt(2**K - 1) sin(theta) and
beta = cos(theta) - sin(theta)/sqrt(2**K - 1).  Round k occupies meter
qubits (k-1)*N + 1 ... k*N, and qubit ordering follows ``statevec``
(first qubit = most significant bit).  All meter amplitudes are real.

The angle theta in [0, pi/2] sets the measurement strength

    s_K(theta) = (2**K cos(theta)**2 - 1) / (2**K - 1),

which is 1 at theta = 0 (projective), 0 at theta = arccos(2**(-K/2))
(no measurement), and negative beyond that point; negative strengths
still describe valid measurements, and outputs flag them as outside the
variable-strength interpolation range rather than rejecting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .statevec import Ket

THETA_MAX = math.pi / 2


def parse_angle(text: str) -> float:
    """Parse an angle in radians, or in degrees with a ``deg`` suffix."""
    raw = text.strip().lower()
    try:
        if raw.endswith("deg"):
            return math.radians(float(raw[: -len("deg")]))
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"invalid angle {text!r}; use radians or e.g. '30deg'") from exc


@dataclass(frozen=True)
class MeterSpec:
    """Meter geometry: K rounds of N sites at mixing angle theta."""

    rounds: int
    n_sites: int
    theta: float

    def __post_init__(self):
        if self.rounds < 1:
            raise DomainError(f"rounds must be at least 1, got {self.rounds}")
        if self.n_sites < 1:
            raise DomainError(f"sites per round must be at least 1, got {self.n_sites}")
        if not 0.0 <= self.theta <= THETA_MAX:
            raise DomainError(f"theta must lie in [0, pi/2], got {self.theta!r}")

    @classmethod
    def from_string(cls, text: str) -> "MeterSpec":
        """Parse ``"K,N,theta"`` with theta in radians or ``<x>deg``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ParseError(f"meter spec {text!r} must be 'K,N,theta'")
        try:
            rounds = int(parts[0])
            n_sites = int(parts[1])
        except ValueError as exc:
            raise ParseError(f"meter spec {text!r} needs integer K and N") from exc
        return cls(rounds=rounds, n_sites=n_sites, theta=parse_angle(parts[2]))

    @property
    def n_qubits(self) -> int:
        return self.rounds * self.n_sites

    @property
    def strength(self) -> float:
        return strength(self.rounds, self.theta)

    @property
    def vsm_compliant(self) -> bool:
        """True when the strength is non-negative (interpolation regime)."""
        return self.strength >= -1e-12

    def __str__(self) -> str:
        return f"K={self.rounds},N={self.n_sites},theta={self.theta:.12g}"


def ghz(n_sites: int, sign: int = 1) -> Ket:
    """GHZ state (|0...0> + sign |1...1>)/sqrt(2) on ``n_sites`` qubits."""
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if n_sites < 1:
        raise DomainError(f"GHZ needs at least one qubit, got {n_sites}")
    amps = np.zeros(1 << n_sites, dtype=np.complex128)
    amps[0] = 1.0 / math.sqrt(2.0)
    amps[-1] = sign / math.sqrt(2.0)
    return Ket(amps, require_normalized=False)


def nonlocal_meter(n_sites: int, theta: float) -> Ket:
    """Single-round meter cos(theta)|GHZ+> + sin(theta)|GHZ->."""
    if not 0.0 <= theta <= THETA_MAX:
        raise DomainError(f"theta must lie in [0, pi/2], got {theta!r}")
    amps = np.zeros(1 << n_sites, dtype=np.complex128)
    amps[0] = (math.cos(theta) + math.sin(theta)) / math.sqrt(2.0)
    amps[-1] = (math.cos(theta) - math.sin(theta)) / math.sqrt(2.0)
    return Ket(amps, require_normalized=False)


def kfold_meter(spec: MeterSpec) -> Ket:
    """Entangled K-round meter register on N*K qubits.

    Support is limited to the 2**K block patterns where each round's N
    qubits agree; the all-zeros pattern carries the alpha amplitude and
    the rest share beta.
    """
    k, n, theta = spec.rounds, spec.n_sites, spec.theta
    d = 1 << k
    alpha = math.cos(theta) + math.sqrt(d - 1) * math.sin(theta)
    beta = math.cos(theta) - math.sin(theta) / math.sqrt(d - 1)
    scale = 2.0 ** (-k / 2.0)
    amps = np.zeros(1 << (n * k), dtype=np.complex128)
    block = (1 << n) - 1
    for pattern in range(d):
        index = 0
        for round_k in range(k):
            # Bit (k-1-round_k) of the pattern drives round round_k's block.
            if (pattern >> (k - 1 - round_k)) & 1:
                index |= block << ((k - 1 - round_k) * n)
        amps[index] = scale * (alpha if pattern == 0 else beta)
    return Ket(amps)


def strength(rounds: int, theta: float) -> float:
    """Measurement strength of a K-round meter at angle theta."""
    if rounds < 1:
        raise DomainError(f"rounds must be at least 1, got {rounds}")
    d = 1 << rounds
    if d == 2:
        # One round: (2 cos^2 - 1)/1 is exactly the double-angle cosine.
        return (2.0 * math.cos(theta) ** 2 - 1.0) / 1.0
    return (d * math.cos(theta) ** 2 - 1.0) / (d - 1.0)


def theta_for_strength(rounds: int, target: float) -> float:
    """Angle in [0, arccos(2**(-K/2))] realizing strength ``target``.

    Only the interpolation range [0, 1] is invertible here; negative
    targets are rejected.
    """
    if rounds < 1:
        raise DomainError(f"rounds must be at least 1, got {rounds}")
    if not 0.0 <= target <= 1.0:
        raise DomainError(f"strength must lie in [0, 1], got {target!r}")
    d = 1 << rounds
    cos_sq = (target * (d - 1.0) + 1.0) / d
    return math.acos(math.sqrt(min(cos_sq, 1.0)))
