"""Pauli product observables, commutation tests, and joint eigenprojectors.

A product observable is a tensor product of X, Y, Z letters with one
letter per site; identity letters are deliberately excluded, so every
observable touches all N sites.  Two product observables commute exactly
when the number of sites where their letters differ is even.

A set of K pairwise commuting products can be measured jointly.  Its
sign vectors are K-tuples of +-1 eigenvalues, and ``joint_pvm`` builds
the projector onto each joint eigenspace.  The set is independent (no
member is a product of the others) exactly when every projector has
rank 2**(N-K); ``validate_set`` reports that diagnostic.

Sign vectors are plain ``tuple[int, ...]`` with entries +1 or -1, listed
in the observable order of the set.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CommutationError, DependenceError, DimensionError, ParseError
from .statevec import Operator

SignVector = tuple[int, ...]

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
for _m in (_X, _Y, _Z):
    _m.setflags(write=False)


class PauliLetter(enum.Enum):
    """One of the three non-identity Pauli operators."""

    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        """Read-only 2x2 matrix of this letter."""
        return {PauliLetter.X: _X, PauliLetter.Y: _Y, PauliLetter.Z: _Z}[self]

    @classmethod
    def from_char(cls, char: str) -> "PauliLetter":
        try:
            return cls(char.upper())
        except ValueError:
            raise ParseError(
                f"invalid Pauli letter {char!r}; only X, Y, Z are allowed (no identity)"
            ) from None


@dataclass(frozen=True)
class ProductObservable:
    """Tensor product of Pauli letters, one per site (site 1 first)."""

    letters: tuple[PauliLetter, ...]

    def __post_init__(self):
        if len(self.letters) == 0:
            raise ParseError("a product observable needs at least one letter")
        if not all(isinstance(l, PauliLetter) for l in self.letters):
            raise ParseError("letters must be PauliLetter values")

    @classmethod
    def from_string(cls, text: str) -> "ProductObservable":
        """Parse strings like ``"XYZ"`` (case-insensitive)."""
        stripped = text.strip()
        if not stripped:
            raise ParseError("empty observable string")
        return cls(tuple(PauliLetter.from_char(c) for c in stripped))

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    def matrix(self) -> Operator:
        """Dense 2**N x 2**N matrix, site 1 on the most significant bit."""
        mat = reduce(np.kron, (l.matrix for l in self.letters))
        return Operator(mat)

    def __str__(self) -> str:
        return "".join(l.value for l in self.letters)


def commutes(a: ProductObservable, b: ProductObservable) -> bool:
    """True iff the two products commute (even number of differing sites)."""
    if a.n_sites != b.n_sites:
        raise DimensionError(
            f"observables act on {a.n_sites} and {b.n_sites} sites"
        )
    differing = sum(1 for la, lb in zip(a.letters, b.letters) if la is not lb)
    return differing % 2 == 0


@dataclass(frozen=True)
class ObservableSet:
    """Ordered collection of product observables on a common register."""

    observables: tuple[ProductObservable, ...]

    def __post_init__(self):
        if len(self.observables) == 0:
            raise ParseError("an observable set needs at least one observable")
        sizes = {o.n_sites for o in self.observables}
        if len(sizes) > 1:
            raise DimensionError(f"observables span different site counts {sorted(sizes)}")

    @classmethod
    def from_string(cls, text: str) -> "ObservableSet":
        """Parse comma-separated products like ``"XX,ZZ"`` (case-insensitive)."""
        parts = [p for p in (chunk.strip() for chunk in text.split(",")) if p != ""]
        if not parts:
            raise ParseError("empty observable-set string")
        return cls(tuple(ProductObservable.from_string(p) for p in parts))

    @property
    def size(self) -> int:
        """Number of observables K."""
        return len(self.observables)

    @property
    def n_sites(self) -> int:
        return self.observables[0].n_sites

    def __str__(self) -> str:
        return ",".join(str(o) for o in self.observables)


def sign_vectors(k: int) -> list[SignVector]:
    """All K-tuples over {+1, -1} in canonical order (+1 first)."""
    return list(itertools.product((1, -1), repeat=k))


@dataclass(frozen=True)
class Pvm:
    """Joint projective measurement of a commuting independent set.

    ``projectors`` maps each sign vector to the dense projector onto the
    corresponding joint eigenspace; every projector has rank ``rank``.
    """

    projectors: dict[SignVector, np.ndarray]
    rank: int


@dataclass(frozen=True)
class SetValidation:
    """Diagnostics for a candidate observable set.

    ``commutation[i][j]`` says whether observables i and j commute
    (0-based).  ``ranks`` holds the joint-projector ranks when all pairs
    commute, ``None`` otherwise.  ``expected_rank`` is 2**(N-K) when K
    does not exceed N.  ``ok`` means accepted for joint measurement.
    """

    ok: bool
    n_sites: int
    size: int
    commutation: tuple[tuple[bool, ...], ...]
    noncommuting_pairs: tuple[tuple[int, int], ...]
    expected_rank: int | None
    ranks: dict[SignVector, int] | None
    failures: tuple[str, ...]


def _raw_projectors(obs_set: ObservableSet) -> dict[SignVector, np.ndarray]:
    """Products prod_k (I + s_k O_k)/2 for every sign vector, in order."""
    dim = 1 << obs_set.n_sites
    eye = np.eye(dim, dtype=np.complex128)
    mats = [o.matrix().entries for o in obs_set.observables]
    out: dict[SignVector, np.ndarray] = {}
    for signs in sign_vectors(obs_set.size):
        proj = eye
        for s, mat in zip(signs, mats):
            proj = proj @ ((eye + s * mat) / 2.0)
        out[signs] = proj
    return out


def validate_set(obs_set: ObservableSet) -> SetValidation:
    """Check pairwise commutation and joint-projector ranks.

    The set is accepted iff all pairs commute and every joint projector
    has rank 2**(N-K); equal ranks force independence, since a dependent
    set collapses some joint eigenspaces and inflates others.
    """
    k = obs_set.size
    n = obs_set.n_sites
    failures: list[str] = []

    table = [[True] * k for _ in range(k)]
    bad_pairs: list[tuple[int, int]] = []
    for i in range(k):
        for j in range(i + 1, k):
            good = commutes(obs_set.observables[i], obs_set.observables[j])
            table[i][j] = table[j][i] = good
            if not good:
                bad_pairs.append((i + 1, j + 1))
    if bad_pairs:
        failures.append(
            "non-commuting pairs (1-based): " + ", ".join(str(p) for p in bad_pairs)
        )

    expected_rank = (1 << (n - k)) if k <= n else None
    if expected_rank is None:
        failures.append(f"set of {k} observables on {n} sites cannot be independent")

    ranks: dict[SignVector, int] | None = None
    if not bad_pairs:
        # Products of commuting projectors are projectors, so the trace is the rank.
        ranks = {
            signs: int(round(float(np.trace(proj).real)))
            for signs, proj in _raw_projectors(obs_set).items()
        }
        if expected_rank is not None and any(r != expected_rank for r in ranks.values()):
            failures.append(
                f"joint-projector ranks {tuple(ranks.values())} differ from {expected_rank}; "
                "the set is dependent"
            )

    return SetValidation(
        ok=not failures,
        n_sites=n,
        size=k,
        commutation=tuple(tuple(row) for row in table),
        noncommuting_pairs=tuple(bad_pairs),
        expected_rank=expected_rank,
        ranks=ranks,
        failures=tuple(failures),
    )


def joint_pvm(obs_set: ObservableSet) -> Pvm:
    """Joint eigenprojectors of a commuting independent set.

    Raises ``CommutationError`` on a non-commuting pair and
    ``DependenceError`` when the ranks betray a dependent set.
    """
    report = validate_set(obs_set)
    if report.noncommuting_pairs:
        raise CommutationError(
            f"set {obs_set} has non-commuting pairs {report.noncommuting_pairs}"
        )
    if not report.ok:
        raise DependenceError("; ".join(report.failures) or f"set {obs_set} rejected")
    projectors = _raw_projectors(obs_set)
    for proj in projectors.values():
        proj.setflags(write=False)
    assert report.expected_rank is not None
    return Pvm(projectors=projectors, rank=report.expected_rank)
