"""Coupling circuit, outcome combination, Kraus/POVM extraction, sampling.

The indirect scheme measures K commuting N-site Pauli products in one
shot.  The system is joined to an entangled N*K-qubit meter register
(see ``meter``), each meter qubit acts as the control of a controlled
Pauli gate on its system site, and every meter qubit is read out in the
X basis.  The raw record is the tuple of N*K readout signs, laid out
round-major: entry (k-1)*N + n - 1 belongs to round k, site n.  The
product of round k's N signs is that round's combined sign s_k, and the
sign vector (s_1, ..., s_K) is the measurement outcome.

Records sharing a sign vector induce the same conditional state, so the
scheme is described by 2**K Kraus operators, each realized by
2**(K*(N-1)) records.  ``kraus_bruteforce`` extracts them by simulating
the full circuit; ``kraus_closed_form`` builds

    M_s = 2**(-K(N-1)/2) [cos(theta) P_s + sin(theta)/sqrt(2**K-1) (I - P_s)]

from the joint eigenprojectors P_s, and the POVM effects are

    E_s = 2**(K(N-1)) M_s^dag M_s
        = cos(theta)**2 P_s + sin(theta)**2/(2**K-1) (I - P_s).

A mod-d shift model (``qudit_vsm``) provides the single-qudit analogue
the multi-qubit scheme generalizes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CommutationError,
    ConsistencyError,
    DependenceError,
    DimensionError,
    DomainError,
    ParseError,
)
from .meter import MeterSpec, kfold_meter
from .pauli import ObservableSet, Pvm, SignVector, joint_pvm, sign_vectors, validate_set
from .statevec import Ket, tensor, apply_controlled

# Every random draw in the package uses this generator family.
RNG_ALGORITHM = "numpy-pcg64"

# Records mapping to one sign vector must agree to this absolute tolerance.
RECORD_AGREEMENT_ATOL = 1e-10


def sign_string(signs: SignVector) -> str:
    """Render a sign vector as characters, e.g. ``(1, -1)`` to ``"+-"``."""
    return "".join("+" if s == 1 else "-" for s in signs)


def parse_sign_string(text: str) -> SignVector:
    """Inverse of :func:`sign_string`."""
    if not text or any(c not in "+-" for c in text):
        raise ParseError(f"sign string must be non-empty over '+-', got {text!r}")
    return tuple(1 if c == "+" else -1 for c in text)


@dataclass(frozen=True)
class MeasurementModel:
    """A jointly measurable observable set with a meter angle.

    ``coupling_order`` is the order in which each system site sees its K
    controlled gates (a permutation of 1..K, default ascending).  The
    extracted Kraus operators and POVM do not depend on it because the
    observables commute; it is kept explicit so the circuit is fully
    specified.
    """

    observables: ObservableSet
    theta: float
    coupling_order: tuple[int, ...] = ()

    def __post_init__(self):
        report = validate_set(self.observables)
        if report.noncommuting_pairs:
            raise CommutationError(
                f"set {self.observables} has non-commuting pairs {report.noncommuting_pairs}"
            )
        if not report.ok:
            raise DependenceError("; ".join(report.failures))
        # Delegates the theta domain check.
        MeterSpec(rounds=self.size, n_sites=self.observables.n_sites, theta=self.theta)
        order = tuple(self.coupling_order) or tuple(range(1, self.size + 1))
        if sorted(order) != list(range(1, self.size + 1)):
            raise DomainError(
                f"coupling order {order} is not a permutation of 1..{self.size}"
            )
        object.__setattr__(self, "coupling_order", order)

    @property
    def size(self) -> int:
        """Number of observables K."""
        return self.observables.size

    @property
    def n_sites(self) -> int:
        return self.observables.n_sites

    @property
    def meter_spec(self) -> MeterSpec:
        return MeterSpec(rounds=self.size, n_sites=self.n_sites, theta=self.theta)

    @property
    def strength(self) -> float:
        return self.meter_spec.strength

    @property
    def vsm_compliant(self) -> bool:
        return self.meter_spec.vsm_compliant

    @property
    def multiplicity(self) -> int:
        """Records per sign vector, 2**(K*(N-1))."""
        return 1 << (self.size * (self.n_sites - 1))

    def pvm(self) -> Pvm:
        return joint_pvm(self.observables)

    def to_json(self) -> dict:
        return {
            "observables": [str(o) for o in self.observables.observables],
            "theta": float(self.theta),
            "order": list(self.coupling_order),
        }

    @classmethod
    def from_json(cls, data) -> "MeasurementModel":
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid model JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"model JSON must be an object, got {type(data).__name__}")
        try:
            names = list(data["observables"])
            theta = float(data["theta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"model JSON needs 'observables' and 'theta': {exc}") from exc
        order = tuple(int(x) for x in data.get("order", ()))
        obs = ObservableSet.from_string(",".join(str(nm) for nm in names))
        return cls(observables=obs, theta=theta, coupling_order=order)


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators keyed by sign vector, each occurring ``multiplicity`` times."""

    operators: dict[SignVector, np.ndarray]
    multiplicity: int

    def completeness_residual(self) -> float:
        """Max-norm distance of multiplicity * sum(M^dag M) from the identity."""
        acc = None
        for mat in self.operators.values():
            term = mat.conj().T @ mat
            acc = term if acc is None else acc + term
        acc = self.multiplicity * acc
        return float(np.max(np.abs(acc - np.eye(acc.shape[0]))))


@dataclass(frozen=True)
class Povm:
    """POVM effects keyed by sign vector."""

    effects: dict[SignVector, np.ndarray]

    def completeness_residual(self) -> float:
        total = sum(self.effects.values())
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(e).min() for e in self.effects.values()))


@dataclass(frozen=True)
class OutcomeRecord:
    """One sampled shot: raw meter signs, combined signs, conditional state.

    ``probability`` is the chance of this exact raw readout, so the
    combined outcome's probability is spread over its multiplicity of
    equivalent raw records.
    """

    raw: tuple[int, ...]
    signs: SignVector
    post_state: Ket
    probability: float

    def to_json(self) -> dict:
        return {
            "raw": list(self.raw),
            "signs": sign_string(self.signs),
            "probability": float(self.probability),
            "post_state": self.post_state.to_json(),
        }


def couple(model: MeasurementModel, system: Ket) -> Ket:
    """Join ``system`` to the meter register and run the coupling circuit.

    System qubits come first (sites 1..N), then the meter qubits in
    round-major order.  Meter qubit (k, n) controls the Pauli letter of
    observable k at site n.
    """
    n = model.n_sites
    if system.n != n:
        raise DimensionError(f"system has {system.n} qubits, model needs {n}")
    state = tensor([system, kfold_meter(model.meter_spec)])
    for k in model.coupling_order:
        obs = model.observables.observables[k - 1]
        for site in range(1, n + 1):
            control = n + (k - 1) * n + site
            state = apply_controlled(obs.letters[site - 1].matrix, control, site, state)
    return state


def combine_outcomes(raw: tuple[int, ...], rounds: int, n_sites: int) -> SignVector:
    """Collapse a round-major raw record into per-round sign products."""
    if len(raw) != rounds * n_sites:
        raise DimensionError(
            f"raw record has {len(raw)} entries, expected {rounds * n_sites}"
        )
    if any(v not in (1, -1) for v in raw):
        raise DomainError("raw record entries must be +1 or -1")
    out = []
    for k in range(rounds):
        block = raw[k * n_sites : (k + 1) * n_sites]
        out.append(int(np.prod(block)))
    return tuple(out)


def _hadamard_columns(block: np.ndarray) -> np.ndarray:
    """Right-multiply ``block`` (rows x 2**m) by the m-fold Hadamard product.

    Implemented as a fast transform along axis 1 so no 2**m x 2**m
    matrix is ever materialized.
    """
    rows, dim = block.shape
    m = dim.bit_length() - 1
    out = block.reshape((rows,) + (2,) * m)
    for ax in range(1, m + 1):
        a = np.take(out, 0, axis=ax)
        b = np.take(out, 1, axis=ax)
        out = np.stack((a + b, a - b), axis=ax)
    return out.reshape(rows, dim) / math.sqrt(2.0) ** m


def _record_signs(pos: int, rounds: int, n_sites: int) -> tuple[tuple[int, ...], SignVector]:
    """Raw record and combined signs of X-readout index ``pos``."""
    total = rounds * n_sites
    raw = tuple(1 - 2 * ((pos >> (total - 1 - i)) & 1) for i in range(total))
    return raw, combine_outcomes(raw, rounds, n_sites)


def _branches(model: MeasurementModel, system: Ket) -> np.ndarray:
    """Unnormalized conditional system states, one column per record index."""
    dim_s = 1 << model.n_sites
    dim_m = 1 << (model.size * model.n_sites)
    coupled = couple(model, system)
    return _hadamard_columns(coupled.amplitudes.reshape(dim_s, dim_m))


def kraus_bruteforce(model: MeasurementModel, *, atol: float = RECORD_AGREEMENT_ATOL) -> KrausSet:
    """Extract the Kraus operators by simulating the full circuit.

    Runs the coupling on every computational basis state, projects each
    meter qubit onto the X basis, groups the resulting record operators
    by combined sign vector, and checks that all records in a group give
    the same operator.  No closed-form input: this is the oracle the
    closed form is tested against.
    """
    n, k = model.n_sites, model.size
    dim_s = 1 << n
    dim_m = 1 << (n * k)
    stacked = np.empty((dim_m, dim_s, dim_s), dtype=np.complex128)
    for j in range(dim_s):
        # Column j of every record operator comes from input |j>.
        stacked[:, :, j] = _branches(model, Ket.basis(n, j)).T
    reps: dict[SignVector, np.ndarray] = {s: None for s in sign_vectors(k)}
    counts: dict[SignVector, int] = {s: 0 for s in reps}
    for pos in range(dim_m):
        _, signs = _record_signs(pos, k, n)
        counts[signs] += 1
        if reps[signs] is None:
            reps[signs] = stacked[pos]
        else:
            deviation = float(np.max(np.abs(stacked[pos] - reps[signs])))
            if deviation > atol:
                raise ConsistencyError(
                    f"records with signs {sign_string(signs)} disagree by {deviation:.3e}"
                )
    expected = model.multiplicity
    if any(c != expected for c in counts.values()):
        raise ConsistencyError(f"record counts {counts} differ from multiplicity {expected}")
    return KrausSet(operators={s: reps[s] for s in sign_vectors(k)}, multiplicity=expected)


def kraus_closed_form(model: MeasurementModel) -> KrausSet:
    """Kraus operators from the joint eigenprojectors, no circuit involved."""
    n, k = model.n_sites, model.size
    pvm = model.pvm()
    eye = np.eye(1 << n, dtype=np.complex128)
    scale = 2.0 ** (-k * (n - 1) / 2.0)
    in_coef = math.cos(model.theta)
    out_coef = math.sin(model.theta) / math.sqrt(2.0**k - 1.0)
    operators = {
        signs: scale * (in_coef * proj + out_coef * (eye - proj))
        for signs, proj in pvm.projectors.items()
    }
    return KrausSet(operators=operators, multiplicity=model.multiplicity)


def povm(model: MeasurementModel) -> Povm:
    """POVM effects, multiplicity-weighted squares of the Kraus operators."""
    kraus = kraus_closed_form(model)
    effects = {
        signs: kraus.multiplicity * (mat.conj().T @ mat)
        for signs, mat in kraus.operators.items()
    }
    return Povm(effects=effects)


def outcome_distribution(model: MeasurementModel, system: Ket) -> dict[SignVector, float]:
    """Probability of each sign vector for input ``system``."""
    if system.n != model.n_sites:
        raise DimensionError(f"system has {system.n} qubits, model needs {model.n_sites}")
    amps = system.amplitudes
    dist = {}
    for signs, effect in povm(model).effects.items():
        dist[signs] = float(np.real(np.vdot(amps, effect @ amps)))
    return dist


def _record_probabilities(branches: np.ndarray) -> np.ndarray:
    probs = np.sum(np.abs(branches) ** 2, axis=0)
    # Floating-point dust must not reach the sampler.
    probs = np.clip(probs.real, 0.0, None)
    return probs / probs.sum()


def sample(model: MeasurementModel, system: Ket, seed) -> OutcomeRecord:
    """Draw one shot and return its record, signs, and conditional state."""
    branches = _branches(model, system)
    probs = _record_probabilities(branches)
    rng = np.random.default_rng(seed)
    pos = int(rng.choice(branches.shape[1], p=probs))
    raw, signs = _record_signs(pos, model.size, model.n_sites)
    post = Ket.normalized(branches[:, pos])
    return OutcomeRecord(raw=raw, signs=signs, post_state=post, probability=float(probs[pos]))


def sample_signs(
    model: MeasurementModel, system: Ket, shots: int, seed
) -> dict[SignVector, int]:
    """Draw ``shots`` records at once and tally the combined sign vectors."""
    if shots < 1:
        raise DomainError(f"shots must be positive, got {shots}")
    branches = _branches(model, system)
    probs = _record_probabilities(branches)
    rng = np.random.default_rng(seed)
    draws = rng.choice(branches.shape[1], size=shots, p=probs)
    by_pos = np.bincount(draws, minlength=branches.shape[1])
    counts = {s: 0 for s in sign_vectors(model.size)}
    for pos, count in enumerate(by_pos):
        if count:
            _, signs = _record_signs(pos, model.size, model.n_sites)
            counts[signs] += int(count)
    return counts


@dataclass(frozen=True)
class QuditVsm:
    """Single-qudit variable-strength measurement via a mod-d shift meter."""

    d: int
    theta: float
    kraus: tuple[np.ndarray, ...]
    effects: tuple[np.ndarray, ...]
    strength: float


def qudit_vsm(d: int, theta: float) -> QuditVsm:
    """Closed-form qudit VSM: d diagonal Kraus operators and their effects.

    The meter is cos(theta)|0> + sin(theta)/sqrt(d-1) (|1>+...+|d-1>); a
    mod-d shift writes the system value into it, and reading the meter
    value j leaves K_j|i> = phi_((j-i) mod d) |i>.
    """
    if d < 2:
        raise DomainError(f"qudit dimension must be at least 2, got {d}")
    if not 0.0 <= theta <= math.pi / 2:
        raise DomainError(f"theta must lie in [0, pi/2], got {theta!r}")
    phi = _qudit_meter(d, theta)
    kraus = []
    effects = []
    for j in range(d):
        diag = np.array([phi[(j - i) % d] for i in range(d)], dtype=np.complex128)
        k_j = np.diag(diag)
        kraus.append(k_j)
        effects.append(k_j.conj().T @ k_j)
    s = (d * math.cos(theta) ** 2 - 1.0) / (d - 1.0)
    return QuditVsm(d=d, theta=theta, kraus=tuple(kraus), effects=tuple(effects), strength=s)


def _qudit_meter(d: int, theta: float) -> np.ndarray:
    phi = np.full(d, math.sin(theta) / math.sqrt(d - 1.0))
    phi[0] = math.cos(theta)
    return phi


def qudit_vsm_bruteforce(d: int, theta: float) -> list[np.ndarray]:
    """Qudit effects from literal simulation of the shift circuit.

    Builds the d**2-dimensional joint state, applies the permutation
    |i, j> -> |i, (j + i) mod d|, and reads the meter column-by-column.
    Independent of the closed form: used to test it.
    """
    if d < 2:
        raise DomainError(f"qudit dimension must be at least 2, got {d}")
    phi = _qudit_meter(d, theta)
    effects = []
    kraus = [np.zeros((d, d), dtype=np.complex128) for _ in range(d)]
    for i in range(d):
        joint = np.zeros(d * d, dtype=np.complex128)
        joint[i * d : (i + 1) * d] = phi
        shifted = np.zeros_like(joint)
        for j in range(d):
            shifted[i * d + (j + i) % d] = joint[i * d + j]
        for j in range(d):
            for i_out in range(d):
                kraus[j][i_out, i] = shifted[i_out * d + j]
    for j in range(d):
        effects.append(kraus[j].conj().T @ kraus[j])
    return effects


def matrix_to_json(mat: np.ndarray) -> dict:
    """Row-major real/imag parts, JSON-ready."""
    arr = np.asarray(mat, dtype=np.complex128)
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    try:
        re = np.asarray(data["re"], dtype=np.float64)
        im = np.asarray(data["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"matrix JSON needs 're' and 'im' arrays: {exc}") from exc
    if re.shape != im.shape:
        raise ParseError(f"matrix JSON re/im shapes differ: {re.shape} vs {im.shape}")
    return re + 1j * im


def effects_to_json(effects: dict[SignVector, np.ndarray]) -> dict:
    """Sign-keyed matrix map, canonical sign order preserved."""
    return {sign_string(signs): matrix_to_json(mat) for signs, mat in effects.items()}
