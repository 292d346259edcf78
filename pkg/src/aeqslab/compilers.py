"""Compile quantum finite automata into AEQS families.

Two source models:

- measure-once one-way automata (one unitary per symbol, projective readout
  at the end): compiled onto a constant-size evolution space padded to a
  power of two;
- one-way automata with a rigid garbage tape (every step writes exactly one
  non-blank garbage symbol), whose per-symbol operators are isometries from
  the current configuration grade into the next; the configuration space is
  the automaton's states times the garbage-content set.

In both cases the compiled final Hamiltonian is the conjugated initial
mixture I - |psi_x><psi_x| with psi_x the automaton's final superposition,
so the ground energy is 0, the spectral gap is 1, and the ground state's
overlaps with the acceptance/rejection spaces reproduce the automaton's
outcome probabilities exactly.  Direct simulators are provided as oracles
for both models.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .aeqs import (
    AeqsFamily,
    AeqsInstance,
    DEFAULT_ACCURACY_BOUND,
    ProjectorComplement,
)
from .linalg import CapacityError, hadamard_power, ilog, spectral_norm
from .qqa import CENT, DOLLAR, BasisSchema, Selector, length_selector

GARBAGE_CAPACITY = 65536
ISOMETRY_TOL = 1e-9
BLANK = "_"


class CompileError(Exception):
    pass


def _unitary_defect(u: np.ndarray) -> float:
    return spectral_norm(u.conj().T @ u - np.eye(u.shape[0]))


def decision_threshold(error_bound: float | None) -> float:
    """Accuracy threshold matching an automaton's error bound.

    A member is accepted with probability p >= 1 - e, so the compiled ground
    state has accepting overlap at least sqrt(1 - e) and achieved accuracy
    at least 1 - sqrt(1 - sqrt(1 - e)).  (This is slightly weaker than the
    1 - sqrt(e/2) shape quoted with the construction, which silently bounds
    2(1 - c) by 1 - c^2; the honest threshold keeps verdicts sound.)
    """
    if error_bound is None or error_bound <= 0.0:
        return DEFAULT_ACCURACY_BOUND
    a_min = math.sqrt(1.0 - error_bound)
    return min(DEFAULT_ACCURACY_BOUND, max(0.5, 1.0 - math.sqrt(1.0 - a_min) - 1e-9))


# ---------------------------------------------------------------------------
# Measure-once one-way automata
# ---------------------------------------------------------------------------

@dataclass
class MoQfaSpec:
    """Unitary per symbol on the inner-state space; projective readout."""

    n_states: int
    alphabet: tuple
    ops: dict                    # CENT/DOLLAR/char -> ndarray
    q_acc: frozenset
    q_rej: frozenset
    initial: int = 0
    error_bound: float | None = None
    name: str = "moqfa"

    def __post_init__(self):
        self.q_acc = frozenset(self.q_acc)
        self.q_rej = frozenset(self.q_rej)
        if self.q_acc & self.q_rej:
            raise CompileError("accepting and rejecting state sets overlap")
        needed = {CENT, DOLLAR, *self.alphabet}
        missing = needed - set(self.ops)
        if missing:
            raise CompileError(f"missing operators for {sorted(missing)}")
        for sym, u in self.ops.items():
            u = np.asarray(u, dtype=complex)
            if u.shape != (self.n_states, self.n_states):
                raise CompileError(f"operator {sym!r} has shape {u.shape}")
            defect = _unitary_defect(u)
            if defect > ISOMETRY_TOL:
                raise CompileError(f"operator {sym!r} unitarity defect {defect:.3e}")
            self.ops[sym] = u
        if not 0 <= self.initial < self.n_states:
            raise CompileError("initial state out of range")

    @property
    def padded_states(self) -> int:
        return 2 ** ilog(max(2, self.n_states))

    def padded_op(self, sym: str) -> np.ndarray:
        u = self.ops[sym]
        pad = self.padded_states
        if pad == self.n_states:
            return u
        out = np.eye(pad, dtype=complex)
        out[: self.n_states, : self.n_states] = u
        return out


def run_moqfa(spec: MoQfaSpec, x: str) -> tuple:
    """(accept probability, reject probability) by direct simulation."""
    psi = np.zeros(spec.n_states, dtype=complex)
    psi[spec.initial] = 1.0
    for sym in [CENT, *x, DOLLAR]:
        if sym not in spec.ops:
            raise CompileError(f"symbol {sym!r} outside the automaton's alphabet")
        psi = spec.ops[sym] @ psi
    probs = np.abs(psi) ** 2
    return (
        float(sum(probs[q] for q in spec.q_acc)),
        float(sum(probs[q] for q in spec.q_rej)),
    )


def from_moqfa(spec: MoQfaSpec) -> AeqsFamily:
    """Compile onto the padded constant-size space.

    H_ini is the Hadamard conjugate of the initial mixture (ground state:
    the Hadamard image of the initial inner state); H_fin is the run-image
    I - |psi_x><psi_x| of the same mixture, giving ground energy 0 and gap 1
    on every input.  Padding states act as identity, carry initial-mixture
    weight 1, and join neither criteria set.
    """
    pad = spec.padded_states
    k0 = ilog(pad)
    schema = BasisSchema([("state", tuple(range(pad)))])
    threshold = decision_threshold(spec.error_bound)
    w_col = hadamard_power(k0)[:, spec.initial].copy()

    def build(x: str) -> AeqsInstance:
        psi = np.zeros(pad, dtype=complex)
        psi[spec.initial] = 1.0
        for sym in [CENT, *x, DOLLAR]:
            psi = spec.padded_op(sym) @ psi
        return AeqsInstance(
            size_bits=k0,
            epsilon=threshold,
            h_ini=ProjectorComplement(w_col),
            h_fin=ProjectorComplement(psi),
            s_acc=frozenset(spec.q_acc),
            s_rej=frozenset(spec.q_rej),
            schema=schema,
        )

    return AeqsFamily(
        alphabet=spec.alphabet,
        selector=Selector(lambda x: 0, "n = 0 (single level)"),
        builder=build,
        tags=("1moqqaf", "constsize", "constgap", "0-energy"),
        name=f"compiled({spec.name})",
    )


# ---------------------------------------------------------------------------
# Rigid-garbage-tape one-way automata
# ---------------------------------------------------------------------------

@dataclass
class GarbageQfaSpec:
    """delta(q, symbol) -> [(p, garbage_symbol, amplitude)]; rigid tape.

    Garbage symbols are 1..xi_size (0 is reserved for the blank).  Rigidity
    means every transition emits exactly one non-blank symbol, so reading m
    symbols leaves exactly m garbage cells filled and the induced operators
    are isometries grade by grade.
    """

    n_states: int
    alphabet: tuple
    xi_size: int
    delta: dict                  # (q, symbol) -> list[(p, xi, amp)]
    q_acc: frozenset
    q_rej: frozenset
    initial: int = 0
    error_bound: float | None = None
    name: str = "garbage-1qfa"

    def __post_init__(self):
        self.q_acc = frozenset(self.q_acc)
        self.q_rej = frozenset(self.q_rej)
        if self.q_acc & self.q_rej:
            raise CompileError("accepting and rejecting state sets overlap")
        for (q, sym), moves in self.delta.items():
            for (p, xi, _amp) in moves:
                if not (0 <= p < self.n_states):
                    raise CompileError(f"target state {p} out of range")
                if not (1 <= xi <= self.xi_size):
                    raise CompileError(f"garbage symbol {xi} outside 1..{self.xi_size}")

    def isometry_defect(self, sym: str) -> float:
        """|| V'V - I || for the induced grade map of one symbol."""
        v = np.zeros((self.n_states * self.xi_size, self.n_states), dtype=complex)
        for q in range(self.n_states):
            for (p, xi, amp) in self.delta.get((q, sym), ()):
                v[p * self.xi_size + (xi - 1), q] += amp
        return spectral_norm(v.conj().T @ v - np.eye(self.n_states))

    def validate(self) -> None:
        for sym in [CENT, DOLLAR, *self.alphabet]:
            defect = self.isometry_defect(sym)
            if defect > ISOMETRY_TOL:
                raise CompileError(f"symbol {sym!r} isometry defect {defect:.3e}")


def run_garbage_1qfa(spec: GarbageQfaSpec, x: str) -> tuple:
    """(accept, reject) probabilities: unitary run on states x garbage
    content, projective readout on the inner state at the end."""
    psi = {(spec.initial, ()): 1.0 + 0j}
    for sym in [CENT, *x, DOLLAR]:
        nxt: dict = {}
        for (q, tape), amp in psi.items():
            for (p, xi, a) in spec.delta.get((q, sym), ()):
                key = (p, tape + (xi,))
                nxt[key] = nxt.get(key, 0j) + amp * a
        psi = nxt
    p_acc = sum(abs(a) ** 2 for (q, _t), a in psi.items() if q in spec.q_acc)
    p_rej = sum(abs(a) ** 2 for (q, _t), a in psi.items() if q in spec.q_rej)
    return float(p_acc), float(p_rej)


def garbage_strings(xi_size: int, max_len: int) -> list:
    """Garbage-content set: words of length <= max_len over 1..xi_size,
    length-then-lexicographic with the all-blank (empty) word first."""
    out = []
    for length in range(max_len + 1):
        for word in itertools.product(range(1, xi_size + 1), repeat=length):
            out.append(word)
    return out


def from_garbage_1qfa(spec: GarbageQfaSpec) -> AeqsFamily:
    """Compile onto the configuration space Q x G_n.

    Reading the extended input fills n+2 garbage cells, so G_n holds words
    of length up to |x|+2.  The compiled Hamiltonians mirror the measure-once
    compilation on this larger space.
    """
    spec.validate()
    threshold = decision_threshold(spec.error_bound)

    def build(x: str) -> AeqsInstance:
        max_len = len(x) + 2
        words = garbage_strings(spec.xi_size, max_len)
        dim = spec.n_states * len(words)
        if dim > GARBAGE_CAPACITY:
            raise CapacityError(
                f"configuration space {dim} exceeds garbage capacity {GARBAGE_CAPACITY}"
            )
        schema = BasisSchema([("state", tuple(range(spec.n_states))),
                              ("garbage", tuple(words))])
        # Unitary run (the rigid discipline keeps the amplitudes graded).
        amps = {(spec.initial, ()): 1.0 + 0j}
        for sym in [CENT, *x, DOLLAR]:
            nxt: dict = {}
            for (q, tape), amp in amps.items():
                for (p, xi, a) in spec.delta.get((q, sym), ()):
                    key = (p, tape + (xi,))
                    nxt[key] = nxt.get(key, 0j) + amp * a
            amps = nxt
        psi = np.zeros(dim, dtype=complex)
        for (q, tape), amp in amps.items():
            psi[schema.index((q, tape))] = amp
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-9:
            raise CompileError(f"run lost norm ({norm}); rigid discipline violated?")
        psi /= norm

        s_acc = frozenset(
            schema.index((q, w)) for q in spec.q_acc for w in words
        )
        s_rej = frozenset(
            schema.index((q, w)) for q in spec.q_rej for w in words
        )
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=threshold,
            h_ini=ProjectorComplement(
                deflation_vector_for(schema.dim, schema.index((spec.initial, ())))
            ),
            h_fin=ProjectorComplement(psi),
            s_acc=s_acc,
            s_rej=s_rej,
            schema=schema,
        )

    return AeqsFamily(
        alphabet=spec.alphabet,
        selector=length_selector(),
        builder=build,
        tags=("1moqqaf", "linsize", "constgap", "0-energy"),
        name=f"compiled({spec.name})",
    )


def deflation_vector_for(dim: int, distinguished: int) -> np.ndarray:
    from .gallery import deflation_vector

    return deflation_vector(dim, distinguished)


# ---------------------------------------------------------------------------
# Random spec generators (test fodder)
# ---------------------------------------------------------------------------

def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_moqfa_spec(rng: np.random.Generator, n_states: int,
                      alphabet=("0", "1")) -> MoQfaSpec:
    ops = {sym: haar_unitary(rng, n_states) for sym in [CENT, DOLLAR, *alphabet]}
    labels = rng.integers(0, 3, size=n_states)
    q_acc = frozenset(int(i) for i in np.where(labels == 0)[0])
    q_rej = frozenset(int(i) for i in np.where(labels == 1)[0])
    return MoQfaSpec(
        n_states=n_states, alphabet=tuple(alphabet), ops=ops,
        q_acc=q_acc, q_rej=q_rej, initial=int(rng.integers(0, n_states)),
        name=f"random-moqfa-{n_states}",
    )


def random_garbage_spec(rng: np.random.Generator, n_states: int, xi_size: int,
                        alphabet=("0", "1")) -> GarbageQfaSpec:
    delta = {}
    for sym in [CENT, DOLLAR, *alphabet]:
        big = haar_unitary(rng, n_states * xi_size)
        for q in range(n_states):
            col = big[:, q]
            moves = []
            for p in range(n_states):
                for xi in range(1, xi_size + 1):
                    amp = col[p * xi_size + (xi - 1)]
                    if abs(amp) > 1e-14:
                        moves.append((p, xi, complex(amp)))
            delta[(q, sym)] = moves
    labels = rng.integers(0, 3, size=n_states)
    q_acc = frozenset(int(i) for i in np.where(labels == 0)[0])
    q_rej = frozenset(int(i) for i in np.where(labels == 1)[0])
    return GarbageQfaSpec(
        n_states=n_states, alphabet=tuple(alphabet), xi_size=xi_size,
        delta=delta, q_acc=q_acc, q_rej=q_rej,
        initial=int(rng.integers(0, n_states)),
        name=f"random-garbage-{n_states}x{xi_size}",
    )


def dfa_as_garbage_spec(transitions: dict, n_states: int, q_acc, q_rej,
                        alphabet=("0", "1"), name: str = "dfa") -> GarbageQfaSpec:
    """Classical DFA embedding: emit the source state as the garbage symbol,
    which keeps the induced per-symbol operators isometric even when the
    transition map is not injective."""
    delta = {}
    for sym in [CENT, DOLLAR, *alphabet]:
        for q in range(n_states):
            target = q if sym in (CENT, DOLLAR) else transitions[(q, sym)]
            delta[(q, sym)] = [(target, q + 1, 1.0)]
    return GarbageQfaSpec(
        n_states=n_states, alphabet=tuple(alphabet), xi_size=n_states,
        delta=delta, q_acc=frozenset(q_acc), q_rej=frozenset(q_rej), name=name,
    )
