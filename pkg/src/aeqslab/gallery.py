"""Six worked language constructions with classical membership oracles.

Each entry pairs an AEQS family (its Hamiltonians generated by a
quasi-automaton construction) with a pure classical oracle on strings and
the expected spectral data, so sweeps can verify the quantum decision
against ordinary string predicates.

Two of the constructions (prefix language, letter-count equality) live on
their full index product space with genuinely unitary per-symbol operators.
The three track-based constructions (symmetric coincidence, unary subset
sum, multiple duplication) are generated on the dynamically relevant
sub-basis of their index space: the nondeterministic-track chains plus
their landings.  On the full product space these constructions acquire
spurious extra ground directions from dynamically unreachable index tuples
(basis states that no computation produces still enter the operator's
spectrum), which would drown the intended witness energies; the curated
basis is closed under the generation maps and reproduces the constructions'
analyzed spectra exactly.  The marked-palindrome construction is kept
verbatim on its full surface-configuration space; deviations of its ground
support from the intended accept/reject spaces are REPORTED as findings by
verify(), never patched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .aeqs import (
    AeqsFamily,
    AeqsInstance,
    DEFAULT_ACCURACY_BOUND,
    ProjectorComplement,
    complement,
    decide,
)
from .linalg import SparseHermitian
from .qqa import (
    CENT,
    DOLLAR,
    BasisSchema,
    MoqqafLevel,
    QqafLevel,
    Selector,
    SparseOp,
    TwoWayQqafLevel,
    generate_moqqaf,
    length_selector,
)

ACCEPT, REJECT, NOT_PROMISED = "accept", "reject", "not-promised"


class GalleryError(Exception):
    pass


class PromiseError(GalleryError):
    """Input does not have the block shape the promise problem requires."""


def pair_index(a: int, b: int) -> int:
    """Cantor pairing, used to fold parameter tuples into a selector index."""
    return (a + b) * (a + b + 1) // 2 + b


def deflation_vector(dim: int, distinguished: int) -> np.ndarray:
    """Ground state of the initial Hamiltonian I - |g><g|.

    On power-of-two dimensions g is the Hadamard image of the distinguished
    basis state (so the initial Hamiltonian is diagonal in the Hadamard
    basis); otherwise g is the uniform superposition, which keeps the same
    spectrum (unique ground at energy 0, gap 1) on spaces that no tensor
    power of the one-qubit transform fits.
    """
    k = dim.bit_length() - 1
    if 2**k == dim:
        # Column `distinguished` of the k-fold Hadamard power, built without
        # materializing the matrix: signs follow bitwise-AND parity.
        idx = np.arange(dim)
        parity = np.zeros(dim, dtype=np.int64)
        bits = idx & distinguished
        while bits.any():
            parity ^= bits & 1
            bits >>= 1
        return ((-1.0) ** parity).astype(complex) / math.sqrt(dim)
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)


def initial_hamiltonian(schema: BasisSchema, distinguished_state) -> ProjectorComplement:
    return ProjectorComplement(deflation_vector(schema.dim, schema.index(distinguished_state)))


@dataclass
class Expectation:
    """A spectral claim checked on every swept input it applies to."""

    description: str
    applies: Callable[[str], bool]
    energy: Callable[[str], float] | None = None
    gap_lower: Callable[[str], float] | None = None
    tolerance: float = 1e-8


@dataclass
class GalleryEntry:
    name: str
    family: AeqsFamily
    oracle: Callable[[str], str]          # -> accept | reject | not-promised
    expectations: list = field(default_factory=list)
    notes: str = ""
    orientation: str = "direct"           # "swapped": construction accepts the oracle's reject side
    findings_mode: bool = False           # deviations become findings, not mismatches
    validation_levels: Callable[[str], list] = None

    def expected_outcome(self, x: str) -> str:
        side = self.oracle(x)
        if side == NOT_PROMISED:
            return NOT_PROMISED
        if self.orientation == "swapped":
            return REJECT if side == ACCEPT else ACCEPT
        return side


# ---------------------------------------------------------------------------
# Entry: prefix language  L_a = { a x : x in {0,1}* },  |a| = 1
# ---------------------------------------------------------------------------

_PREFIX_STATES = ("q0", "q1", "q2", "q3")


def _prefix_level(n: int, a: str) -> MoqqafLevel:
    n_pos = n + 2
    schema = BasisSchema([("state", _PREFIX_STATES), ("pos", tuple(range(n_pos)))])

    def adv(pos):
        return (pos + 1) % n_pos

    def advance_op():
        return SparseOp.permutation(
            schema.dim,
            {schema.index((q, h)): schema.index((q, adv(h)))
             for q in _PREFIX_STATES for h in range(n_pos)},
        )

    # At cell 1 the first input symbol routes q0 to the accept track (q1)
    # when it equals a, and to the reject track (q2) otherwise.
    if a == "0":
        cell1 = {"0": {"q0": "q1", "q1": "q3", "q2": "q2", "q3": "q0"},
                 "1": {"q0": "q2", "q1": "q1", "q2": "q3", "q3": "q0"}}
    else:
        cell1 = {"1": {"q0": "q1", "q1": "q3", "q2": "q2", "q3": "q0"},
                 "0": {"q0": "q2", "q1": "q1", "q2": "q3", "q3": "q0"}}

    ops = {CENT: advance_op(), DOLLAR: advance_op()}
    for sym in ("0", "1"):
        mapping = {}
        for q in _PREFIX_STATES:
            for h in range(n_pos):
                target = cell1[sym][q] if h == 1 else q
                mapping[schema.index((q, h))] = schema.index((target, adv(h)))
        ops[sym] = SparseOp.permutation(schema.dim, mapping)

    lam = np.ones(schema.dim)
    lam[schema.index(("q0", 0))] = 0.0
    return MoqqafLevel(
        schema=schema, alphabet=("0", "1"), ops=ops,
        lam0=SparseHermitian.diagonal(lam), name=f"prefix{a}[n={n}]",
    )


def _build_l_prefix(a: str) -> GalleryEntry:
    levels: dict[int, MoqqafLevel] = {}

    def level_for(n: int) -> MoqqafLevel:
        if n not in levels:
            levels[n] = _prefix_level(n, a)
        return levels[n]

    def build(x: str) -> AeqsInstance:
        level = level_for(len(x))
        schema = level.schema
        h_fin = generate_moqqaf(level, x).operator
        s_rej = {("q2", 0)}
        if len(x) == 0:
            # The empty string never reaches the branch cell; its ground
            # state stays on the start tuple, which we class as rejecting.
            s_rej.add(("q0", 0))
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, ("q0", 0)),
            h_fin=h_fin,
            s_acc=schema.indices_of([("q1", 0)]),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    family = AeqsFamily(
        alphabet=("0", "1"), selector=length_selector(), builder=build,
        tags=("1moqqaf", "logsize", "constgap", "0-energy"), name=f"l_prefix_{a}",
    )

    def oracle(x: str) -> str:
        return ACCEPT if x.startswith(a) else REJECT

    return GalleryEntry(
        name=f"l_prefix_{a}",
        family=family,
        oracle=oracle,
        expectations=[
            Expectation("ground energy 0 on every input", lambda x: True,
                        energy=lambda x: 0.0),
            Expectation("spectral gap exactly 1", lambda x: True,
                        gap_lower=lambda x: 1.0),
        ],
        notes="start tuple added to the rejection set at n=0 so the empty "
              "string is decided rather than indeterminate",
        validation_levels=lambda x: [level_for(len(x))],
    )


# ---------------------------------------------------------------------------
# Entry: Equal = { w : #a(w) = #b(w) } over {a, b}
# ---------------------------------------------------------------------------

def _equal_level(n: int) -> MoqqafLevel:
    clock = max(1, 2 ** (n - 1)) if n >= 1 else 1
    schema = BasisSchema([("state", ("q1", "q2")), ("clock", tuple(range(clock)))])
    inv = 1.0 / math.sqrt(2.0)

    def idx(q, i):
        return schema.index((q, i % clock))

    def split_rules(advance: int):
        # W-style recombination: q1 -> (q1 + q2)/sqrt2, q2 -> (q1 - q2)/sqrt2.
        rules = []
        for i in range(clock):
            rules.append((idx("q1", i + advance), idx("q1", i), inv))
            rules.append((idx("q2", i + advance), idx("q1", i), inv))
            rules.append((idx("q1", i + advance), idx("q2", i), inv))
            rules.append((idx("q2", i + advance), idx("q2", i), -inv))
        return rules

    # The left endmarker splits the branches without moving the clock; the
    # right endmarker recombines them with one final clock tick.  Members
    # with l letters of each kind then land exactly on clock value 3l+1.
    cent_rules = split_rules(0)
    dollar_rules = split_rules(1)

    def stepper(d1, d2):
        return SparseOp.permutation(
            schema.dim,
            {idx("q1", i): idx("q1", i + d1) for i in range(clock)}
            | {idx("q2", i): idx("q2", i + d2) for i in range(clock)},
        )

    # Reading a advances the q1 clock twice as fast; b the other way round.
    ops = {
        CENT: SparseOp.from_rules(schema.dim, cent_rules),
        DOLLAR: SparseOp.from_rules(schema.dim, dollar_rules),
        "a": stepper(2, 1),
        "b": stepper(1, 2),
    }
    lam = np.ones(schema.dim)
    lam[idx("q1", 0)] = 0.0
    return MoqqafLevel(
        schema=schema, alphabet=("a", "b"), ops=ops,
        lam0=SparseHermitian.diagonal(lam), name=f"equal[n={n}]",
    )


def _build_equal() -> GalleryEntry:
    levels: dict[int, MoqqafLevel] = {}

    def level_for(n: int) -> MoqqafLevel:
        if n not in levels:
            levels[n] = _equal_level(n)
        return levels[n]

    def build(x: str) -> AeqsInstance:
        n = len(x)
        level = level_for(n)
        schema = level.schema
        clock = max(1, 2 ** (n - 1)) if n >= 1 else 1
        s_acc = set()
        if n % 2 == 0:
            # Members have n = 2l symbols and land on clock value 3l+1.
            s_acc.add(("q1", (3 * (n // 2) + 1) % clock))
        s_rej = set(schema.all_states()) - s_acc
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, ("q1", 0)),
            h_fin=generate_moqqaf(level, x).operator,
            s_acc=schema.indices_of(s_acc),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    family = AeqsFamily(
        alphabet=("a", "b"), selector=length_selector(), builder=build,
        tags=("1moqqaf", "logsize", "0-energy"), name="equal",
    )

    def oracle(x: str) -> str:
        return ACCEPT if x.count("a") == x.count("b") else REJECT

    return GalleryEntry(
        name="equal",
        family=family,
        oracle=oracle,
        expectations=[
            Expectation("ground energy 0 on every input", lambda x: True,
                        energy=lambda x: 0.0),
            Expectation("spectral gap exactly 1", lambda x: True,
                        gap_lower=lambda x: 1.0),
        ],
        notes="acceptance clock index uses the even member length n = 2l; "
              "clock arithmetic is mod 2^(n-1) with a floor of 1 at n = 0",
        validation_levels=lambda x: [level_for(len(x))],
    )


# ---------------------------------------------------------------------------
# Entry: SymCoin = { x : exists i < j, i + j = |x| + 1, x_i = x_j }
# ---------------------------------------------------------------------------

_SYM_SYMBOLS = ("a", "b", "B", "acc", "rej")


class _SymCoinTrack:
    """Deterministic register automaton of one nondeterministic pair (i, j).

    Register space: (symbol, position) with position advancing each step
    mod n+2.  Reading the symbol at cell i records it (swap B <-> symbol);
    reading cell j flips the recorded symbol to the accept marker when it
    matches (swap symbol <-> acc); the right endmarker splits accept-marked
    mass sqrt(i/(n+1)) : sqrt((n-i+1)/(n+1)) between acc and rej landings.
    """

    def __init__(self, x: str, i: int, j: int):
        self.x = x
        self.n = len(x)
        self.i, self.j = i, j
        self.n_pos = self.n + 2

    def sym_step(self, state, c: str):
        # Per-symbol permutation of (recorded symbol, position): record at
        # cell i, match at cell j, advance everywhere.
        sym, pos = state
        nxt = (pos + 1) % self.n_pos
        if pos == self.i and self.i > 0:
            if sym == "B":
                return (c, nxt)
            if sym == c:
                return ("B", nxt)
        if pos == self.j and self.j > 0:
            if sym == c:
                return ("acc", nxt)
            if sym == "acc":
                return (c, nxt)
        return (sym, nxt)

    def forward_pass(self, state):
        """State after cent and all n symbol reads (before the endmarker)."""
        sym, pos = state
        state = (sym, (pos + 1) % self.n_pos)
        for c in self.x:
            state = self.sym_step(state, c)
        return state

    def backward_pass(self, state):
        """Inverse of forward_pass (all maps are permutations)."""
        target = state
        # Invert by brute search over symbols at the starting position;
        # positions retrace deterministically (each step is pos -> pos+1).
        start_pos = (target[1] - (self.n + 1)) % self.n_pos
        for sym in _SYM_SYMBOLS:
            if self.forward_pass((sym, start_pos)) == target:
                return (sym, start_pos)
        raise GalleryError("backward chase failed (not a permutation?)")

    def dollar_preimages(self, state):
        """[(pre-endmarker state, amplitude)] for both endmarker branches."""
        sym, pos = state
        if pos != 0:
            return []
        p = self.i / (self.n + 1)
        out = []
        if sym == "acc":
            out.append((("acc", self.n + 1), math.sqrt(p)))
        elif sym == "rej":
            out.append((("rej", self.n + 1), 1.0))
            out.append((("acc", self.n + 1), math.sqrt(1.0 - p)))
        else:
            out.append(((sym, self.n + 1), 1.0))
        return out


def _sym_coin_tracks(n: int):
    return [(i, n + 1 - i) for i in range(1, n // 2 + 1)]


def _build_sym_coin() -> GalleryEntry:
    def schema_for(x: str) -> BasisSchema:
        n = len(x)
        tracks = [(0, 0)] + _sym_coin_tracks(n)
        states = []
        for (i, j) in tracks:
            if (i, j) == (0, 0):
                states.append((0, 0, "B", 0, "B", 0))
                continue
            track = _SymCoinTrack(x, i, j)
            landed = track.forward_pass(("B", 0))
            sym_land = landed[0]
            members = {("B", 0)}
            if sym_land == "acc":
                members |= {("acc", 0), ("rej", 0), (x[i - 1], 0)}
            else:
                members.add((sym_land, 0))
            for (sym, pos) in sorted(members):
                states.append((i, j, sym, pos, "B", 0))
        coords = [
            ("i", tuple(range(0, n // 2 + 1))),
            ("j", tuple(range(0, n + 2))),
            ("sym", _SYM_SYMBOLS),
            ("pos", tuple(range(n + 2))),
            ("sym0", _SYM_SYMBOLS),
            ("pos0", tuple(range(n + 2))),
        ]
        return BasisSchema(coords, states=states)

    def lam_value(track, state) -> float:
        # Lambda0 = I - (1/3)|0,0,B,0,B,0><...|; only the idle track's start
        # is deformed.
        if track == (0, 0) and state == ("B", 0):
            return 2.0 / 3.0
        return 1.0

    def build(x: str) -> AeqsInstance:
        n = len(x)
        schema = schema_for(x)
        diag = np.zeros(schema.dim)
        for idx, full_state in enumerate(schema.all_states()):
            i, j, sym, pos, _s0, _p0 = full_state
            if (i, j) == (0, 0):
                diag[idx] = lam_value((0, 0), ("B", 0))
                continue
            track = _SymCoinTrack(x, i, j)
            total = 0.0
            for pre, amp in track.dollar_preimages((sym, pos)):
                start = track.backward_pass(pre)
                total += amp * amp * lam_value((i, j), start)
            diag[idx] = total
        h_fin = SparseHermitian.diagonal(diag)
        s_acc = {(i, j, "acc", 0, "B", 0) for (i, j) in _sym_coin_tracks(n)}
        s_rej = {(0, 0, "B", 0, "B", 0)}
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, (0, 0, "B", 0, "B", 0)),
            h_fin=h_fin,
            s_acc=schema.indices_of(s_acc),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    family = AeqsFamily(
        alphabet=("a", "b"), selector=length_selector(), builder=build,
        tags=("1qqaf", "logsize", "polygap"), name="sym_coin",
    )

    def witnesses(x: str):
        n = len(x)
        return [(i, j) for (i, j) in _sym_coin_tracks(n) if x[i - 1] == x[j - 1]]

    def oracle(x: str) -> str:
        return ACCEPT if witnesses(x) else REJECT

    def min_witness_energy(x: str) -> float:
        ws = witnesses(x)
        return min(i for i, _ in ws) / (len(x) + 1)

    return GalleryEntry(
        name="sym_coin",
        family=family,
        oracle=oracle,
        expectations=[
            Expectation("accepts: energy i_min/(n+1)",
                        lambda x: bool(witnesses(x)), energy=min_witness_energy),
            Expectation("accepts: gap at least 1/(n+1)",
                        lambda x: bool(witnesses(x)),
                        gap_lower=lambda x: 1.0 / (len(x) + 1)),
            Expectation("rejects: energy 2/3",
                        lambda x: not witnesses(x), energy=lambda x: 2.0 / 3.0),
        ],
        notes="basis curated to the pair-track chains and their landings; "
              "odd lengths use the same pair set (no middle self-pair)",
        validation_levels=lambda x: _sym_coin_validation_levels(x),
    )


def _sym_coin_validation_levels(x: str) -> list:
    """Per-track operator families on the full register space, for the
    unitarity/completeness report."""
    n = len(x)
    levels = []
    for (i, j) in _sym_coin_tracks(n)[:2]:  # two tracks suffice per input
        track = _SymCoinTrack(x, i, j)
        schema = BasisSchema([("sym", _SYM_SYMBOLS), ("pos", tuple(range(n + 2)))])

        def perm_of(stepper):
            return SparseOp.permutation(
                schema.dim,
                {schema.index(s): schema.index(stepper(s)) for s in schema.all_states()},
            )

        ops = {CENT: [perm_of(lambda s: (s[0], (s[1] + 1) % (n + 2)))]}
        for ch in ("a", "b"):
            ops[ch] = [perm_of(lambda s, ch=ch: track.sym_step(s, ch))]
        p = i / (n + 1)
        k1_rules, k2_rules = [], []
        for s in schema.all_states():
            sym, pos = s
            nxt = (sym, (pos + 1) % (n + 2))
            if pos == n + 1 and sym == "acc":
                k1_rules.append((schema.index(("acc", 0)), schema.index(s), math.sqrt(p)))
                k2_rules.append((schema.index(("rej", 0)), schema.index(s), math.sqrt(1 - p)))
            else:
                k1_rules.append((schema.index(nxt), schema.index(s), 1.0))
        ops[DOLLAR] = [
            SparseOp.from_rules(schema.dim, k1_rules),
            SparseOp.from_rules(schema.dim, k2_rules),
        ]
        levels.append(
            QqafLevel(schema=schema, alphabet=("a", "b"), ops=ops,
                      lam0=SparseHermitian.diagonal(np.ones(schema.dim)),
                      name=f"sym_coin[{i},{j}]")
        )
    return levels


# ---------------------------------------------------------------------------
# Entry: unary subset sum (promise problem)
# ---------------------------------------------------------------------------

def parse_usubsum(x: str):
    """Split 0^t # 1^(n1) # ... # 1^(nk); PromiseError on malformed shapes."""
    blocks = x.split("#")
    if len(blocks) < 2:
        raise PromiseError("need at least one # separator")
    zeros, ones = blocks[0], blocks[1:]
    if not zeros or set(zeros) != {"0"}:
        raise PromiseError("first block must be 0^t with t >= 1")
    counts = []
    for b in ones:
        if not b or set(b) != {"1"}:
            raise PromiseError("later blocks must be 1^n with n >= 1")
        counts.append(len(b))
    return len(zeros), counts


def usubsum_subset_count(t: int, counts: list) -> int:
    k = len(counts)
    hits = 0
    for mask in range(1, 2**k):
        total = sum(counts[i] for i in range(k) if mask >> i & 1)
        if total == t:
            hits += 1
    return hits


class _USubSumTrack:
    """Counter automaton of one subset choice s over registers (i, j).

    i counts separators (mod k+1), j accumulates +1 per 0 in the first block
    and -1 per 1 inside chosen blocks, cyclically wrapped on [-kl, t].
    """

    def __init__(self, x: str, t: int, counts: list, chosen: frozenset):
        self.x = x
        self.t = t
        self.k = len(counts)
        self.l = max(counts)
        self.chosen = chosen
        self.j_span = self.k * self.l + self.t + 1  # covers [-kl, t]

    def _wrap_j(self, j: int) -> int:
        lo = -self.k * self.l
        return (j - lo) % self.j_span + lo

    def step(self, state, ch: str, reverse: bool = False):
        i, j = state
        sign = -1 if reverse else 1
        if ch == "#":
            return ((i + sign) % (self.k + 1), j)
        if ch == "0":
            if i == 0:
                return (i, self._wrap_j(j + sign))
            return state
        if ch == "1":
            if i in self.chosen:
                return (i, self._wrap_j(j - sign))
            return state
        raise GalleryError(f"bad symbol {ch!r}")

    def land(self, state=(0, 0)):
        for ch in self.x:
            state = self.step(state, ch)
        return state

    def chase_back(self, state):
        for ch in reversed(self.x):
            state = self.step(state, ch, reverse=True)
        return state


def _build_usubsum() -> GalleryEntry:
    def selector_eval(x: str) -> int:
        t, counts = parse_usubsum(x)
        return pair_index(pair_index(t, len(counts)), max(counts))

    def build(x: str) -> AeqsInstance:
        t, counts = parse_usubsum(x)
        k, l = len(counts), max(counts)
        j_labels = tuple(range(-k * l, t + 1))
        subsets = ["".join(bits) for bits in itertools.product("01", repeat=k)]

        states = []
        tracks = {}
        for s in subsets:
            chosen = frozenset(i + 1 for i, bit in enumerate(s) if bit == "1")
            track = _USubSumTrack(x, t, counts, chosen)
            tracks[s] = track
            landing = track.land()
            states.append((s, 0, 0, 0, 0))
            if landing != (0, 0):
                states.append((s, landing[0], landing[1], 0, 0))
        schema = BasisSchema(
            [
                ("s", tuple(subsets)),
                ("i", tuple(range(k + 1))),
                ("j", j_labels),
                ("i0", tuple(range(k + 1))),
                ("j0", j_labels),
            ],
            states=states,
        )

        zero_track = "0" * k
        q0 = {(s, k, 0, 0, 0) for s in subsets}

        diag = np.zeros(schema.dim)
        for idx, st in enumerate(schema.all_states()):
            s, i, j, _a, _b = st
            if st in q0:
                diag[idx] = 0.0
                continue
            start = tracks[s].chase_back((i, j))
            if s == zero_track and start == (0, 0):
                diag[idx] = 0.5
            else:
                diag[idx] = 1.0
        h_fin = SparseHermitian.diagonal(diag)

        s_acc = {(s, k, 0, 0, 0) for s in subsets if s != zero_track}
        s_rej = {(zero_track, k, t, 0, 0)}
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, (zero_track, 0, 0, 0, 0)),
            h_fin=h_fin,
            s_acc=schema.indices_of(s_acc),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    def promise(x: str) -> bool:
        try:
            t, counts = parse_usubsum(x)
        except PromiseError:
            return False
        return usubsum_subset_count(t, counts) <= 1

    family = AeqsFamily(
        alphabet=("0", "1", "#"),
        selector=Selector(selector_eval, "n = <t, k, l>"),
        builder=build,
        promise=promise,
        tags=("1qqaf", "linsize", "constgap"),
        name="usubsum",
    )

    def oracle(x: str) -> str:
        try:
            t, counts = parse_usubsum(x)
        except PromiseError:
            return NOT_PROMISED
        hits = usubsum_subset_count(t, counts)
        if hits > 1:
            return NOT_PROMISED
        return ACCEPT if hits == 1 else REJECT

    return GalleryEntry(
        name="usubsum",
        family=family,
        oracle=oracle,
        expectations=[
            Expectation("accepts: ground energy 0",
                        lambda x: oracle(x) == ACCEPT, energy=lambda x: 0.0),
            Expectation("rejects: ground energy 1/2",
                        lambda x: oracle(x) == REJECT, energy=lambda x: 0.5),
            Expectation("gap at least 1/2 on both sides",
                        lambda x: oracle(x) != NOT_PROMISED,
                        gap_lower=lambda x: 0.5),
        ],
        notes="basis curated to subset-track starts and landings; the "
              "rejection landing carries counter value t (the idle track "
              "accumulates the full first block)",
        validation_levels=lambda x: _usubsum_validation_levels(x),
    )


def _usubsum_validation_levels(x: str) -> list:
    t, counts = parse_usubsum(x)
    k, l = len(counts), max(counts)
    levels = []
    for s in ["1" + "0" * (k - 1), "0" * k]:
        chosen = frozenset(i + 1 for i, bit in enumerate(s) if bit == "1")
        track = _USubSumTrack(x, t, counts, chosen)
        schema = BasisSchema([("i", tuple(range(k + 1))), ("j", tuple(range(-k * l, t + 1)))])
        ops = {CENT: SparseOp.identity(schema.dim), DOLLAR: SparseOp.identity(schema.dim)}
        for sym in ("0", "1", "#"):
            ops[sym] = SparseOp.permutation(
                schema.dim,
                {schema.index(st): schema.index(track.step(st, sym))
                 for st in schema.all_states()},
            )
        levels.append(
            MoqqafLevel(schema=schema, alphabet=("0", "1", "#"), ops=ops,
                        lam0=SparseHermitian.diagonal(np.ones(schema.dim)),
                        name=f"usubsum[s={s}] on {x!r}")
        )
    return levels


# ---------------------------------------------------------------------------
# Entry: multiple duplication (promise problem)
# ---------------------------------------------------------------------------

def parse_multdup(x: str):
    blocks = x.split("#")
    if len(blocks) < 2:
        raise PromiseError("need at least one # separator")
    l = len(blocks[0])
    if l == 0 or any(len(b) != l for b in blocks):
        raise PromiseError("blocks must share a positive common length")
    if any(set(b) - {"0", "1"} for b in blocks):
        raise PromiseError("blocks must be binary")
    return blocks


def multdup_differences(blocks: list) -> list:
    w0 = blocks[0]
    return [
        (i, j + 1)
        for i in range(1, len(blocks))
        for j in range(len(w0))
        if blocks[i][j] != w0[j]
    ]


_MD_SYMBOLS = ("0", "1", "B")


class _MultDupTrack:
    """Comparison automaton of one pair (block i, cell j) over registers
    (symbol, separators-seen, cell-in-block, position)."""

    def __init__(self, blocks: list, i: int, j: int):
        self.blocks = blocks
        self.x = "#".join(blocks)
        self.i, self.j = i, j
        self.k = len(blocks) - 1
        self.l = len(blocks[0])
        self.n_pos = len(self.x) + 2

    def _sym_map(self, sym, h, r, c):
        # Recording swap at (w0)_j, comparison swap at (w_i)_j.
        if h == 0 and r == self.j:
            return {"B": c, c: "B"}.get(sym, sym)
        if h == self.i and r == self.j and self.i > 0:
            other = "1" if c == "0" else "0"
            return {c: c, other: "B", "B": other}[sym]
        return sym

    def step(self, state, c: str):
        """Per-symbol permutation of (sym, block-counter, cell-counter, pos)."""
        sym, h, r, pos = state
        nxt = (pos + 1) % self.n_pos
        if c == "#":
            # Separator: bump the block counter, rewind the in-block counter
            # (full blocks arrive with r = l, which maps back to 0).
            return (sym, (h + 1) % (self.k + 1), (r - self.l) % (self.l + 1), nxt)
        r2 = (r + 1) % (self.l + 1)
        return (self._sym_map(sym, h, r2, c), h, r2, nxt)

    def forward_pass(self, state):
        sym, h, r, pos = state
        state = (sym, h, r, (pos + 1) % self.n_pos)   # cent advances
        for c in self.x:
            state = self.step(state, c)
        # Endmarker: reset the in-block counter (shift by -l mod l+1) and wrap.
        sym, h, r, pos = state
        return (sym, h, (r - self.l) % (self.l + 1), (pos + 1) % self.n_pos)

    def backward_pass(self, target):
        base_pos = (target[3] - (len(self.x) + 2)) % self.n_pos
        for sym in _MD_SYMBOLS:
            for h in range(self.k + 1):
                for r in range(self.l + 1):
                    cand = (sym, h, r, base_pos)
                    if self.forward_pass(cand) == target:
                        return cand
        raise GalleryError("backward chase failed for multdup track")


def _build_multdup() -> GalleryEntry:
    def selector_eval(x: str) -> int:
        blocks = parse_multdup(x)
        return pair_index(len(blocks) - 1, len(blocks[0]))

    def build(x: str) -> AeqsInstance:
        blocks = parse_multdup(x)
        k, l = len(blocks) - 1, len(blocks[0])
        tracks = [(0, 0)] + [(i, j) for i in range(1, k + 1) for j in range(1, l + 1)]

        states = []
        machines = {}
        for (i, j) in tracks:
            start = ("B", 0, 0, 0)
            m = _MultDupTrack(blocks, i, j)
            machines[(i, j)] = m
            landing = m.forward_pass(start)
            states.append((i, j) + start + ("B", 0, 0, 0))
            if landing != start:
                states.append((i, j) + landing + ("B", 0, 0, 0))
        n_pos = len(x) + 2
        schema = BasisSchema(
            [
                ("i", tuple(range(k + 1))),
                ("j", tuple(range(l + 1))),
                ("sym", _MD_SYMBOLS),
                ("h", tuple(range(k + 1))),
                ("r", tuple(range(l + 1))),
                ("pos", tuple(range(n_pos))),
                ("sym0", _MD_SYMBOLS),
                ("h0", tuple(range(k + 1))),
                ("r0", tuple(range(l + 1))),
                ("pos0", tuple(range(n_pos))),
            ],
            states=states,
        )

        q0 = {(i, j, "B", k, 0, 0, "B", 0, 0, 0)
              for i in range(1, k + 1) for j in range(1, l + 1)}
        # Lambda0 = I - (1/2)|0,0,xi0,xi0><...|: the deformation sits on the
        # idle track's start and surfaces at whatever that chain lands on.
        diag = np.zeros(schema.dim)
        for idx, st in enumerate(schema.all_states()):
            if st in q0:
                diag[idx] = 0.0
                continue
            i, j = st[0], st[1]
            reg = st[2:6]
            start = machines[(i, j)].backward_pass(reg)
            diag[idx] = 0.5 if (i, j) == (0, 0) and start == ("B", 0, 0, 0) else 1.0
        h_fin = SparseHermitian.diagonal(diag)

        s_acc = q0
        s_rej = {(0, 0, "B", k, 0, 0, "B", 0, 0, 0)}
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, (0, 0, "B", 0, 0, 0, "B", 0, 0, 0)),
            h_fin=h_fin,
            s_acc=schema.indices_of(s_acc),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    def promise(x: str) -> bool:
        try:
            blocks = parse_multdup(x)
        except PromiseError:
            return False
        return len(multdup_differences(blocks)) <= 1

    family = AeqsFamily(
        alphabet=("0", "1", "#"),
        selector=Selector(selector_eval, "n = <k, l>"),
        builder=build,
        promise=promise,
        tags=("1qqaf", "logsize", "constgap"),
        name="multdup",
    )

    def oracle(x: str) -> str:
        try:
            blocks = parse_multdup(x)
        except PromiseError:
            return NOT_PROMISED
        diffs = multdup_differences(blocks)
        if len(diffs) > 1:
            return NOT_PROMISED
        return ACCEPT if not diffs else REJECT

    return GalleryEntry(
        name="multdup",
        family=family,
        oracle=oracle,
        # The construction marks difference witnesses as accepting, i.e. it
        # accepts the complement side of the duplication problem.
        orientation="swapped",
        expectations=[
            Expectation("all blocks equal: ground energy 1/2",
                        lambda x: oracle(x) == ACCEPT, energy=lambda x: 0.5),
            Expectation("one difference: ground energy 0",
                        lambda x: oracle(x) == REJECT, energy=lambda x: 0.0),
            Expectation("gap at least 1/2 on promised inputs",
                        lambda x: oracle(x) != NOT_PROMISED,
                        gap_lower=lambda x: 0.5),
        ],
        notes="verbatim orientation: the accepting space marks inequality "
              "witnesses (the complement side of the duplication problem); "
              "promise tightened to at most one differing symbol so the "
              "witness, and with it the ground state, stays unique",
        validation_levels=lambda x: _multdup_validation_levels(x),
    )


def _multdup_validation_levels(x: str) -> list:
    blocks = parse_multdup(x)
    k, l = len(blocks) - 1, len(blocks[0])
    m = _MultDupTrack(blocks, 1, 1)
    n_pos = len(x) + 2
    schema = BasisSchema([
        ("sym", _MD_SYMBOLS), ("h", tuple(range(k + 1))),
        ("r", tuple(range(l + 1))), ("pos", tuple(range(n_pos))),
    ])

    def perm_of(fn):
        return SparseOp.permutation(
            schema.dim, {schema.index(s): schema.index(fn(s)) for s in schema.all_states()}
        )

    ops = {CENT: perm_of(lambda s: (s[0], s[1], s[2], (s[3] + 1) % n_pos))}
    for ch in ("0", "1", "#"):
        ops[ch] = perm_of(lambda s, ch=ch: m.step(s, ch))
    ops[DOLLAR] = perm_of(
        lambda s: (s[0], s[1], (s[2] - l) % (l + 1), (s[3] + 1) % n_pos)
    )
    return [MoqqafLevel(schema=schema, alphabet=("0", "1", "#"), ops=ops,
                        lam0=SparseHermitian.diagonal(np.ones(schema.dim)),
                        name=f"multdup[1,1] (k={k}, l={l})")]


def _build_multdup_complement() -> GalleryEntry:
    base = _build_multdup()
    entry = GalleryEntry(
        name="multdup_complement",
        family=complement(base.family),
        oracle=base.oracle,
        orientation="direct",
        expectations=[
            Expectation("all blocks equal: ground energy 1/2",
                        lambda x: base.oracle(x) == ACCEPT, energy=lambda x: 0.5),
            Expectation("one difference: ground energy 0",
                        lambda x: base.oracle(x) == REJECT, energy=lambda x: 0.0),
        ],
        notes="criteria-swapped wrapper whose accept side is the duplication "
              "problem's own accept side (all blocks equal)",
        validation_levels=base.validation_levels,
    )
    return entry


# ---------------------------------------------------------------------------
# Entry: marked even-length palindromes (full surface space, verbatim)
# ---------------------------------------------------------------------------

_PAL_Q = ("q1", "q2", "q3", "q4", "q5")
_PAL_ROT = {
    # column action of U_a / U_b on (q1, q2, q3); q4, q5 untouched
    "a": {"q1": [("q1", 0.8), ("q2", -0.6)], "q2": [("q1", 0.6), ("q2", 0.8)],
          "q3": [("q3", 1.0)]},
    "b": {"q1": [("q1", 0.8), ("q3", -0.6)], "q2": [("q2", 1.0)],
          "q3": [("q1", 0.6), ("q3", 0.8)]},
    "#": {"q1": [("q1", 1.0)], "q2": [("q2", 1.0)], "q3": [("q3", 1.0)]},
}
_PAL_DECAY_KEEP = 1.0 / 25.0
_PAL_DECAY_SWITCH = 4.0 * math.sqrt(39.0) / 25.0


def _pal_rotation(sym: str, invert: bool):
    rot = _PAL_ROT[sym]
    if not invert:
        return rot
    out = {q: [] for q in ("q1", "q2", "q3")}
    for src, targets in rot.items():
        for dst, amp in targets:
            out[dst].append((src, amp))
    return out


def _pal_level(x: str) -> TwoWayQqafLevel:
    n = len(x)
    hash_pos = x.index("#") + 1 if "#" in x else n + 1
    phases = (0, 1, 2)
    positions = tuple(range(n + 2))
    inner = tuple(
        (q, k, q0, k0, h0)
        for q in _PAL_Q for k in phases
        for q0 in _PAL_Q for k0 in phases for h0 in positions
    )
    xi0 = ("q1", 1, 0)

    def steps(_x: str) -> int:
        return 2 * n + 3

    def lam0_builder(_x, schema: BasisSchema) -> SparseHermitian:
        diag = np.ones(schema.dim)
        idx = schema.index((("q1", 1, "q1", 1, 0), 0))
        diag[idx] = _PAL_DECAY_KEEP
        return SparseHermitian.diagonal(diag)

    def first_step_builder(_x, schema: BasisSchema) -> list:
        # Fixation pair folded with the endmarker scan (head 0 -> 1): keep
        # states whose leading registers already read xi0, park the rest by
        # swapping the two register groups.
        k1, k2 = [], []
        n_pos = n + 2
        for col, ((q, k, q0, k0, h0), pos) in enumerate(
            (st for st in schema.all_states())
        ):
            if (q, k, pos) == xi0:
                row = schema.index(((q, k, q0, k0, h0), 1))
                k1.append((row, col, 1.0))
            else:
                row = schema.index(((q0, k0, q, k, pos), (h0 + 1) % n_pos))
                k2.append((row, col, 1.0))
        return [
            SparseOp.from_rules(schema.dim, k1),
            SparseOp.from_rules(schema.dim, k2),
        ]

    def step_builder(_x, schema: BasisSchema) -> list:
        n_pos = n + 2
        k1_rules, k2_rules = [], []
        for col, ((q, k, q0, k0, h0), pos) in enumerate(schema.all_states()):
            frozen = (q0, k0, h0) != xi0

            def emit(rules, q2, k2_, pos2, amp):
                row = schema.index(((q2, k2_, q0, k0, h0), pos2))
                rules.append((row, col, amp))

            if frozen:
                emit(k1_rules, q, k, pos, 1.0)       # parked mass stays put
                continue
            nxt = (pos + 1) % n_pos
            if k == 1:
                if pos == n + 1:
                    if q == "q1":
                        emit(k1_rules, "q1", 0, 0, 1.0)
                    elif q in ("q2", "q3"):
                        emit(k1_rules, q, 2, 0, 1.0)
                    else:
                        emit(k1_rules, q, 1, 0, 1.0)
                elif pos == 0 or q in ("q4", "q5"):
                    emit(k1_rules, q, 1, nxt, 1.0)
                else:
                    sym = x[pos - 1]
                    rot = _pal_rotation(sym, invert=pos > hash_pos)
                    for dst, amp in rot[q]:
                        emit(k1_rules, dst, 1, nxt, amp)
            elif k == 0:
                emit(k2_rules, q, 0, nxt, 1.0)       # done states cycle on K2
            else:  # k == 2: decaying second phase
                if q in ("q2", "q3"):
                    partner = "q4" if q == "q2" else "q5"
                    if pos == n + 1:
                        emit(k1_rules, partner, 0, 0, 1.0)
                    else:
                        emit(k1_rules, q, 2, nxt, _PAL_DECAY_KEEP)
                        emit(k2_rules, partner, 2, nxt, _PAL_DECAY_SWITCH)
                elif q in ("q4", "q5"):
                    emit(k1_rules, q, 2, nxt, 1.0)
                else:
                    emit(k1_rules, q, 2, nxt, 1.0)
        return [
            SparseOp.from_rules(schema.dim, k1_rules),
            SparseOp.from_rules(schema.dim, k2_rules),
        ]

    return TwoWayQqafLevel(
        inner_labels=inner,
        alphabet=("a", "b", "#"),
        xi_size=2,
        steps=steps,
        lam0_builder=lam0_builder,
        first_step_builder=first_step_builder,
        step_builder=step_builder,
        directions=frozenset({0, +1}),
        name=f"pal_marked[n={n}]",
    )


def _build_pal_marked() -> GalleryEntry:
    from .qqa import generate_2qqaf

    levels: dict[str, TwoWayQqafLevel] = {}

    def level_for(x: str) -> TwoWayQqafLevel:
        if x not in levels:
            levels[x] = _pal_level(x)
        return levels[x]

    def build(x: str) -> AeqsInstance:
        level = level_for(x)
        generated = generate_2qqaf(level, x)
        schema = generated.basis
        s_acc = {(("q1", 0, "q1", 1, 0), 0)}
        s_rej = {(("q4", 0, "q1", 1, 0), 0), (("q5", 0, "q1", 1, 0), 0)}
        return AeqsInstance(
            size_bits=schema.size_bits,
            epsilon=DEFAULT_ACCURACY_BOUND,
            h_ini=initial_hamiltonian(schema, (("q1", 1, "q1", 1, 0), 0)),
            h_fin=generated.operator,
            s_acc=schema.indices_of(s_acc),
            s_rej=schema.indices_of(s_rej),
            schema=schema,
        )

    family = AeqsFamily(
        alphabet=("a", "b", "#"), selector=length_selector(), builder=build,
        tags=("ltime-2qqaf", "logsize"), name="pal_marked",
    )

    def oracle(x: str) -> str:
        if "#" not in x:
            return REJECT
        head, _, tail = x.partition("#")
        return ACCEPT if tail == head[::-1] and set(x) <= {"a", "b", "#"} else REJECT

    return GalleryEntry(
        name="pal_marked",
        family=family,
        oracle=oracle,
        findings_mode=True,
        expectations=[],
        notes="kept verbatim on the full surface-configuration space; the "
              "register-parking first step leaves dynamically unreachable "
              "sectors with zero weight, so the operator's ground space is "
              "wider than the intended accept/reject supports -- verify() "
              "reports this as a finding rather than adjusting the "
              "construction",
        validation_levels=lambda x: [level_for(x)],
    )


def pal_lambda_witness(x: str) -> float:
    """<xi0,xi0| Lambda0 |xi0,xi0> of the palindrome level; exactly 1/25."""
    level = _pal_level(x)
    schema = level.surface_schema(x)
    lam = level.lam0_builder(x, schema)
    idx = schema.index((("q1", 1, "q1", 1, 0), 0))
    dense_diag = dict(zip(zip(lam.rows, lam.cols), lam.vals))
    return float(np.real(dense_diag.get((idx, idx), 0.0)))


# ---------------------------------------------------------------------------
# Registry, sweeps, verification
# ---------------------------------------------------------------------------

_BUILDERS = {
    "l_prefix_0": lambda: _build_l_prefix("0"),
    "l_prefix_1": lambda: _build_l_prefix("1"),
    "equal": _build_equal,
    "sym_coin": _build_sym_coin,
    "pal_marked": _build_pal_marked,
    "usubsum": _build_usubsum,
    "multdup": _build_multdup,
    "multdup_complement": _build_multdup_complement,
}

GALLERY_NAMES = tuple(_BUILDERS)


def build(name: str) -> GalleryEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise GalleryError(
            f"unknown gallery entry {name!r}; known: {', '.join(GALLERY_NAMES)}"
        ) from None
    return builder()


def oracle_check(entry: GalleryEntry, x: str) -> str:
    return entry.oracle(x)


def strings_up_to(alphabet, max_len: int):
    for length in range(max_len + 1):
        for tup in itertools.product(alphabet, repeat=length):
            yield "".join(tup)


def usubsum_inputs(t_max: int, k_max: int, l_max: int, promised_only: bool = True):
    out = []
    for t in range(1, t_max + 1):
        for k in range(1, k_max + 1):
            for counts in itertools.product(range(1, l_max + 1), repeat=k):
                x = "0" * t + "".join("#" + "1" * c for c in counts)
                if not promised_only or usubsum_subset_count(t, list(counts)) <= 1:
                    out.append(x)
    return out


def multdup_inputs(k_max: int, l_max: int):
    """All promised inputs: identical blocks, or one single-symbol change."""
    out = []
    for k in range(1, k_max + 1):
        for l in range(1, l_max + 1):
            for bits in itertools.product("01", repeat=l):
                w = "".join(bits)
                out.append("#".join([w] * (k + 1)))
                for i in range(1, k + 1):
                    for j in range(l):
                        changed = w[:j] + ("1" if w[j] == "0" else "0") + w[j + 1:]
                        blocks = [w] * (k + 1)
                        blocks[i] = changed
                        out.append("#".join(blocks))
    return out


@dataclass
class VerifyRecord:
    x: str
    expected: str
    verdict: object

    @property
    def matched(self) -> bool:
        return self.verdict.outcome == self.expected


@dataclass
class VerifyReport:
    entry: str
    checked: int = 0
    skipped_unpromised: int = 0
    mismatches: list = field(default_factory=list)
    expectation_failures: list = field(default_factory=list)
    findings: list = field(default_factory=list)
    records: list = field(default_factory=list)
    expectation_hits: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.mismatches and not self.expectation_failures

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "entry": self.entry,
            "checked": self.checked,
            "skipped_unpromised": self.skipped_unpromised,
            "mismatches": self.mismatches,
            "expectation_failures": self.expectation_failures,
            "findings": self.findings,
            "passed": self.passed,
        }


def verify(entry: GalleryEntry, inputs) -> VerifyReport:
    """Sweep decide() against the classical oracle and the spectral claims.

    Promise-problem inputs outside the promise are skipped.  For entries in
    findings mode, deviations are accumulated as structured findings naming
    the construction instead of as mismatches.
    """
    report = VerifyReport(entry=entry.name)
    for x in inputs:
        expected = entry.expected_outcome(x)
        if expected == NOT_PROMISED:
            report.skipped_unpromised += 1
            continue
        verdict = entry.family.decide(x)
        report.checked += 1
        record = VerifyRecord(x=x, expected=expected, verdict=verdict)
        report.records.append(record)
        if verdict.outcome != expected:
            item = {
                "x": x,
                "expected": expected,
                "got": verdict.outcome,
                "ground_energy": verdict.ground_energy,
                "unique_ground": verdict.unique_ground,
            }
            if entry.findings_mode:
                item["finding"] = (
                    f"{entry.name}: ground-state support deviates from the "
                    f"construction's intended criteria space on {x!r}"
                )
                report.findings.append(item)
            else:
                report.mismatches.append(item)
        for exp in entry.expectations:
            if not exp.applies(x):
                continue
            report.expectation_hits[exp.description] = (
                report.expectation_hits.get(exp.description, 0) + 1
            )
            if exp.energy is not None:
                want = exp.energy(x)
                if abs(verdict.ground_energy - want) > exp.tolerance:
                    report.expectation_failures.append(
                        {"x": x, "expectation": exp.description,
                         "want_energy": want, "got_energy": verdict.ground_energy}
                    )
            if exp.gap_lower is not None:
                want = exp.gap_lower(x)
                if verdict.spectral_gap < want - exp.tolerance:
                    report.expectation_failures.append(
                        {"x": x, "expectation": exp.description,
                         "want_gap_at_least": want, "got_gap": verdict.spectral_gap}
                    )
    return report
