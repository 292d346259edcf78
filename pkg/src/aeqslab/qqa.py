"""Quantum quasi-automata: machine levels and Hamiltonian generation.

A quasi-automaton level is a quantum finite automaton stripped of initial and
halting semantics.  Reading the extended input (left endmarker, the symbols
of x, right endmarker) composes one quantum operation per symbol; applying
the composite to an initial mixture and sandwiching with the halting
projection yields a positive semidefinite Hamiltonian:

    E  =  Pi0 . A_cent_x_dollar(Lambda0) . Pi0

Levels come in three flavours: measure-once (one unitary per symbol), general
one-way (a Kraus family per symbol), and time-bounded two-way (per-input
Kraus families on a surface-configuration space with a circular tape).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .linalg import (
    CapacityError,
    SparseHermitian,
    dense_max,
    ilog,
    spectral_norm,
)

CENT = "cent"
DOLLAR = "dollar"

UNITARITY_TOL = 1e-9


class QqaError(Exception):
    pass


class UnknownSymbolError(QqaError):
    pass


# ---------------------------------------------------------------------------
# Basis schemas
# ---------------------------------------------------------------------------

class BasisSchema:
    """Named mixed-radix coordinates, most significant coordinate first.

    Each coordinate is (name, labels); a basis element is a tuple holding one
    label per coordinate.  By default the basis is the full product of the
    label sets, with the canonical linear index being the mixed-radix value.
    A curated schema restricts the basis to an explicit subset of tuples
    (used by constructions whose dynamically relevant sector is a small,
    exactly identified part of the full product space); the full-product
    index set is still recorded for provenance.
    """

    def __init__(self, coords, states=None):
        self.coords = tuple((str(name), tuple(labels)) for name, labels in coords)
        self._label_pos = [
            {label: i for i, label in enumerate(labels)} for _, labels in self.coords
        ]
        self.full_dim = 1
        for _, labels in self.coords:
            self.full_dim *= len(labels)
        if states is None:
            self.states = None
            self.dim = self.full_dim
            self._state_index = None
        else:
            self.states = [tuple(s) for s in states]
            if len(set(self.states)) != len(self.states):
                raise QqaError("curated basis contains duplicate tuples")
            self.dim = len(self.states)
            self._state_index = {s: i for i, s in enumerate(self.states)}

    @property
    def curated(self) -> bool:
        return self.states is not None

    @property
    def size_bits(self) -> int:
        """m = ceil(log2 |IND|): the qubit count of the enclosing register."""
        return ilog(self.full_dim)

    def index(self, state) -> int:
        state = tuple(state)
        if self._state_index is not None:
            try:
                return self._state_index[state]
            except KeyError:
                raise QqaError(f"state {state!r} not in curated basis") from None
        idx = 0
        for (name, labels), pos_map, part in zip(self.coords, self._label_pos, state):
            try:
                pos = pos_map[part]
            except KeyError:
                raise QqaError(f"label {part!r} invalid for coordinate {name!r}") from None
            idx = idx * len(labels) + pos
        return idx

    def state_of(self, idx: int):
        if self._state_index is not None:
            return self.states[idx]
        parts = []
        for _, labels in reversed(self.coords):
            parts.append(labels[idx % len(labels)])
            idx //= len(labels)
        return tuple(reversed(parts))

    def contains(self, state) -> bool:
        state = tuple(state)
        if self._state_index is not None:
            return state in self._state_index
        if len(state) != len(self.coords):
            return False
        return all(part in pos for pos, part in zip(self._label_pos, state))

    def indices_of(self, states) -> frozenset:
        """Indices of the given tuples, silently skipping absent curated ones."""
        out = []
        for s in states:
            s = tuple(s)
            if self._state_index is not None and s not in self._state_index:
                continue
            out.append(self.index(s))
        return frozenset(out)

    def all_states(self):
        if self._state_index is not None:
            return list(self.states)
        return [self.state_of(i) for i in range(self.dim)]

    def describe(self) -> dict:
        return {
            "coordinates": [
                {"name": name, "radix": len(labels), "labels": [str(l) for l in labels]}
                for name, labels in self.coords
            ],
            "dim": self.dim,
            "full_dim": self.full_dim,
            "size_bits": self.size_bits,
            "curated": self.curated,
        }


def flat_schema(dim: int, name: str = "index") -> BasisSchema:
    return BasisSchema([(name, tuple(range(dim)))])


# ---------------------------------------------------------------------------
# Sparse general (non-Hermitian) operators
# ---------------------------------------------------------------------------

class SparseOp:
    """Light COO sparse complex matrix used for operator composition."""

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries=None):
        self.dim = int(dim)
        self.entries: dict = dict(entries or {})

    @classmethod
    def from_rules(cls, dim: int, rules: Iterable) -> "SparseOp":
        """rules: iterable of (row, col, amplitude); duplicates summed."""
        op = cls(dim)
        for r, c, a in rules:
            if not (0 <= r < dim and 0 <= c < dim):
                raise QqaError(f"entry ({r},{c}) out of range for dim {dim}")
            key = (int(r), int(c))
            op.entries[key] = op.entries.get(key, 0j) + complex(a)
        return op

    @classmethod
    def identity(cls, dim: int) -> "SparseOp":
        return cls(dim, {(i, i): 1.0 + 0j for i in range(dim)})

    @classmethod
    def permutation(cls, dim: int, mapping) -> "SparseOp":
        """mapping: col -> row; must be a bijection on range(dim)."""
        if len(mapping) != dim or set(mapping.values()) != set(range(dim)):
            raise QqaError("permutation mapping is not a bijection")
        return cls(dim, {(r, c): 1.0 + 0j for c, r in mapping.items()})

    @classmethod
    def from_dense(cls, mat: np.ndarray) -> "SparseOp":
        mat = np.asarray(mat, dtype=complex)
        op = cls(mat.shape[0])
        rs, cs = np.nonzero(mat)
        for r, c in zip(rs, cs):
            op.entries[(int(r), int(c))] = complex(mat[r, c])
        return op

    def __matmul__(self, other: "SparseOp") -> "SparseOp":
        if self.dim != other.dim:
            raise QqaError("dimension mismatch in sparse product")
        by_row: dict = {}
        for (r, c), a in other.entries.items():
            by_row.setdefault(r, []).append((c, a))
        out = SparseOp(self.dim)
        ent = out.entries
        for (r, k), a in self.entries.items():
            for c, b in by_row.get(k, ()):
                key = (r, c)
                ent[key] = ent.get(key, 0j) + a * b
        out.prune()
        return out

    def adjoint(self) -> "SparseOp":
        return SparseOp(self.dim, {(c, r): a.conjugate() for (r, c), a in self.entries.items()})

    def scale(self, s: complex) -> "SparseOp":
        return SparseOp(self.dim, {k: s * a for k, a in self.entries.items()})

    def add(self, other: "SparseOp") -> "SparseOp":
        out = SparseOp(self.dim, dict(self.entries))
        for k, a in other.entries.items():
            out.entries[k] = out.entries.get(k, 0j) + a
        out.prune()
        return out

    def prune(self, tol: float = 1e-15) -> None:
        dead = [k for k, a in self.entries.items() if abs(a) <= tol]
        for k in dead:
            del self.entries[k]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.zeros(self.dim, dtype=complex)
        for (r, c), a in self.entries.items():
            y[r] += a * x[c]
        return y

    def to_dense(self) -> np.ndarray:
        if self.dim > dense_max():
            raise CapacityError(f"densifying dimension {self.dim} exceeds threshold")
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for (r, c), a in self.entries.items():
            m[r, c] = a
        return m

    def project_rows(self, keep) -> "SparseOp":
        keep = set(keep)
        return SparseOp(self.dim, {k: a for k, a in self.entries.items() if k[0] in keep})

    def nnz(self) -> int:
        return len(self.entries)


def gram_defect(kraus: list) -> float:
    """Bound on the completeness defect || sum_j K_j^dag K_j - I ||.

    Exact for column-orthogonal families (everything generated here); a
    Gershgorin upper bound otherwise.
    """
    dim = kraus[0].dim
    gram = SparseOp(dim)
    for k in kraus:
        gram = gram.add(k.adjoint() @ k)
    for i in range(dim):
        gram.entries[(i, i)] = gram.entries.get((i, i), 0j) - 1.0
    gram.prune()
    row_sums = np.zeros(dim)
    for (r, _c), a in gram.entries.items():
        row_sums[r] += abs(a)
    return float(row_sums.max(initial=0.0))


def sparse_conjugate(kraus: list, h: dict) -> dict:
    """Apply the channel  H -> sum_j K_j H K_j^dag  to a COO-dict Hermitian H."""
    out: dict = {}
    for k in kraus:
        by_col: dict = {}
        for (r, c), a in k.entries.items():
            by_col.setdefault(c, []).append((r, a))
        # K H: rows of H hit by matching K columns.
        kh: dict = {}
        for (r, c), a in h.items():
            for rr, ka in by_col.get(r, ()):
                key = (rr, c)
                kh[key] = kh.get(key, 0j) + ka * a
        # (K H) K^dag.
        for (r, c), a in kh.items():
            for cc, ka in by_col.get(c, ()):
                key = (r, cc)
                out[key] = out.get(key, 0j) + a * ka.conjugate()
    return {k: v for k, v in out.items() if abs(v) > 1e-16}


def _hermitian_to_dict(lam: SparseHermitian) -> dict:
    h = {}
    for r, c, v in zip(lam.rows, lam.cols, lam.vals):
        h[(int(r), int(c))] = complex(v)
        if r != c:
            h[(int(c), int(r))] = complex(v).conjugate()
    return h


def _dict_to_sparse_hermitian(dim: int, h: dict) -> SparseHermitian:
    items = [(r, c, a) for (r, c), a in h.items() if r <= c]
    if not items:
        return SparseHermitian(dim)
    rows, cols, vals = zip(*items)
    return SparseHermitian(dim, rows, cols, vals)


def dict_trace(h: dict) -> float:
    return float(sum(a.real for (r, c), a in h.items() if r == c))


# ---------------------------------------------------------------------------
# Levels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Selector:
    """Maps each input string to the machine index n that processes it."""

    evaluator: Callable[[str], int]
    description: str = ""

    def __call__(self, x: str) -> int:
        n = self.evaluator(x)
        return int(n)


def length_selector() -> Selector:
    return Selector(len, "n = |x|")


@dataclass
class MoqqafLevel:
    """Measure-once level: one sparse unitary per extended-alphabet symbol."""

    schema: BasisSchema
    alphabet: tuple
    ops: dict                      # symbol -> SparseOp, keys CENT/DOLLAR/chars
    lam0: SparseHermitian
    q0_indices: frozenset = frozenset()
    name: str = "moqqaf"

    @property
    def dim(self) -> int:
        return self.schema.dim

    @property
    def has_dollar(self) -> bool:
        return DOLLAR in self.ops

    def kraus(self, symbol: str) -> list:
        try:
            return [self.ops[symbol]]
        except KeyError:
            raise UnknownSymbolError(f"level {self.name!r} has no operator for {symbol!r}") from None


@dataclass
class QqafLevel:
    """General one-way level: a Kraus family per symbol."""

    schema: BasisSchema
    alphabet: tuple
    ops: dict                      # symbol -> list[SparseOp]
    lam0: SparseHermitian
    q0_indices: frozenset = frozenset()
    name: str = "qqaf"

    @property
    def dim(self) -> int:
        return self.schema.dim

    @property
    def has_dollar(self) -> bool:
        return DOLLAR in self.ops

    def kraus(self, symbol: str) -> list:
        try:
            return list(self.ops[symbol])
        except KeyError:
            raise UnknownSymbolError(f"level {self.name!r} has no operator for {symbol!r}") from None


@dataclass
class TwoWayQqafLevel:
    """Time-bounded two-way level on a surface-configuration space.

    The surface space for input x is inner_labels x positions [0, |x|+1] with
    a circular tape (positions advance mod |x|+2).  Step operators may be
    given either through a local transition table

        delta(q, scanned_symbol, j) -> [(p, d, amplitude), ...]

    or, for constructions whose moves depend on more context than the scanned
    symbol, through a direct per-input builder returning sparse operators on
    the surface space.  The first move is its own Kraus family.
    """

    inner_labels: tuple
    alphabet: tuple
    xi_size: int
    steps: Callable[[str], int]
    lam0_builder: Callable = None
    first_step_builder: Callable = None
    step_builder: Callable = None
    delta: Callable = None
    q0_builder: Callable = None
    directions: frozenset = frozenset({-1, 0, +1})
    name: str = "2qqaf"

    @property
    def is_one_point_five_way(self) -> bool:
        return self.directions == frozenset({0, +1})

    def surface_schema(self, x: str) -> BasisSchema:
        positions = tuple(range(len(x) + 2))
        return BasisSchema([("inner", self.inner_labels), ("pos", positions)])

    def build_step_kraus(self, x: str, schema: BasisSchema) -> list:
        if self.step_builder is not None:
            return self.step_builder(x, schema)
        if self.delta is None:
            raise QqaError("level defines neither step_builder nor delta")
        n_pos = len(x) + 2
        ops = []
        for j in range(self.xi_size):
            rules = []
            for q in self.inner_labels:
                for pos in range(n_pos):
                    sym = CENT if pos == 0 else (DOLLAR if pos == n_pos - 1 else x[pos - 1])
                    for (p, d, amp) in self.delta(q, sym, j):
                        if d not in self.directions:
                            raise QqaError(f"head move {d} outside direction set")
                        row = schema.index((p, (pos + d) % n_pos))
                        col = schema.index((q, pos))
                        rules.append((row, col, amp))
            ops.append(SparseOp.from_rules(schema.dim, rules))
        return ops

    def build_first_kraus(self, x: str, schema: BasisSchema) -> list:
        if self.first_step_builder is None:
            return [SparseOp.identity(schema.dim)]
        return self.first_step_builder(x, schema)


@dataclass
class GeneratedHamiltonian:
    """A generated operator together with its basis schema and provenance."""

    operator: SparseHermitian
    basis: BasisSchema
    provenance: str

    @property
    def dim(self) -> int:
        return self.operator.dim


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class SymbolDefect:
    symbol: str
    defect: float
    kraus_count: int


@dataclass
class ValidationReport:
    level_name: str
    defects: list = field(default_factory=list)
    lam0_min_eigenvalue: float = 0.0
    tolerance: float = UNITARITY_TOL

    @property
    def passed(self) -> bool:
        return (
            all(d.defect <= self.tolerance for d in self.defects)
            and self.lam0_min_eigenvalue >= -self.tolerance
        )

    def worst(self) -> float:
        return max((d.defect for d in self.defects), default=0.0)


def validate_level(level, x: str | None = None) -> ValidationReport:
    """Report per-symbol completeness/unitarity defects; pass iff all tiny.

    For one-way levels the defect is ||U'U - I|| (single unitary) or a bound
    on ||sum K'K - I|| (Kraus family).  Two-way levels are validated for a
    specific input x since their operators are per-input; x defaults to the
    empty string.
    """
    report = ValidationReport(level_name=getattr(level, "name", "level"))

    if isinstance(level, TwoWayQqafLevel):
        x = x if x is not None else ""
        schema = level.surface_schema(x)
        first = level.build_first_kraus(x, schema)
        steps = level.build_step_kraus(x, schema)
        report.defects.append(SymbolDefect(CENT, gram_defect(first), len(first)))
        report.defects.append(SymbolDefect("step", gram_defect(steps), len(steps)))
        lam0 = level.lam0_builder(x, schema)
    else:
        for symbol in level.ops:
            family = level.kraus(symbol)
            if len(family) == 1 and family[0].dim <= dense_max():
                u = family[0].to_dense()
                defect = spectral_norm(u.conj().T @ u - np.eye(u.shape[0]))
            else:
                defect = gram_defect(family)
            report.defects.append(SymbolDefect(symbol, float(defect), len(family)))
        lam0 = level.lam0

    if lam0.dim <= dense_max():
        report.lam0_min_eigenvalue = float(np.linalg.eigvalsh(lam0.to_dense())[0])
    else:
        # Gershgorin fallback: exact for diagonal initial mixtures.
        diag = np.zeros(lam0.dim)
        off = np.zeros(lam0.dim)
        for r, c, v in zip(lam0.rows, lam0.cols, lam0.vals):
            if r == c:
                diag[r] = v.real
            else:
                off[r] += abs(v)
                off[c] += abs(v)
        report.lam0_min_eigenvalue = float((diag - off).min())
    return report


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _check_symbols(level, x: str) -> None:
    for ch in x:
        if ch not in level.alphabet:
            raise UnknownSymbolError(f"symbol {ch!r} not in alphabet {level.alphabet}")


def _extended_symbols(level, x: str) -> list:
    symbols = [CENT] + list(x)
    if level.has_dollar:
        symbols.append(DOLLAR)
    return symbols


def generate_moqqaf(level: MoqqafLevel, x: str) -> GeneratedHamiltonian:
    """E = Pi0 . U_cent_x_dollar Lambda0 U^dag . Pi0 (right-to-left product)."""
    _check_symbols(level, x)
    u = SparseOp.identity(level.dim)
    for symbol in _extended_symbols(level, x):
        u = level.kraus(symbol)[0] @ u
    if level.q0_indices:
        keep = set(range(level.dim)) - set(level.q0_indices)
        u = u.project_rows(keep)
    e = sparse_conjugate([u], _hermitian_to_dict(level.lam0))
    return GeneratedHamiltonian(
        _dict_to_sparse_hermitian(level.dim, e), level.schema,
        f"{level.name} on {x!r}",
    )


def generate_qqaf(level: QqafLevel, x: str, *, return_trace: bool = False):
    """E = Pi0 . A_cent_x_dollar(Lambda0) . Pi0 with per-symbol Kraus sums."""
    _check_symbols(level, x)
    h = _hermitian_to_dict(level.lam0)
    for symbol in _extended_symbols(level, x):
        h = sparse_conjugate(level.kraus(symbol), h)
    trace_before = dict_trace(h)
    if level.q0_indices:
        dead = set(level.q0_indices)
        h = {k: v for k, v in h.items() if k[0] not in dead and k[1] not in dead}
    generated = GeneratedHamiltonian(
        _dict_to_sparse_hermitian(level.dim, h), level.schema,
        f"{level.name} on {x!r}",
    )
    if return_trace:
        return generated, trace_before
    return generated


def generate_2qqaf(level: TwoWayQqafLevel, x: str, *, return_trace: bool = False):
    """E = Pi0 . (A^(n,x))^t (Lambda~0) . Pi0 on the surface space of x."""
    _check_symbols(level, x)
    t = int(level.steps(x))
    if t < 0:
        raise QqaError("negative step count")
    schema = level.surface_schema(x)
    first = level.build_first_kraus(x, schema)
    steps = level.build_step_kraus(x, schema)
    lam0 = level.lam0_builder(x, schema)

    h = _hermitian_to_dict(lam0)
    h = sparse_conjugate(first, h)
    for _ in range(t):
        h = sparse_conjugate(steps, h)
    trace_before = dict_trace(h)
    if level.q0_builder is not None:
        dead = set(level.q0_builder(x, schema))
        if dead:
            h = {k: v for k, v in h.items() if k[0] not in dead and k[1] not in dead}
    generated = GeneratedHamiltonian(
        _dict_to_sparse_hermitian(schema.dim, h), schema,
        f"{level.name} on {x!r}",
    )
    if return_trace:
        return generated, trace_before
    return generated


def drop_right_endmarker(level: MoqqafLevel) -> MoqqafLevel:
    """Fold the right endmarker into the other operators.

    New operators:  U~_cent = U_dollar U_cent,  U~_sigma = U_dollar U_sigma
    U_dollar^dag.  The composed product over any extended input telescopes to
    the original one, so generated Hamiltonians are unchanged.
    """
    if not level.has_dollar:
        raise QqaError("level has no right-endmarker operator")
    u_dollar = level.ops[DOLLAR]
    u_dollar_adj = u_dollar.adjoint()
    new_ops = {CENT: u_dollar @ level.ops[CENT]}
    for symbol, op in level.ops.items():
        if symbol in (CENT, DOLLAR):
            continue
        new_ops[symbol] = (u_dollar @ op) @ u_dollar_adj
    return MoqqafLevel(
        schema=level.schema,
        alphabet=level.alphabet,
        ops=new_ops,
        lam0=level.lam0,
        q0_indices=level.q0_indices,
        name=f"{level.name}-dollarless",
    )
