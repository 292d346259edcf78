"""Machine specification documents: exact, auditable JSON machine files.

A document describes an automaton or quasi-automaton level with amplitude
expressions kept in exact form (rationals, square roots, products,
quotients, complex pairs) so machine files stay diffable and reviewable;
amplitudes are evaluated to floats at load time.

Supported kinds: "moqfa", "garbage-1qfa", "moqqaf".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .compilers import GarbageQfaSpec, MoQfaSpec
from .linalg import SparseHermitian
from .qqa import CENT, DOLLAR, BasisSchema, MoqqafLevel, SparseOp

DOCUMENT_SCHEMA = 1


class DocumentError(Exception):
    pass


def evaluate_amplitude(expr) -> complex:
    """Evaluate the restricted expression language to a complex number.

    Forms: plain numbers; {"rational": [p, q]}; {"sqrt": e};
    {"product": [e, ...]}; {"quotient": [e, e]}; {"complex": [re, im]}.
    """
    if isinstance(expr, bool):
        raise DocumentError("booleans are not amplitudes")
    if isinstance(expr, (int, float)):
        return complex(expr)
    if not isinstance(expr, dict) or len(expr) != 1:
        raise DocumentError(f"malformed amplitude expression: {expr!r}")
    (op, arg), = expr.items()
    if op == "rational":
        p, q = arg
        if q == 0:
            raise DocumentError("rational with zero denominator")
        return complex(p) / complex(q)
    if op == "sqrt":
        value = evaluate_amplitude(arg)
        if abs(value.imag) > 1e-15 or value.real < 0:
            raise DocumentError("sqrt argument must be a nonnegative real")
        return complex(math.sqrt(value.real))
    if op == "product":
        out = 1 + 0j
        for term in arg:
            out *= evaluate_amplitude(term)
        return out
    if op == "quotient":
        num, den = (evaluate_amplitude(a) for a in arg)
        if den == 0:
            raise DocumentError("quotient by zero")
        return num / den
    if op == "complex":
        re, im = (evaluate_amplitude(a) for a in arg)
        for part in (re, im):
            if abs(part.imag) > 1e-15:
                raise DocumentError("complex parts must be real expressions")
        return complex(re.real, im.real)
    raise DocumentError(f"unknown amplitude operator {op!r}")


_SYMBOL_KEYS = {"cent": CENT, "dollar": DOLLAR}


def _symbol_key(raw: str) -> str:
    return _SYMBOL_KEYS.get(raw, raw)


@dataclass
class MachineSpecDocument:
    kind: str
    name: str
    alphabet: tuple
    raw: dict

    @classmethod
    def from_json(cls, text: str) -> "MachineSpecDocument":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise DocumentError(f"invalid JSON: {err}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "MachineSpecDocument":
        if not isinstance(raw, dict):
            raise DocumentError("document must be a JSON object")
        if raw.get("schema") != DOCUMENT_SCHEMA:
            raise DocumentError(f"unsupported document schema {raw.get('schema')!r}")
        kind = raw.get("kind")
        if kind not in ("moqfa", "garbage-1qfa", "moqqaf"):
            raise DocumentError(f"unknown machine kind {kind!r}")
        alphabet = raw.get("alphabet")
        if not isinstance(alphabet, list) or not all(isinstance(s, str) for s in alphabet):
            raise DocumentError("alphabet must be a list of symbols")
        return cls(kind=kind, name=str(raw.get("name", kind)),
                   alphabet=tuple(alphabet), raw=raw)

    # -- realizations -----------------------------------------------------

    def to_moqfa(self) -> MoQfaSpec:
        if self.kind != "moqfa":
            raise DocumentError(f"document kind is {self.kind!r}, not moqfa")
        raw = self.raw
        n = int(raw["states"])
        ops = {}
        for sym_raw, entries in raw["operators"].items():
            u = np.zeros((n, n), dtype=complex)
            for row, col, expr in entries:
                u[int(row), int(col)] += evaluate_amplitude(expr)
            ops[_symbol_key(sym_raw)] = u
        return MoQfaSpec(
            n_states=n,
            alphabet=self.alphabet,
            ops=ops,
            q_acc=frozenset(int(q) for q in raw.get("accepting", [])),
            q_rej=frozenset(int(q) for q in raw.get("rejecting", [])),
            initial=int(raw.get("initial", 0)),
            error_bound=raw.get("error_bound"),
            name=self.name,
        )

    def to_garbage_qfa(self) -> GarbageQfaSpec:
        if self.kind != "garbage-1qfa":
            raise DocumentError(f"document kind is {self.kind!r}, not garbage-1qfa")
        raw = self.raw
        delta = {}
        for entry in raw["transitions"]:
            q, sym_raw, p, xi, expr = entry
            key = (int(q), _symbol_key(sym_raw))
            delta.setdefault(key, []).append((int(p), int(xi), evaluate_amplitude(expr)))
        return GarbageQfaSpec(
            n_states=int(raw["states"]),
            alphabet=self.alphabet,
            xi_size=int(raw["garbage_symbols"]),
            delta=delta,
            q_acc=frozenset(int(q) for q in raw.get("accepting", [])),
            q_rej=frozenset(int(q) for q in raw.get("rejecting", [])),
            initial=int(raw.get("initial", 0)),
            error_bound=raw.get("error_bound"),
            name=self.name,
        )

    def to_moqqaf(self) -> tuple:
        """Returns (level, criteria dict) for a measure-once level document."""
        if self.kind != "moqqaf":
            raise DocumentError(f"document kind is {self.kind!r}, not moqqaf")
        raw = self.raw
        coords = [
            (c["name"], tuple(_coerce_label(l) for l in c["labels"]))
            for c in raw["dimension_schema"]
        ]
        schema = BasisSchema(coords)

        def state_index(tup):
            return schema.index(tuple(_coerce_label(p) for p in tup))

        ops = {}
        for sym_raw, entries in raw["operators"].items():
            rules = []
            for row_tup, col_tup, expr in entries:
                rules.append((state_index(row_tup), state_index(col_tup),
                              evaluate_amplitude(expr)))
            ops[_symbol_key(sym_raw)] = SparseOp.from_rules(schema.dim, rules)

        mixture = raw.get("initial_mixture", {})
        diag = np.ones(schema.dim)
        for tup, expr in mixture.get("diagonal", []):
            value = evaluate_amplitude(expr)
            if abs(value.imag) > 1e-15:
                raise DocumentError("initial mixture must be real")
            diag[state_index(tup)] = value.real
        lam0 = SparseHermitian.diagonal(diag)

        q0 = frozenset(state_index(tup) for tup in raw.get("halting", []))
        level = MoqqafLevel(
            schema=schema, alphabet=self.alphabet, ops=ops, lam0=lam0,
            q0_indices=q0, name=self.name,
        )
        criteria = raw.get("criteria", {})
        acc = frozenset(state_index(t) for t in criteria.get("acc", []))
        rej = frozenset(state_index(t) for t in criteria.get("rej", []))
        return level, {"acc": acc, "rej": rej}


def _coerce_label(value):
    # JSON round-trips tuples as lists; labels may be ints or strings.
    if isinstance(value, list):
        return tuple(_coerce_label(v) for v in value)
    return value


def sparse_hermitian_to_json(h: SparseHermitian) -> list:
    """Upper-triangle triplets as [row, col, re, im] with full precision."""
    return [
        [int(r), int(c), float(v.real), float(v.imag)]
        for r, c, v in zip(h.rows, h.cols, h.vals)
    ]


def sparse_hermitian_from_json(dim: int, triplets: list) -> SparseHermitian:
    rows = [t[0] for t in triplets]
    cols = [t[1] for t in triplets]
    vals = [complex(t[2], t[3]) for t in triplets]
    return SparseHermitian(dim, rows, cols, vals)
