import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeqslab.linalg import SparseHermitian, spectral_norm
from aeqslab.qqa import (
    CENT,
    DOLLAR,
    BasisSchema,
    MoqqafLevel,
    QqafLevel,
    SparseOp,
    TwoWayQqafLevel,
    UnknownSymbolError,
    drop_right_endmarker,
    flat_schema,
    generate_2qqaf,
    generate_moqqaf,
    generate_qqaf,
    gram_defect,
    validate_level,
)

RNG = np.random.default_rng(11)


def random_unitary(n, rng=RNG):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestBasisSchema:
    def test_mixed_radix_index(self):
        schema = BasisSchema([("q", ("a", "b", "c")), ("pos", (0, 1))])
        assert schema.dim == 6
        # Most significant coordinate first.
        assert schema.index(("a", 0)) == 0
        assert schema.index(("a", 1)) == 1
        assert schema.index(("b", 0)) == 2
        assert schema.state_of(5) == ("c", 1)

    def test_round_trip(self):
        schema = BasisSchema([("x", (0, 1, 2)), ("y", ("u", "v")), ("z", (0, 1))])
        for i in range(schema.dim):
            assert schema.index(schema.state_of(i)) == i

    def test_curated(self):
        schema = BasisSchema([("x", (0, 1, 2))], states=[(2,), (0,)])
        assert schema.dim == 2
        assert schema.full_dim == 3
        assert schema.index((2,)) == 0
        assert schema.indices_of([(0,), (1,)]) == frozenset({1})

    def test_size_bits(self):
        assert flat_schema(12).size_bits == 4
        assert flat_schema(16).size_bits == 4


class TestSparseOp:
    def test_matmul_matches_dense(self):
        a = SparseOp.from_dense(random_unitary(5))
        b = SparseOp.from_dense(random_unitary(5))
        assert np.allclose((a @ b).to_dense(), a.to_dense() @ b.to_dense())

    def test_adjoint(self):
        a = SparseOp.from_dense(random_unitary(4))
        assert np.allclose(a.adjoint().to_dense(), a.to_dense().conj().T)

    def test_permutation_requires_bijection(self):
        with pytest.raises(Exception):
            SparseOp.permutation(2, {0: 0, 1: 0})

    def test_gram_defect_scaled_column(self):
        # Scaling one column of a unitary by 0.9 leaves ||U'U - I|| = 0.19.
        u = np.eye(3, dtype=complex)
        u[:, 1] *= 0.9
        defect = gram_defect([SparseOp.from_dense(u)])
        assert defect == pytest.approx(0.19, abs=1e-12)


def identity_level(dim=3, alphabet=("0", "1")):
    schema = flat_schema(dim)
    lam = np.ones(dim)
    lam[0] = 0.0
    ops = {sym: SparseOp.identity(dim) for sym in (CENT, DOLLAR, *alphabet)}
    return MoqqafLevel(schema=schema, alphabet=alphabet, ops=ops,
                       lam0=SparseHermitian.diagonal(lam), name="identity")


def random_moqqaf_level(dim=4, alphabet=("0", "1"), rng=RNG, q0=frozenset()):
    schema = flat_schema(dim)
    lam = np.ones(dim)
    lam[0] = 0.0
    ops = {sym: SparseOp.from_dense(random_unitary(dim, rng))
           for sym in (CENT, DOLLAR, *alphabet)}
    return MoqqafLevel(schema=schema, alphabet=alphabet, ops=ops,
                       lam0=SparseHermitian.diagonal(lam), q0_indices=q0,
                       name="random")


class TestGenerateMoqqaf:
    def test_identity_level_returns_lam0(self):
        level = identity_level()
        for x in ["", "0", "01", "110"]:
            e = generate_moqqaf(level, x)
            assert np.allclose(e.operator.to_dense(), level.lam0.to_dense())

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbolError):
            generate_moqqaf(identity_level(), "2")

    def test_spectrum_preserved_without_halting_set(self):
        # Unitary conjugation: sorted eigenvalues of E equal those of Lambda0.
        level = random_moqqaf_level()
        lam_vals = np.linalg.eigvalsh(level.lam0.to_dense())
        for x in ["", "0", "10", "011", "0101", "11010"]:
            e = generate_moqqaf(level, x)
            vals = np.linalg.eigvalsh(e.operator.to_dense())
            assert np.allclose(np.sort(vals), np.sort(lam_vals), atol=1e-8)

    def test_generated_operator_psd(self):
        level = random_moqqaf_level(q0=frozenset({1}))
        for x in ["", "01", "100"]:
            e = generate_moqqaf(level, x)
            assert np.linalg.eigvalsh(e.operator.to_dense())[0] >= -1e-9

    @given(st.integers(0, 2**32 - 1), st.text(alphabet="01", max_size=5))
    @settings(max_examples=20, deadline=None)
    def test_spectrum_preservation_property(self, seed, x):
        level = random_moqqaf_level(rng=np.random.default_rng(seed))
        lam_vals = np.sort(np.linalg.eigvalsh(level.lam0.to_dense()))
        vals = np.sort(np.linalg.eigvalsh(generate_moqqaf(level, x).operator.to_dense()))
        assert np.allclose(vals, lam_vals, atol=1e-8)


class TestGenerateQqaf:
    def test_singleton_kraus_matches_moqqaf(self):
        moqqaf = random_moqqaf_level()
        qqaf = QqafLevel(
            schema=moqqaf.schema, alphabet=moqqaf.alphabet,
            ops={sym: [op] for sym, op in moqqaf.ops.items()},
            lam0=moqqaf.lam0, name="singleton",
        )
        for x in ["", "0", "01", "111"]:
            a = generate_moqqaf(moqqaf, x).operator.to_dense()
            b = generate_qqaf(qqaf, x).operator.to_dense()
            assert np.allclose(a, b, atol=1e-12)

    def test_trace_preserved_before_projection(self):
        # Two-element Kraus family: a projective pair sums to a complete
        # channel; trace of the evolved mixture equals trace(Lambda0).
        dim = 4
        schema = flat_schema(dim)
        p0 = SparseOp.from_rules(dim, [(0, 0, 1.0), (1, 1, 1.0)])
        p1 = SparseOp.from_rules(dim, [(2, 2, 1.0), (3, 3, 1.0)])
        u = SparseOp.from_dense(random_unitary(dim))
        level = QqafLevel(
            schema=schema, alphabet=("0",),
            ops={CENT: [p0, p1], "0": [u], DOLLAR: [u]},
            lam0=SparseHermitian.diagonal([0.0, 0.5, 1.0, 1.0]),
            q0_indices=frozenset({2}),
            name="kraus",
        )
        _, trace_before = generate_qqaf(level, "00", return_trace=True)
        assert trace_before == pytest.approx(2.5, abs=1e-8)

    def test_completeness_violation_detected(self):
        dim = 2
        bad = SparseOp.from_rules(dim, [(0, 0, 0.9), (1, 1, 1.0)])
        level = QqafLevel(
            schema=flat_schema(dim), alphabet=("0",),
            ops={CENT: [bad], "0": [SparseOp.identity(dim)], DOLLAR: [SparseOp.identity(dim)]},
            lam0=SparseHermitian.diagonal([0.0, 1.0]), name="bad",
        )
        report = validate_level(level)
        assert not report.passed
        worst = max(d.defect for d in report.defects)
        assert worst == pytest.approx(0.19, abs=1e-9)


class TestGenerate2qqaf:
    def _delta_level(self, t_steps):
        # One inner state; the single Kraus element moves the head right.
        def delta(q, sym, j):
            return [("s", +1, 1.0)]

        return TwoWayQqafLevel(
            inner_labels=("s",), alphabet=("0", "1"), xi_size=1,
            steps=lambda x: t_steps,
            lam0_builder=lambda x, schema: SparseHermitian.diagonal(
                np.arange(schema.dim, dtype=float)
            ),
            delta=delta,
            q0_builder=lambda x, schema: frozenset({0}),
            name="mini2",
        )

    def test_zero_steps_identity_first_move(self):
        level = self._delta_level(0)
        e = generate_2qqaf(level, "01")
        lam = np.arange(4.0)
        lam[0] = 0.0
        expect = np.diag(lam)
        expect[0, 0] = 0.0
        assert np.allclose(e.operator.to_dense(), expect)

    def test_surface_dimension(self):
        level = self._delta_level(1)
        e = generate_2qqaf(level, "010")
        assert e.dim == 1 * (3 + 2)

    def test_head_is_circular(self):
        # After |x|+2 steps the head returns; the diagonal mixture is
        # permuted fully around the ring.
        level = self._delta_level(5)   # |x| = 3 -> ring of 5
        e, trace = generate_2qqaf(level, "010", return_trace=True)
        assert trace == pytest.approx(sum(range(5)), abs=1e-9)
        vals = np.sort(np.linalg.eigvalsh(e.operator.to_dense()))
        lam = sorted([0.0, 1, 2, 3, 4])
        assert np.allclose(vals, lam)


class TestDropRightEndmarker:
    def test_identity_dollar_keeps_level(self):
        level = identity_level()
        stripped = drop_right_endmarker(level)
        assert not stripped.has_dollar
        for x in ["", "0", "01"]:
            a = generate_moqqaf(level, x).operator.to_dense()
            b = generate_moqqaf(stripped, x).operator.to_dense()
            assert np.allclose(a, b, atol=1e-12)

    def test_random_level_hamiltonians_equal(self):
        level = random_moqqaf_level()
        stripped = drop_right_endmarker(level)
        for x in ["", "0", "10", "011"]:
            a = generate_moqqaf(level, x).operator.to_dense()
            b = generate_moqqaf(stripped, x).operator.to_dense()
            assert spectral_norm(a - b) <= 1e-10

    def test_requires_dollar(self):
        level = identity_level()
        stripped = drop_right_endmarker(level)
        with pytest.raises(Exception):
            drop_right_endmarker(stripped)


class TestValidateLevel:
    def test_identity_level_zero_defects(self):
        report = validate_level(identity_level())
        assert report.passed
        assert report.worst() == 0.0

    def test_random_levels_pass(self):
        report = validate_level(random_moqqaf_level())
        assert report.passed

    def test_lam0_psd_checked(self):
        level = identity_level()
        level.lam0 = SparseHermitian.diagonal([-0.5, 1.0, 1.0])
        report = validate_level(level)
        assert not report.passed
        assert report.lam0_min_eigenvalue == pytest.approx(-0.5)
