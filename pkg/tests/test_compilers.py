import numpy as np
import pytest

from aeqslab import compilers as cp
from aeqslab.aeqs import decide
from aeqslab.linalg import CapacityError
from aeqslab.qqa import CENT, DOLLAR

RNG = np.random.default_rng(31)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
W = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def parity_spec(q_acc={0}, q_rej={1}):
    return cp.MoQfaSpec(2, ("0", "1"),
                        {CENT: I2, DOLLAR: I2, "0": I2, "1": X},
                        q_acc=q_acc, q_rej=q_rej, name="parity")


def bitstrings(max_len):
    import itertools

    yield ""
    for n in range(1, max_len + 1):
        for tup in itertools.product("01", repeat=n):
            yield "".join(tup)


class TestRunMoqfa:
    def test_always_accept(self):
        spec = cp.MoQfaSpec(1, ("0", "1"),
                            {CENT: np.eye(1), DOLLAR: np.eye(1),
                             "0": np.eye(1), "1": np.eye(1)},
                            q_acc={0}, q_rej=set())
        assert cp.run_moqfa(spec, "0110") == (1.0, 0.0)

    def test_hadamard_split(self):
        spec = cp.MoQfaSpec(2, ("1",), {CENT: I2, DOLLAR: I2, "1": W},
                            q_acc={0}, q_rej={1})
        pa, pr = cp.run_moqfa(spec, "1")
        assert pa == pytest.approx(0.5)
        assert pr == pytest.approx(0.5)

    def test_parity_hand_computation(self):
        spec = parity_spec()
        assert cp.run_moqfa(spec, "111") == (pytest.approx(0.0), pytest.approx(1.0))
        assert cp.run_moqfa(spec, "11") == (pytest.approx(1.0), pytest.approx(0.0))

    def test_probabilities_bounded(self):
        spec = cp.random_moqfa_spec(RNG, 4)
        for x in ["", "01", "100"]:
            pa, pr = cp.run_moqfa(spec, x)
            assert 0.0 <= pa <= 1.0 and 0.0 <= pr <= 1.0
            assert pa + pr <= 1.0 + 1e-9

    def test_unitarity_enforced(self):
        with pytest.raises(cp.CompileError):
            cp.MoQfaSpec(2, ("0",), {CENT: I2, DOLLAR: I2, "0": 0.9 * I2},
                         q_acc={0}, q_rej={1})


class TestFromMoqfa:
    def test_parity_verdicts(self):
        spec = parity_spec()
        fam = cp.from_moqfa(spec)
        for x in bitstrings(5):
            want = "accept" if x.count("1") % 2 == 0 else "reject"
            assert decide(fam.build(x)).outcome == want

    def test_padding_to_power_of_two(self):
        u3 = np.eye(3, dtype=complex)[:, [1, 2, 0]]
        spec = cp.MoQfaSpec(3, ("0",), {CENT: np.eye(3), DOLLAR: np.eye(3), "0": u3},
                            q_acc={0}, q_rej={1}, name="cycle3")
        fam = cp.from_moqfa(spec)
        inst = fam.build("0")
        assert inst.dim == 4
        assert inst.size_bits == 2
        # Padding state joins neither criteria set.
        assert 3 not in inst.s_acc and 3 not in inst.s_rej
        pa, pr = cp.run_moqfa(spec, "0")
        v = decide(inst)
        assert v.acc_overlap**2 == pytest.approx(pa, abs=1e-12)

    def test_compiled_gap_and_energy(self):
        for _ in range(5):
            spec = cp.random_moqfa_spec(RNG, int(RNG.integers(2, 5)))
            fam = cp.from_moqfa(spec)
            for x in ["", "0", "11", "010"]:
                v = decide(fam.build(x))
                assert abs(v.ground_energy) <= 1e-8
                assert abs(v.spectral_gap - 1.0) <= 1e-8

    def test_overlaps_match_probabilities(self):
        for _ in range(5):
            spec = cp.random_moqfa_spec(RNG, 4)
            fam = cp.from_moqfa(spec)
            for x in ["", "1", "01", "110"]:
                pa, pr = cp.run_moqfa(spec, x)
                v = decide(fam.build(x))
                assert v.acc_overlap**2 == pytest.approx(pa, abs=1e-7)
                assert v.rej_overlap**2 == pytest.approx(pr, abs=1e-7)


class TestGarbageModel:
    def test_deterministic_probabilities_are_binary(self):
        dfa = cp.dfa_as_garbage_spec(
            {(0, "0"): 1, (0, "1"): 2, (1, "0"): 1, (1, "1"): 1,
             (2, "0"): 2, (2, "1"): 2},
            3, q_acc={1}, q_rej={0, 2}, name="starts-with-0",
        )
        for x in bitstrings(4):
            pa, pr = cp.run_garbage_1qfa(dfa, x)
            assert pa in (pytest.approx(0.0), pytest.approx(1.0))
            assert pa + pr == pytest.approx(1.0)

    def test_mass_conservation(self):
        spec = cp.random_garbage_spec(RNG, 3, 2)
        for x in ["", "0", "0101"]:
            psi_mass = sum(
                abs(a) ** 2 for a in _final_amplitudes(spec, x).values()
            )
            assert psi_mass == pytest.approx(1.0, abs=1e-9)

    def test_isometry_validation(self):
        spec = cp.random_garbage_spec(RNG, 2, 2)
        spec.delta[(0, "0")] = [(0, 1, 0.9)]
        with pytest.raises(cp.CompileError):
            spec.validate()

    def test_dfa_embedding_matches_language(self):
        dfa = cp.dfa_as_garbage_spec(
            {(0, "0"): 1, (0, "1"): 2, (1, "0"): 1, (1, "1"): 1,
             (2, "0"): 2, (2, "1"): 2},
            3, q_acc={1}, q_rej={0, 2}, name="starts-with-0",
        )
        fam = cp.from_garbage_1qfa(dfa)
        for x in bitstrings(5):
            want = "accept" if x.startswith("0") else "reject"
            assert decide(fam.build(x)).outcome == want

    def test_compiled_matches_run(self):
        for _ in range(3):
            spec = cp.random_garbage_spec(RNG, int(RNG.integers(2, 4)), int(RNG.integers(1, 3)))
            fam = cp.from_garbage_1qfa(spec)
            for x in ["", "0", "10", "0110"]:
                pa, pr = cp.run_garbage_1qfa(spec, x)
                v = decide(fam.build(x))
                assert v.acc_overlap**2 == pytest.approx(pa, abs=1e-7)
                assert v.rej_overlap**2 == pytest.approx(pr, abs=1e-7)
                assert abs(v.ground_energy) <= 1e-8
                assert abs(v.spectral_gap - 1.0) <= 1e-8
                assert v.unique_ground

    def test_ground_state_is_run_image(self):
        spec = cp.random_garbage_spec(RNG, 2, 2)
        fam = cp.from_garbage_1qfa(spec)
        inst = fam.build("01")
        from aeqslab.aeqs import ground_state

        energy, vec, unique = ground_state(inst.h_fin)
        assert energy == 0.0 and unique
        amps = _final_amplitudes(spec, "01")
        recon = np.zeros(inst.dim, dtype=complex)
        for (q, tape), a in amps.items():
            recon[inst.schema.index((q, tape))] = a
        assert abs(np.vdot(recon, vec)) == pytest.approx(1.0, abs=1e-9)

    def test_capacity_guard(self):
        spec = cp.random_garbage_spec(RNG, 3, 4)
        fam = cp.from_garbage_1qfa(spec)
        with pytest.raises(CapacityError):
            fam.build("0" * 8)

    def test_accuracy_mapping_on_known_error(self):
        # Automaton accepting members with probability exactly 1 - e: the
        # achieved accuracy is 1 - sqrt(1 - sqrt(1 - e)) and stays above 1/2
        # for e below ~0.38 (honest version of the quoted 1 - sqrt(e/2)).
        e = 0.1
        amp_acc, amp_rej = np.sqrt(1 - e), np.sqrt(e)
        u = np.array([[amp_acc, -amp_rej], [amp_rej, amp_acc]], dtype=complex)
        spec = cp.MoQfaSpec(2, ("0",), {CENT: I2, DOLLAR: u, "0": I2},
                            q_acc={0}, q_rej={1}, error_bound=e, name="biased")
        fam = cp.from_moqfa(spec)
        v = decide(fam.build("0"))
        assert v.outcome == "accept"
        expected_accuracy = 1.0 - np.sqrt(1.0 - np.sqrt(1.0 - e))
        assert v.accuracy == pytest.approx(expected_accuracy, abs=1e-9)
        assert v.accuracy > 0.5


class TestGarbageStrings:
    def test_enumeration_order(self):
        words = cp.garbage_strings(2, 2)
        assert words[0] == ()
        assert words[1:3] == [(1,), (2,)]
        assert words[3:] == [(1, 1), (1, 2), (2, 1), (2, 2)]


def _final_amplitudes(spec, x):
    psi = {(spec.initial, ()): 1.0 + 0j}
    for sym in [CENT, *x, DOLLAR]:
        nxt = {}
        for (q, tape), amp in psi.items():
            for (p, xi, a) in spec.delta.get((q, sym), ()):
                key = (p, tape + (xi,))
                nxt[key] = nxt.get(key, 0j) + amp * a
        psi = nxt
    return psi
