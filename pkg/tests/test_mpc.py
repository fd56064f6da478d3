#!python -m unittest tests.test_mpc
"""This module provides unit tests for mithzk.mpc."""

# builtin
import dataclasses
import os
import unittest

# external
import hypothesis
import hypothesis.strategies as st

# local
import mithzk.utils
import mithzk.field
import mithzk.circuit
import mithzk.sss
import mithzk.mpc
mithzk.utils.set_progress_callback(None)


F11 = mithzk.field.load_modulus("f11")
F101 = mithzk.field.load_modulus("f101")


def load_golden(file_name):
    return mithzk.circuit.load_circuit(
        os.path.join(mithzk.utils.GOLDEN_CIRCUIT_PATH, file_name)
    )


def golden_circuits():
    return [
        load_golden(file_name)
        for file_name in sorted(os.listdir(mithzk.utils.GOLDEN_CIRCUIT_PATH))
        if file_name.endswith(".arith")
    ]


def random_run(circuit, rng):
    modulus = circuit.modulus
    public_inputs = tuple(
        mithzk.field.sample_fe(rng, modulus)
        for index in range(circuit.topology.n_public)
    )
    secret_inputs = tuple(
        mithzk.field.sample_fe(rng, modulus)
        for index in range(circuit.topology.n_secret)
    )
    sharings = [
        mithzk.sss.share(value, mithzk.sss.sample_ss_randomness(rng, modulus))
        for value in secret_inputs
    ]
    execution = mithzk.mpc.execute(
        circuit,
        public_inputs,
        sharings,
        mithzk.mpc.sample_gate_randomness(circuit, rng)
    )
    expected = mithzk.circuit.evaluate_gate(
        circuit.root,
        public_inputs,
        secret_inputs,
        modulus
    )
    return public_inputs, execution, expected


def replace_entry_value(view, key, sender, value):
    trace = tuple(
        mithzk.mpc.TraceEntry(
            entry.key,
            tuple(
                value if (entry.key == key) and (index == sender - 1) else old
                for index, old in enumerate(entry.values)
            )
        ) for entry in view.trace
    )
    return dataclasses.replace(view, trace=trace)


class TestGates(unittest.TestCase):

    @hypothesis.given(
        st.lists(
            st.integers(min_value=0, max_value=100),
            min_size=16,
            max_size=16
        )
    )
    def test_gate_mul(self, values):
        values = F101.elements(values)
        left = mithzk.sss.share(
            values[0],
            mithzk.sss.SSRandomness(values[1], values[2])
        )
        right = mithzk.sss.share(
            values[3],
            mithzk.sss.SSRandomness(values[4], values[5])
        )
        randomness = tuple(
            mithzk.sss.SSRandomness(values[6 + 2 * i], values[7 + 2 * i])
            for i in range(5)
        )
        product, messages = mithzk.mpc.gate_mul(left, right, randomness)
        assert mithzk.sss.reconstruct(product) == values[0] * values[3]
        assert mithzk.sss.sharing_degree_at_most(product, 2)
        assert len(messages) == 5 and all(len(row) == 5 for row in messages)
        for sender in mithzk.sss.PARTIES:
            assert mithzk.sss.reconstruct(
                mithzk.sss.Sharing(messages[sender - 1])
            ) == left[sender] * right[sender], (
                "Each sender reshares its local product."
            )

    def test_linear_gates(self):
        a = mithzk.sss.share(F11.element(3), mithzk.sss.SSRandomness(
            F11.element(1), F11.element(2)
        ))
        b = mithzk.sss.share(F11.element(5), mithzk.sss.SSRandomness(
            F11.element(7), F11.element(4)
        ))
        assert mithzk.sss.reconstruct(
            mithzk.mpc.gate_add(a, b)
        ) == F11.element(8)
        assert mithzk.sss.reconstruct(
            mithzk.mpc.gate_smul(mithzk.sss.public_encoding(F11.element(4)), a)
        ) == F11.element(1)
        assert mithzk.mpc.gate_const(F11.element(6)) == (
            mithzk.sss.public_encoding(F11.element(6))
        )

    def test_refresh(self):
        sharing = mithzk.sss.share(F11.element(9), mithzk.sss.SSRandomness(
            F11.element(2),
            F11.element(5)
        ))
        zeros = (mithzk.sss.SSRandomness.zero(F11),) * 5
        refreshed, broadcast, output = mithzk.mpc.refresh_and_open(
            sharing,
            zeros
        )
        assert refreshed == sharing
        assert output == F11.element(9)
        rng = mithzk.field.RandomSource(8)
        randomness = tuple(
            mithzk.sss.sample_ss_randomness(rng, F11) for i in range(5)
        )
        refreshed, broadcast, output = mithzk.mpc.refresh_and_open(
            sharing,
            randomness
        )
        assert output == F11.element(9)
        assert broadcast == refreshed.shares
        assert mithzk.sss.sharing_degree_at_most(refreshed, 2)


class TestExecution(unittest.TestCase):

    def test_golden_corpus(self):
        rng = mithzk.field.RandomSource(21)
        for circuit in golden_circuits():
            public_inputs, execution, expected = random_run(circuit, rng)
            assert all(output == expected for output in execution.outputs), (
                f"Wrong output for {mithzk.circuit.print_circuit(circuit)}"
            )
            assert mithzk.mpc.all_pairs_consistent(
                circuit,
                public_inputs,
                execution.views
            )
            assert mithzk.mpc.views_reproducible(circuit, execution.views)
            for party in mithzk.sss.PARTIES:
                assert mithzk.mpc.local_output(
                    circuit,
                    party,
                    execution.view(party)
                ) == expected

    def test_random_circuits(self):
        rng = mithzk.field.RandomSource(22)
        for trial in range(30):
            circuit = mithzk.circuit.random_circuit(F101, rng, max_depth=6)
            public_inputs, execution, expected = random_run(circuit, rng)
            assert execution.output(1) == expected
            assert mithzk.mpc.all_pairs_consistent(
                circuit,
                public_inputs,
                execution.views
            )

    def test_identity_circuit(self):
        circuit = mithzk.circuit.Circuit(
            mithzk.circuit.Topology(0, 1, 0),
            mithzk.circuit.SInput(0),
            F11
        )
        rng = mithzk.field.RandomSource(23)
        public_inputs, execution, expected = random_run(circuit, rng)
        assert execution.output(3) == expected
        messages = mithzk.mpc.out_messages(circuit, 2, execution.view(2))
        assert set(messages) == {
            mithzk.mpc.REFRESH_TAG,
            mithzk.mpc.OPEN_TAG
        }, (
            "A circuit without multiplications only refreshes and opens."
        )

    def test_missing_randomness(self):
        circuit = load_golden("01_square_plus_one.arith")
        rng = mithzk.field.RandomSource(24)
        randomness = mithzk.mpc.sample_gate_randomness(circuit, rng)
        randomness = mithzk.mpc.GateRandomness({}, randomness.refresh)
        with self.assertRaises(mithzk.mpc.MissingRandomnessError):
            mithzk.mpc.execute(
                circuit,
                (),
                [mithzk.sss.public_encoding(F11.one)],
                randomness
            )


class TestConsistency(unittest.TestCase):

    def setUp(self):
        self.circuit = load_golden("09_bilinear.arith")
        rng = mithzk.field.RandomSource(31)
        self.public_inputs, self.execution, self.expected = random_run(
            self.circuit,
            rng
        )

    def check_pairs(self, views, broken_pairs):
        for i, j in mithzk.sss.PARTY_PAIRS:
            consistent = mithzk.mpc.consistent_views(
                self.circuit,
                self.public_inputs,
                views[i - 1],
                views[j - 1],
                i,
                j
            )
            assert consistent == ((i, j) not in broken_pairs), (
                f"Unexpected verdict {consistent} for pair {(i, j)}."
            )

    def test_tampered_broadcast(self):
        views = list(self.execution.views)
        old = views[0].entry(mithzk.mpc.OPEN_TAG).values[3]
        views[0] = replace_entry_value(
            views[0],
            mithzk.mpc.OPEN_TAG,
            4,
            old + 1
        )
        self.check_pairs(views, {(1, 4)})
        assert not mithzk.mpc.views_reproducible(self.circuit, views)

    def test_tampered_message(self):
        gate_id = mithzk.circuit.multiplication_gates(self.circuit)[0]
        views = list(self.execution.views)
        old = views[0].entry(gate_id).values[3]
        views[0] = replace_entry_value(views[0], gate_id, 4, old + 1)
        # the received message moves party 1's own output share
        self.check_pairs(views, {(1, j) for j in range(2, 6)})
        assert not mithzk.mpc.views_reproducible(self.circuit, views)

    def test_public_input_disagreement(self):
        view = self.execution.view(2)
        assert not mithzk.mpc.consistent_views(
            self.circuit,
            (F11.one,) * self.circuit.topology.n_public + (F11.one,),
            self.execution.view(1),
            view,
            1,
            2
        )

    def test_same_party(self):
        with self.assertRaises(mithzk.sss.PartyError):
            mithzk.mpc.consistent_views(
                self.circuit,
                self.public_inputs,
                self.execution.view(1),
                self.execution.view(1),
                1,
                1
            )

    def test_invalid_trace(self):
        view = self.execution.view(1)
        broken = dataclasses.replace(view, trace=view.trace[:-1])
        assert mithzk.mpc.out_messages(
            self.circuit,
            1,
            broken
        ) is mithzk.mpc.INVALID_TRACE
        assert mithzk.mpc.local_output(
            self.circuit,
            1,
            broken
        ) is mithzk.mpc.INVALID_TRACE
        assert not mithzk.mpc.INVALID_TRACE
        assert not mithzk.mpc.consistent_views(
            self.circuit,
            self.public_inputs,
            broken,
            self.execution.view(2),
            1,
            2
        )
        assert mithzk.mpc.reexecute(
            self.circuit,
            (broken,) + self.execution.views[1:]
        ) is mithzk.mpc.INVALID_TRACE


class TestSimulator(unittest.TestCase):

    def test_replay_and_fresh_simulation(self):
        rng = mithzk.field.RandomSource(41)
        for circuit in golden_circuits():
            public_inputs, execution, expected = random_run(circuit, rng)
            for pair in mithzk.sss.PARTY_PAIRS:
                real = (execution.view(pair[0]), execution.view(pair[1]))
                corrupt_shares = (real[0].input_shares, real[1].input_shares)
                components = mithzk.mpc.extract_simulator_components(
                    circuit,
                    pair,
                    *real
                )
                assert mithzk.mpc.simulate_from_components(
                    circuit,
                    public_inputs,
                    pair,
                    corrupt_shares,
                    expected,
                    components
                ) == real, (
                    f"Replay differs for pair {pair}"
                )
                simulated = mithzk.mpc.mpc_simulate(
                    circuit,
                    public_inputs,
                    pair,
                    corrupt_shares,
                    expected,
                    rng
                )
                assert mithzk.mpc.consistent_views(
                    circuit,
                    public_inputs,
                    simulated[0],
                    simulated[1],
                    *pair
                )
                for party, view in zip(pair, simulated):
                    assert mithzk.mpc.local_output(
                        circuit,
                        party,
                        view
                    ) == expected

    def test_invalid_pairs(self):
        circuit = load_golden("01_square_plus_one.arith")
        for corrupt in ((2, 2), (0, 1)):
            with self.assertRaises(mithzk.sss.PartyError):
                mithzk.mpc.mpc_simulate(
                    circuit,
                    (),
                    corrupt,
                    ((F11.one,), (F11.one,)),
                    F11.one,
                    mithzk.field.RandomSource(1)
                )


class TestViewEncoding(unittest.TestCase):

    def test_decode(self):
        circuit = load_golden("17_chain.arith")
        rng = mithzk.field.RandomSource(51)
        public_inputs, execution, expected = random_run(circuit, rng)
        for view in execution.views:
            data = view.to_bytes()
            assert data[0] == mithzk.mpc.VIEW_TAG
            assert mithzk.mpc.view_from_bytes(data, F11) == view
            with self.assertRaises(ValueError):
                mithzk.mpc.view_from_bytes(data[:-1], F11)
            with self.assertRaises(ValueError):
                mithzk.mpc.view_from_bytes(data + b"\x00", F11)


if __name__ == "__main__":
    unittest.main()
