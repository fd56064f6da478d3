#!python -m unittest tests.test_circuit
"""This module provides unit tests for mithzk.circuit."""

# builtin
import os
import tempfile
import unittest

# external
import hypothesis
import hypothesis.strategies as st

# local
import mithzk.utils
import mithzk.field
import mithzk.circuit
mithzk.utils.set_progress_callback(None)


SQUARE_PLUS_ONE = (
    b"field 101\ntopology 0 1 3\n"
    b"(add 3 (mul 2 (sinput 0) (sinput 0)) (const 1 1))"
)


def golden_file_names():
    return sorted(
        os.path.join(mithzk.utils.GOLDEN_CIRCUIT_PATH, file_name)
        for file_name in os.listdir(mithzk.utils.GOLDEN_CIRCUIT_PATH)
        if file_name.endswith(".arith")
    )


class TestParsing(unittest.TestCase):

    def test_square_plus_one(self):
        circuit = mithzk.circuit.parse_circuit(SQUARE_PLUS_ONE)
        assert circuit.modulus.p == 101
        assert circuit.topology == mithzk.circuit.Topology(0, 1, 3)
        assert isinstance(circuit.root, mithzk.circuit.Addition)
        assert mithzk.circuit.multiplication_gates(circuit) == (2,)
        assert mithzk.circuit.node_count(circuit) == 5
        statement = mithzk.circuit.Statement(
            circuit,
            (),
            circuit.modulus.element(10)
        )
        witness = mithzk.circuit.Witness(circuit.modulus.elements([3]))
        assert mithzk.circuit.eval_plain(statement, witness) == 10
        assert mithzk.circuit.relation_holds(statement, witness)
        assert not mithzk.circuit.relation_holds(
            statement,
            mithzk.circuit.Witness(circuit.modulus.elements([4]))
        ), (
            "4^2 + 1 = 17 should not satisfy target 10."
        )

    def test_golden_corpus(self):
        file_names = golden_file_names()
        assert len(file_names) >= 20, (
            "The golden corpus is incomplete."
        )
        for file_name in file_names:
            circuit = mithzk.circuit.load_circuit(file_name)
            assert circuit.modulus.p == 11
            printed = mithzk.circuit.print_circuit(circuit)
            assert mithzk.circuit.parse_circuit(printed) == circuit, (
                f"{file_name} does not survive printing."
            )

    def test_comments_and_presets(self):
        circuit = mithzk.circuit.load_circuit(
            os.path.join(
                mithzk.utils.GOLDEN_CIRCUIT_PATH,
                "22_commented.arith"
            )
        )
        assert circuit.root.right.value == circuit.modulus.element(10), (
            "Negative constants are not reduced."
        )

    def test_syntax_errors(self):
        cases = [
            (b"field 101\ntopology 0 1 1\n(cnst 1 1)", 3, 2),
            (b"field 101\ntopology 0 1 1\n(const 1 1", 3, 11),
            (b"field 101\ntopology 0 1 1\n(const 1 1))", 3, 12),
            (b"field 100\ntopology 0 1 1\n(const 1 1)", 1, 7),
            (b"topology 0 1 1\n(const 1 1)", 1, 1),
            (b"field 101\ntopology 0 x 1\n(const 1 1)", 2, 12),
        ]
        for text, line, column in cases:
            with self.assertRaises(mithzk.circuit.CircuitSyntaxError) as error:
                mithzk.circuit.parse_circuit(text)
            assert (error.exception.line, error.exception.column) == (
                line,
                column
            ), (
                f"Wrong position for {text!r}: {error.exception}"
            )

    def test_validation_errors(self):
        cases = {
            "secret_index_out_of_range": b"field 101\ntopology 0 1 1\n"
            b"(add 1 (sinput 5) (sinput 0))",
            "public_index_out_of_range": b"field 101\ntopology 1 1 1\n"
            b"(add 1 (pinput 1) (sinput 0))",
            "duplicate_gate_id": b"field 101\ntopology 0 1 2\n"
            b"(add 1 (const 1 1) (sinput 0))",
            "secret_in_scalar_operand": b"field 101\ntopology 0 1 1\n"
            b"(smul 1 (sinput 0) (sinput 0))",
            "gate_count_mismatch": b"field 101\ntopology 0 1 2\n"
            b"(add 1 (sinput 0) (sinput 0))",
            "topology_invalid": b"field 101\ntopology 0 0 1\n(const 1 1)",
            "gate_id_out_of_range": b"field 101\ntopology 0 1 1\n"
            b"(add 4294967294 (sinput 0) (sinput 0))",
        }
        for code, text in cases.items():
            with self.assertRaises(
                mithzk.circuit.CircuitValidationError
            ) as error:
                mithzk.circuit.parse_circuit(text)
            assert error.exception.code == code, (
                f"Expected {code}, got {error.exception.code}"
            )

    def test_scalar_subtree_is_public(self):
        circuit = mithzk.circuit.load_circuit(
            os.path.join(
                mithzk.utils.GOLDEN_CIRCUIT_PATH,
                "11_scalar_subtree.arith"
            )
        )
        assert mithzk.circuit.multiplication_gates(circuit) == (), (
            "Multiplications in a scalar operand are not interactive."
        )


class TestEvaluation(unittest.TestCase):

    def test_constant_root(self):
        circuit = mithzk.circuit.load_circuit(
            os.path.join(mithzk.utils.GOLDEN_CIRCUIT_PATH, "12_constant.arith")
        )
        for value in range(11):
            statement = mithzk.circuit.Statement(
                circuit,
                (),
                circuit.modulus.element(5)
            )
            witness = mithzk.circuit.Witness(circuit.modulus.elements([value]))
            assert mithzk.circuit.eval_plain(statement, witness) == 5

    def test_wrong_lengths(self):
        circuit = mithzk.circuit.parse_circuit(SQUARE_PLUS_ONE)
        statement = mithzk.circuit.Statement(circuit, (), circuit.modulus.one)
        with self.assertRaises(mithzk.circuit.StatementError):
            mithzk.circuit.eval_plain(
                statement,
                mithzk.circuit.Witness(circuit.modulus.elements([1, 2]))
            )
        assert not mithzk.circuit.relation_holds(
            statement,
            mithzk.circuit.Witness(())
        )
        with self.assertRaises(mithzk.circuit.StatementError):
            mithzk.circuit.Statement(
                circuit,
                circuit.modulus.elements([1]),
                circuit.modulus.one
            )

    @hypothesis.settings(max_examples=50, deadline=None)
    @hypothesis.given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_relabelling_keeps_semantics(self, seed):
        modulus = mithzk.field.load_modulus("f101")
        rng = mithzk.field.RandomSource(seed)
        circuit = mithzk.circuit.random_circuit(modulus, rng, max_depth=5)
        relabelled = mithzk.circuit.relabel_gates(
            circuit,
            lambda gate_id: 1000 + 7 * gate_id
        )
        mithzk.circuit.validate_circuit(relabelled)
        public_inputs = modulus.elements([rng.randbelow(101)])
        secret_inputs = modulus.elements(
            [rng.randbelow(101), rng.randbelow(101)]
        )
        assert mithzk.circuit.evaluate_gate(
            circuit.root,
            public_inputs,
            secret_inputs,
            modulus
        ) == mithzk.circuit.evaluate_gate(
            relabelled.root,
            public_inputs,
            secret_inputs,
            modulus
        )
        assert mithzk.circuit.parse_circuit(
            mithzk.circuit.print_circuit(circuit)
        ) == circuit


class TestStatementFiles(unittest.TestCase):

    def test_write_and_load(self):
        circuit = mithzk.circuit.parse_circuit(SQUARE_PLUS_ONE)
        witness = mithzk.circuit.Witness(circuit.modulus.elements([3]))
        statement = mithzk.circuit.Statement(
            circuit,
            (),
            circuit.modulus.element(10)
        )
        with tempfile.TemporaryDirectory() as directory:
            with open(os.path.join(directory, "c.arith"), "wb") as outfile:
                outfile.write(SQUARE_PLUS_ONE)
            statement_file_name = os.path.join(directory, "s.st")
            witness_file_name = os.path.join(directory, "w.wit")
            mithzk.circuit.write_statement(
                statement_file_name,
                statement,
                "c.arith"
            )
            mithzk.circuit.write_witness(witness_file_name, witness)
            loaded = mithzk.circuit.load_statement(statement_file_name)
            assert loaded == statement
            assert loaded.hash == statement.hash
            assert mithzk.circuit.load_witness(
                witness_file_name,
                circuit.modulus
            ) == witness

    def test_hash_binds_statement(self):
        circuit = mithzk.circuit.parse_circuit(SQUARE_PLUS_ONE)
        first = mithzk.circuit.Statement(circuit, (), circuit.modulus.one)
        second = mithzk.circuit.Statement(circuit, (), circuit.modulus.zero)
        assert len(first.hash) == 32
        assert first.hash != second.hash

    def test_bad_statement_files(self):
        with tempfile.TemporaryDirectory() as directory:
            with open(os.path.join(directory, "c.arith"), "wb") as outfile:
                outfile.write(SQUARE_PLUS_ONE)
            contents = [
                "field 101\ncircuit c.arith\n",
                "field 97\ncircuit c.arith\ntarget 1\n",
                "field 101\ncircuit c.arith\ntarget one\n",
                "field 101\ncircuit c.arith\ntarget 1\npublic 4\n",
            ]
            for content in contents:
                file_name = os.path.join(directory, "s.st")
                with open(file_name, "w") as outfile:
                    outfile.write(content)
                with self.assertRaises(mithzk.circuit.StatementError):
                    mithzk.circuit.load_statement(file_name)


if __name__ == "__main__":
    unittest.main()
