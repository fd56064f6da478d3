#!python -m unittest tests.test_mith
"""This module provides unit tests for mithzk.mith."""

# builtin
import dataclasses
import os
import unittest

# local
import mithzk.utils
import mithzk.field
import mithzk.circuit
import mithzk.commit
import mithzk.sss
import mithzk.mpc
import mithzk.mith
mithzk.utils.set_progress_callback(None)


F11 = mithzk.field.load_modulus("f11")


def load_golden(file_name):
    return mithzk.circuit.load_circuit(
        os.path.join(mithzk.utils.GOLDEN_CIRCUIT_PATH, file_name)
    )


def square_plus_one_statement(target=10):
    circuit = load_golden("01_square_plus_one.arith")
    statement = mithzk.circuit.Statement(circuit, (), F11.element(target))
    return statement, mithzk.circuit.Witness((F11.element(3),))


def golden_statements(rng):
    statements = []
    for file_name in sorted(os.listdir(mithzk.utils.GOLDEN_CIRCUIT_PATH)):
        if not file_name.endswith(".arith"):
            continue
        circuit = load_golden(file_name)
        public_inputs = tuple(
            mithzk.field.sample_fe(rng, F11)
            for index in range(circuit.topology.n_public)
        )
        witness = mithzk.circuit.Witness(
            tuple(
                mithzk.field.sample_fe(rng, F11)
                for index in range(circuit.topology.n_secret)
            )
        )
        target = mithzk.circuit.evaluate_gate(
            circuit.root,
            public_inputs,
            witness.secret_inputs,
            F11
        )
        statements.append(
            (
                file_name,
                mithzk.circuit.Statement(circuit, public_inputs, target),
                witness
            )
        )
    return statements


def commit_once(statement, witness, rng, scheme=None):
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    prover_rand = mithzk.mith.sample_prover_rand(statement, scheme, rng)
    return mithzk.mith.prover_commit(prover_rand, witness, statement, scheme)


class TestChallenge(unittest.TestCase):

    def test_indices(self):
        for index in range(10):
            challenge = mithzk.mith.Challenge.from_index(index)
            assert challenge.index == index
            assert challenge.i < challenge.j
        assert mithzk.mith.Challenge.from_index(0).pair == (1, 2)
        assert mithzk.mith.Challenge.from_index(9).pair == (4, 5)
        with self.assertRaises(ValueError):
            mithzk.mith.Challenge.from_index(10)
        with self.assertRaises(mithzk.sss.PartyError):
            mithzk.mith.Challenge(2, 1)
        with self.assertRaises(mithzk.sss.PartyError):
            mithzk.mith.Challenge(3, 3)

    def test_ignores_commitment(self):
        statement, witness = square_plus_one_statement()
        first = commit_once(statement, witness, mithzk.field.RandomSource(1))
        second = commit_once(statement, witness, mithzk.field.RandomSource(2))
        assert first[1] != second[1]
        challenges = [
            mithzk.mith.verifier_challenge(
                mithzk.field.RandomSource(7),
                statement,
                commitment
            )[1] for state, commitment in (first, second)
        ]
        assert challenges[0] == challenges[1], (
            "A seeded verifier does not depend on the commitment."
        )


class TestSingleRun(unittest.TestCase):

    def setUp(self):
        self.statement, self.witness = square_plus_one_statement()
        self.scheme = mithzk.commit.PRFCommitmentScheme()
        self.state, self.commitment = commit_once(
            self.statement,
            self.witness,
            mithzk.field.RandomSource(11),
            self.scheme
        )

    def check(self, challenge, response, statement=None):
        if statement is None:
            statement = self.statement
        state = mithzk.mith.VerifierState(
            statement,
            self.scheme,
            self.commitment,
            challenge
        )
        return mithzk.mith.verifier_check(state, response)

    def test_honest_accepts_every_challenge(self):
        for index in range(10):
            challenge = mithzk.mith.Challenge.from_index(index)
            response = mithzk.mith.prover_respond(self.state, challenge)
            assert self.check(challenge, response), (
                f"Honest response rejected for {challenge.pair}"
            )

    def test_flipped_opening(self):
        challenge = mithzk.mith.Challenge(2, 4)
        response = mithzk.mith.prover_respond(self.state, challenge)
        opening = bytearray(response.opening_i)
        opening[0] ^= 1
        assert not self.check(
            challenge,
            dataclasses.replace(response, opening_i=bytes(opening))
        )

    def test_swapped_views(self):
        challenge = mithzk.mith.Challenge(1, 3)
        response = mithzk.mith.prover_respond(self.state, challenge)
        swapped = mithzk.mith.Response(
            response.view_j,
            response.opening_j,
            response.view_i,
            response.opening_i
        )
        assert not self.check(challenge, swapped)

    def test_wrong_target(self):
        challenge = mithzk.mith.Challenge(1, 5)
        response = mithzk.mith.prover_respond(self.state, challenge)
        other, witness = square_plus_one_statement(target=9)
        assert not self.check(challenge, response, other)

    def test_malformed_response(self):
        challenge = mithzk.mith.Challenge(1, 2)
        assert not self.check(challenge, None)
        response = mithzk.mith.prover_respond(self.state, challenge)
        assert not self.check(
            challenge,
            dataclasses.replace(response, view_j="not a view")
        )

    def test_public_input_mismatch(self):
        circuit = load_golden("05_public_offset.arith")
        statement = mithzk.circuit.Statement(
            circuit,
            (F11.element(4),),
            F11.element(9)
        )
        witness = mithzk.circuit.Witness((F11.element(5),))
        state, commitment = commit_once(
            statement,
            witness,
            mithzk.field.RandomSource(12)
        )
        other = mithzk.circuit.Statement(
            circuit,
            (F11.element(3),),
            F11.element(9)
        )
        challenge = mithzk.mith.Challenge(2, 3)
        response = mithzk.mith.prover_respond(state, challenge)
        for verifier_statement, expected in ((statement, True), (other, False)):
            verifier_state = mithzk.mith.VerifierState(
                verifier_statement,
                mithzk.commit.PRFCommitmentScheme(),
                commitment,
                challenge
            )
            assert mithzk.mith.verifier_check(
                verifier_state,
                response
            ) == expected

    def test_missing_randomness(self):
        prover_rand = mithzk.mith.sample_prover_rand(
            self.statement,
            self.scheme,
            mithzk.field.RandomSource(13)
        )
        for broken in (
            dataclasses.replace(prover_rand, r_ss=()),
            dataclasses.replace(prover_rand, r_cs=prover_rand.r_cs[:4]),
            dataclasses.replace(
                prover_rand,
                r_mpc=mithzk.mpc.GateRandomness({}, prover_rand.r_mpc.refresh)
            ),
        ):
            with self.assertRaises(mithzk.mith.ProverRandomnessError):
                mithzk.mith.prover_commit(
                    broken,
                    self.witness,
                    self.statement,
                    self.scheme
                )


class TestRepetitions(unittest.TestCase):

    def test_soundness_bound(self):
        self.assertAlmostEqual(mithzk.mith.soundness_bound(1), 0.9)
        self.assertAlmostEqual(
            mithzk.mith.soundness_bound(10),
            0.34867844,
            places=8
        )
        assert mithzk.mith.soundness_bound(40) < 0.015
        self.assertAlmostEqual(mithzk.mith.soundness_bound(1, 0.05), 0.95)
        for repetitions in (0, -1, 1.5, True):
            with self.assertRaises(ValueError):
                mithzk.mith.soundness_bound(repetitions)
        with self.assertRaises(ValueError):
            mithzk.mith.soundness_bound(1, 0.1)

    def test_golden_corpus(self):
        rng = mithzk.field.RandomSource(21)
        for file_name, statement, witness in golden_statements(rng):
            for mode in ("derived", "transcript"):
                proof = mithzk.mith.prove_repeated(
                    witness,
                    statement,
                    3,
                    rng,
                    mode=mode
                )
                assert proof.repetitions == 3
                assert mithzk.mith.verify_repeated(statement, proof), (
                    f"Honest {mode} proof rejected for {file_name}"
                )

    def test_pedersen(self):
        statement, witness = square_plus_one_statement()
        scheme = mithzk.commit.get_scheme("pedersen", "test64")
        proof = mithzk.mith.prove_repeated(
            witness,
            statement,
            2,
            mithzk.field.RandomSource(22),
            scheme=scheme
        )
        assert proof.scheme_id == mithzk.commit.PEDERSEN_SCHEME_ID
        assert mithzk.mith.verify_repeated(statement, proof, scheme=scheme)
        with self.assertRaises(mithzk.mith.ProofFormatError):
            mithzk.mith.check_repeated(
                statement,
                proof,
                mithzk.commit.PRFCommitmentScheme()
            )

    def test_derived_challenges_are_checked(self):
        statement, witness = square_plus_one_statement()
        proof = mithzk.mith.prove_repeated(
            witness,
            statement,
            4,
            mithzk.field.RandomSource(23),
            mode="transcript"
        )
        expected = mithzk.mith.derive_challenges(
            statement.hash,
            [transcript.commitment for transcript in proof.transcripts],
            mithzk.commit.PRFCommitmentScheme()
        )
        verdicts = mithzk.mith.check_repeated(
            statement,
            proof,
            mithzk.commit.PRFCommitmentScheme(),
            mode="derived"
        )
        assert verdicts == [
            transcript.challenge == challenge
            for transcript, challenge in zip(proof.transcripts, expected)
        ], (
            "Recorded challenges must match derived ones in derived mode."
        )

    def test_statement_mismatch(self):
        statement, witness = square_plus_one_statement()
        other, unused = square_plus_one_statement(target=2)
        proof = mithzk.mith.prove_repeated(
            witness,
            statement,
            1,
            mithzk.field.RandomSource(24)
        )
        with self.assertRaises(mithzk.mith.StatementMismatchError):
            mithzk.mith.verify_repeated(other, proof)

    def test_invalid_arguments(self):
        statement, witness = square_plus_one_statement()
        rng = mithzk.field.RandomSource(25)
        with self.assertRaises(ValueError):
            mithzk.mith.prove_repeated(witness, statement, 0, rng)
        with self.assertRaises(ValueError):
            mithzk.mith.prove_repeated(
                witness,
                statement,
                1,
                rng,
                mode="interactive"
            )


class TestProofFiles(unittest.TestCase):

    def setUp(self):
        self.statement, self.witness = square_plus_one_statement()
        self.scheme = mithzk.commit.PRFCommitmentScheme()
        self.proof = mithzk.mith.prove_repeated(
            self.witness,
            self.statement,
            5,
            mithzk.field.RandomSource(31)
        )
        self.data = mithzk.mith.encode_proof(self.proof, self.scheme)

    def test_decode(self):
        assert self.data.startswith(mithzk.mith.PROOF_MAGIC)
        proof, scheme = mithzk.mith.decode_proof(self.data, F11)
        assert proof == self.proof
        assert scheme.scheme_id == mithzk.commit.PRF_SCHEME_ID
        reader = mithzk.utils.ByteReader(self.data)
        assert mithzk.mith.read_proof_header(reader) == (
            mithzk.commit.PRF_SCHEME_ID,
            "derived",
            5,
            self.statement.hash
        )

    def test_corrupted_bytes(self):
        rng = mithzk.field.RandomSource(32)
        header_length = len(mithzk.mith.PROOF_MAGIC) + 2 + 4 + 32
        for trial in range(50):
            position = header_length + rng.randbelow(
                len(self.data) - header_length
            )
            corrupted = bytearray(self.data)
            corrupted[position] ^= 1 << rng.randbelow(8)
            try:
                proof, scheme = mithzk.mith.decode_proof(
                    bytes(corrupted),
                    F11
                )
            except mithzk.mith.ProofFormatError:
                continue
            assert not mithzk.mith.verify_repeated(
                self.statement,
                proof,
                mode="derived",
                scheme=scheme
            ), (
                f"A flipped bit at byte {position} was accepted."
            )

    def test_malformed_files(self):
        cases = [
            b"",
            b"MITH2" + self.data[5:],
            self.data[:-1],
            self.data + b"\x00",
            self.data[:5] + b"\x07" + self.data[6:],
            self.data[:6] + b"\x03" + self.data[7:],
            self.data[:7] + mithzk.utils.encode_u32(0) + self.data[11:],
        ]
        for data in cases:
            with self.assertRaises(mithzk.mith.ProofFormatError):
                mithzk.mith.decode_proof(data, F11)


class TestSimulation(unittest.TestCase):

    def test_simulated_transcripts_verify(self):
        # no witness is needed, so a false statement works too
        for target in (10, 0):
            statement, witness = square_plus_one_statement(target=target)
            rng = mithzk.field.RandomSource(41 + target)
            transcript, attempts = mithzk.mith.zk_simulate(
                statement,
                mithzk.mith.honest_verifier(rng.spawn(1)[0]),
                rng=rng,
                return_attempts=True
            )
            assert attempts >= 1
            state = mithzk.mith.VerifierState(
                statement,
                mithzk.commit.PRFCommitmentScheme(),
                transcript.commitment,
                transcript.challenge
            )
            assert mithzk.mith.verifier_check(state, transcript.response)

    def test_abort(self):
        statement, witness = square_plus_one_statement()
        simulated = mithzk.mith.zk_simulate_once(
            statement,
            mithzk.field.RandomSource(43)
        )
        for index in range(10):
            challenge = mithzk.mith.Challenge.from_index(index)
            response = simulated.respond(challenge)
            assert (response is None) == (challenge != simulated.guess)

    def test_failure(self):
        statement, witness = square_plus_one_statement()
        failures = 0
        for seed in range(20):
            rng = mithzk.field.RandomSource(seed)
            try:
                mithzk.mith.zk_simulate(
                    statement,
                    mithzk.mith.honest_verifier(rng.spawn(1)[0]),
                    max_retries=1,
                    rng=rng
                )
            except mithzk.mith.SimulationFailure:
                failures += 1
        assert failures > 0, (
            "A single attempt should abort nine times in ten."
        )
        with self.assertRaises(ValueError):
            mithzk.mith.zk_simulate(
                statement,
                mithzk.mith.honest_verifier(mithzk.field.RandomSource(1)),
                max_retries=0
            )


if __name__ == "__main__":
    unittest.main()
