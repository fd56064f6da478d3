#!python -m unittest tests.test_session
"""This module provides unit tests for mithzk.session."""

# builtin
import socket
import struct
import threading
import unittest

# local
import mithzk.utils
import mithzk.field
import mithzk.circuit
import mithzk.commit
import mithzk.mith
import mithzk.harness
import mithzk.session
mithzk.utils.set_progress_callback(None)


F11 = mithzk.field.load_modulus("f11")


def square_plus_one_statement(target=10):
    circuit = mithzk.harness.golden_circuit("01_square_plus_one.arith")
    statement = mithzk.circuit.Statement(circuit, (), F11.element(target))
    return statement, mithzk.circuit.Witness((F11.element(3),))


def false_square_plus_one():
    return mithzk.harness.make_false_statement(
        mithzk.harness.golden_circuit("01_square_plus_one.arith")
    )


class ProverThread(threading.Thread):
    """Runs prover_session (or any callable) and keeps its outcome."""

    def __init__(self, function, transport, *args, **kwargs):
        super().__init__(daemon=True)
        self.function = function
        self.transport = transport
        self.args = args
        self.kwargs = kwargs
        self.result = None
        self.error = None

    def run(self):
        try:
            self.result = self.function(
                self.transport,
                *self.args,
                **self.kwargs
            )
        except Exception as error:
            self.error = error
        finally:
            self.transport.close()


class FlippingTransport(mithzk.session.RecordingTransport):
    """Flips one random bit in the first sent frame of msg_type."""

    def __init__(self, inner, msg_type, rng):
        super().__init__(inner)
        self.msg_type = msg_type
        self.rng = rng
        self.flipped = None

    def send_frame(self, frame):
        if frame.msg_type == self.msg_type and self.flipped is None:
            self.flipped = self.rng.randbelow(len(frame.payload) * 8)
            payload = bytearray(frame.payload)
            payload[self.flipped // 8] ^= 1 << (self.flipped % 8)
            frame = mithzk.session.Frame(frame.msg_type, bytes(payload))
        super().send_frame(frame)


def socket_transports(timeout=10.0):
    prover_socket, verifier_socket = socket.socketpair()
    return (
        mithzk.session.SocketTransport(prover_socket, timeout),
        mithzk.session.SocketTransport(verifier_socket, timeout),
    )


def run_session(
    prover_statement,
    witness,
    verifier_statement,
    repetitions=10,
    seed=1,
    prover=None,
    verifier_repetitions=None,
    return_proof=False,
    wrap=None,
):
    if verifier_repetitions is None:
        verifier_repetitions = repetitions
    prover_rng, verifier_rng = mithzk.field.RandomSource(seed).spawn(2)
    prover_transport, verifier_transport = socket_transports()
    if wrap is not None:
        prover_transport = wrap(prover_transport)
    thread = ProverThread(
        mithzk.session.prover_session,
        prover_transport,
        prover_statement,
        witness,
        repetitions,
        prover_rng,
        prover=prover
    )
    thread.start()
    try:
        result = mithzk.session.verifier_session(
            verifier_transport,
            verifier_statement,
            verifier_repetitions,
            verifier_rng,
            return_proof=return_proof
        )
    except mithzk.session.SessionError as error:
        result = error
    finally:
        verifier_transport.close()
    thread.join(10)
    return thread, result


class TestFrames(unittest.TestCase):

    def test_empty_hello(self):
        frame = mithzk.session.Frame(mithzk.session.HELLO)
        assert mithzk.session.encode_frame(frame) == bytes.fromhex("0000000001")
        stream = mithzk.session.BufferStream(bytes.fromhex("0000000001"))
        assert mithzk.session.decode_frame(stream) == frame

    def test_decode(self):
        frames = [
            mithzk.session.Frame(mithzk.session.COMMIT, b"commitments"),
            mithzk.session.Frame(mithzk.session.CHALLENGE, bytes([0, 9, 4])),
            mithzk.session.Frame(mithzk.session.RESULT, b"\x01"),
        ]
        stream = mithzk.session.BufferStream(
            b"".join(mithzk.session.encode_frame(frame) for frame in frames)
        )
        for frame in frames:
            assert stream.recv_frame() == frame
        assert frames[1].name == "CHALLENGE"
        with self.assertRaises(mithzk.session.FrameError):
            stream.recv_frame()

    def test_payload_cap(self):
        mithzk.session.Frame(
            mithzk.session.COMMIT,
            bytes(mithzk.session.MAX_PAYLOAD)
        )
        with self.assertRaises(mithzk.session.FrameError):
            mithzk.session.Frame(
                mithzk.session.COMMIT,
                bytes(mithzk.session.MAX_PAYLOAD + 1)
            )
        header = struct.pack(">IB", 2**24 + 1, mithzk.session.COMMIT)
        with self.assertRaises(mithzk.session.FrameError):
            mithzk.session.decode_frame(mithzk.session.BufferStream(header))

    def test_unknown_type(self):
        with self.assertRaises(mithzk.session.FrameError):
            mithzk.session.decode_frame(
                mithzk.session.BufferStream(bytes.fromhex("0000000009"))
            )
        with self.assertRaises(mithzk.session.FrameError):
            mithzk.session.Frame(0x06)

    def test_error_payload(self):
        frame = mithzk.session.error_frame(
            mithzk.session.ERROR_STATEMENT_MISMATCH,
            "statement hash mismatch"
        )
        assert frame.msg_type == mithzk.session.ERROR
        assert mithzk.session.parse_error(frame.payload) == (
            mithzk.session.ERROR_STATEMENT_MISMATCH,
            "statement hash mismatch"
        )
        assert mithzk.session.parse_error(b"\x00")[0] == 0


class TestEndpoints(unittest.TestCase):

    def test_parse(self):
        assert mithzk.session.parse_endpoint("10.0.0.2:9000") == (
            "10.0.0.2",
            9000
        )
        assert mithzk.session.parse_endpoint(":9000") == ("127.0.0.1", 9000)
        for endpoint in ("localhost", "localhost:http", ""):
            with self.assertRaises(ValueError):
                mithzk.session.parse_endpoint(endpoint)

    def test_phases(self):
        state = mithzk.session.SessionState("verifier", 1, 1, bytes(32))
        state.advance("commit")
        state.advance("response")
        with self.assertRaises(mithzk.session.SessionError) as error:
            state.advance("challenge")
        assert error.exception.phase == "response"


class TestSessions(unittest.TestCase):

    def test_honest(self):
        statement, witness = square_plus_one_statement()
        thread, result = run_session(
            statement,
            witness,
            statement,
            return_proof=True
        )
        assert thread.error is None, thread.error
        assert thread.result is True
        verdict, proof = result
        assert verdict
        assert proof.repetitions == 10
        assert mithzk.mith.verify_repeated(statement, proof), (
            "Session transcripts do not form a valid proof."
        )

    def test_statement_mismatch(self):
        statement, witness = square_plus_one_statement()
        other, unused = square_plus_one_statement(target=2)
        thread, result = run_session(statement, witness, other)
        assert isinstance(result, mithzk.session.SessionError)
        assert result.code == mithzk.session.ERROR_STATEMENT_MISMATCH
        assert result.phase == "hello"
        assert isinstance(thread.error, mithzk.session.SessionError)
        assert thread.error.code == mithzk.session.ERROR_STATEMENT_MISMATCH, (
            "The prover should see the verifier's error code."
        )

    def test_repetition_mismatch(self):
        statement, witness = square_plus_one_statement()
        thread, result = run_session(
            statement,
            witness,
            statement,
            repetitions=3,
            verifier_repetitions=4
        )
        assert isinstance(result, mithzk.session.SessionError)
        assert result.code == mithzk.session.ERROR_REPETITIONS_MISMATCH

    def test_one_bad_pair(self):
        circuit = mithzk.harness.golden_circuit("01_square_plus_one.arith")
        statement = mithzk.harness.make_false_statement(circuit)
        bad_pair = (2, 4)
        cheater = mithzk.harness.OneBadPairCheater(
            mithzk.circuit.Witness((F11.zero,)),
            bad_pair
        )
        accepted = 0
        for seed in range(30):
            thread, (verdict, proof) = run_session(
                statement,
                None,
                statement,
                repetitions=1,
                seed=seed,
                prover=cheater,
                return_proof=True
            )
            challenge = proof.transcripts[0].challenge
            assert verdict == (challenge.pair != bad_pair), (
                f"Verdict {verdict} for challenge {challenge.pair}"
            )
            assert thread.result == verdict
            accepted += verdict
        assert accepted >= 20, (
            f"Only {accepted} of 30 single-run sessions accepted."
        )

    def test_garbage(self):
        statement, witness = square_plus_one_statement()
        thread, result = run_session(
            statement,
            None,
            statement,
            repetitions=2,
            prover=mithzk.harness.GarbageCheater()
        )
        assert result is False
        assert thread.result is False

    def test_dropped_challenge(self):
        statement, witness = square_plus_one_statement()
        prover_transport, verifier_transport = socket_transports(timeout=0.5)
        thread = ProverThread(
            mithzk.session.prover_session,
            prover_transport,
            statement,
            witness,
            2,
            mithzk.field.RandomSource(3)
        )
        thread.start()
        hello = verifier_transport.recv_frame()
        verifier_transport.send_frame(hello)
        commit = verifier_transport.recv_frame()
        assert commit.msg_type == mithzk.session.COMMIT
        thread.join(10)
        verifier_transport.close()
        assert isinstance(thread.error, mithzk.session.SessionError)
        assert thread.error.phase == "challenge", (
            f"Timeout reported in phase {thread.error.phase}"
        )

    def test_recorded_frames(self):
        statement, witness = square_plus_one_statement()
        prover_transport, verifier_transport = socket_transports()
        recorder = mithzk.session.RecordingTransport(prover_transport)
        thread = ProverThread(
            mithzk.session.prover_session,
            recorder,
            statement,
            witness,
            1,
            mithzk.field.RandomSource(4)
        )
        thread.start()
        assert mithzk.session.verifier_session(
            verifier_transport,
            statement,
            1,
            mithzk.field.RandomSource(5)
        )
        verifier_transport.close()
        thread.join(10)
        assert [
            (direction, frame.name) for direction, frame in recorder.frames
        ] == [
            ("sent", "HELLO"),
            ("received", "HELLO"),
            ("sent", "COMMIT"),
            ("received", "CHALLENGE"),
            ("sent", "RESPONSE"),
            ("received", "RESULT"),
        ]

    def test_flipped_payload_bits(self):
        statement, witness = square_plus_one_statement()
        rng = mithzk.field.RandomSource(21)
        for msg_type in (mithzk.session.COMMIT, mithzk.session.RESPONSE):
            for seed in range(500):
                transports = []

                def wrap(transport):
                    transports.append(
                        FlippingTransport(transport, msg_type, rng)
                    )
                    return transports[0]
                thread, result = run_session(
                    statement,
                    witness,
                    statement,
                    repetitions=2,
                    seed=seed,
                    wrap=wrap
                )
                flipped = transports[0].flipped
                assert flipped is not None
                assert result is False or isinstance(
                    result,
                    mithzk.session.SessionError
                ), (
                    f"Accepted with bit {flipped} of "
                    f"{mithzk.session.MESSAGE_TYPES[msg_type]} flipped."
                )
                assert thread.result is not True

    def test_verdict_matches_offline_check(self):
        statement, witness = square_plus_one_statement()
        false_statement = false_square_plus_one()
        cheater = mithzk.harness.OneBadPairCheater(
            mithzk.circuit.Witness((F11.zero,)),
            (1, 3)
        )
        verdicts = set()
        for seed in range(100):
            if seed % 2:
                current, prover = false_statement, cheater
            else:
                current, prover = statement, None
            thread, (verdict, proof) = run_session(
                current,
                witness,
                current,
                repetitions=2,
                seed=seed,
                prover=prover,
                return_proof=True,
                wrap=mithzk.session.RecordingTransport
            )
            assert verdict == mithzk.mith.verify_repeated(current, proof), (
                f"Session {seed} verdict differs from the offline check."
            )
            frames = {
                frame.name: (index, frame)
                for index, (direction, frame) in enumerate(
                    thread.transport.frames
                )
            }
            assert frames["COMMIT"][0] < frames["CHALLENGE"][0]
            assert frames["CHALLENGE"][1].payload == bytes(
                transcript.challenge.index
                for transcript in proof.transcripts
            )
            verdicts.add(verdict)
        assert verdicts == {True, False}


class TestBufferedSessions(unittest.TestCase):

    def test_unexpected_frame(self):
        statement, witness = square_plus_one_statement()
        stream = mithzk.session.BufferStream(
            mithzk.session.encode_frame(
                mithzk.session.Frame(mithzk.session.COMMIT, b"")
            )
        )
        with self.assertRaises(mithzk.session.SessionError) as error:
            mithzk.session.verifier_session(
                stream,
                statement,
                1,
                mithzk.field.RandomSource(6)
            )
        assert error.exception.code == mithzk.session.ERROR_UNEXPECTED_FRAME
        reply = mithzk.session.BufferStream(bytes(stream.sent)).recv_frame()
        assert reply.msg_type == mithzk.session.ERROR

    def test_empty_hello(self):
        statement, witness = square_plus_one_statement()
        stream = mithzk.session.BufferStream(bytes.fromhex("0000000001"))
        with self.assertRaises(mithzk.session.SessionError) as error:
            mithzk.session.verifier_session(
                stream,
                statement,
                1,
                mithzk.field.RandomSource(7)
            )
        assert error.exception.code == mithzk.session.ERROR_VERSION

    def test_closed_stream(self):
        statement, witness = square_plus_one_statement()
        with self.assertRaises(mithzk.session.SessionError) as error:
            mithzk.session.verifier_session(
                mithzk.session.BufferStream(b""),
                statement,
                1,
                mithzk.field.RandomSource(8)
            )
        assert error.exception.phase == "hello"
        assert error.exception.code is None


if __name__ == "__main__":
    unittest.main()
