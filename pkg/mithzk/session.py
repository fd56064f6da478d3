#!python
"""This module runs the 3-pass protocol between a live prover and verifier.

Messages are frames of a 4-byte big-endian payload length, a 1-byte type
and the payload. All sigma repetitions are batched, one frame per phase:

    prover                     verifier
    HELLO(params)        ->
                         <-    HELLO(params) or ERROR
    COMMIT(sigma msgs)   ->
                         <-    CHALLENGE(sigma bytes)
    RESPONSE(sigma)      ->
                         <-    RESULT(accept byte)

RESPONSE starts with the SHA-256 of the COMMIT payload the prover sent,
so a verifier rejects commitments altered in transit.
The channel is not encrypted or authenticated.
"""

# builtin
import dataclasses
import functools
import hashlib
import logging
import socket
import struct
import time
# local
import mithzk.circuit
import mithzk.commit
import mithzk.field
import mithzk.mith
import mithzk.utils


HELLO = 0x01
COMMIT = 0x02
CHALLENGE = 0x03
RESPONSE = 0x04
RESULT = 0x05
ERROR = 0x7F
MESSAGE_TYPES = {
    HELLO: "HELLO",
    COMMIT: "COMMIT",
    CHALLENGE: "CHALLENGE",
    RESPONSE: "RESPONSE",
    RESULT: "RESULT",
    ERROR: "ERROR",
}
FRAME_HEADER_SIZE = 5
MAX_PAYLOAD = 2**24
PROTOCOL_VERSION = 0x01
DEFAULT_TIMEOUT = 30.0
PHASES = ("hello", "commit", "challenge", "response", "done")

ERROR_VERSION = 0x0001
ERROR_STATEMENT_MISMATCH = 0x0002
ERROR_SCHEME_MISMATCH = 0x0003
ERROR_REPETITIONS_MISMATCH = 0x0004
ERROR_UNEXPECTED_FRAME = 0x0005
ERROR_MALFORMED = 0x0006


class FrameError(ValueError):
    """Used to indicate a frame that violates the wire format."""
    pass


class SessionError(RuntimeError):
    """Used to indicate a session that ended without a verdict."""

    def __init__(self, phase: str, message: str, code: int = None):
        prefix = f"[{phase}]" if code is None else f"[{phase}, code {code:#06x}]"
        super().__init__(f"{prefix} {message}")
        self.phase = phase
        self.code = code


@dataclasses.dataclass(frozen=True)
class Frame:
    msg_type: int
    payload: bytes = b""

    def __post_init__(self):
        if self.msg_type not in MESSAGE_TYPES:
            raise FrameError(f"Unknown message type {self.msg_type:#x}")
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameError(
                f"Payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}"
            )

    @property
    def name(self) -> str:
        return MESSAGE_TYPES[self.msg_type]


def encode_frame(frame: Frame) -> bytes:
    return struct.pack(">IB", len(frame.payload), frame.msg_type) + bytes(
        frame.payload
    )


def decode_frame(stream) -> Frame:
    """Read exactly one frame from an object with `recv_exact(size)`.

    Raises
    ------
    FrameError
        On an oversized length, an unknown type or a truncated stream.
    """
    length, msg_type = struct.unpack(
        ">IB",
        stream.recv_exact(FRAME_HEADER_SIZE)
    )
    if length > MAX_PAYLOAD:
        raise FrameError(f"Frame length {length} exceeds {MAX_PAYLOAD}")
    if msg_type not in MESSAGE_TYPES:
        raise FrameError(f"Unknown message type {msg_type:#x}")
    return Frame(msg_type, stream.recv_exact(length))


class Transport(object):
    """An ordered, reliable byte stream with per-phase deadlines."""

    def send(self, data: bytes) -> None:
        raise NotImplementedError

    def recv_exact(self, size: int) -> bytes:
        raise NotImplementedError

    def start_phase(self, phase: str) -> None:
        pass

    def send_frame(self, frame: Frame) -> None:
        self.send(encode_frame(frame))

    def recv_frame(self) -> Frame:
        return decode_frame(self)

    def close(self) -> None:
        pass


class BufferStream(Transport):
    """Reads frames from a byte string and collects sent bytes."""

    def __init__(self, data: bytes = b""):
        self._reader = mithzk.utils.ByteReader(data)
        self.sent = bytearray()

    def send(self, data):
        self.sent += data

    def recv_exact(self, size):
        try:
            return self._reader.read(size)
        except mithzk.utils.TruncatedDataError as error:
            raise FrameError(f"Truncated stream ({error})")


class SocketTransport(Transport):
    """A TCP transport; every phase must complete within `timeout` seconds."""

    def __init__(self, sock: socket.socket, timeout: float = DEFAULT_TIMEOUT):
        self.sock = sock
        self.timeout = timeout
        self._deadline = None

    def start_phase(self, phase):
        self._deadline = time.monotonic() + self.timeout

    def _remaining(self) -> float:
        if self._deadline is None:
            return self.timeout
        remaining = self._deadline - time.monotonic()
        if remaining <= 0:
            raise TimeoutError("Phase deadline passed")
        return remaining

    def send(self, data):
        self.sock.settimeout(self._remaining())
        self.sock.sendall(data)

    def recv_exact(self, size):
        chunks = []
        received = 0
        while received < size:
            self.sock.settimeout(self._remaining())
            try:
                chunk = self.sock.recv(min(size - received, 1 << 16))
            except socket.timeout:
                raise TimeoutError("Timed out waiting for data")
            if not chunk:
                raise FrameError(
                    f"Connection closed after {received} of {size} bytes"
                )
            chunks.append(chunk)
            received += len(chunk)
        return b"".join(chunks)

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class RecordingTransport(Transport):
    """Wraps a transport and logs every frame as (direction, frame)."""

    def __init__(self, inner: Transport):
        self.inner = inner
        self.frames = []

    def send(self, data):
        self.inner.send(data)

    def recv_exact(self, size):
        return self.inner.recv_exact(size)

    def start_phase(self, phase):
        self.inner.start_phase(phase)

    def send_frame(self, frame):
        self.inner.send_frame(frame)
        self.frames.append(("sent", frame))

    def recv_frame(self):
        frame = self.inner.recv_frame()
        self.frames.append(("received", frame))
        return frame

    def close(self):
        self.inner.close()


def parse_endpoint(endpoint: str) -> tuple:
    """Split "host:port" (host defaults to 127.0.0.1)."""
    host, separator, port = endpoint.rpartition(":")
    if (separator == "") or not port.isdigit():
        raise ValueError(f"Endpoint '{endpoint}' is not host:port")
    return (host or "127.0.0.1", int(port))


def connect(endpoint: str, timeout: float = DEFAULT_TIMEOUT) -> SocketTransport:
    logging.info(f"Connecting to {endpoint}")
    sock = socket.create_connection(parse_endpoint(endpoint), timeout=timeout)
    return SocketTransport(sock, timeout)


def listen(endpoint: str, timeout: float = DEFAULT_TIMEOUT) -> SocketTransport:
    """Accept a single connection on endpoint."""
    address = parse_endpoint(endpoint)
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(address)
        server.listen(1)
        logging.info(f"Waiting for a connection on {endpoint}")
        server.settimeout(timeout)
        sock, peer = server.accept()
    logging.info(f"Accepted connection from {peer[0]}:{peer[1]}")
    return SocketTransport(sock, timeout)


class SessionState(object):
    """The phase of one side of a session; phases only move forward."""

    def __init__(
        self,
        role: str,
        repetitions: int,
        scheme_id: int,
        statement_hash: bytes,
    ):
        self.role = role
        self.phase = PHASES[0]
        self.repetitions = repetitions
        self.scheme_id = scheme_id
        self.statement_hash = statement_hash

    def advance(self, phase: str) -> None:
        if PHASES.index(phase) <= PHASES.index(self.phase):
            raise SessionError(
                self.phase,
                f"{self.role} cannot move back to phase '{phase}'"
            )
        self.phase = phase

    def hello_payload(self) -> bytes:
        return bytes([PROTOCOL_VERSION, self.scheme_id]) + (
            mithzk.utils.encode_u32(self.repetitions) + self.statement_hash
        )


def error_frame(code: int, message: str) -> Frame:
    return Frame(ERROR, struct.pack(">H", code) + message.encode("utf-8"))


def parse_error(payload: bytes) -> tuple:
    if len(payload) < 2:
        return 0, "malformed error frame"
    return (
        struct.unpack(">H", payload[:2])[0],
        payload[2:].decode("utf-8", errors="replace")
    )


def _receive(
    transport: Transport,
    state: SessionState,
    expected: tuple,
) -> Frame:
    """Receive a frame of an expected type; ERROR frames end the session."""
    frame = transport.recv_frame()
    if frame.msg_type == ERROR:
        code, message = parse_error(frame.payload)
        raise SessionError(state.phase, f"peer reported: {message}", code)
    if frame.msg_type not in expected:
        _send_error(
            transport,
            state,
            ERROR_UNEXPECTED_FRAME,
            f"unexpected {frame.name} frame"
        )
    return frame


def _send_error(transport, state, code, message) -> None:
    try:
        transport.send_frame(error_frame(code, message))
    except (OSError, FrameError):
        pass
    raise SessionError(state.phase, message, code)


def _guarded(function):
    """Map transport failures to SessionError with phase context."""

    def wrapper(transport, *args, **kwargs):
        state_holder = []
        try:
            return function(transport, state_holder, *args, **kwargs)
        except SessionError:
            raise
        except (OSError, FrameError) as error:
            phase = state_holder[0].phase if state_holder else PHASES[0]
            raise SessionError(phase, f"transport failure ({error})")
    return functools.wraps(function)(wrapper)


def _parse_result(frame: Frame, state: SessionState) -> bool:
    if frame.payload not in (b"\x00", b"\x01"):
        raise SessionError(state.phase, "malformed RESULT frame")
    return frame.payload == b"\x01"


@_guarded
def prover_session(
    transport: Transport,
    state_holder: list,
    statement: mithzk.circuit.Statement,
    witness: mithzk.circuit.Witness,
    repetitions: int,
    rng: mithzk.field.RandomSource,
    *,
    scheme: mithzk.commit.CommitmentScheme = None,
    prover: mithzk.mith.ProverStrategy = None,
) -> bool:
    """Run the prover side of a session and return the verifier's verdict.

    Parameters
    ----------
    transport : Transport
        The connection to the verifier.
    statement : mithzk.circuit.Statement
        The statement.
    witness : mithzk.circuit.Witness
        The witness, used when no prover is given.
    repetitions : int
        The number of repetitions sigma.
    rng : mithzk.field.RandomSource
        The prover's randomness.
    scheme : mithzk.commit.CommitmentScheme, None
        The commitment scheme. If None, the PRF scheme is used.
        Default is None.
    prover : mithzk.mith.ProverStrategy, None
        The prover. If None, an honest prover with witness is used.
        Default is None.

    Returns
    -------
    : bool
        True if the verifier accepted.

    Raises
    ------
    SessionError
        On a peer error, an out-of-order frame or a transport failure.
    """
    mithzk.mith.check_repetitions(repetitions)
    if prover is None:
        prover = mithzk.mith.HonestProver(witness, scheme)
    scheme = prover.scheme
    state = SessionState(
        "prover",
        repetitions,
        scheme.scheme_id,
        statement.hash
    )
    state_holder.append(state)
    transport.start_phase(state.phase)
    transport.send_frame(Frame(HELLO, state.hello_payload()))
    hello = _receive(transport, state, (HELLO,))
    if hello.payload != state.hello_payload():
        _send_error(
            transport,
            state,
            ERROR_MALFORMED,
            "HELLO acknowledgement differs"
        )
    state.advance("commit")
    transport.start_phase(state.phase)
    commits = [
        prover.commit(statement, repetition_rng)
        for repetition_rng in rng.spawn(repetitions)
    ]
    commit_payload = b"".join(
        commitment.encode(scheme) for s, commitment in commits
    )
    transport.send_frame(Frame(COMMIT, commit_payload))
    state.advance("challenge")
    transport.start_phase(state.phase)
    frame = _receive(transport, state, (CHALLENGE, RESULT))
    if frame.msg_type == RESULT:
        state.advance("done")
        return _parse_result(frame, state)
    if len(frame.payload) != repetitions or any(
        index >= mithzk.mith.CHALLENGE_COUNT for index in frame.payload
    ):
        _send_error(transport, state, ERROR_MALFORMED, "malformed CHALLENGE")
    challenges = [
        mithzk.mith.Challenge.from_index(index) for index in frame.payload
    ]
    state.advance("response")
    transport.start_phase(state.phase)
    transport.send_frame(
        Frame(
            RESPONSE,
            hashlib.sha256(commit_payload).digest() + b"".join(
                prover.respond(prover_state, challenge).encode(scheme)
                for (prover_state, c), challenge in zip(commits, challenges)
            )
        )
    )
    frame = _receive(transport, state, (RESULT,))
    state.advance("done")
    verdict = _parse_result(frame, state)
    logging.info(f"Verifier {'accepted' if verdict else 'rejected'}")
    return verdict


def _decode_batch(payload: bytes, count: int, decode_item) -> list:
    """Decode exactly count items; None if the payload is malformed."""
    reader = mithzk.utils.ByteReader(payload)
    try:
        items = [decode_item(reader) for index in range(count)]
        reader.expect_end()
    except (ValueError, KeyError):
        return None
    return items


@_guarded
def verifier_session(
    transport: Transport,
    state_holder: list,
    statement: mithzk.circuit.Statement,
    repetitions: int,
    rng: mithzk.field.RandomSource,
    *,
    scheme: mithzk.commit.CommitmentScheme = None,
    return_proof: bool = False,
):
    """Run the verifier side of a session.

    Challenges are drawn only after the whole COMMIT frame arrived.
    A malformed commitment or response is rejected, not an error.

    Parameters
    ----------
    transport : Transport
        The connection to the prover.
    statement : mithzk.circuit.Statement
        The statement.
    repetitions : int
        The number of repetitions sigma the prover must use.
    rng : mithzk.field.RandomSource
        The verifier's coins.
    scheme : mithzk.commit.CommitmentScheme, None
        The commitment scheme. If None, the PRF scheme is used.
        Default is None.
    return_proof : bool
        If True, the received transcripts are returned as a
        "transcript"-mode Proof (None if they were malformed).
        Default is False.

    Returns
    -------
    : bool, tuple
        The verdict, with the Proof if return_proof is True.

    Raises
    ------
    SessionError
        On a HELLO mismatch, a peer error, an out-of-order frame or a
        transport failure.
    """
    mithzk.mith.check_repetitions(repetitions)
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    state = SessionState(
        "verifier",
        repetitions,
        scheme.scheme_id,
        statement.hash
    )
    state_holder.append(state)
    transport.start_phase(state.phase)
    hello = _receive(transport, state, (HELLO,))
    expected = state.hello_payload()
    if len(hello.payload) != len(expected) or (
        hello.payload[0] != PROTOCOL_VERSION
    ):
        _send_error(transport, state, ERROR_VERSION, "unsupported HELLO")
    if hello.payload[6:] != statement.hash:
        _send_error(
            transport,
            state,
            ERROR_STATEMENT_MISMATCH,
            "statement hash mismatch"
        )
    if hello.payload[1] != scheme.scheme_id:
        _send_error(
            transport,
            state,
            ERROR_SCHEME_MISMATCH,
            "commitment scheme mismatch"
        )
    if hello.payload != expected:
        _send_error(
            transport,
            state,
            ERROR_REPETITIONS_MISMATCH,
            "repetition count mismatch"
        )
    transport.send_frame(Frame(HELLO, expected))
    state.advance("commit")
    transport.start_phase(state.phase)
    frame = _receive(transport, state, (COMMIT,))
    commit_digest = hashlib.sha256(frame.payload).digest()
    commitments = _decode_batch(
        frame.payload,
        repetitions,
        lambda reader: mithzk.mith.CommitmentMsg.decode(reader, scheme)
    )

    def finish(verdict, transcripts=None):
        transport.send_frame(Frame(RESULT, bytes([int(verdict)])))
        state.advance("done")
        logging.info(f"Session {'accepted' if verdict else 'rejected'}")
        if not return_proof:
            return verdict
        proof = None
        if transcripts is not None:
            proof = mithzk.mith.Proof(
                scheme.scheme_id,
                "transcript",
                statement.hash,
                tuple(transcripts)
            )
        return verdict, proof

    if commitments is None:
        return finish(False)
    state.advance("challenge")
    challenges = []
    verifier_states = []
    for commitment in commitments:
        verifier_state, challenge = mithzk.mith.verifier_challenge(
            rng,
            statement,
            commitment,
            scheme
        )
        verifier_states.append(verifier_state)
        challenges.append(challenge)
    transport.send_frame(
        Frame(CHALLENGE, bytes(challenge.index for challenge in challenges))
    )
    state.advance("response")
    transport.start_phase(state.phase)
    frame = _receive(transport, state, (RESPONSE,))
    if frame.payload[:32] != commit_digest:
        return finish(False)
    responses = _decode_batch(
        frame.payload[32:],
        repetitions,
        lambda reader: mithzk.mith.Response.decode(
            reader,
            statement.modulus,
            scheme
        )
    )
    if responses is None:
        return finish(False)
    verdict = all(
        [
            mithzk.mith.verifier_check(verifier_state, response)
            for verifier_state, response in zip(verifier_states, responses)
        ]
    )
    return finish(
        verdict,
        [
            mithzk.mith.Transcript(commitment, challenge, response)
            for commitment, challenge, response in zip(
                commitments,
                challenges,
                responses
            )
        ]
    )
