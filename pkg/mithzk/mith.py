#!python
"""This module provides the MPC-in-the-Head zero-knowledge protocol.

The prover shares its witness, runs the 5-party protocol in its head,
commits to all 5 views and opens the two views of the pair (i, j) that the
verifier challenges. The verifier checks both openings, the consistency of
the two views and that both local outputs equal the statement's target.
A single run has soundness error 9/10 (plus the binding advantage);
sigma repetitions bring it to (9/10)^sigma.

Offline proofs either record the challenges of an interactive verifier
("transcript" mode) or derive them with HMAC-SHA256 from the statement
hash and all commitments ("derived" mode). The derived mode is a
Fiat-Shamir-style heuristic outside the interactive soundness guarantee.
"""

# builtin
import dataclasses
import hashlib
import hmac
import logging
# local
import mithzk.circuit
import mithzk.commit
import mithzk.field
import mithzk.mpc
import mithzk.sss
import mithzk.utils


CHALLENGES = mithzk.sss.PARTY_PAIRS
CHALLENGE_COUNT = len(CHALLENGES)
PROOF_MAGIC = b"MITH1"
MODE_IDS = {
    "transcript": 0x01,
    "derived": 0x02,
}
MODES = {mode_id: mode for mode, mode_id in MODE_IDS.items()}
DEFAULT_REPETITIONS = 40
DEFAULT_MAX_RETRIES = 1000
MAX_REPETITIONS = 1 << 16


class ProverRandomnessError(ValueError):
    """Used to indicate a randomness bundle that does not cover a statement."""
    pass


class ProofFormatError(ValueError):
    """Used to indicate a malformed proof file."""
    pass


class StatementMismatchError(ValueError):
    """Used to indicate a proof made for another statement."""
    pass


class SimulationFailure(RuntimeError):
    """Used to indicate that the simulator ran out of retries."""
    pass


@dataclasses.dataclass(frozen=True)
class Challenge:
    """An unordered pair of parties, stored as i < j."""
    i: int
    j: int

    def __post_init__(self):
        mithzk.sss.check_corrupt_pair((self.i, self.j))
        if self.i > self.j:
            raise mithzk.sss.PartyError(
                f"Challenge pairs are stored as i < j, got ({self.i}, {self.j})"
            )

    @property
    def index(self) -> int:
        """: int : The lexicographic position of (i, j) among the 10 pairs."""
        return CHALLENGES.index((self.i, self.j))

    @property
    def pair(self) -> tuple:
        return (self.i, self.j)

    @classmethod
    def from_index(cls, index: int) -> "Challenge":
        if not 0 <= index < CHALLENGE_COUNT:
            raise ValueError(f"Challenge index {index} is not in [0, 10)")
        return cls(*CHALLENGES[index])


@dataclasses.dataclass(frozen=True)
class ProverRand:
    """The prover's coins: sharing, MPC and commitment randomness."""
    r_ss: tuple
    r_mpc: mithzk.mpc.GateRandomness
    r_cs: tuple


@dataclasses.dataclass(frozen=True)
class CommitmentMsg:
    commitments: tuple

    def encode(self, scheme: mithzk.commit.CommitmentScheme) -> bytes:
        return b"".join(
            scheme.encode_commitment(commitment)
            for commitment in self.commitments
        )

    @classmethod
    def decode(
        cls,
        reader: mithzk.utils.ByteReader,
        scheme: mithzk.commit.CommitmentScheme,
    ) -> "CommitmentMsg":
        return cls(
            tuple(
                scheme.decode_commitment(reader)
                for party in mithzk.sss.PARTIES
            )
        )


@dataclasses.dataclass(frozen=True)
class Response:
    """The opened views and openings of parties i and j."""
    view_i: mithzk.mpc.View
    opening_i: object
    view_j: mithzk.mpc.View
    opening_j: object

    def encode(self, scheme: mithzk.commit.CommitmentScheme) -> bytes:
        return b"".join(
            [
                self.view_i.to_bytes(),
                scheme.encode_opening(self.opening_i),
                self.view_j.to_bytes(),
                scheme.encode_opening(self.opening_j),
            ]
        )

    @classmethod
    def decode(
        cls,
        reader: mithzk.utils.ByteReader,
        modulus: mithzk.field.Modulus,
        scheme: mithzk.commit.CommitmentScheme,
    ) -> "Response":
        view_i = mithzk.mpc.decode_view(reader, modulus)
        opening_i = scheme.decode_opening(reader)
        view_j = mithzk.mpc.decode_view(reader, modulus)
        opening_j = scheme.decode_opening(reader)
        return cls(view_i, opening_i, view_j, opening_j)


@dataclasses.dataclass(frozen=True)
class Transcript:
    commitment: CommitmentMsg
    challenge: Challenge
    response: Response


@dataclasses.dataclass(frozen=True)
class Proof:
    scheme_id: int
    mode: str
    statement_hash: bytes
    transcripts: tuple

    @property
    def repetitions(self) -> int:
        return len(self.transcripts)


@dataclasses.dataclass(frozen=True)
class ProverState:
    statement: mithzk.circuit.Statement
    scheme: mithzk.commit.CommitmentScheme
    views: tuple
    openings: tuple


@dataclasses.dataclass(frozen=True)
class VerifierState:
    statement: mithzk.circuit.Statement
    scheme: mithzk.commit.CommitmentScheme
    commitment: CommitmentMsg
    challenge: Challenge


def commitment_key_template(
    circuit: mithzk.circuit.Circuit
) -> mithzk.mpc.View:
    """A view with the shape of every real view, for sizing commit keys."""
    return mithzk.mpc.View.zeros(circuit)


def sample_prover_rand(
    statement: mithzk.circuit.Statement,
    scheme: mithzk.commit.CommitmentScheme,
    rng: mithzk.field.RandomSource,
) -> ProverRand:
    """Fresh prover coins for one repetition."""
    circuit = statement.circuit
    template = commitment_key_template(circuit)
    return ProverRand(
        tuple(
            mithzk.sss.sample_ss_randomness(rng, circuit.modulus)
            for index in range(circuit.topology.n_secret)
        ),
        mithzk.mpc.sample_gate_randomness(circuit, rng),
        tuple(
            scheme.sample_key(rng, template) for party in mithzk.sss.PARTIES
        ),
    )


def _check_prover_rand(
    prover_rand: ProverRand,
    statement: mithzk.circuit.Statement,
) -> None:
    circuit = statement.circuit
    if len(prover_rand.r_ss) != circuit.topology.n_secret:
        raise ProverRandomnessError(
            f"Sharing randomness covers {len(prover_rand.r_ss)} of "
            f"{circuit.topology.n_secret} secret inputs"
        )
    missing = set(mithzk.circuit.multiplication_gates(circuit)) - set(
        prover_rand.r_mpc.mul
    )
    if missing:
        raise ProverRandomnessError(
            f"No MPC randomness for gates {sorted(missing)}"
        )
    if len(prover_rand.r_mpc.refresh) != mithzk.sss.PARTY_COUNT:
        raise ProverRandomnessError("Refresh randomness needs 5 entries")
    if len(prover_rand.r_cs) != mithzk.sss.PARTY_COUNT:
        raise ProverRandomnessError("Commitment randomness needs 5 keys")


def commit_views(
    statement: mithzk.circuit.Statement,
    scheme: mithzk.commit.CommitmentScheme,
    views,
    keys,
) -> tuple:
    """Commit to 5 views; returns the prover state and the commitment message."""
    commitments = tuple(
        scheme.commit(key, view) for key, view in zip(keys, views)
    )
    state = ProverState(statement, scheme, tuple(views), tuple(keys))
    return state, CommitmentMsg(commitments)


def prover_commit(
    prover_rand: ProverRand,
    witness: mithzk.circuit.Witness,
    statement: mithzk.circuit.Statement,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> tuple:
    """Share the witness, run the protocol in the head and commit to all views.

    Parameters
    ----------
    prover_rand : ProverRand
        The prover's coins.
    witness : mithzk.circuit.Witness
        The witness; it is not checked against the statement.
    statement : mithzk.circuit.Statement
        The statement.
    scheme : mithzk.commit.CommitmentScheme, None
        The commitment scheme. If None, the PRF scheme is used.
        Default is None.

    Returns
    -------
    : tuple
        The ProverState and the CommitmentMsg.

    Raises
    ------
    ProverRandomnessError
        If the randomness does not cover the statement's circuit.
    """
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    mithzk.circuit.check_witness(statement, witness)
    _check_prover_rand(prover_rand, statement)
    input_sharings = [
        mithzk.sss.share(value, randomness)
        for value, randomness in zip(witness.secret_inputs, prover_rand.r_ss)
    ]
    execution = mithzk.mpc.run_protocol(
        statement,
        input_sharings,
        prover_rand.r_mpc
    )
    return commit_views(statement, scheme, execution.views, prover_rand.r_cs)


def verifier_challenge(
    rng: mithzk.field.RandomSource,
    statement: mithzk.circuit.Statement,
    commitment: CommitmentMsg,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> tuple:
    """Draw a uniform challenge among the 10 pairs; it ignores the commitment."""
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    challenge = Challenge.from_index(rng.randbelow(CHALLENGE_COUNT))
    return VerifierState(statement, scheme, commitment, challenge), challenge


def prover_respond(state: ProverState, challenge: Challenge) -> Response:
    """Open the committed views of the challenged parties."""
    i, j = challenge.pair
    return Response(
        state.views[i - 1],
        state.openings[i - 1],
        state.views[j - 1],
        state.openings[j - 1],
    )


def verifier_check(state: VerifierState, response: Response) -> bool:
    """Accept iff both openings verify, the two views are consistent and
    both local outputs equal the target. Malformed input is rejected."""
    statement = state.statement
    circuit = statement.circuit
    i, j = state.challenge.pair
    try:
        commitments = state.commitment.commitments
        if len(commitments) != mithzk.sss.PARTY_COUNT:
            return False
        if not state.scheme.verify(
            response.view_i,
            commitments[i - 1],
            response.opening_i
        ):
            return False
        if not state.scheme.verify(
            response.view_j,
            commitments[j - 1],
            response.opening_j
        ):
            return False
        if not mithzk.mpc.consistent_views(
            circuit,
            statement.public_inputs,
            response.view_i,
            response.view_j,
            i,
            j
        ):
            return False
        for party, view in ((i, response.view_i), (j, response.view_j)):
            if mithzk.mpc.local_output(circuit, party, view) != statement.target:
                return False
    except (AttributeError, TypeError, ValueError, KeyError, IndexError):
        return False
    return True


class ProverStrategy(object):
    """A prover that commits and later answers one challenge.

    `commit` returns an opaque state and a CommitmentMsg, `respond`
    turns the state and a challenge into a Response.
    """

    def __init__(self, scheme: mithzk.commit.CommitmentScheme = None):
        if scheme is None:
            scheme = mithzk.commit.PRFCommitmentScheme()
        self.scheme = scheme

    def commit(self, statement, rng):
        raise NotImplementedError

    def respond(self, state, challenge: Challenge):
        raise NotImplementedError


class HonestProver(ProverStrategy):

    def __init__(
        self,
        witness: mithzk.circuit.Witness,
        scheme: mithzk.commit.CommitmentScheme = None,
    ):
        super().__init__(scheme)
        self.witness = witness

    def commit(self, statement, rng):
        prover_rand = sample_prover_rand(statement, self.scheme, rng)
        return prover_commit(prover_rand, self.witness, statement, self.scheme)

    def respond(self, state, challenge):
        return prover_respond(state, challenge)


def derive_challenges(
    statement_hash: bytes,
    commitments,
    scheme: mithzk.commit.CommitmentScheme,
) -> list:
    """Challenge r = HMAC-SHA256(hash, r as u32 || all commitments) mod 10."""
    encoded = b"".join(commitment.encode(scheme) for commitment in commitments)
    challenges = []
    for repetition in range(len(commitments)):
        digest = hmac.new(
            statement_hash,
            mithzk.utils.encode_u32(repetition) + encoded,
            hashlib.sha256
        ).digest()
        challenges.append(
            Challenge.from_index(
                int.from_bytes(digest, "big") % CHALLENGE_COUNT
            )
        )
    return challenges


def check_repetitions(repetitions: int) -> int:
    if isinstance(repetitions, bool) or not isinstance(repetitions, int):
        raise ValueError(f"Repetitions must be an int, got {repetitions!r}")
    if not 1 <= repetitions <= MAX_REPETITIONS:
        raise ValueError(
            f"Repetitions must be in [1, {MAX_REPETITIONS}], got {repetitions}"
        )
    return repetitions


def prove_repeated(
    witness: mithzk.circuit.Witness,
    statement: mithzk.circuit.Statement,
    repetitions: int,
    rng: mithzk.field.RandomSource,
    *,
    scheme: mithzk.commit.CommitmentScheme = None,
    mode: str = "derived",
    prover: ProverStrategy = None,
) -> Proof:
    """Create sigma parallel transcripts.

    Parameters
    ----------
    witness : mithzk.circuit.Witness
        The witness, used when no prover is given.
    statement : mithzk.circuit.Statement
        The statement.
    repetitions : int
        The number of repetitions sigma >= 1.
    rng : mithzk.field.RandomSource
        The prover's randomness; in "transcript" mode the challenges of a
        local honest verifier are drawn from a child source.
    scheme : mithzk.commit.CommitmentScheme, None
        The commitment scheme. If None, the PRF scheme is used.
        Default is None.
    mode : str
        "derived" or "transcript".
        Default is "derived".
    prover : ProverStrategy, None
        The prover. If None, an HonestProver with witness is used.
        Default is None.

    Returns
    -------
    : Proof
        The proof.
    """
    check_repetitions(repetitions)
    if mode not in MODE_IDS:
        raise ValueError(f"Unknown challenge mode '{mode}'")
    if prover is None:
        prover = HonestProver(witness, scheme)
    scheme = prover.scheme
    scheme.check_field(statement.modulus)
    logging.info(
        f"Proving with {repetitions} repetitions, {scheme.name} commitments "
        f"and {mode} challenges"
    )
    prover_rng, verifier_rng = rng.spawn(2)
    commits = [
        prover.commit(statement, repetition_rng)
        for repetition_rng in prover_rng.spawn(repetitions)
    ]
    commitments = [commitment for state, commitment in commits]
    if mode == "derived":
        challenges = derive_challenges(statement.hash, commitments, scheme)
    else:
        challenges = [
            verifier_challenge(verifier_rng, statement, commitment, scheme)[1]
            for commitment in commitments
        ]
    transcripts = tuple(
        Transcript(commitment, challenge, prover.respond(state, challenge))
        for (state, commitment), challenge in zip(commits, challenges)
    )
    return Proof(scheme.scheme_id, mode, statement.hash, transcripts)


def check_repeated(
    statement: mithzk.circuit.Statement,
    proof: Proof,
    scheme: mithzk.commit.CommitmentScheme,
    mode: str = None,
) -> list:
    """The verdict of every repetition.

    In "derived" mode a repetition only passes if its recorded challenge
    equals the derived challenge.

    Raises
    ------
    StatementMismatchError
        If the proof was made for another statement.
    ProofFormatError
        If the proof has no repetitions or another commitment scheme.
    """
    if mode is None:
        mode = proof.mode
    if mode not in MODE_IDS:
        raise ValueError(f"Unknown challenge mode '{mode}'")
    if proof.statement_hash != statement.hash:
        raise StatementMismatchError(
            "Proof statement hash does not match the statement"
        )
    if proof.repetitions == 0:
        raise ProofFormatError("Proof has no repetitions")
    if proof.scheme_id != scheme.scheme_id:
        raise ProofFormatError(
            f"Proof uses scheme {proof.scheme_id:#x}, "
            f"verifier uses {scheme.scheme_id:#x}"
        )
    if mode == "derived":
        expected = derive_challenges(
            statement.hash,
            [transcript.commitment for transcript in proof.transcripts],
            scheme
        )
    else:
        expected = [transcript.challenge for transcript in proof.transcripts]
    verdicts = []
    for transcript, challenge in zip(proof.transcripts, expected):
        state = VerifierState(
            statement,
            scheme,
            transcript.commitment,
            transcript.challenge
        )
        verdicts.append(
            (transcript.challenge == challenge) and verifier_check(
                state,
                transcript.response
            )
        )
    return verdicts


def verify_repeated(
    statement: mithzk.circuit.Statement,
    proof: Proof,
    mode: str = None,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> bool:
    """Accept iff every repetition passes; see check_repeated."""
    if scheme is None:
        scheme = mithzk.commit.get_scheme(proof.scheme_id)
    return all(check_repeated(statement, proof, scheme, mode))


def soundness_bound(repetitions: int, binding_advantage: float = 0.0) -> float:
    """(1 - 1/10 + binding_advantage) ** repetitions.

    Raises
    ------
    ValueError
        If repetitions < 1 or binding_advantage is not in [0, 0.1).
    """
    check_repetitions(repetitions)
    if not 0 <= binding_advantage < 1 / CHALLENGE_COUNT:
        raise ValueError(
            f"Binding advantage {binding_advantage} is not in [0, 0.1)"
        )
    return (1 - 1 / CHALLENGE_COUNT + binding_advantage) ** repetitions


def encode_proof(proof: Proof, scheme: mithzk.commit.CommitmentScheme) -> bytes:
    """The proof file format.

    Magic "MITH1", scheme byte, mode byte, sigma as u32, the 32-byte
    statement hash, then per transcript the 5 commitments, the challenge
    index byte and the two (view, opening) blocks.
    """
    encoded = [
        PROOF_MAGIC,
        bytes([proof.scheme_id, MODE_IDS[proof.mode]]),
        mithzk.utils.encode_u32(proof.repetitions),
        proof.statement_hash,
    ]
    for transcript in proof.transcripts:
        encoded.append(transcript.commitment.encode(scheme))
        encoded.append(bytes([transcript.challenge.index]))
        encoded.append(transcript.response.encode(scheme))
    return b"".join(encoded)


def read_proof_header(reader: mithzk.utils.ByteReader) -> tuple:
    """Read (scheme id, mode, repetitions, statement hash)."""
    try:
        if reader.read(len(PROOF_MAGIC)) != PROOF_MAGIC:
            raise ProofFormatError("Not a proof file")
        scheme_id = reader.read_byte()
        mode_id = reader.read_byte()
        repetitions = reader.read_u32()
        statement_hash = reader.read(32)
    except mithzk.utils.TruncatedDataError as error:
        raise ProofFormatError(f"Truncated proof header ({error})")
    if mode_id not in MODES:
        raise ProofFormatError(f"Unknown challenge mode byte {mode_id:#x}")
    if scheme_id not in mithzk.commit.SCHEME_NAMES.values():
        raise ProofFormatError(f"Unknown scheme byte {scheme_id:#x}")
    if not 1 <= repetitions <= MAX_REPETITIONS:
        raise ProofFormatError(f"Implausible repetition count {repetitions}")
    return scheme_id, MODES[mode_id], repetitions, statement_hash


def decode_proof(
    data: bytes,
    modulus: mithzk.field.Modulus,
    scheme: mithzk.commit.CommitmentScheme = None,
    pedersen_group: str = mithzk.commit.DEFAULT_PEDERSEN_GROUP,
) -> tuple:
    """Parse a proof file.

    Parameters
    ----------
    data : bytes
        The proof file contents.
    modulus : mithzk.field.Modulus
        The statement's field.
    scheme : mithzk.commit.CommitmentScheme, None
        The scheme. If None, it is built from the scheme byte.
        Default is None.
    pedersen_group : str
        The Pedersen group used when building the scheme.
        Default is "default".

    Returns
    -------
    : tuple
        The Proof and the CommitmentScheme.

    Raises
    ------
    ProofFormatError
        On any malformed content.
    """
    reader = mithzk.utils.ByteReader(data)
    scheme_id, mode, repetitions, statement_hash = read_proof_header(reader)
    if scheme is None:
        scheme = mithzk.commit.get_scheme(scheme_id, pedersen_group)
    elif scheme.scheme_id != scheme_id:
        raise ProofFormatError(
            f"Proof uses scheme {scheme_id:#x}, expected {scheme.scheme_id:#x}"
        )
    transcripts = []
    try:
        for repetition in range(repetitions):
            commitment = CommitmentMsg.decode(reader, scheme)
            challenge = Challenge.from_index(reader.read_byte())
            response = Response.decode(reader, modulus, scheme)
            transcripts.append(Transcript(commitment, challenge, response))
        reader.expect_end()
    except (
        mithzk.utils.TruncatedDataError,
        mithzk.field.FieldDomainError,
        mithzk.mpc.ViewFormatError,
        mithzk.commit.CommitmentError,
        ValueError,
    ) as error:
        raise ProofFormatError(f"Malformed proof ({error})")
    return Proof(scheme_id, mode, statement_hash, tuple(transcripts)), scheme


class SimulatedProver(object):
    """One run of the zero-knowledge simulator.

    It committed to simulated views of the guessed pair and to all-zero
    dummy views of the other three parties. `respond` returns None
    (abort) unless the challenge equals the guess.
    """

    def __init__(self, guess: Challenge, state: ProverState, commitment):
        self.guess = guess
        self.state = state
        self.commitment = commitment

    def respond(self, challenge: Challenge):
        if challenge != self.guess:
            return None
        return prover_respond(self.state, challenge)


def zk_simulate_once(
    statement: mithzk.circuit.Statement,
    rng: mithzk.field.RandomSource,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> SimulatedProver:
    """Guess a challenge and commit to simulated views without a witness."""
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    circuit = statement.circuit
    modulus = circuit.modulus
    guess = Challenge.from_index(rng.randbelow(CHALLENGE_COUNT))
    simulated_shares = [
        mithzk.sss.share_sim(rng, guess.pair, modulus)
        for index in range(circuit.topology.n_secret)
    ]
    corrupt_shares = (
        tuple(shares[0] for shares in simulated_shares),
        tuple(shares[1] for shares in simulated_shares),
    )
    view_i, view_j = mithzk.mpc.mpc_simulate(
        circuit,
        statement.public_inputs,
        guess.pair,
        corrupt_shares,
        statement.target,
        rng
    )
    dummy = mithzk.mpc.View.zeros(circuit)
    views = []
    for party in mithzk.sss.PARTIES:
        if party == guess.i:
            views.append(view_i)
        elif party == guess.j:
            views.append(view_j)
        else:
            views.append(dummy)
    keys = [scheme.sample_key(rng, view) for view in views]
    state, commitment = commit_views(statement, scheme, views, keys)
    return SimulatedProver(guess, state, commitment)


def honest_verifier(rng: mithzk.field.RandomSource):
    """A challenge callback that draws uniform challenges from rng."""

    def verifier(statement, commitment):
        return verifier_challenge(rng, statement, commitment)[1]
    return verifier


def zk_simulate(
    statement: mithzk.circuit.Statement,
    verifier,
    max_retries: int = DEFAULT_MAX_RETRIES,
    *,
    rng: mithzk.field.RandomSource = None,
    scheme: mithzk.commit.CommitmentScheme = None,
    return_attempts: bool = False,
):
    """Rejection-sample simulated runs until one is not aborted.

    Parameters
    ----------
    statement : mithzk.circuit.Statement
        The statement.
    verifier : callable
        Called as verifier(statement, commitment) and returns a Challenge.
    max_retries : int
        The maximum number of simulator runs (>= 1).
        Default is 1000.
    rng : mithzk.field.RandomSource, None
        The simulator randomness. If None, OS entropy is used.
        Default is None.
    scheme : mithzk.commit.CommitmentScheme, None
        The commitment scheme. If None, the PRF scheme is used.
        Default is None.
    return_attempts : bool
        If True, the number of runs is returned as well.
        Default is False.

    Returns
    -------
    : Transcript, tuple
        The first non-aborted transcript, with the number of runs if
        return_attempts is True.

    Raises
    ------
    SimulationFailure
        If all runs were aborted.
    """
    if max_retries < 1:
        raise ValueError(f"max_retries must be >= 1, got {max_retries}")
    if rng is None:
        rng = mithzk.field.RandomSource()
    for attempt in range(1, max_retries + 1):
        simulated = zk_simulate_once(statement, rng, scheme)
        challenge = verifier(statement, simulated.commitment)
        response = simulated.respond(challenge)
        if response is not None:
            transcript = Transcript(simulated.commitment, challenge, response)
            if return_attempts:
                return transcript, attempt
            return transcript
    raise SimulationFailure(
        f"Simulator aborted in all {max_retries} attempts"
    )
