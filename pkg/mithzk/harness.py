#!python
"""This module runs the security games of the protocol at desk scale.

Every experiment returns an ExperimentReport with a number of trials and
successes, a reference bound and a tolerance. The verdict is derived from
these fields only, so it can be re-checked from a saved report.
Statistical tolerances are 3-sigma binomial intervals.
"""

# builtin
import collections
import dataclasses
import itertools
import json
import logging
import math
import os
import socket
import threading
# external
import numpy as np
import pandas as pd
import scipy.stats
# local
import mithzk.circuit
import mithzk.commit
import mithzk.field
import mithzk.mith
import mithzk.mpc
import mithzk.session
import mithzk.sss
import mithzk.utils


KINDS = ("exact", "two_sided", "upper", "advantage")
CHI_SQUARE_ALPHA = 0.001
BATCH_SIZE = 1000
MAX_ZK_ENUMERATION = 20000
SOUNDNESS_CIRCUIT = "01_square_plus_one.arith"
ZK_CIRCUIT = "01_square_plus_one.arith"
SELFTEST_TRIALS = {
    "full": {
        "completeness": 1,
        "completeness_random": 1000,
        "mpc_correctness": 500,
        "view_consistency": 100,
        "soundness": 10000,
        "soundness_repeated": 10000,
        "soundness_garbage": 1000,
        "session_soundness": 10000,
        "zk": 10000,
        "zk_simulator": 10000,
        "sss_privacy": 10000,
        "mpc_privacy": 50,
        "binding": 100000,
        "hiding": 100000,
    },
    "quick": {
        "completeness": 1,
        "completeness_random": 50,
        "mpc_correctness": 50,
        "view_consistency": 20,
        "soundness": 500,
        "soundness_repeated": 300,
        "soundness_garbage": 50,
        "session_soundness": 200,
        "zk": 200,
        "zk_simulator": 1000,
        "sss_privacy": 2000,
        "mpc_privacy": 5,
        "binding": 2000,
        "hiding": 1000,
    },
}
SELFTEST_TOLERANCES = {
    "soundness": 0.01,
    "soundness_repeated": 0.02,
    "zk": 0.02,
    "zk_simulator": 0.01,
    "hiding_random_guess": 0.01,
    "hiding_digest_histogram": 0.02,
}


@dataclasses.dataclass(frozen=True)
class ExperimentReport:
    """The outcome of one experiment.

    The verdict depends on the kind:

        - exact: rate equals bound (within tolerance, normally 0)
        - two_sided: |rate - bound| <= tolerance
        - upper: rate <= bound + tolerance
        - advantage: |rate - 1/2| <= bound + tolerance
    """
    name: str
    kind: str
    trials: int
    successes: int
    bound: float
    tolerance: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Unknown experiment kind '{self.kind}'")
        if not 0 <= self.successes <= self.trials:
            raise ValueError(
                f"{self.successes} successes out of {self.trials} trials"
            )

    @property
    def rate(self) -> float:
        if self.trials == 0:
            return 0.0
        return self.successes / self.trials

    @property
    def passed(self) -> bool:
        if self.trials == 0:
            return False
        if self.kind in ("exact", "two_sided"):
            return abs(self.rate - self.bound) <= self.tolerance
        if self.kind == "upper":
            return self.rate <= self.bound + self.tolerance
        return abs(self.rate - 0.5) <= self.bound + self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "bound": self.bound,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def binomial_tolerance(
    probability: float,
    trials: int,
    sigmas: float = 3,
) -> float:
    """sigmas standard deviations of a binomial rate."""
    return sigmas * math.sqrt(probability * (1 - probability) / trials)


def clamped_tolerance(
    probability: float,
    trials: int,
    limit: float = None,
) -> float:
    """The 3-sigma binomial tolerance, capped at limit if one is given."""
    tolerance = binomial_tolerance(probability, trials)
    if limit is None:
        return tolerance
    return min(tolerance, limit)


def _run_trials(trial, rng: mithzk.field.RandomSource, trials: int) -> list:
    """Run trial(child_rng) for independent child sources on the thread pool."""

    @mithzk.utils.threadpool(return_results=True)
    def run(child_rng):
        return trial(child_rng)
    return run(rng.spawn(trials))


def _run_batches(trial, rng, trials: int) -> int:
    """Sum trial(child_rng, count) over batches of BATCH_SIZE attempts."""
    counts = [BATCH_SIZE] * (trials // BATCH_SIZE)
    if trials % BATCH_SIZE:
        counts.append(trials % BATCH_SIZE)
    children = rng.spawn(len(counts))

    @mithzk.utils.threadpool(return_results=True)
    def run(index):
        return trial(children[index], counts[index])
    return sum(run(range(len(counts))))


def load_golden_circuits() -> list:
    """All (file name, circuit) pairs of the golden corpus, sorted by name."""
    circuits = []
    for file_name in sorted(os.listdir(mithzk.utils.GOLDEN_CIRCUIT_PATH)):
        if file_name.endswith(".arith"):
            circuits.append(
                (
                    file_name,
                    mithzk.circuit.load_circuit(
                        os.path.join(
                            mithzk.utils.GOLDEN_CIRCUIT_PATH,
                            file_name
                        )
                    )
                )
            )
    return circuits


def golden_circuit(file_name: str) -> mithzk.circuit.Circuit:
    return mithzk.circuit.load_circuit(
        os.path.join(mithzk.utils.GOLDEN_CIRCUIT_PATH, file_name)
    )


def default_public_inputs(circuit: mithzk.circuit.Circuit) -> tuple:
    """The fixed public inputs 2, 3, ... used for corpus statements."""
    return circuit.modulus.elements(
        range(2, 2 + circuit.topology.n_public)
    )


def all_witnesses(circuit: mithzk.circuit.Circuit):
    modulus = circuit.modulus
    for values in itertools.product(
        range(modulus.p),
        repeat=circuit.topology.n_secret
    ):
        yield mithzk.circuit.Witness(modulus.elements(values))


def true_statement(circuit, public_inputs, witness) -> mithzk.circuit.Statement:
    """The statement whose target is the circuit output on witness."""
    output = mithzk.circuit.evaluate_gate(
        circuit.root,
        public_inputs,
        witness.secret_inputs,
        circuit.modulus
    )
    return mithzk.circuit.Statement(circuit, tuple(public_inputs), output)


def golden_corpus() -> list:
    """(statement, witness) for every golden circuit and every witness."""
    corpus = []
    for file_name, circuit in load_golden_circuits():
        public_inputs = default_public_inputs(circuit)
        for witness in all_witnesses(circuit):
            corpus.append(
                (true_statement(circuit, public_inputs, witness), witness)
            )
    return corpus


def random_corpus(
    modulus: mithzk.field.Modulus,
    count: int,
    rng: mithzk.field.RandomSource,
    max_depth: int = 6,
) -> list:
    """(statement, witness) pairs on random circuits and random inputs."""
    corpus = []
    for index in range(count):
        circuit = mithzk.circuit.random_circuit(
            modulus,
            rng,
            max_depth=max_depth,
            n_public=rng.randbelow(3),
            n_secret=1 + rng.randbelow(3),
        )
        public_inputs = tuple(
            mithzk.field.sample_fe(rng, modulus)
            for index in range(circuit.topology.n_public)
        )
        witness = mithzk.circuit.Witness(
            tuple(
                mithzk.field.sample_fe(rng, modulus)
                for index in range(circuit.topology.n_secret)
            )
        )
        corpus.append((true_statement(circuit, public_inputs, witness), witness))
    return corpus


def make_false_statement(
    circuit: mithzk.circuit.Circuit,
    public_inputs=None,
    max_witnesses: int = 1 << 20,
):
    """A statement whose target is outside the circuit's image.

    The image is computed over all witnesses, so this only works for small
    fields and few secret inputs.

    Returns
    -------
    : mithzk.circuit.Statement, None
        The statement with the smallest unreachable target, or None if
        every field element is reachable.
    """
    if public_inputs is None:
        public_inputs = default_public_inputs(circuit)
    modulus = circuit.modulus
    if modulus.p**circuit.topology.n_secret > max_witnesses:
        raise ValueError("Too many witnesses to enumerate the circuit image")
    image = set()
    for witness in all_witnesses(circuit):
        image.add(
            int(
                mithzk.circuit.evaluate_gate(
                    circuit.root,
                    public_inputs,
                    witness.secret_inputs,
                    modulus
                )
            )
        )
    for target in range(modulus.p):
        if target not in image:
            return mithzk.circuit.Statement(
                circuit,
                tuple(public_inputs),
                modulus.element(target)
            )
    return None


def random_view(
    circuit: mithzk.circuit.Circuit,
    rng: mithzk.field.RandomSource,
) -> mithzk.mpc.View:
    """A shape-valid view filled with uniform field elements."""
    template = mithzk.mpc.View.zeros(circuit)
    return rebuild_view(
        template,
        [
            mithzk.field.sample_fe(rng, circuit.modulus)
            for element in template.field_elements()
        ]
    )


def rebuild_view(template: mithzk.mpc.View, elements) -> mithzk.mpc.View:
    """A view with the layout of template and the given field elements."""
    elements = iter(elements)

    def take(count):
        return tuple(next(elements) for index in range(count))
    public_inputs = take(len(template.public_inputs))
    input_shares = take(len(template.input_shares))
    mul = tuple(
        (gate_id, mithzk.sss.SSRandomness(*take(2)))
        for gate_id, randomness in template.randomness.mul
    )
    refresh = mithzk.sss.SSRandomness(*take(2))
    trace = tuple(
        mithzk.mpc.TraceEntry(entry.key, take(len(entry.values)))
        for entry in template.trace
    )
    return mithzk.mpc.View(
        public_inputs,
        input_shares,
        mithzk.mpc.PartyRandomness(mul, refresh),
        trace
    )


def _replace_trace_value(view, key, party, value) -> mithzk.mpc.View:
    trace = []
    for entry in view.trace:
        if entry.key == key:
            values = list(entry.values)
            values[party - 1] = value
            entry = mithzk.mpc.TraceEntry(key, tuple(values))
        trace.append(entry)
    return dataclasses.replace(view, trace=tuple(trace))


def shift_output(
    circuit: mithzk.circuit.Circuit,
    views,
    bad_pair: tuple,
    delta: mithzk.field.FieldElement,
) -> tuple:
    """Move the opened output by delta, breaking only one pair of views.

    Party a's recorded refresh message from b grows by delta / λ_a, so a's
    refreshed share grows by the same amount; every view records a's new
    broadcast share. Only (a, b) become inconsistent and every local output
    moves by λ_a · delta / λ_a = delta.
    """
    a, b = bad_pair
    views = list(views)
    coefficient = mithzk.sss.recombination_coefficients(circuit.modulus)[a - 1]
    shift = delta * mithzk.field.fe_inv(coefficient)
    view_a = views[a - 1]
    incoming = view_a.entry(mithzk.mpc.REFRESH_TAG).values[b - 1]
    views[a - 1] = _replace_trace_value(
        view_a,
        mithzk.mpc.REFRESH_TAG,
        b,
        incoming + shift
    )
    broadcast = view_a.entry(mithzk.mpc.OPEN_TAG).values[a - 1] + shift
    return tuple(
        _replace_trace_value(view, mithzk.mpc.OPEN_TAG, a, broadcast)
        for view in views
    )


class OneBadPairCheater(mithzk.mith.ProverStrategy):
    """Runs honestly on a wrong witness and patches the opened output.

    The committed views are pairwise consistent except for `bad_pair`,
    and every local output equals the target, so a run is accepted iff
    the challenge is not `bad_pair`.
    """

    def __init__(
        self,
        witness: mithzk.circuit.Witness,
        bad_pair: tuple = (1, 2),
        scheme: mithzk.commit.CommitmentScheme = None,
    ):
        super().__init__(scheme)
        self.witness = witness
        self.bad_pair = mithzk.sss.check_corrupt_pair(bad_pair)

    def commit(self, statement, rng):
        prover_rand = mithzk.mith.sample_prover_rand(
            statement,
            self.scheme,
            rng
        )
        input_sharings = [
            mithzk.sss.share(value, randomness)
            for value, randomness in zip(
                self.witness.secret_inputs,
                prover_rand.r_ss
            )
        ]
        execution = mithzk.mpc.run_protocol(
            statement,
            input_sharings,
            prover_rand.r_mpc
        )
        views = execution.views
        delta = statement.target - execution.outputs[0]
        if not delta.is_zero():
            views = shift_output(statement.circuit, views, self.bad_pair, delta)
        return mithzk.mith.commit_views(
            statement,
            self.scheme,
            views,
            prover_rand.r_cs
        )

    def respond(self, state, challenge):
        return mithzk.mith.prover_respond(state, challenge)


class GarbageCheater(mithzk.mith.ProverStrategy):
    """Commits to random views and opens other random views."""

    def commit(self, statement, rng):
        circuit = statement.circuit
        views = [random_view(circuit, rng) for party in mithzk.sss.PARTIES]
        keys = [self.scheme.sample_key(rng, view) for view in views]
        state, commitment = mithzk.mith.commit_views(
            statement,
            self.scheme,
            views,
            keys
        )
        return (state, rng), commitment

    def respond(self, state, challenge):
        prover_state, rng = state
        circuit = prover_state.statement.circuit
        i, j = challenge.pair
        return mithzk.mith.Response(
            random_view(circuit, rng),
            prover_state.openings[i - 1],
            random_view(circuit, rng),
            prover_state.openings[j - 1],
        )


def run_completeness(
    corpus,
    rng: mithzk.field.RandomSource,
    trials: int = 1,
    repetitions: int = 1,
    scheme: mithzk.commit.CommitmentScheme = None,
    name: str = "completeness",
) -> ExperimentReport:
    """Honest proofs for every (statement, witness); any rejection fails."""
    corpus = list(corpus)
    logging.info(
        f"Running {name} experiment on {len(corpus)} statements "
        f"with {trials} trials each"
    )
    children = rng.spawn(len(corpus))

    @mithzk.utils.threadpool(return_results=True)
    def run(index):
        statement, witness = corpus[index]
        accepted = 0
        for trial_rng in children[index].spawn(trials):
            proof = mithzk.mith.prove_repeated(
                witness,
                statement,
                repetitions,
                trial_rng,
                scheme=scheme,
                mode="transcript"
            )
            accepted += mithzk.mith.verify_repeated(
                statement,
                proof,
                scheme=scheme
            )
        return accepted
    successes = sum(run(range(len(corpus))))
    return ExperimentReport(
        name,
        "exact",
        len(corpus) * trials,
        successes,
        1.0,
        0.0
    )


def play_soundness_game(
    prover: mithzk.mith.ProverStrategy,
    statement: mithzk.circuit.Statement,
    repetitions: int,
    rng: mithzk.field.RandomSource,
) -> tuple:
    """One offline run of the interactive game.

    Returns
    -------
    : tuple
        The verdict and the challenges of all repetitions.
    """
    proof = mithzk.mith.prove_repeated(
        None,
        statement,
        repetitions,
        rng,
        mode="transcript",
        prover=prover
    )
    verdict = mithzk.mith.verify_repeated(
        statement,
        proof,
        scheme=prover.scheme
    )
    return verdict, [transcript.challenge for transcript in proof.transcripts]


def play_session_game(
    prover: mithzk.mith.ProverStrategy,
    statement: mithzk.circuit.Statement,
    repetitions: int,
    rng: mithzk.field.RandomSource,
) -> tuple:
    """One run of the game over a loopback socket session.

    The prover runs on its own thread. A session that fails with a
    SessionError counts as a rejection without challenges.

    Returns
    -------
    : tuple
        The verdict and the challenges the verifier sent.
    """
    prover_rng, verifier_rng = rng.spawn(2)
    prover_socket, verifier_socket = socket.socketpair()
    prover_transport = mithzk.session.SocketTransport(prover_socket)
    verifier_transport = mithzk.session.SocketTransport(verifier_socket)

    def run_prover():
        try:
            mithzk.session.prover_session(
                prover_transport,
                statement,
                None,
                repetitions,
                prover_rng,
                scheme=prover.scheme,
                prover=prover
            )
        except mithzk.session.SessionError as error:
            logging.warning(f"WARNING: Prover session failed: {error}")
        finally:
            prover_transport.close()
    thread = threading.Thread(target=run_prover, daemon=True)
    thread.start()
    try:
        verdict, proof = mithzk.session.verifier_session(
            verifier_transport,
            statement,
            repetitions,
            verifier_rng,
            scheme=prover.scheme,
            return_proof=True
        )
    except mithzk.session.SessionError as error:
        logging.warning(f"WARNING: Verifier session failed: {error}")
        return False, []
    finally:
        verifier_transport.close()
        thread.join()
    if proof is None:
        return verdict, []
    return verdict, [transcript.challenge for transcript in proof.transcripts]


def run_soundness(
    cheater: mithzk.mith.ProverStrategy,
    statement: mithzk.circuit.Statement,
    trials: int,
    rng: mithzk.field.RandomSource,
    repetitions: int = 1,
    bound: float = None,
    name: str = None,
    max_tolerance: float = None,
    game=play_soundness_game,
) -> list:
    """Acceptance rate of a cheating prover on a false statement.

    Parameters
    ----------
    cheater : mithzk.mith.ProverStrategy
        The cheating prover.
    statement : mithzk.circuit.Statement
        A statement without a valid witness.
    trials : int
        The number of games.
    rng : mithzk.field.RandomSource
        The randomness of prover and verifier.
    repetitions : int
        The repetitions per game.
        Default is 1.
    bound : float, None
        The expected acceptance rate. If None, (9/10)^repetitions.
        Default is None.
    name : str, None
        The report name. If None, it is derived from the repetitions.
        Default is None.
    max_tolerance : float, None
        A cap on the 3-sigma tolerance of the acceptance rate.
        Default is None.
    game : callable
        Plays one game as game(cheater, statement, repetitions, rng) and
        returns the verdict and the challenges. play_session_game runs it
        over a loopback session.
        Default is play_soundness_game.

    Returns
    -------
    : list
        The acceptance report and, if the cheater has a `bad_pair`, a report
        that every verdict equals "no challenge hit the bad pair".
    """
    if name is None:
        name = f"soundness_sigma{repetitions}"
    if bound is None:
        bound = mithzk.mith.soundness_bound(repetitions)
    logging.info(f"Running {name} experiment with {trials} trials")
    bad_pair = getattr(cheater, "bad_pair", None)

    def trial(trial_rng):
        verdict, challenges = game(
            cheater,
            statement,
            repetitions,
            trial_rng
        )
        avoided = all(challenge.pair != bad_pair for challenge in challenges)
        return verdict, verdict == avoided
    results = _run_trials(trial, rng, trials)
    accepted = sum(verdict for verdict, matches in results)
    if bound == 0:
        tolerance = 0.0
        kind = "upper"
    else:
        tolerance = clamped_tolerance(bound, trials, max_tolerance)
        kind = "two_sided"
    reports = [ExperimentReport(name, kind, trials, accepted, bound, tolerance)]
    if bad_pair is not None:
        reports.append(
            ExperimentReport(
                f"{name}_events",
                "exact",
                trials,
                sum(matches for verdict, matches in results),
                1.0,
                0.0
            )
        )
    return reports


class ChallengeDistinguisher(object):
    """Guesses from the challenge alone."""

    def guess(self, statement, verdict, transcript) -> int:
        return transcript.challenge.index % 2


class ByteHistogramDistinguisher(object):
    """Guesses "simulated" when the opened view bytes look non-uniform."""

    def guess(self, statement, verdict, transcript) -> int:
        response = transcript.response
        data = response.view_i.to_bytes() + response.view_j.to_bytes()
        counts = np.bincount(
            np.frombuffer(data, dtype=np.uint8),
            minlength=256
        )
        p_value = scipy.stats.chisquare(counts).pvalue
        return int(p_value < 0.5)


def real_transcript(
    statement: mithzk.circuit.Statement,
    witness: mithzk.circuit.Witness,
    rng: mithzk.field.RandomSource,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> tuple:
    """An honest transcript with an honest verifier, and its verdict."""
    prover = mithzk.mith.HonestProver(witness, scheme)
    state, commitment = prover.commit(statement, rng)
    verifier_state, challenge = mithzk.mith.verifier_challenge(
        rng,
        statement,
        commitment,
        prover.scheme
    )
    response = prover.respond(state, challenge)
    transcript = mithzk.mith.Transcript(commitment, challenge, response)
    return transcript, mithzk.mith.verifier_check(verifier_state, response)


def simulated_transcript(
    statement: mithzk.circuit.Statement,
    rng: mithzk.field.RandomSource,
    scheme: mithzk.commit.CommitmentScheme = None,
) -> tuple:
    """A rejection-sampled simulated transcript, and its verdict."""
    if scheme is None:
        scheme = mithzk.commit.PRFCommitmentScheme()
    transcript = mithzk.mith.zk_simulate(
        statement,
        mithzk.mith.honest_verifier(rng),
        rng=rng,
        scheme=scheme
    )
    verifier_state = mithzk.mith.VerifierState(
        statement,
        scheme,
        transcript.commitment,
        transcript.challenge
    )
    return transcript, mithzk.mith.verifier_check(
        verifier_state,
        transcript.response
    )


def run_zk(
    statement: mithzk.circuit.Statement,
    witness: mithzk.circuit.Witness,
    distinguisher,
    trials: int,
    rng: mithzk.field.RandomSource,
    name: str = "zk",
    max_tolerance: float = None,
) -> ExperimentReport:
    """A distinguisher guesses whether transcripts are real or simulated.

    The distinguisher is called as guess(statement, verdict, transcript)
    and returns 1 for "simulated". The report holds its success rate.
    """
    logging.info(f"Running {name} experiment with {trials} trials")

    def trial(trial_rng):
        simulated = trial_rng.randbelow(2)
        if simulated:
            transcript, verdict = simulated_transcript(statement, trial_rng)
        else:
            transcript, verdict = real_transcript(statement, witness, trial_rng)
        return distinguisher.guess(statement, verdict, transcript) == simulated
    successes = sum(_run_trials(trial, rng, trials))
    return ExperimentReport(
        name,
        "advantage",
        trials,
        successes,
        0.0,
        clamped_tolerance(0.5, trials, max_tolerance)
    )


def sharing_pair_multiset(
    modulus: mithzk.field.Modulus,
    secret,
    pair,
) -> collections.Counter:
    """The multiset of (f(i), f(j)) over all p^2 sharing polynomials f."""
    i, j = pair
    counts = collections.Counter()
    for a1, a2 in itertools.product(range(modulus.p), repeat=2):
        randomness = mithzk.sss.SSRandomness(
            modulus.element(a1),
            modulus.element(a2)
        )
        counts[
            (
                int(mithzk.sss.evaluate_share(secret, randomness, i)),
                int(mithzk.sss.evaluate_share(secret, randomness, j)),
            )
        ] += 1
    return counts


def uniform_pair_multiset(modulus: mithzk.field.Modulus) -> collections.Counter:
    """Every point of F_p^2 once, the law of two uniform field elements."""
    return collections.Counter(
        itertools.product(range(modulus.p), repeat=2)
    )


def sharing_pairs_uniform(modulus: mithzk.field.Modulus, secret, pair) -> bool:
    """True iff over all (a1, a2) the pair's shares hit each point once."""
    return sharing_pair_multiset(
        modulus,
        secret,
        pair
    ) == uniform_pair_multiset(modulus)


def sharing_singles_uniform(modulus, secret, party) -> bool:
    """True iff over all (a1, a2) each value of one share occurs p times."""
    counts = np.zeros(modulus.p, dtype=np.int64)
    for a1, a2 in itertools.product(range(modulus.p), repeat=2):
        randomness = mithzk.sss.SSRandomness(
            modulus.element(a1),
            modulus.element(a2)
        )
        counts[int(mithzk.sss.evaluate_share(secret, randomness, party))] += 1
    return bool(np.all(counts == modulus.p))


def run_sss_privacy(
    modulus: mithzk.field.Modulus,
    trials: int,
    rng: mithzk.field.RandomSource,
) -> ExperimentReport:
    """Corrupt-pair shares are independent of the secret.

    Over F_11 every pair and every single party is checked by exhaustive
    enumeration. Over larger fields, chi-square tests at alpha = 0.001
    compare real shares of a fixed secret with share_sim, per pair;
    the per-test level is alpha divided by the number of tests.
    """
    if modulus.p <= 11:
        logging.info("Running exhaustive secret sharing privacy experiment")
        checks = [
            sharing_pairs_uniform(modulus, secret, pair)
            for pair in mithzk.sss.PARTY_PAIRS
            for secret in (modulus.element(s) for s in range(modulus.p))
        ] + [
            sharing_singles_uniform(modulus, secret, party)
            for party in mithzk.sss.PARTIES
            for secret in (modulus.element(s) for s in range(modulus.p))
        ]
        return ExperimentReport(
            f"sss_privacy_f{modulus.p}",
            "exact",
            len(checks),
            sum(checks),
            1.0,
            0.0
        )
    logging.info(
        f"Running statistical secret sharing privacy experiment "
        f"with {trials} samples per pair"
    )
    secret = modulus.element(modulus.p - 1)

    def statistics(samples):
        values = np.array(samples, dtype=np.int64)
        return [
            values[:, 0],
            values[:, 1],
            (values[:, 0] + 7 * values[:, 1]) % modulus.p,
        ]

    p_values = []
    for pair, pair_rng in zip(
        mithzk.sss.PARTY_PAIRS,
        rng.spawn(len(mithzk.sss.PARTY_PAIRS))
    ):
        real = []
        ideal = []
        for index in range(trials):
            sharing = mithzk.sss.share(
                secret,
                mithzk.sss.sample_ss_randomness(pair_rng, modulus)
            )
            real.append((int(sharing[pair[0]]), int(sharing[pair[1]])))
            ideal.append(
                tuple(
                    int(value) for value in mithzk.sss.share_sim(
                        pair_rng,
                        pair,
                        modulus
                    )
                )
            )
        for values in statistics(real) + statistics(ideal):
            counts = np.bincount(values, minlength=modulus.p)
            p_values.append(scipy.stats.chisquare(counts).pvalue)
    checks = [
        p_value > CHI_SQUARE_ALPHA / len(p_values) for p_value in p_values
    ]
    return ExperimentReport(
        f"sss_privacy_f{modulus.p}",
        "exact",
        len(checks),
        sum(checks),
        1.0,
        0.0
    )


def random_execution(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    witness: mithzk.circuit.Witness,
    rng: mithzk.field.RandomSource,
) -> mithzk.mpc.ExecutionResult:
    modulus = circuit.modulus
    sharings = [
        mithzk.sss.share(value, mithzk.sss.sample_ss_randomness(rng, modulus))
        for value in witness.secret_inputs
    ]
    return mithzk.mpc.execute(
        circuit,
        public_inputs,
        sharings,
        mithzk.mpc.sample_gate_randomness(circuit, rng)
    )


def _random_witness(circuit, rng) -> mithzk.circuit.Witness:
    return mithzk.circuit.Witness(
        tuple(
            mithzk.field.sample_fe(rng, circuit.modulus)
            for index in range(circuit.topology.n_secret)
        )
    )


def run_mpc_privacy(
    circuit: mithzk.circuit.Circuit,
    trials: int,
    rng: mithzk.field.RandomSource,
    name: str = "mpc_privacy",
) -> ExperimentReport:
    """Simulated corrupt-pair views match real ones, for every pair.

    Each trial runs the protocol on a random witness. For every pair the
    simulator, given the components extracted from the real views,
    must reproduce both views exactly, and a freshly sampled simulation
    must be consistent with local outputs equal to y. Together with the
    uniformity of each component (see run_sss_privacy) this gives exact
    2-privacy.
    """
    logging.info(f"Running {name} experiment with {trials} trials")
    public_inputs = default_public_inputs(circuit)

    def trial(trial_rng):
        witness = _random_witness(circuit, trial_rng)
        execution = random_execution(
            circuit,
            public_inputs,
            witness,
            trial_rng
        )
        output = execution.outputs[0]
        passed = 0
        for pair in mithzk.sss.PARTY_PAIRS:
            i, j = pair
            real = (execution.view(i), execution.view(j))
            corrupt_shares = (real[0].input_shares, real[1].input_shares)
            components = mithzk.mpc.extract_simulator_components(
                circuit,
                pair,
                *real
            )
            replayed = mithzk.mpc.simulate_from_components(
                circuit,
                public_inputs,
                pair,
                corrupt_shares,
                output,
                components
            )
            simulated = mithzk.mpc.mpc_simulate(
                circuit,
                public_inputs,
                pair,
                corrupt_shares,
                output,
                trial_rng
            )
            passed += (replayed == real) and mithzk.mpc.consistent_views(
                circuit,
                public_inputs,
                simulated[0],
                simulated[1],
                i,
                j
            ) and all(
                mithzk.mpc.local_output(circuit, party, view) == output
                for party, view in zip(pair, simulated)
            )
        return passed
    successes = sum(_run_trials(trial, rng, trials))
    return ExperimentReport(
        name,
        "exact",
        trials * len(mithzk.sss.PARTY_PAIRS),
        successes,
        1.0,
        0.0
    )


def _sender_product(view_by_party, gate_id: int, sender: int):
    """The value a sender reshared at a gate, from all 5 incoming entries."""
    return mithzk.sss.reconstruct(
        mithzk.sss.Sharing(
            view_by_party[receiver].entry(gate_id).values[sender - 1]
            for receiver in mithzk.sss.PARTIES
        )
    )


def run_zk_exact(
    statement: mithzk.circuit.Statement,
    witness: mithzk.circuit.Witness,
    rng: mithzk.field.RandomSource,
    name: str = "zk_exact",
) -> ExperimentReport:
    """Real and simulated (challenge, opened views, verdict) laws agree.

    Opened views are a deterministic function of the corrupt input shares
    and the simulator components (corrupt randomness, honest incoming
    message pairs), so both laws are compared factor by factor along the
    protocol order, each factor by exhaustive enumeration:

        - challenges: uniform for the honest verifier; uniform given
          acceptance for the simulator (guess equals challenge).
        - corrupt input shares: every input sharing polynomial of the
          prover against share_sim's uniform pairs.
        - honest multiplication messages: for every input sharing and
          every honest sender, all p^2 resharing polynomials of the
          product it actually holds against uniform pairs.
        - honest refresh messages: all p^2 zero sharings against
          uniform pairs.
        - for every input sharing and challenge, the opened real views
          are rebuilt bit for bit from their components and verify.

    Corrupt randomness appears verbatim in both worlds. The circuit must
    have a single multiplication gate, so every product depends on the
    enumerated input sharings only.

    Raises
    ------
    ValueError
        If the circuit does not have exactly one multiplication gate or
        the input sharings are too many to enumerate.
    """
    circuit = statement.circuit
    modulus = circuit.modulus
    gate_ids = mithzk.circuit.multiplication_gates(circuit)
    if len(gate_ids) != 1:
        raise ValueError(
            f"Exact enumeration needs one multiplication gate, "
            f"got {len(gate_ids)}"
        )
    [gate_id] = gate_ids
    n_secret = circuit.topology.n_secret
    if modulus.p**(2 * n_secret) > MAX_ZK_ENUMERATION:
        raise ValueError(
            f"{modulus.p**(2 * n_secret)} input sharings exceed "
            f"{MAX_ZK_ENUMERATION}"
        )
    logging.info(
        f"Running {name} experiment over {modulus.p**(2 * n_secret)} "
        "input sharings"
    )
    scheme = mithzk.commit.PRFCommitmentScheme()
    uniform = uniform_pair_multiset(modulus)
    polynomials = [
        mithzk.sss.SSRandomness(modulus.element(a1), modulus.element(a2))
        for a1, a2 in itertools.product(range(modulus.p), repeat=2)
    ]
    challenges = [
        mithzk.mith.Challenge.from_index(index)
        for index in range(mithzk.mith.CHALLENGE_COUNT)
    ]
    conditional = {}

    def conditional_uniform(secret, pair) -> bool:
        key = (int(secret), pair)
        if key not in conditional:
            conditional[key] = sharing_pair_multiset(
                modulus,
                secret,
                pair
            ) == uniform
        return conditional[key]

    checks = [
        collections.Counter(
            guess for guess in range(mithzk.mith.CHALLENGE_COUNT)
            for index in range(mithzk.mith.CHALLENGE_COUNT)
            if guess == index
        ) == collections.Counter(range(mithzk.mith.CHALLENGE_COUNT))
    ]
    real_inputs = {challenge: collections.Counter() for challenge in challenges}
    simulated_inputs = collections.Counter(
        itertools.product(
            itertools.product(range(modulus.p), repeat=2),
            repeat=n_secret
        )
    )
    for input_randomness in itertools.product(polynomials, repeat=n_secret):
        sharings = [
            mithzk.sss.share(value, randomness)
            for value, randomness in zip(
                witness.secret_inputs,
                input_randomness
            )
        ]
        execution = mithzk.mpc.execute(
            circuit,
            statement.public_inputs,
            sharings,
            mithzk.mpc.sample_gate_randomness(circuit, rng)
        )
        views = execution.views
        view_by_party = dict(zip(mithzk.sss.PARTIES, views))
        keys = [scheme.sample_key(rng, view) for view in views]
        state, commitment = mithzk.mith.commit_views(
            statement,
            scheme,
            views,
            keys
        )
        for challenge in challenges:
            i, j = challenge.pair
            real_inputs[challenge][
                tuple(
                    (int(sharing[i]), int(sharing[j]))
                    for sharing in sharings
                )
            ] += 1
            opened = (view_by_party[i], view_by_party[j])
            replayed = mithzk.mpc.simulate_from_components(
                circuit,
                statement.public_inputs,
                challenge.pair,
                (opened[0].input_shares, opened[1].input_shares),
                statement.target,
                mithzk.mpc.extract_simulator_components(
                    circuit,
                    challenge.pair,
                    *opened
                )
            )
            verifier_state = mithzk.mith.VerifierState(
                statement,
                scheme,
                commitment,
                challenge
            )
            checks.append(
                (replayed == opened) and mithzk.mith.verifier_check(
                    verifier_state,
                    mithzk.mith.prover_respond(state, challenge)
                )
            )
            for sender in mithzk.mpc.honest_parties(challenge.pair):
                checks.append(
                    conditional_uniform(
                        _sender_product(view_by_party, gate_id, sender),
                        challenge.pair
                    )
                )
    for challenge in challenges:
        checks.append(real_inputs[challenge] == simulated_inputs)
        for sender in mithzk.mpc.honest_parties(challenge.pair):
            checks.append(conditional_uniform(modulus.zero, challenge.pair))
    return ExperimentReport(
        name,
        "exact",
        len(checks),
        sum(checks),
        1.0,
        0.0
    )


def run_zk_simulator(
    statement: mithzk.circuit.Statement,
    trials: int,
    rng: mithzk.field.RandomSource,
    name: str = "zk_simulator",
    max_tolerance: float = None,
) -> list:
    """Abort rate and mean retries of the simulator with an honest verifier.

    A single run is accepted with probability 1/10, so zk_simulate needs
    10 runs on average. The first report counts accepted single runs.
    The second counts all runs of `trials` calls to zk_simulate, of which
    exactly `trials` succeed; its bound and tolerance keep the mean number
    of runs within [9, 11].
    """
    logging.info(f"Running {name} experiment with {trials} trials")
    bound = 1 / mithzk.mith.CHALLENGE_COUNT

    def single(trial_rng):
        simulated = mithzk.mith.zk_simulate_once(statement, trial_rng)
        challenge = mithzk.mith.honest_verifier(trial_rng)(
            statement,
            simulated.commitment
        )
        return simulated.respond(challenge) is not None

    def attempts(trial_rng):
        transcript, count = mithzk.mith.zk_simulate(
            statement,
            mithzk.mith.honest_verifier(trial_rng),
            rng=trial_rng,
            return_attempts=True
        )
        return count
    single_rng, retry_rng = rng.spawn(2)
    accepted = sum(_run_trials(single, single_rng, trials))
    runs = sum(_run_trials(attempts, retry_rng, trials))
    return [
        ExperimentReport(
            f"{name}_acceptance",
            "two_sided",
            trials,
            accepted,
            bound,
            clamped_tolerance(bound, trials, max_tolerance)
        ),
        ExperimentReport(
            f"{name}_retries",
            "two_sided",
            runs,
            trials,
            (1 / 9 + 1 / 11) / 2,
            (1 / 9 - 1 / 11) / 2
        ),
    ]


class RandomSearchBindingAttacker(object):
    """Searches for a PRF commitment that opens to two messages."""

    def attempt(self, rng: mithzk.field.RandomSource) -> tuple:
        message = rng.bytes(16)
        key = rng.bytes(mithzk.commit.PRF_KEY_LENGTH)
        other_message = rng.bytes(16)
        other_key = rng.bytes(mithzk.commit.PRF_KEY_LENGTH)
        commitment, opening = mithzk.commit.prf_commit(key, message)
        return message, key, other_message, other_key, commitment


def binding_broken(message, key, other_message, other_key, commitment) -> bool:
    return (message != other_message) and mithzk.commit.prf_verify(
        message,
        commitment,
        key
    ) and mithzk.commit.prf_verify(other_message, commitment, other_key)


def run_binding(
    attacker,
    trials: int,
    rng: mithzk.field.RandomSource,
    name: str = "binding",
) -> ExperimentReport:
    """Count double openings; any success fails the experiment."""
    logging.info(f"Running {name} experiment with {trials} attempts")

    def batch(batch_rng, count):
        return sum(
            binding_broken(*attacker.attempt(batch_rng))
            for index in range(count)
        )
    wins = _run_batches(batch, rng, trials)
    return ExperimentReport(name, "upper", trials, wins, 0.0, 0.0)


HIDING_MESSAGES = (b"\x00" * 64, b"\xff" * 64)


class RandomGuessHidingAttacker(object):

    def train(self, rng, messages) -> None:
        pass

    def guess(self, commitment: bytes, rng: mithzk.field.RandomSource) -> int:
        return rng.randbelow(2)


class DigestHistogramHidingAttacker(object):
    """Learns per-message byte histograms of digests from its own commitments."""

    def __init__(self, samples: int = 1000):
        self.samples = samples
        self.log_probabilities = None

    def train(self, rng, messages) -> None:
        log_probabilities = []
        for message in messages:
            counts = np.ones(256, dtype=np.float64)
            for index in range(self.samples):
                commitment, opening = mithzk.commit.prf_commit(
                    rng.bytes(mithzk.commit.PRF_KEY_LENGTH),
                    message
                )
                counts += np.bincount(
                    np.frombuffer(commitment, dtype=np.uint8),
                    minlength=256
                )
            log_probabilities.append(np.log(counts / counts.sum()))
        self.log_probabilities = log_probabilities

    def guess(self, commitment: bytes, rng) -> int:
        values = np.frombuffer(commitment, dtype=np.uint8)
        likelihoods = [
            log_probabilities[values].sum()
            for log_probabilities in self.log_probabilities
        ]
        return int(likelihoods[1] > likelihoods[0])


def run_hiding(
    attacker,
    trials: int,
    rng: mithzk.field.RandomSource,
    name: str = "hiding",
    max_tolerance: float = None,
) -> ExperimentReport:
    """The attacker guesses which of two messages a fresh commitment hides."""
    logging.info(f"Running {name} experiment with {trials} trials")
    train_rng, game_rng = rng.spawn(2)
    attacker.train(train_rng, HIDING_MESSAGES)

    def batch(batch_rng, count):
        successes = 0
        for index in range(count):
            bit = batch_rng.randbelow(2)
            commitment, opening = mithzk.commit.prf_commit(
                batch_rng.bytes(mithzk.commit.PRF_KEY_LENGTH),
                HIDING_MESSAGES[bit]
            )
            successes += attacker.guess(commitment, batch_rng) == bit
        return successes
    successes = _run_batches(batch, game_rng, trials)
    return ExperimentReport(
        name,
        "advantage",
        trials,
        successes,
        0.0,
        clamped_tolerance(0.5, trials, max_tolerance)
    )


def run_mpc_correctness(
    modulus: mithzk.field.Modulus,
    trials: int,
    rng: mithzk.field.RandomSource,
    max_depth: int = 6,
) -> ExperimentReport:
    """Protocol outputs equal cleartext evaluation on random circuits."""
    name = f"mpc_correctness_f{modulus.p}"
    logging.info(f"Running {name} experiment with {trials} trials")

    def trial(trial_rng):
        [(statement, witness)] = random_corpus(
            modulus,
            1,
            trial_rng,
            max_depth
        )
        execution = random_execution(
            statement.circuit,
            statement.public_inputs,
            witness,
            trial_rng
        )
        return all(output == statement.target for output in execution.outputs)
    successes = sum(_run_trials(trial, rng, trials))
    return ExperimentReport(name, "exact", trials, successes, 1.0, 0.0)


def tamper_views(
    views,
    rng: mithzk.field.RandomSource,
) -> tuple:
    """Add a nonzero value to one random field element of one random view."""
    views = list(views)
    party = 1 + rng.randbelow(mithzk.sss.PARTY_COUNT)
    view = views[party - 1]
    elements = view.field_elements()
    position = rng.randbelow(len(elements))
    modulus = elements[position].modulus
    elements[position] = elements[position] + (1 + rng.randbelow(modulus.p - 1))
    views[party - 1] = rebuild_view(view, elements)
    return tuple(views)


def run_view_consistency(
    modulus: mithzk.field.Modulus,
    trials: int,
    rng: mithzk.field.RandomSource,
    max_depth: int = 4,
) -> ExperimentReport:
    """Pairwise consistency of 5 views holds iff re-execution reproduces them.

    Each trial checks an honest execution and a tampered copy of it.
    """
    name = f"view_consistency_f{modulus.p}"
    logging.info(f"Running {name} experiment with {trials} trials")

    def trial(trial_rng):
        [(statement, witness)] = random_corpus(
            modulus,
            1,
            trial_rng,
            max_depth
        )
        circuit = statement.circuit
        execution = random_execution(
            circuit,
            statement.public_inputs,
            witness,
            trial_rng
        )
        passed = 0
        for views in (execution.views, tamper_views(execution.views, trial_rng)):
            consistent = mithzk.mpc.all_pairs_consistent(
                circuit,
                statement.public_inputs,
                views
            )
            passed += consistent == mithzk.mpc.views_reproducible(
                circuit,
                views
            )
        return passed
    successes = sum(_run_trials(trial, rng, trials))
    return ExperimentReport(name, "exact", 2 * trials, successes, 1.0, 0.0)


def run_selftest(
    rng: mithzk.field.RandomSource,
    quick: bool = False,
    field_preset: str = None,
) -> list:
    """Run every experiment and return the reports.

    Parameters
    ----------
    rng : mithzk.field.RandomSource
        The randomness; seeded sources give bit-identical reports.
    quick : bool
        If True, fewer trials are used.
        Default is False.
    field_preset : str, None
        The field of the randomized experiments. If None, the preset from
        MITH_FIELD_PRESET or the default preset is used.
        Default is None.

    Returns
    -------
    : list
        The ExperimentReports.
    """
    trials = SELFTEST_TRIALS["quick" if quick else "full"]
    limits = {} if quick else SELFTEST_TOLERANCES
    if field_preset is None:
        field_preset = mithzk.field.default_field_preset()
    modulus = mithzk.field.load_modulus(field_preset)
    small_modulus = mithzk.field.load_modulus("f11")
    logging.info(
        f"Running {'quick ' if quick else ''}selftest with randomized "
        f"experiments over {field_preset}"
    )
    rngs = iter(rng.spawn(21))
    reports = []
    reports.append(
        run_completeness(
            golden_corpus(),
            next(rngs),
            trials["completeness"],
            name="completeness_golden"
        )
    )
    reports.append(
        run_completeness(
            random_corpus(modulus, trials["completeness_random"], next(rngs)),
            next(rngs),
            name=f"completeness_random_f{modulus.p}"
        )
    )
    for current_modulus in (small_modulus, modulus):
        reports.append(
            run_mpc_correctness(
                current_modulus,
                trials["mpc_correctness"],
                next(rngs)
            )
        )
    reports.append(
        run_view_consistency(
            small_modulus,
            trials["view_consistency"],
            next(rngs)
        )
    )
    false_statement = make_false_statement(golden_circuit(SOUNDNESS_CIRCUIT))
    wrong_witness = mithzk.circuit.Witness((small_modulus.zero,))
    cheater = OneBadPairCheater(wrong_witness, (2, 4))
    reports += run_soundness(
        cheater,
        false_statement,
        trials["soundness"],
        next(rngs),
        max_tolerance=limits.get("soundness")
    )
    reports += run_soundness(
        cheater,
        false_statement,
        trials["soundness_repeated"],
        next(rngs),
        repetitions=10,
        max_tolerance=limits.get("soundness_repeated")
    )
    reports += run_soundness(
        GarbageCheater(),
        false_statement,
        trials["soundness_garbage"],
        next(rngs),
        bound=0.0,
        name="soundness_garbage"
    )
    reports += run_soundness(
        cheater,
        false_statement,
        trials["session_soundness"],
        next(rngs),
        name="session_soundness_sigma1",
        max_tolerance=limits.get("soundness"),
        game=play_session_game
    )
    zk_circuit = golden_circuit(ZK_CIRCUIT)
    zk_witness = mithzk.circuit.Witness((small_modulus.element(3),))
    zk_statement = true_statement(zk_circuit, (), zk_witness)
    reports.append(
        run_zk(
            zk_statement,
            zk_witness,
            ByteHistogramDistinguisher(),
            trials["zk"],
            next(rngs),
            name="zk_byte_histogram",
            max_tolerance=limits.get("zk")
        )
    )
    reports.append(
        run_zk(
            zk_statement,
            zk_witness,
            ChallengeDistinguisher(),
            trials["zk"],
            next(rngs),
            name="zk_challenge",
            max_tolerance=limits.get("zk")
        )
    )
    reports.append(run_zk_exact(zk_statement, zk_witness, next(rngs)))
    reports += run_zk_simulator(
        zk_statement,
        trials["zk_simulator"],
        next(rngs),
        max_tolerance=limits.get("zk_simulator")
    )
    reports.append(run_sss_privacy(small_modulus, 0, next(rngs)))
    reports.append(
        run_sss_privacy(
            mithzk.field.load_modulus("f97"),
            trials["sss_privacy"],
            next(rngs)
        )
    )
    reports.append(
        run_mpc_privacy(zk_circuit, trials["mpc_privacy"], next(rngs))
    )
    reports.append(
        run_binding(
            RandomSearchBindingAttacker(),
            trials["binding"],
            next(rngs)
        )
    )
    reports.append(
        run_hiding(
            RandomGuessHidingAttacker(),
            trials["hiding"],
            next(rngs),
            name="hiding_random_guess",
            max_tolerance=limits.get("hiding_random_guess")
        )
    )
    reports.append(
        run_hiding(
            DigestHistogramHidingAttacker(),
            trials["hiding"],
            next(rngs),
            name="hiding_digest_histogram",
            max_tolerance=limits.get("hiding_digest_histogram")
        )
    )
    failed = [report.name for report in reports if not report.passed]
    if failed:
        logging.warning(f"WARNING: Failed experiments: {', '.join(failed)}")
    else:
        logging.info(f"All {len(reports)} experiments passed")
    return reports


def reports_to_dataframe(reports) -> pd.DataFrame:
    return pd.DataFrame([report.to_dict() for report in reports])


def reports_to_text(reports) -> str:
    """One line per report with its counts, bound and verdict."""
    lines = []
    for report in reports:
        lines.append(
            f"{report.name} kind={report.kind} trials={report.trials} "
            f"successes={report.successes} rate={report.rate:.6f} "
            f"bound={report.bound:.6f} tolerance={report.tolerance:.6f} "
            f"verdict={report.verdict}"
        )
    return "\n".join(lines) + "\n"


def reports_to_json(reports) -> str:
    """A JSON document {"reports": [...], "passed": bool}."""
    return json.dumps(
        {
            "reports": [report.to_dict() for report in reports],
            "passed": all(report.passed for report in reports),
        },
        indent=4,
        sort_keys=True
    ) + "\n"
