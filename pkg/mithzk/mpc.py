#!python
"""This module provides the in-the-head 5-party BGW engine.

Parties evaluate a circuit on Shamir sharings gate by gate in post-order.
Addition, scalar multiplication and constants are local; every
multiplication gate reshares the local degree-4 products with fresh
degree-2 polynomials and recombines them with the Lagrange coefficients
(5, -10, 10, -5, 1). After the root, the output sharing is refreshed with
fresh sharings of zero and opened by broadcast.

A party's view is its input (public inputs and secret shares), its
randomness and its incoming messages. The trace of incoming messages is a
flat tuple of entries in evaluation order: one entry per interactive
multiplication gate, keyed by gate id, followed by the refresh entry and
the open entry. Entry values are indexed by the sending party.
"""

# builtin
import dataclasses
# local
import mithzk.circuit
import mithzk.field
import mithzk.sss
import mithzk.utils


VIEW_TAG = 0x56
REFRESH_TAG = 0xFFFFFFFE
OPEN_TAG = 0xFFFFFFFF


class MissingRandomnessError(KeyError):
    """Used to indicate that a randomness bundle lacks a gate."""
    pass


class ViewFormatError(ValueError):
    """Used to indicate a malformed canonical view encoding."""
    pass


class _InvalidTrace(object):
    """The result of recomputing from a view that does not fit its circuit."""

    def __repr__(self):
        return "INVALID_TRACE"

    def __bool__(self):
        return False


INVALID_TRACE = _InvalidTrace()


@dataclasses.dataclass(frozen=True)
class GateRandomness:
    """Resharing polynomials for all parties.

    `mul` maps each interactive multiplication gate id to 5 SSRandomness
    values, one per party; `refresh` holds the 5 zero-sharing polynomials
    of the output refresh.
    """
    mul: dict
    refresh: tuple

    def for_party(self, party: int) -> "PartyRandomness":
        index = mithzk.sss.check_party(party) - 1
        return PartyRandomness(
            tuple(
                (gate_id, self.mul[gate_id][index])
                for gate_id in sorted(self.mul)
            ),
            self.refresh[index],
        )


@dataclasses.dataclass(frozen=True)
class PartyRandomness:
    """One party's slice of GateRandomness, in ascending gate id order."""
    mul: tuple
    refresh: mithzk.sss.SSRandomness

    def for_gate(self, gate_id: int) -> mithzk.sss.SSRandomness:
        for current_gate_id, randomness in self.mul:
            if current_gate_id == gate_id:
                return randomness
        raise MissingRandomnessError(gate_id)

    @classmethod
    def zeros(cls, circuit: mithzk.circuit.Circuit) -> "PartyRandomness":
        zero = mithzk.sss.SSRandomness.zero(circuit.modulus)
        return cls(
            tuple(
                (gate_id, zero)
                for gate_id in sorted(
                    mithzk.circuit.multiplication_gates(circuit)
                )
            ),
            zero,
        )


@dataclasses.dataclass(frozen=True)
class TraceEntry:
    key: int
    values: tuple


@dataclasses.dataclass(frozen=True)
class View:
    public_inputs: tuple
    input_shares: tuple
    randomness: PartyRandomness
    trace: tuple

    def entry(self, key: int) -> TraceEntry:
        for entry in self.trace:
            if entry.key == key:
                return entry
        raise KeyError(key)

    def field_elements(self) -> list:
        """All field elements in canonical encoding order."""
        elements = list(self.public_inputs) + list(self.input_shares)
        for gate_id, randomness in self.randomness.mul:
            elements += [randomness.a1, randomness.a2]
        elements += [self.randomness.refresh.a1, self.randomness.refresh.a2]
        for entry in self.trace:
            elements += list(entry.values)
        return elements

    def to_bytes(self) -> bytes:
        return encode_view(self)

    @classmethod
    def zeros(cls, circuit: mithzk.circuit.Circuit) -> "View":
        """The all-zero view with the shape of a real view for circuit."""
        modulus = circuit.modulus
        zeros = (modulus.zero,) * mithzk.sss.PARTY_COUNT
        return cls(
            (modulus.zero,) * circuit.topology.n_public,
            (modulus.zero,) * circuit.topology.n_secret,
            PartyRandomness.zeros(circuit),
            tuple(TraceEntry(key, zeros) for key in trace_keys(circuit)),
        )


@dataclasses.dataclass(frozen=True)
class ExecutionResult:
    views: tuple
    outputs: tuple

    def view(self, party: int) -> View:
        return self.views[mithzk.sss.check_party(party) - 1]

    def output(self, party: int) -> mithzk.field.FieldElement:
        return self.outputs[mithzk.sss.check_party(party) - 1]


def trace_keys(circuit: mithzk.circuit.Circuit) -> tuple:
    """The trace entry keys of a circuit in evaluation order."""
    return mithzk.circuit.multiplication_gates(circuit) + (
        REFRESH_TAG,
        OPEN_TAG,
    )


def sample_gate_randomness(
    circuit: mithzk.circuit.Circuit,
    rng: mithzk.field.RandomSource,
) -> GateRandomness:
    """Fresh resharing randomness for every interactive gate and the refresh."""
    modulus = circuit.modulus

    def five():
        return tuple(
            mithzk.sss.sample_ss_randomness(rng, modulus)
            for party in mithzk.sss.PARTIES
        )
    return GateRandomness(
        {
            gate_id: five()
            for gate_id in mithzk.circuit.multiplication_gates(circuit)
        },
        five(),
    )


def gate_add(
    shares_left: mithzk.sss.Sharing,
    shares_right: mithzk.sss.Sharing,
) -> mithzk.sss.Sharing:
    return shares_left + shares_right


def gate_smul(
    scalar_sharing: mithzk.sss.Sharing,
    shares: mithzk.sss.Sharing,
) -> mithzk.sss.Sharing:
    """Multiply by a publicly encoded scalar, share-wise."""
    return mithzk.sss.Sharing(
        scalar * value for scalar, value in zip(scalar_sharing, shares)
    )


def gate_const(value: mithzk.field.FieldElement) -> mithzk.sss.Sharing:
    return mithzk.sss.public_encoding(value)


def gate_mul(
    shares_left: mithzk.sss.Sharing,
    shares_right: mithzk.sss.Sharing,
    randomness: tuple,
) -> tuple:
    """BGW multiplication with degree reduction.

    Parameters
    ----------
    shares_left : mithzk.sss.Sharing
        Degree-2 sharing of the left operand.
    shares_right : mithzk.sss.Sharing
        Degree-2 sharing of the right operand.
    randomness : tuple
        5 SSRandomness values, the resharing polynomial of each party.

    Returns
    -------
    : tuple
        The degree-2 product sharing and the 5x5 message matrix,
        where messages[i - 1][j - 1] = h_i(j) is sent from party i to j.
    """
    modulus = shares_left.modulus
    products = [
        left * right for left, right in zip(shares_left, shares_right)
    ]
    messages = tuple(
        mithzk.sss.share(product, party_randomness).shares
        for product, party_randomness in zip(products, randomness)
    )
    coefficients = mithzk.sss.recombination_coefficients(modulus)
    result = []
    for receiver in mithzk.sss.PARTIES:
        value = modulus.zero
        for coefficient, sender_messages in zip(coefficients, messages):
            value = value + coefficient * sender_messages[receiver - 1]
        result.append(value)
    return mithzk.sss.Sharing(result), messages


def zero_sharing_messages(
    randomness: tuple,
    modulus: mithzk.field.Modulus,
) -> tuple:
    """messages[i - 1][j - 1] = z_i(j) for the zero-sharings z_i."""
    return tuple(
        mithzk.sss.share(modulus.zero, party_randomness).shares
        for party_randomness in randomness
    )


def refresh_and_open(
    sharing: mithzk.sss.Sharing,
    randomness: tuple,
) -> tuple:
    """Add fresh sharings of zero and open the result.

    Returns
    -------
    : tuple
        The refreshed sharing, the 5 broadcast shares and the output y.
    """
    messages = zero_sharing_messages(randomness, sharing.modulus)
    refreshed = mithzk.sss.Sharing(
        value + sum(
            (sender_messages[receiver - 1] for sender_messages in messages),
            sharing.modulus.zero
        )
        for receiver, value in sharing.items()
    )
    broadcast = refreshed.shares
    return refreshed, broadcast, mithzk.sss.reconstruct(refreshed)


def execute(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    input_sharings,
    randomness: GateRandomness,
) -> ExecutionResult:
    """Run the protocol for all 5 parties.

    Parameters
    ----------
    circuit : mithzk.circuit.Circuit
        The circuit.
    public_inputs : sequence of mithzk.field.FieldElement
        The np public inputs.
    input_sharings : sequence of mithzk.sss.Sharing
        One sharing per secret input wire.
    randomness : GateRandomness
        Randomness for every interactive gate and the refresh.

    Returns
    -------
    : ExecutionResult
        The 5 views and the 5 (equal) outputs.

    Raises
    ------
    MissingRandomnessError
        If a multiplication gate has no randomness.
    """
    modulus = circuit.modulus
    public_inputs = tuple(public_inputs)
    input_sharings = tuple(input_sharings)
    traces = [[] for party in mithzk.sss.PARTIES]

    def record(key, messages):
        for receiver in mithzk.sss.PARTIES:
            traces[receiver - 1].append(
                TraceEntry(
                    key,
                    tuple(
                        sender_messages[receiver - 1]
                        for sender_messages in messages
                    )
                )
            )

    def evaluate(gate):
        if isinstance(gate, mithzk.circuit.PInput):
            return mithzk.sss.public_encoding(public_inputs[gate.index])
        elif isinstance(gate, mithzk.circuit.SInput):
            return input_sharings[gate.index]
        elif isinstance(gate, mithzk.circuit.Constant):
            return gate_const(gate.value)
        elif isinstance(gate, mithzk.circuit.SMultiplication):
            scalar = mithzk.circuit.eval_public(
                gate.left,
                public_inputs,
                modulus
            )
            return gate_smul(
                mithzk.sss.public_encoding(scalar),
                evaluate(gate.right)
            )
        left = evaluate(gate.left)
        right = evaluate(gate.right)
        if isinstance(gate, mithzk.circuit.Addition):
            return gate_add(left, right)
        if gate.gate_id not in randomness.mul:
            raise MissingRandomnessError(gate.gate_id)
        product, messages = gate_mul(left, right, randomness.mul[gate.gate_id])
        record(gate.gate_id, messages)
        return product

    root_sharing = evaluate(circuit.root)
    refreshed, broadcast, output = refresh_and_open(
        root_sharing,
        randomness.refresh
    )
    record(REFRESH_TAG, zero_sharing_messages(randomness.refresh, modulus))
    record(OPEN_TAG, tuple((share,) * 5 for share in broadcast))
    views = tuple(
        View(
            public_inputs,
            tuple(sharing[party] for sharing in input_sharings),
            randomness.for_party(party),
            tuple(traces[party - 1]),
        ) for party in mithzk.sss.PARTIES
    )
    return ExecutionResult(views, (output,) * mithzk.sss.PARTY_COUNT)


def run_protocol(
    statement: mithzk.circuit.Statement,
    input_sharings,
    randomness: GateRandomness,
) -> ExecutionResult:
    """Run the protocol on a statement's circuit and public inputs."""
    if len(input_sharings) != statement.circuit.topology.n_secret:
        raise mithzk.circuit.StatementError(
            f"Expected {statement.circuit.topology.n_secret} input sharings, "
            f"got {len(input_sharings)}"
        )
    return execute(
        statement.circuit,
        statement.public_inputs,
        input_sharings,
        randomness
    )


def view_shape_valid(circuit: mithzk.circuit.Circuit, view: View) -> bool:
    """True iff a view has the input, randomness and trace layout of circuit."""
    p = circuit.modulus.p

    def in_field(values):
        return all(
            isinstance(value, mithzk.field.FieldElement) and (
                value.modulus.p == p
            ) for value in values
        )
    try:
        if len(view.public_inputs) != circuit.topology.n_public:
            return False
        if len(view.input_shares) != circuit.topology.n_secret:
            return False
        if not in_field(view.public_inputs + view.input_shares):
            return False
        gate_ids = tuple(gate_id for gate_id, r in view.randomness.mul)
        if gate_ids != tuple(
            sorted(mithzk.circuit.multiplication_gates(circuit))
        ):
            return False
        for r in [r for gate_id, r in view.randomness.mul] + [
            view.randomness.refresh
        ]:
            if not in_field((r.a1, r.a2)):
                return False
        if tuple(entry.key for entry in view.trace) != trace_keys(circuit):
            return False
        for entry in view.trace:
            if len(entry.values) != mithzk.sss.PARTY_COUNT:
                return False
            if not in_field(entry.values):
                return False
    except (AttributeError, TypeError):
        return False
    return True


def _party_pass(circuit: mithzk.circuit.Circuit, party: int, view: View):
    """Recompute a party's outgoing messages and refreshed output share."""
    if not view_shape_valid(circuit, view):
        return INVALID_TRACE
    modulus = circuit.modulus
    coefficients = mithzk.sss.recombination_coefficients(modulus)
    trace = {entry.key: entry.values for entry in view.trace}
    outgoing = {}

    def evaluate(gate):
        if isinstance(gate, mithzk.circuit.PInput):
            return mithzk.sss.pub_reconstruct(
                party,
                view.public_inputs[gate.index]
            )
        elif isinstance(gate, mithzk.circuit.SInput):
            return view.input_shares[gate.index]
        elif isinstance(gate, mithzk.circuit.Constant):
            return gate.value
        elif isinstance(gate, mithzk.circuit.SMultiplication):
            scalar = mithzk.circuit.eval_public(
                gate.left,
                view.public_inputs,
                modulus
            )
            return scalar * evaluate(gate.right)
        left = evaluate(gate.left)
        right = evaluate(gate.right)
        if isinstance(gate, mithzk.circuit.Addition):
            return left + right
        product = left * right
        outgoing[gate.gate_id] = mithzk.sss.share(
            product,
            view.randomness.for_gate(gate.gate_id)
        ).shares
        value = modulus.zero
        for coefficient, incoming in zip(coefficients, trace[gate.gate_id]):
            value = value + coefficient * incoming
        return value

    root_share = evaluate(circuit.root)
    outgoing[REFRESH_TAG] = mithzk.sss.share(
        modulus.zero,
        view.randomness.refresh
    ).shares
    refreshed_share = root_share + sum(trace[REFRESH_TAG], modulus.zero)
    outgoing[OPEN_TAG] = (refreshed_share,) * mithzk.sss.PARTY_COUNT
    return outgoing, refreshed_share


def out_messages(circuit: mithzk.circuit.Circuit, party: int, view: View):
    """All messages a party sent, recomputed from its view alone.

    Returns
    -------
    : dict, INVALID_TRACE
        Maps each trace key to the 5 messages sent to parties 1..5.
        INVALID_TRACE if the view does not fit the circuit.
    """
    mithzk.sss.check_party(party)
    result = _party_pass(circuit, party, view)
    if result is INVALID_TRACE:
        return INVALID_TRACE
    return result[0]


def local_output(circuit: mithzk.circuit.Circuit, party: int, view: View):
    """The output a party reconstructs from the open broadcast in its view.

    The party's own recomputed refreshed share replaces its slot of the
    recorded broadcast. Returns INVALID_TRACE if the view does not fit the
    circuit.
    """
    mithzk.sss.check_party(party)
    result = _party_pass(circuit, party, view)
    if result is INVALID_TRACE:
        return INVALID_TRACE
    refreshed_share = result[1]
    broadcast = list(view.entry(OPEN_TAG).values)
    broadcast[party - 1] = refreshed_share
    return mithzk.sss.reconstruct(mithzk.sss.Sharing(broadcast))


def consistent_views(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    view_i: View,
    view_j: View,
    i: int,
    j: int,
) -> bool:
    """Check that two views agree on all messages between i and j.

    Both views must carry the public inputs, fit the circuit, record
    exactly the messages the other party's view implies it sent, and
    record their own party's messages to itself correctly.

    Raises
    ------
    mithzk.sss.PartyError
        If i == j or a party id is invalid.
    """
    mithzk.sss.check_corrupt_pair((i, j))
    public_inputs = tuple(public_inputs)
    if (tuple(view_i.public_inputs) != public_inputs) or (
        tuple(view_j.public_inputs) != public_inputs
    ):
        return False
    outgoing_i = out_messages(circuit, i, view_i)
    outgoing_j = out_messages(circuit, j, view_j)
    if (outgoing_i is INVALID_TRACE) or (outgoing_j is INVALID_TRACE):
        return False
    for entry_i, entry_j in zip(view_i.trace, view_j.trace):
        key = entry_i.key
        if entry_i.values[j - 1] != outgoing_j[key][i - 1]:
            return False
        if entry_j.values[i - 1] != outgoing_i[key][j - 1]:
            return False
        if entry_i.values[i - 1] != outgoing_i[key][i - 1]:
            return False
        if entry_j.values[j - 1] != outgoing_j[key][j - 1]:
            return False
    return True


def all_pairs_consistent(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    views,
) -> bool:
    return all(
        consistent_views(
            circuit,
            public_inputs,
            views[i - 1],
            views[j - 1],
            i,
            j
        ) for i, j in mithzk.sss.PARTY_PAIRS
    )


def reexecute(circuit: mithzk.circuit.Circuit, views):
    """Re-run the protocol on inputs and randomness extracted from 5 views.

    Returns
    -------
    : ExecutionResult, INVALID_TRACE
        INVALID_TRACE if a view does not fit the circuit or the views
        disagree on the public inputs.
    """
    views = tuple(views)
    if len(views) != mithzk.sss.PARTY_COUNT:
        return INVALID_TRACE
    if not all(view_shape_valid(circuit, view) for view in views):
        return INVALID_TRACE
    public_inputs = views[0].public_inputs
    if any(view.public_inputs != public_inputs for view in views):
        return INVALID_TRACE
    input_sharings = [
        mithzk.sss.Sharing(view.input_shares[index] for view in views)
        for index in range(circuit.topology.n_secret)
    ]
    randomness = GateRandomness(
        {
            gate_id: tuple(view.randomness.for_gate(gate_id) for view in views)
            for gate_id in mithzk.circuit.multiplication_gates(circuit)
        },
        tuple(view.randomness.refresh for view in views),
    )
    return execute(circuit, public_inputs, input_sharings, randomness)


def views_reproducible(circuit: mithzk.circuit.Circuit, views) -> bool:
    """True iff an honest execution produces exactly these 5 views."""
    result = reexecute(circuit, views)
    if result is INVALID_TRACE:
        return False
    return result.views == tuple(views)


@dataclasses.dataclass(frozen=True)
class SimulatorComponents:
    """The sampled parts of a simulated corrupt-pair view.

    `randomness` maps each corrupt party to its PartyRandomness.
    `mul_messages` maps each interactive gate id to a dict from honest
    sender to the pair (message to i, message to j); `refresh_messages` is
    the same dict for the refresh zero-sharings.
    """
    randomness: dict
    mul_messages: dict
    refresh_messages: dict


def honest_parties(corrupt) -> tuple:
    return tuple(
        party for party in mithzk.sss.PARTIES if party not in corrupt
    )


def sample_simulator_components(
    circuit: mithzk.circuit.Circuit,
    corrupt,
    rng: mithzk.field.RandomSource,
) -> SimulatorComponents:
    """Uniform corrupt randomness and uniform honest message pairs."""
    modulus = circuit.modulus
    honest = honest_parties(corrupt)
    gate_ids = mithzk.circuit.multiplication_gates(circuit)

    def pair():
        return (
            mithzk.field.sample_fe(rng, modulus),
            mithzk.field.sample_fe(rng, modulus),
        )
    randomness = {
        party: PartyRandomness(
            tuple(
                (gate_id, mithzk.sss.sample_ss_randomness(rng, modulus))
                for gate_id in sorted(gate_ids)
            ),
            mithzk.sss.sample_ss_randomness(rng, modulus),
        ) for party in corrupt
    }
    return SimulatorComponents(
        randomness,
        {
            gate_id: {sender: pair() for sender in honest}
            for gate_id in gate_ids
        },
        {sender: pair() for sender in honest},
    )


def extract_simulator_components(
    circuit: mithzk.circuit.Circuit,
    corrupt,
    view_i: View,
    view_j: View,
) -> SimulatorComponents:
    """The components that make the simulator reproduce two real views."""
    i, j = mithzk.sss.check_corrupt_pair(corrupt)
    honest = honest_parties((i, j))
    return SimulatorComponents(
        {i: view_i.randomness, j: view_j.randomness},
        {
            gate_id: {
                sender: (
                    view_i.entry(gate_id).values[sender - 1],
                    view_j.entry(gate_id).values[sender - 1],
                ) for sender in honest
            } for gate_id in mithzk.circuit.multiplication_gates(circuit)
        },
        {
            sender: (
                view_i.entry(REFRESH_TAG).values[sender - 1],
                view_j.entry(REFRESH_TAG).values[sender - 1],
            ) for sender in honest
        },
    )


def simulate_from_components(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    corrupt,
    corrupt_shares,
    output: mithzk.field.FieldElement,
    components: SimulatorComponents,
) -> tuple:
    """Deterministically build the views of two corrupt parties.

    Parameters
    ----------
    circuit : mithzk.circuit.Circuit
        The circuit.
    public_inputs : sequence of mithzk.field.FieldElement
        The np public inputs.
    corrupt : tuple
        The corrupt parties (i, j).
    corrupt_shares : tuple
        The secret-input share vectors of i and j.
    output : mithzk.field.FieldElement
        The circuit output y.
    components : SimulatorComponents
        The corrupt randomness and the honest incoming message pairs.

    Returns
    -------
    : tuple
        The views of i and j.
    """
    i, j = mithzk.sss.check_corrupt_pair(corrupt)
    pair = (i, j)
    modulus = circuit.modulus
    public_inputs = tuple(public_inputs)
    shares = {i: tuple(corrupt_shares[0]), j: tuple(corrupt_shares[1])}
    coefficients = mithzk.sss.recombination_coefficients(modulus)
    traces = {i: [], j: []}

    def incoming(key, own_polynomials, honest_pairs):
        for position, receiver in enumerate(pair):
            values = []
            for sender in mithzk.sss.PARTIES:
                if sender in own_polynomials:
                    values.append(own_polynomials[sender][receiver - 1])
                else:
                    values.append(honest_pairs[sender][position])
            traces[receiver].append(TraceEntry(key, tuple(values)))

    def evaluate(gate):
        if isinstance(gate, mithzk.circuit.PInput):
            value = public_inputs[gate.index]
            return {party: value for party in pair}
        elif isinstance(gate, mithzk.circuit.SInput):
            return {party: shares[party][gate.index] for party in pair}
        elif isinstance(gate, mithzk.circuit.Constant):
            return {party: gate.value for party in pair}
        elif isinstance(gate, mithzk.circuit.SMultiplication):
            scalar = mithzk.circuit.eval_public(
                gate.left,
                public_inputs,
                modulus
            )
            right = evaluate(gate.right)
            return {party: scalar * right[party] for party in pair}
        left = evaluate(gate.left)
        right = evaluate(gate.right)
        if isinstance(gate, mithzk.circuit.Addition):
            return {party: left[party] + right[party] for party in pair}
        own_polynomials = {
            party: mithzk.sss.share(
                left[party] * right[party],
                components.randomness[party].for_gate(gate.gate_id)
            ).shares for party in pair
        }
        incoming(
            gate.gate_id,
            own_polynomials,
            components.mul_messages[gate.gate_id]
        )
        result = {}
        for party in pair:
            value = modulus.zero
            for coefficient, message in zip(
                coefficients,
                traces[party][-1].values
            ):
                value = value + coefficient * message
            result[party] = value
        return result

    root = evaluate(circuit.root)
    own_zero_sharings = {
        party: mithzk.sss.share(
            modulus.zero,
            components.randomness[party].refresh
        ).shares for party in pair
    }
    incoming(REFRESH_TAG, own_zero_sharings, components.refresh_messages)
    refreshed = {
        party: root[party] + sum(traces[party][-1].values, modulus.zero)
        for party in pair
    }
    points = [
        (modulus.zero, output),
        (modulus.element(i), refreshed[i]),
        (modulus.element(j), refreshed[j]),
    ]
    broadcast = tuple(
        refreshed[party] if party in pair else mithzk.field.lagrange_at(
            points,
            party
        ) for party in mithzk.sss.PARTIES
    )
    for party in pair:
        traces[party].append(TraceEntry(OPEN_TAG, broadcast))
    return tuple(
        View(
            public_inputs,
            shares[party],
            components.randomness[party],
            tuple(traces[party]),
        ) for party in pair
    )


def mpc_simulate(
    circuit: mithzk.circuit.Circuit,
    public_inputs,
    corrupt,
    corrupt_shares,
    output: mithzk.field.FieldElement,
    rng: mithzk.field.RandomSource,
) -> tuple:
    """Simulate the joint view of two corrupt parties from their inputs and y.

    Honest incoming message pairs and the corrupt randomness are uniform;
    the three honest broadcast shares lie on the degree-2 polynomial
    through (0, y) and the corrupt refreshed shares.
    """
    mithzk.sss.check_corrupt_pair(corrupt)
    components = sample_simulator_components(circuit, corrupt, rng)
    return simulate_from_components(
        circuit,
        public_inputs,
        corrupt,
        corrupt_shares,
        output,
        components
    )


def _encode_element(element: mithzk.field.FieldElement) -> bytes:
    return element.to_bytes()


def encode_view(view: View) -> bytes:
    """The canonical view encoding, committed to bit for bit.

    Tag 0x56, then length-prefixed public inputs and secret shares, the
    count of multiplication randomness entries with (gate id, a1, a2) each
    in ascending gate id order, the refresh (a1, a2), and the
    length-prefixed trace entries as (key, 5, five elements).
    """
    encoded = [
        bytes([VIEW_TAG]),
        mithzk.utils.encode_list(view.public_inputs, _encode_element),
        mithzk.utils.encode_list(view.input_shares, _encode_element),
        mithzk.utils.encode_list(
            view.randomness.mul,
            lambda item: mithzk.utils.encode_u32(item[0]) + item[1].to_bytes()
        ),
        view.randomness.refresh.to_bytes(),
        mithzk.utils.encode_list(
            view.trace,
            lambda entry: mithzk.utils.encode_u32(
                entry.key
            ) + mithzk.utils.encode_list(entry.values, _encode_element)
        ),
    ]
    return b"".join(encoded)


def decode_view(
    reader: mithzk.utils.ByteReader,
    modulus: mithzk.field.Modulus,
) -> View:
    """Read one canonical view encoding.

    Raises
    ------
    ViewFormatError
        On a wrong tag or a trace entry without 5 values.
    mithzk.utils.TruncatedDataError
        If the data ends early.
    mithzk.field.FieldDomainError
        On unreduced field elements.
    """
    tag = reader.read_byte()
    if tag != VIEW_TAG:
        raise ViewFormatError(f"Expected view tag {VIEW_TAG:#x}, got {tag:#x}")
    public_inputs = tuple(reader.read_list(modulus.read_element))
    input_shares = tuple(reader.read_list(modulus.read_element))
    mul = tuple(
        reader.read_list(
            lambda r: (
                r.read_u32(),
                mithzk.sss.SSRandomness.read(r, modulus)
            )
        )
    )
    refresh = mithzk.sss.SSRandomness.read(reader, modulus)

    def read_entry(r):
        key = r.read_u32()
        values = tuple(
            r.read_list(modulus.read_element, max_count=mithzk.sss.PARTY_COUNT)
        )
        if len(values) != mithzk.sss.PARTY_COUNT:
            raise ViewFormatError(
                f"Trace entry {key} has {len(values)} values"
            )
        return TraceEntry(key, values)
    trace = tuple(reader.read_list(read_entry))
    return View(
        public_inputs,
        input_shares,
        PartyRandomness(mul, refresh),
        trace
    )


def view_from_bytes(data: bytes, modulus: mithzk.field.Modulus) -> View:
    reader = mithzk.utils.ByteReader(data)
    view = decode_view(reader, modulus)
    reader.expect_end()
    return view
