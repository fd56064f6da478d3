#!python
"""This module provides the arithmetic circuit model.

Circuits are trees of gates over a prime field, as read from `.arith`
files with the following format:

    field <p or preset name>
    topology <np> <ns> <ng>
    (<s-expression>)

Gate forms are `(pinput i)`, `(sinput i)`, `(const id v)`,
`(add id L R)`, `(mul id L R)` and `(smul id L R)`.
Lines starting with ";" are comments.
The module also provides statements, witnesses and the NP relation they
induce: a witness is valid iff the circuit output equals the target.
"""

# builtin
import dataclasses
import hashlib
import logging
import os
import re
import typing
# local
import mithzk.field


MAX_GATE_ID = 2**32 - 3
KEYWORDS = ("pinput", "sinput", "const", "add", "mul", "smul")


class CircuitSyntaxError(ValueError):
    """Used to indicate a malformed circuit text, with line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CircuitValidationError(ValueError):
    """Used to indicate a violated circuit invariant.

    The `code` attribute distinguishes the invariant:
    topology_invalid, gate_id_out_of_range, duplicate_gate_id,
    public_index_out_of_range, secret_index_out_of_range,
    gate_count_mismatch, secret_in_scalar_operand, modulus_mismatch.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class StatementError(ValueError):
    """Used to indicate malformed statement or witness data."""
    pass


@dataclasses.dataclass(frozen=True)
class Topology:
    n_public: int
    n_secret: int
    n_gates: int


@dataclasses.dataclass(frozen=True)
class PInput:
    index: int


@dataclasses.dataclass(frozen=True)
class SInput:
    index: int


@dataclasses.dataclass(frozen=True)
class Constant:
    gate_id: int
    value: mithzk.field.FieldElement


@dataclasses.dataclass(frozen=True)
class Addition:
    gate_id: int
    left: "Gate"
    right: "Gate"


@dataclasses.dataclass(frozen=True)
class Multiplication:
    gate_id: int
    left: "Gate"
    right: "Gate"


@dataclasses.dataclass(frozen=True)
class SMultiplication:
    """Multiplication by a public scalar; the left subtree holds no SInput."""
    gate_id: int
    left: "Gate"
    right: "Gate"


Gate = typing.Union[
    PInput, SInput, Constant, Addition, Multiplication, SMultiplication
]
BINARY_GATES = (Addition, Multiplication, SMultiplication)


@dataclasses.dataclass(frozen=True)
class Circuit:
    topology: Topology
    root: Gate
    modulus: mithzk.field.Modulus


@dataclasses.dataclass(frozen=True)
class Witness:
    secret_inputs: tuple


@dataclasses.dataclass(frozen=True)
class Statement:
    """A public instance x: circuit, public inputs and the expected output."""
    circuit: Circuit
    public_inputs: tuple
    target: mithzk.field.FieldElement

    def __post_init__(self):
        if len(self.public_inputs) != self.circuit.topology.n_public:
            raise StatementError(
                f"Statement has {len(self.public_inputs)} public inputs, "
                f"topology requires {self.circuit.topology.n_public}"
            )

    @property
    def modulus(self) -> mithzk.field.Modulus:
        return self.circuit.modulus

    def canonical_bytes(self) -> bytes:
        """The statement file with the referenced circuit inlined."""
        public = " ".join(str(value) for value in self.public_inputs)
        return (
            f"field {self.modulus.p}\n"
            f"target {self.target}\n"
            f"public {public}\n"
            f"{print_circuit(self.circuit)}"
        ).encode("utf-8")

    @property
    def hash(self) -> bytes:
        """: bytes : SHA-256 of the canonical statement bytes."""
        return hashlib.sha256(self.canonical_bytes()).digest()


def iter_gates(gate: Gate):
    """Yield all gates of a tree in post-order (left, right, node)."""
    if isinstance(gate, BINARY_GATES):
        yield from iter_gates(gate.left)
        yield from iter_gates(gate.right)
    yield gate


def multiplication_gates(circuit: Circuit) -> tuple:
    """Multiplication gate ids that are evaluated interactively, in post-order.

    Multiplications inside the public (left) operand of an SMultiplication
    are evaluated in the clear and are not listed.
    """
    gate_ids = []

    def collect(gate):
        if isinstance(gate, SMultiplication):
            collect(gate.right)
        elif isinstance(gate, BINARY_GATES):
            collect(gate.left)
            collect(gate.right)
            if isinstance(gate, Multiplication):
                gate_ids.append(gate.gate_id)
    collect(circuit.root)
    return tuple(gate_ids)


def node_count(circuit: Circuit) -> int:
    """All tree nodes including inputs, the counting used by benchmarks."""
    return sum(1 for gate in iter_gates(circuit.root))


def _tokenize(text: str) -> list:
    tokens = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(";"):
            continue
        for match in re.finditer(r"\(|\)|[^\s()]+", line):
            tokens.append((match.group(0), line_number, match.start() + 1))
    return tokens


class _TokenStream(object):

    def __init__(self, tokens: list, text: str):
        self._tokens = tokens
        self._position = 0
        lines = text.splitlines()
        self._end = (max(len(lines), 1), len(lines[-1]) + 1 if lines else 1)

    def peek(self):
        if self._position < len(self._tokens):
            return self._tokens[self._position]
        return None

    def next(self, expected: str = None):
        token = self.peek()
        if token is None:
            raise CircuitSyntaxError(
                "unexpected end of input"
                if expected is None
                else f"expected '{expected}', got end of input",
                *self._end
            )
        if (expected is not None) and (token[0] != expected):
            raise CircuitSyntaxError(
                f"expected '{expected}', got '{token[0]}'",
                token[1],
                token[2]
            )
        self._position += 1
        return token

    def next_int(self, what: str, allow_negative: bool = False) -> int:
        token = self.next()
        pattern = r"-?\d+" if allow_negative else r"\d+"
        if not re.fullmatch(pattern, token[0]):
            raise CircuitSyntaxError(
                f"expected {what}, got '{token[0]}'",
                token[1],
                token[2]
            )
        return int(token[0])


def _parse_gate(stream: _TokenStream, modulus) -> Gate:
    stream.next("(")
    keyword_token = stream.next()
    keyword = keyword_token[0]
    if keyword not in KEYWORDS:
        raise CircuitSyntaxError(
            f"unknown gate '{keyword}'",
            keyword_token[1],
            keyword_token[2]
        )
    if keyword == "pinput":
        gate = PInput(stream.next_int("an input index"))
    elif keyword == "sinput":
        gate = SInput(stream.next_int("an input index"))
    elif keyword == "const":
        gate_id = stream.next_int("a gate id")
        value = stream.next_int("a constant", allow_negative=True)
        gate = Constant(gate_id, modulus.element(value))
    else:
        gate_id = stream.next_int("a gate id")
        left = _parse_gate(stream, modulus)
        right = _parse_gate(stream, modulus)
        gate_class = {
            "add": Addition,
            "mul": Multiplication,
            "smul": SMultiplication,
        }[keyword]
        gate = gate_class(gate_id, left, right)
    stream.next(")")
    return gate


def parse_circuit(text) -> Circuit:
    """Parse and validate a circuit from its text format.

    Parameters
    ----------
    text : bytes, str
        The UTF-8 circuit text.

    Returns
    -------
    : Circuit
        A validated circuit.

    Raises
    ------
    CircuitSyntaxError
        On malformed text, with line and column.
    CircuitValidationError
        On violated circuit invariants.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as error:
            raise CircuitSyntaxError(f"text is not UTF-8 ({error})", 1, 1)
    stream = _TokenStream(_tokenize(text), text)
    stream.next("field")
    field_token = stream.next()
    try:
        modulus = mithzk.field.load_modulus(field_token[0])
    except mithzk.field.InvalidModulusError as error:
        raise CircuitSyntaxError(str(error), field_token[1], field_token[2])
    stream.next("topology")
    topology = Topology(
        stream.next_int("a public input count"),
        stream.next_int("a secret input count"),
        stream.next_int("a gate count"),
    )
    root = _parse_gate(stream, modulus)
    trailing = stream.peek()
    if trailing is not None:
        raise CircuitSyntaxError(
            f"unexpected trailing '{trailing[0]}'",
            trailing[1],
            trailing[2]
        )
    circuit = Circuit(topology, root, modulus)
    validate_circuit(circuit)
    return circuit


def _print_gate(gate: Gate) -> str:
    if isinstance(gate, PInput):
        return f"(pinput {gate.index})"
    elif isinstance(gate, SInput):
        return f"(sinput {gate.index})"
    elif isinstance(gate, Constant):
        return f"(const {gate.gate_id} {gate.value})"
    keyword = {
        Addition: "add",
        Multiplication: "mul",
        SMultiplication: "smul",
    }[type(gate)]
    return (
        f"({keyword} {gate.gate_id} "
        f"{_print_gate(gate.left)} {_print_gate(gate.right)})"
    )


def print_circuit(circuit: Circuit) -> str:
    """The text format of a circuit; parse_circuit inverts it."""
    topology = circuit.topology
    return (
        f"field {circuit.modulus.p}\n"
        f"topology {topology.n_public} {topology.n_secret} "
        f"{topology.n_gates}\n"
        f"{_print_gate(circuit.root)}\n"
    )


def _contains_secret_input(gate: Gate) -> bool:
    return any(isinstance(node, SInput) for node in iter_gates(gate))


def validate_circuit(circuit: Circuit) -> None:
    """Check all circuit invariants.

    Raises
    ------
    CircuitValidationError
        With a distinct code per violated invariant.
    """
    topology = circuit.topology
    if (topology.n_public < 0) or (topology.n_secret < 1) or (
        topology.n_gates < 1
    ):
        raise CircuitValidationError(
            "topology_invalid",
            f"topology {topology} needs np >= 0, ns >= 1 and ng >= 1"
        )
    seen_gate_ids = set()
    for gate in iter_gates(circuit.root):
        if isinstance(gate, PInput):
            if not 0 <= gate.index < topology.n_public:
                raise CircuitValidationError(
                    "public_index_out_of_range",
                    f"pinput {gate.index} with np={topology.n_public}"
                )
            continue
        if isinstance(gate, SInput):
            if not 0 <= gate.index < topology.n_secret:
                raise CircuitValidationError(
                    "secret_index_out_of_range",
                    f"sinput {gate.index} with ns={topology.n_secret}"
                )
            continue
        if not 0 <= gate.gate_id <= MAX_GATE_ID:
            raise CircuitValidationError(
                "gate_id_out_of_range",
                f"gate id {gate.gate_id} is outside [0, {MAX_GATE_ID}]"
            )
        if gate.gate_id in seen_gate_ids:
            raise CircuitValidationError(
                "duplicate_gate_id",
                f"gate id {gate.gate_id} is used more than once"
            )
        seen_gate_ids.add(gate.gate_id)
        if isinstance(gate, Constant):
            if gate.value.modulus.p != circuit.modulus.p:
                raise CircuitValidationError(
                    "modulus_mismatch",
                    f"constant {gate.gate_id} is not in the circuit field"
                )
        if isinstance(gate, SMultiplication):
            if _contains_secret_input(gate.left):
                raise CircuitValidationError(
                    "secret_in_scalar_operand",
                    f"smul {gate.gate_id} has a secret input in its scalar "
                    "(left) operand"
                )
    if len(seen_gate_ids) != topology.n_gates:
        raise CircuitValidationError(
            "gate_count_mismatch",
            f"circuit has {len(seen_gate_ids)} gates, "
            f"topology declares {topology.n_gates}"
        )


def evaluate_gate(gate: Gate, public_inputs, secret_inputs, modulus):
    """Evaluate a (sub)tree in the clear."""
    if isinstance(gate, PInput):
        return public_inputs[gate.index]
    elif isinstance(gate, SInput):
        return secret_inputs[gate.index]
    elif isinstance(gate, Constant):
        return gate.value
    left = evaluate_gate(gate.left, public_inputs, secret_inputs, modulus)
    right = evaluate_gate(gate.right, public_inputs, secret_inputs, modulus)
    if isinstance(gate, Addition):
        return left + right
    return left * right


def eval_public(gate: Gate, public_inputs, modulus):
    """Evaluate a subtree without secret inputs (an smul scalar operand)."""
    return evaluate_gate(gate, public_inputs, (), modulus)


def check_witness(statement: Statement, witness: Witness) -> None:
    if len(witness.secret_inputs) != statement.circuit.topology.n_secret:
        raise StatementError(
            f"Witness has {len(witness.secret_inputs)} secret inputs, "
            f"topology requires {statement.circuit.topology.n_secret}"
        )


def eval_plain(statement: Statement, witness: Witness):
    """The cleartext circuit output for a statement and a witness.

    Raises
    ------
    StatementError
        If the witness length does not match the topology.
    """
    check_witness(statement, witness)
    return evaluate_gate(
        statement.circuit.root,
        statement.public_inputs,
        witness.secret_inputs,
        statement.modulus
    )


def relation_holds(statement: Statement, witness: Witness) -> bool:
    """True iff the circuit outputs the statement's target on the witness."""
    try:
        return eval_plain(statement, witness) == statement.target
    except StatementError:
        return False


def relabel_gates(circuit: Circuit, relabel) -> Circuit:
    """Return a copy with every gate id replaced by relabel(gate_id)."""

    def rebuild(gate):
        if isinstance(gate, (PInput, SInput)):
            return gate
        if isinstance(gate, Constant):
            return Constant(relabel(gate.gate_id), gate.value)
        return type(gate)(
            relabel(gate.gate_id),
            rebuild(gate.left),
            rebuild(gate.right)
        )
    return Circuit(circuit.topology, rebuild(circuit.root), circuit.modulus)


def random_circuit(
    modulus,
    rng,
    *,
    max_depth: int = 4,
    n_public: int = 1,
    n_secret: int = 2,
) -> Circuit:
    """Generate a random valid circuit.

    Parameters
    ----------
    modulus : mithzk.field.Modulus
        The field.
    rng : mithzk.field.RandomSource
        The randomness.
    max_depth : int
        The maximum depth of the gate tree (>= 1).
        Default is 4.
    n_public : int
        The number of public input wires.
        Default is 1.
    n_secret : int
        The number of secret input wires.
        Default is 2.

    Returns
    -------
    : Circuit
        A circuit whose gate ids are 1, 2, ... in post-order.
    """
    next_gate_id = [1]

    def new_gate_id():
        gate_id = next_gate_id[0]
        next_gate_id[0] += 1
        return gate_id

    def leaf(public_only: bool):
        choice = rng.randbelow(3)
        if (choice == 0) and (n_public > 0):
            return PInput(rng.randbelow(n_public))
        if (choice == 1) or public_only:
            return Constant(
                new_gate_id(),
                mithzk.field.sample_fe(rng, modulus)
            )
        return SInput(rng.randbelow(n_secret))

    def build(depth: int, public_only: bool, force_gate: bool = False):
        if (depth <= 1) or ((not force_gate) and rng.randbelow(4) == 0):
            return leaf(public_only)
        kind = rng.randbelow(3)
        if kind == 2:
            left = build(depth - 1, True)
            right = build(depth - 1, public_only)
            return SMultiplication(new_gate_id(), left, right)
        left = build(depth - 1, public_only)
        right = build(depth - 1, public_only)
        if kind == 0:
            return Addition(new_gate_id(), left, right)
        return Multiplication(new_gate_id(), left, right)

    root = build(max(max_depth, 2), False, force_gate=True)
    gate_count = sum(
        1 for gate in iter_gates(root) if not isinstance(gate, (PInput, SInput))
    )
    circuit = Circuit(Topology(n_public, n_secret, gate_count), root, modulus)
    validate_circuit(circuit)
    return circuit


def load_circuit(file_name: str) -> Circuit:
    """Read and parse an .arith file."""
    logging.info(f"Reading circuit from {file_name}")
    with open(file_name, "rb") as infile:
        return parse_circuit(infile.read())


def _parse_key_values(text: str, file_name: str) -> dict:
    entries = {}
    for line in text.splitlines():
        line = line.strip()
        if (line == "") or line.startswith(";"):
            continue
        key, *values = line.split()
        if key in entries:
            raise StatementError(f"{file_name}: duplicate '{key}' line")
        entries[key] = values
    return entries


def _parse_ints(values, what: str, file_name: str) -> list:
    try:
        return [int(value) for value in values]
    except ValueError:
        raise StatementError(f"{file_name}: '{what}' needs decimal integers")


def load_statement(file_name: str) -> Statement:
    """Read a statement file.

    The file has `field <p>`, `circuit <path>`, `target <int>` and
    `public <int>*` lines. The circuit path is relative to the statement
    file. All integers are decimal and reduced mod p.
    """
    logging.info(f"Reading statement from {file_name}")
    with open(file_name, "r") as infile:
        entries = _parse_key_values(infile.read(), file_name)
    for key in ("field", "circuit", "target"):
        if key not in entries:
            raise StatementError(f"{file_name}: missing '{key}' line")
    circuit_file_name = " ".join(entries["circuit"])
    if not os.path.isabs(circuit_file_name):
        circuit_file_name = os.path.join(
            os.path.dirname(os.path.abspath(file_name)),
            circuit_file_name
        )
    circuit = load_circuit(circuit_file_name)
    try:
        modulus = mithzk.field.load_modulus(" ".join(entries["field"]))
    except mithzk.field.InvalidModulusError as error:
        raise StatementError(f"{file_name}: {error}")
    if modulus != circuit.modulus:
        raise StatementError(
            f"{file_name}: field {modulus.p} differs from the circuit field"
        )
    target = _parse_ints(entries["target"], "target", file_name)
    if len(target) != 1:
        raise StatementError(f"{file_name}: 'target' needs one integer")
    public = _parse_ints(entries.get("public", []), "public", file_name)
    return Statement(
        circuit,
        modulus.elements(public),
        modulus.element(target[0])
    )


def load_witness(file_name: str, modulus) -> Witness:
    """Read a witness file with a single `secret <int>*` line."""
    logging.info(f"Reading witness from {file_name}")
    with open(file_name, "r") as infile:
        entries = _parse_key_values(infile.read(), file_name)
    if "secret" not in entries:
        raise StatementError(f"{file_name}: missing 'secret' line")
    values = _parse_ints(entries["secret"], "secret", file_name)
    return Witness(modulus.elements(values))


def write_statement(
    file_name: str,
    statement: Statement,
    circuit_file_name: str
) -> None:
    """Write a statement file that references circuit_file_name."""
    public = " ".join(str(value) for value in statement.public_inputs)
    with open(file_name, "w") as outfile:
        outfile.write(
            f"field {statement.modulus.p}\n"
            f"circuit {circuit_file_name}\n"
            f"target {statement.target}\n"
            f"public {public}\n"
        )


def write_witness(file_name: str, witness: Witness) -> None:
    secret = " ".join(str(value) for value in witness.secret_inputs)
    with open(file_name, "w") as outfile:
        outfile.write(f"secret {secret}\n")
