#!python
"""This module provides commitment schemes for MPC views.

Two schemes are available:

    - "prf" (id 0x01): one HMAC-SHA256 digest over the canonical view
      encoding, keyed with a fresh 32-byte key that is also the opening.
    - "pedersen" (id 0x02): one Pedersen commitment g^m·h^r mod P per
      field element of the view, in a prime-order-q subgroup of Z_P*.

Pedersen groups are read from `lib/pedersen_groups.json`, either with
explicit decimal P, q, g and h or as a deterministic generation recipe.
"""

# builtin
import dataclasses
import functools
import hashlib
import hmac
import logging
import os
# external
import sympy
# local
import mithzk.field
import mithzk.utils


PRF_KEY_LENGTH = 32
PRF_DIGEST_LENGTH = 32
PRF_SCHEME_ID = 0x01
PEDERSEN_SCHEME_ID = 0x02
DEFAULT_PEDERSEN_GROUP = "default"
PEDERSEN_GROUPS = mithzk.utils.load_lib_json("pedersen_groups.json")


class CommitmentError(ValueError):
    """Used to indicate invalid commitment keys, messages or encodings."""
    pass


class PedersenParameterError(ValueError):
    """Used to indicate Pedersen parameters that violate a group invariant."""
    pass


def hmac_sha256(key: bytes, message: bytes) -> bytes:
    """HMAC-SHA256 as in RFC 2104, for keys of any length."""
    return hmac.new(key, message, hashlib.sha256).digest()


def prf_commit(key: bytes, message: bytes) -> tuple:
    """Commit to a byte string under a fresh 32-byte PRF key.

    Parameters
    ----------
    key : bytes
        A fresh uniform 32-byte key.
    message : bytes
        The message.

    Returns
    -------
    : tuple
        The commitment HMAC-SHA256(key, message) and the opening key.

    Raises
    ------
    CommitmentError
        If the key does not have 32 bytes.
    """
    if len(key) != PRF_KEY_LENGTH:
        raise CommitmentError(
            f"PRF keys have {PRF_KEY_LENGTH} bytes, got {len(key)}"
        )
    return hmac_sha256(key, message), key


def prf_verify(message: bytes, commitment: bytes, opening: bytes) -> bool:
    """True iff HMAC-SHA256(opening, message) equals the commitment."""
    if len(opening) != PRF_KEY_LENGTH:
        return False
    if len(commitment) != PRF_DIGEST_LENGTH:
        return False
    return hmac.compare_digest(hmac_sha256(opening, message), commitment)


@dataclasses.dataclass(frozen=True)
class PedersenParams:
    """A Schnorr group: prime P, prime q | P - 1 and g, h of order q."""
    P: int
    q: int
    g: int
    h: int

    def __post_init__(self):
        if not (sympy.isprime(self.P) and sympy.isprime(self.q)):
            raise PedersenParameterError("P and q must both be prime")
        if (self.P - 1) % self.q != 0:
            raise PedersenParameterError("q does not divide P - 1")
        for name, generator in (("g", self.g), ("h", self.h)):
            if not 1 < generator < self.P:
                raise PedersenParameterError(f"{name} is not in (1, P)")
            if pow(generator, self.q, self.P) != 1:
                raise PedersenParameterError(f"{name} does not have order q")

    @property
    def element_length(self) -> int:
        """: int : The width of an encoded group element."""
        return (self.P.bit_length() + 7) // 8

    @property
    def blinder_length(self) -> int:
        """: int : The width of an encoded blinder."""
        return (self.q.bit_length() + 7) // 8

    def is_group_element(self, value: int) -> bool:
        return (0 < value < self.P) and pow(value, self.q, self.P) == 1

    def check_field(self, modulus: mithzk.field.Modulus) -> None:
        if modulus.p > self.q:
            raise PedersenParameterError(
                f"Field of {modulus.bits} bits does not fit a group order of "
                f"{self.q.bit_length()} bits"
            )


def _expand(seed: bytes, label: bytes, counter: int, size: int) -> int:
    """Deterministic SHA-256 counter-mode expansion to an int of size bytes."""
    blocks = []
    block = 0
    while 32 * len(blocks) < size:
        blocks.append(
            hashlib.sha256(
                seed + label + counter.to_bytes(8, "big") +
                block.to_bytes(4, "big")
            ).digest()
        )
        block += 1
    return int.from_bytes(b"".join(blocks)[:size], "big")


@functools.lru_cache(maxsize=None)
def generate_pedersen_params(q: int, p_bits: int, seed: bytes) -> PedersenParams:
    """Deterministically generate a Schnorr group of order q.

    Parameters
    ----------
    q : int
        The prime subgroup order.
    p_bits : int
        The bit length of P = k·q + 1.
    seed : bytes
        The seed from which k, g and h are derived.

    Returns
    -------
    : PedersenParams
        The group, with g and h obtained by raising hash-derived values
        to (P - 1) / q.
    """
    if p_bits <= q.bit_length() + 1:
        raise PedersenParameterError(
            f"P needs more than {q.bit_length() + 1} bits for this q"
        )
    logging.info(
        f"Generating {p_bits}-bit Pedersen group with "
        f"{q.bit_length()}-bit subgroup order"
    )
    k_low = (2**(p_bits - 1) - 1) // q + 1
    k_high = (2**p_bits - 2) // q
    prime_draws = 0
    while True:
        k = k_low + _expand(seed, b"k", prime_draws, p_bits // 8 + 8) % (
            k_high - k_low + 1
        )
        k -= k % 2
        P = k * q + 1
        prime_draws += 1
        if (k >= k_low) and (P.bit_length() == p_bits) and sympy.isprime(P):
            break
    generators = []
    generator_draws = 0
    for label in (b"g", b"h"):
        counter = 0
        while True:
            candidate = _expand(seed, label, counter, p_bits // 8 + 8) % P
            generator = pow(candidate, k, P)
            counter += 1
            generator_draws += 1
            if generator > 1:
                break
        generators.append(generator)
    logging.info(
        f"Found Pedersen group after {prime_draws} prime candidates and "
        f"{generator_draws} generator draws"
    )
    return PedersenParams(P, q, generators[0], generators[1])


def _parse_group_int(text) -> int:
    return mithzk.field.parse_modulus_literal(str(text))


def pedersen_params_from_dict(definition: dict) -> PedersenParams:
    """Read explicit decimal P, q, g, h or a generation recipe."""
    if "P" in definition:
        return PedersenParams(
            *(_parse_group_int(definition[key]) for key in "Pqgh")
        )
    base = _parse_group_int(definition["q_base"])
    rule = definition["q_rule"]
    if rule == "prevprime":
        q = sympy.prevprime(base)
    elif rule == "nextprime":
        q = sympy.nextprime(base)
    elif rule == "exact":
        q = base
    else:
        raise PedersenParameterError(f"Unknown subgroup order rule '{rule}'")
    return generate_pedersen_params(
        int(q),
        int(definition["p_bits"]),
        definition["seed"].encode("utf-8")
    )


def load_pedersen_params(name: str = DEFAULT_PEDERSEN_GROUP) -> PedersenParams:
    """Load a named group from the lib folder or a group JSON file."""
    if name in PEDERSEN_GROUPS:
        return pedersen_params_from_dict(PEDERSEN_GROUPS[name])
    if os.path.isfile(name):
        return pedersen_params_from_dict(mithzk.utils.load_parameters(name))
    raise PedersenParameterError(f"Unknown Pedersen group '{name}'")


def pedersen_commit(params: PedersenParams, blinders, message) -> tuple:
    """Commit element-wise to a vector of field elements.

    Parameters
    ----------
    params : PedersenParams
        The group.
    blinders : sequence of int
        One blinder in [0, q) per message element.
    message : sequence of mithzk.field.FieldElement
        The message, with every value smaller than q.

    Returns
    -------
    : tuple
        The commitment, a tuple of g^m_i·h^r_i mod P, and the opening,
        the tuple of blinders.
    """
    blinders = tuple(blinders)
    message = tuple(message)
    if len(blinders) != len(message):
        raise CommitmentError(
            f"Got {len(blinders)} blinders for {len(message)} elements"
        )
    commitment = []
    for blinder, element in zip(blinders, message):
        value = int(element)
        if not 0 <= value < params.q:
            raise PedersenParameterError("Message element is not below q")
        if not 0 <= blinder < params.q:
            raise PedersenParameterError("Blinder is not below q")
        commitment.append(
            pow(params.g, value, params.P) * pow(
                params.h,
                blinder,
                params.P
            ) % params.P
        )
    return tuple(commitment), blinders


def pedersen_verify(
    params: PedersenParams,
    message,
    commitment,
    opening,
) -> bool:
    """Recompute every element commitment and compare; False on mismatch."""
    message = tuple(message)
    if not (len(message) == len(commitment) == len(opening)):
        return False
    try:
        recomputed, blinders = pedersen_commit(params, opening, message)
    except (CommitmentError, PedersenParameterError):
        return False
    return recomputed == tuple(commitment)


class CommitmentScheme(object):
    """Commit to MPC views; subclasses fix the primitive and the encodings."""

    scheme_id = None
    name = None

    def check_field(self, modulus: mithzk.field.Modulus) -> None:
        pass

    def sample_key(self, rng: mithzk.field.RandomSource, view):
        raise NotImplementedError

    def commit(self, key, view):
        raise NotImplementedError

    def verify(self, view, commitment, opening) -> bool:
        raise NotImplementedError

    def encode_commitment(self, commitment) -> bytes:
        raise NotImplementedError

    def decode_commitment(self, reader: mithzk.utils.ByteReader):
        raise NotImplementedError

    def encode_opening(self, opening) -> bytes:
        raise NotImplementedError

    def decode_opening(self, reader: mithzk.utils.ByteReader):
        raise NotImplementedError

    def __repr__(self):
        return f"{self.__class__.__name__}()"


class PRFCommitmentScheme(CommitmentScheme):
    """One HMAC-SHA256 commitment per canonically encoded view."""

    scheme_id = PRF_SCHEME_ID
    name = "prf"

    def sample_key(self, rng, view) -> bytes:
        return rng.bytes(PRF_KEY_LENGTH)

    def commit(self, key, view) -> bytes:
        commitment, opening = prf_commit(key, view.to_bytes())
        return commitment

    def verify(self, view, commitment, opening) -> bool:
        try:
            message = view.to_bytes()
        except (AttributeError, TypeError, ValueError):
            return False
        return prf_verify(message, commitment, opening)

    def encode_commitment(self, commitment: bytes) -> bytes:
        return bytes(commitment)

    def decode_commitment(self, reader) -> bytes:
        return reader.read(PRF_DIGEST_LENGTH)

    def encode_opening(self, opening: bytes) -> bytes:
        return bytes(opening)

    def decode_opening(self, reader) -> bytes:
        return reader.read(PRF_KEY_LENGTH)


class PedersenCommitmentScheme(CommitmentScheme):
    """One Pedersen commitment per field element of a view."""

    scheme_id = PEDERSEN_SCHEME_ID
    name = "pedersen"

    def __init__(self, params: PedersenParams):
        self.params = params

    def check_field(self, modulus) -> None:
        self.params.check_field(modulus)

    def sample_key(self, rng, view) -> tuple:
        return tuple(
            rng.randbelow(self.params.q) for element in view.field_elements()
        )

    def commit(self, key, view) -> tuple:
        commitment, opening = pedersen_commit(
            self.params,
            key,
            view.field_elements()
        )
        return commitment

    def verify(self, view, commitment, opening) -> bool:
        try:
            message = view.field_elements()
        except (AttributeError, TypeError):
            return False
        return pedersen_verify(self.params, message, commitment, opening)

    def encode_commitment(self, commitment) -> bytes:
        width = self.params.element_length
        return mithzk.utils.encode_list(
            commitment,
            lambda value: value.to_bytes(width, "big")
        )

    def decode_commitment(self, reader) -> tuple:
        width = self.params.element_length

        def read_element(r):
            value = int.from_bytes(r.read(width), "big")
            if not 0 < value < self.params.P:
                raise CommitmentError("Commitment element is not in Z_P*")
            return value
        return tuple(reader.read_list(read_element))

    def encode_opening(self, opening) -> bytes:
        width = self.params.blinder_length
        return mithzk.utils.encode_list(
            opening,
            lambda value: value.to_bytes(width, "big")
        )

    def decode_opening(self, reader) -> tuple:
        width = self.params.blinder_length
        return tuple(
            reader.read_list(lambda r: int.from_bytes(r.read(width), "big"))
        )

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(<{self.params.P.bit_length()}-bit P>)"
        )


SCHEME_NAMES = {
    "prf": PRF_SCHEME_ID,
    "pedersen": PEDERSEN_SCHEME_ID,
}


def get_scheme(
    scheme,
    pedersen_group: str = DEFAULT_PEDERSEN_GROUP,
) -> CommitmentScheme:
    """Build a commitment scheme from its name or id byte.

    Parameters
    ----------
    scheme : str, int
        "prf", "pedersen", 0x01 or 0x02.
    pedersen_group : str
        The Pedersen group name or group file, if the scheme is "pedersen".
        Default is "default".

    Returns
    -------
    : CommitmentScheme
        The scheme.
    """
    scheme_id = SCHEME_NAMES.get(scheme, scheme)
    if scheme_id == PRF_SCHEME_ID:
        return PRFCommitmentScheme()
    if scheme_id == PEDERSEN_SCHEME_ID:
        return PedersenCommitmentScheme(load_pedersen_params(pedersen_group))
    raise CommitmentError(f"Unknown commitment scheme {scheme!r}")
