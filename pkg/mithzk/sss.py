#!python
"""This module provides Shamir secret sharing for 5 parties, threshold 2.

Party i holds f(i) for a degree-2 polynomial f with f(0) the secret.
Reconstruction always interpolates all 5 points with a degree-4
polynomial, so that it is total on F^5 and also serves the degree-4
product sharings of the multiplication gate.
"""

# builtin
import dataclasses
# local
import mithzk.field
import mithzk.utils


PARTIES = (1, 2, 3, 4, 5)
PARTY_COUNT = len(PARTIES)
THRESHOLD = 2
PARTY_PAIRS = tuple(
    (i, j) for i in PARTIES for j in PARTIES if i < j
)


class PartyError(ValueError):
    """Used to indicate an invalid party id or corrupt set."""
    pass


def check_party(party: int) -> int:
    if isinstance(party, bool) or party not in PARTIES:
        raise PartyError(f"Party id {party!r} is not one of {PARTIES}")
    return party


def check_corrupt_pair(corrupt) -> tuple:
    """Return (i, j) for two distinct valid parties."""
    if len(corrupt) != 2:
        raise PartyError(f"Expected two corrupt parties, got {corrupt!r}")
    i, j = (check_party(party) for party in corrupt)
    if i == j:
        raise PartyError(f"Corrupt parties must be distinct, got {i} twice")
    return i, j


@dataclasses.dataclass(frozen=True)
class SSRandomness:
    """The degree-1 and degree-2 coefficients of a sharing polynomial."""
    a1: mithzk.field.FieldElement
    a2: mithzk.field.FieldElement

    @classmethod
    def zero(cls, modulus: mithzk.field.Modulus) -> "SSRandomness":
        return cls(modulus.zero, modulus.zero)

    def to_bytes(self) -> bytes:
        return self.a1.to_bytes() + self.a2.to_bytes()

    @classmethod
    def read(
        cls,
        reader: mithzk.utils.ByteReader,
        modulus: mithzk.field.Modulus,
    ) -> "SSRandomness":
        return cls(modulus.read_element(reader), modulus.read_element(reader))


class Sharing(object):
    """The shares of parties 1..5, indexed by party id."""

    __slots__ = ("_shares",)

    def __init__(self, shares):
        shares = tuple(shares)
        if len(shares) != PARTY_COUNT:
            raise PartyError(
                f"A sharing needs {PARTY_COUNT} shares, got {len(shares)}"
            )
        self._shares = shares

    @property
    def shares(self) -> tuple:
        """: tuple : The shares in party order 1..5."""
        return self._shares

    @property
    def modulus(self) -> mithzk.field.Modulus:
        return self._shares[0].modulus

    def __getitem__(self, party: int) -> mithzk.field.FieldElement:
        return self._shares[check_party(party) - 1]

    def __iter__(self):
        return iter(self._shares)

    def __len__(self):
        return PARTY_COUNT

    def items(self):
        return zip(PARTIES, self._shares)

    def map(self, function) -> "Sharing":
        """Apply function(party, share) to every share."""
        return Sharing(function(i, share) for i, share in self.items())

    def __add__(self, other: "Sharing") -> "Sharing":
        return Sharing(a + b for a, b in zip(self._shares, other._shares))

    def scale(self, scalar) -> "Sharing":
        return Sharing(scalar * share for share in self._shares)

    def to_bytes(self) -> bytes:
        return encode(self)

    def __eq__(self, other):
        if not isinstance(other, Sharing):
            return NotImplemented
        return self._shares == other._shares

    def __hash__(self):
        return hash(self._shares)

    def __repr__(self):
        return f"Sharing({', '.join(str(share) for share in self._shares)})"


def evaluate_share(
    secret: mithzk.field.FieldElement,
    randomness: SSRandomness,
    party: int,
) -> mithzk.field.FieldElement:
    """f(party) for f(x) = secret + a1·x + a2·x²."""
    return secret + randomness.a1 * party + randomness.a2 * (party * party)


def share(
    secret: mithzk.field.FieldElement,
    randomness: SSRandomness,
) -> Sharing:
    """Share a secret with the polynomial secret + a1·x + a2·x².

    Parameters
    ----------
    secret : mithzk.field.FieldElement
        The secret.
    randomness : SSRandomness
        The polynomial coefficients.

    Returns
    -------
    : Sharing
        share_i = secret + a1·i + a2·i² for i = 1..5.
    """
    return Sharing(
        evaluate_share(secret, randomness, party) for party in PARTIES
    )


def reconstruct(sharing: Sharing) -> mithzk.field.FieldElement:
    """The degree-4 interpolation at zero of all 5 shares."""
    modulus = sharing.modulus
    coefficients = recombination_coefficients(modulus)
    result = modulus.zero
    for coefficient, value in zip(coefficients, sharing):
        result = result + coefficient * value
    return result


def recombination_coefficients(modulus: mithzk.field.Modulus) -> tuple:
    """The degree-4 Lagrange coefficients at 0 for points 1..5.

    These are (5, -10, 10, -5, 1) reduced mod p.
    """
    return mithzk.field.lagrange_coefficients(PARTIES, 0, modulus)


def public_encoding(value: mithzk.field.FieldElement) -> Sharing:
    """The constant sharing of a public value."""
    return Sharing(value for party in PARTIES)


def pub_reconstruct(
    party: int,
    value: mithzk.field.FieldElement,
) -> mithzk.field.FieldElement:
    """A party's view of a publicly encoded value is the value itself."""
    check_party(party)
    return value


def sample_ss_randomness(
    rng: mithzk.field.RandomSource,
    modulus: mithzk.field.Modulus,
) -> SSRandomness:
    return SSRandomness(
        mithzk.field.sample_fe(rng, modulus),
        mithzk.field.sample_fe(rng, modulus),
    )


def share_sim(
    rng: mithzk.field.RandomSource,
    corrupt,
    modulus: mithzk.field.Modulus,
) -> tuple:
    """Simulate the shares of two corrupt parties without the secret.

    Parameters
    ----------
    rng : mithzk.field.RandomSource
        The randomness.
    corrupt : tuple
        Two distinct party ids.
    modulus : mithzk.field.Modulus
        The field.

    Returns
    -------
    : tuple
        Two independent uniform field elements, for corrupt[0] and corrupt[1].

    Raises
    ------
    PartyError
        If the parties are invalid or not distinct.
    """
    check_corrupt_pair(corrupt)
    return (
        mithzk.field.sample_fe(rng, modulus),
        mithzk.field.sample_fe(rng, modulus),
    )


def sharing_degree_at_most(sharing: Sharing, degree: int = THRESHOLD) -> bool:
    """True iff the 5 shares lie on a polynomial of at most this degree.

    The polynomial is interpolated from the first degree + 1 points and
    checked on the others.
    """
    if degree >= PARTY_COUNT - 1:
        return True
    modulus = sharing.modulus
    points = [
        (modulus.element(party), sharing[party])
        for party in PARTIES[:degree + 1]
    ]
    for party in PARTIES[degree + 1:]:
        if mithzk.field.lagrange_at(points, party) != sharing[party]:
            return False
    return True


def encode(sharing: Sharing) -> bytes:
    """5 fixed-width field elements in party order."""
    return b"".join(value.to_bytes() for value in sharing)


def decode(
    reader: mithzk.utils.ByteReader,
    modulus: mithzk.field.Modulus,
) -> Sharing:
    return Sharing(modulus.read_element(reader) for party in PARTIES)
