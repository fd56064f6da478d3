#!python
"""This module provides prime-field arithmetic.

It implements the Modulus and FieldElement classes, Lagrange interpolation
and the RandomSource from which all protocol randomness is drawn.
Values are arbitrary-precision Python ints, so moduli up to 1024 bits
are supported without any fixed-limb assumptions.
"""

# builtin
import functools
import logging
import os
import re
import secrets
# external
import numpy as np
import sympy
# local
import mithzk.utils


MIN_MODULUS = 11
MAX_MODULUS_BITS = 1024
FIELD_PRESETS = mithzk.utils.load_lib_json("field_presets.json")
FIELD_PRESET_ENVIRONMENT_VARIABLE = "MITH_FIELD_PRESET"
DEFAULT_FIELD_PRESET = "f101"


class InvalidModulusError(ValueError):
    """Used to indicate that a modulus is not an acceptable odd prime."""
    pass


class ModulusMismatchError(TypeError):
    """Used to indicate an operation between elements of different fields."""
    pass


class FieldDomainError(ValueError):
    """Used to indicate an input outside the domain of a field operation."""
    pass


class Modulus(object):
    """An odd prime p >= 11 of at most 1024 bits.

    Instances are immutable and compare equal when their primes are equal.
    Use `get_modulus` to obtain cached, already validated instances.
    """

    def __init__(self, p: int, *, check_prime: bool = True):
        """Create a modulus.

        Parameters
        ----------
        p : int
            The prime.
        check_prime : bool
            If True, p is tested with sympy's strong probable-prime test
            (Baillie-PSW, no known counterexamples).
            Default is True.
        """
        if isinstance(p, bool) or not isinstance(p, int):
            raise InvalidModulusError(f"Modulus {p!r} is not an integer")
        if p < MIN_MODULUS:
            raise InvalidModulusError(
                f"Modulus {p} is smaller than {MIN_MODULUS}"
            )
        if p.bit_length() > MAX_MODULUS_BITS:
            raise InvalidModulusError(
                f"Modulus has {p.bit_length()} bits, "
                f"at most {MAX_MODULUS_BITS} are supported"
            )
        if p % 2 == 0:
            raise InvalidModulusError(f"Modulus {p} is even")
        if check_prime and not sympy.isprime(p):
            raise InvalidModulusError(f"Modulus {p} is not prime")
        self._p = p
        self._bits = p.bit_length()
        self._byte_length = (self._bits + 7) // 8

    @property
    def p(self) -> int:
        """: int : The prime."""
        return self._p

    @property
    def bits(self) -> int:
        """: int : The bit length of p."""
        return self._bits

    @property
    def byte_length(self) -> int:
        """: int : The width of a serialized element, ceil(bits(p) / 8)."""
        return self._byte_length

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def element(self, value: int) -> "FieldElement":
        """Reduce an int into this field."""
        return FieldElement(value, self)

    def elements(self, values) -> tuple:
        return tuple(FieldElement(value, self) for value in values)

    def from_bytes(self, data: bytes) -> "FieldElement":
        """Decode a fixed-width big-endian element.

        Raises
        ------
        FieldDomainError
            If the width is wrong or the value is not fully reduced.
        """
        if len(data) != self.byte_length:
            raise FieldDomainError(
                f"Expected {self.byte_length} bytes, got {len(data)}"
            )
        value = int.from_bytes(data, "big")
        if value >= self.p:
            raise FieldDomainError(f"Encoded value is not reduced mod {self.p}")
        return FieldElement(value, self)

    def read_element(self, reader: mithzk.utils.ByteReader) -> "FieldElement":
        return self.from_bytes(reader.read(self.byte_length))

    def __eq__(self, other):
        if not isinstance(other, Modulus):
            return NotImplemented
        return self._p == other._p

    def __hash__(self):
        return hash(("Modulus", self._p))

    def __repr__(self):
        if self._bits > 64:
            return f"Modulus(<{self._bits} bits>)"
        return f"Modulus({self._p})"


class FieldElement(object):
    """An element of F_p, always fully reduced.

    Arithmetic with a plain int coerces the int into the same field.
    Arithmetic with an element of another field raises ModulusMismatchError.
    """

    __slots__ = ("_value", "_modulus")

    def __init__(self, value: int, modulus: Modulus):
        self._modulus = modulus
        self._value = value % modulus.p

    @property
    def value(self) -> int:
        """: int : The representative in [0, p)."""
        return self._value

    @property
    def modulus(self) -> Modulus:
        return self._modulus

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other._modulus.p != self._modulus.p:
                raise ModulusMismatchError(
                    f"Cannot combine elements of {self._modulus} "
                    f"and {other._modulus}"
                )
            return other._value
        if isinstance(other, int) and not isinstance(other, bool):
            return other
        raise ModulusMismatchError(
            f"Cannot combine a field element with {type(other).__name__}"
        )

    def __add__(self, other):
        return FieldElement(self._value + self._coerce(other), self._modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self._value - self._coerce(other), self._modulus)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self._value, self._modulus)

    def __mul__(self, other):
        return FieldElement(self._value * self._coerce(other), self._modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self._value, self._modulus)

    def __pow__(self, exponent: int):
        return FieldElement(
            pow(self._value, exponent, self._modulus.p),
            self._modulus
        )

    def inverse(self) -> "FieldElement":
        return fe_inv(self)

    def is_zero(self) -> bool:
        return self._value == 0

    def to_bytes(self) -> bytes:
        """Fixed-width big-endian encoding of ceil(bits(p)/8) bytes."""
        return self._value.to_bytes(self._modulus.byte_length, "big")

    def __int__(self):
        return self._value

    def __index__(self):
        return self._value

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            return NotImplemented
        return (
            self._value == other._value
        ) and (
            self._modulus.p == other._modulus.p
        )

    def __hash__(self):
        return hash((self._value, self._modulus.p))

    def __repr__(self):
        return f"FieldElement({self._value})"

    def __str__(self):
        return str(self._value)


def parse_modulus_literal(text: str) -> int:
    """Parse a decimal or the shorthand "2^k" or "2^k-c" used for presets."""
    text = text.strip()
    match = re.fullmatch(r"2\^(\d+)(?:\s*-\s*(\d+))?", text)
    if match is not None:
        return 2**int(match.group(1)) - int(match.group(2) or 0)
    if not re.fullmatch(r"\d+", text):
        raise InvalidModulusError(f"Cannot parse modulus '{text}'")
    return int(text)


@functools.lru_cache(maxsize=None)
def get_modulus(p: int) -> Modulus:
    """Return a cached, validated Modulus for p."""
    return Modulus(p)


def load_modulus(name_or_value) -> Modulus:
    """Load a modulus from a preset name, a decimal string or an int.

    Parameters
    ----------
    name_or_value : str, int
        A preset name (e.g. "f101"), a decimal (or "2^k-c") string or an int.

    Returns
    -------
    : Modulus
        The validated modulus.
    """
    if isinstance(name_or_value, Modulus):
        return name_or_value
    if isinstance(name_or_value, int):
        return get_modulus(name_or_value)
    name = str(name_or_value).strip()
    if name in FIELD_PRESETS:
        return get_modulus(parse_modulus_literal(FIELD_PRESETS[name]))
    return get_modulus(parse_modulus_literal(name))


def default_field_preset() -> str:
    """The preset name from MITH_FIELD_PRESET, or the default preset."""
    preset = os.environ.get(FIELD_PRESET_ENVIRONMENT_VARIABLE, "")
    if preset == "":
        return DEFAULT_FIELD_PRESET
    if preset not in FIELD_PRESETS:
        logging.warning(
            f"WARNING: Unknown field preset '{preset}' in "
            f"{FIELD_PRESET_ENVIRONMENT_VARIABLE}, "
            f"using {DEFAULT_FIELD_PRESET} instead"
        )
        return DEFAULT_FIELD_PRESET
    return preset


def fe_arith(a: FieldElement, b: FieldElement, kind: str) -> FieldElement:
    """Add, subtract or multiply two elements of the same field.

    Parameters
    ----------
    a : FieldElement
        The left operand.
    b : FieldElement
        The right operand.
    kind : str
        One of "add", "sub" or "mul".

    Returns
    -------
    : FieldElement
        The fully reduced result.

    Raises
    ------
    ModulusMismatchError
        If a and b belong to different fields.
    """
    if not isinstance(a, FieldElement) or not isinstance(b, FieldElement):
        raise ModulusMismatchError("fe_arith expects two field elements")
    if kind == "add":
        return a + b
    elif kind == "sub":
        return a - b
    elif kind == "mul":
        return a * b
    raise ValueError(f"Unknown arithmetic kind '{kind}'")


def fe_inv(a: FieldElement) -> FieldElement:
    """The multiplicative inverse of a nonzero element.

    Raises
    ------
    FieldDomainError
        If a is zero.
    """
    if a.value == 0:
        raise FieldDomainError("Zero has no multiplicative inverse")
    return FieldElement(pow(a.value, -1, a.modulus.p), a.modulus)


@functools.lru_cache(maxsize=4096)
def _lagrange_coefficients(p: int, xs: tuple, at: int) -> tuple:
    coefficients = []
    for i, x_i in enumerate(xs):
        numerator = 1
        denominator = 1
        for j, x_j in enumerate(xs):
            if i == j:
                continue
            numerator = numerator * (at - x_j) % p
            denominator = denominator * (x_i - x_j) % p
        coefficients.append(numerator * pow(denominator, -1, p) % p)
    return tuple(coefficients)


def lagrange_coefficients(xs, at, modulus: Modulus) -> tuple:
    """Lagrange basis coefficients for evaluating at `at` from points xs.

    Parameters
    ----------
    xs : sequence of int or FieldElement
        Pairwise distinct x-coordinates.
    at : int or FieldElement
        The evaluation point.
    modulus : Modulus
        The field.

    Returns
    -------
    : tuple of FieldElement
        λ_i such that P(at) = Σ λ_i·P(x_i) for every P of degree < len(xs).
    """
    xs = tuple(int(x) % modulus.p for x in xs)
    if len(set(xs)) != len(xs):
        raise FieldDomainError("Interpolation points are not distinct")
    return modulus.elements(
        _lagrange_coefficients(modulus.p, xs, int(at) % modulus.p)
    )


def lagrange_at(points, at) -> FieldElement:
    """Evaluate the interpolating polynomial through points at `at`.

    Parameters
    ----------
    points : sequence of (FieldElement, FieldElement)
        Points with pairwise distinct x-coordinates.
    at : int, FieldElement
        The evaluation point.

    Returns
    -------
    : FieldElement
        P(at) for the unique P of degree < len(points) through all points.
    """
    if len(points) == 0:
        raise FieldDomainError("Cannot interpolate zero points")
    modulus = points[0][1].modulus
    for x, y in points:
        if (x.modulus.p != modulus.p) or (y.modulus.p != modulus.p):
            raise ModulusMismatchError("Interpolation points mix fields")
    coefficients = lagrange_coefficients(
        [x for x, y in points],
        at,
        modulus
    )
    result = modulus.zero
    for coefficient, (x, y) in zip(coefficients, points):
        result = result + coefficient * y
    return result


def lagrange_at_zero(points) -> FieldElement:
    """The constant term of the polynomial through 1 to 5 points.

    Parameters
    ----------
    points : sequence of (FieldElement, FieldElement)
        Points with pairwise distinct, nonzero x-coordinates.

    Returns
    -------
    : FieldElement
        P(0) where P has degree len(points) - 1.

    Raises
    ------
    FieldDomainError
        On zero or duplicate x-coordinates or an unsupported point count.
    """
    if not 1 <= len(points) <= 5:
        raise FieldDomainError(
            f"Interpolation needs 1 to 5 points, got {len(points)}"
        )
    for x, y in points:
        if x.value == 0:
            raise FieldDomainError("x-coordinate 0 is not allowed")
    return lagrange_at(points, 0)


class RandomSource(object):
    """A source of uniform bytes.

    Seeded sources are deterministic numpy PCG64 streams, intended for
    tests and reproducible experiments only.
    Unseeded sources draw from OS entropy via `secrets`.
    A RandomSource has a single owner; concurrent strands should each use
    their own source, e.g. from `spawn`.
    """

    def __init__(self, seed=None):
        """Create a random source.

        Parameters
        ----------
        seed : None, int, sequence of int, np.random.SeedSequence
            If None, OS entropy is used.
            Otherwise a deterministic stream is derived from this seed.
            Default is None.
        """
        if seed is None:
            self._seed_sequence = None
            self._generator = None
        else:
            if isinstance(seed, np.random.SeedSequence):
                self._seed_sequence = seed
            else:
                self._seed_sequence = np.random.SeedSequence(seed)
            self._generator = np.random.Generator(
                np.random.PCG64(self._seed_sequence)
            )

    @property
    def is_deterministic(self) -> bool:
        """: bool : True if this source replays from a seed."""
        return self._generator is not None

    def bytes(self, size: int) -> bytes:
        if self._generator is None:
            return secrets.token_bytes(size)
        return self._generator.bytes(size)

    def randbelow(self, upper: int) -> int:
        """A uniform int in [0, upper) by rejection on fixed-width draws."""
        if upper <= 0:
            raise ValueError("Upper bound must be positive")
        bits = (upper - 1).bit_length()
        if bits == 0:
            return 0
        width = (bits + 7) // 8
        mask = (1 << bits) - 1
        while True:
            candidate = int.from_bytes(self.bytes(width), "big") & mask
            if candidate < upper:
                return candidate

    def spawn(self, count: int) -> list:
        """Independent child sources, e.g. one per trial or repetition."""
        if self._seed_sequence is None:
            return [RandomSource() for _ in range(count)]
        return [
            RandomSource(child) for child in self._seed_sequence.spawn(count)
        ]


def sample_fe(rng: RandomSource, modulus: Modulus) -> FieldElement:
    """A uniform element of F_p."""
    return FieldElement(rng.randbelow(modulus.p), modulus)
