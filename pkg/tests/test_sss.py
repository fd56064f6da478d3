#!python -m unittest tests.test_sss
"""This module provides unit tests for mithzk.sss."""

# builtin
import itertools
import unittest

# external
import hypothesis
import hypothesis.strategies as st

# local
import mithzk.utils
import mithzk.field
import mithzk.sss
mithzk.utils.set_progress_callback(None)


F11 = mithzk.field.load_modulus("f11")
F101 = mithzk.field.load_modulus("f101")
field_values = st.integers(min_value=0, max_value=100)


class TestSharing(unittest.TestCase):

    def test_example(self):
        sharing = mithzk.sss.share(
            F11.element(5),
            mithzk.sss.SSRandomness(F11.element(2), F11.element(3))
        )
        assert sharing.shares == F11.elements((10, 10, 5, 6, 2)), (
            f"Wrong shares {sharing}"
        )
        assert mithzk.sss.reconstruct(sharing) == F11.element(5)
        assert sharing[3] == F11.element(5)
        assert mithzk.sss.sharing_degree_at_most(sharing, 2)
        assert not mithzk.sss.sharing_degree_at_most(sharing, 1)

    def test_constant_sharing(self):
        for value in range(11):
            sharing = mithzk.sss.share(
                F11.element(value),
                mithzk.sss.SSRandomness.zero(F11)
            )
            assert sharing == mithzk.sss.public_encoding(F11.element(value))
            assert mithzk.sss.reconstruct(sharing) == F11.element(value)
        assert mithzk.sss.pub_reconstruct(3, F11.element(9)) == F11.element(9)

    def test_recombination_coefficients(self):
        assert mithzk.sss.recombination_coefficients(F101) == F101.elements(
            (5, -10, 10, -5, 1)
        )

    @hypothesis.given(
        st.lists(field_values, min_size=5, max_size=5),
    )
    def test_degree_four_reconstruction(self, coefficients):
        coefficients = F101.elements(coefficients)
        sharing = mithzk.sss.Sharing(
            sum(
                (
                    coefficient * party**power
                    for power, coefficient in enumerate(coefficients)
                ),
                F101.zero
            ) for party in mithzk.sss.PARTIES
        )
        assert mithzk.sss.reconstruct(sharing) == coefficients[0]

    @hypothesis.given(field_values, field_values, field_values, field_values)
    def test_linearity(self, secret, other, a1, a2):
        left = mithzk.sss.share(
            F101.element(secret),
            mithzk.sss.SSRandomness(F101.element(a1), F101.element(a2))
        )
        right = mithzk.sss.share(
            F101.element(other),
            mithzk.sss.SSRandomness(F101.element(a2), F101.element(a1))
        )
        assert mithzk.sss.reconstruct(left + right) == F101.element(
            secret + other
        )
        assert mithzk.sss.reconstruct(left.scale(7)) == F101.element(
            7 * secret
        )
        assert mithzk.sss.sharing_degree_at_most(left + right)

    def test_encoding(self):
        rng = mithzk.field.RandomSource(3)
        sharing = mithzk.sss.share(
            mithzk.field.sample_fe(rng, F101),
            mithzk.sss.sample_ss_randomness(rng, F101)
        )
        reader = mithzk.utils.ByteReader(sharing.to_bytes())
        assert mithzk.sss.decode(reader, F101) == sharing
        reader.expect_end()

    def test_party_errors(self):
        sharing = mithzk.sss.public_encoding(F11.one)
        for party in (0, 6, True):
            with self.assertRaises(mithzk.sss.PartyError):
                sharing[party]
        with self.assertRaises(mithzk.sss.PartyError):
            mithzk.sss.Sharing(F11.elements((1, 2, 3)))
        for corrupt in ((1, 1), (1,), (0, 2), (1, 2, 3)):
            with self.assertRaises(mithzk.sss.PartyError):
                mithzk.sss.share_sim(mithzk.field.RandomSource(1), corrupt, F11)


class TestPrivacy(unittest.TestCase):

    def test_pairs_are_uniform(self):
        for secret, pair in itertools.product(
            range(11),
            mithzk.sss.PARTY_PAIRS
        ):
            seen = set()
            for a1, a2 in itertools.product(range(11), repeat=2):
                sharing = mithzk.sss.share(
                    F11.element(secret),
                    mithzk.sss.SSRandomness(F11.element(a1), F11.element(a2))
                )
                seen.add((sharing[pair[0]].value, sharing[pair[1]].value))
            assert len(seen) == 121, (
                f"Shares of {pair} for secret {secret} are not uniform."
            )

    def test_simulated_shares_cover_the_square(self):
        rng = mithzk.field.RandomSource(11)
        seen = set()
        for trial in range(3000):
            first, second = mithzk.sss.share_sim(rng, (2, 5), F11)
            seen.add((first.value, second.value))
        assert len(seen) == 121


if __name__ == "__main__":
    unittest.main()
