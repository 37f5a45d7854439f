"""Tests for VIN hash chains."""

import hashlib

import pytest
from pydantic import ValidationError

from app.exceptions import ChainRangeError, InvalidInputError, OrderingError
from app.models.hashchain import ChainDisclosure, Vin
from app.services.hashchain import (
    ChainCursor,
    LinkVerifier,
    disclose,
    generate_chain,
    verify_disclosure,
    verify_link,
)

VIN = "1HGCM82633A004352"


class TestVin:
    """Test VIN validation."""

    def test_strict_vin(self):
        """Test a strict VIN parses."""
        assert Vin.parse(VIN).encode() == VIN.encode("ascii")

    @pytest.mark.parametrize(
        "text", ["1HGCM82633A00435", "1HGCM82633A0043521", "1HGCM82633AO04352", "1hgcm82633a004352"]
    )
    def test_strict_rejects(self, text):
        """Test malformed VINs are rejected."""
        with pytest.raises(ValidationError):
            Vin.parse(text)

    def test_permissive(self):
        """Permissive mode accepts 11 to 17 alphanumerics."""
        assert Vin.parse("abcDEF12345", permissive=True).text == "abcDEF12345"
        with pytest.raises(ValidationError):
            Vin.parse("abc", permissive=True)

    def test_repr_redacts(self):
        """Test the VIN never appears in repr or str."""
        assert VIN not in repr(Vin.parse(VIN))
        assert VIN not in str(Vin.parse(VIN))


class TestGenerateChain:
    """Test chain generation."""

    def test_first_value_is_hash_of_vin(self):
        """Test the first value hashes the VIN."""
        chain = generate_chain(VIN, 3)
        assert chain.value_at(1) == hashlib.sha256(VIN.encode()).digest()

    def test_values_link(self):
        """Test each value hashes the previous one."""
        chain = generate_chain(VIN, 5)
        for k in range(2, 6):
            assert chain.value_at(k) == hashlib.sha256(chain.value_at(k - 1)).digest()

    def test_deterministic(self):
        """Test generation is deterministic."""
        assert generate_chain(VIN, 20).values == generate_chain(VIN, 20).values

    def test_sha3(self):
        """Test the SHA3-256 variant."""
        chain = generate_chain(VIN, 2, alg="sha3-256")
        assert chain.value_at(1) == hashlib.sha3_256(VIN.encode()).digest()

    @pytest.mark.parametrize("n", [0, -1, 1_000_001])
    def test_length_bounds(self, n):
        """Test chain length bounds."""
        with pytest.raises(InvalidInputError):
            generate_chain(VIN, n)

    def test_invalid_vin(self):
        """Test an invalid VIN is rejected."""
        with pytest.raises(ValidationError):
            generate_chain("NOT-A-VIN", 3)

    def test_unknown_algorithm(self):
        """Test an unknown hash algorithm is rejected."""
        with pytest.raises(InvalidInputError):
            generate_chain(VIN, 3, alg="md5")

    def test_value_at_range(self):
        """Test indices outside the chain are rejected."""
        chain = generate_chain(VIN, 3)
        with pytest.raises(ChainRangeError):
            chain.value_at(0)
        with pytest.raises(ChainRangeError):
            chain.value_at(4)


class TestDisclosure:
    """Test disclosure and verification."""

    def test_disclose_and_verify(self):
        """Test a disclosure verifies against its VIN."""
        chain = generate_chain(VIN, 10)
        d = disclose(chain, 7)
        assert d.m == 7
        assert verify_disclosure(d, VIN)

    def test_disclose_out_of_range(self):
        """Test disclosing outside the chain is rejected."""
        chain = generate_chain(VIN, 10)
        with pytest.raises(ChainRangeError):
            disclose(chain, 11)
        with pytest.raises(ChainRangeError):
            disclose(chain, 0)

    def test_wrong_m(self):
        """Test a wrong index does not verify."""
        d = disclose(generate_chain(VIN, 10), 7)
        assert not verify_disclosure(ChainDisclosure(value=d.value, m=6), VIN)

    def test_wrong_vin(self):
        """Test a wrong VIN does not verify."""
        d = disclose(generate_chain(VIN, 10), 7)
        assert not verify_disclosure(d, "JH4KA7561PC008269")

    def test_unknown_alg_is_false(self):
        """Test an unknown algorithm verifies false."""
        d = disclose(generate_chain(VIN, 3), 3)
        assert not verify_disclosure(ChainDisclosure(value=d.value, m=3, alg="md5"), VIN)

    def test_m_above_maximum_is_false(self):
        """Test an index above the maximum verifies false."""
        d = ChainDisclosure(value=bytes(32), m=2_000_000)
        assert not verify_disclosure(d, VIN)

    def test_wire_format(self):
        """Test the disclosure wire layout."""
        d = disclose(generate_chain(VIN, 2), 2)
        wire = d.to_wire()
        assert wire == {"value": d.value.hex(), "m": 2, "alg": "sha-256"}
        assert ChainDisclosure.from_wire(wire) == d

    def test_value_must_be_32_bytes(self):
        """Test values must be 32 bytes."""
        with pytest.raises(ValidationError):
            ChainDisclosure(value="abcd", m=1)


class TestVerifyLink:
    """Test verification between two disclosures without the VIN."""

    def test_link(self):
        """Test an earlier disclosure links to a later one."""
        chain = generate_chain(VIN, 10)
        assert verify_link(disclose(chain, 3), disclose(chain, 8))

    def test_foreign_chain(self):
        """Test disclosures of different chains do not link."""
        a = generate_chain(VIN, 10)
        b = generate_chain("JH4KA7561PC008269", 10)
        assert not verify_link(disclose(a, 3), disclose(b, 8))

    def test_ordering(self):
        """Test the earlier index must be lower."""
        chain = generate_chain(VIN, 10)
        with pytest.raises(OrderingError):
            verify_link(disclose(chain, 8), disclose(chain, 3))
        with pytest.raises(OrderingError):
            verify_link(disclose(chain, 5), disclose(chain, 5))


class TestChainCursor:
    """Test descending disclosure order."""

    def test_descending(self):
        """Test disclosures come out in descending index order."""
        cursor = ChainCursor(generate_chain(VIN, 3))
        assert [cursor.next_disclosure().m for _ in range(3)] == [3, 2, 1]
        assert cursor.remaining == 0
        with pytest.raises(ChainRangeError):
            cursor.next_disclosure()


class TestLinkVerifier:
    """Test trust-on-first-use verification."""

    def test_pins_then_links(self):
        """Test the first disclosure is pinned and later ones link."""
        chain = generate_chain(VIN, 10)
        verifier = LinkVerifier()
        assert verifier("a", disclose(chain, 10))
        assert verifier("a", disclose(chain, 10))
        assert verifier("a", disclose(chain, 9))
        assert verifier("a", disclose(chain, 4))

    def test_rejects_foreign_or_older(self):
        """Test foreign or older disclosures are refused."""
        chain = generate_chain(VIN, 10)
        other = generate_chain("JH4KA7561PC008269", 10)
        verifier = LinkVerifier()
        assert verifier("a", disclose(chain, 8))
        assert not verifier("a", disclose(other, 7))
        assert not verifier("a", disclose(chain, 9))
