"""Generation, disclosure and verification of VIN-derived hash chains."""

import hashlib
import hmac
import logging
from collections.abc import Callable

from app.config import settings
from app.exceptions import ChainRangeError, InvalidInputError, OrderingError
from app.models.hashchain import ChainDisclosure, HashChain, Vin

logger = logging.getLogger(__name__)

HASH_FUNCTIONS = {
    "sha-256": hashlib.sha256,
    "sha3-256": hashlib.sha3_256,
}


def get_hash(alg: str | None = None) -> Callable[[bytes], bytes]:
    """Return ``data -> digest`` for the named (or configured) algorithm."""
    name = alg or settings.hash_algorithm
    try:
        constructor = HASH_FUNCTIONS[name]
    except KeyError:
        raise InvalidInputError(f"unsupported hash algorithm: {name}") from None
    return lambda data: constructor(data).digest()


def iterate_hash(data: bytes, times: int, alg: str | None = None) -> bytes:
    """Apply the hash ``times`` times to ``data``."""
    h = get_hash(alg)
    for _ in range(times):
        data = h(data)
    return data


def _as_vin(vin: Vin | str) -> Vin:
    return vin if isinstance(vin, Vin) else Vin.parse(vin)


def generate_chain(vin: Vin | str, n: int, *, alg: str | None = None) -> HashChain:
    """Build values[1..n] from the VIN.

    Raises:
        pydantic.ValidationError: malformed VIN text
        InvalidInputError: n outside 1..MAX_CHAIN_LENGTH
    """
    vin = _as_vin(vin)
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= settings.max_chain_length:
        raise InvalidInputError(f"chain length must be in 1..{settings.max_chain_length}")
    name = alg or settings.hash_algorithm
    h = get_hash(name)

    values: list[bytes] = []
    current = vin.encode()
    for _ in range(n):
        current = h(current)
        values.append(current)

    return HashChain.model_construct(seed_vin=vin, alg=name, values=tuple(values))


def disclose(chain: HashChain, m: int) -> ChainDisclosure:
    """Return the public pair (values[m], m)."""
    if not 1 <= m <= chain.length:
        raise ChainRangeError(f"m={m} outside 1..{chain.length}")
    return ChainDisclosure(value=chain.value_at(m), m=m, alg=chain.alg)


def verify_disclosure(disclosure: ChainDisclosure, vin: Vin | str) -> bool:
    """True iff H applied exactly ``disclosure.m`` times to the VIN bytes yields the value."""
    vin = _as_vin(vin)
    if disclosure.alg not in HASH_FUNCTIONS or disclosure.m > settings.max_chain_length:
        return False
    expected = iterate_hash(vin.encode(), disclosure.m, disclosure.alg)
    return hmac.compare_digest(expected, disclosure.value)


def verify_link(earlier: ChainDisclosure, later: ChainDisclosure) -> bool:
    """True iff hashing ``earlier.value`` (later.m - earlier.m) times yields ``later.value``.

    Raises:
        OrderingError: earlier.m >= later.m
    """
    if earlier.m >= later.m:
        raise OrderingError(f"expected earlier.m < later.m, got {earlier.m} >= {later.m}")
    if earlier.alg != later.alg or earlier.alg not in HASH_FUNCTIONS:
        return False
    expected = iterate_hash(earlier.value, later.m - earlier.m, earlier.alg)
    return hmac.compare_digest(expected, later.value)


class ChainCursor:
    """Issues a vehicle's disclosures in descending index order.

    Disclosing N, N-1, ... means no published value lets anyone compute a
    value that is disclosed later.
    """

    def __init__(self, chain: HashChain):
        self._chain = chain
        self._next = chain.length

    @property
    def remaining(self) -> int:
        return self._next

    def next_disclosure(self) -> ChainDisclosure:
        if self._next < 1:
            raise ChainRangeError("hash chain exhausted")
        disclosure = disclose(self._chain, self._next)
        self._next -= 1
        return disclosure


class LinkVerifier:
    """Verifier for peers that do not know VINs.

    The first disclosure seen from a sender is pinned (trust on first use).
    A later disclosure is accepted only if it has a lower index and hashes
    forward onto the pinned one; it then becomes the new pin.
    """

    def __init__(self) -> None:
        self._pinned: dict[str, ChainDisclosure] = {}

    def __call__(self, sender: str, disclosure: ChainDisclosure) -> bool:
        if disclosure.alg not in HASH_FUNCTIONS:
            return False
        pinned = self._pinned.get(sender)
        if pinned is None:
            self._pinned[sender] = disclosure
            return True
        if disclosure == pinned:
            return True
        if disclosure.m >= pinned.m or not verify_link(disclosure, pinned):
            logger.debug("Disclosure from %s does not link to its pinned value", sender)
            return False
        self._pinned[sender] = disclosure
        return True


def make_link_verifier() -> LinkVerifier:
    """Fresh trust-on-first-use verifier for vehicle-initiated formation."""
    return LinkVerifier()
