"""Tests for core and enhancement broadcast frames."""

import json

import pytest
from pydantic import ValidationError

from app.exceptions import (
    ClusterExpiredError,
    InvalidInputError,
    NonceReuseError,
    NotAMemberError,
)
from app.models.enums import FrameLevel, ReceiveStatus
from app.models.messaging import BroadcastFrame
from app.services.cluster_protocol import form_cluster
from app.services.rng import Xoshiro256StarStar
from app.services.secure_messaging import (
    NonceCounter,
    NonceLedger,
    demux,
    encrypt_broadcast,
    make_core_frame,
    mux,
    receive_broadcast,
    receive_wire,
    sender_index,
    try_decrypt,
)


@pytest.fixture
def members(announce, vins):
    return {
        "h": announce("h", vins[0], 2.0, 1.0),
        "a": announce("a", vins[1], 1.5, 1.0),
        "b": announce("b", vins[2], 1.2, 1.0),
    }


@pytest.fixture
def cluster(members):
    return form_cluster(
        members["h"],
        members.values(),
        lambda _s, _d: True,
        now=1.0,
        ttl_seconds=10.0,
        threshold=1.0,
        rng=Xoshiro256StarStar(4),
    )


@pytest.fixture
def value(members):
    """Chain value of member a."""
    return members["a"].disclosure.value


class TestEncrypt:
    """Test sealing enhancement frames."""

    def test_round_trip(self, cluster, value):
        """Test a sealed frame opens for the cluster."""
        frame = encrypt_broadcast(cluster, value, b"speed=27.5", 2.0, NonceCounter())
        assert frame.level is FrameLevel.ENHANCEMENT
        assert frame.plaintext is None
        assert b"speed" not in frame.ciphertext
        result = receive_broadcast(frame, cluster, 2.1)
        assert result.status is ReceiveStatus.ACCEPTED
        assert result.plaintext == b"speed=27.5"

    def test_nonce_layout(self, cluster, value):
        """Test the nonce is sender index then counter."""
        counter = NonceCounter(5)
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, counter)
        index = sender_index(cluster, value)
        assert frame.nonce == index.to_bytes(4, "big") + (5).to_bytes(8, "big")
        assert counter.value == 6

    def test_non_member(self, cluster):
        """Test a non-member cannot seal."""
        with pytest.raises(NotAMemberError):
            encrypt_broadcast(cluster, bytes(32), b"x", 2.0, NonceCounter())

    def test_expired(self, cluster, value):
        """Test an expired cluster cannot seal."""
        with pytest.raises(ClusterExpiredError):
            encrypt_broadcast(cluster, value, b"x", 11.0, NonceCounter())

    def test_nonce_ledger(self, cluster, value, track_nonces):
        """Test a repeated nonce is refused when tracked."""
        encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        with pytest.raises(NonceReuseError):
            encrypt_broadcast(cluster, value, b"y", 2.0, NonceCounter())

    def test_ledger_distinct_keys(self):
        """Test the ledger keys nonces by group key."""
        ledger = NonceLedger()
        ledger.record(b"k" * 32, bytes(12))
        ledger.record(b"j" * 32, bytes(12))
        assert len(ledger) == 2


class TestReceive:
    """Test receiver dispositions."""

    def test_core_always_accepted(self, value):
        """Test core frames are accepted without a cluster."""
        frame = make_core_frame(value, b"brake!", 2.0)
        assert receive_broadcast(frame, None, 2.1).status is ReceiveStatus.ACCEPTED
        assert receive_broadcast(frame, None, 2.1).plaintext == b"brake!"

    def test_non_member_sender_ignored(self, cluster, value):
        """Test frames from non-members are ignored."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        forged = frame.model_copy(update={"sender_value": bytes(32)})
        assert receive_broadcast(forged, cluster, 2.1).status is ReceiveStatus.IGNORED

    def test_other_cluster_ignored(self, cluster, value):
        """Test frames for another cluster are ignored."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        assert receive_broadcast(frame, None, 2.1).status is ReceiveStatus.IGNORED
        other = frame.model_copy(update={"cluster_id": b"\xff" * 16})
        assert receive_broadcast(other, cluster, 2.1).status is ReceiveStatus.IGNORED

    def test_expired(self, cluster, value):
        """Test frames are refused from expiry on."""
        frame = encrypt_broadcast(cluster, value, b"x", 10.9, NonceCounter())
        assert receive_broadcast(frame, cluster, 10.9).status is ReceiveStatus.ACCEPTED
        assert receive_broadcast(frame, cluster, 11.0).status is ReceiveStatus.EXPIRED

    def test_tampered(self, cluster, value):
        """Test a flipped ciphertext bit fails authentication."""
        frame = encrypt_broadcast(cluster, value, b"payload", 2.0, NonceCounter())
        flipped = bytes([frame.ciphertext[0] ^ 1]) + frame.ciphertext[1:]
        tampered = frame.model_copy(update={"ciphertext": flipped})
        assert receive_broadcast(tampered, cluster, 2.1).status is ReceiveStatus.AUTH_FAILURE

    def test_timestamp_bound(self, cluster, value):
        """Test the timestamp is bound to the tag."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        moved = frame.model_copy(update={"timestamp": 2.5})
        assert receive_broadcast(moved, cluster, 2.6).status is ReceiveStatus.AUTH_FAILURE

    def test_replay_window(self, cluster, value):
        """Test frames outside the replay window are ignored."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        assert receive_broadcast(frame, cluster, 7.5).status is ReceiveStatus.IGNORED

    def test_random_key_fails(self, cluster, value):
        """Test random keys never open a frame."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        rng = Xoshiro256StarStar(99)
        assert all(try_decrypt(frame, rng.randbytes(32)) is None for _ in range(50))
        assert try_decrypt(frame, cluster.group_key) == b"x"


class TestWire:
    """Test the frame wire format and byte-level receive."""

    def test_wire_fields(self, cluster, value):
        """Test the frame wire layout."""
        frame = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter())
        wire = frame.to_wire()
        assert set(wire) == {"level", "sender_value", "ts_ms", "cluster_id", "nonce", "ct", "tag", "pt", "alg"}
        assert wire["level"] == "enh"
        assert wire["ts_ms"] == 2000
        assert wire["pt"] is None
        assert wire["alg"] == "aes-256-gcm"
        assert BroadcastFrame.from_wire(wire) == frame

    def test_core_wire(self, value):
        """Test core frames carry only plaintext."""
        wire = make_core_frame(value, b"stop", 1.0).to_wire()
        assert wire["cluster_id"] is None and wire["ct"] is None
        assert wire["pt"] == "c3RvcA=="

    def test_receive_wire(self, cluster, value):
        """Test receiving from raw bytes."""
        frame = encrypt_broadcast(cluster, value, b"hello", 2.0, NonceCounter())
        raw = json.dumps(frame.to_wire()).encode()
        result = receive_wire(raw, cluster, 2.1)
        assert result.status is ReceiveStatus.ACCEPTED
        assert result.plaintext == b"hello"

    @pytest.mark.parametrize(
        "raw",
        [b"", b"\xff\xfe", b"[]", b"null", b'{"level": "enh"}', b'{"level": "core", "ts_ms": 1.5}'],
    )
    def test_garbage_ignored(self, cluster, raw):
        """Test bytes that do not parse as a frame are ignored."""
        assert receive_wire(raw, cluster, 2.0).status is ReceiveStatus.IGNORED

    @pytest.mark.parametrize("ts_ms", [-1, 2**63, 2**64, 10**400, True, 2000.0, "2000"])
    def test_hostile_timestamp_ignored(self, cluster, value, ts_ms):
        """Test out-of-range or mistyped ts_ms on a member frame is ignored."""
        wire = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter()).to_wire()
        raw = json.dumps({**wire, "ts_ms": ts_ms}).encode()
        assert receive_wire(raw, cluster, 2.0).status is ReceiveStatus.IGNORED

    def test_largest_timestamp_classified(self, cluster, value):
        """Test the largest wire timestamp still maps to a result."""
        wire = encrypt_broadcast(cluster, value, b"x", 2.0, NonceCounter()).to_wire()
        raw = json.dumps({**wire, "ts_ms": 2**63 - 1}).encode()
        assert receive_wire(raw, cluster, 2.0).status is ReceiveStatus.AUTH_FAILURE

    @pytest.mark.parametrize("timestamp", [-0.001, 1e16])
    def test_timestamp_field_bounds(self, value, timestamp):
        """Test frames cannot be built with a timestamp outside the wire range."""
        with pytest.raises(ValidationError):
            make_core_frame(value, b"x", timestamp)

    def test_core_with_crypto_fields_rejected(self, value):
        """Test core frames cannot carry crypto fields."""
        with pytest.raises(ValidationError):
            BroadcastFrame(
                level="core", sender_value=value, timestamp=0.0, plaintext=b"x", nonce=bytes(12)
            )


class TestMux:
    """Test multiplexing of core and enhancement frames."""

    def test_core_only(self, value):
        """Test a signal of one core frame."""
        core = make_core_frame(value, b"x", 1.0)
        signal = mux(core, [])
        assert len(signal.frames) == 1
        assert demux(signal) == (core, [])

    def test_core_and_enhancements(self, cluster, value):
        """Test core and enhancement frames keep their order."""
        counter = NonceCounter()
        core = make_core_frame(value, b"x", 2.0)
        enh = [encrypt_broadcast(cluster, value, bytes([i]), 2.0, counter) for i in range(3)]
        signal = mux(core, enh)
        assert len(signal.frames) == 4
        assert demux(signal) == (core, enh)

    def test_two_cores(self, value):
        """Test a signal carries one core frame at most."""
        core = make_core_frame(value, b"x", 1.0)
        with pytest.raises(InvalidInputError):
            mux(core, [make_core_frame(value, b"y", 1.0)])

    def test_empty(self):
        """Test an empty signal is rejected."""
        with pytest.raises(InvalidInputError):
            mux(None, [])
