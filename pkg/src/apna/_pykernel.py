"""Pure-Python kernel: the hot primitives backed by the `cryptography` package.

Selected by :mod:`apna.kernel` when the compiled extension is unavailable
(or when ``APNA_BACKEND=py``). Same surface as ``apna._ckernel``:

* ``EphidCipher`` -- mint/open of 16-byte ephemeral-identifier tokens
  (AES-128-CTR over one block, then a 4-byte truncated AES-CBC-MAC tag
  over the fixed 16-byte ``ct8 || iv4 || 0x00000000`` layout).
* ``PacketMac``   -- AES-CMAC truncated to 8 bytes for per-packet MACs.
* ``Ed25519Signer`` / ``ed25519_verify`` -- certificate signatures.

Instances hold per-key cipher state and are not thread-safe; use one
instance per actor/thread.
"""

import hmac

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.cmac import CMAC
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .errors import AuthenticationFailure

BACKEND = "pure"

EPHID_LEN = 16
PACKET_MAC_LEN = 8
_TAG_LEN = 4
_CT_LEN = 8
_IV_LEN = 4


def _xor8(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(8, "big")


class EphidCipher:
    """Token cipher for one AS subkey pair (k_enc, k_mac)."""

    def __init__(self, k_enc: bytes, k_mac: bytes):
        if len(k_enc) != 16 or len(k_mac) != 16:
            raise ValueError("subkeys must be 16 bytes each")
        # ECB contexts are stateless across blocks, so one persistent
        # encryptor per key avoids a key schedule per call.
        self._enc = Cipher(algorithms.AES(k_enc), modes.ECB()).encryptor()
        self._mac = Cipher(algorithms.AES(k_mac), modes.ECB()).encryptor()

    def _keystream(self, iv: bytes) -> bytes:
        # CTR counter block: iv4 || 0^12, block counter 0 in the last 32 bits.
        return self._enc.update(iv + b"\x00" * 12)

    def _tag(self, ct: bytes, iv: bytes) -> bytes:
        # Single-block CBC-MAC with zero IV over the fixed 16-byte input.
        return self._mac.update(ct + iv + b"\x00" * 4)[:_TAG_LEN]

    def mint(self, hid: bytes, exp_time: int, iv: bytes) -> bytes:
        if len(hid) != 4 or len(iv) != 4:
            raise ValueError("hid and iv must be 4 bytes each")
        if not 0 <= exp_time < 2**32:
            raise ValueError("exp_time must fit in 32 bits")
        ct = _xor8(hid + exp_time.to_bytes(4, "big"), self._keystream(iv)[:8])
        return ct + iv + self._tag(ct, iv)

    def open(self, token: bytes) -> tuple[bytes, int]:
        if len(token) != EPHID_LEN:
            raise ValueError("token must be 16 bytes")
        ct, iv, tag = token[:8], token[8:12], token[12:16]
        if not hmac.compare_digest(self._tag(ct, iv), tag):
            raise AuthenticationFailure("ephemeral-identifier tag mismatch")
        pt = _xor8(ct, self._keystream(iv)[:8])
        return pt[:4], int.from_bytes(pt[4:], "big")


class PacketMac:
    """Truncated AES-CMAC over packet bytes under one per-host key."""

    def __init__(self, key: bytes):
        if len(key) != 16:
            raise ValueError("packet-MAC key must be 16 bytes")
        self._alg = algorithms.AES(key)

    def tag(self, data: bytes) -> bytes:
        c = CMAC(self._alg)
        c.update(data)
        return c.finalize()[:PACKET_MAC_LEN]

    def tag_packet(self, packet: bytes, zero_off: int, zero_len: int) -> bytes:
        """MAC over the packet with [zero_off, zero_off+zero_len) read as zeros."""
        return self.tag(
            packet[:zero_off] + b"\x00" * zero_len + packet[zero_off + zero_len:]
        )

    def verify_packet(self, packet: bytes, zero_off: int, zero_len: int,
                      mac: bytes) -> bool:
        return hmac.compare_digest(self.tag_packet(packet, zero_off, zero_len), mac)


class Ed25519Signer:
    """Signing half of an Ed25519 key, expanded once from a 32-byte seed."""

    def __init__(self, seed: bytes):
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes")
        self._key = Ed25519PrivateKey.from_private_bytes(seed)
        self.public = self._key.public_key().public_bytes(
            Encoding.Raw, PublicFormat.Raw
        )

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)


def ed25519_public_key(seed: bytes) -> bytes:
    return Ed25519Signer(seed).public


def ed25519_verify(public: bytes, signature: bytes, message: bytes) -> bool:
    if len(signature) != 64:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except InvalidSignature:
        return False
