"""Cryptographic types and constructions.

An ephemeral identifier (EphID) is a 16-byte token, ct8 || iv4 || tag4:
the 8-byte ciphertext is (hid4 || exp_time4) XORed with one AES-128-CTR
keystream block (counter block = iv4 || 0^12), and the tag is a 4-byte
truncation of AES-CBC-MAC over the fixed 16-byte input ct8 || iv4 || 0^4
under a separate subkey. Both subkeys derive from the AS master secret
with labeled HKDF. Opening is stateless: verify the tag, decrypt, return
(hid, exp_time).

Session keys bind an X25519 shared secret to the EphID pair via an
HKDF salted with the sorted token bytes, so both endpoints compute the
same key and distinct pairs yield distinct keys. Session keys only ever
derive from ephemeral key pairs: forward secrecy is structural.
"""

import hmac
import os
import threading
from dataclasses import dataclass, field
from functools import lru_cache

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat
from cryptography.exceptions import InvalidTag

from . import kernel
from .errors import AuthenticationFailure, InvalidPublicKey

EPHID_LEN = 16
HID_LEN = 4
PACKET_MAC_LEN = kernel.PACKET_MAC_LEN
SIGNATURE_LEN = 64
PUBKEY_LEN = 32
GCM_NONCE_LEN = 12
GCM_TAG_LEN = 16
CERT_BODY_LEN = EPHID_LEN + 4 + PUBKEY_LEN + 4 + EPHID_LEN
CERT_LEN = CERT_BODY_LEN + SIGNATURE_LEN

LABEL_EPHID_ENC = b"ephid-enc"
LABEL_EPHID_MAC = b"ephid-mac"
LABEL_HOST_CTRL = b"host-ctrl"
LABEL_HOST_PKT = b"host-pkt"
LABEL_SESSION = b"session"
LABEL_INFRA = b"infra-ctrl"


@dataclass(frozen=True)
class AsSecretKey:
    """16-byte symmetric master secret of one AS. Never leaves the AS."""

    key: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.key) != 16:
            raise ValueError("AS master secret must be 16 bytes")


@dataclass(frozen=True)
class AsSubkeys:
    k_enc: bytes = field(repr=False)
    k_mac: bytes = field(repr=False)


@dataclass(frozen=True)
class HostAsKeys:
    """Host<->AS shared keys: k_ctrl seals control messages, k_pkt MACs packets."""

    k_ctrl: bytes = field(repr=False)
    k_pkt: bytes = field(repr=False)


@dataclass(frozen=True)
class EphId:
    """16-byte ephemeral identifier: ct8 || iv4 || tag4."""

    raw: bytes

    def __post_init__(self):
        if len(self.raw) != EPHID_LEN:
            raise ValueError("ephemeral identifier must be 16 bytes")

    @property
    def ct(self) -> bytes:
        return self.raw[:8]

    @property
    def iv(self) -> bytes:
        return self.raw[8:12]

    @property
    def tag(self) -> bytes:
        return self.raw[12:16]

    def __bytes__(self) -> bytes:
        return self.raw


@dataclass(frozen=True)
class EphemeralKeyPair:
    """X25519 key pair generated per EphID by the owning host."""

    public: bytes
    private: bytes = field(repr=False)


@dataclass(frozen=True)
class SessionKey:
    """32-byte symmetric key for one EphID pair."""

    key: bytes = field(repr=False)


@dataclass(frozen=True)
class EphIdCertificate:
    """AS-signed binding of an EphID to its ephemeral public key.

    Canonical encoding: ephid16 || exp4 || pubkey32 || aid4 || aa_ephid16,
    with the 64-byte Ed25519 signature appended (136 bytes total).
    """

    ephid: EphId
    exp_time: int
    pubkey: bytes
    aid: int
    aa_ephid: EphId
    signature: bytes

    def body(self) -> bytes:
        return cert_body(self.ephid, self.exp_time, self.pubkey, self.aid,
                         self.aa_ephid)

    def encode(self) -> bytes:
        return self.body() + self.signature

    @classmethod
    def decode(cls, data: bytes) -> "EphIdCertificate":
        if len(data) != CERT_LEN:
            raise ValueError(f"certificate must be {CERT_LEN} bytes, got {len(data)}")
        return cls(
            ephid=EphId(data[:16]),
            exp_time=int.from_bytes(data[16:20], "big"),
            pubkey=data[20:52],
            aid=int.from_bytes(data[52:56], "big"),
            aa_ephid=EphId(data[56:72]),
            signature=data[72:136],
        )


def cert_body(ephid: EphId, exp_time: int, pubkey: bytes, aid: int,
              aa_ephid: EphId) -> bytes:
    return (ephid.raw + exp_time.to_bytes(4, "big") + pubkey
            + aid.to_bytes(4, "big") + aa_ephid.raw)


def _hkdf(key_material: bytes, label: bytes, length: int,
          salt: bytes | None = None) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=salt,
                info=label).derive(key_material)


def derive_as_subkeys(k_a: AsSecretKey) -> AsSubkeys:
    """Derive the EphID encryption and tag subkeys from the AS master secret."""
    return AsSubkeys(
        k_enc=_hkdf(k_a.key, LABEL_EPHID_ENC, 16),
        k_mac=_hkdf(k_a.key, LABEL_EPHID_MAC, 16),
    )


def derive_infra_key(k_a: AsSecretKey) -> bytes:
    """Key sealing intra-AS infrastructure messages (host-info replication)."""
    return _hkdf(k_a.key, LABEL_INFRA, 16)


# Kernel cipher/MAC objects hold per-key state and are not thread-safe,
# so the caches are thread-local.
_tls = threading.local()


def _tls_cache(name: str) -> dict:
    cache = getattr(_tls, name, None)
    if cache is None:
        cache = {}
        setattr(_tls, name, cache)
    return cache


def ephid_cipher(subkeys: AsSubkeys):
    cache = _tls_cache("ciphers")
    cipher = cache.get(subkeys)
    if cipher is None:
        cipher = cache[subkeys] = kernel.EphidCipher(subkeys.k_enc, subkeys.k_mac)
    return cipher


def packet_macer(k_pkt: bytes):
    cache = _tls_cache("macers")
    macer = cache.get(k_pkt)
    if macer is None:
        macer = cache[k_pkt] = kernel.PacketMac(k_pkt)
    return macer


def mint_ephid(subkeys: AsSubkeys, hid: bytes, exp_time: int, iv: bytes) -> EphId:
    """Seal (hid, exp_time) into a token. The caller owns IV uniqueness."""
    return EphId(ephid_cipher(subkeys).mint(hid, exp_time, iv))


def open_ephid(subkeys: AsSubkeys, ephid: "EphId | bytes") -> tuple[bytes, int]:
    """Return (hid, exp_time) iff the tag verifies; no lookup table involved.

    Raises AuthenticationFailure for forged or corrupted tokens.
    """
    raw = ephid.raw if isinstance(ephid, EphId) else ephid
    return ephid_cipher(subkeys).open(raw)


def ephemeral_keypair(private: bytes | None = None) -> EphemeralKeyPair:
    """Build an X25519 key pair, from 32 given bytes or fresh randomness."""
    if private is None:
        private = os.urandom(32)
    key = X25519PrivateKey.from_private_bytes(private)
    return EphemeralKeyPair(
        public=key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw),
        private=private,
    )


def x25519_shared(private: bytes, peer_public: bytes) -> bytes:
    if len(peer_public) != 32:
        raise InvalidPublicKey("peer public key must be 32 bytes")
    try:
        return X25519PrivateKey.from_private_bytes(private).exchange(
            X25519PublicKey.from_public_bytes(peer_public)
        )
    except ValueError as exc:
        # OpenSSL rejects all-zero shared secrets (zero/low-order points).
        raise InvalidPublicKey(str(exc)) from exc


def session_pair(a: EphId, b: EphId) -> tuple[EphId, EphId]:
    """Canonical (low, high) byte order of an EphID pair."""
    return (a, b) if a.raw <= b.raw else (b, a)


def dh_session_key(own: EphemeralKeyPair, peer_pub: bytes, ephid_low: EphId,
                   ephid_high: EphId) -> SessionKey:
    """Derive the per-session key both endpoints agree on.

    The HKDF salt is the sorted EphID pair, so the key is bound to exactly
    this pair and both sides compute the same bytes. Only ephemeral key
    pairs enter this derivation.
    """
    if ephid_low.raw > ephid_high.raw:
        raise ValueError("ephid_low/ephid_high must be in sorted byte order")
    shared = x25519_shared(own.private, peer_pub)
    return SessionKey(
        _hkdf(shared, LABEL_SESSION, 32, salt=ephid_low.raw + ephid_high.raw)
    )


def derive_host_as_keys(own_private: bytes, peer_public: bytes) -> HostAsKeys:
    """Split the host<->AS Diffie-Hellman secret into (k_ctrl, k_pkt).

    Symmetric: host calls with (host_priv, as_pub), the AS with
    (as_priv, host_pub); both produce identical keys.
    """
    shared = x25519_shared(own_private, peer_public)
    return HostAsKeys(
        k_ctrl=_hkdf(shared, LABEL_HOST_CTRL, 16),
        k_pkt=_hkdf(shared, LABEL_HOST_PKT, 16),
    )


def sign_certificate(signer: kernel.Ed25519Signer, ephid: EphId, exp_time: int,
                     pubkey: bytes, aid: int, aa_ephid: EphId) -> EphIdCertificate:
    body = cert_body(ephid, exp_time, pubkey, aid, aa_ephid)
    return EphIdCertificate(ephid, exp_time, pubkey, aid, aa_ephid,
                            signature=signer.sign(body))


def verify_certificate(as_sign_pub: bytes, cert: EphIdCertificate) -> bool:
    return kernel.ed25519_verify(as_sign_pub, cert.signature, cert.body())


@lru_cache(maxsize=256)
def _aesgcm(key: bytes) -> AESGCM:
    return AESGCM(key)


def seal_payload(key: "SessionKey | bytes", nonce: bytes, plaintext: bytes) -> bytes:
    """AEAD-seal plaintext; the nonce must be unique per key."""
    raw = key.key if isinstance(key, SessionKey) else key
    return _aesgcm(raw).encrypt(nonce, plaintext, None)


def open_payload(key: "SessionKey | bytes", nonce: bytes, ciphertext: bytes) -> bytes:
    raw = key.key if isinstance(key, SessionKey) else key
    try:
        return _aesgcm(raw).decrypt(nonce, ciphertext, None)
    except InvalidTag as exc:
        raise AuthenticationFailure("payload rejected") from exc


def packet_mac(k_pkt: bytes, header_zeroed: bytes, payload: bytes) -> bytes:
    """8-byte MAC over the header (MAC field zeroed) plus the full payload."""
    return packet_macer(k_pkt).tag(header_zeroed + payload)


def verify_packet_mac(k_pkt: bytes, header_zeroed: bytes, payload: bytes,
                      mac: bytes) -> bool:
    return hmac.compare_digest(packet_mac(k_pkt, header_zeroed, payload), mac)


def make_signer(seed: bytes) -> kernel.Ed25519Signer:
    return kernel.Ed25519Signer(seed)
