"""Bit-exact packet and control-message codecs.

Packet header (56 bytes; all integers big-endian)::

    offset  size  field
    0       4     src_aid
    4       16    src_ephid
    20      4     dst_aid
    24      16    dst_ephid
    40      8     mac        (zeroed while the MAC itself is computed)
    48      8     nonce      (per-source-EphID counter, replay evidence)

A packet is the header followed by exactly one TLV record
(type:1 || length:2 || value). TLV value layouts::

    0x01 EPHID_REQUEST    nonce12 || gcm(pubkey32 || kind1)          (61 B)
    0x02 EPHID_REPLY      nonce12 || gcm(certificate136)             (164 B)
    0x03 BOOTSTRAP_M1     nonce12 || gcm(hid4 || k_ctrl16 || k_pkt16) (64 B)
    0x04 BOOTSTRAP_M2     ctrl_ephid16 || exp4 || sig64
                          || cert_ems136 || cert_dns136              (356 B)
    0x05 SHUTOFF_REQUEST  sig64 || cert136 || evidence_packet        (>= 256 B)
    0x06 DATA             AEAD ciphertext (nonce derived from header)
    0x07 ICMP             raw payload (not encrypted)
    0x08 CONNECT_REQ      client certificate136
    0x09 CONNECT_ACK      serving certificate136

GRE encapsulation frame::

    offset  size  field
    0       4     outer_src_ip
    4       4     outer_dst_ip
    8       2     flags/version (always 0x0000)
    10      2     protocol_type (0x88B5, experimental EtherType)
    12      ...   inner packet (>= one header)

GCM ciphertexts carry their 16-byte tag; the 12-byte nonces prefixed to
control ciphertexts are a 4-byte role tag plus an 8-byte counter, so the
host and the AS never collide under the shared control key.
"""

import struct
from dataclasses import dataclass
from typing import NamedTuple

from . import crypto
from .crypto import EphId, EphIdCertificate, HostAsKeys
from .errors import (
    MalformedMessage,
    TruncatedFrame,
    TruncatedHeader,
    UnknownProtocolType,
)

HEADER_LEN = 56
MAC_OFFSET = 40
MAC_LEN = 8
NONCE_OFFSET = 48

APNA_ETHERTYPE = 0x88B5
GRE_PREFIX_LEN = 12

MSG_EPHID_REQUEST = 0x01
MSG_EPHID_REPLY = 0x02
MSG_BOOTSTRAP_M1 = 0x03
MSG_BOOTSTRAP_M2 = 0x04
MSG_SHUTOFF_REQUEST = 0x05
MSG_DATA = 0x06
MSG_ICMP = 0x07
MSG_CONNECT_REQ = 0x08
MSG_CONNECT_ACK = 0x09

MSG_NAMES = {
    MSG_EPHID_REQUEST: "ephid-request",
    MSG_EPHID_REPLY: "ephid-reply",
    MSG_BOOTSTRAP_M1: "bootstrap-m1",
    MSG_BOOTSTRAP_M2: "bootstrap-m2",
    MSG_SHUTOFF_REQUEST: "shutoff-request",
    MSG_DATA: "data",
    MSG_ICMP: "icmp",
    MSG_CONNECT_REQ: "connect-req",
    MSG_CONNECT_ACK: "connect-ack",
}

KIND_CONTROL = 0
KIND_DATA = 1
KIND_RECEIVE_ONLY = 2
KIND_NAMES = {KIND_CONTROL: "control", KIND_DATA: "data",
              KIND_RECEIVE_ONLY: "receive-only"}

_HEADER = struct.Struct(">I16sI16s8sQ")


class ApnaHeader(NamedTuple):
    src_aid: int
    src_ephid: bytes
    dst_aid: int
    dst_ephid: bytes
    mac: bytes
    nonce: int


def encode_header(h: ApnaHeader) -> bytes:
    return _HEADER.pack(*h)


def decode_header(data: bytes) -> ApnaHeader:
    if len(data) < HEADER_LEN:
        raise TruncatedHeader(f"need {HEADER_LEN} bytes, got {len(data)}")
    return ApnaHeader(*_HEADER.unpack_from(data))


def encode_tlv(msg_type: int, value: bytes) -> bytes:
    if len(value) > 0xFFFF:
        raise MalformedMessage("value exceeds 65535 bytes")
    return struct.pack(">BH", msg_type, len(value)) + value


def decode_tlv(data: bytes) -> tuple[int, bytes]:
    if len(data) < 3:
        raise MalformedMessage("short TLV record")
    msg_type, length = struct.unpack_from(">BH", data)
    if msg_type not in MSG_NAMES:
        raise MalformedMessage(f"unknown message type 0x{msg_type:02x}")
    if len(data) != 3 + length:
        raise MalformedMessage(
            f"TLV length {length} does not match {len(data) - 3} payload bytes"
        )
    return msg_type, data[3:]


def encode_packet(header: ApnaHeader, msg_type: int, value: bytes) -> bytes:
    return encode_header(header) + encode_tlv(msg_type, value)


def decode_packet(data: bytes) -> tuple[ApnaHeader, int, bytes]:
    header = decode_header(data)
    msg_type, value = decode_tlv(data[HEADER_LEN:])
    return header, msg_type, value


@dataclass(frozen=True)
class GreFrame:
    outer_src_ip: bytes
    outer_dst_ip: bytes
    protocol_type: int
    inner: bytes


def encode_gre(frame: GreFrame) -> bytes:
    if len(frame.outer_src_ip) != 4 or len(frame.outer_dst_ip) != 4:
        raise ValueError("outer addresses must be 4 bytes each")
    return (frame.outer_src_ip + frame.outer_dst_ip
            + struct.pack(">HH", 0, frame.protocol_type) + frame.inner)


def decode_gre(data: bytes) -> GreFrame:
    if len(data) < GRE_PREFIX_LEN:
        raise TruncatedFrame(f"need {GRE_PREFIX_LEN} bytes, got {len(data)}")
    flags, proto = struct.unpack_from(">HH", data, 8)
    if proto != APNA_ETHERTYPE:
        raise UnknownProtocolType(f"protocol type 0x{proto:04x}")
    if flags != 0:
        raise MalformedMessage("unsupported GRE flags")
    inner = data[GRE_PREFIX_LEN:]
    if len(inner) < HEADER_LEN:
        raise TruncatedFrame("inner packet shorter than one header")
    return GreFrame(data[:4], data[4:8], proto, inner)


# Control-message bodies. Sealed ones decrypt-then-parse under the right
# key and raise AuthenticationFailure (from the AEAD) otherwise.

_REQUEST_PT_LEN = 33
_GCM_OVERHEAD = crypto.GCM_TAG_LEN
_NONCE = crypto.GCM_NONCE_LEN


def control_nonce(role: bytes, counter: int) -> bytes:
    """12-byte AEAD nonce: 4-byte role tag || 8-byte counter."""
    if len(role) != 4:
        raise ValueError("role tag must be 4 bytes")
    return role + counter.to_bytes(8, "big")


def seal_ephid_request(k_ctrl: bytes, nonce: bytes, pubkey: bytes,
                       kind: int) -> bytes:
    if kind not in KIND_NAMES:
        raise MalformedMessage(f"unknown lifetime class {kind}")
    return nonce + crypto.seal_payload(k_ctrl, nonce, pubkey + bytes([kind]))


def open_ephid_request(k_ctrl: bytes, value: bytes) -> tuple[bytes, int]:
    if len(value) != _NONCE + _REQUEST_PT_LEN + _GCM_OVERHEAD:
        raise MalformedMessage("bad request length")
    pt = crypto.open_payload(k_ctrl, value[:_NONCE], value[_NONCE:])
    pubkey, kind = pt[:32], pt[32]
    if kind not in KIND_NAMES:
        raise MalformedMessage(f"unknown lifetime class {kind}")
    return pubkey, kind


def seal_ephid_reply(k_ctrl: bytes, nonce: bytes, cert: EphIdCertificate) -> bytes:
    return nonce + crypto.seal_payload(k_ctrl, nonce, cert.encode())


def open_ephid_reply(k_ctrl: bytes, value: bytes) -> EphIdCertificate:
    if len(value) != _NONCE + crypto.CERT_LEN + _GCM_OVERHEAD:
        raise MalformedMessage("bad reply length")
    return EphIdCertificate.decode(
        crypto.open_payload(k_ctrl, value[:_NONCE], value[_NONCE:])
    )


def seal_bootstrap_m1(k_infra: bytes, nonce: bytes, hid: bytes,
                      keys: HostAsKeys) -> bytes:
    return nonce + crypto.seal_payload(k_infra, nonce,
                                       hid + keys.k_ctrl + keys.k_pkt)


def open_bootstrap_m1(k_infra: bytes, value: bytes) -> tuple[bytes, HostAsKeys]:
    if len(value) != _NONCE + 36 + _GCM_OVERHEAD:
        raise MalformedMessage("bad m1 length")
    pt = crypto.open_payload(k_infra, value[:_NONCE], value[_NONCE:])
    return pt[:4], HostAsKeys(k_ctrl=pt[4:20], k_pkt=pt[20:36])


@dataclass(frozen=True)
class BootstrapM2:
    """Signed control-EphID assignment plus the AS service certificates."""

    ctrl_ephid: EphId
    exp_time: int
    signature: bytes
    cert_ems: EphIdCertificate
    cert_dns: EphIdCertificate

    def id_info(self) -> bytes:
        return id_info_body(self.ctrl_ephid, self.exp_time)


def id_info_body(ctrl_ephid: EphId, exp_time: int) -> bytes:
    return ctrl_ephid.raw + exp_time.to_bytes(4, "big")


_M2_LEN = 16 + 4 + 64 + crypto.CERT_LEN * 2


def encode_bootstrap_m2(m2: BootstrapM2) -> bytes:
    return (m2.id_info() + m2.signature
            + m2.cert_ems.encode() + m2.cert_dns.encode())


def decode_bootstrap_m2(value: bytes) -> BootstrapM2:
    if len(value) != _M2_LEN:
        raise MalformedMessage(f"m2 must be {_M2_LEN} bytes, got {len(value)}")
    return BootstrapM2(
        ctrl_ephid=EphId(value[:16]),
        exp_time=int.from_bytes(value[16:20], "big"),
        signature=value[20:84],
        cert_ems=EphIdCertificate.decode(value[84:84 + crypto.CERT_LEN]),
        cert_dns=EphIdCertificate.decode(value[84 + crypto.CERT_LEN:]),
    )


@dataclass(frozen=True)
class ShutoffRequest:
    """Recipient's evidence that a source sent it an unwanted packet."""

    evidence_packet: bytes
    signature: bytes
    cert: EphIdCertificate


def encode_shutoff_request(req: ShutoffRequest) -> bytes:
    return req.signature + req.cert.encode() + req.evidence_packet


def decode_shutoff_request(value: bytes) -> ShutoffRequest:
    min_len = 64 + crypto.CERT_LEN + HEADER_LEN
    if len(value) < min_len:
        raise MalformedMessage(f"shutoff request needs >= {min_len} bytes")
    return ShutoffRequest(
        signature=value[:64],
        cert=EphIdCertificate.decode(value[64:64 + crypto.CERT_LEN]),
        evidence_packet=value[64 + crypto.CERT_LEN:],
    )
