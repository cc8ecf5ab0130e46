"""Exception types shared across the package."""


class ApnaError(Exception):
    """Base class for every error raised by this package."""


class AuthenticationFailure(ApnaError):
    """A tag, MAC, or AEAD check failed: forged or corrupted input."""


class InvalidPublicKey(ApnaError):
    """Degenerate Diffie-Hellman peer point (all-zero or low-order)."""


class TruncatedHeader(ApnaError):
    """Fewer bytes than one packet header."""


class TruncatedFrame(ApnaError):
    """Encapsulation frame shorter than its fixed layout requires."""


class UnknownProtocolType(ApnaError):
    """Encapsulated protocol type is not the reserved experimental one."""


class MalformedMessage(ApnaError):
    """Control message failed structural parsing."""


class ReplayDetected(ApnaError):
    """Packet nonce already seen (or older than the replay window)."""


class DuplicateHid(ApnaError):
    """Host identifier already registered and not revoked."""


class UnknownHid(ApnaError):
    """Host identifier absent from the host table or revoked."""


class Expired(ApnaError):
    """Token or certificate past its expiration time."""


class BadCertificate(ApnaError):
    """Certificate signature or binding did not verify."""


class ExpiredCertificate(ApnaError):
    """Certificate is past its expiration time."""


class NameNotFound(ApnaError):
    """No published record under the requested name."""


class NotSessionPeer(ApnaError):
    """Operation requires an established session with the packet's sender."""


class ScriptError(ApnaError):
    """Scenario file referenced an unknown actor or is unparseable."""
