"""Kernel backend selection.

The compiled extension (``apna._ckernel``) is preferred; the pure-Python
fallback (``apna._pykernel``) is used when the extension is missing.
``APNA_BACKEND=py`` forces the fallback, ``APNA_BACKEND=c`` requires the
extension (raising if absent). ``get_backend`` also resolves names
explicitly so benchmarks can compare both in one process.
"""

import os

from . import _pykernel


def _load_compiled():
    from . import _ckernel  # noqa: PLC0415 -- optional extension

    return _ckernel


def get_backend(name: str | None = None):
    """Return the kernel module for `name` ("c", "py", or None for default)."""
    if name in (None, "auto"):
        name = os.environ.get("APNA_BACKEND", "").lower() or "prefer-c"
    if name in ("py", "pure"):
        return _pykernel
    if name in ("c", "compiled"):
        return _load_compiled()
    if name == "prefer-c":
        try:
            return _load_compiled()
        except ImportError:
            return _pykernel
    raise ValueError(f"unknown kernel backend {name!r}")


_impl = get_backend()

BACKEND = _impl.BACKEND
EPHID_LEN = _impl.EPHID_LEN
PACKET_MAC_LEN = _impl.PACKET_MAC_LEN
EphidCipher = _impl.EphidCipher
PacketMac = _impl.PacketMac
Ed25519Signer = _impl.Ed25519Signer
ed25519_public_key = _impl.ed25519_public_key
ed25519_verify = _impl.ed25519_verify
