"""Accountable and private networking on ephemeral identifiers.

Subpackages: :mod:`apna.crypto` (token and key constructions),
:mod:`apna.wire` (packet and control-message codecs), :mod:`apna.entities`
(AS and host protocol state machines), :mod:`apna.simnet` (deterministic
multi-AS simulator with adversaries), :mod:`apna.bench` and :mod:`apna.cli`
(benchmarks and command line).
"""

from .kernel import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
