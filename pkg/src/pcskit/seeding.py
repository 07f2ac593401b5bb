"""Deterministic seed derivation.

Every random stream in the package is derived from one root seed plus a
purpose tag (and usually a thread or grid index).  The derivation hashes the
decimal encodings with SHA-256, so it is stable across platforms, Python
versions, and process boundaries; parallel and serial execution therefore
consume identical streams.
"""

from __future__ import annotations

import hashlib


def derive_seed(root_seed: int, *tags: int | str) -> int:
    """Return a 64-bit seed derived from ``root_seed`` and the given tags."""
    h = hashlib.sha256(str(int(root_seed)).encode("ascii"))
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")
