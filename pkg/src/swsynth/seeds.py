"""Labeled fan-out of one master seed into independent sub-seeds.

Every randomized stage (noise, projections, particle init, masks, query
sampling) draws its seed from the master seed through a label hash, so
toggling one feature never shifts the randomness of another.
"""

import hashlib


def subseed(master: int, label: str) -> int:
    """Derive a 63-bit sub-seed from a master seed and a stage label."""
    digest = hashlib.blake2b(
        f"{master}:{label}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") >> 1
