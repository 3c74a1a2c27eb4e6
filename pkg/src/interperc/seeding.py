import hashlib


def derive_seed(*parts: object) -> int:
    """Return a 64-bit seed derived from *parts*.

    The parts are joined with ``|`` and hashed with SHA-256, so the result is
    identical across processes, platforms and Python hash randomisation.
    Floats are formatted with ``repr`` so that 0.1 and 0.10000000000000002
    stay distinct.
    """
    key = "|".join(repr(p) if isinstance(p, float) else str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
