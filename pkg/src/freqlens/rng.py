"""Deterministic seed derivation (splitmix64-style stream expansion)."""

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, index: int) -> int:
    """index-th seed of the stream rooted at master; scheduling-independent."""
    return splitmix64((master + (index + 1) * _GOLDEN) & _MASK)
