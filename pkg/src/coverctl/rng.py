"""Counter-based random substreams.

Every stochastic component derives each draw by hashing
(master_seed, component_id, step, lane) through the splitmix64 finalizer.
A draw therefore depends only on those integers, never on how many draws
other components consumed, so replaying a run with the same seed and the
same action sequence reproduces every observation bit-for-bit.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit value."""
    h = 0x8A5CD789635D2DFF
    for p in parts:
        h = _finalize(h + _GOLDEN + (p & _MASK))
    return h


def uniform(*parts: int) -> float:
    """Uniform draw in [0, 1) keyed by the given integers."""
    return (mix(*parts) >> 11) * 2.0**-53


def replica_seed(master_seed: int, replica: int) -> int:
    """Seed for replica ``replica`` of a run started from ``master_seed``."""
    return mix(master_seed, replica)
