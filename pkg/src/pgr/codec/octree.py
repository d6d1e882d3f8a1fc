"""Breadth-first octree occupancy codes over Morton-ordered leaves.

Sorting nodes of one level by Morton key is the same as visiting them
breadth first with children in index order, so every level can be built
with array operations. Bit ``c`` of a node's code is set when child ``c``
(``c = 4*x + 2*y + z`` of the child's position bits) is occupied.
"""

import numpy as np

from ..errors import DecodeError

_CHILD = np.arange(8, dtype=np.int64)


def occupancy_codes(leaf_keys, depth: int):
    """Codes for all internal nodes, root first, level by level.

    ``leaf_keys`` must be sorted and unique.
    """
    keys = np.asarray(leaf_keys, dtype=np.int64)
    levels = []
    for _ in range(depth):
        parents = keys >> 3
        start = np.flatnonzero(np.r_[True, parents[1:] != parents[:-1]])
        bits = np.left_shift(1, keys & 7)
        levels.append(np.bitwise_or.reduceat(bits, start).astype(np.uint8))
        keys = parents[start]
    levels.reverse()
    if not levels:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(levels)


def leaves_from_codes(codes, depth: int, n_leaves: int):
    """Rebuild sorted leaf keys from breadth-first codes; validates structure."""
    codes = np.asarray(codes, dtype=np.uint8)
    keys = np.zeros(1, dtype=np.int64)
    pos = 0
    for level in range(depth):
        n = len(keys)
        if pos + n > len(codes):
            raise DecodeError(f"occupancy stream ends inside level {level}")
        chunk = codes[pos:pos + n]
        pos += n
        if not chunk.all():
            raise DecodeError(f"empty occupancy code at level {level}")
        occupied = np.unpackbits(chunk[:, None], axis=1, bitorder="little").astype(bool)
        keys = ((keys[:, None] << 3) | _CHILD)[occupied]
    if pos != len(codes):
        raise DecodeError(f"{len(codes) - pos} occupancy codes left after the last level")
    if len(keys) != n_leaves:
        raise DecodeError(f"octree has {len(keys)} leaves, header says {n_leaves}")
    return keys
