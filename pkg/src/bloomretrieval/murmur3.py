"""MurmurHash3, x64 128-bit variant (pure Python, bit-exact).

Returns the two 64-bit state words (h1, h2); h1 is the low word of the
canonical 128-bit digest and is what the bloom filter reduces modulo m.
"""

from __future__ import annotations

import struct

_MASK = 0xFFFFFFFFFFFFFFFF
_C1 = 0x87C37B91114253D5
_C2 = 0x4CF5AD432745937F


def _fmix64(k: int) -> int:
    k ^= k >> 33
    k = (k * 0xFF51AFD7ED558CCD) & _MASK
    k ^= k >> 33
    k = (k * 0xC4CEB9FE1A85EC53) & _MASK
    k ^= k >> 33
    return k


def murmur3_x64_128(data: bytes, seed: int = 0) -> tuple[int, int]:
    length = len(data)
    h1 = h2 = seed & _MASK

    nblocks = length >> 4
    for k1, k2 in struct.iter_unpack("<QQ", data[: nblocks << 4]):
        k1 = (k1 * _C1) & _MASK
        k1 = ((k1 << 31) | (k1 >> 33)) & _MASK
        h1 ^= (k1 * _C2) & _MASK
        h1 = ((h1 << 27) | (h1 >> 37)) & _MASK
        h1 = (h1 + h2) & _MASK
        h1 = (h1 * 5 + 0x52DCE729) & _MASK

        k2 = (k2 * _C2) & _MASK
        k2 = ((k2 << 33) | (k2 >> 31)) & _MASK
        h2 ^= (k2 * _C1) & _MASK
        h2 = ((h2 << 31) | (h2 >> 33)) & _MASK
        h2 = (h1 + h2) & _MASK
        h2 = (h2 * 5 + 0x38495AB5) & _MASK

    tail = data[nblocks << 4:]
    tlen = len(tail)
    if tlen > 8:
        k2 = int.from_bytes(tail[8:], "little")
        k2 = (k2 * _C2) & _MASK
        k2 = ((k2 << 33) | (k2 >> 31)) & _MASK
        h2 ^= (k2 * _C1) & _MASK
    if tlen > 0:
        k1 = int.from_bytes(tail[:8], "little")
        k1 = (k1 * _C1) & _MASK
        k1 = ((k1 << 31) | (k1 >> 33)) & _MASK
        h1 ^= (k1 * _C2) & _MASK

    h1 ^= length
    h2 ^= length
    h1 = (h1 + h2) & _MASK
    h2 = (h2 + h1) & _MASK
    h1 = _fmix64(h1)
    h2 = _fmix64(h2)
    h1 = (h1 + h2) & _MASK
    h2 = (h2 + h1) & _MASK
    return h1, h2
