"""Minimal secp256k1 group arithmetic for the K-time signature scheme.

Affine coordinates with None as the point at infinity. This is a reference
implementation: it is only exercised with small K-time key sets, so clarity
beats constant-time or projective tricks. Each scalar-by-point multiplication
counts as one point-multiplication unit for cost accounting.
"""

from __future__ import annotations

from typing import Optional

from rfpop.primitives.counters import count_point_mul

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
G = (
    0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
    0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
)

Point = Optional[tuple[int, int]]


def point_add(p1: Point, p2: Point) -> Point:
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and (y1 + y2) % P == 0:
        return None
    if p1 == p2:
        lam = (3 * x1 * x1) * pow(2 * y1, -1, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def point_mul(p: Point, k: int) -> Point:
    """Double-and-add scalar multiplication; counts one point-mul unit."""
    count_point_mul()
    k %= N
    result: Point = None
    addend = p
    while k:
        if k & 1:
            result = point_add(result, addend)
        addend = point_add(addend, addend)
        k >>= 1
    return result


def point_encode(p: Point) -> bytes:
    """Uncompressed 64-byte x||y encoding; infinity is not encodable."""
    if p is None:
        raise ValueError("cannot encode the point at infinity")
    x, y = p
    return x.to_bytes(32, "big") + y.to_bytes(32, "big")


def point_decode(data: bytes) -> Point:
    if len(data) != 64:
        raise ValueError(f"point encoding must be 64 bytes, got {len(data)}")
    x = int.from_bytes(data[:32], "big")
    y = int.from_bytes(data[32:], "big")
    if x >= P or y >= P:
        raise ValueError("point coordinate out of field range")
    if (y * y - (x * x * x + 7)) % P != 0:
        raise ValueError("point is not on the curve")
    return (x, y)
