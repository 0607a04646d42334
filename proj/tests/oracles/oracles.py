#!/usr/bin/env python3
"""Independent reference values used by the C++ tests.

Run with no arguments to print every frozen value; the unit and acceptance
tests hard-code the output, so rerun this after changing any algorithm.
"""
import math
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def trigram_buckets(text: str, dims: int = 256) -> dict:
    text = text.lower()
    counts = {}
    for i in range(len(text) - 2):
        b = fnv1a64(text[i:i + 3].encode("utf-8")) % dims
        counts[b] = counts.get(b, 0) + 1
    return counts


def local_embed(text: str, dims: int = 256) -> list:
    v = [0.0] * dims
    for b, c in trigram_buckets(text, dims).items():
        v[b] = float(c)
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v] if n else v


def cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return 0.0 if na == 0 or nb == 0 else dot / (na * nb)


def crc32c(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for b in data:
        crc ^= b
        for _ in range(8):
            crc = (crc >> 1) ^ (0x82F63B78 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


# Pairs that share no 3-gram and, at 256 dims, no bucket either.
DISJOINT_PAIRS = [
    ("wxyz", "abcd"),
    ("red fox", "sql index"),
    ("mountain", "quickly"),
    ("copper kettle", "xylophone"),
]


def main() -> int:
    h = fnv1a64(b"abc")
    print(f"fnv1a64('abc') = {h:#018x}; bucket(256) = {h % 256}")
    print(f"crc32c('123456789') = {crc32c(b'123456789'):#010x}")
    unit = lambda deg: (math.cos(math.radians(deg)), math.sin(math.radians(deg)))
    q = unit(10)
    for deg in (0, 45, 90):
        print(f"cos(10 deg vs {deg} deg) = {cosine(q, unit(deg))!r}")
    print(f"cos(45 deg) = {cosine((1 / math.sqrt(2), 1 / math.sqrt(2)), (1.0, 0.0))!r}")
    print(f"2/3 = {2 / 3!r}")
    ok = True
    for a, b in DISJOINT_PAIRS:
        ga = {a[i:i + 3] for i in range(len(a) - 2)}
        gb = {b[i:i + 3] for i in range(len(b) - 2)}
        shared_buckets = set(trigram_buckets(a)) & set(trigram_buckets(b))
        c = cosine(local_embed(a), local_embed(b))
        print(f"disjoint {a!r} / {b!r}: shared grams {len(ga & gb)}, shared buckets {len(shared_buckets)}, cos {c}")
        ok = ok and not (ga & gb) and not shared_buckets
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
