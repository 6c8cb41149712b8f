"""Straight-line reimplementation of the hashed bag-of-tokens embedding.

Test-only. Kept independent of the C++ code path so frozen expectations
can be regenerated without the library.
"""
import math

MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def tokens(text):
    out, cur = [], bytearray()
    for b in text.encode("utf-8"):
        if 65 <= b <= 90:
            b += 32
        if (97 <= b <= 122) or (48 <= b <= 57) or b >= 0x80:
            cur.append(b)
        elif cur:
            out.append(bytes(cur))
            cur = bytearray()
    if cur:
        out.append(bytes(cur))
    return out


def token_slot(tok, dim, seed):
    h = 0xCBF29CE484222325 ^ splitmix64(seed)
    for b in tok:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    m = splitmix64(h)
    return m % dim, (-1.0 if (m >> 63) & 1 else 1.0)


def embed(text, dim=256, seed=0):
    v = [0.0] * dim
    toks = tokens(text)
    if not toks:
        raise ValueError("no tokens")
    for t in toks:
        i, s = token_slot(t, dim, seed)
        v[i] += s
    n = math.sqrt(sum(x * x for x in v))
    if n == 0:
        raise ValueError("zero accumulation")
    return [x / n for x in v]


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return max(-1.0, min(1.0, dot / (na * nb)))
