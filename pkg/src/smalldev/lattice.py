"""Rank-1 lattice rules via fast component-by-component construction.

Standard CBC with the order-2 kernel, evaluated with FFTs over the cyclic
group generated by a primitive root (Nuyens-Cools). Produces a generator
vector for the largest prime <= the requested point count.
"""

from functools import lru_cache

import numpy as np
from scipy.fft import fft, ifft


def _primes_up_to(n):
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.nonzero(sieve)[0]


def _primitive_root(p):
    pm = p - 1
    factors = set()
    m = pm
    for q in _primes_up_to(int(pm ** 0.5) + 1):
        while m % q == 0:
            factors.add(int(q))
            m //= q
        if m == 1:
            break
    if m != 1:
        factors.add(int(m))
    for root in range(2, p):
        if all(pow(root, pm // q, p) != 1 for q in factors):
            return root
    raise ValueError(f"no primitive root for {p}")


@lru_cache(maxsize=32)
def cbc_lattice(dim, n_points):
    """Generator vector (ints) and the prime point count actually used."""
    primes = _primes_up_to(max(n_points, 3))
    n = int(primes[-1])
    if dim <= 1:
        return (1,), n
    g = _primitive_root(n)
    m = (n - 1) // 2
    perm = np.empty(m, dtype=np.int64)
    perm[0] = 1
    for j in range(m - 1):
        perm[j + 1] = (g * perm[j]) % n
    perm = np.minimum(n - perm, perm)
    pn = perm / n
    # order-2 Bernoulli kernel values on the half group
    c = pn * pn - pn + 1.0 / 6.0
    fc = fft(c)
    gamma = np.hstack([1.0, 0.8 ** np.arange(dim - 1)])
    z = np.ones(dim, dtype=np.int64)
    q = np.ones(m)
    w = 0
    for s in range(1, dim):
        reordered = np.hstack([c[:w + 1][::-1], c[w + 1:m][::-1]])
        q = q * (1.0 + gamma[s - 1] * reordered)
        w = int(ifft(fc * fft(q)).real.argmin())
        z[s] = perm[w]
    return tuple(int(v) for v in z), n
