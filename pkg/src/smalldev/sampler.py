"""Exact-in-law path generation for stationary Gaussian sequences.

All randomness flows through counter-based Philox streams keyed by
(seed, stream, chunk), so batches are bit-reproducible regardless of how
the work is chunked or threaded.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .covariance import CovarianceModel, repaired_cholesky
from .errors import AtomSamplerError, EmbeddingError

# stream ids (second Philox key word)
STREAM_CIRCULANT = 1
STREAM_CHOLESKY = 2
STREAM_ATOMS = 3
STREAM_QMC = 4
STREAM_MC = 5
STREAM_PMQ = 6

#: paths per generation chunk; fixed so results never depend on memory layout
CHUNK = 16384

EIG_CLIP = 1e-8


def make_rng(seed, stream, chunk_index=0):
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64)
    return Generator(Philox(key=key, counter=[0, 0, chunk_index, 0]))


def make_spawnable_rng(seed, stream, index=0):
    """Generator with a spawnable seed sequence (scipy QMC engines need one);
    deterministic in (seed, stream, index)."""
    ss = np.random.SeedSequence(entropy=seed & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(stream, index))
    return Generator(Philox(ss))


@dataclass(frozen=True)
class PathBatch:
    """Partial-sum trajectories S_1..S_n, one row per path."""

    paths: np.ndarray
    seed: int
    method: str

    @property
    def count(self):
        return self.paths.shape[0]

    @property
    def n(self):
        return self.paths.shape[1]

    def max_abs(self):
        return np.abs(self.paths).max(axis=1)


def embedding_size(n):
    """First power of two >= 2n."""
    return 1 << int(math.ceil(math.log2(2 * n)))


def required_horizon(n):
    """Autocovariance lags needed by the circulant embedding for n steps."""
    return embedding_size(n) // 2


def circulant_eigenvalues(model, n):
    m = embedding_size(n)
    half = m // 2
    if model.k_max < half:
        raise EmbeddingError(
            f"embedding failed, use cholesky: need r(0..{half}), "
            f"have r(0..{model.k_max})")
    r = model.autocov
    row = np.concatenate([r[:half + 1], r[half - 1:0:-1]])
    eig = np.fft.fft(row).real
    floor = -EIG_CLIP * r[0]
    if eig.min() < floor:
        raise EmbeddingError(
            f"embedding failed, use cholesky: eigenvalue {eig.min():.3e} "
            f"below {floor:.3e}")
    if eig.min() < 0.0:
        warnings.warn("clipping tiny negative circulant eigenvalues",
                      stacklevel=2)
        eig = np.clip(eig, 0.0, None)
    return eig


def _circulant_chunk(eig, n, rows, rng):
    """`rows` complex spectral draws -> 2*rows independent real paths."""
    m = len(eig)
    z = rng.standard_normal((rows, m)) + 1j * rng.standard_normal((rows, m))
    z *= np.sqrt(eig / m)[None, :]
    x = np.fft.fft(z, axis=1)[:, :n]
    steps = np.empty((2 * rows, n))
    steps[0::2] = x.real
    steps[1::2] = x.imag
    return steps


def iter_step_chunks(measure, n, count, seed, chunk=CHUNK, dtype=np.float64):
    """Yield chunks of raw step sequences xi_1..xi_n under `measure`.

    The density and atomic components are generated independently and
    summed; chunk boundaries are fixed multiples of `chunk` paths, each
    drawn from its own counter block. `dtype=float32` is honored only on
    the white-noise fast path (bulk counting); everything else stays f64.
    """
    has_density = measure.has_density
    atoms = measure.atoms
    white = measure.family == "flat" and not measure.zones
    eig = chol = None
    if has_density and not white:
        dens_model = CovarianceModel.from_measure(measure.density_part(),
                                                  required_horizon(n))
        try:
            eig = circulant_eigenvalues(dens_model, n)
        except EmbeddingError:
            chol = repaired_cholesky(dens_model.toeplitz(n))
    produced = 0
    index = 0
    while produced < count:
        take = min(chunk, count - produced)
        if has_density:
            rng = make_rng(seed, STREAM_CIRCULANT, index)
            if white:
                # i.i.d. steps need no embedding
                total = rng.standard_normal((take, n), dtype=dtype)
                if measure.scale != 1.0:
                    total *= math.sqrt(measure.scale)
            elif eig is not None:
                rows = (take + 1) // 2
                total = _circulant_chunk(eig, n, rows, rng)[:take]
            else:
                total = rng.standard_normal((take, n)) @ chol.T
        else:
            total = np.zeros((take, n))
        if atoms:
            rng = make_rng(seed, STREAM_ATOMS, index)
            total += _atomic_steps(atoms, n, take, rng)
        yield total
        produced += take
        index += 1


def _atomic_steps(atoms, n, count, rng):
    """Steps xi_j = sum over atoms of the real spectral representation."""
    j = np.arange(1, n + 1, dtype=np.float64)
    out = np.zeros((count, n))
    pos = sorted({abs(u) for u, _ in atoms if abs(u) not in (0.0, math.pi)})
    for u in pos:
        w = next(wt for uu, wt in atoms if abs(uu) == u)
        amp = math.sqrt(2.0 * w)
        cos_j = np.cos(j * u)
        sin_j = np.sin(j * u)
        za = rng.standard_normal(count)
        zb = rng.standard_normal(count)
        out += amp * (np.outer(za, cos_j) + np.outer(zb, sin_j))
    for u, w in atoms:
        if u == 0.0:
            out += math.sqrt(w) * rng.standard_normal(count)[:, None]
        elif u == -math.pi:
            signs = np.where(np.arange(1, n + 1) % 2 == 1, -1.0, 1.0)
            out += math.sqrt(w) * np.outer(rng.standard_normal(count), signs)
    return out


def sample_circulant(model, n, count, seed):
    """Exact stationary sampling by circulant embedding; returns sums."""
    eig = circulant_eigenvalues(model, n)
    paths = np.empty((count, n))
    produced = 0
    index = 0
    while produced < count:
        take = min(CHUNK, count - produced)
        rng = make_rng(seed, STREAM_CIRCULANT, index)
        rows = (take + 1) // 2
        steps = _circulant_chunk(eig, n, rows, rng)[:take]
        paths[produced:produced + take] = np.cumsum(steps, axis=1)
        produced += take
        index += 1
    return PathBatch(paths, seed, "circulant")


def sample_cholesky(model, n, count, seed):
    """Exact sampling through a dense Cholesky factor (n <= 4096)."""
    if n > 4096:
        raise ValueError("cholesky sampler limited to n <= 4096")
    chol = repaired_cholesky(model.toeplitz(n))
    paths = np.empty((count, n))
    produced = 0
    index = 0
    while produced < count:
        take = min(CHUNK, count - produced)
        rng = make_rng(seed, STREAM_CHOLESKY, index)
        z = rng.standard_normal((take, n))
        paths[produced:produced + take] = np.cumsum(z @ chol.T, axis=1)
        produced += take
        index += 1
    return PathBatch(paths, seed, "cholesky")


def sample_atoms(measure, n, count, seed):
    """Trigonometric-sum sampler for purely atomic measures.

    S_n = sum over atom pairs sqrt(2w) [xi Re G_n(t) + eta Im G_n(t)] with
    G_n(t) = sum_{j<=n} e^{ijt}; an atom at 0 contributes n sqrt(w) xi and
    the atom at -pi contributes the alternating partial sum of (-1)^j.
    """
    if not measure.is_purely_atomic:
        raise AtomSamplerError("atom sampler requires purely atomic measure")
    atoms = measure.atoms
    j = np.arange(1, n + 1, dtype=np.float64)
    paths = np.zeros((count, n))
    produced = 0
    index = 0
    while produced < count:
        take = min(CHUNK, count - produced)
        rng = make_rng(seed, STREAM_ATOMS, index)
        block = np.zeros((take, n))
        pos = sorted({abs(u) for u, _ in atoms
                      if abs(u) not in (0.0, math.pi)})
        for u in pos:
            w = next(wt for uu, wt in atoms if abs(uu) == u)
            amp = math.sqrt(2.0 * w)
            re_g = np.cumsum(np.cos(j * u))
            im_g = np.cumsum(np.sin(j * u))
            za = rng.standard_normal(take)
            zb = rng.standard_normal(take)
            block += amp * (np.outer(za, re_g) + np.outer(zb, im_g))
        for u, w in atoms:
            if u == 0.0:
                block += math.sqrt(w) * np.outer(rng.standard_normal(take), j)
            elif u == -math.pi:
                alt = np.cumsum(np.where(np.arange(1, n + 1) % 2 == 1,
                                         -1.0, 1.0))
                block += math.sqrt(w) * np.outer(rng.standard_normal(take),
                                                 alt)
        paths[produced:produced + take] = block
        produced += take
        index += 1
    return PathBatch(paths, seed, "atoms")


def sample_measure(measure, n, count, seed):
    """Dispatch: atomic -> trigonometric sums, otherwise circulant (with
    Cholesky fallback) plus an independent atomic component."""
    if measure.is_purely_atomic:
        return sample_atoms(measure, n, count, seed)
    paths = np.empty((count, n))
    produced = 0
    for steps in iter_step_chunks(measure, n, count, seed):
        paths[produced:produced + len(steps)] = np.cumsum(steps, axis=1)
        produced += len(steps)
    return PathBatch(paths, seed, "mixed")
