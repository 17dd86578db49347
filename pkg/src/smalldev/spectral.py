"""Spectral measures on [-pi, pi) and the scaling machinery built on them.

The measure of fractional Gaussian noise (the increment sequence of
fractional Brownian motion with Hurst parameter H) is the workhorse: its
density is the periodized projection of m_H |1-e^{-iu}|^2 |u|^{-2H-1}.
Flat (i.i.d.), purely atomic, zone-restricted and atomically perturbed
variants are all represented by the same immutable `SpectralMeasure`.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gamma as _gamma

from .errors import (AdjointIterationError, InvalidScheduleError,
                     SingularPointError)
from .quadrature import integrate_density

TWO_PI = 2.0 * math.pi


def fgn_amplitude(hurst):
    """Low-frequency amplitude Gamma(2H+1) sin(pi H) / (2 pi)."""
    return _gamma(2.0 * hurst + 1.0) * math.sin(math.pi * hurst) / TWO_PI


@dataclass(frozen=True)
class HurstParams:
    """Hurst parameter with its derived spectral amplitude."""

    hurst: float
    m_h: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0,1), got {self.hurst}")
        object.__setattr__(self, "m_h", fgn_amplitude(self.hurst))


@dataclass(frozen=True)
class SlowlyVaryingFn:
    """Slowly varying function at zero: l(x), with l(lam*x)/l(x) -> 1.

    Built-in families: "one" (l = 1) and "log-power" (l(x) = |ln x|^a,
    a in [-2, 2]). A custom callable is accepted; adjoint convergence is
    then best-effort.
    """

    family: str = "one"
    exponent: float = 0.0
    fn: object = None

    def __post_init__(self):
        if self.family not in ("one", "log-power", "custom"):
            raise ValueError(f"unknown slowly varying family {self.family!r}")
        if self.family == "log-power" and not -2.0 <= self.exponent <= 2.0:
            raise ValueError("log-power exponent restricted to [-2, 2]")
        if self.family == "custom" and not callable(self.fn):
            raise ValueError("custom family needs a callable")

    def __call__(self, x):
        if self.family == "one":
            return 1.0
        if self.family == "log-power":
            return abs(math.log(x)) ** self.exponent
        return self.fn(x)

    def tilde(self, r, hurst):
        """sqrt(l(r^{-1/H})), slowly varying at infinity."""
        return math.sqrt(self(r ** (-1.0 / hurst)))


ELL_ONE = SlowlyVaryingFn("one")


def log_power_ell(exponent):
    return SlowlyVaryingFn("log-power", exponent=exponent)


# ---------------------------------------------------------------------------
# FGN spectral density by periodization
# ---------------------------------------------------------------------------

def fgn_spectral_density(params, u, truncation=256):
    """Spectral density of fractional Gaussian noise at frequency u.

    Periodized sum m_H |1-e^{-iu}|^2 sum_k |u+2 pi k|^{-2H-1}, truncated at
    |k| <= truncation with a midpoint-rule integral tail plus its first
    Euler-Maclaurin correction. Accepts scalars or arrays.
    """
    if truncation < 8:
        raise ValueError("truncation must be >= 8")
    hurst = params.hurst
    scalar = np.isscalar(u)
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    # the measure lives on [-pi, pi); the density extends continuously to +pi
    if np.any(np.abs(u) > math.pi):
        raise ValueError("frequency outside [-pi, pi]")
    if np.any(u == 0.0):
        if hurst >= 0.5:
            if hurst > 0.5:
                raise SingularPointError(
                    "singular point: FGN density diverges at u=0 for H>1/2")
            out = np.full(u.shape, 1.0 / TWO_PI)
            return float(out[0]) if scalar else out
        # H < 1/2: density vanishes continuously at the origin
        out = np.where(u == 0.0, 0.0,
                       fgn_spectral_density(params, np.where(u == 0.0, 0.1, u),
                                            truncation))
        return float(out[0]) if scalar else out

    absu = np.abs(u)
    ks = np.arange(-truncation, truncation + 1)
    expo = -2.0 * hurst - 1.0
    series = (np.abs(absu[:, None] + TWO_PI * ks[None, :]) ** expo).sum(axis=1)
    # tail: sum_{|k|>K} ~ (1/2pi) int_{edge}^inf x^expo dx per side, with the
    # first Euler-Maclaurin midpoint correction (1/24) f'(edge) * (2pi)
    edge_hi = TWO_PI * (truncation + 0.5) + absu
    edge_lo = TWO_PI * (truncation + 0.5) - absu
    tail = (edge_hi ** (expo + 1.0) + edge_lo ** (expo + 1.0)) / (
        -(expo + 1.0) * TWO_PI)
    tail -= (TWO_PI / 24.0) * expo * (edge_hi ** (expo - 1.0)
                                      + edge_lo ** (expo - 1.0))
    front = params.m_h * np.abs(1.0 - np.exp(-1j * absu)) ** 2
    out = front * (series + tail)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Spectral measure
# ---------------------------------------------------------------------------

def symmetric_atoms(positive_side):
    """Expand positive-side (u, w) pairs into a symmetric atom tuple.

    Atoms at 0 and -pi stand alone; any u in (0, pi) produces the pair
    (+u, w), (-u, w).
    """
    out = []
    for u, w in positive_side:
        if u in (0.0, -math.pi):
            out.append((float(u), float(w)))
        else:
            au = abs(float(u))
            out.append((au, float(w)))
            out.append((-au, float(w)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class SpectralMeasure:
    """Symmetric finite measure on [-pi, pi): density family plus atoms.

    family: "fgn" (periodized long-memory density), "flat" (constant
    scale/(2 pi)), or "atomic" (no density). `zones` are positive-side
    intervals where the density is zeroed (zone_mode="exclude") or the only
    place it lives (zone_mode="restrict").
    """

    label: str = ""
    family: str = "flat"
    hurst: float = None
    scale: float = 1.0
    zones: tuple = ()
    zone_mode: str = "exclude"
    atoms: tuple = ()
    ell_family: str = "one"
    trunc: int = 256

    def __post_init__(self):
        if self.family not in ("fgn", "flat", "atomic"):
            raise ValueError(f"unknown density family {self.family!r}")
        if self.family == "fgn" and not (self.hurst and 0.0 < self.hurst < 1.0):
            raise ValueError("fgn family needs hurst in (0,1)")
        if self.zone_mode not in ("exclude", "restrict"):
            raise ValueError("zone_mode must be exclude or restrict")
        for lo, hi in self.zones:
            if not (0.0 <= lo < hi <= math.pi):
                raise ValueError(f"zone ({lo},{hi}) outside [0, pi]")
        self._check_atoms()

    def _check_atoms(self):
        seen = {}
        for u, w in self.atoms:
            if not -math.pi <= u < math.pi:
                raise ValueError(f"atom frequency {u} outside [-pi, pi)")
            if w <= 0.0:
                raise ValueError(f"atom weight must be positive, got {w}")
            seen.setdefault(abs(u), []).append((u, w))
        for au, group in seen.items():
            if au == 0.0 or au == math.pi:
                continue
            pos = sorted(w for u, w in group if u > 0)
            neg = sorted(w for u, w in group if u < 0)
            if pos != neg:
                raise ValueError(
                    f"asymmetric atoms at |u|={au}: weights {pos} vs {neg}")

    # -- structure ---------------------------------------------------------

    @property
    def has_density(self):
        return self.family != "atomic"

    @property
    def is_purely_atomic(self):
        return self.family == "atomic"

    def _in_support(self, absu):
        inside = np.zeros_like(absu, dtype=bool)
        for lo, hi in self.zones:
            inside |= (absu >= lo) & (absu <= hi)
        if self.zone_mode == "exclude":
            return ~inside
        return inside

    def density(self, u):
        """Density of the absolutely continuous component (vectorized)."""
        scalar = np.isscalar(u)
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        if self.family == "atomic":
            out = np.zeros(u.shape)
        elif self.family == "flat":
            out = np.full(u.shape, self.scale / TWO_PI)
        else:
            out = self.scale * fgn_spectral_density(
                HurstParams(self.hurst), u, self.trunc)
        if self.zones:
            out = np.where(self._in_support(np.abs(u)), out, 0.0)
        return float(out[0]) if scalar else out

    def density_scalar(self, u):
        return float(self.density(float(u)))

    def support_pieces(self):
        """Disjoint (lo, hi) pieces of [0, pi] where the density lives."""
        if not self.has_density:
            return []
        if not self.zones:
            return [(0.0, math.pi)]
        zs = sorted(self.zones)
        if self.zone_mode == "restrict":
            return list(zs)
        pieces, lo = [], 0.0
        for zlo, zhi in zs:
            if zlo > lo:
                pieces.append((lo, zlo))
            lo = max(lo, zhi)
        if lo < math.pi:
            pieces.append((lo, math.pi))
        return pieces

    def singular_exponent(self):
        """Power of the density at 0+ (None when 0 is not in the support)."""
        if self.family != "fgn":
            return None
        if not any(lo == 0.0 for lo, _ in self.support_pieces()):
            return None
        return 1.0 - 2.0 * self.hurst

    def density_singular_exponent(self):
        """Exponent passed to density quadrature (only H>1/2 is singular)."""
        expo = self.singular_exponent()
        return expo if expo is not None and expo < 0.0 else None

    def density_mass(self, tol=1e-10):
        total, err = 0.0, 0.0
        for lo, hi in self.support_pieces():
            v, e = integrate_density(self.density_scalar, lo, hi,
                                     singular_exponent=self.density_singular_exponent()
                                     if lo == 0.0 else None, tol=tol)
            total += v
            err += e
        return 2.0 * total, 2.0 * err

    def atom_mass(self):
        return sum(w for _, w in self.atoms)

    def mass(self, tol=1e-10):
        """Total mass = Var(xi_1) = r(0)."""
        return self.density_mass(tol)[0] + self.atom_mass()

    def density_part(self):
        return replace(self, atoms=(), label=self.label + "|density")

    def atomic_part(self):
        return replace(self, family="atomic", hurst=None, zones=(),
                       label=self.label + "|atoms")

    def restrict(self, lo, hi):
        """Restrict the density to |u| in [lo, hi] (atoms filtered too)."""
        if self.zones and self.zone_mode == "exclude":
            raise ValueError("cannot restrict a measure with excluded zones")
        zones = ((float(lo), float(hi)),)
        atoms = tuple((u, w) for u, w in self.atoms if lo <= abs(u) <= hi)
        return replace(self, zones=zones, zone_mode="restrict", atoms=atoms,
                       label=f"{self.label}|[{lo:.4g},{hi:.4g}]")

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "label": self.label,
            "family": self.family,
            "H": self.hurst,
            "scale": self.scale,
            "ell_family": self.ell_family,
            "atoms": [[u, w] for u, w in self.atoms],
            "zones": [[lo, hi] for lo, hi in self.zones],
            "zone_mode": self.zone_mode,
            "trunc": self.trunc,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(label=d.get("label", ""),
                   family=d.get("family", "flat"),
                   hurst=d.get("H"),
                   scale=d.get("scale", 1.0),
                   zones=tuple(tuple(z) for z in d.get("zones", ())),
                   zone_mode=d.get("zone_mode", "exclude"),
                   atoms=tuple(tuple(a) for a in d.get("atoms", ())),
                   ell_family=d.get("ell_family", "one"),
                   trunc=d.get("trunc", 256))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- measure builders -------------------------------------------------------

def fgn_measure(hurst, trunc=256):
    return SpectralMeasure(label=f"fgn(H={hurst:g})", family="fgn",
                           hurst=hurst, trunc=trunc)


def iid_measure(variance=1.0):
    return SpectralMeasure(label=f"iid(var={variance:g})", family="flat",
                           scale=variance)


def atomic_measure(positive_side, label="atomic"):
    return SpectralMeasure(label=label, family="atomic",
                           atoms=symmetric_atoms(positive_side))


DIRAC_CASES = ("zero", "minus-pi", "plus-minus-half-pi", "four-atoms")


def dirac_measure(case):
    """The four purely atomic reference measures, unit total mass."""
    if case == "zero":
        return atomic_measure([(0.0, 1.0)], label="dirac:zero")
    if case == "minus-pi":
        return atomic_measure([(-math.pi, 1.0)], label="dirac:minus-pi")
    if case == "plus-minus-half-pi":
        return atomic_measure([(math.pi / 2, 0.5)],
                              label="dirac:plus-minus-half-pi")
    if case == "four-atoms":
        return atomic_measure([(0.0, 0.25), (-math.pi, 0.25),
                               (math.pi / 2, 0.25)],
                              label="dirac:four-atoms")
    raise ValueError(f"unknown dirac case {case!r}; choose from {DIRAC_CASES}")


# ---------------------------------------------------------------------------
# Adjoint slowly varying function and the scaling d(r)
# ---------------------------------------------------------------------------

def adjoint_slowly_varying(ell, hurst, r, *, r_min=2.0, tol=1e-10,
                           max_iter=200, damping=0.5):
    """Solve L * l~(r L) = 1 for L, where l~(r) = sqrt(l(r^{-1/H})).

    Damped fixed-point iteration L <- L + damping (1/l~(rL) - L); exact for
    the constant family.
    """
    if ell.family == "one":
        return 1.0
    if r < r_min:
        raise ValueError(f"adjoint evaluation needs r >= {r_min}, got {r}")
    adj = 1.0
    residual = math.inf
    for _ in range(max_iter):
        tl = ell.tilde(r * adj, hurst)
        residual = abs(adj * tl - 1.0)
        if residual <= tol:
            return adj
        adj += damping * (1.0 / tl - adj)
    raise AdjointIterationError(residual, max_iter)


def scaling_d(hurst, adjoint_value, r):
    """Regularly varying scale d(r) = (r L(r))^{1/H}."""
    if r <= 0.0:
        raise ValueError("r must be positive")
    return (r * adjoint_value) ** (1.0 / hurst)


# ---------------------------------------------------------------------------
# Perturbation of the FGN measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSchedule:
    """Finitely many discretization levels (M_j, q_j, N_j) for the FGN
    measure, with boundary f_N = N^(H*beta). The slowly varying factor is
    identically one in this construction, so d(r) = r^(1/H) and
    d(f_{N_j}) = N_j^beta.
    """

    hurst: float
    levels: tuple  # ((M, q, N), ...)
    beta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError("hurst must lie in (0,1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0,1)")
        norm = tuple((float(m), int(q), int(n)) for m, q, n in self.levels)
        object.__setattr__(self, "levels", norm)
        self.validate()

    def boundary_value(self, n):
        return float(n) ** (self.hurst * self.beta)

    def zone_scale(self, n):
        """d(f_N) = N^beta."""
        return float(n) ** self.beta

    def zone(self, j):
        m, _, n = self.levels[j]
        d = self.zone_scale(n)
        return (1.0 / (m * d), m / d)

    def level_grid(self, j):
        """Frequencies t_0 <= ... <= t_q spanning the j-th zone."""
        m, q, n = self.levels[j]
        d = self.zone_scale(n)
        k = np.arange(q + 1)
        return 1.0 / (m * d) + (k / q) * (m - 1.0 / m) / d

    def validate(self):
        for m, q, n in self.levels:
            if m <= 1.0:
                raise InvalidScheduleError(
                    "invalid perturbation schedule (Mq): levels need M > 1")
            if q < 1 or n < 1:
                raise InvalidScheduleError(
                    "invalid perturbation schedule (Mq): q and N must be >= 1")
        for j in range(len(self.levels) - 1):
            m0, q0, n0 = self.levels[j]
            m1, q1, n1 = self.levels[j + 1]
            if not (m1 > m0 and q1 > q0 and n1 > n0):
                raise InvalidScheduleError(
                    "invalid perturbation schedule (Mq): M_j, q_j, N_j must "
                    "increase strictly")
            if not m1 * m1 / q1 < m0 * m0 / q0:
                raise InvalidScheduleError(
                    "invalid perturbation schedule (Mq): M^2/q must decrease")
            if not self.zone_scale(n1) > m1 * m0 * self.zone_scale(n0):
                raise InvalidScheduleError(
                    "invalid perturbation schedule (nonover): zones overlap, "
                    f"need d(f_N{j + 2}) > M{j + 2} M{j + 1} d(f_N{j + 1})")
        return True


def perturbed_measure(schedule, trunc=256, tol=1e-10):
    """Discretize the FGN measure on each schedule zone.

    Within zone j the density is replaced by atoms at +-t_{j,k} carrying the
    interval masses int_{t_k}^{t_{k+1}} p du, so every zone mass (and the
    total mass) is preserved; outside the zones the density is untouched.
    """
    schedule.validate()
    base = fgn_measure(schedule.hurst, trunc)
    expo = base.density_singular_exponent()
    zones, pos_atoms = [], []
    for j in range(len(schedule.levels)):
        grid = schedule.level_grid(j)
        zones.append((float(grid[0]), float(grid[-1])))
        for k in range(len(grid) - 1):
            w, _ = integrate_density(base.density_scalar, grid[k], grid[k + 1],
                                     singular_exponent=expo, tol=tol)
            pos_atoms.append((float(grid[k]), w))
    ms = ", ".join(f"(M={m:g},q={q},N={n})" for m, q, n in schedule.levels)
    return SpectralMeasure(
        label=f"fgn-perturbed(H={schedule.hurst:g}; {ms})",
        family="fgn", hurst=schedule.hurst, zones=tuple(zones),
        atoms=symmetric_atoms(pos_atoms), trunc=trunc)


def tail_mass_ratio(measure, hurst, h, tol=1e-9):
    """Weighted tail mass over its low-frequency asymptote.

    Computes g~[h, pi] with g~(du) = measure(du)/|e^{iu}-1|^2 divided by
    (m_H / 2H) h^{-2H}; tends to 1 as h -> 0 for perturbations of the FGN
    measure.
    """
    if not 0.0 < h < math.pi:
        raise ValueError("h must lie in (0, pi)")

    def weighted(u):
        return measure.density_scalar(u) / (2.0 - 2.0 * math.cos(u))

    total = 0.0
    for lo, hi in measure.support_pieces():
        lo = max(lo, h)
        if hi <= lo:
            continue
        # geometric splits tame the u^{-1-2H} steepness near h
        edges = [lo]
        while edges[-1] * 4.0 < hi:
            edges.append(edges[-1] * 4.0)
        edges.append(hi)
        for a, b in zip(edges[:-1], edges[1:]):
            v, _ = integrate_density(weighted, a, b, tol=tol)
            total += v
    for u, w in measure.atoms:
        if h <= u <= math.pi:
            total += w / (2.0 - 2.0 * math.cos(u))
    norm = fgn_amplitude(hurst) / (2.0 * hurst) * h ** (-2.0 * hurst)
    return total / norm
