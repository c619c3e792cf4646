"""Torus geometry, lattice Fourier transforms and fractional-Laplacian symbols.

Conventions: forward transform ghat(p) = sum_x exp(-i x.p) g(x) over the
periodic box, inverse with the 1/volume factor, so numpy's fftn/ifftn match
exactly.  Sites are indexed row-major in FFT order; centred coordinates are
obtained by folding indices above side//2 downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy.special import gammaln


class SymbolError(ValueError):
    """Inadmissible operator symbol (non-positive at a nonzero grid momentum)."""


@dataclass(frozen=True)
class TorusSpec:
    """Periodic box of side L**N in d dimensions.

    Coordinates per axis run over [-floor((side-1)/2), floor(side/2)];
    wrap-around uses modular arithmetic.
    """

    d: int
    L: int
    N: int

    def __post_init__(self):
        if self.d < 1 or self.L < 2 or self.N < 1:
            raise ValueError(f"invalid torus spec d={self.d} L={self.L} N={self.N}")

    @property
    def side(self) -> int:
        return self.L ** self.N

    @property
    def volume(self) -> int:
        return self.side ** self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.d

    def coord_axis(self) -> np.ndarray:
        """Centred coordinate value for each FFT index along one axis."""
        s = self.side
        idx = np.arange(s)
        return np.where(idx <= s // 2, idx, idx - s)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Fold integer coordinates into the centred box."""
        s = self.side
        x = np.asarray(x) % s
        return np.where(x <= s // 2, x, x - s)

    def min_image_sq(self, x: Sequence[int]) -> float:
        """Squared Euclidean length of the minimal periodic image of x."""
        w = self.wrap(np.asarray(x, dtype=np.int64))
        return float(np.sum(w.astype(np.float64) ** 2))


def symbol_lambda(p) -> float:
    """Fourier symbol of the lattice Laplacian, 2*sum_i (1 - cos p_i)."""
    p = np.asarray(p, dtype=np.float64)
    return float(np.sum(2.0 * (1.0 - np.cos(p))))


@dataclass(frozen=True)
class OperatorSymbol:
    """Fourier multiplier of the counterterm-modified fractional Laplacian.

    value(lam) = lam**(1 - eta/2) + a_mass + a_delta*lam + sum_q c_q*lam**(q/2)
    with lam the Laplacian symbol.  higher_terms entries are (q, coeff) with
    even derivative order q >= 4; each contributes through its scalar symbol
    lam**(q/2) only.
    """

    eta: float = 0.0
    a_mass: float = 0.0
    a_delta: float = 0.0
    higher_terms: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.eta < 2.0:
            raise ValueError(f"eta={self.eta} outside [0, 2)")
        if self.a_mass < 0.0:
            raise ValueError(f"a_mass={self.a_mass} must be >= 0")
        for q, _ in self.higher_terms:
            if q < 4 or q % 2 != 0:
                raise ValueError(f"higher term order q={q} must be even and >= 4")

    @property
    def beta(self) -> float:
        """Fractional power 1 - eta/2 of the Laplacian."""
        return 1.0 - self.eta / 2.0

    def massless_of_lambda(self, lam: np.ndarray) -> np.ndarray:
        """Symbol minus the mass term, as a function of the Laplacian symbol."""
        lam = np.asarray(lam, dtype=np.float64)
        out = lam ** self.beta if self.eta != 0.0 else lam.astype(np.float64, copy=True)
        if self.a_delta != 0.0:
            out = out + self.a_delta * lam
        for q, c in self.higher_terms:
            out = out + c * lam ** (q // 2)
        return out

    def of_lambda(self, lam: np.ndarray) -> np.ndarray:
        """Full symbol value as a function of the Laplacian symbol."""
        return self.massless_of_lambda(lam) + self.a_mass


def symbol_full(op: OperatorSymbol, p) -> float:
    """Evaluate the modified-Laplacian symbol at a single momentum vector."""
    return float(op.of_lambda(symbol_lambda(p)))


def validate_symbol(op: OperatorSymbol, torus: TorusSpec) -> None:
    """Reject symbols that are not strictly positive off the zero mode."""
    lam = unique_lambda(torus)[0]
    vals = op.of_lambda(lam)
    bad = vals[lam > 0.0] <= 0.0
    if np.any(bad):
        raise SymbolError(
            "symbol non-positive at a nonzero grid momentum "
            f"(min={vals[lam > 0.0].min():.3e}); coefficients outside admissible ball"
        )


# ---------------------------------------------------------------------------
# momentum grids

@dataclass
class MomentumGrid:
    """Dual lattice 2*pi*L**(-N) * Lambda_N with the zero mode flagged."""

    torus: TorusSpec
    _axis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.torus.side
        self._axis = 2.0 * np.pi * np.arange(s) / s

    @property
    def axis(self) -> np.ndarray:
        """Momentum component values along one axis (mod 2*pi)."""
        return self._axis

    def lambda_grid(self) -> np.ndarray:
        """Laplacian symbol on the full d-dimensional grid."""
        return _lambda_nd(self._axis, self.torus.d)

    def zero_mode_index(self) -> Tuple[int, ...]:
        return (0,) * self.torus.d

    def momentum(self, k: Sequence[int]) -> np.ndarray:
        """Momentum vector of the integer mode index k."""
        return self._axis[np.asarray(k, dtype=np.int64) % self.torus.side]


def _lambda_axis(side: int) -> np.ndarray:
    p = 2.0 * np.pi * np.arange(side) / side
    return 2.0 * (1.0 - np.cos(p))


def _lambda_nd(p_axis: np.ndarray, d: int) -> np.ndarray:
    lam1 = 2.0 * (1.0 - np.cos(p_axis))
    out = lam1
    for _ in range(d - 1):
        out = out[..., None] + lam1
    return out


@lru_cache(maxsize=16)
def unique_lambda(torus: TorusSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted unique Laplacian-symbol values and their multiplicities.

    Every multiplier in this package is a scalar function of the Laplacian
    symbol, so momentum sums reduce to weighted sums over the unique values.
    Computed by convolving per-axis value counts, never materialising the grid.
    """
    lam1 = np.round(_lambda_axis(torus.side), 14)
    vals, cnts = np.unique(lam1, return_counts=True)
    acc_v = vals.copy()
    acc_c = cnts.astype(np.float64)
    for _ in range(torus.d - 1):
        sums = np.round(acc_v[:, None] + vals[None, :], 12).ravel()
        ws = (acc_c[:, None] * cnts[None, :]).ravel()
        u, inv = np.unique(sums, return_inverse=True)
        acc_v = u
        acc_c = np.bincount(inv, weights=ws)
    return acc_v, acc_c


def iter_lambda_slabs(torus: TorusSpec) -> Iterator[np.ndarray]:
    """Yield the Laplacian symbol grid slab-by-slab along the first axis.

    Slab i has shape (side,)*(d-1) and corresponds to first-axis index i;
    keeps peak memory at one slab for large tori.
    """
    lam1 = _lambda_axis(torus.side)
    rest = _lambda_nd(2.0 * np.pi * np.arange(torus.side) / torus.side, torus.d - 1) \
        if torus.d > 1 else np.zeros(())
    for i in range(torus.side):
        yield lam1[i] + rest


def lambda_rfft_grid(torus: TorusSpec) -> np.ndarray:
    """Laplacian symbol on the numpy rfftn output layout (last axis halved)."""
    s = torus.side
    full = _lambda_axis(s)
    half = full[: s // 2 + 1]
    axes = [full] * (torus.d - 1) + [half]
    out = axes[0]
    for ax in axes[1:]:
        out = out[..., None] + ax
    return out


# ---------------------------------------------------------------------------
# fields and transforms

def fft_forward(field_values: np.ndarray, torus: TorusSpec) -> np.ndarray:
    """Forward lattice transform over the trailing d axes."""
    if field_values.shape[-torus.d:] != torus.shape:
        raise ValueError(f"field shape {field_values.shape} does not match torus {torus.shape}")
    return np.fft.fftn(field_values, axes=tuple(range(-torus.d, 0)))


def fft_inverse(mom_values: np.ndarray, torus: TorusSpec) -> np.ndarray:
    """Inverse lattice transform over the trailing d axes."""
    if mom_values.shape[-torus.d:] != torus.shape:
        raise ValueError(f"field shape {mom_values.shape} does not match torus {torus.shape}")
    return np.fft.ifftn(mom_values, axes=tuple(range(-torus.d, 0)))


@dataclass
class Field:
    """n-component real field on the torus, values shaped (n,) + grid shape."""

    torus: TorusSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == self.torus.d:
            v = v[None]
        if v.shape[1:] != self.torus.shape:
            raise ValueError(f"field shape {v.shape} does not match torus {self.torus.shape}")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def mean(self) -> np.ndarray:
        """Volume-averaged field (one value per component)."""
        return self.values.reshape(self.n, -1).mean(axis=1)


# ---------------------------------------------------------------------------
# Green's functions

def green_multiplier(op: OperatorSymbol, torus: TorusSpec) -> np.ndarray:
    """Momentum multiplier of the inverse symbol; zero mode excluded if massless."""
    grid = MomentumGrid(torus)
    lam = grid.lambda_grid()
    sym = op.of_lambda(lam)
    mult = np.zeros_like(sym)
    if op.a_mass > 0.0:
        mult = 1.0 / sym
    else:
        nz = lam > 0.0
        if np.any(sym[nz] <= 0.0):
            raise SymbolError("inverse symbol undefined: non-positive value off the zero mode")
        mult[nz] = 1.0 / sym[nz]
    return mult


def green_function(op: OperatorSymbol, torus: TorusSpec) -> np.ndarray:
    """Real-space kernel with Fourier multiplier 1/symbol.

    Massless symbols are inverted on the zero-mode-excluded subspace, i.e. the
    kernel satisfies (L C)(x) = delta(x) - 1/volume.
    """
    mult = green_multiplier(op, torus)
    kernel = np.fft.ifftn(mult).real
    return kernel


def green_gamma(d: int, eta: float) -> float:
    """Decay constant of the continuum fractional Green's function.

    Returns 2**(-2+eta) * pi**(-d/2) * Gamma((d-2+eta)/2) / Gamma((2-eta)/2);
    the (1 + a_delta)**(-1) factor at eta = 0 is applied by callers.
    """
    if d < 3:
        raise ValueError("green_gamma requires d >= 3")
    if not 0.0 <= eta < 1.0:
        raise ValueError("green_gamma requires eta in [0, 1)")
    lg = gammaln((d - 2.0 + eta) / 2.0) - gammaln((2.0 - eta) / 2.0)
    return 2.0 ** (-2.0 + eta) * math.pi ** (-d / 2.0) * math.exp(lg)
