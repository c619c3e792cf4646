"""Finite-range covariance decompositions of the modified-Laplacian inverse.

The inverse symbol is split into scale slices Gamma_1..Gamma_{N-1}, a torus
tail, and a zero-mode weight t_N times the constant kernel Q_N(x,y) = V^{-1}:

    1/symbol  =  sum_j Gamma_j  +  Gamma_N^Lambda  +  t_N * Q_N .

Two backends:

* FOURIER_WINDOW: each momentum mode is released across scales by a smooth
  cumulative profile 1 - exp(-(t/c)^2 lam - a (t/c)^(2 beta)).  The telescoping
  sum makes the decomposition exact to rounding; slice kernels are
  heat-kernel-like and localised (Gaussian tails at eta = 0, residual
  power-law tails at eta > 0).

* POLY_FINITE_RANGE: slices are t-integrals of operator polynomials of degree
  <= t/(2d) built from the ptfamily kernels, so the range bound is exact; the
  reconstruction is accurate to the family identity tolerance.  For eta > 0
  the polynomial argument comes from the spectral representation of the
  fractional power, with a Neumann series absorbing the Delta counterterm.

Every multiplier here is a scalar function of the Laplacian symbol, so all
momentum sums run over the unique symbol values with multiplicities.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import ive

from .lattice import OperatorSymbol, TorusSpec, lambda_rfft_grid, unique_lambda, validate_symbol
from .ptfamily import PtFamily, build_family, positive_kernel

WINDOW_SCALE = 4.0          # crossover scale of the smooth window, in lattice units
PSD_FLOOR = -1.0e-12


class Backend(str, Enum):
    FOURIER_WINDOW = "fourier_window"
    POLY_FINITE_RANGE = "poly_finite_range"


class DecompositionError(RuntimeError):
    pass


class UnsupportedConfiguration(DecompositionError):
    pass


class QuadratureError(RuntimeError):
    """Quadrature did not reach the requested accuracy; carries the estimate."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error {achieved:.3e})")
        self.achieved = achieved


# ---------------------------------------------------------------------------
# spectral representation of the fractional power

def sigma_beta(s, z, beta: float):
    """Denominator weight of the fractional-power integrand; > 0 for s > 0."""
    sb = np.asarray(s, dtype=np.float64) ** (-beta)
    return 1.0 + (sb * z) ** 2 + 2.0 * z * sb * math.cos(math.pi * beta)


def spectral_fraction(w: float, z: float, beta: float, rtol: float = 1.0e-8) -> float:
    """Evaluate 1/(w**beta + z) through its spectral integral.

    Integrates sin(pi beta)/pi * s**(-beta) / ((w+s) sigma_beta(s,z)) over
    s > 0 by adaptive quadrature in log s.  Raises QuadratureError when the
    reported error exceeds rtol relative to the result.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if w < 0.0 or z < 0.0 or w ** beta + z <= 0.0:
        raise ValueError("requires w, z >= 0 with w**beta + z > 0")

    def integrand(x):
        s = math.exp(x)
        return s ** (1.0 - beta) / ((w + s) * sigma_beta(s, z, beta))

    val, err = quad(integrand, -220.0, 60.0, limit=400, epsabs=0.0, epsrel=1e-12)
    val *= math.sin(math.pi * beta) / math.pi
    err *= math.sin(math.pi * beta) / math.pi
    if val <= 0.0 or err > rtol * val:
        raise QuadratureError("spectral integral did not converge", err / max(val, 1e-300))
    return val


# ---------------------------------------------------------------------------
# slices

@dataclass
class CovSlice:
    """One covariance slice as a multiplier over the unique symbol values.

    values[k] is the Fourier multiplier at Laplacian-symbol value lam[k];
    counts[k] is the number of grid momenta sharing that value.  zero_limit is
    the p -> 0 limit of the infinite-lattice multiplier (the slice's summed
    kernel on Z^d) used by the flow tables; it differs from the lam = 0 entry
    only on massless tori, where the torus zero mode is excluded.
    """

    j: int
    torus: TorusSpec
    lam: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    zero_limit: float
    is_torus_tail: bool = False
    _kernel: Optional[np.ndarray] = field(default=None, repr=False)

    def value_at_origin(self) -> float:
        """Real-space kernel value Gamma_j(0) = V^{-1} sum_p multiplier(p)."""
        return float(np.dot(self.counts, self.values)) / self.torus.volume

    def sum_over_sites(self) -> float:
        """sum_x Gamma_j(x) on the torus (the p = 0 multiplier entry)."""
        return float(self.values[0]) if self.lam[0] == 0.0 else 0.0

    def multiplier_rfft(self) -> np.ndarray:
        grid = lambda_rfft_grid(self.torus)
        return np.interp(grid, self.lam, self.values)

    def kernel(self) -> np.ndarray:
        """Real-space kernel; cached."""
        if self._kernel is None:
            mult = self.multiplier_rfft()
            axes = tuple(range(self.torus.d))
            self._kernel = np.fft.irfftn(mult, s=self.torus.shape, axes=axes)
        return self._kernel

    def min_multiplier(self) -> float:
        return float(self.values.min())


@dataclass
class SpectralPath:
    """Fixed quadrature and series data of the eta > 0 polynomial backend."""

    beta: float
    s_nodes: np.ndarray
    s_weights: np.ndarray
    neumann_order: int = 0
    neumann_ratio: float = 0.0


@dataclass
class CovarianceDecomposition:
    """Slices Gamma_1..Gamma_{N-1}, torus tail, and zero-mode weight t_N.

    t_n is None for massless symbols: the zero mode is excluded and the weight
    enters all reductions through the t_N^{-1} = 0 convention.
    """

    torus: TorusSpec
    op: OperatorSymbol
    backend: Backend
    slices: List[CovSlice]
    tail: CovSlice
    t_n: Optional[float]
    spectral: Optional[SpectralPath] = None

    def all_slices(self) -> List[CovSlice]:
        return [*self.slices, self.tail]

    def w_values(self, j: int) -> np.ndarray:
        """Multiplier of the partial sum w_j = Gamma_1 + .. + Gamma_j; j = N
        includes the torus tail; j = 0 gives zeros."""
        if not 0 <= j <= self.torus.N:
            raise ValueError(f"w_j defined for 0 <= j <= N, got {j}")
        out = np.zeros_like(self.tail.values)
        for sl in self.all_slices()[:j]:
            out = out + sl.values
        return out

    def w_kernel(self, j: int) -> np.ndarray:
        grid = lambda_rfft_grid(self.torus)
        mult = np.interp(grid, self.tail.lam, self.w_values(j))
        return np.fft.irfftn(mult, s=self.torus.shape, axes=tuple(range(self.torus.d)))

    def w_zero_limit(self, j: int) -> float:
        """Z^d limit of the p -> 0 partial-sum multiplier (sum_x w_j(x))."""
        return float(sum(sl.zero_limit for sl in self.all_slices()[:j]))

    def sum_w_squared(self, j: int) -> float:
        """sum_x w_j(x)^2 on the torus, by Parseval over unique symbol values."""
        vals = self.w_values(j)
        return float(np.dot(self.tail.counts, vals ** 2)) / self.torus.volume

    def exactness_residual(self) -> float:
        """Max relative deviation of the reconstructed multiplier from 1/symbol."""
        lam = self.tail.lam
        nz = lam > 0.0
        total = self.w_values(self.torus.N)
        sym = self.op.of_lambda(lam)
        rel = np.abs(total[nz] * sym[nz] - 1.0)
        res = float(rel.max())
        if self.op.a_mass > 0.0 and lam[0] == 0.0:
            zero_total = total[0] + (self.t_n or 0.0)
            res = max(res, abs(zero_total * self.op.a_mass - 1.0))
        return res

    def decay_exponent_fit(self, j_lo: int = 2, j_hi: Optional[int] = None) -> Tuple[float, float]:
        """Fit log Gamma_j(0) ~ -rho * j * log L; returns (rho, max log-fit error)."""
        j_hi = j_hi if j_hi is not None else self.torus.N - 1
        js = np.arange(j_lo, j_hi + 1)
        sups = np.array([self.slices[j - 1].value_at_origin() for j in js])
        if np.any(sups <= 0.0):
            raise DecompositionError("non-positive slice sup; cannot fit decay")
        coeff = np.polyfit(js, np.log(sups), 1)
        rho = -coeff[0] / math.log(self.torus.L)
        resid = np.max(np.abs(np.polyval(coeff, js) - np.log(sups)))
        return float(rho), float(resid)

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        """Binary cache: length-prefixed JSON header, then little-endian
        float64 blocks (unique symbol values, counts, per-slice multipliers)."""
        header = {
            "d": self.torus.d, "L": self.torus.L, "N": self.torus.N,
            "eta": self.op.eta, "a_mass": self.op.a_mass, "a_delta": self.op.a_delta,
            "higher_terms": list(map(list, self.op.higher_terms)),
            "backend": self.backend.value,
            "t_n": self.t_n,
            "n_lam": int(len(self.tail.lam)),
            "zero_limits": [sl.zero_limit for sl in self.all_slices()],
        }
        with open(path, "wb") as fh:
            hdr = json.dumps(header, sort_keys=True).encode()
            fh.write(struct.pack("<I", len(hdr)))
            fh.write(hdr)
            fh.write(np.asarray(self.tail.lam, dtype="<f8").tobytes())
            fh.write(np.asarray(self.tail.counts, dtype="<f8").tobytes())
            for sl in self.all_slices():
                fh.write(np.asarray(sl.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "CovarianceDecomposition":
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode())
            n_lam = header["n_lam"]
            torus = TorusSpec(header["d"], header["L"], header["N"])
            op = OperatorSymbol(header["eta"], header["a_mass"], header["a_delta"],
                                tuple(tuple(t) for t in header["higher_terms"]))
            lam = np.frombuffer(fh.read(8 * n_lam), dtype="<f8").copy()
            counts = np.frombuffer(fh.read(8 * n_lam), dtype="<f8").copy()
            zlims = [float(z) if z is not None else math.inf for z in header["zero_limits"]]
            slices = []
            for j in range(1, torus.N):
                vals = np.frombuffer(fh.read(8 * n_lam), dtype="<f8").copy()
                slices.append(CovSlice(j, torus, lam, counts, vals, zlims[j - 1]))
            tvals = np.frombuffer(fh.read(8 * n_lam), dtype="<f8").copy()
            tail = CovSlice(torus.N, torus, lam, counts, tvals, zlims[-1], is_torus_tail=True)
        return cls(torus, op, Backend(header["backend"]), slices, tail, header["t_n"])

    def write_csv(self, path, max_sites: int = 65536) -> None:
        """Per-slice real-space kernels as CSV rows (x..., j, value)."""
        if self.torus.volume > max_sites:
            raise DecompositionError("torus too large for kernel CSV export")
        coords = self.torus.coord_axis()
        with open(path, "w") as fh:
            fh.write(",".join(f"x{i}" for i in range(self.torus.d)) + ",j,gamma\n")
            for sl in self.all_slices():
                ker = sl.kernel()
                for idx in np.ndindex(*self.torus.shape):
                    xs = ",".join(str(int(coords[i])) for i in idx)
                    fh.write(f"{xs},{sl.j},{ker[idx]:.17g}\n")


def _scale_windows(torus: TorusSpec) -> List[Tuple[float, float]]:
    """t-windows of Gamma_1 .. Gamma_{N-1}: [0, L], (L, L^2], .."""
    wins = [(0.0, float(torus.L))]
    wins += [(float(torus.L ** (j - 1)), float(torus.L ** j)) for j in range(2, torus.N)]
    return wins


# ---------------------------------------------------------------------------
# FOURIER_WINDOW backend

def _window_exponent(op: OperatorSymbol, t: float, lam: np.ndarray) -> np.ndarray:
    u = t / WINDOW_SCALE
    return (u * u) * lam + op.a_mass * u ** (2.0 * op.beta)


def _window_zero_limit(op: OperatorSymbol, t_lo: float, t_hi: Optional[float]) -> float:
    """p -> 0 limit of the slice multiplier on Z^d for the window [t_lo, t_hi]."""
    a = op.a_mass
    if a > 0.0:
        e_lo = math.exp(-a * (t_lo / WINDOW_SCALE) ** (2.0 * op.beta)) if t_lo > 0 else 1.0
        e_hi = math.exp(-a * (t_hi / WINDOW_SCALE) ** (2.0 * op.beta)) if t_hi is not None else 0.0
        return (e_lo - e_hi) / a
    if op.eta == 0.0:
        if t_hi is None:
            return math.inf
        return ((t_hi / WINDOW_SCALE) ** 2 - (t_lo / WINDOW_SCALE) ** 2) / (1.0 + op.a_delta)
    # eta > 0 massless: the smooth window assigns no weight to the zero mode
    return 0.0 if t_hi is not None else math.inf


def _decompose_window(op: OperatorSymbol, torus: TorusSpec) -> CovarianceDecomposition:
    lam, counts = unique_lambda(torus)
    sym = op.of_lambda(lam)
    massless = op.a_mass == 0.0
    nz = lam > 0.0
    inv = np.zeros_like(lam)
    inv[nz] = 1.0 / sym[nz]
    if not massless:
        inv[~nz] = 1.0 / op.a_mass

    survivals = [np.ones_like(lam)]
    for j in range(1, torus.N):
        survivals.append(np.exp(-_window_exponent(op, float(torus.L ** j), lam)))

    slices = []
    for j, (t_lo, t_hi) in enumerate(_scale_windows(torus), start=1):
        vals = (survivals[j - 1] - survivals[j]) * inv
        if massless:
            vals[~nz] = 0.0
        slices.append(CovSlice(j, torus, lam, counts, vals,
                               _window_zero_limit(op, t_lo, t_hi)))

    tail_vals = survivals[torus.N - 1] * inv
    tail_vals[~nz] = 0.0
    tail = CovSlice(torus.N, torus, lam, counts, tail_vals,
                    _window_zero_limit(op, float(torus.L ** (torus.N - 1)), None),
                    is_torus_tail=True)
    t_val = None if massless else float(survivals[torus.N - 1][0]) / op.a_mass
    return CovarianceDecomposition(torus, op, Backend.FOURIER_WINDOW, slices, tail, t_val)


# ---------------------------------------------------------------------------
# POLY_FINITE_RANGE backend, eta = 0

def _poly_bin_values(torus: TorusSpec, nodes: List[Tuple[float, np.ndarray]],
                     const_density, const_extent: float, size: int,
                     shift: float = 0.0) -> List[np.ndarray]:
    """Accumulate node contributions (t_k, array) into the N windows
    ([0, L], (L, L^2], .., tail], with every t displaced by `shift`.

    The constant-density region (propagation below the lattice scale) covers
    t in [shift, const_extent + shift) and is integrated analytically.
    """
    windows = _scale_windows(torus) + [(float(torus.L ** (torus.N - 1)), math.inf)]
    edges = np.array([w[1] for w in windows[:-1]])
    out = [np.zeros(size) for _ in windows]
    for i, (t_lo, t_hi) in enumerate(windows):
        lo = max(t_lo, shift)
        hi = min(t_hi, const_extent + shift)
        if hi > lo:
            out[i] = out[i] + (hi - lo) * const_density
    for t_k, arr in nodes:
        w_idx = int(np.searchsorted(edges, t_k + shift, side="left"))
        out[w_idx] = out[w_idx] + arr
    return out


def _decompose_poly_eta0(op: OperatorSymbol, torus: TorusSpec) -> CovarianceDecomposition:
    fam = build_family()
    d = torus.d
    lam, counts = unique_lambda(torus)
    x = op.of_lambda(lam) / (4.0 * d)
    t_nodes = 2.0 * d * fam.t_nodes

    nodes = []
    for k in range(len(t_nodes)):
        if fam.amplitudes[k] == 0.0:
            continue
        # Gamma_dot_t = (t/16d^3) P_{t/2d}(symbol/4d); dt = 2d ds
        wk = (t_nodes[k] / (16.0 * d ** 3)) * (2.0 * d * fam.t_weights[k])
        nodes.append((float(t_nodes[k]), wk * fam.eval_node(k, x)))

    const_density = np.full_like(lam, fam.c_small / (8.0 * d * d))
    bins = _poly_bin_values(torus, nodes, const_density, 2.0 * d, len(lam))
    return _assemble_poly(op, torus, lam, counts, bins, Backend.POLY_FINITE_RANGE, None)


# ---------------------------------------------------------------------------
# POLY_FINITE_RANGE backend, eta > 0 (spectral integral + Neumann series)

def _spectral_s_rule() -> Tuple[np.ndarray, np.ndarray]:
    """Log-trapezoid nodes and ds-weights for integral_0^inf (..) ds."""
    h = 0.25
    xs = np.arange(-130.0, 46.0 + h, h)
    s = np.exp(xs)
    w = np.full_like(s, h) * s
    w[0] *= 0.5
    w[-1] *= 0.5
    return s, w


def _decompose_poly_spectral(op: OperatorSymbol, torus: TorusSpec) -> CovarianceDecomposition:
    if op.higher_terms:
        raise UnsupportedConfiguration(
            "POLY_FINITE_RANGE with eta > 0 supports no higher-derivative "
            "counterterms beyond the implemented degree")
    fam = build_family()
    beta = op.beta
    d = torus.d
    lam, counts = unique_lambda(torus)
    lam_max = float(lam.max())

    # regulariser c_F * lam keeps the Neumann numerator c_F*lam - delta >= 0
    cf = max(op.a_delta, 0.0) + (0.01 if op.a_delta != 0.0 else 0.0)
    z_hi = op.a_mass + cf * lam_max
    lam_tilde = lam ** beta + op.a_mass + cf * lam

    s_nodes, s_ds = _spectral_s_rule()
    front = math.sin(math.pi * beta) / math.pi
    sig_cap = np.maximum(sigma_beta(s_nodes, z_hi, beta), 1.0)
    m_s = 2.94 / ((lam_max + s_nodes) * sig_cap)
    s_pref = front * s_ds * s_nodes ** (-beta) * m_s

    # prune s-nodes whose exact integrand is negligible across the whole grid;
    # the smallest nonzero mode sets the scale (the zero mode has no 1/sym target)
    z_lam = op.a_mass + cf * lam
    lam_lo = float(lam[lam > 0.0].min()) if op.a_mass == 0.0 else float(lam.min())
    z_lo = op.a_mass + cf * lam_lo
    true_den = (lam_lo + s_nodes) * np.minimum(sigma_beta(s_nodes, z_lo, beta),
                                               sigma_beta(s_nodes, 0.5 * z_lo, beta))
    est = s_ds * s_nodes ** (-beta) / true_den
    keep = est > 1.0e-16 * est.sum()
    s_nodes, s_pref, m_s = s_nodes[keep], s_pref[keep], m_s[keep]

    sig = sigma_beta(s_nodes[:, None], z_lam[None, :], beta)
    b_arg = m_s[:, None] * (lam[None, :] + s_nodes[:, None]) * sig
    if float(b_arg.max()) > 3.0:
        raise DecompositionError("spectral polynomial argument left (0, 3]")

    t_nodes = 2.0 * d * fam.t_nodes
    r2 = (2.0 * d) ** 2

    nodes = []
    accum = 0.0
    stall = 0
    for k in range(len(t_nodes)):
        if fam.amplitudes[k] == 0.0:
            continue
        pk = fam.amplitudes[k] * positive_kernel(int(fam.degrees[k]), b_arg)
        wk = (t_nodes[k] / r2) * (2.0 * d * fam.t_weights[k])
        arr = wk * (s_pref @ pk)
        top = float(arr.max())
        accum = max(accum, top)
        if t_nodes[k] > 4.0 * d and top < 1.0e-13 * accum:
            stall += 1
            if stall > 24:
                break
        else:
            stall = 0
        nodes.append((float(t_nodes[k]), arr))

    const_density = (fam.c_small * 2.0 * d / r2) * float(s_pref.sum()) * np.ones_like(lam)
    bins = _poly_bin_values(torus, nodes, const_density, 2.0 * d, len(lam))

    # Neumann series: 1/symbol = sum_n ((cf - a_delta) lam)^n lam_tilde^{-(n+1)};
    # the order-n profile is the order-0 one displaced by the 2dn range of the
    # series factor, an exact-total assignment that respects range < t
    q = np.zeros_like(lam)
    pos = lam_tilde > 0.0
    q[pos] = (cf - op.a_delta) * lam[pos] / lam_tilde[pos]
    q_max = float(q.max())
    order = 0
    if q_max > 0.0:
        if q_max >= 0.5:
            raise DecompositionError(f"Neumann contraction too weak (ratio {q_max:.3f})")
        total0 = np.sum(bins, axis=0)
        cap = float(np.max(total0 / (1.0 - q)))
        n = 1
        while True:
            factor = q ** n
            if float(np.max(factor * total0)) < 1.0e-12 * cap:
                break
            shifted = _poly_bin_values(torus, nodes, const_density, 2.0 * d,
                                       len(lam), shift=2.0 * d * n)
            for i in range(len(bins)):
                bins[i] = bins[i] + factor * shifted[i]
            n += 1
            if n > 60:
                raise DecompositionError("Neumann series failed to truncate")
        order = n

    spath = SpectralPath(beta=beta, s_nodes=s_nodes, s_weights=s_pref,
                         neumann_order=order, neumann_ratio=q_max)
    return _assemble_poly(op, torus, lam, counts, bins, Backend.POLY_FINITE_RANGE, spath)


def _assemble_poly(op, torus, lam, counts, bins, backend, spath) -> CovarianceDecomposition:
    massless = op.a_mass == 0.0
    nz = lam > 0.0
    slices = []
    for j in range(1, torus.N):
        vals = bins[j - 1]
        zero_limit = float(vals[0]) if lam[0] == 0.0 else 0.0
        if massless:
            vals = vals.copy()
            vals[~nz] = 0.0
        slices.append(CovSlice(j, torus, lam, counts, vals, zero_limit))
    tail_vals = bins[-1].copy()
    tail_vals[~nz] = 0.0
    tail = CovSlice(torus.N, torus, lam, counts, tail_vals, math.inf, is_torus_tail=True)
    t_val = None
    if not massless:
        low = sum(float(sl.values[0]) for sl in slices)
        t_val = 1.0 / op.a_mass - low
        if t_val <= 0.0:
            raise DecompositionError(f"t_N closure non-positive ({t_val:.3e})")
    return CovarianceDecomposition(torus, op, backend, slices, tail, t_val, spectral=spath)


# ---------------------------------------------------------------------------
# public operations

def decompose(op: OperatorSymbol, torus: TorusSpec,
              backend: Backend = Backend.FOURIER_WINDOW) -> CovarianceDecomposition:
    """Build the finite-range decomposition of 1/symbol on the torus."""
    validate_symbol(op, torus)
    if backend == Backend.FOURIER_WINDOW:
        return _decompose_window(op, torus)
    if op.eta == 0.0:
        return _decompose_poly_eta0(op, torus)
    return _decompose_poly_spectral(op, torus)


def t_n(op: OperatorSymbol, torus: TorusSpec,
        backend: Backend = Backend.FOURIER_WINDOW) -> float:
    """Zero-mode weight: 1/a_mass minus the below-cutoff zero-mode integral."""
    if op.a_mass <= 0.0:
        raise ValueError("t_N requires a_mass > 0 (massless weight is excluded)")
    dec = decompose(op, torus, backend)
    assert dec.t_n is not None
    return dec.t_n


def bubble_beta(decomp: CovarianceDecomposition, j: int, n: int) -> float:
    """Bubble increment (8+n) * sum_x (w_{j+1}^2(x) - w_j^2(x))."""
    if not 0 <= j <= decomp.torus.N - 1:
        raise ValueError(f"bubble increment needs 0 <= j <= N-1, got {j}")
    return (8.0 + n) * (decomp.sum_w_squared(j + 1) - decomp.sum_w_squared(j))


def continuum_bubble(n: int, L: int) -> float:
    """Continuum momentum-shell value of the bubble increment at d = 4,
    (n+8) ln L / (8 pi^2)."""
    return (n + 8.0) * math.log(L) / (8.0 * math.pi ** 2)


# ---------------------------------------------------------------------------
# windowed infinite-lattice Green's function (eta = 0)

def zd_window_green(op: OperatorSymbol, displacements: Sequence[Sequence[int]],
                    t_cut: float) -> np.ndarray:
    """Partial-sum Green's function on Z^d for eta = 0, evaluated pointwise.

    Equals the sum of all window-backend slices up to scale t_cut, computed
    exactly on the infinite lattice through the separable heat kernel
    exp(s*Delta)(x) = prod_i e^{-2s} I_{x_i}(2s); no torus wrap-around.
    """
    if op.eta != 0.0 or op.a_delta != 0.0 or op.higher_terms:
        raise UnsupportedConfiguration("zd_window_green supports eta=0, a_delta=0 only")
    tau = (t_cut / WINDOW_SCALE) ** 2
    out = []
    for x in displacements:
        xs = [abs(int(c)) for c in x]

        def integrand(s):
            val = math.exp(-op.a_mass * s)
            for c in xs:
                val *= ive(c, 2.0 * s)
            return val

        val, err = quad(integrand, 0.0, tau, limit=300, epsabs=1e-14, epsrel=1e-10)
        if err > max(1e-12, 1e-8 * abs(val)):
            raise QuadratureError("windowed Green quadrature did not converge", err)
        out.append(val)
    return np.array(out)
