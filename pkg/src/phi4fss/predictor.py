"""Closed-form finite-size-scaling predictions.

Scales, moments of the quartic zero-mode law exp(-|y|^4/4), moment generating
functions of the three limit measures, the plateau level of the two-point
function, zero- and nonzero-mode susceptibilities, and the critical-window
profile.  Everything is a pure function of (d, eta, n, g, L, N) plus the
derived constants c1..c4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .lattice import green_gamma

QUARTIC_RADIUS = max(8.0, 40.0 ** 0.25 * 4.0)    # exp(-R^4/4) underflows past this


def critical_dimension(eta: float) -> float:
    return 4.0 - 2.0 * max(eta, 0.0)


@dataclass(frozen=True)
class Scales:
    """Field-fluctuation scales of the three scaling regimes."""

    a_n: float
    b_n: float
    c_n: float


def scales(d: int, eta: float, g: float, L: int, N: int) -> Scales:
    """Evaluate a_N = L^{-dN/2}, b_N (regime-split), c_N = L^{-(d-2+eta)N/2}."""
    if d < 4 or not 0.0 <= eta < 0.5 or g <= 0.0:
        raise ValueError("requires d >= 4, eta in [0, 1/2), g > 0")
    a_n = float(L) ** (-d * N / 2.0)
    if abs(d - critical_dimension(eta)) < 1.0e-9:
        b_n = N ** 0.25 * float(L) ** (-N)
    else:
        b_n = g ** -0.25 * float(L) ** (-d * N / 4.0)
    c_n = float(L) ** (-(d - 2.0 + eta) * N / 2.0)
    return Scales(a_n, b_n, c_n)


# ---------------------------------------------------------------------------
# the quartic zero-mode distribution

@dataclass
class YDistribution:
    """R^n law with density proportional to exp(-|x|^4 / 4)."""

    n: int
    _norm: Optional[float] = field(default=None, repr=False)

    def normaliser(self) -> float:
        if self._norm is None:
            self._norm = _radial_quartic_integral(self.n, 0)
        return self._norm

    def radial_moment(self, p: int) -> float:
        """E[|Y|^(2p)]."""
        return _radial_quartic_integral(self.n, 2 * p) / self.normaliser()

    def binder(self) -> float:
        return self.radial_moment(2) / self.radial_moment(1) ** 2


def _radial_quartic_integral(n: int, k: int) -> float:
    """integral_0^inf r^(k + n - 1) exp(-r^4/4) dr by adaptive quadrature."""
    val, err = quad(lambda r: r ** (k + n - 1) * math.exp(-0.25 * r ** 4),
                    0.0, QUARTIC_RADIUS, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def _radial_quartic_closed(n: int, k: int) -> float:
    """Closed form 4^((k+n)/4 - 1) * Gamma((k+n)/4) * 4 / ... for oracles."""
    a = (k + n) / 4.0
    return 4.0 ** (a - 1) * math.exp(gammaln(a)) * 4.0 / 4.0


def y_moment(n: int, p: int, direction: Union[str, Sequence[float]] = "radial") -> float:
    """Moment E[|lambda . Y|^(2p)] (unit lambda) or E[|Y|^(2p)] (radial).

    Radial moments reduce to one-dimensional quadrature for any n; axis
    moments use the (y_parallel, r_perp) reduction, two-dimensional for n >= 2.
    Odd powers vanish by symmetry and p counts the half-power, so inputs are
    validated as integers p >= 0.
    """
    if p < 0 or int(p) != p:
        raise ValueError("p must be a nonnegative integer")
    dist = YDistribution(n)
    if isinstance(direction, str):
        if direction == "radial":
            return dist.radial_moment(p)
        if direction != "axis":
            raise ValueError(f"unknown direction {direction!r}")
    if n == 1:
        return dist.radial_moment(p)

    def inner(y1: float) -> float:
        f = lambda r: r ** (n - 2) * math.exp(-0.25 * (y1 * y1 + r * r) ** 2)
        val, _ = quad(f, 0.0, QUARTIC_RADIUS, epsabs=1e-14, epsrel=1e-11, limit=200)
        return val

    num, _ = quad(lambda y: y ** (2 * p) * inner(y), 0.0, QUARTIC_RADIUS,
                  epsabs=1e-14, epsrel=1e-11, limit=200)
    den, _ = quad(inner, 0.0, QUARTIC_RADIUS, epsabs=1e-14, epsrel=1e-11, limit=200)
    return num / den


def y_moment_tensor_oracle(n: int, p: int, nodes: int = 161) -> float:
    """Independent tensor-Simpson evaluation of E[(e1 . Y)^(2p)] for n <= 3."""
    if n > 3:
        raise ValueError("tensor oracle implemented for n <= 3")
    R = QUARTIC_RADIUS
    y = np.linspace(-R, R, nodes)
    w = np.ones(nodes)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (y[1] - y[0]) / 3.0
    grids = np.meshgrid(*([y] * n), indexing="ij")
    r2 = sum(gg ** 2 for gg in grids)
    dens = np.exp(-0.25 * r2 ** 2)
    wt = w
    for _ in range(n - 1):
        wt = np.multiply.outer(wt, w)
    num = float(np.sum(wt * grids[0] ** (2 * p) * dens))
    den = float(np.sum(wt * dens))
    return num / den


# ---------------------------------------------------------------------------
# limit-measure moment generating functions

class TestFunctionError(ValueError):
    pass


def _coeff_map(f: Mapping) -> Dict[Tuple[int, ...], np.ndarray]:
    out = {}
    for k, v in f.items():
        key = tuple(int(c) for c in (k if isinstance(k, tuple) else (k,)))
        out[key] = np.atleast_1d(np.asarray(v, dtype=complex))
    return out


def limit_mgf(measure: str, f: Mapping, n: int = 1, s: float = 1.0,
              eta: float = 0.0) -> float:
    """MGF of the WN(s) / GF(eta) / NG limit measure at the test function f.

    f maps integer frequency tuples k (momentum 2 pi k on the unit torus) to
    component coefficients; f(x) = sum_k f_k exp(2 pi i k.x) with Hermitian
    symmetry assumed.  Finite coefficient sets are evaluated exactly.
    """
    coeffs = _coeff_map(f)
    measure = measure.upper()
    if measure.startswith("WN"):
        norm2 = sum(float(np.sum(np.abs(v) ** 2)) for v in coeffs.values())
        return math.exp(norm2 / (2.0 * s))
    if measure.startswith("GF"):
        zero = coeffs.get((0,) * len(next(iter(coeffs))) if coeffs else (0,), None)
        if zero is not None and np.any(np.abs(zero) > 1e-14):
            raise TestFunctionError("GF measure requires a mean-zero test function")
        quad_form = 0.0
        for k, v in coeffs.items():
            q2 = sum(c * c for c in k) * (2.0 * math.pi) ** 2
            if q2 == 0.0:
                continue
            quad_form += float(np.sum(np.abs(v) ** 2)) / q2 ** (1.0 - eta / 2.0)
        return math.exp(quad_form / 2.0)
    if measure.startswith("NG"):
        dim = len(next(iter(coeffs))) if coeffs else 1
        phi = coeffs.get((0,) * dim, np.zeros(n))
        phi = np.real(phi)
        if len(phi) != n:
            raise TestFunctionError(f"zero-mode coefficient must have {n} components")
        return ng_mgf(np.asarray(phi, dtype=float))
    raise ValueError(f"unknown measure {measure!r}")


def ng_mgf(phi: np.ndarray) -> float:
    """integral exp(-|x|^4/4 + phi.x) dx / integral exp(-|x|^4/4) dx on R^n."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n = len(phi)
    amp = float(np.linalg.norm(phi))
    if amp == 0.0:
        return 1.0
    if n == 1:
        num, _ = quad(lambda y: math.exp(-0.25 * y ** 4 + amp * y),
                      -QUARTIC_RADIUS - amp ** (1 / 3.0), QUARTIC_RADIUS + amp ** (1 / 3.0),
                      epsabs=1e-14, epsrel=1e-12, limit=300)
        den = 2.0 * _radial_quartic_integral(1, 0)
        return num / den

    def inner(y1: float) -> float:
        f = lambda r: r ** (n - 2) * math.exp(-0.25 * (y1 * y1 + r * r) ** 2)
        val, _ = quad(f, 0.0, QUARTIC_RADIUS, epsabs=1e-14, epsrel=1e-11, limit=200)
        return val

    lim = QUARTIC_RADIUS + amp ** (1 / 3.0)
    num, _ = quad(lambda y: math.exp(amp * y) * inner(y), -lim, lim,
                  epsabs=1e-14, epsrel=1e-11, limit=300)
    den, _ = quad(inner, -lim, lim, epsabs=1e-14, epsrel=1e-11, limit=300)
    return num / den


def ng_mgf_series(phi: np.ndarray, n: int, terms: int = 40) -> float:
    """Series oracle sum_p Phi^{2p} E[(e.Y)^{2p}] / (2p)! for the NG MGF."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    amp = float(np.linalg.norm(phi))
    total = 0.0
    for p in range(terms):
        mom = y_moment(n, p, "axis") if p > 0 else 1.0
        term = amp ** (2 * p) * mom / math.factorial(2 * p)
        total += term
        if p > 2 and term < 1e-16 * abs(total):
            break
    return total


# ---------------------------------------------------------------------------
# constants and observables

@dataclass(frozen=True)
class FssConstants:
    """Derived constants with their regime tag and O(g) half-widths."""

    c1: float
    c2: float
    c3: float
    c4: float
    regime: str                       # "critical_dimension" | "above"
    c1_band: float = 0.0
    c2_band: float = 0.0


def fss_constants(d: int, eta: float, n: int, g: float,
                  a_delta_critical: float = 0.0) -> FssConstants:
    """Evaluate c1..c4.

    At d = d_cu: c2 = sqrt(n+8)/(4 pi), c3 = c2^{-2}; above: c2 = 1 with an
    O(g) band of half-width 5g.  c1 = gamma(d, eta) exactly for eta > 0 and
    gamma(d,0)/(1 + a_delta) with an O(g) band at eta = 0; c4 = gamma/c1.
    """
    gam = green_gamma(d, eta)
    at_dcu = abs(d - critical_dimension(eta)) < 1.0e-9
    if eta == 0.0:
        c1 = gam / (1.0 + a_delta_critical)
        c1_band = 5.0 * g * gam
    else:
        c1 = gam
        c1_band = 0.0
    if at_dcu:
        c2 = math.sqrt(n + 8.0) / (4.0 * math.pi)
        c2_band = 0.0
        regime = "critical_dimension"
    else:
        c2 = 1.0
        c2_band = 5.0 * g
        regime = "above"
    return FssConstants(c1=c1, c2=c2, c3=c2 ** -2, c4=gam / c1, regime=regime,
                        c1_band=c1_band, c2_band=c2_band)


def plateau_two_point(x_norm: float, d: int, eta: float, n: int, g: float,
                      L: int, N: int, constants: FssConstants,
                      green_ref: Optional[float] = None) -> float:
    """Two-point prediction C_x + c2 E[|Y|^2]/n * b_N^2.

    green_ref supplies the reference kernel value C_x; when absent the
    asymptote c1 |x|^{-(d-2+eta)} is used.
    """
    c_x = green_ref if green_ref is not None else constants.c1 * x_norm ** -(d - 2.0 + eta)
    b_n = scales(d, eta, g, L, N).b_n
    ey2 = YDistribution(n).radial_moment(1)
    return c_x + constants.c2 * ey2 / n * b_n ** 2


def plateau_crossover_radius(d: int, eta: float, n: int, g: float, L: int, N: int,
                             constants: FssConstants) -> float:
    """|x*| where the power-law and plateau summands are equal."""
    b_n = scales(d, eta, g, L, N).b_n
    ey2 = YDistribution(n).radial_moment(1)
    return (constants.c1 * n / (constants.c2 * ey2 * b_n ** 2)) ** (1.0 / (d - 2.0 + eta))


def chi_predictions(d: int, eta: float, n: int, g: float, L: int, N: int,
                    constants: FssConstants,
                    k: Sequence[float] = ()) -> float:
    """Susceptibility of the k-mode: the zero mode follows the non-standard
    scaling c3^{-1/2} E[|Y|^2] (N^{1/2} L^{2N} or L^{dN/2}); nonzero modes
    follow n c4^{-1} |k|^{-(2-eta)} L^{(2-eta)N}."""
    k = np.asarray(list(k), dtype=float) if len(k) else np.zeros(d)
    if np.any(k != 0.0):
        knorm = float(np.linalg.norm(k))
        return n / constants.c4 * knorm ** -(2.0 - eta) * float(L) ** ((2.0 - eta) * N)
    ey2 = YDistribution(n).radial_moment(1)
    if abs(d - critical_dimension(eta)) < 1.0e-9:
        vol_factor = N ** 0.5 * float(L) ** (2 * N)
    else:
        vol_factor = float(L) ** (d * N / 2.0)
    return constants.c3 ** -0.5 * ey2 * vol_factor


def window_profile(s: float, n: int, c: float = 1.0) -> float:
    """Susceptibility profile across the critical window,
    integral |y|^2 exp(-|y|^4/4 - c s |y|^2) dy normalised to 1 at s = 0."""
    def mom2(shift: float) -> float:
        f = lambda r: r ** (n + 1) * math.exp(-0.25 * r ** 4 - shift * r * r)
        hi = QUARTIC_RADIUS + (abs(shift) ** 0.5 if shift < 0 else 0.0) * 2.0
        val, _ = quad(f, 0.0, hi, epsabs=1e-15, epsrel=1e-11, limit=300)
        return val

    return mom2(c * s) / mom2(0.0)


def predictions_record(d: int, eta: float, n: int, g: float, L: int, N: int,
                       k_list: Sequence[Sequence[float]] = ((),),
                       a_delta_critical: float = 0.0) -> Dict:
    """JSON-ready prediction record keyed by the parameter tuple."""
    consts = fss_constants(d, eta, n, g, a_delta_critical)
    sc = scales(d, eta, g, L, N)
    at_dcu = abs(d - critical_dimension(eta)) < 1.0e-9
    rec = {
        "d": d, "eta": eta, "n": n, "g": g, "L": L, "N": N,
        "a_N": sc.a_n, "b_N": sc.b_n, "c_N": sc.c_n,
        "c1": consts.c1, "c2": consts.c2, "c3": consts.c3, "c4": consts.c4,
        "regime": consts.regime,
        "chi_volume_exponent": 0.5,
        "chi_log_corrected": bool(at_dcu),
        "E_Y2": YDistribution(n).radial_moment(1),
        "binder_target": YDistribution(n).binder(),
        "chi": {},
    }
    for k in k_list:
        key = "0" if not len(k) or not np.any(np.asarray(k)) else ",".join(str(v) for v in k)
        rec["chi"][key] = chi_predictions(d, eta, n, g, L, N, consts, k)
    return rec
