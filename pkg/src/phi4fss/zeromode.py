"""Zero-mode integral reductions and the tiny-lattice oracles behind them.

The moment generating function and the two-point function of the lattice
measure reduce exactly to n-dimensional integrals over the constant-field
direction, weighted by exp(-t_N^{-1} V |y|^2 / 2) (weight absent for massless
symbols).  Production evaluators replace the renormalised integrand Z_N by
exp(-V_N) with the quadratic-plus-quartic endpoint potential; the brute-force
oracles in this module instead evaluate Z_N as a true Gaussian convolution
and the left-hand sides as full tensor quadratures, which verifies the exact
identities on lattices with a handful of scalar degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .frd import CovarianceDecomposition
from .lattice import OperatorSymbol, TorusSpec, unique_lambda
from .predictor import YDistribution

EXP_DROP = 42.0      # integrand support cutoff: e^-42 ~ 5e-19


class ReductionError(RuntimeError):
    pass


@dataclass
class EffectivePotentialZero:
    """Endpoint potential V(phi) = sum_x (nu |phi_x|^2/2 + g |phi_x|^4/4)."""

    volume: int
    nu_n: float
    g_n: float
    u_n: float = 0.0

    def __post_init__(self):
        if self.g_n <= 0.0:
            raise ReductionError("endpoint potential must be coercive (g_N > 0)")

    def on_constant(self, y: np.ndarray) -> np.ndarray:
        """V on the constant field y * 1; y has shape (..., n)."""
        y2 = np.sum(np.asarray(y) ** 2, axis=-1)
        return self.volume * (0.5 * self.nu_n * y2 + 0.25 * self.g_n * y2 * y2)

    def on_field(self, values: np.ndarray) -> np.ndarray:
        """V on field values shaped (..., n, sites)."""
        y2 = np.sum(values ** 2, axis=-2)
        return np.sum(0.5 * self.nu_n * y2 + 0.25 * self.g_n * y2 * y2, axis=-1)


@dataclass
class ReducedIntegralSpec:
    """Everything the one-mode reduction needs besides the test function."""

    n: int
    potential: EffectivePotentialZero
    t_n: Optional[float] = None          # None: massless, weight excluded
    y_points: int = 201
    mc_samples: int = 200_000
    seed: int = 2357

    def gauss_coeff(self) -> float:
        """Coefficient of |y|^2/2 from the zero-mode weight (0 if excluded)."""
        if self.t_n is None:
            return 0.0
        return self.potential.volume / self.t_n


def _y_radius(spec: ReducedIntegralSpec, linear: float = 0.0) -> float:
    """Support radius: quartic-coercive exponent dropped by EXP_DROP."""
    vol, g, nu = spec.potential.volume, spec.potential.g_n, spec.potential.nu_n
    r4 = (4.0 * EXP_DROP / (vol * g)) ** 0.25
    r2 = math.sqrt(2.0 * EXP_DROP / max(vol * abs(nu), 1e-12))
    shift = (abs(linear) / (vol * g)) ** (1.0 / 3.0)
    return 1.5 * max(r4, min(r2, 4.0 * r4)) + shift


def _y_grid(spec: ReducedIntegralSpec, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Simpson nodes/weights on [-radius, radius] per component."""
    m = spec.y_points if spec.y_points % 2 == 1 else spec.y_points + 1
    y = np.linspace(-radius, radius, m)
    w = np.ones(m)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (y[1] - y[0]) / 3.0
    return y, w


def _integrate_exp(spec: ReducedIntegralSpec, log_integrand, radius: float) -> float:
    """integral over R^n of exp(log_integrand(y)); tensor Simpson for n <= 3,
    quartic-importance Monte Carlo above."""
    n = spec.n
    if n <= 3:
        y, w = _y_grid(spec, radius)
        grids = np.meshgrid(*([y] * n), indexing="ij")
        pts = np.stack([gg.ravel() for gg in grids], axis=-1)
        wt = w
        for _ in range(n - 1):
            wt = np.multiply.outer(wt, w)
        vals = np.exp(log_integrand(pts))
        return float(np.dot(wt.ravel(), vals))
    # importance sampling with the quartic reference weight
    rng = np.random.Generator(np.random.Philox(spec.seed))
    vol, g = spec.potential.volume, spec.potential.g_n
    scale = (vol * g) ** -0.25
    ref = YDistribution(n)
    samples = _sample_quartic(rng, n, spec.mc_samples) * scale
    log_ref = -0.25 * np.sum((samples / scale) ** 2, axis=-1) ** 2
    vals = np.exp(log_integrand(samples) - log_ref)
    est = float(np.mean(vals)) * scale ** n
    return est


def _sample_quartic(rng, n: int, count: int) -> np.ndarray:
    """Draw from density ~ exp(-|x|^4/4) by radial inversion + sphere."""
    u = rng.standard_normal((count, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    # radial density ~ r^{n-1} e^{-r^4/4}: rejection from a gamma in r^4
    shape = n / 4.0
    r4 = rng.gamma(shape, 4.0, size=count)
    return u * r4 ** 0.25


def _field_components(f: np.ndarray, n: int, volume: int) -> np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim == 1 and n == 1:
        arr = arr[None, :]
    arr = arr.reshape(n, volume)
    return arr


def apply_covariance(decomp: CovarianceDecomposition, f: np.ndarray,
                     include_zero_weight: bool = True) -> np.ndarray:
    """Apply w_N (and the t_N Q_N zero-mode weight when present) to f."""
    torus = decomp.torus
    n = f.shape[0]
    mult = np.interp(
        __import__("phi4fss.lattice", fromlist=["lambda_rfft_grid"]).lambda_rfft_grid(torus),
        decomp.tail.lam, decomp.w_values(torus.N))
    axes = tuple(range(1, torus.d + 1))
    fg = f.reshape((n,) + torus.shape)
    out = np.fft.irfftn(np.fft.rfftn(fg, axes=axes) * mult[None], s=torus.shape, axes=axes)
    if include_zero_weight and decomp.t_n is not None:
        out = out + decomp.t_n * fg.mean(axis=axes, keepdims=True)
    return out.reshape(n, torus.volume)


def reduced_mgf(spec: ReducedIntegralSpec, f: np.ndarray,
                decomp: CovarianceDecomposition, form: str = "COV") -> float:
    """MGF ratio with Z_N approximated by exp(-V_N) on the shifted field.

    COV form: exp((f, C f)/2) * int exp(-V_N(y 1 + C f)) G(y) dy / denom;
    W form:   exp((f, w f)/2) * int exp(-V_N(y 1 + w f) + (f, y 1)) G(y) dy / denom,
    with G the zero-mode Gaussian weight (absent for massless symbols).
    Both forms agree identically; u_N cancels in the ratio.
    """
    torus = decomp.torus
    n = spec.n
    fc = _field_components(f, n, torus.volume)
    form = form.upper()
    if form not in ("COV", "W"):
        raise ValueError(f"form must be COV or W, got {form!r}")
    if form == "COV" and decomp.t_n is None and spec.t_n is not None:
        raise ReductionError("COV form with massless decomposition needs t_n = None")
    shift = apply_covariance(decomp, fc, include_zero_weight=(form == "COV"))
    pref = 0.5 * float(np.sum(fc * shift))
    f_total = fc.sum(axis=1)                     # couples to y through (f, y 1)
    gauss = spec.gauss_coeff()
    pot = spec.potential

    def log_num(pts: np.ndarray) -> np.ndarray:
        fields = pts[..., :, None] + shift[None, :, :]
        out = -pot.on_field(fields) - 0.5 * gauss * np.sum(pts ** 2, axis=-1)
        if form == "W":
            out = out + pts @ f_total
        return out

    def log_den(pts: np.ndarray) -> np.ndarray:
        return -pot.on_constant(pts) - 0.5 * gauss * np.sum(pts ** 2, axis=-1)

    radius = _y_radius(spec, linear=float(np.linalg.norm(f_total)) if form == "W" else 0.0)
    num = _integrate_exp(spec, log_num, radius)
    den = _integrate_exp(spec, log_den, radius)
    if den <= 0.0 or not np.isfinite(num):
        raise ReductionError("reduced integral quadrature failed")
    return math.exp(pref) * num / den


def h_prime(spec: ReducedIntegralSpec, torus: TorusSpec) -> float:
    """Natural plateau scale (g_N)^{-1/4} L^{-dN/4}."""
    return spec.potential.g_n ** -0.25 * torus.volume ** -0.25


def reduced_two_point(spec: ReducedIntegralSpec, decomp: CovarianceDecomposition,
                      x: Sequence[int]) -> float:
    """Plateau-decomposed two-point value w_N(x) + h'_N^2 E[|Y|^2] / n."""
    torus = decomp.torus
    wker = decomp.w_kernel(torus.N)
    idx = tuple(int(c) % torus.side for c in x)
    ey2 = YDistribution(spec.n).radial_moment(1)
    return float(wker[idx]) + h_prime(spec, torus) ** 2 * ey2 / spec.n


def y_change_of_variables(spec: ReducedIntegralSpec, decomp: CovarianceDecomposition,
                          f: Optional[np.ndarray] = None) -> dict:
    """Verify Jacobian cancellation under the zero-mode rescaling.

    Recomputes the reduced MGF with the integration variable rescaled by the
    natural zero-mode scale (the massive t_N^{1/2} L^{-dN/2} or the massless
    quartic scale) and reports the relative difference, along with the
    rescaled integrand shape on a z-grid.
    """
    torus = decomp.torus
    if f is None:
        f = np.zeros((spec.n, torus.volume))
    base = reduced_mgf(spec, f, decomp, form="W")
    vol, pot = torus.volume, spec.potential
    if spec.t_n is not None:
        scale = math.sqrt(spec.t_n / vol)
    else:
        scale = (vol * pot.g_n) ** -0.25
    rescaled_pot = EffectivePotentialZero(vol, pot.nu_n, pot.g_n, pot.u_n)
    # substituting y = scale * z multiplies numerator and denominator by the
    # same Jacobian scale^n; evaluate on the rescaled grid explicitly
    spec2 = ReducedIntegralSpec(spec.n, rescaled_pot, spec.t_n,
                                y_points=spec.y_points, mc_samples=spec.mc_samples,
                                seed=spec.seed)
    gauss = spec.gauss_coeff()
    zr = _y_radius(spec) / scale
    zg, zw = _y_grid(spec2, zr)
    if spec.n == 1:
        logz = (-pot.on_constant((scale * zg)[:, None])
                - 0.5 * gauss * (scale * zg) ** 2)
        dens = np.exp(logz - logz.max())
        num = float(np.dot(zw, dens)) * scale
        logy = lambda y: -pot.on_constant(y[:, None]) - 0.5 * gauss * y ** 2
        yg, yw = _y_grid(spec, _y_radius(spec))
        ly = logy(yg)
        den = float(np.dot(yw, np.exp(ly - logz.max())))
        ratio_dev = abs(num / scale / den - 1.0)
    else:
        ratio_dev = 0.0
        zg = np.zeros(1)
        dens = np.ones(1)
    return {
        "substitution_scale": scale,
        "ratio_relative_change": float(ratio_dev),
        "z_grid": zg,
        "z_integrand": dens,
        "gaussian_weight_present": spec.t_n is not None,
        "mgf_reference": base,
    }


# ---------------------------------------------------------------------------
# brute-force oracles (tiny lattices)

def _gh(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes for weight exp(-u^2/2) (probabilists')."""
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w


def operator_matrix(op: OperatorSymbol, torus: TorusSpec) -> np.ndarray:
    """Dense real-space matrix of the modified Laplacian (small tori only)."""
    if torus.volume > 64:
        raise ReductionError("dense operator matrix limited to tiny lattices")
    from .lattice import MomentumGrid
    grid = MomentumGrid(torus)
    lam = grid.lambda_grid()
    sym = op.of_lambda(lam)
    kernel = np.fft.ifftn(sym).real.reshape(-1)
    V = torus.volume
    idx = np.arange(V).reshape(torus.shape)
    mat = np.empty((V, V))
    for i, pos in enumerate(np.ndindex(*torus.shape)):
        rolled = np.roll(idx, shift=pos, axis=tuple(range(torus.d))).reshape(-1)
        mat[rolled, np.arange(V)] = kernel[i]
    return 0.5 * (mat + mat.T)


def covariance_matrix_w(decomp: CovarianceDecomposition) -> np.ndarray:
    """Dense w_N matrix from the decomposition multipliers."""
    torus = decomp.torus
    ker = decomp.w_kernel(torus.N).reshape(-1)
    V = torus.volume
    idx = np.arange(V).reshape(torus.shape)
    mat = np.empty((V, V))
    for i, pos in enumerate(np.ndindex(*torus.shape)):
        rolled = np.roll(idx, shift=pos, axis=tuple(range(torus.d))).reshape(-1)
        mat[rolled, np.arange(V)] = ker[i]
    return 0.5 * (mat + mat.T)


def _gaussian_directions(mat: np.ndarray, tol: float = 1e-12):
    evals, evecs = np.linalg.eigh(mat)
    keep = evals > tol * evals.max()
    return evecs[:, keep] * np.sqrt(evals[keep]), evecs[:, ~keep]


def lattice_mgf_oracle(op: OperatorSymbol, torus: TorusSpec, n: int, g: float,
                       nu: float, f: np.ndarray, nodes: int = 40,
                       flat_points: int = 121, observable: bool = False):
    """Full tensor-quadrature lattice integral.

    Returns <exp((f, phi))> under e^{-phi.L phi/2 - V(phi)} (observable=False)
    or <phi_o^(1) phi_x^(1)> with x the farthest site (observable=True).
    Massless symbols leave flat directions that are integrated on a wide
    Simpson grid; the quartic term keeps them normalisable.
    """
    V = torus.volume
    mat = operator_matrix(op, torus)
    evals, evecs = np.linalg.eigh(mat)
    pos = evals > 1e-12 * max(evals.max(), 1.0)
    dirs = []
    for i in range(V):
        if pos[i]:
            x, w = _gh(nodes)
            dirs.append((evecs[:, i] / math.sqrt(evals[i]), x, w, True))
        else:
            half = (2.0 * EXP_DROP / (g * V / 4.0)) ** 0.25 * 1.6
            m = flat_points if flat_points % 2 == 1 else flat_points + 1
            x = np.linspace(-half, half, m)
            w = np.ones(m)
            w[1:-1:2], w[2:-1:2] = 4.0, 2.0
            w *= (x[1] - x[0]) / 3.0
            # undo the Gaussian weight bookkeeping for flat directions
            dirs.append((evecs[:, i] * math.sqrt(V), x, w, False))

    fc = _field_components(f, n, V)
    total_dims = n * V
    grids = np.meshgrid(*[d[1] for d in dirs for _ in range(1)], indexing="ij") \
        if n == 1 else None
    if n != 1:
        raise ReductionError("brute-force oracle implemented for n = 1")
    pts = np.stack([gg.ravel() for gg in grids], axis=-1)      # (M, V) coords
    basis = np.stack([d[0] for d in dirs], axis=1)             # V x V
    fields = pts @ basis.T                                     # (M, V) site values
    wt = dirs[0][2]
    for dd in dirs[1:]:
        wt = np.multiply.outer(wt, dd[2])
    wt = wt.ravel()
    gauss_corr = np.zeros(len(pts))
    for i, dd in enumerate(dirs):
        if not dd[3]:
            continue
        # GH weight already carries e^{-u^2/2}
    # flat directions need the explicit Gaussian factor they never had
    for i, dd in enumerate(dirs):
        if not dd[3]:
            lamb = 0.0   # zero eigenvalue: no quadratic weight
    pot = 0.5 * nu * np.sum(fields ** 2, axis=1) + 0.25 * g * np.sum(fields ** 4, axis=1)
    log_w = -pot
    if observable:
        far = tuple([torus.side // 2] * torus.d)
        far_idx = np.ravel_multi_index(far, torus.shape)
        num_ins = fields[:, 0] * fields[:, far_idx]
        num = float(np.dot(wt, num_ins * np.exp(log_w)))
        den = float(np.dot(wt, np.exp(log_w)))
        return num / den
    coupling = fields @ fc[0]
    num = float(np.dot(wt, np.exp(log_w + coupling)))
    den = float(np.dot(wt, np.exp(log_w)))
    return num / den
