"""Positive polynomial family reconstructing 1/x on (0, 3] from bounded degrees.

The family P_t, t > 0, satisfies

    integral_0^infty t * P_t(x) dt  =  1/x        on (0, 3],

with deg P_t <= floor(t), P_t >= 0, and P_t(x) = c/t for t < 1.  Each kernel
is the squared modulus of a smoothly windowed trigonometric polynomial in
theta = arccos(1 - x/2), which makes positivity and the degree budget
structural; the t-integral is discretised on a geometric grid and the node
amplitudes are fixed once by nonnegative least squares against 1/x.  Applied
to an operator with symbol x, P_t has propagation range (degree) at most t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.optimize import nnls

# log-grid density and domain of the defining identity
NODES_PER_OCTAVE = 32
T_MAX = 4500.0
X_FIT_LO = 1.0e-3
X_FIT_HI = 3.0
IDENTITY_TOL = 1.0e-6


def _bump(u: np.ndarray) -> np.ndarray:
    """Smooth compactly supported window; Gevrey regularity at the edge gives
    the sub-exponential kernel decay exp(-c (x t^2)^{1/4})."""
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    v = u[inside]
    out[inside] = np.exp(-v * v / (1.0 - v * v))
    return out


@lru_cache(maxsize=512)
def _window_coeffs(m: int) -> np.ndarray:
    return _bump(np.arange(m + 1) / m) if m > 0 else np.ones(1)


def positive_kernel(m: int, x: np.ndarray) -> np.ndarray:
    """|G_m(theta(x))|^2 with G_m a windowed degree-m trigonometric polynomial.

    As a function of x this is a polynomial of degree <= m, nonnegative
    everywhere on [0, 4].
    """
    x = np.asarray(x, dtype=np.float64)
    if m == 0:
        return np.ones_like(x)
    theta = np.arccos(np.clip(1.0 - 0.5 * x, -1.0, 1.0))
    z = np.exp(1j * theta)
    w = _window_coeffs(m)
    g = np.zeros_like(z)
    for n in range(m, -1, -1):
        g = g * z + w[n]
    return np.abs(g) ** 2


@dataclass
class PtFamily:
    """Discretised family: node grid, quadrature weights and fitted amplitudes."""

    t_nodes: np.ndarray
    t_weights: np.ndarray          # dt-quadrature weights on the geometric grid
    degrees: np.ndarray
    amplitudes: np.ndarray         # alpha_k >= 0
    c_small: float                 # P_t = c_small / t on t < 1
    fit_residual: float

    def eval_node(self, k: int, x: np.ndarray) -> np.ndarray:
        """P_{t_k}(x) at grid node k."""
        return self.amplitudes[k] * positive_kernel(int(self.degrees[k]), x)

    def eval(self, t: float, x: np.ndarray) -> np.ndarray:
        """P_t(x) for arbitrary t (nearest-node amplitude for t >= 1)."""
        x = np.asarray(x, dtype=np.float64)
        if t < 1.0:
            return np.full_like(x, self.c_small / t)
        k = int(np.argmin(np.abs(np.log(self.t_nodes) - np.log(t))))
        return self.eval_node(k, x)

    def reconstruct_inverse(self, x: np.ndarray) -> np.ndarray:
        """Discrete integral_0^infty t P_t(x) dt; approximates 1/x."""
        x = np.asarray(x, dtype=np.float64)
        out = np.full_like(x, self.c_small)   # analytic t < 1 contribution
        for k in range(len(self.t_nodes)):
            out += self.t_weights[k] * self.t_nodes[k] * self.eval_node(k, x)
        return out

    def node_slice(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Indices of grid nodes with t in (t_lo, t_hi]."""
        return np.nonzero((self.t_nodes > t_lo) & (self.t_nodes <= t_hi))[0]


@lru_cache(maxsize=4)
def build_family(nodes_per_octave: int = NODES_PER_OCTAVE, t_max: float = T_MAX) -> PtFamily:
    """Construct and fit the family once; cached."""
    h = np.log(2.0) / nodes_per_octave
    count = int(np.ceil(np.log(t_max) / h)) + 1
    t = np.exp(h * np.arange(count))
    wq = np.full_like(t, h)
    wq[0] *= 0.5
    wq[-1] *= 0.5
    wq *= t
    degrees = np.floor(t).astype(np.int64)

    xg = np.exp(np.linspace(np.log(X_FIT_LO), np.log(X_FIT_HI), 700))
    cols = [np.ones_like(xg)]
    for k in range(count):
        cols.append(wq[k] * t[k] * positive_kernel(int(degrees[k]), xg))
    design = np.stack(cols, axis=1) * xg[:, None]
    sol, _ = nnls(design, np.ones_like(xg), maxiter=20 * design.shape[1])
    resid = float(np.abs(design @ sol - 1.0).max())
    fam = PtFamily(
        t_nodes=t,
        t_weights=wq,
        degrees=degrees,
        amplitudes=sol[1:],
        c_small=float(sol[0]),
        fit_residual=resid,
    )
    return fam
