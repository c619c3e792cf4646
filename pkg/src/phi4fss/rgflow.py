"""Perturbative flow of the coupling constants and critical-point shooting.

One scale step advances (g, nu, lambda) through the second-order recursions

    g_{j+1}      = g_j - beta_j g_j^2
    nu_{j+1}     = nu_j + eta'_j g_j,          eta'_j = (n+2) Gamma_{j+1}(0)
    lambda_{j+1} = lambda_j (1 - delta_j),
    delta_j      = (nu_j + eta'_j g_j) Gamma1_{j+1} + eta'_j g_j w1_j

with slice tables Gamma_{j+1}(0), Gamma1_{j+1} = sum_x Gamma_{j+1}(x) and
w1_j = sum_x w_j(x) supplied by a covariance decomposition.  The critical
mass coupling is located by bisection on the divergence dichotomy: below the
critical value nu_j escapes downward, above it upward, measured against the
shrinking domain bound C_D L^{-(2-eta)j} r_j gtilde_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .frd import CovarianceDecomposition, bubble_beta


class BracketError(ValueError):
    """Both bracket endpoints diverge the same way."""


class InconclusiveError(RuntimeError):
    """j_max too small to classify a trajectory; carries the surviving range."""

    def __init__(self, message, nu_lo=None, nu_hi=None):
        super().__init__(message)
        self.surviving_range = (nu_lo, nu_hi)


class FlowError(RuntimeError):
    pass


@dataclass(frozen=True)
class CouplingState:
    j: int
    g: float
    nu: float
    lambda_o: float = 1.0
    lambda_x: float = 1.0
    u: float = 0.0


@dataclass
class FlowParams:
    """Slice tables and domain data for the recursion, covering j = 0..j_max."""

    n: int
    d: int
    eta: float
    L: int
    gamma0: np.ndarray       # Gamma_{j+1}(0)
    gamma1: np.ndarray       # sum_x Gamma_{j+1}(x), infinite-lattice limit
    w1: np.ndarray           # sum_x w_j(x)
    beta: np.ndarray         # bubble increments beta_j
    j_max: int = 400
    domain_const: float = 1.0
    safety: float = 10.0
    beta_inf: float = 0.0

    def __post_init__(self):
        for name in ("gamma0", "gamma1", "w1", "beta"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if len(arr) < self.j_max + 1:
                raise ValueError(f"table {name} must cover 0..j_max")
            setattr(self, name, arr)

    @property
    def d_cu(self) -> float:
        return 4.0 - 2.0 * self.eta

    @property
    def at_critical_dimension(self) -> bool:
        return abs(self.d - self.d_cu) < 1.0e-9

    def domain_bound(self, j: int, g_tilde: float) -> float:
        """Bulk domain bound on |nu_j| (zero-derivative entry)."""
        r_j = float(self.L) ** (-(self.d - 4.0 + 2.0 * self.eta) * j)
        return self.domain_const * float(self.L) ** (-(2.0 - self.eta) * j) * r_j * g_tilde

    @classmethod
    def from_decomposition(cls, dec: CovarianceDecomposition, n: int,
                           j_max: int = 400, **kw) -> "FlowParams":
        """Build tables from computed slices, extended geometrically.

        Slices j+1 <= N-1 give measured entries; beyond that Gamma_{j+1}(0)
        and Gamma1 continue with their last measured ratio, beta_j continues
        with the fitted plateau value at d = d_cu and with 0 above it.
        """
        torus, op = dec.torus, dec.op
        n_meas = torus.N - 1                      # measured slices Gamma_1..Gamma_{N-1}
        if n_meas < 3:
            raise ValueError("need at least N = 4 scales to build flow tables")
        g0 = [dec.slices[j].value_at_origin() for j in range(n_meas)]
        g1 = [dec.slices[j].zero_limit for j in range(n_meas)]
        # the last regular slice is finite-size affected; stop one short of it
        betas = [bubble_beta(dec, j, n) for j in range(n_meas - 1)]

        d_cu = 4.0 - 2.0 * op.eta
        at_dcu = abs(torus.d - d_cu) < 1.0e-9
        n_beta = len(betas)
        beta_inf = float(np.mean(betas[-2:]))

        cap = 1.0e200
        gamma0 = np.empty(j_max + 1)
        gamma1 = np.empty(j_max + 1)
        beta = np.empty(j_max + 1)
        gamma0[:n_meas] = g0
        gamma1[:n_meas] = g1
        beta[:n_beta] = betas
        ratio0 = g0[-1] / g0[-2]
        ratio1 = g1[-1] / g1[-2] if g1[-2] != 0.0 else 0.0
        for j in range(n_meas, j_max + 1):
            gamma0[j] = gamma0[j - 1] * ratio0
            gamma1[j] = min(gamma1[j - 1] * ratio1, cap)
        beta[n_beta:] = beta_inf if at_dcu else 0.0

        w1 = np.empty(j_max + 1)
        w1[0] = 0.0
        for j in range(1, j_max + 1):
            w1[j] = min(w1[j - 1] + gamma1[j - 1], cap)
        return cls(n=n, d=torus.d, eta=op.eta, L=torus.L, gamma0=gamma0,
                   gamma1=gamma1, w1=w1, beta=beta, j_max=j_max,
                   beta_inf=beta_inf, **kw)


@dataclass
class FlowTrajectory:
    states: List[CouplingState]
    termination: str                       # completed | diverged_up | diverged_down
    params: FlowParams
    delta: List[float] = field(default_factory=list)

    def array(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("j,g,nu,lambda_o,lambda_x,beta_j,eta_prime_j\n")
            p = self.params
            for s in self.states:
                bj = p.beta[s.j] if s.j <= p.j_max else float("nan")
                ep = (p.n + 2.0) * p.gamma0[s.j] if s.j <= p.j_max else float("nan")
                fh.write(f"{s.j},{s.g!r},{s.nu!r},{s.lambda_o!r},{s.lambda_x!r},{bj!r},{ep!r}\n")


def step(state: CouplingState, params: FlowParams) -> CouplingState:
    """One scale step of the recursion; divergence is the driver's business."""
    j = state.j
    if j > params.j_max:
        raise FlowError(f"tables cover 0..{params.j_max}, requested scale {j}")
    b = params.beta[j]
    eta_p = (params.n + 2.0) * params.gamma0[j]
    g_next = state.g - b * state.g * state.g
    nu_next = state.nu + eta_p * state.g
    delta = (state.nu + eta_p * state.g) * params.gamma1[j] + eta_p * state.g * params.w1[j]
    # leading vacuum increment, diagnostic only
    du = 0.5 * params.n * state.nu * params.gamma0[j] \
        + 0.25 * params.n * (params.n + 2.0) * state.g * params.gamma0[j] ** 2
    return CouplingState(j + 1, g_next, nu_next,
                         state.lambda_o * (1.0 - delta),
                         state.lambda_x * (1.0 - delta),
                         state.u + du)


def run_flow(params: FlowParams, g0: float, nu0: float,
             lambda0: Tuple[float, float] = (1.0, 1.0),
             j_max: Optional[int] = None,
             detect_divergence: bool = True) -> FlowTrajectory:
    """Iterate the step map, stopping on divergence or at j_max.

    Divergence: |nu_j| above safety * domain bound for 3 consecutive scales
    (classified by the sign of nu), or g_j <= 0 (classified downward).  The
    observable flow is frozen once a step multiplier leaves [0.5, 1.5]: off
    the stable manifold the correction grows geometrically and carries no
    information beyond that scale.
    """
    j_max = params.j_max if j_max is None else min(j_max, params.j_max)
    state = CouplingState(0, g0, nu0, lambda0[0], lambda0[1])
    states = [state]
    deltas = []
    g_tilde = g0
    strikes = 0
    frozen = False
    termination = "completed"
    for j in range(j_max):
        nxt = step(state, params)
        delta = 1.0 - (nxt.lambda_o / state.lambda_o if state.lambda_o != 0.0 else 1.0)
        if frozen or abs(delta) > 0.5:
            frozen = True
            nxt = replace(nxt, lambda_o=state.lambda_o, lambda_x=state.lambda_x)
            delta = 0.0
        deltas.append(delta)
        if nxt.g <= 0.0:
            states.append(nxt)
            termination = "diverged_down"
            break
        if detect_divergence:
            if params.at_critical_dimension:
                g_tilde = g_tilde - params.beta[j] * g_tilde * g_tilde
            bound = params.safety * params.domain_bound(j + 1, g_tilde)
            if abs(nxt.nu) > bound:
                strikes += 1
                if strikes >= 3:
                    states.append(nxt)
                    termination = "diverged_up" if nxt.nu > 0.0 else "diverged_down"
                    break
            else:
                strikes = 0
        states.append(nxt)
        state = nxt
    return FlowTrajectory(states, termination, params, deltas)


def find_critical_nu(params: FlowParams, g0: float,
                     nu_bracket: Tuple[float, float], tol: float = 1.0e-12,
                     j_max: Optional[int] = None) -> float:
    """Bisect the initial mass coupling to the divergence dichotomy boundary."""
    lo, hi = float(min(nu_bracket)), float(max(nu_bracket))

    def classify(nu0: float) -> str:
        t = run_flow(params, g0, nu0, j_max=j_max)
        return t.termination

    c_lo, c_hi = classify(lo), classify(hi)
    if "completed" in (c_lo, c_hi):
        raise InconclusiveError(
            f"trajectory survives to j_max at a bracket endpoint; enlarge j_max "
            f"(surviving near [{lo}, {hi}])", lo, hi)
    if c_lo == c_hi:
        raise BracketError(f"both endpoints terminate {c_lo}; bracket invalid")
    if c_lo == "diverged_up":
        lo, hi = hi, lo      # keep lo on the diverged_down side
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        c = classify(mid)
        if c == "completed":
            raise InconclusiveError(
                f"trajectory survives to j_max at nu0={mid}; enlarge j_max",
                min(lo, hi), max(lo, hi))
        if c == "diverged_down":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class LambdaLimit:
    value: float
    residual: float          # |lambda_{j_end} - lambda_inf|


def lambda_limit(trajectory: FlowTrajectory, which: str = "o") -> LambdaLimit:
    """Limit of the multiplicative observable flow, tail-accelerated.

    Along a surviving trajectory the tail of sum_k delta_k telescopes to
    -nu_j w1_j, so lambda_inf = lambda_{j*} exp(nu_{j*} w1_{j*}) evaluated at
    the scale j* where |nu_j| w1_j bottoms out (beyond it the product only
    amplifies the shooting residual).
    """
    if trajectory.termination != "completed":
        raise FlowError("lambda limit requires a completed trajectory")
    p = trajectory.params
    js = [s.j for s in trajectory.states if s.j <= p.j_max]
    tails = np.array([abs(trajectory.states[j].nu) * p.w1[j] for j in js])
    # the tail estimate decays physically then rises with the shooting residual;
    # its interior minimum is the reliable acceleration point
    j_star = 1 + int(np.argmin(tails[1:])) if len(tails) > 1 else 0
    st = trajectory.states[j_star]
    lam = getattr(st, f"lambda_{which}")
    if not np.isfinite(lam) or lam == 0.0:
        raise FlowError(f"observable flow collapsed; partial product {lam}")
    value = lam * math.exp(st.nu * p.w1[j_star])
    return LambdaLimit(value=float(value), residual=float(abs(lam - value)))


@dataclass
class GAsymptoteReport:
    regime: str                       # "critical_dimension" | "above"
    beta_fit: float                   # fitted 1/(beta j) coefficient (d = d_cu)
    product_range: Tuple[float, float]
    continuum_b: float                # (n+8)/(16 pi^2)
    bubble_beta_inf: float
    g_inf: float = float("nan")
    rate_per_scale: float = float("nan")
    rate_target: float = float("nan")

    def max_product_deviation(self) -> float:
        lo, hi = self.product_range
        return max(abs(lo - 1.0), abs(hi - 1.0))


def g_asymptote_check(trajectory: FlowTrajectory,
                      j_window: Tuple[int, int] = (100, 300)) -> GAsymptoteReport:
    """Check the quartic coupling against its asymptotic form.

    At d = d_cu: fit 1/g_j = a + beta j on the window and report the spread of
    g_j * beta_fit * j.  Above d_cu: report g_inf and the fitted per-scale
    decay rate of the increments g_j - g_{j+1} against L^{-(d-4+2 eta)}.
    """
    p = trajectory.params
    g = trajectory.array("g")
    cont_b = (p.n + 8.0) / (16.0 * math.pi ** 2)
    if p.at_critical_dimension:
        j1, j2 = j_window
        j2 = min(j2, len(g) - 1)
        if j2 <= j1 + 10:
            raise FlowError("trajectory too short for the asymptote window")
        js = np.arange(j1, j2 + 1)
        # one-parameter least squares of the model 1/g_j = beta * j
        beta_fit = float(np.mean(1.0 / (g[j1:j2 + 1] * js)))
        prod = g[j1:j2 + 1] * beta_fit * js
        return GAsymptoteReport("critical_dimension", beta_fit,
                                (float(prod.min()), float(prod.max())),
                                cont_b, p.beta_inf)
    # above the critical dimension: increments decay geometrically; the first
    # couple of scales are pre-asymptotic, later ones sit past the table
    dg = g[:-1] - g[1:]
    js = np.nonzero(dg > 0.0)[0]
    js = js[js >= 2][-3:]
    if len(js) < 2:
        raise FlowError("no usable increments to fit the decay rate")
    slope = np.polyfit(js, np.log(dg[js]), 1)[0]
    rate = float(np.exp(slope))
    target = float(p.L) ** (-(p.d - 4.0 + 2.0 * p.eta))
    return GAsymptoteReport("above", float("nan"), (float("nan"),) * 2,
                            cont_b, p.beta_inf, g_inf=float(g[-1]),
                            rate_per_scale=rate, rate_target=target)


def first_order_nu_estimate(params: FlowParams, g0: float) -> float:
    """Direct-summation estimate -(n+2) sum_j g_j Gamma_{j+1}(0) with the
    slowly varying coupling inserted."""
    total = 0.0
    g = g0
    for j in range(params.j_max):
        total += (params.n + 2.0) * params.gamma0[j] * g
        g = g - params.beta[j] * g * g
    return -total
