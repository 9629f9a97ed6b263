"""Linear systems driven by graphon couplings: simulation, Gramians, steering.

A system pairs the state operator alpha0*I + A with the input operator
beta0*I + B where B is constrained to be a polynomial in the coupling kernel
A.  Under that constraint the controllability Gramian, its inverse and the
minimum-energy steering control all have closed forms over the spectral
decomposition of A; the only numerics left are scalar exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExactControllabilityError, IncompatibleOperandsError, NumericsError
from .functions import Function, PiecewiseConstantFunction, inner_product
from .graphons import Graphon, StepGraphon
from .integrate import rk4
from .spectral import SpectralDecomposition, decompose

# Below this magnitude the growth rate in exp-integrals is treated as zero.
RATE_EPS = 1e-12


def growth_integral(rate: float, horizon: float) -> float:
    """Exact value of the integral of exp(rate * t) over [0, horizon]."""
    if abs(rate) < RATE_EPS:
        return horizon
    return math.expm1(rate * horizon) / rate


@dataclass(frozen=True, eq=False)
class GraphonSystem:
    """State operator alpha0*I + A with input operator beta0*I + sum_k poly[k] A^k.

    `input_poly` holds the coefficients (beta_1, ..., beta_d) of the kernel
    polynomial part of the input operator; beta0 sits on the identity.  The
    spectral decomposition of the kernel is computed once at construction.
    """

    alpha0: float
    beta0: float
    kernel: Graphon
    input_poly: tuple = ()
    horizon: float = 1.0
    modes: SpectralDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "input_poly",
                           tuple(float(b) for b in self.input_poly))
        object.__setattr__(self, "modes", decompose(self.kernel))

    def input_eta(self, eigenvalue: float) -> float:
        """Input-operator eigenvalue on an eigendirection: sum_k beta_k lambda^k."""
        eta = self.beta0
        for k, beta in enumerate(self.input_poly, start=1):
            eta += beta * eigenvalue ** k
        return eta

    @property
    def mode_etas(self) -> np.ndarray:
        return np.array([self.input_eta(lam) for lam in self.modes.eigenvalues])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States (and optionally controls) sampled on a uniform time grid.

    Rows of `states` are block-value vectors; states[k] belongs to times[k].
    `range_warning` flags epidemic runs that left the model's validity box.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray | None = None
    range_warning: bool = False

    @property
    def num_blocks(self) -> int:
        return self.states.shape[1]

    def state_function(self, index: int) -> PiecewiseConstantFunction:
        return PiecewiseConstantFunction(self.states[index])

    @property
    def final_state(self) -> PiecewiseConstantFunction:
        return self.state_function(-1)

    def state_norms(self) -> np.ndarray:
        """L2 norm of the state at each grid time."""
        return np.linalg.norm(self.states, axis=1) / np.sqrt(self.num_blocks)


def _merged_state(kernel: StepGraphon, x0: PiecewiseConstantFunction):
    """Kernel matrix and initial vector on the common refinement partition."""
    from .functions import common_block_count

    merged = common_block_count(kernel.num_blocks, x0.num_blocks)
    coeffs = np.repeat(np.repeat(kernel.coeffs, merged // kernel.num_blocks, axis=0),
                       merged // kernel.num_blocks, axis=1)
    return coeffs, np.repeat(x0.values, merged // x0.num_blocks), merged


def simulate(sys: GraphonSystem, x0: PiecewiseConstantFunction,
             control=None, step: float | None = None) -> Trajectory:
    """Integrate the system from x0 under an open-loop control t -> function.

    Step kernels only: states live on the common refinement of the kernel and
    initial-state partitions, where the dynamics reduce to the finite network
    ODE.  `control` returning None-compatible values is replaced by zero input.
    """
    if not isinstance(sys.kernel, StepGraphon):
        raise IncompatibleOperandsError(
            "simulation requires a step kernel; sinusoidal systems are handled "
            "analytically through their decomposition")
    coeffs, x_vec, merged = _merged_state(sys.kernel, x0)
    a_op = coeffs / merged
    state_mat = sys.alpha0 * np.eye(merged) + a_op
    input_mat = sys.beta0 * np.eye(merged)
    power = np.eye(merged)
    for beta in sys.input_poly:
        power = power @ a_op
        input_mat = input_mat + beta * power

    if step is None:
        step = sys.horizon / 1000.0
    num_steps = max(1, round(sys.horizon / step))

    def control_vector(t: float) -> np.ndarray:
        u = control(t)
        if u.num_blocks == merged:
            return u.values
        if merged % u.num_blocks:
            raise IncompatibleOperandsError(
                f"control on {u.num_blocks} blocks does not refine to {merged}")
        return np.repeat(u.values, merged // u.num_blocks)

    if control is None:
        def field_fn(t, x):
            return state_mat @ x
    else:
        def field_fn(t, x):
            return state_mat @ x + input_mat @ control_vector(t)

    times, states = rk4(field_fn, 0.0, sys.horizon, x_vec, num_steps)
    controls = None
    if control is not None:
        controls = np.stack([control_vector(t) for t in times])
    return Trajectory(times, states, controls)


@dataclass(frozen=True, eq=False)
class GramianOperator:
    """Operator scalar*I + sum_l corrections[l] <., f_l> f_l (self-adjoint).

    `eigenfunctions` are the orthonormal directions carrying the rank-one
    corrections; on their orthogonal complement the operator is pure scaling.
    """

    scalar: float
    corrections: np.ndarray
    eigenfunctions: tuple

    def __post_init__(self):
        c = np.atleast_1d(np.array(self.corrections, dtype=float))
        if c.size != len(self.eigenfunctions):
            raise ValueError("one correction per eigenfunction required")
        c.setflags(write=False)
        object.__setattr__(self, "corrections", c)

    @property
    def direction_values(self) -> np.ndarray:
        """Eigenvalues of the operator on the correction directions."""
        return self.scalar + self.corrections

    @property
    def spectral_lower_bound(self) -> float:
        values = self.direction_values
        return float(min(self.scalar, values.min())) if values.size else self.scalar

    def apply(self, z: Function) -> Function:
        out = self.scalar * z
        for coeff, func in zip(self.corrections, self.eigenfunctions):
            if type(func) is not type(z):
                raise IncompatibleOperandsError(
                    f"cannot mix {type(z).__name__} states with "
                    f"{type(func).__name__} eigenfunctions")
            out = out + (coeff * inner_product(z, func)) * func
        return out

    def compose(self, other: "GramianOperator") -> "GramianOperator":
        """Operator product, assuming both share the same eigenfunctions."""
        if len(self.eigenfunctions) != len(other.eigenfunctions):
            raise IncompatibleOperandsError("operators decompose over different modes")
        mixed = (self.scalar * other.corrections + other.scalar * self.corrections
                 + self.corrections * other.corrections)
        return GramianOperator(self.scalar * other.scalar, mixed, self.eigenfunctions)

    def as_matrix(self) -> np.ndarray:
        """Matrix acting on block-value vectors (step-kernel systems only)."""
        if not all(isinstance(f, PiecewiseConstantFunction) for f in self.eigenfunctions):
            raise IncompatibleOperandsError("matrix form needs piecewise-constant modes")
        n = self.eigenfunctions[0].num_blocks if self.eigenfunctions else 1
        mat = self.scalar * np.eye(n)
        for coeff, func in zip(self.corrections, self.eigenfunctions):
            mat += (coeff / n) * np.outer(func.values, func.values)
        return mat

    def identity_deviation(self) -> float:
        dev = abs(self.scalar - 1.0)
        if self.corrections.size:
            dev = max(dev, float(np.abs(self.corrections).max()))
        return dev


def gramian(sys: GraphonSystem) -> GramianOperator:
    """Closed-form controllability Gramian over the horizon.

    Scalar part beta0^2 * integral of exp(2*alpha0*t); each eigendirection of
    the kernel carries the correction eta^2 * integral of
    exp(2*(alpha0+lambda)*t) minus the scalar part.
    """
    t = sys.horizon
    scalar = sys.beta0 ** 2 * growth_integral(2.0 * sys.alpha0, t)
    lams = sys.modes.eigenvalues
    etas = sys.mode_etas
    direction = np.array([eta ** 2 * growth_integral(2.0 * (sys.alpha0 + lam), t)
                          for lam, eta in zip(lams, etas)])
    return GramianOperator(scalar, direction - scalar, sys.modes.eigenfunctions)


def gramian_inverse(sys: GraphonSystem) -> GramianOperator:
    """Closed-form inverse Gramian; composition with the Gramian is checked.

    Requires beta0 != 0 (a compact input operator can never give exact
    controllability over a finite horizon) and every eigendirection excited
    (eta != 0, otherwise the Gramian is singular on that direction).
    """
    if sys.beta0 == 0.0:
        raise ExactControllabilityError(
            "beta0 = 0 leaves a compact input operator; the Gramian is not invertible")
    w = gramian(sys)
    direction = w.direction_values
    for idx, value in enumerate(direction):
        if value <= 0.0 or not np.isfinite(value):
            raise ExactControllabilityError(
                f"Gramian vanishes on eigendirection {idx} "
                f"(lambda={sys.modes.eigenvalues[idx]:.6g}, "
                f"eta={sys.mode_etas[idx]:.6g})")
    inv = GramianOperator(1.0 / w.scalar, 1.0 / direction - 1.0 / w.scalar,
                          w.eigenfunctions)
    residual = w.compose(inv).identity_deviation()
    if residual > 1e-8:
        raise NumericsError(f"inverse Gramian composition residual {residual:.3e}")
    return inv


@dataclass(frozen=True)
class ControllabilityReport:
    """Verdict of the spectral exact-controllability test."""

    controllable: bool
    spectral_lower_bound: float
    identity_gain_nonzero: bool  # beta0 != 0, the necessary condition
    horizon: float


def exact_controllability_check(sys: GraphonSystem,
                                tolerance: float = 1e-12) -> ControllabilityReport:
    """Exact controllability via uniform positivity of the Gramian spectrum."""
    bound = gramian(sys).spectral_lower_bound
    nonzero_gain = sys.beta0 != 0.0
    return ControllabilityReport(bool(nonzero_gain and bound > tolerance),
                                 bound, nonzero_gain, sys.horizon)


def min_energy_control(sys: GraphonSystem, x0: Function):
    """Control steering x0 to the origin at the horizon with minimal energy.

    Returns (u, energy) with u(t) = -B* exp(A*(T-t)) W^-1 exp(A*T) x0 expanded
    over the kernel eigendirections, and the energy
    <exp(A*T) x0, W^-1 exp(A*T) x0> of that control.
    """
    if sys.beta0 == 0.0:
        raise ExactControllabilityError("steering requires beta0 != 0")
    w = gramian(sys)
    direction = w.direction_values
    for idx, value in enumerate(direction):
        if value <= 0.0 or not np.isfinite(value):
            raise ExactControllabilityError(
                f"Gramian vanishes on eigendirection {idx}; cannot steer")
    t_final = sys.horizon
    lams = sys.modes.eigenvalues
    etas = sys.mode_etas
    funcs = sys.modes.eigenfunctions
    coords = np.array([inner_product(x0, f) for f in funcs])
    residual = x0
    for coord, func in zip(coords, funcs):
        residual = residual - coord * func

    energy = (math.exp(2.0 * sys.alpha0 * t_final) * residual.l2_norm() ** 2 / w.scalar
              + float(np.sum(np.exp(2.0 * (sys.alpha0 + lams) * t_final)
                             * coords ** 2 / direction)))

    def u(t: float) -> Function:
        out = (-sys.beta0 * math.exp(sys.alpha0 * (2.0 * t_final - t))
               / w.scalar) * residual
        gains = (-etas * np.exp((sys.alpha0 + lams) * (2.0 * t_final - t))
                 / direction * coords)
        for gain, func in zip(gains, funcs):
            out = out + gain * func
        return out

    return u, float(energy)


def gramian_quadrature_matrix(sys: GraphonSystem, num_intervals: int = 2048) -> np.ndarray:
    """Simpson-rule Gramian matrix for step-kernel systems (verification path).

    Integrates exp(At) B B^T exp(A^T t) on the kernel partition; used to check
    the closed form, never to produce it.
    """
    if not isinstance(sys.kernel, StepGraphon):
        raise IncompatibleOperandsError("quadrature Gramian needs a step kernel")
    if num_intervals % 2:
        num_intervals += 1
    n = sys.kernel.num_blocks
    a_op = sys.kernel.coeffs / n
    rates, basis = np.linalg.eigh(a_op)
    rates = rates + sys.alpha0
    input_mat = sys.beta0 * np.eye(n)
    power = np.eye(n)
    for beta in sys.input_poly:
        power = power @ a_op
        input_mat = input_mat + beta * power
    bbt_eig = basis.T @ (input_mat @ input_mat.T) @ basis

    grid = np.linspace(0.0, sys.horizon, num_intervals + 1)
    weights = np.full(num_intervals + 1, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    weights *= (grid[1] - grid[0]) / 3.0
    acc = np.zeros((n, n))
    for t, wgt in zip(grid, weights):
        gains = np.exp(rates * t)
        acc += wgt * (np.outer(gains, gains) * bbt_eig)
    return basis @ acc @ basis.T
