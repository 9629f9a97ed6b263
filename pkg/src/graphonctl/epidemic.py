"""Epidemic regulation on contact networks via spectrally decoupled LQR.

The meta-population infection model is linearized around the origin and the
finite-horizon regulator splits, thanks to the cost being polynomial in the
contact operator, into one scalar Riccati equation per adjacency
eigendirection plus a single auxiliary equation on the orthogonal complement.
The auxiliary equation is the member of the same scalar family at eigenvalue
zero, so everything is integrated as one vectorized backward sweep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError
from .functions import Function, inner_product
from .graphons import Graphon, StepGraphon
from .integrate import rk4
from .spectral import SpectralDecomposition, decompose
from .control import Trajectory

_trapz = getattr(np, "trapezoid", np.trapz)


@dataclass(frozen=True)
class RegulatorParams:
    """Scalars defining the linearized regulation problem.

    eta_total is the network-size-scaled infection strength (per-pair strength
    times node count); the Riccati equations consume it together with the
    normalized eigenvalues.
    """

    alpha0: float
    beta0: float
    eta_total: float
    state_weight: float = 2.0
    terminal_weight: float = 4.0
    horizon: float = 1.0

    def __post_init__(self):
        if self.terminal_weight < 0.0:
            raise ValueError("terminal_weight must be nonnegative")
        if not callable(self.state_weight) and self.state_weight < 0.0:
            raise ValueError("state_weight must be nonnegative")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")

    def state_weight_at(self, t: float) -> float:
        if callable(self.state_weight):
            return self.state_weight(t)
        return self.state_weight


@dataclass(frozen=True, eq=False)
class EpidemicModel:
    """Infection spread over a nonnegative contact kernel, with control gain beta0.

    Exactly one of `eta` (per-pair infection strength) and `eta_total` (= eta
    times node count) must be given; the other is derived.  `alpha` is the
    recovery rate of the nonlinear model and doubles as the linear drift
    coefficient, where negative values describe supercritical spread.
    """

    contact: StepGraphon
    alpha: float
    beta0: float = 1.0
    eta: float | None = None
    eta_total: float | None = None
    state_weight: float = 2.0
    terminal_weight: float = 4.0
    horizon: float = 1.0
    modes: SpectralDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        if self.contact.coeffs.min() < 0.0:
            raise ValueError("contact kernel must be nonnegative")
        n = self.contact.num_blocks
        if self.eta is None and self.eta_total is None:
            raise ValueError("one of eta or eta_total is required")
        if self.eta is None:
            object.__setattr__(self, "eta", self.eta_total / n)
        elif self.eta_total is None:
            object.__setattr__(self, "eta_total", self.eta * n)
        elif abs(self.eta_total - self.eta * n) > 1e-12 * max(1.0, abs(self.eta_total)):
            raise ValueError(f"eta_total={self.eta_total} inconsistent with "
                             f"eta*N={self.eta * n}")
        object.__setattr__(self, "modes", decompose(self.contact))

    @property
    def num_nodes(self) -> int:
        return self.contact.num_blocks

    @property
    def adjacency(self) -> np.ndarray:
        """Unscaled contact matrix."""
        return self.contact.coeffs

    @property
    def eigenvector_matrix(self) -> np.ndarray:
        """Columns are unit Euclidean eigenvectors for the nonzero eigenvalues."""
        n = self.num_nodes
        if not self.modes.rank:
            return np.zeros((n, 0))
        return np.stack([f.values for f in self.modes.eigenfunctions],
                        axis=1) / np.sqrt(n)

    def regulator_params(self) -> RegulatorParams:
        return RegulatorParams(self.alpha, self.beta0, self.eta_total,
                               self.state_weight, self.terminal_weight, self.horizon)


def stability_threshold(model: EpidemicModel) -> tuple[float, bool]:
    """Largest adjacency eigenvalue and whether uncontrolled spread dies out.

    The origin of the nonlinear model is globally asymptotically stable
    exactly when alpha >= eta * lambda_max(adjacency).
    """
    positive = model.modes.positive_eigenvalues
    lambda_max = float(positive[0] * model.num_nodes) if positive.size else 0.0
    return lambda_max, bool(model.alpha >= model.eta * lambda_max)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Backward Riccati sweep: auxiliary scalar plus one column per eigendirection.

    times ascend from 0 to the horizon; modes[k, l] is the l-th eigendirection
    value at times[k] and eigenvalues[l] the matching normalized eigenvalue.
    """

    times: np.ndarray
    auxiliary: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray

    def value_at(self, t: float) -> tuple[float, np.ndarray]:
        aux = float(np.interp(t, self.times, self.auxiliary))
        vals = np.array([np.interp(t, self.times, self.modes[:, j])
                         for j in range(self.modes.shape[1])])
        return aux, vals

    @property
    def quadratic_denominators(self) -> np.ndarray:
        """Control-weight denominators lambda^2 - 2*lambda + 2 per eigendirection."""
        return self.eigenvalues ** 2 - 2.0 * self.eigenvalues + 2.0


def _riccati_field(params: RegulatorParams, lams: np.ndarray):
    linear = 2.0 * (params.alpha0 - params.eta_total * lams)
    denom = lams ** 2 - 2.0 * lams + 2.0
    gain = params.beta0 ** 2

    def field(t, pi):
        return linear * pi + gain * pi * pi / denom - params.state_weight_at(t)

    return field


def _solve_family(params: RegulatorParams, eigenvalues: np.ndarray,
                  num_steps: int) -> RiccatiSolution:
    """Backward sweep of the scalar Riccati family; index 0 is the auxiliary.

    A second sweep at half the step size guards against integrator error;
    disagreement beyond 1e-7 at t=0 (where backward error is largest) aborts.
    """
    lams = np.concatenate(([0.0], eigenvalues))
    terminal = np.full(lams.size, params.terminal_weight, dtype=float)
    fn = _riccati_field(params, lams)
    try:
        times, values = rk4(fn, params.horizon, 0.0, terminal, num_steps)
        _, refined = rk4(fn, params.horizon, 0.0, terminal, 2 * num_steps,
                         record=False)
    except NumericsError:
        _name_blowup(params, lams, num_steps)
        raise
    drift = float(np.abs(values[-1] - refined).max())
    if drift > 1e-7:
        raise NumericsError(
            f"Riccati integration not converged: step-halving drift {drift:.3e}")
    times = times[::-1]
    values = values[::-1]
    return RiccatiSolution(np.ascontiguousarray(times),
                           np.ascontiguousarray(values[:, 0]),
                           np.ascontiguousarray(values[:, 1:]),
                           np.array(eigenvalues, dtype=float))


def _name_blowup(params: RegulatorParams, lams: np.ndarray, num_steps: int):
    """Re-run each direction alone to report which one escaped."""
    for idx, lam in enumerate(lams):
        fn = _riccati_field(params, np.array([lam]))
        try:
            rk4(fn, params.horizon, 0.0, np.array([params.terminal_weight]),
                num_steps, record=False)
        except NumericsError as exc:
            which = "auxiliary direction" if idx == 0 else \
                f"eigendirection with eigenvalue {lam:.6g}"
            raise NumericsError(f"Riccati blow-up in the {which}") from exc


def solve_riccati_finite(model: EpidemicModel,
                         num_steps: int = 10_000) -> RiccatiSolution:
    """Riccati sweep for the finite network, one equation per nonzero eigenvalue.

    Eigenvalues enter normalized by the node count, exactly as the pixel
    graphon of the adjacency produces them, so this shares every float with
    `solve_riccati_graphon` on that graphon.
    """
    return _solve_family(model.regulator_params(), model.modes.eigenvalues,
                         num_steps)


def solve_riccati_graphon(kernel: Graphon, params: RegulatorParams,
                          num_steps: int = 10_000) -> RiccatiSolution:
    """Riccati sweep for a graphon limit, one equation per nonzero eigenvalue."""
    return _solve_family(params, decompose(kernel).eigenvalues, num_steps)


def optimal_control_finite(model: EpidemicModel, sol: RiccatiSolution,
                           state: np.ndarray, t: float) -> np.ndarray:
    """Optimal vaccination/medication rates at time t for the linearized model.

    Feedback mixes a uniform term on the state with per-eigendirection
    corrections on its projections.  (Stabilizing sign, which is the negation
    of one common statement of this law; validated against a full-matrix
    regulator.)
    """
    aux, pis = sol.value_at(t)
    basis = model.eigenvector_matrix
    half = 0.5 * model.beta0 * aux
    u = -half * np.asarray(state, dtype=float)
    if basis.shape[1]:
        gains = model.beta0 * pis / sol.quadratic_denominators - half
        u = u - basis @ (gains * (basis.T @ state))
    return u


def optimal_control_graphon(kernel: Graphon, sol: RiccatiSolution,
                            state: Function, t: float, beta0: float,
                            modes: SpectralDecomposition | None = None) -> Function:
    """Graphon-limit version of the feedback, acting on L2 functions."""
    if modes is None:
        modes = decompose(kernel)
    aux, pis = sol.value_at(t)
    half = 0.5 * beta0 * aux
    u = -half * state
    gains = beta0 * pis / sol.quadratic_denominators - half
    for gain, func in zip(gains, modes.eigenfunctions):
        u = u - (gain * inner_product(state, func)) * func
    return u


def linear_feedback(model: EpidemicModel, sol: RiccatiSolution):
    """Closed-loop control law (t, state) -> control vector."""
    def law(t: float, state: np.ndarray) -> np.ndarray:
        return optimal_control_finite(model, sol, state, t)
    return law


def _record_controls(control, times: np.ndarray, states: np.ndarray):
    if control is None:
        return None
    return np.stack([control(t, p) for t, p in zip(times, states)])


def simulate_linearized(model: EpidemicModel, p0: np.ndarray, control=None,
                        num_steps: int = 1000) -> Trajectory:
    """Linearized closed loop dp = (-alpha0 I + eta A) p + beta0 u(t, p)."""
    drift = -model.alpha * np.eye(model.num_nodes) + model.eta * model.adjacency
    p0 = np.asarray(p0, dtype=float)

    if control is None:
        def fn(t, p):
            return drift @ p
    else:
        def fn(t, p):
            return drift @ p + model.beta0 * control(t, p)

    times, states = rk4(fn, 0.0, model.horizon, p0, num_steps)
    return Trajectory(times, states, _record_controls(control, times, states))


def simulate_nonlinear(model: EpidemicModel, p0: np.ndarray, control=None,
                       num_steps: int = 1000) -> Trajectory:
    """Nonlinear spread dp_i = -alpha p_i + eta (1-p_i) sum_j a_ij p_j + beta0 u_i.

    Initial fractions must lie in [0,1].  States escaping [-0.1, 1.1] mark the
    trajectory with `range_warning` (the meta-population reading breaks down)
    but do not abort.
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.min() < 0.0 or p0.max() > 1.0:
        raise ValueError("initial infected fractions must lie in [0, 1]")
    adjacency = model.adjacency

    if control is None:
        def fn(t, p):
            return -model.alpha * p + model.eta * (1.0 - p) * (adjacency @ p)
    else:
        def fn(t, p):
            return (-model.alpha * p + model.eta * (1.0 - p) * (adjacency @ p)
                    + model.beta0 * control(t, p))

    times, states = rk4(fn, 0.0, model.horizon, p0, num_steps)
    out_of_range = bool(states.min() < -0.1 or states.max() > 1.1)
    if out_of_range:
        warnings.warn("infection fractions left [-0.1, 1.1]; the model "
                      "interpretation is unreliable", RuntimeWarning)
    return Trajectory(times, states, _record_controls(control, times, states),
                      range_warning=out_of_range)


def closed_loop_cost(model: EpidemicModel, trajectory: Trajectory,
                     controls: np.ndarray | None = None) -> float:
    """Quadratic cost: state weight, control effort, and neighbor-equity penalty.

    The running integrand is q_t |p|^2 + |u|^2 + |(I - A/N) u|^2 in Euclidean
    norms, integrated by the trapezoid rule on the trajectory grid, plus the
    terminal term q_T |p_T|^2.
    """
    if controls is None:
        controls = trajectory.controls
    if controls is None:
        controls = np.zeros_like(trajectory.states)
    params = model.regulator_params()
    times = trajectory.times
    states = trajectory.states
    averaging = np.eye(model.num_nodes) - model.adjacency / model.num_nodes
    weights = np.array([params.state_weight_at(t) for t in times])
    running = (weights * np.sum(states ** 2, axis=1)
               + np.sum(controls ** 2, axis=1)
               + np.sum((controls @ averaging.T) ** 2, axis=1))
    terminal = params.terminal_weight * float(np.sum(states[-1] ** 2))
    return float(_trapz(running, times) + terminal)


@dataclass(frozen=True, eq=False)
class ProjectionReport:
    """States and controls split into eigendirection projections plus residuals.

    state_coefficients[k, l] is the Euclidean projection of the state at
    times[k] onto eigenvector l; auxiliary arrays hold what remains after all
    projections are removed.
    """

    times: np.ndarray
    eigenvalues: np.ndarray
    state_coefficients: np.ndarray
    auxiliary_states: np.ndarray
    control_coefficients: np.ndarray | None = None
    auxiliary_controls: np.ndarray | None = None

    def reconstruction_error(self, states: np.ndarray,
                             basis: np.ndarray) -> float:
        rebuilt = self.state_coefficients @ basis.T + self.auxiliary_states
        return float(np.abs(rebuilt - states).max())


def project_trajectories(trajectory: Trajectory,
                         decomposition: SpectralDecomposition,
                         controls: np.ndarray | None = None) -> ProjectionReport:
    """Split a trajectory into eigenstates, eigencontrols and auxiliary parts."""
    n = trajectory.num_blocks
    funcs = decomposition.eigenfunctions
    if funcs and funcs[0].num_blocks != n:
        raise ValueError("decomposition partition does not match the trajectory")
    basis = (np.stack([f.values for f in funcs], axis=1) / np.sqrt(n)
             if funcs else np.zeros((n, 0)))
    if controls is None:
        controls = trajectory.controls
    state_coeffs = trajectory.states @ basis
    aux_states = trajectory.states - state_coeffs @ basis.T
    control_coeffs = aux_controls = None
    if controls is not None:
        control_coeffs = controls @ basis
        aux_controls = controls - control_coeffs @ basis.T
    return ProjectionReport(trajectory.times, decomposition.eigenvalues,
                            state_coeffs, aux_states, control_coeffs, aux_controls)
