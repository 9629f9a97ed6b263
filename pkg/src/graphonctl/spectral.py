"""Spectral decomposition of graphon operators and low-rank approximation.

Decompositions are exact per family: a dense symmetric eigensolve for step
kernels (graphon eigenvalues are the matrix eigenvalues over N) and closed
forms for sinusoidal kernels.  Truncations, Fourier-projected truncations and
all the error formulas here are evaluated analytically; `FiniteRankKernel`
carries sums of separable terms so that L2 distances reduce to Gram matrices
of exact inner products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IncompatibleOperandsError, NumericsError
from .functions import (
    Function,
    PiecewiseConstantFunction,
    TrigPolynomial,
    inner_product,
)
from .graphons import (
    Graphon,
    SampledGraphon,
    SinusoidalGraphon,
    StepGraphon,
    l2_norm,
    subtract,
)

# Relative cutoff below which eigenvalues count as numerically zero.
ZERO_EIGENVALUE_RTOL = 1e-12


def _tie_ordered(values: np.ndarray) -> np.ndarray:
    """Indices sorting by |value| descending, positive before negative on ties.

    The sort is stable, so exact ties of equal sign keep their input order.
    """
    return np.lexsort((values < 0.0, -np.abs(values)))


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip so the first non-negligible entry is positive (deterministic output)."""
    scale = np.abs(vec).max()
    for entry in vec:
        if abs(entry) > 1e-12 * scale:
            return -vec if entry < 0.0 else vec
    return vec


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ordered nonzero eigenpairs of a graphon operator.

    eigenvalues[ℓ] and eigenfunctions[ℓ] pair up; ordering is |λ| descending
    with positive eigenvalues ahead of negative ones on ties.  Zero eigenvalues
    are dropped; `rank` is the number kept.
    """

    eigenvalues: np.ndarray
    eigenfunctions: tuple
    source: Graphon

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    @property
    def eigenpairs(self) -> list:
        return list(zip(self.eigenvalues, self.eigenfunctions))

    @property
    def positive_eigenvalues(self) -> np.ndarray:
        """Positive eigenvalues, largest first."""
        pos = self.eigenvalues[self.eigenvalues > 0.0]
        return np.sort(pos)[::-1]

    @property
    def negative_eigenvalues(self) -> np.ndarray:
        """Negative eigenvalues, most negative first."""
        neg = self.eigenvalues[self.eigenvalues < 0.0]
        return np.sort(neg)


def decompose(graphon: Graphon) -> SpectralDecomposition:
    """Eigenvalues and orthonormal eigenfunctions of the integral operator.

    Step kernels: symmetric eigensolve of the block matrix; operator
    eigenvalues are matrix eigenvalues divided by the block count, and each
    eigenvector v lifts to the piecewise-constant function sqrt(N) * v (unit
    L2 norm).  Sinusoidal kernels decompose in closed form onto the constant
    function and the sqrt(2) cos / sqrt(2) sin harmonics.
    """
    if isinstance(graphon, SampledGraphon):
        raise TypeError("sampled grids are a quadrature reference, not decomposable; "
                        "build a StepGraphon from the grid instead")
    if isinstance(graphon, StepGraphon):
        coeffs = graphon.coeffs
        if not np.allclose(coeffs, coeffs.T, rtol=0.0, atol=1e-10):
            raise ValueError("cannot decompose an asymmetric kernel")
        n = graphon.num_blocks
        mu, vecs = np.linalg.eigh(0.5 * (coeffs + coeffs.T))
        lam = mu / n
        order = _tie_ordered(lam)
        lam = lam[order]
        vecs = vecs[:, order]
        keep = np.abs(lam) > ZERO_EIGENVALUE_RTOL * (np.abs(lam).max() if lam.size else 0.0)
        funcs = tuple(
            PiecewiseConstantFunction(_fix_sign(vecs[:, i]) * np.sqrt(n))
            for i in np.nonzero(keep)[0])
        return SpectralDecomposition(lam[keep], funcs, graphon)
    if isinstance(graphon, SinusoidalGraphon):
        vals = [graphon.constant]
        funcs = [TrigPolynomial.constant_function(1.0)]
        for k in range(1, graphon.harmonics + 1):
            half = 0.5 * graphon.cosine_coeffs[k - 1]
            vals.extend([half, half])
            funcs.extend([TrigPolynomial.cosine_mode(k), TrigPolynomial.sine_mode(k)])
        lam = np.array(vals)
        top = np.abs(lam).max() if lam.size else 0.0
        keep = np.abs(lam) > ZERO_EIGENVALUE_RTOL * top
        lam, funcs = lam[keep], [f for f, k in zip(funcs, keep) if k]
        order = _tie_ordered(lam)
        return SpectralDecomposition(lam[order], tuple(funcs[i] for i in order), graphon)
    raise IncompatibleOperandsError(f"cannot decompose {type(graphon).__name__}")


@dataclass(frozen=True, eq=False)
class FiniteRankKernel:
    """Sum of separable symmetric terms: K(x,y) = sum_i weights[i] f_i(x) f_i(y).

    The factor functions need not be orthogonal, so norms go through the Gram
    matrix of exact inner products rather than a sum of squared weights.
    """

    terms: tuple  # of (weight: float, factor: Function)

    @property
    def rank(self) -> int:
        return len(self.terms)

    def value(self, x, y):
        out = 0.0
        for weight, factor in self.terms:
            out = out + weight * factor(x) * factor(y)
        return out

    def l2_norm(self) -> float:
        if not self.terms:
            return 0.0
        weights = np.array([w for w, _ in self.terms])
        gram = np.array([[inner_product(f, g) for _, g in self.terms]
                         for _, f in self.terms])
        sq = float(weights @ (gram ** 2) @ weights)
        if sq < -1e-10:
            raise NumericsError(f"negative squared norm {sq} from Gram evaluation")
        return float(np.sqrt(max(sq, 0.0)))

    def __sub__(self, other: "FiniteRankKernel") -> "FiniteRankKernel":
        negated = tuple((-w, f) for w, f in other.terms)
        return FiniteRankKernel(self.terms + negated)

    def __repr__(self):
        return f"FiniteRankKernel(rank={self.rank})"


def to_finite_rank(kernel) -> FiniteRankKernel:
    """Express a graphon (or pass through a finite-rank kernel) as separable terms."""
    if isinstance(kernel, FiniteRankKernel):
        return kernel
    decomp = decompose(kernel)
    return FiniteRankKernel(tuple(zip(decomp.eigenvalues.tolist(), decomp.eigenfunctions)))


def l2_distance(a, b) -> float:
    """Exact L2 distance between kernels, across families.

    Same-family pairs subtract directly; mixed pairs (or finite-rank kernels)
    are compared through their separable expansions, where the distance is a
    Gram-matrix computation with exact inner products.
    """
    if isinstance(a, StepGraphon) and isinstance(b, StepGraphon):
        return l2_norm(subtract(a, b))
    if isinstance(a, SinusoidalGraphon) and isinstance(b, SinusoidalGraphon):
        return l2_norm(subtract(a, b))
    return (to_finite_rank(a) - to_finite_rank(b)).l2_norm()


def truncate(decomp: SpectralDecomposition, rank: int):
    """Keep the `rank` leading eigenpairs as a kernel.

    Step sources reconstruct to a step kernel.  Sinusoidal sources reconstruct
    to a sinusoidal kernel when the kept pairs close every cos/sin harmonic
    couple; a cut through the middle of a couple is not diagonally constant,
    so it falls back to an explicit finite-rank kernel.
    """
    if not 1 <= rank <= decomp.rank:
        raise ValueError(f"rank must be in [1, {decomp.rank}], got {rank}")
    lam = decomp.eigenvalues[:rank]
    funcs = decomp.eigenfunctions[:rank]
    if isinstance(decomp.source, StepGraphon):
        vecs = np.stack([f.values for f in funcs], axis=1)
        return StepGraphon((vecs * lam) @ vecs.T, validate=False)
    constant = 0.0
    by_harmonic: dict[int, dict[str, float]] = {}
    for value, func in zip(lam, funcs):
        kind, harmonic = _trig_mode_kind(func)
        if kind == "const":
            constant = value
        else:
            by_harmonic.setdefault(harmonic, {})[kind] = value
    coeffs = np.zeros(max(by_harmonic, default=0))
    for harmonic, parts in by_harmonic.items():
        if set(parts) != {"cos", "sin"} or parts["cos"] != parts["sin"]:
            return FiniteRankKernel(tuple(zip(lam.tolist(), funcs)))
        coeffs[harmonic - 1] = 2.0 * parts["cos"]
    return SinusoidalGraphon(constant, coeffs, validate=False)


def _trig_mode_kind(func: TrigPolynomial) -> tuple[str, int]:
    """Classify a sinusoidal eigenfunction as const / cos-k / sin-k."""
    if func.order == 0:
        return "const", 0
    nz_cos = np.nonzero(func.cos_amps)[0]
    return ("cos", int(nz_cos[0]) + 1) if nz_cos.size else \
        ("sin", int(np.nonzero(func.sin_amps)[0][0]) + 1)


def truncation_error(decomp: SpectralDecomposition, rank: int) -> float:
    """L2 error of the rank-`rank` truncation: sqrt(||A||_2^2 - sum of kept λ^2).

    Evaluated as the dropped-tail sum sqrt(sum of λ^2 past `rank`), the same
    number without the near-full-rank cancellation of the subtraction form.
    """
    if not 0 <= rank <= decomp.rank:
        raise ValueError(f"rank must be in [0, {decomp.rank}], got {rank}")
    return float(np.sqrt(np.sum(decomp.eigenvalues[rank:] ** 2)))


# -- Fourier approximation of eigenfunctions ----------------------------------

@dataclass(frozen=True, eq=False)
class FourierEigenfunction:
    """Orthogonal projection of a function onto harmonics 0..order.

    Stored as a real trigonometric polynomial; `complex_coefficients` gives the
    equivalent exponential-basis coefficients for harmonics -order..order, and
    `toeplitz_matrix` the quadratic-form matrix T with conj(e)^T T e
    reproducing the polynomial on e = (1, exp(2*pi*i*x), ..., exp(2*pi*i*n*x)).
    The matrix is exposed as data only; no algorithm here consumes it.
    """

    polynomial: TrigPolynomial
    order: int

    def __call__(self, x):
        return self.polynomial(x)

    def complex_coefficients(self) -> np.ndarray:
        """Coefficients c_h, h = -order..order, with f = sum c_h exp(2*pi*i*h*x)."""
        n = self.order
        coeffs = np.zeros(2 * n + 1, dtype=complex)
        coeffs[n] = self.polynomial.constant
        cos_amps = self.polynomial.cos_amps
        sin_amps = self.polynomial.sin_amps
        for k in range(1, min(n, self.polynomial.order) + 1):
            beta, alpha = cos_amps[k - 1], sin_amps[k - 1]
            coeffs[n + k] = 0.5 * (beta - 1j * alpha)
            coeffs[n - k] = 0.5 * (beta + 1j * alpha)
        return coeffs

    def toeplitz_matrix(self) -> np.ndarray:
        n = self.order
        c = self.complex_coefficients()
        # diagonal h = col - row holds c_h split over its n+1-|h| entries
        weights = (n + 1) - np.abs(np.arange(-n, n + 1))
        spread = c / weights
        return scipy.linalg.toeplitz(np.conj(spread[n:]), spread[n:])


def fourier_project(func: Function, order: int) -> FourierEigenfunction:
    """Project onto the Fourier subspace spanned by harmonics 0..order.

    Coefficients are exact inner products (analytic block integrals for
    piecewise-constant input), so trigonometric inputs of order <= `order`
    project to themselves.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    constant = inner_product(func, TrigPolynomial.constant_function(1.0))
    cos_coeffs = np.array([inner_product(func, TrigPolynomial.cosine_mode(k))
                           for k in range(1, order + 1)])
    sin_coeffs = np.array([inner_product(func, TrigPolynomial.sine_mode(k))
                           for k in range(1, order + 1)])
    poly = TrigPolynomial.from_orthonormal(constant, cos_coeffs, sin_coeffs)
    return FourierEigenfunction(poly, order)


def fourier_truncate(decomp: SpectralDecomposition, rank: int,
                     order: int) -> tuple[FiniteRankKernel, float]:
    """Truncate to `rank` eigenpairs with Fourier-projected eigenfunctions.

    Returns the kernel sum of lambda_l * p_l(x) p_l(y) and the triangle bound
    on its L2 error: spectral tail plus the exactly measured projection error.
    """
    if not 0 <= rank <= decomp.rank:
        raise ValueError(f"rank must be in [0, {decomp.rank}], got {rank}")
    if order < 1:
        raise ValueError("order must be >= 1")
    lam = decomp.eigenvalues[:rank].tolist()
    funcs = decomp.eigenfunctions[:rank]
    projected = tuple(fourier_project(f, order).polynomial for f in funcs)
    approx = FiniteRankKernel(tuple(zip(lam, projected)))
    exact_part = FiniteRankKernel(tuple(zip(lam, funcs)))
    bound = truncation_error(decomp, rank) + (exact_part - approx).l2_norm()
    return approx, bound


# -- error bounds for functions of operators -----------------------------------

def operator_function_error(kernel, approx, mode: str,
                            exponent: int | None = None) -> float:
    """A-priori bound on the discrepancy of an operator function.

    With c = max of the two kernel L2 norms and D = ||kernel - approx||_2:
    mode "power" bounds the L2 distance of the operator powers by
    exponent * c**exponent * D; mode "exponential" bounds the operator-norm
    distance of the exponentials by c * exp(c) * D.

    Caution: these constants are loose only for c >= 1.  For c < 1 they can
    undershoot the true discrepancy (see bound_for_power / bound_for_exponential
    for the always-valid variants).
    """
    c = max(_kernel_l2(kernel), _kernel_l2(approx))
    delta = l2_distance(kernel, approx)
    if mode == "power":
        if exponent is None or exponent < 1:
            raise ValueError("power mode needs an exponent >= 1")
        return exponent * c ** exponent * delta
    if mode == "exponential":
        return c * float(np.exp(c)) * delta
    raise ValueError(f"unknown mode {mode!r}; expected 'power' or 'exponential'")


def bound_for_power(c: float, delta: float, exponent: int) -> float:
    """Valid power-discrepancy bound exponent * c**(exponent-1) * delta.

    From the telescoping A^n - B^n = sum_j A^j (A-B) B^(n-1-j): each of the n
    terms is at most c**(n-1) * delta because operator norms are below L2 norms.
    """
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    return exponent * c ** (exponent - 1) * delta


def bound_for_exponential(c: float, delta: float) -> float:
    """Valid exponential-discrepancy bound exp(c) * delta.

    From e^A - e^B = integral of e^{sA} (A-B) e^{(1-s)B} ds over s in [0,1].
    """
    return float(np.exp(c)) * delta


def _kernel_l2(kernel) -> float:
    if isinstance(kernel, FiniteRankKernel):
        return kernel.l2_norm()
    return l2_norm(kernel)


def measured_function_discrepancy(kernel, approx, mode: str,
                                  exponent: int | None = None,
                                  resolution: int = 512) -> float:
    """Quadrature measurement of the discrepancy the bounds above control.

    Both kernels are midpoint-sampled at the given resolution and the operator
    function is evaluated on the sampled matrices (exact for step kernels when
    the resolution is a multiple of the block count).
    """
    grid_a = SampledGraphon.from_kernel(kernel, resolution).grid
    grid_b = SampledGraphon.from_kernel(approx, resolution).grid
    m = resolution
    if mode == "power":
        if exponent is None or exponent < 1:
            raise ValueError("power mode needs an exponent >= 1")
        diff = (np.linalg.matrix_power(grid_a, exponent)
                - np.linalg.matrix_power(grid_b, exponent)) / float(m) ** (exponent - 1)
        return float(np.linalg.norm(diff) / m)
    if mode == "exponential":
        # operator exponential of a sampled kernel = matrix exponential of grid/m
        diff = _symmetric_expm(grid_a / m) - _symmetric_expm(grid_b / m)
        return float(np.linalg.norm(diff, 2))
    raise ValueError(f"unknown mode {mode!r}; expected 'power' or 'exponential'")


def _symmetric_expm(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    return (v * np.exp(w)) @ v.T


# -- convergence of sampled-graph spectra --------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    """One size in an eigenvalue-convergence experiment."""

    size: int
    scaled_eigenvalues: tuple
    limit_eigenvalues: tuple
    max_error: float


def eigenvalue_convergence_experiment(sampler, sizes, limit: Graphon,
                                      top_k: int = 5) -> list[ConvergenceRow]:
    """Top scaled adjacency eigenvalues of sampled graphs against the limit kernel.

    `sampler(size)` must return a symmetric adjacency matrix.  For each size
    the top_k eigenvalues by magnitude of adjacency/size are compared with the
    limit graphon's leading eigenvalues (padded with zeros past its rank).
    """
    limit_vals = decompose(limit).eigenvalues
    target = np.zeros(top_k)
    count = min(top_k, limit_vals.size)
    target[:count] = limit_vals[:count]
    rows = []
    for size in sizes:
        adjacency = np.asarray(sampler(size), dtype=float)
        if adjacency.shape != (size, size):
            raise ValueError(f"sampler returned shape {adjacency.shape} for size {size}")
        scaled = np.linalg.eigvalsh(adjacency) / size
        scaled = scaled[_tie_ordered(scaled)][:top_k]
        padded = np.zeros(top_k)
        padded[:scaled.size] = scaled
        error = float(np.abs(padded - target).max())
        rows.append(ConvergenceRow(int(size), tuple(padded.tolist()),
                                   tuple(target.tolist()), error))
    return rows
