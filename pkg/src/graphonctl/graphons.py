"""Graphon representations and the integral-operator algebra on them.

Three kernel families are supported:

* ``StepGraphon`` -- constant on the blocks of a uniform partition; the pixel
  picture of a finite network lives here.
* ``SinusoidalGraphon`` -- diagonally constant trigonometric kernels
  ``constant + sum_k b_k cos(2*pi*k*(x - y))`` with finitely many harmonics.
* ``SampledGraphon`` -- a midpoint-sampled grid of an arbitrary kernel, kept
  only as a quadrature reference for checking the closed forms.

All operations (`apply`, `compose`, `power`, `exponential`, norms) are exact
within the first two families; nothing in this module integrates numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IncompatibleOperandsError, PartitionMismatchError
from .functions import (
    PiecewiseConstantFunction,
    TrigPolynomial,
    block_index,
    common_block_count,
    trig_block_integrals,
)

# Slack applied to the [-1, 1] range and symmetry checks.
RANGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Kernel constant on the blocks of a uniform partition (pixel picture).

    coeffs[i, j] is the kernel value on block (i, j); each pixel has side 1/N.
    Validated kernels are symmetric with entries in [-1, 1].  ``validate=False``
    skips both checks so intermediate algebra results (products, differences,
    truncations) that leave the box remain representable.
    """

    coeffs: np.ndarray
    validate: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise ValueError("coeffs must be a non-empty square matrix")
        if self.validate:
            if not np.allclose(c, c.T, rtol=0.0, atol=RANGE_TOL):
                raise ValueError("coeffs must be symmetric")
            if np.abs(c).max() > 1.0 + RANGE_TOL:
                raise ValueError("kernel values must lie in [-1, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def num_blocks(self) -> int:
        return self.coeffs.shape[0]

    @property
    def probability_kernel(self) -> bool:
        """True when all values lie in [0, 1], i.e. the kernel can drive edge sampling."""
        return bool(self.coeffs.min() >= -RANGE_TOL and self.coeffs.max() <= 1.0 + RANGE_TOL)

    def value(self, x, y):
        ix = block_index(x, self.num_blocks)
        iy = block_index(y, self.num_blocks)
        return self.coeffs[ix, iy]

    def refine(self, factor: int) -> "StepGraphon":
        """Same kernel expressed on a partition `factor` times finer."""
        return StepGraphon(_refine_matrix(self.coeffs, factor), validate=False)

    def __repr__(self):
        return f"StepGraphon(num_blocks={self.num_blocks})"


@dataclass(frozen=True, eq=False)
class SinusoidalGraphon:
    """Diagonally constant kernel constant + sum_k b_k cos(2*pi*k*(x-y)).

    ``cosine_coeffs[k-1]`` is the coefficient b_k of harmonic k.  Validated
    kernels satisfy |constant| + sum |b_k| <= 1, which keeps values in [-1, 1].
    """

    constant: float = 0.0
    cosine_coeffs: np.ndarray = ()
    validate: bool = True

    def __post_init__(self):
        b = np.atleast_1d(np.array(self.cosine_coeffs, dtype=float)) \
            if np.size(self.cosine_coeffs) else np.zeros(0)
        object.__setattr__(self, "constant", float(self.constant))
        if self.validate and abs(self.constant) + np.abs(b).sum() > 1.0 + RANGE_TOL:
            raise ValueError("|constant| + sum|cosine_coeffs| must not exceed 1")
        b.setflags(write=False)
        object.__setattr__(self, "cosine_coeffs", b)

    @property
    def harmonics(self) -> int:
        return self.cosine_coeffs.size

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, self.constant)
        for k in range(1, self.harmonics + 1):
            out = out + self.cosine_coeffs[k - 1] * np.cos(2.0 * math.pi * k * (x - y))
        return out

    def __repr__(self):
        return f"SinusoidalGraphon(constant={self.constant}, harmonics={self.harmonics})"


@dataclass(frozen=True, eq=False)
class SampledGraphon:
    """Midpoint samples of a kernel on an M x M grid; quadrature reference only.

    The grid defines a step kernel whose integral operator approximates the
    sampled one; `operator_eigenvalues` exposes the quadrature spectrum used to
    cross-check closed-form results.  Spectral routines reject this type.
    """

    grid: np.ndarray

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
            raise ValueError("grid must be a non-empty square matrix")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_kernel(cls, kernel, resolution: int) -> "SampledGraphon":
        """Sample any object exposing value(x, y) at block midpoints."""
        mids = (np.arange(resolution) + 0.5) / resolution
        return cls(kernel.value(mids[:, None], mids[None, :]))

    @property
    def resolution(self) -> int:
        return self.grid.shape[0]

    @property
    def num_blocks(self) -> int:
        return self.grid.shape[0]

    @property
    def coeffs(self) -> np.ndarray:
        return self.grid

    def value(self, x, y):
        ix = block_index(x, self.resolution)
        iy = block_index(y, self.resolution)
        return self.grid[ix, iy]

    def operator_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the midpoint-quadrature operator, |.|-descending."""
        vals = np.linalg.eigvalsh(self.grid) / self.resolution
        order = np.lexsort((-np.sign(vals), -np.abs(vals)))
        return vals[order]

    def __repr__(self):
        return f"SampledGraphon(resolution={self.resolution})"


Graphon = StepGraphon | SinusoidalGraphon | SampledGraphon

_STEP_LIKE = (StepGraphon, SampledGraphon)


def _refine_matrix(coeffs: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return coeffs
    return np.repeat(np.repeat(coeffs, factor, axis=0), factor, axis=1)


def _merged_coeffs(g, h) -> tuple[np.ndarray, np.ndarray, int]:
    merged = common_block_count(g.num_blocks, h.num_blocks)
    return (_refine_matrix(g.coeffs, merged // g.num_blocks),
            _refine_matrix(h.coeffs, merged // h.num_blocks),
            merged)


def apply(graphon: Graphon, f):
    """Integral-operator action: x -> integral of A(x, y) f(y) dy, exact per family."""
    if isinstance(graphon, _STEP_LIKE):
        n = graphon.num_blocks
        if isinstance(f, PiecewiseConstantFunction):
            merged = common_block_count(n, f.num_blocks)
            coeffs = _refine_matrix(graphon.coeffs, merged // n)
            vals = np.repeat(f.values, merged // f.num_blocks)
            return PiecewiseConstantFunction(coeffs @ vals / merged)
        if isinstance(f, TrigPolynomial):
            # integrate f exactly over each y-block
            return PiecewiseConstantFunction(graphon.coeffs @ f.block_integrals(n))
    if isinstance(graphon, SinusoidalGraphon):
        b = graphon.cosine_coeffs
        if isinstance(f, TrigPolynomial):
            order = min(graphon.harmonics, f.order)
            ca, sa = f.cos_amps[:order], f.sin_amps[:order]
            half = 0.5 * b[:order]
            return TrigPolynomial(graphon.constant * f.constant, half * ca, half * sa)
        if isinstance(f, PiecewiseConstantFunction):
            mean = float(np.mean(f.values))
            if graphon.harmonics == 0:
                return TrigPolynomial(graphon.constant * mean)
            cos_ints, sin_ints = trig_block_integrals(
                f.num_blocks, np.arange(1, graphon.harmonics + 1))
            return TrigPolynomial(graphon.constant * mean,
                                  b * (cos_ints @ f.values),
                                  b * (sin_ints @ f.values))
    raise IncompatibleOperandsError(
        f"cannot apply {type(graphon).__name__} to {type(f).__name__}")


def compose(g: Graphon, h: Graphon) -> Graphon:
    """Operator product as a kernel: (x, y) -> integral of g(x, z) h(z, y) dz.

    Note the result of composing two distinct kernels need not be symmetric;
    it is returned unvalidated.
    """
    if isinstance(g, _STEP_LIKE) and isinstance(h, _STEP_LIKE):
        cg, ch, merged = _merged_coeffs(g, h)
        return StepGraphon(cg @ ch / merged, validate=False)
    if isinstance(g, SinusoidalGraphon) and isinstance(h, SinusoidalGraphon):
        order = max(g.harmonics, h.harmonics)
        bg = np.pad(g.cosine_coeffs, (0, order - g.harmonics))
        bh = np.pad(h.cosine_coeffs, (0, order - h.harmonics))
        return SinusoidalGraphon(g.constant * h.constant, 0.5 * bg * bh, validate=False)
    raise IncompatibleOperandsError(
        f"cannot compose {type(g).__name__} with {type(h).__name__}; "
        "sample both onto a common grid first")


def power(graphon: Graphon, exponent: int) -> Graphon:
    """Operator power as a kernel, exponent >= 1.

    The zeroth power is the identity, which is not a graphon (it has no
    kernel), so exponent 0 is rejected.
    """
    if not isinstance(exponent, (int, np.integer)) or exponent < 1:
        raise ValueError("exponent must be an integer >= 1; "
                         "the identity operator has no kernel representation")
    if isinstance(graphon, _STEP_LIKE):
        n = graphon.num_blocks
        mat = np.linalg.matrix_power(graphon.coeffs, exponent) / float(n) ** (exponent - 1)
        return StepGraphon(mat, validate=False)
    if isinstance(graphon, SinusoidalGraphon):
        b = graphon.cosine_coeffs
        return SinusoidalGraphon(graphon.constant ** exponent,
                                 (0.5 * b) ** (exponent - 1) * b,
                                 validate=False)
    raise IncompatibleOperandsError(f"cannot take powers of {type(graphon).__name__}")


@dataclass(frozen=True, eq=False)
class IdentityPlusGraphon:
    """Bounded operator scalar * I + (integral operator of `kernel`).

    Operator exponentials live here: e^{tA} = I + U_t where U_t is again a
    kernel in the same family as A.
    """

    scalar: float
    kernel: Graphon | None

    def apply(self, f):
        if self.kernel is None:
            return self.scalar * f
        return self.scalar * f + apply(self.kernel, f)


def exponential(graphon: Graphon, t: float) -> IdentityPlusGraphon:
    """Operator exponential e^{tA} = I + U_t, with U_t returned in-family.

    For step kernels U_t comes from a dense scaling-and-squaring matrix
    exponential of the block operator; for sinusoidal kernels it is exact.
    """
    if isinstance(graphon, _STEP_LIKE):
        n = graphon.num_blocks
        expm = scipy.linalg.expm(graphon.coeffs * (t / n))
        part = n * (expm - np.eye(n))
        if isinstance(graphon, SampledGraphon):
            return IdentityPlusGraphon(1.0, SampledGraphon(part))
        return IdentityPlusGraphon(1.0, StepGraphon(part, validate=False))
    if isinstance(graphon, SinusoidalGraphon):
        const = np.expm1(graphon.constant * t)
        coeffs = 2.0 * np.expm1(0.5 * graphon.cosine_coeffs * t)
        return IdentityPlusGraphon(1.0, SinusoidalGraphon(const, coeffs, validate=False))
    raise IncompatibleOperandsError(f"cannot exponentiate {type(graphon).__name__}")


def l2_norm(graphon: Graphon) -> float:
    """Kernel L2 norm on [0,1]^2."""
    if isinstance(graphon, _STEP_LIKE):
        return float(np.linalg.norm(graphon.coeffs) / graphon.num_blocks)
    if isinstance(graphon, SinusoidalGraphon):
        return float(np.sqrt(graphon.constant ** 2
                             + 0.5 * np.sum(graphon.cosine_coeffs ** 2)))
    raise IncompatibleOperandsError(f"no L2 norm for {type(graphon).__name__}")


def operator_norm(graphon: Graphon) -> float:
    """Operator norm of the induced integral operator (largest singular value)."""
    if isinstance(graphon, _STEP_LIKE):
        return float(np.linalg.norm(graphon.coeffs, 2) / graphon.num_blocks)
    if isinstance(graphon, SinusoidalGraphon):
        candidates = [abs(graphon.constant)]
        if graphon.harmonics:
            candidates.append(0.5 * np.abs(graphon.cosine_coeffs).max())
        return float(max(candidates))
    raise IncompatibleOperandsError(f"no operator norm for {type(graphon).__name__}")


def subtract(g: Graphon, h: Graphon) -> Graphon:
    """Kernel difference g - h within a family (unvalidated result)."""
    if isinstance(g, _STEP_LIKE) and isinstance(h, _STEP_LIKE):
        cg, ch, _ = _merged_coeffs(g, h)
        return StepGraphon(cg - ch, validate=False)
    if isinstance(g, SinusoidalGraphon) and isinstance(h, SinusoidalGraphon):
        order = max(g.harmonics, h.harmonics)
        bg = np.pad(g.cosine_coeffs, (0, order - g.harmonics))
        bh = np.pad(h.cosine_coeffs, (0, order - h.harmonics))
        return SinusoidalGraphon(g.constant - h.constant, bg - bh, validate=False)
    raise IncompatibleOperandsError(
        f"cannot subtract {type(h).__name__} from {type(g).__name__}")


# -- cut norm -----------------------------------------------------------------

def _cut_norm_exact(coeffs: np.ndarray) -> float:
    """Max over vertex sets S, T of |sum_{i in S, j in T} coeffs[i, j]|.

    The objective is bilinear in the indicators, so for each S the best T picks
    exactly the columns whose S-restricted sums share a sign; enumerating all
    2^N choices of S is therefore exhaustive.
    """
    n = coeffs.shape[0]
    total = 1 << n
    bit_positions = np.arange(n, dtype=np.uint64)
    best = 0.0
    chunk = 1 << 14
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        subsets = ((masks[:, None] >> bit_positions) & 1).astype(float)
        col_sums = subsets @ coeffs
        pos = np.where(col_sums > 0.0, col_sums, 0.0).sum(axis=1)
        neg = np.where(col_sums < 0.0, col_sums, 0.0).sum(axis=1)
        best = max(best, float(pos.max(initial=0.0)), float(-neg.min(initial=0.0)))
    return best


def _cut_norm_heuristic(coeffs: np.ndarray, restarts: int, seed: int) -> float:
    """Alternating maximization over S and T; a lower bound only."""
    n = coeffs.shape[0]
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        start = rng.integers(0, 2, size=n).astype(float)
        for sense in (1.0, -1.0):
            s = start.copy()
            t = np.zeros(n)
            for _ in range(200):
                t_new = (sense * (coeffs.T @ s) > 0.0).astype(float)
                s_new = (sense * (coeffs @ t_new) > 0.0).astype(float)
                if np.array_equal(s_new, s) and np.array_equal(t_new, t):
                    break
                s, t = s_new, t_new
            best = max(best, abs(float(s @ coeffs @ t)))
    return best


def cut_norm(graphon: Graphon, exact_max_blocks: int = 20,
             heuristic_restarts: int = 32, seed: int = 0):
    """Cut norm sup_{S,T} |integral of the kernel over S x T|.

    Exact (by vertex-set enumeration) up to `exact_max_blocks` blocks; beyond
    that returns a (lower, upper) bracket combining an alternating-maximization
    lower bound with the operator-norm sandwich
    ||A||_op^2 / (8 sup|A|) <= ||A||_cut <= ||A||_op.
    """
    if not isinstance(graphon, StepGraphon):
        raise IncompatibleOperandsError("cut norm is implemented for step kernels only")
    n = graphon.num_blocks
    scale = float(n) ** 2
    if n <= exact_max_blocks:
        return _cut_norm_exact(graphon.coeffs) / scale
    sup = float(np.abs(graphon.coeffs).max())
    if sup == 0.0:
        return 0.0, 0.0
    op = operator_norm(graphon)
    lower = max(_cut_norm_heuristic(graphon.coeffs, heuristic_restarts, seed) / scale,
                op ** 2 / (8.0 * sup), 0.0)
    return lower, op
