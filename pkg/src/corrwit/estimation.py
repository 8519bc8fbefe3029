"""
Orbit parameters, the concentration bound and Monte Carlo estimates of the
witness-detected fraction of an isospectral orbit.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from corrwit import config
from corrwit.data_structures import (
    ClassKind,
    ClosedFormRow,
    FractionEstimate,
    OrbitParameters,
    Spectrum,
    StateClass,
)
from corrwit.errors import ValidationError
from corrwit.operators import ProjectorA, build_A
from corrwit.sampling import RandomStream, isospectral_sample
from corrwit.spaces import dim_space
from corrwit.witness import witness_value

logger = logging.getLogger(__name__)


def closed_form_parameters(state_class: StateClass) -> ClosedFormRow:
    """
    Closed-form N and 1 − X; pure arithmetic, no dimension cap.

    The bosonic entry is 2·C(d+2L−1, 2L)/(N(N+1)), the fraction of Sym²(H_b)
    spanned by the 2L-fold symmetric tensors; the row as printed elsewhere
    (one minus this) is kept in printed_one_minus_X.
    """
    d, L = state_class.d, state_class.L
    N = dim_space(state_class)
    kind = state_class.kind
    printed = None
    if kind is ClassKind.SEPARABLE:
        value = Fraction(2) ** (1 - L) * Fraction((d + 1) ** L, d ** L + 1)
    elif kind is ClassKind.BOSONIC:
        value = Fraction(2 * math.comb(d + 2 * L - 1, 2 * L), N * (N + 1))
        printed = 1 - value
    elif kind is ClassKind.SLATER:
        value = Fraction(2 * N, N + 1) * Fraction(d + 1, (L + 1) * (d + 1 - L))
    else:
        value = Fraction(math.comb(2 * d, d), (N + 1) * N)
    return ClosedFormRow(state_class, N, value, printed)


def numeric_X(A: ProjectorA) -> float:
    """tr(A) / dim Sym²(H); A is an orthogonal projector so its trace is its rank."""
    return A.trace / A.dim_sym2


def concentration_bound(N: int, X: float, delta: float) -> Tuple[float, bool]:
    """
    1 − exp(−N δ² (X+1)² / 64) and whether it applies.

    Returns (0.0, False) when delta <= 0.
    """
    if delta <= 0:
        return 0.0, False
    return -math.expm1(-N * delta ** 2 * (X + 1) ** 2 / 64.0), True


def orbit_parameters(state_class: StateClass, spectrum: Spectrum,
                     X: Optional[float] = None) -> OrbitParameters:
    """Bundle N, X, P_cr, purity, δ and the bound; X defaults to the closed form."""
    N = dim_space(state_class)
    if spectrum.N != N:
        raise ValidationError(f"spectrum has {spectrum.N} entries, {state_class.label} needs {N}")
    if X is None:
        X = float(closed_form_parameters(state_class).X)
    if not -config.OPERATOR_TOL <= X <= 1 + config.OPERATOR_TOL:
        raise ValidationError(f"X = {X!r} outside [0, 1]")
    P_cr = (1 - X) / (1 + X)
    purity = spectrum.purity
    delta = purity - P_cr
    bound, applicable = concentration_bound(N, X, delta)
    return OrbitParameters(N=N, X=X, P_cr=P_cr, purity=purity, delta=delta,
                           bound=bound, bound_applicable=applicable)


def orbit_mean_f(params: OrbitParameters) -> float:
    """
    Haar average of f over the orbit: (X+1)(purity − P_cr)/2.

    E[UρU† ⊗ UρU†] = (1+P)/(N(N+1)) P^sym + (1−P)/(N(N−1)) P^asym.
    """
    return (params.X + 1) * (params.purity - params.P_cr) / 2


def _witness_chunk(A: ProjectorA, spectrum: Spectrum, seed: int, indices: range) -> np.ndarray:
    values = np.empty(len(indices))
    for k, i in enumerate(indices):
        rho = isospectral_sample(spectrum, RandomStream(seed, i), A.state_class)
        values[k] = witness_value(A, rho).f_value
    return values


def sample_witness(A: ProjectorA, spectrum: Spectrum, n_samples: int,
                   seed: int = config.DEFAULT_SEED, threads: int = config.DEFAULT_THREADS,
                   chunk_size: int = config.CHUNK_SIZE) -> np.ndarray:
    """f on n_samples Haar samples of the orbit, in sample-index order."""
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    if spectrum.N != A.N:
        raise ValidationError(f"spectrum has {spectrum.N} entries, {A.state_class.label} needs {A.N}")
    chunks = [range(start, min(start + chunk_size, n_samples))
              for start in range(0, n_samples, chunk_size)]
    results = []
    done = 0
    next_report = 1
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for values in pool.map(lambda idx: _witness_chunk(A, spectrum, seed, idx), chunks):
            results.append(values)
            done += len(values)
            while next_report <= 4 and done * 4 >= next_report * n_samples:
                logger.info("%s: %d/%d samples", A.state_class.label, done, n_samples)
                next_report += 1
    return np.concatenate(results)


def estimate_fraction(state_class: StateClass, spectrum: Spectrum,
                      n_samples: int = config.DEFAULT_SAMPLES, seed: int = config.DEFAULT_SEED,
                      *, A: Optional[ProjectorA] = None, threads: int = config.DEFAULT_THREADS,
                      tol: float = config.DECISION_TOL,
                      max_bytes: int = config.MAX_DENSE_BYTES) -> FractionEstimate:
    """
    Monte Carlo estimate of the fraction of the orbit flagged by the witness.

    The witness is sufficient, not necessary, so the result lower-bounds the
    truly correlated fraction.

    Args:
        state_class: class whose projector defines the witness
        spectrum: orbit to sample
        n_samples: number of Haar samples
        seed: master seed; sample i uses stream (seed, i)
        A: prebuilt projector (built if omitted)
        threads: worker threads; never changes the result

    Returns:
        FractionEstimate
    """
    if A is None:
        A = build_A(state_class, max_bytes=max_bytes)
    params = orbit_parameters(state_class, spectrum, X=numeric_X(A))
    if not params.bound_applicable:
        logger.warning("purity %.6g <= P_cr %.6g: concentration bound inapplicable",
                       params.purity, params.P_cr)
    f = sample_witness(A, spectrum, n_samples, seed, threads)
    stderr = float(f.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else float("nan")
    return FractionEstimate(
        state_class=state_class,
        spectrum=spectrum,
        params=params,
        n_samples=n_samples,
        n_correlated=int((f > tol).sum()),
        mean_f=float(f.mean()),
        mean_f_stderr=stderr,
        mean_f_analytic=orbit_mean_f(params),
        seed=seed,
        tolerance=tol,
    )


def purity_sweep(state_class: StateClass, ps: Sequence[float],
                 n_samples: int = config.DEFAULT_SAMPLES, seed: int = config.DEFAULT_SEED,
                 *, A: Optional[ProjectorA] = None, threads: int = config.DEFAULT_THREADS,
                 tol: float = config.DECISION_TOL,
                 max_bytes: int = config.MAX_DENSE_BYTES) -> List[FractionEstimate]:
    """Fraction estimates along ((1−p) + p/N, p/N, ...), one per p, sharing the Haar draws."""
    if A is None:
        A = build_A(state_class, max_bytes=max_bytes)
    return [estimate_fraction(state_class, Spectrum.depolarized(A.N, p), n_samples, seed,
                              A=A, threads=threads, tol=tol)
            for p in ps]
