"""
Built-in release checks.

quick: closed-form agreement, projector axioms, class membership and Majorana
algebra at the smallest dimensions (seconds).
full: adds the acceptance dimensions, the operator inequalities on random
pairs and mixtures, matrix-free agreement and the Monte Carlo checks (minutes).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from corrwit import config
from corrwit.data_structures import Spectrum, StateClass
from corrwit.errors import CorrwitError, ParameterError
from corrwit.estimation import closed_form_parameters, estimate_fraction, numeric_X
from corrwit.operators import (
    ProjectorA,
    build_A,
    build_V,
    majorana_ops,
    projector_asym2,
    projector_residuals,
    reference_A,
    two_copy_expectation,
)
from corrwit.sampling import RandomStream, haar_vector, isospectral_sample, random_class_member, random_mixture
from corrwit.serialization import dumps
from corrwit.witness import pure_membership, slater_example_rows, witness_value

logger = logging.getLogger(__name__)

LEVELS = ("quick", "full")
FAULTS = ("corrupt-A",)

QUICK_CLASSES = (
    StateClass.separable(2, 2),
    StateClass.bosonic(2, 2),
    StateClass.slater(4, 2),
    StateClass.gaussian(3),
)

FULL_CLASSES = QUICK_CLASSES + (
    StateClass.separable(2, 3),
    StateClass.separable(3, 2),
    StateClass.bosonic(3, 2),
    StateClass.bosonic(2, 3),
    StateClass.slater(5, 2),
    StateClass.slater(6, 2),
    StateClass.gaussian(4),
)

SLATER_LAMBDAS = ((1.0, 0.0), (0.9, math.sqrt(0.19)), (1 / math.sqrt(2), 1 / math.sqrt(2)))


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float = float("nan")
    threshold: float = float("nan")
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'passed': self.passed,
            'value': self.value,
            'threshold': self.threshold,
            'detail': self.detail,
        }


@dataclass
class SelftestReport:
    level: str
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            'level': self.level,
            'seed': self.seed,
            'passed': self.passed,
            'n_checks': len(self.checks),
            'failures': self.failures,
            'checks': [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


class _Runner:
    def __init__(self, level: str, seed: int, inject_fault: Optional[str], max_bytes: int):
        self.report = SelftestReport(level, seed)
        self.seed = seed
        self.inject_fault = inject_fault
        self.max_bytes = max_bytes
        self._projectors = {}

    def projector(self, cls: StateClass) -> ProjectorA:
        if cls not in self._projectors:
            self._projectors[cls] = build_A(cls, max_bytes=self.max_bytes)
        return self._projectors[cls]

    def rng(self, tag: int) -> np.random.Generator:
        return RandomStream(self.seed, tag).generator()

    def check(self, name: str, fn: Callable[[], CheckResult]):
        try:
            result = fn()
            result.name = name
        except (CorrwitError, np.linalg.LinAlgError, ValueError) as e:
            result = CheckResult(name, False, detail=f"{type(e).__name__}: {e}")
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, "%-40s %s (value %.3e, threshold %.3e)", name,
                   "ok" if result.passed else "FAIL", result.value, result.threshold)
        self.report.checks.append(result)

    # ── individual checks ────────────────────

    def closed_form(self, cls: StateClass) -> CheckResult:
        analytic = float(closed_form_parameters(cls).one_minus_X)
        numeric = 1.0 - numeric_X(self.projector(cls))
        err = abs(numeric - analytic) / max(abs(analytic), 1e-300)
        return CheckResult("", err <= 1e-9, err, 1e-9,
                           f"1-X numeric {numeric!r}, analytic {analytic!r}")

    def axioms(self, cls: StateClass) -> CheckResult:
        M = self.projector(cls).dense
        if self.inject_fault == "corrupt-A":
            M = M.copy()
            M[0, 0] += 1e-3
        res = projector_residuals(M)
        worst = max(res, key=res.get)
        return CheckResult("", res[worst] <= config.OPERATOR_TOL, res[worst], config.OPERATOR_TOL,
                           f"worst residual: {worst}")

    def membership(self, cls: StateClass, count: int, tag: int) -> CheckResult:
        A = self.projector(cls)
        rng = self.rng(tag)
        worst = max(pure_membership(A, random_class_member(cls, rng)) for _ in range(count))
        return CheckResult("", worst <= 1e-9, worst, 1e-9, f"{count} random members")

    def operator_inequality(self, cls: StateClass, count: int, tag: int) -> CheckResult:
        A = self.projector(cls)
        V = build_V(A)
        rng = self.rng(tag)
        worst = -np.inf
        for _ in range(count):
            v = random_class_member(cls, rng)
            w = haar_vector(A.N, rng)
            value = two_copy_expectation(V, np.outer(v, v.conj()), np.outer(w, w.conj())).real
            worst = max(worst, value)
        return CheckResult("", worst <= config.OPERATOR_TOL, float(worst), config.OPERATOR_TOL,
                           f"{count} pairs (class member, arbitrary)")

    def mixtures(self, cls: StateClass, count: int, tag: int) -> CheckResult:
        A = self.projector(cls)
        rng = self.rng(tag)
        worst = -np.inf
        for _ in range(count):
            k = int(rng.integers(1, 4 * A.N + 1))
            worst = max(worst, witness_value(A, random_mixture(cls, k, rng)).f_value)
        return CheckResult("", worst <= config.OPERATOR_TOL, float(worst), config.OPERATOR_TOL,
                           f"{count} mixtures of up to {4 * A.N} members")

    def matrix_free(self, cls: StateClass, count: int, tag: int) -> CheckResult:
        A = self.projector(cls)
        reference = reference_A(cls, self.max_bytes)
        rng = self.rng(tag)
        worst = 0.0
        for _ in range(count):
            v = haar_vector(A.N * A.N, rng)
            worst = max(worst, float(np.abs(A.apply(v) - reference @ v).max()))
        return CheckResult("", worst <= config.OPERATOR_TOL, worst, config.OPERATOR_TOL,
                           f"{count} random vectors against the explicit dense A")

    def majorana(self, d: int) -> CheckResult:
        cs = [c.matrix for c in majorana_ops(d)]
        eye = np.eye(2 ** d)
        worst = max(float(np.abs(a @ b + b @ a - 2 * (i == j) * eye).max())
                    for i, a in enumerate(cs) for j, b in enumerate(cs))
        return CheckResult("", worst <= 1e-12, worst, 1e-12, f"{2 * d} operators")

    def purity_identity(self, N: int, tag: int) -> CheckResult:
        rng = self.rng(tag)
        spectrum = Spectrum(tuple(rng.dirichlet(np.ones(N))))
        rho = isospectral_sample(spectrum, rng)
        lhs = two_copy_expectation(projector_asym2(N), rho, rho).real
        err = abs(lhs - (1 - rho.purity) / 2)
        return CheckResult("", err <= 1e-12, err, 1e-12, f"N={N}")

    def slater_example(self, p_grid) -> CheckResult:
        A = self.projector(StateClass.slater(4, 2))
        disagreements = []
        p0_ok = True
        for lambdas in SLATER_LAMBDAS:
            for row in slater_example_rows(4, lambdas, p_grid, A=A):
                if row['p'] == 0.0 and not row['agree']:
                    p0_ok = False
                if row['decisive'] and not row['agree']:
                    disagreements.append(f"λ={tuple(round(x, 6) for x in lambdas)} p={row['p']:g}")
        detail = "closed form and witness disagree at: " + (", ".join(disagreements) or "none")
        return CheckResult("", p0_ok, float(len(disagreements)), float("nan"), detail)

    def orbit_mean(self, cls: StateClass, p: float, n_samples: int) -> CheckResult:
        A = self.projector(cls)
        est = estimate_fraction(cls, Spectrum.depolarized(A.N, p), n_samples, self.seed, A=A)
        gap = abs(est.mean_f - est.mean_f_analytic)
        limit = 3 * est.mean_f_stderr
        return CheckResult("", gap <= limit, gap, limit,
                           f"mean f {est.mean_f!r} vs {est.mean_f_analytic!r}")

    def never_detected(self, cls: StateClass, n_samples: int) -> CheckResult:
        A = self.projector(cls)
        est = estimate_fraction(cls, Spectrum.pure(A.N), n_samples, self.seed, A=A,
                                tol=config.OPERATOR_TOL)
        return CheckResult("", est.n_correlated == 0, float(est.n_correlated), 0.0,
                           f"{n_samples} pure states, X = {est.params.X:.3g}")

    def bound(self, cls: StateClass, n_samples: int) -> CheckResult:
        A = self.projector(cls)
        est = estimate_fraction(cls, Spectrum.pure(A.N), n_samples, self.seed, A=A)
        slack = est.fraction + 3 * est.std_err - est.params.bound
        return CheckResult("", slack >= 0, slack, 0.0,
                           f"fraction {est.fraction!r}, bound {est.params.bound!r}")


def run_selftest(level: str = "quick", seed: int = config.DEFAULT_SEED,
                 inject_fault: Optional[str] = None,
                 max_bytes: int = config.MAX_DENSE_BYTES) -> SelftestReport:
    """Run the quick or full check suite and return a machine-readable report."""
    if level not in LEVELS:
        raise ParameterError(f"level must be one of {LEVELS}, got {level!r}")
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ParameterError(f"unknown fault {inject_fault!r}")
    run = _Runner(level, seed, inject_fault, max_bytes)
    full = level == "full"
    classes = FULL_CLASSES if full else QUICK_CLASSES

    for tag, cls in enumerate(classes):
        run.check(f"closed form {cls.label}", lambda cls=cls: run.closed_form(cls))
        run.check(f"projector axioms {cls.label}", lambda cls=cls: run.axioms(cls))
        run.check(f"membership {cls.label}",
                  lambda cls=cls, tag=tag: run.membership(cls, 100 if full else 20, 100 + tag))
    for d in range(1, 6 if full else 4):
        run.check(f"majorana algebra d={d}", lambda d=d: run.majorana(d))
    run.check("purity identity", lambda: run.purity_identity(6, 200))
    run.check("slater example p=0", lambda: run.slater_example([0.0] if not full else None))

    if full:
        for tag, cls in enumerate(QUICK_CLASSES):
            run.check(f"operator inequality {cls.label}",
                      lambda cls=cls, tag=tag: run.operator_inequality(cls, 100, 300 + tag))
            run.check(f"mixtures {cls.label}",
                      lambda cls=cls, tag=tag: run.mixtures(cls, 1000, 400 + tag))
        for tag, cls in enumerate(QUICK_CLASSES):
            run.check(f"matrix-free {cls.label}",
                      lambda cls=cls, tag=tag: run.matrix_free(cls, 50, 500 + tag))
        # spectra on both sides of the critical purity
        for p in (0.0, 0.05, 0.2):
            run.check(f"orbit mean slater{{d=4,L=2}} p={p:g}",
                      lambda p=p: run.orbit_mean(StateClass.slater(4, 2), p, config.DEFAULT_SAMPLES))
        run.check("never detected gaussian{d=3}",
                  lambda: run.never_detected(StateClass.gaussian(3), 1000))
        for cls in (StateClass.slater(4, 2), StateClass.separable(2, 2)):
            run.check(f"concentration bound {cls.label}",
                      lambda cls=cls: run.bound(cls, config.DEFAULT_SAMPLES))

    report = run.report
    logger.info("selftest %s: %d checks, %d failed", level, len(report.checks), len(report.failures))
    return report
