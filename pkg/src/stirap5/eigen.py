"""Closed-form and perturbative eigensystems of the control Hamiltonian.

The coupling matrix has one null eigenvalue whose eigenvector has no weight
on the intermediate or branch states; the remaining four eigenvalues come in
two +/- pairs whose squares are the roots of a quadratic.  Two perturbative
results cover the measured system: for strong monitoring a slowly decaying
eigenpair appears next to the null state, and for weak monitoring the four
nonzero eigenvalues acquire first-order imaginary parts.  A dense LAPACK
eigensolve acts as the independent numeric oracle for all of these.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DegenerateInputError, OracleConvergenceError, SingularDenominatorError, ValidationError
from .model import PulseSet

# Branch degeneracy threshold: the two eigenvalue-square roots are treated
# as colliding when the quadratic discriminant drops below this times the
# fourth power of the total Rabi scale.
DEGENERACY_TOLERANCE = 1e-12

STRONG_REGIME_RATIO = 10.0  # intended validity: gamma >= 10 * max peak
WEAK_REGIME_RATIO = 0.1     # intended validity: gamma <= max peak / 10

ORACLE_RESIDUAL_LIMIT = 1e-10


class RegimeWarning(UserWarning):
    """A perturbative formula was evaluated outside its intended regime."""


@dataclass(frozen=True)
class EigenSystem:
    """A full 5-level eigendecomposition with provenance.

    ``eigenvectors[:, k]`` is the unit-norm eigenvector for
    ``eigenvalues[k]``.  ``provenance`` is one of ``analytic-Hr``,
    ``strong-perturbative``, ``weak-perturbative`` or ``numeric-oracle``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    provenance: str

    def residuals(self, h: np.ndarray) -> np.ndarray:
        """Per-pair residual norms ``|H v - lambda v|`` against ``h``."""
        r = h @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return np.linalg.norm(r, axis=0)


@dataclass(frozen=True)
class HrSpectrum:
    """The four nonzero closed-form eigenpairs of the coupling matrix.

    ``values`` holds ``[-sqrt(lo), +sqrt(lo), -sqrt(hi), +sqrt(hi)]`` where
    ``lo <= hi`` are the two eigenvalue-square roots; this sorted-by-
    (branch, sign) order is this package's indexing convention for
    k = 2..5.  ``degenerate`` flags a near-collision of the two branches,
    where the eigenvector formula loses validity.
    """

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool


def _rabi(xi: float, pulses: PulseSet):
    return (float(v) for v in pulses.rabi(xi))


def null_eigenvector(xi: float, pulses: PulseSet) -> np.ndarray:
    """Unit-norm zero-eigenvalue eigenvector of the coupling matrix.

    Proportional to ``[S3*B4 - S4*B3, 0, -P*B4, P*B3, 0]``: no weight on
    the intermediate or branch states at any time, so it survives the
    branch-state monitoring term unchanged.
    """
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    sb = s3 * b4 - s4 * b3
    u = np.array([sb, 0.0, -p * b4, p * b3, 0.0])
    n = np.linalg.norm(u)
    if n == 0.0:
        raise DegenerateInputError(
            "null eigenvector undefined: both the Stokes/branch cross term "
            "and the pump*branch products vanish at this time")
    return u / n


def _branch_squares(p, s3, s4, b3, b4):
    m2 = p * p + s3 * s3 + s4 * s4 + b3 * b3 + b4 * b4
    sb = s3 * b4 - s4 * b3
    disc = m2 * m2 - 4.0 * (sb * sb + p * p * (b3 * b3 + b4 * b4))
    degenerate = disc < DEGENERACY_TOLERANCE * m2 * m2
    root = np.sqrt(max(disc, 0.0))
    lo = 0.5 * (m2 - root)
    hi = 0.5 * (m2 + root)
    return lo, hi, degenerate


def _hr_vector(lam, p, s3, s4, b3, b4):
    sb = s3 * b4 - s4 * b3
    b2 = b3 * b3 + b4 * b4
    lam2 = lam * lam
    return np.array([
        p * (lam2 - b2),
        lam * (lam2 - b2),
        s3 * lam2 - b4 * sb,
        s4 * lam2 + b3 * sb,
        lam * (b3 * s3 + b4 * s4),
    ])


def hr_spectrum(xi: float, pulses: PulseSet) -> HrSpectrum:
    """Closed-form nonzero eigenpairs of the coupling matrix at ``xi``.

    The squared eigenvalues are ``(M2 +/- sqrt(M2^2 - 4*(SB^2 +
    P^2*(B3^2+B4^2))))/2`` with ``M2`` the sum of squares of the five Rabi
    values; each root contributes a +/- pair.  Eigenvectors are real and,
    away from branch degeneracies, mutually orthogonal.
    """
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    lo, hi, degenerate = _branch_squares(p, s3, s4, b3, b4)
    values = np.array([-np.sqrt(max(lo, 0.0)), np.sqrt(max(lo, 0.0)),
                       -np.sqrt(hi), np.sqrt(hi)])
    vectors = np.empty((5, 4))
    for i, lam in enumerate(values):
        v = _hr_vector(lam, p, s3, s4, b3, b4)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise DegenerateInputError(
                f"closed-form eigenvector vanishes for eigenvalue {lam:.6g}; "
                "configuration is degenerate")
        vectors[:, i] = v / n
    return HrSpectrum(values=values, vectors=vectors, degenerate=degenerate)


def analytic_eigensystem(xi: float, pulses: PulseSet) -> EigenSystem:
    """All five eigenpairs of the coupling matrix.

    Uses the closed forms (null vector plus the four +/- pairs); near a
    branch collision the closed-form vectors become linearly dependent, so
    this falls back to the dense numeric oracle.
    """
    try:
        spec = hr_spectrum(xi, pulses)
        degenerate = spec.degenerate
    except DegenerateInputError:
        degenerate = True
    if degenerate:
        return numeric_oracle(model.coupling_matrix(xi, pulses))
    values = np.concatenate(([0.0], spec.values)).astype(complex)
    vectors = np.empty((5, 5), dtype=complex)
    vectors[:, 0] = null_eigenvector(xi, pulses)
    vectors[:, 1:] = spec.vectors
    return EigenSystem(eigenvalues=values, eigenvectors=vectors,
                       provenance="analytic-Hr")


def strong_measurement_norms(xi: float, pulses: PulseSet, gamma: float):
    """Normalization factors (N1, N2') of the two slow eigenvectors.

    N1 belongs to the null eigenvector and N2' to the strong-monitoring
    eigenvector; both are positive Euclidean norms of the unnormalized
    closed forms.
    """
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    sb = s3 * b4 - s4 * b3
    kappa = p * p * (b3 * b3 + b4 * b4) + sb * sb
    n1 = np.sqrt(kappa)
    w = _strong_vector_raw(p, s3, s4, b3, b4, gamma)
    n2 = np.linalg.norm(w)
    return n1, n2


def _strong_vector_raw(p, s3, s4, b3, b4, gamma):
    sb = s3 * b4 - s4 * b3
    kappa = p * p * (b3 * b3 + b4 * b4) + sb * sb
    return np.array([
        p * (s4 * b4 + s3 * b3),
        0.0,
        s3 * s4 * b4 - b3 * (p * p + s4 * s4),
        s3 * s4 * b3 - b4 * (p * p + s3 * s3),
        1j * kappa / gamma,
    ], dtype=complex)


def strong_limit_pair(xi: float, pulses: PulseSet, gamma: float):
    """Perturbative slow eigenpair created by strong branch monitoring.

    Returns ``(lam2, v2)``: ``lam2`` is purely imaginary with negative
    imaginary part (an effective decay of order peak^2/gamma) and ``v2`` is
    the unit-norm eigenvector, which has exactly zero weight on the
    intermediate state and an ``i/gamma``-suppressed branch-state
    component.  Valid for ``gamma`` well above the Rabi scale.
    """
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    if gamma < STRONG_REGIME_RATIO * pulses.max_peak:
        warnings.warn(
            f"strong-monitoring formula evaluated at gamma={gamma:.3g} < "
            f"{STRONG_REGIME_RATIO:g} * max peak ({pulses.max_peak:.3g})",
            RegimeWarning, stacklevel=2)
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    sb = s3 * b4 - s4 * b3
    kappa = p * p * (b3 * b3 + b4 * b4) + sb * sb
    w = _strong_vector_raw(p, s3, s4, b3, b4, gamma)
    n2 = np.linalg.norm(w)
    if n2 == 0.0:
        raise DegenerateInputError(
            "strong-monitoring eigenvector vanishes at this time")
    lam2 = -1j * kappa * kappa / (gamma * n2 * n2)
    return lam2, w / n2


def weak_limit_spectrum(xi: float, pulses: PulseSet, gamma: float) -> np.ndarray:
    """First-order complex eigenvalues under weak branch monitoring.

    Real parts are the closed-form values of :func:`hr_spectrum`; imaginary
    parts are ``-gamma * lam^2 * (B3*S3 + B4*S4)^2 / N^2`` with ``N`` the
    norm of the corresponding unnormalized closed-form eigenvector (this is
    ``-gamma`` times the squared branch-state weight of the unit
    eigenvector).  Ordering follows :class:`HrSpectrum`.
    """
    if gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma}")
    if gamma > WEAK_REGIME_RATIO * pulses.max_peak:
        warnings.warn(
            f"weak-monitoring formula evaluated at gamma={gamma:.3g} > "
            f"max peak ({pulses.max_peak:.3g}) * {WEAK_REGIME_RATIO:g}",
            RegimeWarning, stacklevel=2)
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    spec = hr_spectrum(xi, pulses)
    cross = b3 * s3 + b4 * s4
    out = np.empty(4, dtype=complex)
    for i, lam in enumerate(spec.values):
        raw = _hr_vector(lam, p, s3, s4, b3, b4)
        n2 = float(raw @ raw)
        out[i] = lam - 1j * gamma * lam * lam * cross * cross / n2
    return out


def branching_deviation(xi: float, pulses: PulseSet, k: int) -> float:
    """Offset of eigenstate k's instantaneous target ratio from B1.

    ``(lam_k^2*S3 - B4*SB)^2 / (lam_k^2*S4 + B3*SB)^2 - B4^2/B3^2``, i.e.
    the squared 3:4 amplitude ratio of the closed-form eigenvector minus
    the dark-state branching ratio.  ``k`` is in 2..5 with the
    :class:`HrSpectrum` ordering.
    """
    if k not in (2, 3, 4, 5):
        raise ValidationError(f"k must be one of 2..5, got {k}")
    p, s3, s4, b3, b4 = _rabi(xi, pulses)
    if b3 == 0.0:
        raise SingularDenominatorError(
            "branching deviation undefined: branch3 amplitude vanishes",
            factor="branch3")
    sb = s3 * b4 - s4 * b3
    lo, hi, _ = _branch_squares(p, s3, s4, b3, b4)
    lam2 = lo if k in (2, 3) else hi
    den = lam2 * s4 + b3 * sb
    num = lam2 * s3 - b4 * sb
    if den == 0.0:
        if num == 0.0:
            raise SingularDenominatorError(
                "branching deviation indeterminate: both amplitude "
                "components vanish", factor="lam^2*S4 + B3*SB and lam^2*S3 - B4*SB")
        raise SingularDenominatorError(
            "branching deviation infinite: target-4 amplitude vanishes",
            factor="lam^2*S4 + B3*SB")
    ratio = num / den
    return ratio * ratio - (b4 * b4) / (b3 * b3)


def numeric_oracle(h: np.ndarray) -> EigenSystem:
    """Dense eigendecomposition used to validate the closed forms.

    Independent of every formula in this module: a general complex
    eigensolve of the assembled matrix, with unit-normalized eigenvectors,
    sorted by (real, imaginary) eigenvalue parts for determinism.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (5, 5):
        raise ValidationError(f"expected a 5x5 matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValidationError("matrix entries must be finite")
    values, vectors = np.linalg.eig(h)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    system = EigenSystem(eigenvalues=values, eigenvectors=vectors,
                         provenance="numeric-oracle")
    scale = np.linalg.norm(h)
    worst = float(system.residuals(h).max())
    if scale > 0 and worst > ORACLE_RESIDUAL_LIMIT * scale:
        raise OracleConvergenceError(
            "dense eigensolve residual exceeds the oracle limit", residual=worst)
    return system
