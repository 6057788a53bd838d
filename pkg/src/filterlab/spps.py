"""Steady-state solvers and analysis for discrete-time periodic Riccati and
Lyapunov equations.

The solvers iterate the defining recursions forward in time until one full
period stops changing, which converges whenever the standard uniform
observability (Riccati) or monodromy stability (Lyapunov) hypotheses hold.
Solutions are the symmetric periodic positive semidefinite (SPPS) family
P_0..P_{T-1} with P_{k+T} = P_k.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import min_eig_sym, spd_solve, spectral_norm, spectral_radius, sym
from .errors import ConvergenceError, NumericalError, ValidationError
from .periodic import PeriodicSequence, as_periodic, normalize_period

DEFAULT_TOL = 1e-10
# Sweep budget defaults to ~1e5 individual time steps regardless of period.
MAX_STEP_BUDGET = 100_000


@dataclass(frozen=True)
class SppsSolution:
    """One period of a converged periodic Riccati/Lyapunov solution.

    ``P[k]`` is the steady covariance at time slot k. ``iterations`` counts
    completed full-period sweeps and ``residual`` is the largest spectral-norm
    change of any slot during the final sweep.
    """

    period: int
    P: tuple
    iterations: int
    residual: float

    def __post_init__(self):
        for M in self.P:
            M.setflags(write=False)

    def at(self, k: int) -> np.ndarray:
        return self.P[k % self.period]

    def sequence(self) -> PeriodicSequence:
        return PeriodicSequence(list(self.P))

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "iterations": self.iterations,
            "residual": self.residual,
            "P": [M.tolist() for M in self.P],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_csv(self, path) -> None:
        """One row per (k, i, j, value)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "i", "j", "value"])
            for k, M in enumerate(self.P):
                for i in range(M.shape[0]):
                    for j in range(M.shape[1]):
                        writer.writerow([k, i, j, f"{M[i, j]:.17g}"])


@dataclass(frozen=True)
class MonodromyReport:
    """A one-period closed-loop transition product and its spectral data.

    ``rho_bound``/``norm_bound`` are filled when the report is derived from a
    Riccati solution, in which case spectral_radius <= rho_bound and
    norm2 <= norm_bound must hold.
    """

    phi: np.ndarray
    spectral_radius: float
    norm2: float
    rho_bound: float | None = None
    norm_bound: float | None = None


def transition_product(seq, start: int, stop: int) -> np.ndarray:
    """Time-ordered product M_{stop-1} ... M_{start} (empty product = I)."""
    seq = as_periodic(seq)
    n = seq.shape[0]
    out = np.eye(n)
    for t in range(start, stop):
        out = seq.at(t) @ out
    return out


def _default_sweeps(period: int, max_sweeps: int | None) -> int:
    if max_sweeps is not None:
        return max_sweeps
    return max(2, math.ceil(MAX_STEP_BUDGET / period))


def _iterate_to_period(step, period, P0, tol, max_sweeps, label):
    """Drive P_{k+1} = step(k, P_k) until a full period changes by < tol.

    Returns (slots, sweeps, residual) where slots[s] approximates the SPPS
    solution at time slot s.
    """
    P = sym(np.asarray(P0, dtype=float))
    slots = [None] * period
    residual = math.inf
    for sweep in range(max_sweeps):
        residual = 0.0
        for k in range(period):
            P_next = step(k, P)
            if not np.all(np.isfinite(P_next)):
                raise NumericalError(
                    f"{label} produced non-finite values at sweep {sweep + 1}: "
                    "the recursion is divergent"
                )
            s = (k + 1) % period
            if slots[s] is not None:
                residual = max(residual, spectral_norm(P_next - slots[s]))
            slots[s] = P_next
            P = P_next
        if sweep > 0 and residual < tol:
            return slots, sweep + 1, residual
    raise ConvergenceError(
        f"{label} did not converge within {max_sweeps} sweeps "
        f"(residual {residual:.3e}, tol {tol:.1e})",
        residual=residual,
    )


def dpre_spps(
    A,
    C,
    Q,
    R,
    P0: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int | None = None,
    check_bounds: bool = False,
) -> SppsSolution:
    """SPPS solution of the periodic filter Riccati equation.

    Iterates P_{k+1} = A_k P_k A_k' + Q_k
                      - A_k P_k C_k' (C_k P_k C_k' + R_k)^{-1} C_k P_k A_k'
    forward from P0 (default: identity) until one full period changes by
    less than ``tol`` in spectral norm. Convergence requires the pair
    (A., C.) to be uniformly observable; exhausting ``max_sweeps`` raises
    ConvergenceError. ``check_bounds=True`` additionally verifies the
    monodromy spectral bounds implied by the solution at every anchor.
    """
    A, C, Q, R = normalize_period([A, C, Q, R])
    n = A.shape[0]
    period = A.period

    def step(k: int, P: np.ndarray) -> np.ndarray:
        Ak, Ck, Qk, Rk = A.at(k), C.at(k), Q.at(k), R.at(k)
        if Ck.shape[0] == 0:
            return sym(Ak @ P @ Ak.T + Qk)
        G = Ck @ P
        S = sym(G @ Ck.T + Rk)
        W = spd_solve(S, G, what="innovation covariance")
        P_post = P - G.T @ W
        return sym(Ak @ P_post @ Ak.T + Qk)

    P0 = np.eye(n) if P0 is None else P0
    slots, sweeps, residual = _iterate_to_period(
        step, period, P0, tol, _default_sweeps(period, max_sweeps), "periodic Riccati recursion"
    )
    solution = SppsSolution(
        period=period, P=tuple(slots), iterations=sweeps, residual=residual
    )
    if check_bounds:
        _assert_monodromy_bounds(A, C, Q, R, solution)
    return solution


def dple_spps(
    A,
    Q,
    tol: float = DEFAULT_TOL,
    max_sweeps: int | None = None,
) -> SppsSolution:
    """SPPS solution of the periodic Lyapunov equation P_{k+1} = A_k P_k A_k' + Q_k.

    The one-period transition product of A must be Schur stable, otherwise no
    steady solution exists and NumericalError is raised.
    """
    A, Q = normalize_period([A, Q])
    period = A.period
    rho = spectral_radius(transition_product(A, 0, period))
    if rho >= 1.0 - 1e-9:
        raise NumericalError(
            f"unstable monodromy (spectral radius {rho:.6f}): "
            "the periodic Lyapunov recursion has no steady solution"
        )

    def step(k: int, P: np.ndarray) -> np.ndarray:
        return sym(A.at(k) @ P @ A.at(k).T + Q.at(k))

    n = A.shape[0]
    slots, sweeps, residual = _iterate_to_period(
        step, period, np.zeros((n, n)), tol,
        _default_sweeps(period, max_sweeps), "periodic Lyapunov recursion",
    )
    return SppsSolution(
        period=period, P=tuple(slots), iterations=sweeps, residual=residual
    )


def closed_loop(
    A_k: np.ndarray, C_k: np.ndarray, R_k: np.ndarray, P_k: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One-step filter gain and closed-loop matrix at covariance P_k.

    Returns (K, A_cl) with K = A P C' (C P C' + R)^{-1} and A_cl = A - K C.
    """
    A_k = np.atleast_2d(np.asarray(A_k, dtype=float))
    C_k = np.atleast_2d(np.asarray(C_k, dtype=float))
    R_k = np.atleast_2d(np.asarray(R_k, dtype=float))
    P_k = np.atleast_2d(np.asarray(P_k, dtype=float))
    if C_k.shape[0] == 0:
        K = np.zeros((A_k.shape[0], 0))
        return K, A_k.copy()
    S = sym(C_k @ P_k @ C_k.T + R_k)
    K = spd_solve(S, C_k @ P_k @ A_k.T, what="innovation covariance").T
    return K, A_k - K @ C_k


def monodromy(A_cl, anchor: int = 0) -> MonodromyReport:
    """Product of one period of closed-loop matrices starting after ``anchor``.

    The spectrum of the product is anchor-invariant (cyclic products are
    similar); the norm is not.
    """
    seq = as_periodic(A_cl)
    phi = transition_product(seq, anchor + 1, anchor + 1 + seq.period)
    return MonodromyReport(
        phi=phi,
        spectral_radius=spectral_radius(phi),
        norm2=spectral_norm(phi),
    )


def monodromy_bounds(solution: SppsSolution, Q) -> tuple[float, float]:
    """Spectral bounds on the closed-loop monodromy implied by a Riccati solution.

    Returns (rho_bound, norm_bound) with
        rho_bound  = sqrt(1 - min_k lambda_min(Q_k) / max_k lambda_max(P_k)),
        norm_bound = sqrt(max_k lambda_max(P_k) / min_k lambda_min(Q_k)).
    """
    Q = as_periodic(Q)
    lam_min_q = min(np.linalg.eigvalsh(sym(Qk))[0] for Qk in Q)
    if lam_min_q <= 0:
        raise ValidationError("Q must be positive definite for monodromy bounds")
    lam_max_p = max(np.linalg.eigvalsh(sym(Pk))[-1] for Pk in solution.P)
    rho_bound = math.sqrt(max(0.0, 1.0 - lam_min_q / lam_max_p))
    norm_bound = math.sqrt(lam_max_p / lam_min_q)
    return rho_bound, norm_bound


def closed_loop_sequence(A, C, R, solution: SppsSolution):
    """Per-step gains and closed-loop matrices along a Riccati solution."""
    A, C, R = normalize_period([A, C, R])
    if A.period != solution.period:
        raise ValidationError("solution period does not match the sequences")
    gains, loops = [], []
    for k in range(solution.period):
        K, A_cl = closed_loop(A.at(k), C.at(k), R.at(k), solution.at(k))
        gains.append(K)
        loops.append(A_cl)
    return gains, PeriodicSequence(loops)


def solution_monodromy(A, C, Q, R, solution: SppsSolution, anchor: int = 0) -> MonodromyReport:
    """Monodromy report for a solved Riccati system, bounds included."""
    _, loops = closed_loop_sequence(A, C, R, solution)
    base = monodromy(loops, anchor)
    rho_bound, norm_bound = monodromy_bounds(solution, Q)
    return MonodromyReport(
        phi=base.phi,
        spectral_radius=base.spectral_radius,
        norm2=base.norm2,
        rho_bound=rho_bound,
        norm_bound=norm_bound,
    )


def _assert_monodromy_bounds(A, C, Q, R, solution: SppsSolution) -> None:
    rho_bound, norm_bound = monodromy_bounds(solution, Q)
    _, loops = closed_loop_sequence(A, C, R, solution)
    for anchor in range(solution.period):
        rep = monodromy(loops, anchor)
        if rep.spectral_radius > rho_bound + 1e-9:
            raise NumericalError(
                f"monodromy spectral radius {rep.spectral_radius:.6e} exceeds "
                f"its bound {rho_bound:.6e} at anchor {anchor}"
            )
        if rep.norm2 > norm_bound + 1e-9:
            raise NumericalError(
                f"monodromy norm {rep.norm2:.6e} exceeds its bound "
                f"{norm_bound:.6e} at anchor {anchor}"
            )


def power_norm_bound(A: np.ndarray, k: int) -> float:
    """Combinatorial upper bound on ||A^k||_2 from ||A||_2 and rho(A).

    Evaluates sqrt(n) * sum_{j=0}^{n-1} C(n-1, j) C(k, j) ||A||^j rho(A)^(k-j)
    with C(k, j) = 0 for j > k.
    """
    if k < 0:
        raise ValidationError("exponent k must be >= 0")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    norm = spectral_norm(A)
    rho = spectral_radius(A)
    total = 0.0
    for j in range(n):
        if j > k:
            continue
        exponent = k - j
        rho_pow = 1.0 if exponent == 0 else rho**exponent
        total += math.comb(n - 1, j) * math.comb(k, j) * norm**j * rho_pow
    return math.sqrt(n) * total


def uniform_observability(A, C, rel_tol: float = 1e-9) -> bool:
    """Observability of a periodic pair via full-rank window Gramians.

    For every anchor k in one period, the Gramian
    sum_{j=0}^{nT-1} Phi(k+j, k)' C_{k+j}' C_{k+j} Phi(k+j, k) must have rank
    n, with rank decided by singular values above rel_tol * sigma_max. The
    rank is evaluated on the stacked observability factor, whose squared
    singular values are the Gramian's, to avoid forming the square.
    """
    A, C = normalize_period([A, C])
    n = A.shape[0]
    period = A.period
    window = n * period
    for anchor in range(period):
        rows = []
        Phi = np.eye(n)
        for j in range(window):
            rows.append(C.at(anchor + j) @ Phi)
            Phi = A.at(anchor + j) @ Phi
        sv = np.linalg.svd(np.vstack(rows), compute_uv=False)
        if sv[0] <= 0.0:
            return False
        if np.count_nonzero(sv > math.sqrt(rel_tol) * sv[0]) < n:
            return False
    return True


def dpre_monotonicity_probe(A, C, Q, R1, R2, tol: float = DEFAULT_TOL) -> bool:
    """Check that the Riccati solution does not shrink when noise grows.

    Requires R1_k >= R2_k > 0 for all k; returns True iff the solution with
    R1 dominates the solution with R2 (difference PSD within -1e-8) at every
    time slot.
    """
    R1 = as_periodic(R1)
    R2 = as_periodic(R2)
    common = max(R1.period, R2.period)
    for k in range(common):
        if min_eig_sym(R1.at(k) - R2.at(k)) < -1e-12:
            raise ValidationError("R1 must dominate R2 (R1_k >= R2_k)")
    P1 = dpre_spps(A, C, Q, R1, tol=tol)
    P2 = dpre_spps(A, C, Q, R2, tol=tol)
    return all(
        min_eig_sym(P1.at(k) - P2.at(k)) >= -1e-8 for k in range(P1.period)
    )


def fixed_point_defect(solution: SppsSolution, A, C, Q, R) -> float:
    """Largest one-step defect when substituting a solution into its Riccati map."""
    A, C, Q, R = normalize_period([A, C, Q, R])
    worst = 0.0
    for k in range(solution.period):
        P = solution.at(k)
        G = C.at(k) @ P
        S = sym(G @ C.at(k).T + R.at(k))
        W = spd_solve(S, G, what="innovation covariance")
        P_next = sym(A.at(k) @ (P - G.T @ W) @ A.at(k).T + Q.at(k))
        worst = max(worst, spectral_norm(P_next - solution.at(k + 1)))
    return worst
