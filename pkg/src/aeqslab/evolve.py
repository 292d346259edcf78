"""Discrete adiabatic evolution with per-step traces.

Three interchangeable step propagators over a refinement of [0, T] into R
intervals (j = 0 .. R-1, hbar = 1 by default):

- midpoint:  U'(j+1, j) = exp(-i (T/R) H((2j+1) T / (2R)) / hbar), the exact
  reference propagator per refined interval;
- trotter:   V(j) = exp(-i a_j H_ini) exp(-i b_j H_fin) with
  a_j = (T/R)(1 - (2j+1)/(2R))/hbar and b_j = (T/R)((2j+1)/(2R))/hbar; the
  product V(R-1) ... V(0) approximates the midpoint product to O(T^2/R);
- phase-shift: each V(j) factored as W^k PS_ini^(2R-2j-1) W^k PS_fin^(2j+1)
  through two diagonal phase operators, available exactly when H_ini is
  diagonal in the Hadamard basis and the dimension is a power of two.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .aeqs import AeqsInstance, as_dense, ground_state
from .linalg import CapacityError, hadamard_power, spectral_norm

EVOLVE_DIM_MAX = 512
PHASE_DIAG_TOL = 1e-9


class EvolveError(Exception):
    pass


class NotHadamardDiagonal(EvolveError):
    """H_ini fails the phase-shift precondition."""


@dataclass(frozen=True)
class Schedule:
    """Evolution time T, refinement count R, and hbar (natural units).

    Step coefficients (0-indexed j):
        alpha(j) = (1/hbar)(T/R)(1 - (2j+1)/(2R))
        beta(j)  = (1/hbar)(T/R)((2j+1)/(2R))
        gamma    = (1/hbar)(T/R)(1/(2R))
    T = 0 is allowed for degenerate runs (identity propagation).
    """

    t_total: float
    r_steps: int
    hbar: float = 1.0

    def __post_init__(self):
        if self.t_total < 0:
            raise EvolveError("evolution time must be nonnegative")
        if self.r_steps < 1:
            raise EvolveError("refinement count must be at least 1")
        if self.hbar <= 0:
            raise EvolveError("hbar must be positive")

    @property
    def gamma(self) -> float:
        return self.t_total / (self.r_steps * self.hbar) / (2 * self.r_steps)

    def alpha(self, j: int) -> float:
        return (2 * self.r_steps - 2 * j - 1) * self.gamma

    def beta(self, j: int) -> float:
        return (2 * j + 1) * self.gamma

    def midpoint_s(self, j: int) -> float:
        return (2 * j + 1) / (2 * self.r_steps)


@dataclass
class TraceRecord:
    j: int
    s: float
    ground_energy: float
    overlap_sq: float
    norm: float


@dataclass
class EvolutionTrace:
    method: str
    records: list = field(default_factory=list)
    final_overlap_sq: float = 0.0
    final_distance: float = 0.0   # l2 distance minimized over global phase
    final_state: np.ndarray = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["j", "s", "ground_energy", "overlap_sq", "norm"])
        for r in self.records:
            writer.writerow([r.j, f"{r.s:.12g}", f"{r.ground_energy:.12g}",
                             f"{r.overlap_sq:.12g}", f"{r.norm:.12g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": 1,
                "method": self.method,
                "records": [
                    {"j": r.j, "s": r.s, "ground_energy": r.ground_energy,
                     "overlap_sq": r.overlap_sq, "norm": r.norm}
                    for r in self.records
                ],
                "final_overlap_sq": self.final_overlap_sq,
                "final_distance": self.final_distance,
            },
            indent=2,
        )


def _dense_pair(instance: AeqsInstance, dim_max: int = EVOLVE_DIM_MAX):
    if instance.dim > dim_max:
        raise CapacityError(f"evolution limited to dimension {dim_max}, got {instance.dim}")
    return as_dense(instance.h_ini), as_dense(instance.h_fin)


def _interp(h_ini, h_fin, s: float):
    return (1.0 - s) * h_ini + s * h_fin


class _CachedExp:
    """exp(-i theta H) for many theta values from one eigendecomposition."""

    def __init__(self, h: np.ndarray):
        self.values, self.vectors = np.linalg.eigh((h + h.conj().T) / 2.0)

    def matrix(self, theta: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * theta * self.values)) @ self.vectors.conj().T

    def apply(self, theta: float, psi: np.ndarray) -> np.ndarray:
        return self.vectors @ (np.exp(-1j * theta * self.values) * (self.vectors.conj().T @ psi))


def midpoint_propagator(instance: AeqsInstance, schedule: Schedule) -> np.ndarray:
    """Product of the exact midpoint-rule step propagators, j = R-1 .. 0."""
    h_ini, h_fin = _dense_pair(instance)
    dim = h_ini.shape[0]
    u = np.eye(dim, dtype=complex)
    dt = schedule.t_total / schedule.r_steps / schedule.hbar
    for j in range(schedule.r_steps):
        step = _CachedExp(_interp(h_ini, h_fin, schedule.midpoint_s(j))).matrix(dt)
        u = step @ u
    return u


def trotter_product(instance: AeqsInstance, schedule: Schedule) -> np.ndarray:
    """Product of the step-factored propagators V(j), j = R-1 .. 0."""
    h_ini, h_fin = _dense_pair(instance)
    dim = h_ini.shape[0]
    exp_ini, exp_fin = _CachedExp(h_ini), _CachedExp(h_fin)
    u = np.eye(dim, dtype=complex)
    for j in range(schedule.r_steps):
        u = exp_ini.matrix(schedule.alpha(j)) @ (exp_fin.matrix(schedule.beta(j)) @ u)
    return u


def trotter_error(instance: AeqsInstance, schedule: Schedule) -> float:
    """Spectral-norm gap between the midpoint and step-factored products."""
    return spectral_norm(midpoint_propagator(instance, schedule)
                         - trotter_product(instance, schedule))


@dataclass
class PhaseShiftFactors:
    """Diagonal phase data for the Hadamard factorization of the V(j)."""

    w: np.ndarray                 # W^(x) k
    ini_phases: np.ndarray        # eigenvalues of H_ini read off in the Hadamard basis
    fin_values: np.ndarray        # eigenvalues of H_fin
    fin_vectors: np.ndarray       # diagonalizing unitary P of H_fin
    gamma: float

    def ps_ini_power(self, power: int) -> np.ndarray:
        return np.diag(np.exp(-1j * self.ini_phases * self.gamma * power))

    def ps_fin_power(self, power: int) -> np.ndarray:
        phases = np.exp(-1j * self.fin_values * self.gamma * power)
        return (self.fin_vectors * phases) @ self.fin_vectors.conj().T

    def step(self, j: int, r_steps: int) -> np.ndarray:
        z = self.w @ self.ps_ini_power(2 * r_steps - 2 * j - 1) @ self.w
        return z @ self.ps_fin_power(2 * j + 1)


def phase_shift_factors(instance: AeqsInstance, schedule: Schedule) -> PhaseShiftFactors:
    h_ini, h_fin = _dense_pair(instance)
    dim = h_ini.shape[0]
    k = dim.bit_length() - 1
    if 2**k != dim:
        raise NotHadamardDiagonal(f"dimension {dim} is not a power of two")
    w = hadamard_power(k)
    conjugated = w @ h_ini @ w
    off = conjugated - np.diag(np.diag(conjugated))
    if spectral_norm(off) > PHASE_DIAG_TOL:
        raise NotHadamardDiagonal(
            f"H_ini is not Hadamard-diagonal: off-diagonal norm {spectral_norm(off):.3e}"
        )
    fin_values, fin_vectors = np.linalg.eigh((h_fin + h_fin.conj().T) / 2.0)
    return PhaseShiftFactors(
        w=w,
        ini_phases=np.real(np.diag(conjugated)),
        fin_values=fin_values,
        fin_vectors=fin_vectors,
        gamma=schedule.gamma,
    )


def phase_shift_product(instance: AeqsInstance, schedule: Schedule) -> np.ndarray:
    """Product of the Hadamard-factored steps Z(j+1, j); equals the
    step-factored product whenever the precondition holds."""
    factors = phase_shift_factors(instance, schedule)
    dim = factors.w.shape[0]
    u = np.eye(dim, dtype=complex)
    for j in range(schedule.r_steps):
        u = factors.step(j, schedule.r_steps) @ u
    return u


def _step_applier(instance: AeqsInstance, schedule: Schedule, method: str):
    """Returns apply(j, psi) for one evolution step of the chosen method."""
    h_ini, h_fin = _dense_pair(instance)
    if method == "midpoint":
        dt = schedule.t_total / schedule.r_steps / schedule.hbar

        def apply(j, psi):
            return _CachedExp(_interp(h_ini, h_fin, schedule.midpoint_s(j))).apply(dt, psi)

    elif method == "trotter":
        exp_ini, exp_fin = _CachedExp(h_ini), _CachedExp(h_fin)

        def apply(j, psi):
            return exp_ini.apply(schedule.alpha(j), exp_fin.apply(schedule.beta(j), psi))

    elif method == "phase":
        factors = phase_shift_factors(instance, schedule)

        def apply(j, psi):
            return factors.step(j, schedule.r_steps) @ psi

    else:
        raise EvolveError(f"unknown method {method!r}; use midpoint | trotter | phase")
    return apply, h_ini, h_fin


def _phase_min_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over global phase of || a - e^(i theta) b ||_2."""
    return math.sqrt(max(0.0, 2.0 * (1.0 - abs(np.vdot(a, b)))))


def evolve_trace(instance: AeqsInstance, schedule: Schedule, method: str = "trotter",
                 record_every: int = 1) -> EvolutionTrace:
    """Propagate the ground state of H_ini and track the instantaneous ground
    state of H(s) at every recorded step.

    Requires a unique H_ini ground state.  The final record reports the
    squared overlap with the ground state of H_fin and the l2 distance
    minimized over a global phase.
    """
    apply, h_ini, h_fin = _step_applier(instance, schedule, method)
    _, psi, unique = ground_state(instance.h_ini)
    if not unique:
        raise EvolveError("H_ini has a degenerate ground state; evolution start undefined")
    psi = psi.astype(complex)

    trace = EvolutionTrace(method=method)
    for j in range(schedule.r_steps):
        psi = apply(j, psi)
        if (j + 1) % record_every == 0 or j + 1 == schedule.r_steps:
            s = (j + 1) / schedule.r_steps
            vals, vecs = np.linalg.eigh(_interp(h_ini, h_fin, s))
            overlap_sq = float(abs(np.vdot(vecs[:, 0], psi)) ** 2)
            trace.records.append(
                TraceRecord(j=j, s=s, ground_energy=float(vals[0]),
                            overlap_sq=overlap_sq, norm=float(np.linalg.norm(psi)))
            )
    vals, vecs = np.linalg.eigh(h_fin)
    ground = vecs[:, 0]
    trace.final_overlap_sq = float(abs(np.vdot(ground, psi)) ** 2)
    trace.final_distance = _phase_min_distance(ground, psi)
    trace.final_state = psi
    return trace


def _trotter_run_fast(h_ini: np.ndarray, h_fin: np.ndarray, schedule: Schedule,
                      psi: np.ndarray) -> np.ndarray:
    """Apply all R step-factored propagators with precomputed phase tables."""
    exp_ini, exp_fin = _CachedExp(h_ini), _CachedExp(h_fin)
    r = schedule.r_steps
    js = np.arange(r)
    alphas = (2 * r - 2 * js - 1) * schedule.gamma
    betas = (2 * js + 1) * schedule.gamma
    phases_ini = np.exp(-1j * np.outer(alphas, exp_ini.values))
    phases_fin = np.exp(-1j * np.outer(betas, exp_fin.values))
    # Work in the H_fin eigenbasis; m maps it into the H_ini eigenbasis.
    m = exp_ini.vectors.conj().T @ exp_fin.vectors
    mh = m.conj().T
    c = exp_fin.vectors.conj().T @ psi
    for j in range(r):
        c *= phases_fin[j]
        d = m @ c
        d *= phases_ini[j]
        c = mh @ d
    return exp_fin.vectors @ c


def final_overlap_sq(instance: AeqsInstance, schedule: Schedule, method: str = "trotter") -> float:
    """Final-ground-state squared overlap without per-step records."""
    _, psi, unique = ground_state(instance.h_ini)
    if not unique:
        raise EvolveError("H_ini has a degenerate ground state; evolution start undefined")
    psi = psi.astype(complex)
    if method == "trotter":
        h_ini, h_fin = _dense_pair(instance)
        psi = _trotter_run_fast(h_ini, h_fin, schedule, psi)
    else:
        apply, _h_ini, h_fin = _step_applier(instance, schedule, method)
        for j in range(schedule.r_steps):
            psi = apply(j, psi)
    _, vecs = np.linalg.eigh(h_fin)
    return float(abs(np.vdot(vecs[:, 0], psi)) ** 2)


def default_r_policy(t: float) -> int:
    """R grows like T^3 with a floor of 64."""
    return max(64, int(math.ceil(max(t, 0.0) ** 3)))


@dataclass
class TimeSearchResult:
    t: float
    overlap_sq: float
    converged: bool
    evaluations: list = field(default_factory=list)   # (T, overlap_sq) pairs


def find_sufficient_t(instance: AeqsInstance, target_overlap_sq: float,
                      r_policy=None, method: str = "trotter",
                      t_start: float = 1.0, t_cap: float = 1e4,
                      bisect_steps: int = 5) -> TimeSearchResult:
    """Doubling-then-bisection search for an evolution time reaching the
    target final overlap.

    The search is deterministic, so a larger target can never return a
    smaller time.  If the cap is exceeded the result carries the best
    overlap found and converged=False instead of failing silently.
    """
    if not 0.0 < target_overlap_sq < 1.0:
        raise EvolveError("target overlap must lie strictly between 0 and 1")
    r_policy = r_policy or default_r_policy
    evaluations = []

    def success(t: float):
        overlap = final_overlap_sq(instance, Schedule(t, r_policy(t)), method)
        evaluations.append((t, overlap))
        return overlap >= target_overlap_sq, overlap

    t = t_start
    ok, overlap = success(t)
    if ok:
        return TimeSearchResult(t, overlap, True, evaluations)
    while t < t_cap:
        t_next = min(2 * t, t_cap)
        ok, overlap = success(t_next)
        if ok:
            lo, hi, hi_overlap = t, t_next, overlap
            for _ in range(bisect_steps):
                mid = (lo + hi) / 2
                ok_mid, overlap_mid = success(mid)
                if ok_mid:
                    hi, hi_overlap = mid, overlap_mid
                else:
                    lo = mid
            return TimeSearchResult(hi, hi_overlap, True, evaluations)
        t = t_next
        if t >= t_cap:
            break
    best = max(evaluations, key=lambda pair: pair[1])
    return TimeSearchResult(best[0], best[1], False, evaluations)
