"""Bayesian phase difference estimation of an energy gap.

One iteration: with prior N(mu, sigma), run the interference circuit at
t = time_coeff / sigma for n_scan equally spaced trial gaps in
[mu - sigma, mu + sigma], fit 0.5 + A exp(-(x-m)^2 / 2s^2) to the measured
Prob(0) curve, and multiply the prior by N(m, s). Stop once the posterior
width drops below thresh_coeff * M / t.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    IdenticalReferences,
    InvalidFit,
    LengthMismatch,
    ParticleNumberMismatch,
    TooFewPoints,
)
from .evolution import (
    DENSE_SLICE_MAX_QUBITS,
    Backend,
    TrotterPlan,
    TrotterRule,
    evolve_array,
    make_plan,
    slice_count,
    step_gates,
    tau_target,
)
from .hamiltonian_io import SpinOrbitalIntegrals
from .qubit_map import (
    DEFAULT_PRUNE_CUTOFF,
    Determinant,
    QubitHamiltonian,
    as_determinant,
    determinant_expectation,
    jordan_wigner,
)
from .state_engine import (
    Circuit,
    Gate,
    apply_gate_array,
    ancilla_prob0,
    basis_state,
    sample_shots,
    stream_rng,
    StateVector,
)

BASELINE = 0.5


class Mode(str, Enum):
    SAMPLED = "sampled"
    EXACT_PROB = "exact"


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError(f"non-finite Gaussian parameters ({self.mean}, {self.std})")
        if self.std <= 0:
            raise ValueError(f"Gaussian std must be positive, got {self.std}")


@dataclass(frozen=True)
class ScanPoint:
    delta_eps: float
    prob0: float
    shots: int = 0


@dataclass(frozen=True)
class LikelihoodFit:
    amplitude: float
    mean: float
    std: float
    baseline: float = BASELINE
    rms_residual: float = 0.0
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class BpdeConfig:
    n_scan: int = 21
    shots: int = 5000
    time_coeff: float = 1.8
    sigma_floor: float = 0.1
    sigma_mult: float = 10.0
    thresh_coeff: float = 0.001
    trotter_rule: TrotterRule = TrotterRule.INVERTED
    max_iterations: int = 100
    mode: Mode = Mode.SAMPLED
    seed: int = 0
    backend: Backend = Backend.FUSED
    # core-potential integral for the slice rule; None takes Re h1[0][0]
    h00: float | None = None
    workers: int = 1
    dense_slices: bool = True
    prune_cutoff: float = DEFAULT_PRUNE_CUTOFF

    def __post_init__(self) -> None:
        object.__setattr__(self, "trotter_rule", TrotterRule(self.trotter_rule))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "backend", Backend(self.backend))
        if self.n_scan < 5 or self.n_scan % 2 == 0:
            raise ValueError(f"n_scan must be odd and >= 5, got {self.n_scan}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for name in ("time_coeff", "sigma_floor", "sigma_mult", "thresh_coeff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("trotter_rule", "mode", "backend"):
            d[k] = d[k].value
        return d


@dataclass
class IterationRecord:
    index: int
    prior: Gaussian
    t: float
    m_slices: int
    e_thre: float
    scan: list[ScanPoint]
    fit: LikelihoodFit
    posterior: Gaussian


@dataclass
class BpdeResult:
    gap: float
    sigma_final: float
    e_thre: float
    converged: bool
    iterations: list[IterationRecord]
    total_shots: int
    mu_ini: float
    config: BpdeConfig
    seed: int
    h00: float
    tau_target: float
    n_qubits: int


# --------------------------------------------------------------------------
# circuit
# --------------------------------------------------------------------------

def _check_references(h: QubitHamiltonian, d0, d1) -> tuple[Determinant, Determinant]:
    d0, d1 = as_determinant(d0), as_determinant(d1)
    for d in (d0, d1):
        if len(d) != h.n_qubits:
            raise LengthMismatch(f"determinant {d} has {len(d)} sites, Hamiltonian has {h.n_qubits} qubits")
    if d0 == d1:
        raise IdenticalReferences("d0 and d1 are identical; the interference signal is degenerate")
    return d0, d1


def excit_gates(d0: Determinant, d1: Determinant, ancilla: int) -> list[Gate]:
    """Ancilla-controlled bit flips turning |d0> into |d1>."""
    return [Gate.ctrl_x(ancilla, q) for q in d0.flips(d1)]


def build_bpde_circuit(h: QubitHamiltonian, d0, d1, delta_eps: float, plan: TrotterPlan,
                       backend: Backend | str = Backend.FUSED) -> Circuit:
    """Full interference circuit on n system qubits plus the ancilla (qubit n).

    The system register is expected in |d0> and the ancilla in |0> beforehand
    (see ``initial_state``).
    """
    d0, d1 = _check_references(h, d0, d1)
    n = h.n_qubits
    anc = n
    excit = excit_gates(d0, d1, anc)
    slice_ = step_gates(h, plan.tau, backend, plan.term_order)
    gates = ([Gate.had(anc)] + excit + slice_ * plan.m_slices + excit[::-1]
             + [Gate.phase(anc, delta_eps * plan.t), Gate.had(anc)])
    return Circuit(n + 1, gates)


def initial_state(h: QubitHamiltonian, d0) -> StateVector:
    d0 = as_determinant(d0)
    return basis_state(h.n_qubits + 1, Determinant(d0.occ + (0,)))


def interference_probabilities(h: QubitHamiltonian, d0, d1, delta_eps: Sequence[float],
                               plan: TrotterPlan, backend: Backend | str = Backend.FUSED,
                               workers: int = 1, dense: bool = False) -> np.ndarray:
    """Exact Prob(0) of the interference circuit for each trial gap.

    The circuit up to the phase gate does not depend on the trial gap, so that
    prefix is simulated once and only the last two gates are repeated.
    """
    d0, d1 = _check_references(h, d0, d1)
    n = h.n_qubits
    anc = n
    excit = excit_gates(d0, d1, anc)
    psi = initial_state(h, d0).amps
    psi = apply_gate_array(psi, Gate.had(anc), n + 1)
    for g in excit:
        psi = apply_gate_array(psi, g, n + 1)
    psi = evolve_array(psi, n + 1, h, plan, backend, workers,
                       dense=dense and n <= DENSE_SLICE_MAX_QUBITS)
    for g in reversed(excit):
        psi = apply_gate_array(psi, g, n + 1)
    out = np.empty(len(delta_eps))
    for i, de in enumerate(delta_eps):
        phi = apply_gate_array(psi, Gate.phase(anc, de * plan.t), n + 1)
        phi = apply_gate_array(phi, Gate.had(anc), n + 1)
        out[i] = ancilla_prob0(StateVector(n + 1, phi), anc)
    return out


# --------------------------------------------------------------------------
# scan / fit / update
# --------------------------------------------------------------------------

def scan_grid(prior: Gaussian, n_scan: int) -> np.ndarray:
    i = np.arange(n_scan)
    return prior.mean - prior.std + 2.0 * prior.std * i / (n_scan - 1)


def evolution_time(prior: Gaussian, cfg: BpdeConfig) -> float:
    return cfg.time_coeff / prior.std


def scan_likelihood(h: QubitHamiltonian, d0, d1, prior: Gaussian, cfg: BpdeConfig,
                    iteration: int = 0) -> list[ScanPoint]:
    """Prob(0) on the scan grid of ``prior``.

    In SAMPLED mode the count at grid point i of iteration k is drawn from the
    stream (cfg.seed, k, i), so results do not depend on evaluation order.
    """
    t = evolution_time(prior, cfg)
    m = slice_count(t, cfg.h00 or 0.0, cfg.trotter_rule)
    plan = make_plan(h, t, m)
    grid = scan_grid(prior, cfg.n_scan)
    probs = interference_probabilities(h, d0, d1, grid, plan, cfg.backend, cfg.workers,
                                       dense=cfg.dense_slices)
    if cfg.mode is Mode.EXACT_PROB:
        return [ScanPoint(float(x), float(p), 0) for x, p in zip(grid, probs)]
    points = []
    for i, (x, p) in enumerate(zip(grid, probs)):
        count = sample_shots(float(p), cfg.shots, stream_rng(cfg.seed, iteration, i))
        points.append(ScanPoint(float(x), count / cfg.shots, cfg.shots))
    return points


def _model(params: np.ndarray, x: np.ndarray):
    amp, m, s = params
    u = (x - m) / s
    e = np.exp(-0.5 * u * u)
    f = BASELINE + amp * e
    jac = np.column_stack([e, amp * e * u / s, amp * e * u * u / s])
    return f, jac


def _centroid_fallback(x: np.ndarray, y: np.ndarray, sigma_grid: float, rms: float,
                       iterations: int) -> LikelihoodFit:
    w = y - BASELINE
    above = w > 0
    mean = float(np.sum(w[above] * x[above]) / np.sum(w[above])) if above.any() else float(np.mean(x))
    amp = float(max(y.max() - BASELINE, 0.0))
    return LikelihoodFit(amp, mean, sigma_grid, BASELINE, rms, False, iterations)


def fit_gaussian(points: Sequence[ScanPoint], max_iter: int = 200, rtol: float = 1e-10) -> LikelihoodFit:
    """Levenberg-Marquardt fit of 0.5 + A exp(-(x-m)^2 / 2s^2) to the scan.

    Falls back to the probability-weighted centroid of the points above 0.5
    (with std = half the grid width) when the fit diverges, the bump is
    weaker than A = 0.05, or the centre leaves the grid by more than that
    half width. The fallback is flagged ``converged=False``.
    """
    if len(points) < 5:
        raise TooFewPoints(f"need at least 5 scan points, got {len(points)}")
    x = np.array([p.delta_eps for p in points], dtype=float)
    y = np.array([p.prob0 for p in points], dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    lo, hi = float(x[0]), float(x[-1])
    sigma_grid = 0.5 * (hi - lo)
    spacing = (hi - lo) / (len(x) - 1)

    imax = int(np.argmax(y))
    amp0 = float(y[imax] - BASELINE)
    if amp0 <= 0.05 or spacing <= 0:
        return _centroid_fallback(x, y, sigma_grid, float(np.sqrt(np.mean((y - BASELINE) ** 2))), 0)
    n_half = int(np.count_nonzero(y > BASELINE + 0.5 * amp0))
    params = np.array([amp0, float(x[imax]), 0.5 * spacing * max(n_half, 1)])

    f, jac = _model(params, x)
    r = f - y
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jtj = jac.T @ jac
        grad = jac.T @ r
        damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-300))
        try:
            step = np.linalg.solve(damped, -grad)
        except np.linalg.LinAlgError:
            break
        trial = params + step
        if not np.all(np.isfinite(trial)) or trial[2] == 0:
            lam *= 10.0
            if lam > 1e16:
                break
            continue
        f_new, jac_new = _model(trial, x)
        r_new = f_new - y
        cost_new = float(r_new @ r_new)
        small = np.all(np.abs(step) <= rtol * np.maximum(np.abs(trial), 1e-300))
        if cost_new <= cost:
            params, f, jac, r, cost = trial, f_new, jac_new, r_new, cost_new
            lam = max(lam / 10.0, 1e-12)
            if small:
                converged = True
                break
        else:
            lam *= 10.0
            if small or lam > 1e16:
                # no downhill step left: at a stationary point to working precision
                converged = True
                break

    amp, m, s = float(params[0]), float(params[1]), abs(float(params[2]))
    rms = float(np.sqrt(cost / len(x)))
    if (not converged or not all(map(math.isfinite, (amp, m, s))) or s <= 0
            or amp <= 0.05 or not (lo - sigma_grid <= m <= hi + sigma_grid)):
        return _centroid_fallback(x, y, sigma_grid, rms, it)
    return LikelihoodFit(amp, m, s, BASELINE, rms, True, it)


def bayes_update(prior: Gaussian, fit) -> Gaussian:
    """Posterior of a Gaussian prior times a Gaussian likelihood N(fit.mean, fit.std)."""
    m, s = float(fit.mean), float(fit.std)
    if not math.isfinite(m) or math.isnan(s) or s <= 0:
        raise InvalidFit(f"likelihood parameters unusable: mean={m}, std={s}")
    if math.isinf(s):
        return prior
    vp, vl = prior.std ** 2, s * s
    mean = (prior.mean * vl + m * vp) / (vp + vl)
    std = prior.std * s / math.sqrt(vp + vl)
    return Gaussian(mean, std)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def initial_prior(mu_ini: float, cfg: BpdeConfig) -> Gaussian:
    return Gaussian(mu_ini, max(cfg.sigma_floor, cfg.sigma_mult * abs(mu_ini)))


def run_bpde(ints: SpinOrbitalIntegrals, d0, d1, cfg: BpdeConfig = BpdeConfig(),
             h: QubitHamiltonian | None = None) -> BpdeResult:
    """Estimate E(state of d1) - E(state of d0).

    ``h`` may be passed to reuse an existing Jordan-Wigner transform of ``ints``.
    Failure to converge within ``max_iterations`` is reported through
    ``BpdeResult.converged``, not raised.
    """
    if h is None:
        h = jordan_wigner(ints, cfg.prune_cutoff)
    d0, d1 = _check_references(h, d0, d1)
    if d0.n_particles != d1.n_particles:
        raise ParticleNumberMismatch(
            f"d0 has {d0.n_particles} electrons, d1 has {d1.n_particles}")
    h00 = float(ints.h1[0, 0].real) if cfg.h00 is None else float(cfg.h00)
    cfg = replace(cfg, h00=h00)

    mu_ini = determinant_expectation(h, d1) - determinant_expectation(h, d0)
    prior = initial_prior(mu_ini, cfg)
    records: list[IterationRecord] = []
    total_shots = 0
    converged = False
    e_thre = math.inf
    for k in range(cfg.max_iterations):
        t = evolution_time(prior, cfg)
        m = slice_count(t, h00, cfg.trotter_rule)
        scan = scan_likelihood(h, d0, d1, prior, cfg, iteration=k)
        fit = fit_gaussian(scan)
        posterior = bayes_update(prior, fit)
        e_thre = cfg.thresh_coeff * m / t
        total_shots += sum(p.shots for p in scan)
        records.append(IterationRecord(k, prior, t, m, e_thre, scan, fit, posterior))
        prior = posterior
        if posterior.std < e_thre:
            converged = True
            break

    return BpdeResult(
        gap=prior.mean, sigma_final=prior.std, e_thre=e_thre, converged=converged,
        iterations=records, total_shots=total_shots, mu_ini=mu_ini, config=cfg,
        seed=cfg.seed, h00=h00, tau_target=tau_target(h00, cfg.trotter_rule),
        n_qubits=h.n_qubits)
