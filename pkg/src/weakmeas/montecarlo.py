"""Single-shot trajectory sampler for the full pulse-and-readout sequence.

A protocol is data: a list of pulses, readout windows and one terminal
nuclear tomography.  Each shot evolves a 4x4 density matrix through the
steps, draws tunnel events and times, applies optional label errors and
dephasing, and records whether the shot passed post-selection plus the
sampled tomography eigenvalue.

Reproducibility contract: shot ``i`` of a run with root seed ``s`` always
uses the counter-based stream ``Philox(key=(s, i))``, so serial and
parallel runs (any worker count) give bit-identical aggregates.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.stats import chi2

from . import qmath
from .qmath import DensityMatrix
from .protocols import (
    BLIP,
    NO_BLIP,
    ImpossibleBranchError,
    PostSelectedState,
    TunnelModel,
)
from .spinsys import (
    JointState,
    NuclearState,
    PROJ_DOWN,
    PROJ_UP,
    RotationPulse,
    pauli,
    prepare_initial,
    pulse_unitary,
)


class NoInformationError(ValueError):
    """An estimator was asked to run on data that carries no information."""


class ProtocolError(ValueError):
    """Malformed protocol description."""


@dataclass(frozen=True)
class Pulse:
    pulse: RotationPulse

    @cached_property
    def unitary(self) -> np.ndarray:
        return pulse_unitary(self.pulse)

    @cached_property
    def unitary_h(self) -> np.ndarray:
        return self.unitary.conj().T


@dataclass(frozen=True)
class ReadoutWindow:
    model: TunnelModel
    keep: str = NO_BLIP  # "no_blip", "blip" or "both"

    def __post_init__(self):
        if self.keep not in (NO_BLIP, BLIP, "both"):
            raise ProtocolError(f"unknown keep policy {self.keep!r}")

    @cached_property
    def survival(self) -> tuple[float, float]:
        return self.model.survival_up, self.model.survival_down

    @cached_property
    def damping_amplitudes(self) -> np.ndarray:
        """Per-basis-state amplitude factors of the no-blip branch."""
        e_up, e_down = self.survival
        su, sd = math.sqrt(e_up), math.sqrt(e_down)
        return np.array([su, sd, su, sd])

    @cached_property
    def damping_matrix(self) -> np.ndarray:
        d = self.damping_amplitudes
        return d[:, None] * d[None, :]


@dataclass(frozen=True)
class NuclearTomography:
    axis: str  # "x", "y" or "z"

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ProtocolError(f"unknown tomography axis {self.axis!r}")

    @cached_property
    def observable(self) -> np.ndarray:
        return pauli(self.axis, "nuclear-only-2x2")


ProtocolStep = Union[Pulse, ReadoutWindow, NuclearTomography]


@dataclass(frozen=True)
class Protocol:
    """Declarative pulse sequence ending in one nuclear tomography."""

    steps: tuple[ProtocolStep, ...]
    initial: JointState = field(default_factory=prepare_initial)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps or not isinstance(self.steps[-1], NuclearTomography):
            raise ProtocolError("protocol must end with a NuclearTomography step")
        if any(isinstance(s, NuclearTomography) for s in self.steps[:-1]):
            raise ProtocolError("only the terminal step may be a tomography")

    @property
    def windows(self) -> tuple[ReadoutWindow, ...]:
        return tuple(s for s in self.steps if isinstance(s, ReadoutWindow))

    @cached_property
    def initial_statevector(self) -> Optional[np.ndarray]:
        """Amplitudes of the initial state when it is pure, else None."""
        m = self.initial.rho.matrix
        vals, vecs = np.linalg.eigh(m)
        if vals[-1] < 1.0 - 1e-12:
            return None
        psi = vecs[:, -1].astype(complex)
        psi.flags.writeable = False
        return psi


@dataclass(frozen=True)
class NoiseConfig:
    """Phenomenological knobs; the all-off default reproduces the closed forms."""

    nuclear_dephasing_time: Optional[float] = None  # Gaussian T2*, in ms
    readout_false_negative: float = 0.0
    readout_false_positive: float = 0.0

    def __post_init__(self):
        if self.nuclear_dephasing_time is not None and self.nuclear_dephasing_time <= 0:
            raise ValueError("nuclear_dephasing_time must be positive")
        for p in (self.readout_false_negative, self.readout_false_positive):
            if not 0.0 <= p <= 1.0:
                raise ValueError("readout error rates must be in [0, 1]")


NO_NOISE = NoiseConfig()


@dataclass(frozen=True)
class ShotRecord:
    """Outcome of one trajectory."""

    kept: bool
    blip_times: tuple[Optional[float], ...]
    nuclear_outcome: Optional[int]
    rng_stream_id: int


@dataclass(frozen=True)
class EnsembleStats:
    """Post-selected ensemble statistics of the +-1 tomography outcomes."""

    n_total: int
    n_kept: int
    mean: Optional[float]
    std_error: Optional[float]

    @property
    def success_fraction(self) -> float:
        return self.n_kept / self.n_total

    @property
    def empty(self) -> bool:
        return self.n_kept == 0


def apply_dephasing(state: NuclearState, duration: float, t2star: float) -> NuclearState:
    """Gaussian coherence decay: off-diagonals shrink by exp(-(t/T2*)^2)."""
    if duration <= 0 or t2star <= 0:
        raise ValueError("duration and t2star must be positive")
    f = math.exp(-((duration / t2star) ** 2))
    m = state.rho.matrix.copy()
    m[0, 1] *= f
    m[1, 0] *= f
    return NuclearState(DensityMatrix(m))


def _shot_rng(rng_seed: int, shot_index: int) -> np.random.Generator:
    """Independent counter-based stream for one shot."""
    key = np.array([rng_seed & 0xFFFFFFFFFFFFFFFF, shot_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _reload_down(joint: np.ndarray) -> np.ndarray:
    """Trace out the electron and load a fresh down electron."""
    return np.kron(qmath.partial_trace(joint, qmath.ELECTRON), PROJ_DOWN)


def _dephase_joint(joint: np.ndarray, duration: float, t2star: float) -> np.ndarray:
    f = math.exp(-((duration / t2star) ** 2))
    out = joint.copy()
    out[:2, 2:] *= f  # nuclear up-down coherence blocks
    out[2:, :2] *= f
    return out


def _truncated_exp_time(u: float, gamma: float, t_m: float) -> float:
    """Inverse CDF of the tunnel-time law on [0, t_m], given a blip occurred."""
    q = -math.expm1(-gamma * t_m)  # blip probability within the window
    return -math.log1p(-u * q) / gamma


def _nuclear_reduced(joint: np.ndarray) -> np.ndarray:
    """Manual electron partial trace (hot path; avoids einsum overhead)."""
    t = joint.reshape(2, 2, 2, 2)
    return t[:, 0, :, 0] + t[:, 1, :, 1]


def _embed_nuclear(nuc: np.ndarray) -> np.ndarray:
    """Joint state with the given nuclear 2x2 and a fresh down electron."""
    out = np.zeros((4, 4), dtype=complex)
    out[1, 1] = nuc[0, 0]
    out[1, 3] = nuc[0, 1]
    out[3, 1] = nuc[1, 0]
    out[3, 3] = nuc[1, 1]
    return out


def _reload_down_fast(joint: np.ndarray) -> np.ndarray:
    return _embed_nuclear(_nuclear_reduced(joint))


def sample_shot(
    protocol: Protocol,
    noise: NoiseConfig = NO_NOISE,
    rng_seed: int = 0,
    shot_index: int = 0,
) -> ShotRecord:
    """Simulate one trajectory; deterministic given (rng_seed, shot_index).

    Zero-dephasing trajectories stay pure, so the hot path evolves a
    4-amplitude statevector and only falls back to a density matrix when
    dephasing is on or a partially-collapsed electron must be traced out
    mid-sequence.  Both representations consume the random stream in the
    same order, so the sampled record does not depend on the path taken.
    """
    rng = _shot_rng(rng_seed, shot_index)
    rand = rng.random
    steps = protocol.steps
    n_steps = len(steps) - 1

    psi: Optional[np.ndarray] = protocol.initial_statevector
    joint: Optional[np.ndarray] = None
    if psi is None or noise.nuclear_dephasing_time is not None:
        psi = None
        joint = protocol.initial.rho.matrix
    blip_times: list[Optional[float]] = []
    kept = True

    for step_index in range(n_steps):
        step = steps[step_index]
        if type(step) is Pulse:
            if psi is not None:
                psi = step.unitary @ psi
            else:
                joint = step.unitary @ joint @ step.unitary_h
            continue

        # readout window
        e_up, e_down = step.survival
        if psi is not None:
            p_up = psi[0].real**2 + psi[0].imag**2 + psi[2].real**2 + psi[2].imag**2
        else:
            p_up = joint[0, 0].real + joint[2, 2].real
        p_down = 1.0 - p_up
        w_blip_up = p_up * (1.0 - e_up)
        w_blip_down = p_down * (1.0 - e_down)
        p_blip = w_blip_up + w_blip_down
        true_blip = rand() < p_blip
        t_blip: Optional[float] = None

        if true_blip:
            # which electron state tunneled, and when
            if w_blip_down > 0.0 and rand() * p_blip >= w_blip_up:
                gamma, e_gone = step.model.gamma_down_out, 1
            else:
                gamma, e_gone = step.model.gamma_up_out, 0
            t_blip = _truncated_exp_time(rand(), gamma, step.model.t_m)
            # project the electron onto the tunneled branch, reload it down
            if psi is not None:
                a0, a1 = psi[e_gone], psi[2 + e_gone]
                norm = math.sqrt(
                    a0.real**2 + a0.imag**2 + a1.real**2 + a1.imag**2
                )
                psi = np.array([0.0, a0 / norm, 0.0, a1 / norm], dtype=complex)
            else:
                nuc = joint.reshape(2, 2, 2, 2)[:, e_gone, :, e_gone]
                joint = _embed_nuclear(nuc / (nuc[0, 0].real + nuc[1, 1].real))
        else:
            # amplitude damping of the surviving branches
            if psi is not None:
                psi = psi * step.damping_amplitudes
                norm_sq = float(np.vdot(psi, psi).real)
                psi = psi / math.sqrt(norm_sq)
                if psi[0] != 0 or psi[2] != 0:
                    # electron only partially collapsed; tracing it out for
                    # a later reload makes the nuclear state mixed
                    if step_index + 1 < n_steps:
                        joint = np.outer(psi, psi.conj())
                        joint = _reload_down_fast(joint)
                        psi = None
                else:
                    psi = np.array([0.0, psi[1], 0.0, psi[3]], dtype=complex)
            else:
                joint = joint * step.damping_matrix
                w = (joint[0, 0] + joint[1, 1] + joint[2, 2] + joint[3, 3]).real
                joint = _reload_down_fast(joint / w)

        # label error: the classified outcome, not the state, is flipped
        model = step.model
        flip_p = (
            model.readout_false_negative + noise.readout_false_negative
            - model.readout_false_negative * noise.readout_false_negative
            if true_blip
            else model.readout_false_positive + noise.readout_false_positive
            - model.readout_false_positive * noise.readout_false_positive
        )
        observed_blip = true_blip
        if flip_p > 0.0 and rand() < flip_p:
            observed_blip = not true_blip
        blip_times.append(t_blip if (true_blip and observed_blip) else None)

        if noise.nuclear_dephasing_time is not None:
            joint = _dephase_joint(joint, model.t_m, noise.nuclear_dephasing_time)

        if step.keep != "both":
            wanted_blip = step.keep == BLIP
            if observed_blip != wanted_blip:
                kept = False
                break

    outcome: Optional[int] = None
    if kept:
        axis = steps[-1].axis
        if psi is not None:
            n00 = psi[0].real**2 + psi[0].imag**2 + psi[1].real**2 + psi[1].imag**2
            n01 = psi[0] * psi[2].conjugate() + psi[1] * psi[3].conjugate()
            n11 = 1.0 - n00
        else:
            nuc = _nuclear_reduced(joint)
            n00, n11, n01 = nuc[0, 0].real, nuc[1, 1].real, nuc[0, 1]
        if axis == "z":
            expectation = n00 - n11
        elif axis == "x":
            expectation = 2.0 * n01.real
        else:
            expectation = -2.0 * n01.imag
        p_plus = min(max((1.0 + expectation) / 2.0, 0.0), 1.0)
        outcome = 1 if rand() < p_plus else -1

    return ShotRecord(
        kept=kept,
        blip_times=tuple(blip_times),
        nuclear_outcome=outcome,
        rng_stream_id=shot_index,
    )


def _run_chunk(args) -> list[ShotRecord]:
    protocol, noise, rng_seed, start, stop = args
    return [sample_shot(protocol, noise, rng_seed, i) for i in range(start, stop)]


def run_shots(
    protocol: Protocol,
    noise: NoiseConfig = NO_NOISE,
    n_shots: int = 1,
    rng_seed: int = 0,
    n_jobs: int = 1,
) -> list[ShotRecord]:
    """All shot records for indices 0..n_shots-1, in index order.

    ``n_jobs > 1`` splits the index range over worker processes; the result
    is identical to the serial run because every shot has its own stream.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if n_jobs <= 1:
        return _run_chunk((protocol, noise, rng_seed, 0, n_shots))
    bounds = np.linspace(0, n_shots, n_jobs + 1, dtype=int)
    chunks = [
        (protocol, noise, rng_seed, int(a), int(b))
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [rec for part in parts for rec in part]


def stats_from_records(records: Sequence[ShotRecord]) -> EnsembleStats:
    """Order-insensitive aggregation of the kept-shot tomography outcomes."""
    n_total = len(records)
    n_kept = 0
    total = 0
    for r in records:
        if r.kept:
            n_kept += 1
            total += r.nuclear_outcome
    if n_kept == 0:
        return EnsembleStats(n_total=n_total, n_kept=0, mean=None, std_error=None)
    mean = total / n_kept
    std_error = math.sqrt(max(1.0 - mean * mean, 0.0) / n_kept)
    return EnsembleStats(n_total=n_total, n_kept=n_kept, mean=mean, std_error=std_error)


def run_ensemble(
    protocol: Protocol,
    noise: NoiseConfig = NO_NOISE,
    n_shots: int = 1,
    rng_seed: int = 0,
    n_jobs: int = 1,
) -> EnsembleStats:
    """Aggregate sample_shot over shot indices 0..n_shots-1."""
    return stats_from_records(run_shots(protocol, noise, n_shots, rng_seed, n_jobs))


def conditional_state(
    protocol: Protocol, window_outcomes: Sequence[str]
) -> PostSelectedState:
    """Deterministic evolution with forced readout outcomes.

    Applies exactly the branch operators the sampler uses, one forced
    outcome ("no_blip" or "blip") per readout window, and returns the final
    nuclear state with the joint probability of that outcome sequence.
    """
    outcomes = list(window_outcomes)
    if len(outcomes) != len(protocol.windows):
        raise ProtocolError("need one forced outcome per readout window")
    joint = protocol.initial.rho.matrix
    probability = 1.0
    for step in protocol.steps[:-1]:
        if isinstance(step, Pulse):
            u = step.unitary
            joint = u @ joint @ u.conj().T
            continue
        model = step.model
        e_up, e_down = model.survival_up, model.survival_down
        outcome = outcomes.pop(0)
        if outcome == NO_BLIP:
            kraus = math.sqrt(e_up) * PROJ_UP + math.sqrt(e_down) * PROJ_DOWN
            k = np.kron(np.eye(2, dtype=complex), kraus)
            joint = k @ joint @ k.conj().T
        elif outcome == BLIP:
            pieces = np.zeros_like(joint)
            for survival, proj in ((e_up, PROJ_UP), (e_down, PROJ_DOWN)):
                if survival < 1.0:
                    k = np.kron(np.eye(2, dtype=complex), proj)
                    pieces = pieces + (1.0 - survival) * (k @ joint @ k.conj().T)
            joint = pieces
        else:
            raise ProtocolError(f"unknown forced outcome {outcome!r}")
        w = float(np.trace(joint).real)
        if w < 1e-15:
            raise ImpossibleBranchError("forced outcome sequence has zero probability")
        probability *= w
        joint = _reload_down(joint / w)
    nuclear = qmath.partial_trace(joint, qmath.ELECTRON)
    return PostSelectedState(NuclearState(DensityMatrix(nuclear)), probability)


@dataclass(frozen=True)
class GammaEstimate:
    """Tunnel-time MLE from blip times, with a 95% likelihood-ratio interval."""

    inv_gamma: float          # 1/Gamma, in ms
    ci_low: float
    ci_high: float            # may be inf when the data cannot bound Gamma below
    n_blips: int
    n_censored: int


def estimate_gamma_from_blips(
    records: Sequence[ShotRecord],
    t_m: float,
    up_branch_probability: float = 0.5,
) -> GammaEstimate:
    """Censored-exponential MLE of the up-electron tunnel-out rate.

    Observed blip times follow the exponential law truncated to the
    window; no-blip shots are right-censored at t_m within the up branch,
    which occurs with the given probability (1/2 for the Bell protocol).
    The 95% interval comes from the likelihood-ratio statistic.
    """
    if any(len(r.blip_times) != 1 for r in records):
        raise ProtocolError("records must come from a single-window protocol")
    times = [r.blip_times[0] for r in records if r.blip_times[0] is not None]
    n_blips = len(times)
    n_censored = len(records) - n_blips
    if n_blips == 0:
        raise NoInformationError("no tunnel events observed")
    sum_t = float(sum(times))
    p = up_branch_probability

    def loglik(gamma: float) -> float:
        return (
            n_blips * math.log(p * gamma)
            - gamma * sum_t
            + n_censored * math.log(1.0 - p + p * math.exp(-gamma * t_m))
        )

    def score(gamma: float) -> float:
        e = math.exp(-gamma * t_m)
        return n_blips / gamma - sum_t - n_censored * p * t_m * e / (1.0 - p + p * e)

    lo, hi = 1e-9 / t_m, 1e6 / t_m
    if score(lo) <= 0.0:
        raise NoInformationError("likelihood is maximized at zero rate")
    if score(hi) >= 0.0:
        raise NoInformationError("likelihood is maximized at infinite rate")
    gamma_hat = brentq(score, lo, hi, xtol=1e-14, rtol=1e-13)

    target = loglik(gamma_hat) - chi2.ppf(0.95, df=1) / 2.0

    def deficit(gamma: float) -> float:
        return loglik(gamma) - target

    g_low = brentq(deficit, lo, gamma_hat) if deficit(lo) < 0 else lo
    g_high = brentq(deficit, gamma_hat, hi) if deficit(hi) < 0 else hi
    # low rate -> long tunnel time
    return GammaEstimate(
        inv_gamma=1.0 / gamma_hat,
        ci_low=1.0 / g_high,
        ci_high=math.inf if g_low <= lo else 1.0 / g_low,
        n_blips=n_blips,
        n_censored=n_censored,
    )
