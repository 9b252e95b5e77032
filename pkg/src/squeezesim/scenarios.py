"""Scenario builders and the production run loop.

A Scenario is an immutable plan: an initial state, an ordered list of
phases, and the observables to sample.  Probe phases advance the state one
beam segment at a time (couple, damp, inject noise, detect); a rotation
phase applies the unknown-angle displacement as a single impulse, since the
dark interval has no other dynamics.

All probe phases, whatever the scenario, funnel through the same in-place
kernels from gaussian_core, so the single-slice homogeneous run and the
one-slice limit of the sliced (thick) run execute identical arithmetic.

Per-step time dependence uses exponential factors frozen at the step start:
couplings shrink as exp(-eta t / 2) while the mean spin decays, the atomic
noise floor grows as exp(+eta t), and inside an absorbing stack each slice
sees the beam attenuated by the slices in front of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import CollectiveVariable, EstimationParams, rotation_coupling
from .errors import ConfigError, InvalidInputError
from .gaussian_core import (
    CHI_STD,
    GaussianState,
    StepOperators,
    TimeSeries,
    TrajectoryRecord,
    _couple_inplace,
    _impulse_inplace,
    _measure_inplace,
    _traceout_inplace,
    standard_labels,
    vacuum_state,
)
from .numerics import sym_eig_all, symmetrize
from .physics import CouplingRates

#: Per-segment coupling validity bound: kappa^2 * tau must not exceed this.
KAPPA_TAU_SQ_MAX = 0.1
#: Per-slice absorption bound for the segment-local coupling to hold.
SLICE_EPSILON_MAX = 0.05

NAMED_OBSERVABLES = (
    "var_p",
    "min_eig_var",
    "min_eig_overlap",
    "var_P_eff",
    "var_P",
    "var_theta",
    "mean_theta",
)


@dataclass(frozen=True)
class SpreadSpec:
    """Deterministic spread of slice couplings at fixed collective strength.

    ``n`` values are laid out over [kappa0_sq (1 - delta), kappa0_sq
    (1 + delta)] -- an evenly spaced inclusive grid by default, uniform
    random draws with ``mode="random"`` -- then rescaled so the summed
    squared coupling equals kappa0_sq exactly.  The collective coupling
    therefore stays fixed while its spread grows with delta.
    """

    kappa0_sq: float
    delta: float
    mode: str = "grid"

    def __post_init__(self):
        if self.kappa0_sq <= 0:
            raise InvalidInputError("kappa0_sq must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise InvalidInputError("delta must lie in [0, 1)")
        if self.mode not in ("grid", "random"):
            raise InvalidInputError("mode must be 'grid' or 'random'")

    def slice_kappas_sq(self, n: int, rng=None) -> np.ndarray:
        """Per-slice squared couplings, summing to kappa0_sq exactly."""
        if n < 1:
            raise InvalidInputError("need at least one slice")
        if n == 1 or self.delta == 0.0:
            raw = np.full(n, self.kappa0_sq)
        elif self.mode == "grid":
            raw = self.kappa0_sq * (1.0 + self.delta * np.linspace(-1.0, 1.0, n))
        else:
            if rng is None:
                rng = np.random.default_rng(0)
            raw = self.kappa0_sq * (1.0 + self.delta * rng.uniform(-1.0, 1.0, n))
        return raw * (self.kappa0_sq / float(np.sum(raw)))


@dataclass(frozen=True)
class SliceConfig:
    """Per-slice parameters of a sliced (optically thick) sample.

    kappas_sq and etas are the rates each slice would have under an
    unattenuated beam; epsilons are per-slice absorption probabilities,
    each small enough for the segment-local coupling to be valid.
    """

    n_slices: int
    kappas_sq: np.ndarray
    etas: np.ndarray
    epsilons: np.ndarray
    atoms_per_slice: float = 0.0

    def __post_init__(self):
        if self.n_slices < 1:
            raise InvalidInputError("need at least one slice")
        for name in ("kappas_sq", "etas", "epsilons"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (self.n_slices,):
                raise InvalidInputError(
                    f"{name} must have one entry per slice ({self.n_slices})"
                )
            if np.any(v < 0):
                raise InvalidInputError(f"{name} entries must be nonnegative")
            object.__setattr__(self, name, v)
        if np.any(self.epsilons > SLICE_EPSILON_MAX):
            raise InvalidInputError(
                f"per-slice absorption must not exceed {SLICE_EPSILON_MAX}"
            )

    @classmethod
    def split(
        cls,
        n: int,
        rates: CouplingRates,
        per_slice_epsilon: float | None = None,
        atoms_per_slice: float = 0.0,
    ):
        """Divide one sample into n equal slices at fixed collective coupling.

        The summed coupling stays rates.kappa_sq (each slice carries 1/n of
        the atoms); the per-atom decay rate is intensity-set and stays
        rates.eta in every slice.  ``per_slice_epsilon`` is the absorption
        each slice inflicts on the beam (defaults to rates.epsilon), so the
        stack's total absorption grows with n.
        """
        eps = rates.epsilon if per_slice_epsilon is None else per_slice_epsilon
        return cls(
            n_slices=n,
            kappas_sq=np.full(n, rates.kappa_sq / n),
            etas=np.full(n, rates.eta),
            epsilons=np.full(n, eps),
            atoms_per_slice=atoms_per_slice,
        )

    def total_absorption(self) -> float:
        """Absorbed beam fraction through the whole stack, 1 - prod(e^-eps)."""
        transmission = 1.0
        for e in self.epsilons:
            transmission *= math.exp(-float(e))
        return 1.0 - transmission


@dataclass(frozen=True)
class ProbeGroup:
    """One simultaneous coupling of a set of slices to the light.

    Start-of-phase values; the runner works on private copies.  ``ax_rows``
    are the x-variable indices of the coupled slices; the light pair is
    always the final two variables.  ``loss_diag`` and ``noise0`` are
    full-dimension diagonals (noise carries its prefactors folded in);
    ``kappa_decay`` / ``noise_growth`` are per-step exponential factors.
    """

    ax_rows: np.ndarray
    kappas0: np.ndarray
    kappa_decay: np.ndarray
    loss_diag: np.ndarray
    noise0: np.ndarray
    noise_growth: np.ndarray
    etas: np.ndarray
    light_prefactor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ax_rows", np.asarray(self.ax_rows, dtype=int))
        for name in ("kappas0", "kappa_decay", "loss_diag", "noise0",
                     "noise_growth", "etas"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=float)
            )

    @property
    def trivial_loss(self) -> bool:
        return bool(np.all(self.loss_diag == 1.0))

    @property
    def trivial_noise(self) -> bool:
        return not np.any(self.noise0)

    def values_at(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(kappas, noise diagonal) in effect at step index k of the phase."""
        return self.kappas0 * self.kappa_decay**k, self.noise0 * self.noise_growth**k

    def step_operators(self, dim: int, k: int, tau: float) -> StepOperators:
        """Equivalent dense operators at step index k (validation path)."""
        kappas, noise = self.values_at(k)
        x, p = dim - 2, dim - 1
        s = np.eye(dim)
        for a, kv in zip(self.ax_rows, kappas):
            s[a, p] = kv
            s[x, a + 1] = kv
        atom_rows = np.concatenate([self.ax_rows, self.ax_rows + 1])
        m = np.zeros(dim)
        n = np.zeros(dim)
        n[x] = noise[x] / self.light_prefactor
        n[p] = noise[p] / self.light_prefactor
        if len(self.ax_rows) == 1 and self.etas[0] > 0.0:
            # single slice: express the growing noise floor via the prefactor
            eta_tau = float(self.etas[0]) * tau
            m[atom_rows] = eta_tau
            atom_prefactor = float(noise[self.ax_rows[0]]) / eta_tau
        else:
            # several slices with distinct decay rates: fold floors into m
            m[atom_rows] = noise[atom_rows] / 2.0
            atom_prefactor = 2.0
        return StepOperators(
            s=s, l=self.loss_diag.copy(), m=m, n=n,
            atom_prefactor=atom_prefactor,
            light_prefactor=self.light_prefactor, tau=tau,
        )


class _GroupRuntime:
    """Mutable per-run copy of a ProbeGroup with preallocated scratch."""

    __slots__ = ("ax_rows", "kappas", "decay", "louter", "lvec", "noise",
                 "growth", "scratch", "decaying")

    def __init__(self, g: ProbeGroup, dim: int):
        self.ax_rows = g.ax_rows
        self.kappas = g.kappas0.copy()
        self.decay = g.kappa_decay
        self.decaying = bool(np.any(g.kappa_decay != 1.0))
        if g.trivial_loss:
            self.louter = None
            self.lvec = None
        else:
            self.louter = np.outer(g.loss_diag, g.loss_diag)
            self.lvec = g.loss_diag
        if g.trivial_noise:
            self.noise = None
            self.growth = None
        else:
            self.noise = g.noise0.copy()
            self.growth = g.noise_growth if np.any(g.noise_growth != 1.0) else None
        self.scratch = np.empty(dim)

    def apply(self, cov, mean, diag):
        _couple_inplace(cov, mean, self.ax_rows, self.kappas, self.scratch)
        if self.louter is not None:
            np.multiply(cov, self.louter, out=cov)
            mean *= self.lvec
        if self.noise is not None:
            diag += self.noise
            if self.growth is not None:
                self.noise *= self.growth
        if self.decaying:
            self.kappas *= self.decay


@dataclass(frozen=True)
class ProbePhase:
    """A stretch of continuous probing: one beam segment per step of tau.

    Groups are applied in order within each step (a single group for a
    thin sample, one group per slice for a stack the beam crosses
    sequentially); the spent segment is then measured, or traced out when
    ``measure`` is off.
    """

    duration: float
    tau: float
    groups: tuple
    measure: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidInputError("tau must be positive")
        if self.duration < 0:
            raise InvalidInputError("duration must be nonnegative")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.tau))

    def step_operators(self, dim: int, k: int = 0) -> list[StepOperators]:
        return [g.step_operators(dim, k, self.tau) for g in self.groups]


@dataclass(frozen=True)
class RotationPhase:
    """Impulsive displacement p_i -> p_i + alpha_i * theta.

    The dark interval [t1, t2] has no other dynamics, so the accumulated
    rotation is applied as one transform and the duration only advances the
    clock.
    """

    duration: float
    targets: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=int))
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        if self.duration < 0:
            raise InvalidInputError("duration must be nonnegative")

    @property
    def n_steps(self) -> int:
        return 0

    def step_operators(self, dim: int) -> list[StepOperators]:
        s = np.eye(dim)
        s[self.targets, 0] = self.alphas
        return [
            StepOperators(
                s=s, l=np.ones(dim), m=np.zeros(dim), n=np.zeros(dim),
                tau=self.duration,
            )
        ]


@dataclass(frozen=True)
class Scenario:
    """Executable plan: initial state, phases, observables, sampling."""

    initial_state: GaussianState
    phases: tuple
    observables: tuple
    tau: float
    sample_every: int = 1000
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sample_every < 1:
            raise InvalidInputError("sample_every must be >= 1")
        for obs in self.observables:
            if isinstance(obs, str) and obs not in NAMED_OBSERVABLES:
                raise InvalidInputError(
                    f"unknown observable {obs!r}; expected one of "
                    f"{NAMED_OBSERVABLES} or a CollectiveVariable"
                )

    @property
    def total_steps(self) -> int:
        return sum(p.n_steps for p in self.phases)

    @property
    def duration(self) -> float:
        return sum(p.duration for p in self.phases)


def _check_validity(kappa_sq_max: float, tau: float):
    if kappa_sq_max * tau > KAPPA_TAU_SQ_MAX + 1e-15:
        raise ConfigError(
            f"kappa^2 * tau = {kappa_sq_max * tau:.4g} exceeds the "
            f"coarse-graining validity bound {KAPPA_TAU_SQ_MAX}; reduce tau"
        )


def _check_thin_epsilon(epsilon: float):
    if epsilon > SLICE_EPSILON_MAX:
        raise ConfigError(
            f"single-pass absorption {epsilon} is not small; slice the gas "
            "with build_thick instead"
        )


def _thin_groups(
    kappas_sq: np.ndarray,
    etas: np.ndarray,
    epsilon: float,
    tau: float,
    dim: int,
    offset: int,
    t_start: float = 0.0,
) -> tuple[ProbeGroup, ...]:
    """Single group: every slice couples to the beam segment simultaneously.

    ``t_start`` shifts the time origin: couplings start from their decayed
    values and noise floors from their grown values at that time.
    """
    n = len(kappas_sq)
    ax_rows = offset + 2 * np.arange(n)
    pair_rows = np.sort(np.concatenate([ax_rows, ax_rows + 1]))
    eta_tau = etas * tau
    start_gain = np.exp(etas * t_start)
    loss = np.ones(dim)
    loss[pair_rows] = np.repeat(np.sqrt(1.0 - eta_tau), 2)
    loss[-2:] = math.sqrt(1.0 - epsilon)
    noise0 = np.zeros(dim)
    noise0[pair_rows] = np.repeat(2.0 * eta_tau * start_gain, 2)
    noise0[-2:] = epsilon
    growth = np.ones(dim)
    growth[pair_rows] = np.repeat(np.exp(eta_tau), 2)
    return (
        ProbeGroup(
            ax_rows=ax_rows,
            kappas0=np.sqrt(kappas_sq * tau) * np.exp(-etas * t_start / 2.0),
            kappa_decay=np.exp(-eta_tau / 2.0),
            loss_diag=loss,
            noise0=noise0,
            noise_growth=growth,
            etas=etas,
        ),
    )


def _thick_groups(
    slices: SliceConfig, tau: float, dim: int, offset: int, t_start: float = 0.0
) -> tuple[ProbeGroup, ...]:
    """One group per slice, in beam order, with entering-beam attenuation.

    Slice i sees the beam attenuated by the slices in front of it: its
    coupling and decay rate carry the accumulated transmission of the
    upstream slices, and its photon-noise floor is amplified by the inverse
    factor.  The transmission is accumulated multiplicatively slice by
    slice, so the stack's bookkeeping composes exactly.
    """
    groups = []
    transmission = 1.0
    for i in range(slices.n_slices):
        ax = offset + 2 * i
        eta_i = float(slices.etas[i]) * transmission
        eps_i = float(slices.epsilons[i])
        k_sq_i = float(slices.kappas_sq[i]) * transmission
        eta_tau = eta_i * tau
        start_gain = math.exp(eta_i * t_start)
        loss = np.ones(dim)
        loss[ax] = loss[ax + 1] = math.sqrt(1.0 - eta_tau)
        loss[-2:] = math.sqrt(1.0 - eps_i)
        noise0 = np.zeros(dim)
        noise0[ax] = noise0[ax + 1] = 2.0 * eta_tau * start_gain
        noise0[-2:] = eps_i / transmission
        growth = np.ones(dim)
        growth[ax] = growth[ax + 1] = math.exp(eta_tau)
        groups.append(
            ProbeGroup(
                ax_rows=np.array([ax]),
                kappas0=np.array(
                    [math.sqrt(k_sq_i * tau) * math.exp(-eta_i * t_start / 2.0)]
                ),
                kappa_decay=np.array([math.exp(-eta_tau / 2.0)]),
                loss_diag=loss,
                noise0=noise0,
                noise_growth=growth,
                etas=np.array([eta_i]),
                light_prefactor=1.0 / transmission,
            )
        )
        transmission *= math.exp(-eps_i)
    return tuple(groups)


def build_homogeneous(
    rates: CouplingRates,
    tau: float,
    t_end: float,
    sample_every: int = 1000,
    measure: bool = True,
) -> Scenario:
    """Uniformly coupled ensemble probed and detected segment by segment."""
    _check_validity(rates.kappa_sq, tau)
    _check_thin_epsilon(rates.epsilon)
    state = vacuum_state(standard_labels(1))
    groups = _thin_groups(
        np.array([rates.kappa_sq]), np.array([rates.eta]), rates.epsilon,
        tau, state.dim, offset=0,
    )
    phase = ProbePhase(duration=t_end, tau=tau, groups=groups, measure=measure)
    return Scenario(
        initial_state=state,
        phases=(phase,),
        observables=("var_p",),
        tau=tau,
        sample_every=sample_every,
        meta={
            "scenario": "homogeneous",
            "kappa_sq": rates.kappa_sq,
            "eta": rates.eta,
            "epsilon": rates.epsilon,
            "tau": tau,
            "t_end": t_end,
        },
    )


def build_thin_inhomogeneous(
    spread: SpreadSpec,
    n: int,
    rates: CouplingRates,
    tau: float,
    t_end: float,
    sample_every: int = 1000,
    eta_mode: str = "uniform",
    rng=None,
) -> Scenario:
    """Transversally inhomogeneous thin sample: n slices, one beam pass.

    Slice couplings come from ``spread`` (their squares sum to
    spread.kappa0_sq exactly); ``rates`` supplies the decay rate and the
    single-pass absorption.  The default gives every slice the same decay
    rate, which keeps the most-squeezed variance independent of the spread
    delta at fixed collective coupling; ``eta_mode="intensity"`` instead
    scales each slice's decay with its local intensity,
    eta_i = eta0 * kappa_i^2 / mean(kappa^2), which shifts the squeezing
    floor upward by roughly delta^2/3 in relative terms.
    """
    if eta_mode not in ("intensity", "uniform"):
        raise InvalidInputError("eta_mode must be 'intensity' or 'uniform'")
    _check_validity(spread.kappa0_sq, tau)
    _check_thin_epsilon(rates.epsilon)
    kappas_sq = spread.slice_kappas_sq(n, rng=rng)
    if eta_mode == "intensity":
        etas = rates.eta * kappas_sq / float(np.mean(kappas_sq))
    else:
        etas = np.full(n, rates.eta)
    state = vacuum_state(standard_labels(n))
    groups = _thin_groups(kappas_sq, etas, rates.epsilon, tau, state.dim, offset=0)
    phase = ProbePhase(duration=t_end, tau=tau, groups=groups)
    return Scenario(
        initial_state=state,
        phases=(phase,),
        observables=("min_eig_var", "min_eig_overlap", "var_P_eff", "var_P"),
        tau=tau,
        sample_every=sample_every,
        meta={
            "scenario": "thin_inhomogeneous",
            "n_slices": n,
            "delta": spread.delta,
            "spread_mode": spread.mode,
            "kappa0_sq": spread.kappa0_sq,
            "slice_kappas_sq": kappas_sq.tolist(),
            "slice_etas": etas.tolist(),
            "eta_mode": eta_mode,
            "epsilon": rates.epsilon,
            "tau": tau,
            "t_end": t_end,
        },
    )


def build_thick(
    slices: SliceConfig,
    tau: float,
    t_end: float,
    sample_every: int = 2000,
) -> Scenario:
    """Optically thick sample: each segment crosses the slices in order.

    The covariance is updated slice by slice as the segment advances; the
    segment is detected only after leaving the last slice.  A single slice
    reproduces the homogeneous scenario exactly.
    """
    _check_validity(float(np.max(slices.kappas_sq)), tau)
    state = vacuum_state(standard_labels(slices.n_slices))
    groups = _thick_groups(slices, tau, state.dim, offset=0)
    phase = ProbePhase(duration=t_end, tau=tau, groups=groups)
    return Scenario(
        initial_state=state,
        phases=(phase,),
        observables=("min_eig_var", "var_P_eff"),
        tau=tau,
        sample_every=sample_every,
        meta={
            "scenario": "thick",
            "n_slices": slices.n_slices,
            "slice_kappas_sq": np.asarray(slices.kappas_sq).tolist(),
            "slice_etas": np.asarray(slices.etas).tolist(),
            "slice_epsilons": np.asarray(slices.epsilons).tolist(),
            "total_absorption": slices.total_absorption(),
            "tau": tau,
            "t_end": t_end,
        },
    )


def build_estimation(
    base,
    est: EstimationParams,
    tau: float,
    t_end: float,
    sample_every: int = 500,
    eta_mode: str = "uniform",
    atoms_per_slice: float | None = None,
    rng=None,
) -> Scenario:
    """Squeeze, rotate by an unknown angle, then probe the angle.

    ``base`` selects the probing configuration: CouplingRates for a single
    homogeneous sample, (SpreadSpec, n, CouplingRates) for a thin
    inhomogeneous sample, or a SliceConfig for a thick stack.  The angle is
    adjoined as a leading variable with prior variance est.var_theta0 and
    mean est.theta_true; probing for t > t2 resumes with the couplings and
    noise floors the squeezing phase reached at t1.
    """
    if est.t2 < est.t1:
        raise InvalidInputError("t2 must not precede t1")
    if t_end <= est.t2:
        raise InvalidInputError("t_end must exceed t2")

    if isinstance(base, CouplingRates):
        _check_validity(base.kappa_sq, tau)
        _check_thin_epsilon(base.epsilon)
        n = 1
        kappas_sq = np.array([base.kappa_sq])
        etas = np.array([base.eta])

        def factory(dim, t_start):
            return _thin_groups(kappas_sq, etas, base.epsilon, tau, dim, 1, t_start)

        base_meta = {"base_scenario": "homogeneous", "kappa_sq": base.kappa_sq,
                     "eta": base.eta, "epsilon": base.epsilon}
    elif isinstance(base, SliceConfig):
        _check_validity(float(np.max(base.kappas_sq)), tau)
        n = base.n_slices
        etas = base.etas.copy()

        def factory(dim, t_start):
            return _thick_groups(base, tau, dim, 1, t_start)

        base_meta = {"base_scenario": "thick", "n_slices": n,
                     "slice_epsilons": base.epsilons.tolist()}
        if atoms_per_slice is None and base.atoms_per_slice:
            atoms_per_slice = base.atoms_per_slice
    else:
        try:
            spread, n, rates = base
        except (TypeError, ValueError):
            raise InvalidInputError(
                "base must be CouplingRates, SliceConfig, or "
                "(SpreadSpec, n, CouplingRates)"
            ) from None
        _check_validity(spread.kappa0_sq, tau)
        _check_thin_epsilon(rates.epsilon)
        kappas_sq = spread.slice_kappas_sq(n, rng=rng)
        if eta_mode == "intensity":
            etas = rates.eta * kappas_sq / float(np.mean(kappas_sq))
        else:
            etas = np.full(n, rates.eta)

        def factory(dim, t_start):
            return _thin_groups(kappas_sq, etas, rates.epsilon, tau, dim, 1, t_start)

        base_meta = {"base_scenario": "thin_inhomogeneous", "n_slices": n,
                     "delta": spread.delta, "spread_mode": spread.mode,
                     "kappa0_sq": spread.kappa0_sq, "eta_mode": eta_mode,
                     "slice_kappas_sq": kappas_sq.tolist(),
                     "slice_etas": etas.tolist(), "epsilon": rates.epsilon}

    # effective decay rates inside the stack, for the lever-arm default
    if est.alphas is not None:
        alphas = np.asarray(est.alphas, dtype=float)
        if alphas.shape != (n,):
            raise InvalidInputError(f"alphas must have one entry per slice ({n})")
    elif est.alpha is not None:
        alphas = np.full(n, float(est.alpha))
    elif atoms_per_slice:
        probe_etas = np.concatenate(
            [g.etas for g in factory(2 * n + 3, 0.0)]
        )
        alphas = np.array(
            [
                rotation_coupling(atoms_per_slice, float(probe_etas[i]), est.t1)
                for i in range(n)
            ]
        )
    else:
        raise InvalidInputError(
            "rotation lever arms undetermined: give alphas/alpha or atoms_per_slice"
        )

    state = vacuum_state(standard_labels(n, theta=True), est.var_theta0)
    mean = state.mean.copy()
    mean[0] = est.theta_true
    state = GaussianState(state.labels, mean, state.cov)
    dim = state.dim
    squeeze = ProbePhase(duration=est.t1, tau=tau, groups=factory(dim, 0.0))
    rotation = RotationPhase(
        duration=est.t2 - est.t1,
        targets=2 + 2 * np.arange(n),
        alphas=alphas,
    )
    probe = ProbePhase(duration=t_end - est.t2, tau=tau, groups=factory(dim, est.t1))
    meta = dict(base_meta)
    meta.update(
        {
            "scenario": "estimation",
            "t1": est.t1,
            "t2": est.t2,
            "t_end": t_end,
            "tau": tau,
            "var_theta0": est.var_theta0,
            "theta_true": est.theta_true,
            "alphas": alphas.tolist(),
        }
    )
    return Scenario(
        initial_state=state,
        phases=(squeeze, rotation, probe),
        observables=("var_theta", "mean_theta", "var_P_eff"),
        tau=tau,
        sample_every=sample_every,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Runner


class _Sampler:
    """Computes the requested observables from the working state."""

    def __init__(self, scenario: Scenario, state: GaussianState):
        self.obs = scenario.observables
        self.atom_slice = state.atom_slice
        self.n_pairs = state.n_pairs
        n = self.n_pairs
        self.p_rows_local = 2 * np.arange(n) + 1
        self.sym = np.full(n, 1.0 / math.sqrt(n))
        self.need_eig = any(
            o in ("min_eig_var", "min_eig_overlap") for o in self.obs
        )
        self.need_vectors = "min_eig_overlap" in self.obs
        if ("var_theta" in self.obs or "mean_theta" in self.obs) and not state.has_theta:
            raise InvalidInputError("theta observables need a theta variable")

    def row(self, cov, mean, kappa_weights) -> tuple:
        block = cov[self.atom_slice, self.atom_slice]
        p = self.p_rows_local
        eig_val = eig_vec = None
        if self.need_eig:
            w, v = sym_eig_all(block, vectors=self.need_vectors)
            i = int(np.argmin(w))
            eig_val = float(w[i]) / 2.0
            if self.need_vectors:
                eig_vec = v[:, i]
        weights = None
        if kappa_weights is not None and len(kappa_weights):
            nrm = float(np.linalg.norm(kappa_weights))
            if nrm > 0:
                weights = kappa_weights / nrm
        out = []
        for o in self.obs:
            if isinstance(o, CollectiveVariable):
                c = o.coefficients
                out.append(float(c @ block @ c) / 2.0)
            elif o == "var_p":
                out.append(float(block[1, 1]) / 2.0)
            elif o == "min_eig_var":
                out.append(eig_val)
            elif o == "min_eig_overlap":
                if weights is None:
                    out.append(float("nan"))
                else:
                    full = np.zeros(2 * self.n_pairs)
                    full[p] = weights
                    out.append(abs(float(eig_vec @ full)))
            elif o == "var_P_eff":
                if weights is None:
                    out.append(float("nan"))
                else:
                    sub = block[np.ix_(p, p)]
                    out.append(float(weights @ sub @ weights) / 2.0)
            elif o == "var_P":
                sub = block[np.ix_(p, p)]
                out.append(float(self.sym @ sub @ self.sym) / 2.0)
            elif o == "var_theta":
                out.append(float(cov[0, 0]) / 2.0)
            elif o == "mean_theta":
                out.append(float(mean[0]))
        return tuple(out)


def _column_names(observables) -> list[str]:
    names = []
    custom = 0
    for o in observables:
        if isinstance(o, CollectiveVariable):
            names.append(f"var_cv{custom}")
            custom += 1
        else:
            names.append(o)
    return names


def run(
    scenario: Scenario, seed: int = 0, record_cov: bool = False
) -> tuple[TimeSeries, TrajectoryRecord]:
    """Execute a scenario; deterministic and bit-reproducible given a seed.

    Samples the configured observables every ``sample_every`` steps,
    including step 0 when the scenario has any steps at all.  The
    covariance stream is outcome independent; only means depend on the
    drawn measurement deviations.
    """
    state = scenario.initial_state
    cov = state.cov.copy()
    mean = state.mean.copy()
    dim = state.dim
    diag = cov.ravel()[:: dim + 1]
    buf = np.empty((dim - 2, dim - 2))
    rng = np.random.default_rng(seed)
    sampler = _Sampler(scenario, state)
    names = _column_names(scenario.observables)
    times: list[float] = []
    rows: list[tuple] = []
    traj = TrajectoryRecord(seed=seed)
    m_times: list[np.ndarray] = []
    m_chis: list[np.ndarray] = []
    m_outs: list[np.ndarray] = []
    se = scenario.sample_every

    def start_kappas():
        for phase in scenario.phases:
            if isinstance(phase, ProbePhase) and phase.groups:
                return np.concatenate([g.kappas0 for g in phase.groups])
        return np.empty(0)

    def sample(t, kappas):
        symmetrize(cov)
        r = sampler.row(cov, mean, kappas if len(kappas) else None)
        times.append(t)
        rows.append(r)
        traj.samples.append((t, mean.copy(), r))
        if record_cov:
            traj.cov_samples.append(cov.copy())

    k = 0
    t = 0.0
    last_kappas = start_kappas()
    if scenario.total_steps > 0:
        sample(0.0, last_kappas)
    for phase in scenario.phases:
        if isinstance(phase, RotationPhase):
            _impulse_inplace(cov, mean, phase.targets, phase.alphas, 0)
            t += phase.duration
            continue
        n_steps = phase.n_steps
        if n_steps == 0:
            t += phase.duration
            continue
        groups_rt = [_GroupRuntime(g, dim) for g in phase.groups]
        chis = rng.normal(0.0, CHI_STD, n_steps) if phase.measure else None
        outs = np.empty(n_steps) if phase.measure else None
        tms = np.empty(n_steps) if phase.measure else None
        for j in range(n_steps):
            for g in groups_rt:
                g.apply(cov, mean, diag)
            if phase.measure:
                _, outcome = _measure_inplace(cov, mean, chis[j], buf)
                outs[j] = outcome
                tms[j] = t + (j + 1) * phase.tau
            else:
                _traceout_inplace(cov, mean)
            k += 1
            if k % se == 0:
                last_kappas = np.concatenate([g.kappas for g in groups_rt])
                sample(t + (j + 1) * phase.tau, last_kappas)
        t += n_steps * phase.tau
        last_kappas = np.concatenate([g.kappas for g in groups_rt])
        if phase.measure:
            m_times.append(tms)
            m_chis.append(chis)
            m_outs.append(outs)
    if m_times:
        traj.measurement_times = np.concatenate(m_times)
        traj.chis = np.concatenate(m_chis)
        traj.outcomes = np.concatenate(m_outs)
    cols = {name: np.array([r[i] for r in rows]) for i, name in enumerate(names)}
    return TimeSeries(times=np.array(times), columns=cols), traj


def tau_convergence(factory, tau: float, column: str, seed: int = 0) -> float:
    """Max relative change of a sampled column when tau is halved.

    ``factory(tau, sample_every)`` must build the scenario; the halved run
    doubles sample_every so both runs sample identical times.
    """
    ts_a, _ = run(factory(tau, 1000), seed=seed)
    ts_b, _ = run(factory(tau / 2.0, 2000), seed=seed)
    a = ts_a.columns[column]
    b = ts_b.columns[column]
    m = min(len(a), len(b))
    denom = np.maximum(np.abs(b[:m]), 1e-300)
    return float(np.max(np.abs(a[:m] - b[:m]) / denom))
