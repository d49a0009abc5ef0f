"""Floquet weak-coupling machinery for periodically driven systems.

The propagator of a time-periodic Hamiltonian factors into a periodic
part and the exponential of an averaged Hamiltonian.  Coupling operators
then decompose over the extended frequency ladder
omega_q = omega_av + q Omega, and the resulting interaction-picture
generator is time independent; its stationary state dressed by the
periodic propagator is the limit cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .baths import BathSpec, spectral_density
from .lindblad import GKLSGenerator, JumpChannel, stationary_state
from .operators import (
    DensityMatrix,
    Operator,
    group_degenerate,
    vec,
    unvec,
)
from .tolerances import LEVEL_MERGE_REL, LEVEL_RESOLVE_REL

__all__ = [
    "FloquetDecomposition",
    "FloquetChannel",
    "LimitCycleReport",
    "floquet_decompose",
    "harmonic_decompose",
    "reconstruction_residual",
    "build_floquet_generator",
    "floquet_heat_currents",
    "limit_cycle_laws",
    "drive_power",
    "ModulatedGapQubit",
    "CircularlyDrivenQubit",
    "ModulatedLadder",
]

_AMP_FLOOR = 1e-12


@dataclass(frozen=True)
class FloquetDecomposition:
    """Propagator of one driving period, split as U(t) = U_p(t) e^{-i H_av t}."""

    tau: float
    h_av: Operator
    times: np.ndarray
    u_grid: np.ndarray   # cumulative propagators U(t_k), shape (N+1, d, d)
    up_grid: np.ndarray  # periodic part U_p(t_k)

    @property
    def big_omega(self) -> float:
        return 2.0 * math.pi / self.tau

    @property
    def dim(self) -> int:
        return self.h_av.dim

    @property
    def monodromy(self) -> Operator:
        return Operator.unitary(self.u_grid[-1])


def _magnus_step(h_of_t, t: float, dt: float) -> np.ndarray:
    """Fourth-order Magnus (two-point Gauss-Legendre) step generator."""
    c = math.sqrt(3.0) / 6.0
    h1 = h_of_t(t + (0.5 - c) * dt)
    h2 = h_of_t(t + (0.5 + c) * dt)
    m1 = h1.mat if isinstance(h1, Operator) else np.asarray(h1, dtype=complex)
    m2 = h2.mat if isinstance(h2, Operator) else np.asarray(h2, dtype=complex)
    omega = -0.5j * dt * (m1 + m2) - (math.sqrt(3.0) / 12.0) * dt * dt * (
        m2 @ m1 - m1 @ m2
    )
    return scipy.linalg.expm(omega)


def floquet_decompose(h_of_t, tau: float, grid_points: int = 400) -> FloquetDecomposition:
    """Split the time-ordered propagator of one period into its periodic
    part and the averaged Hamiltonian.

    The averaged Hamiltonian uses the principal branch of the logarithm
    of the monodromy, folding quasi-energies into (-Omega/2, Omega/2];
    a monodromy eigenvalue at the branch cut (-1) is rejected.
    """
    if tau <= 0:
        raise ValueError("period must be positive")
    if grid_points < 8:
        raise ValueError("need at least 8 grid points per period")
    d = (h_of_t(0.0).mat if isinstance(h_of_t(0.0), Operator) else np.asarray(h_of_t(0.0))).shape[0]
    times = np.linspace(0.0, tau, grid_points + 1)
    u_grid = np.empty((grid_points + 1, d, d), dtype=complex)
    u_grid[0] = np.eye(d)
    for k in range(grid_points):
        step = _magnus_step(h_of_t, times[k], times[k + 1] - times[k])
        u_grid[k + 1] = step @ u_grid[k]
    monodromy = u_grid[-1]
    # unitary monodromy is normal: complex Schur form is diagonal
    tmat, z = scipy.linalg.schur(monodromy, output="complex")
    phases = np.angle(np.diag(tmat))  # in (-pi, pi]
    if np.any(np.abs(np.abs(phases) - math.pi) < 1e-8):
        raise ValueError(
            "monodromy eigenvalue at the log branch cut (-1); shift the driving "
            "phase or the frequency fold before decomposing"
        )
    quasi = -phases / tau  # folded into (-Omega/2, Omega/2]
    h_av = (z * quasi) @ z.conj().T
    h_av = Operator.hermitian((h_av + h_av.conj().T) / 2.0)
    up_grid = np.empty_like(u_grid)
    for k, t in enumerate(times):
        up_grid[k] = u_grid[k] @ (z * np.exp(1j * quasi * t)) @ z.conj().T
    dec = FloquetDecomposition(tau=tau, h_av=h_av, times=times, u_grid=u_grid, up_grid=up_grid)
    resid = np.max(np.abs(monodromy - scipy.linalg.expm(-1j * h_av.mat * tau)))
    if resid > 1e-9:
        raise ValueError(f"averaged Hamiltonian does not reproduce the monodromy: {resid:.3e}")
    edge = max(
        float(np.max(np.abs(up_grid[0] - np.eye(d)))),
        float(np.max(np.abs(up_grid[-1] - np.eye(d)))),
    )
    if edge > 1e-9:
        raise ValueError(f"periodic part fails U_p(0) = U_p(tau) = I: {edge:.3e}")
    return dec


@dataclass(frozen=True)
class FloquetChannel:
    """A jump channel on the extended frequency ladder."""

    bath_label: str
    omega: float       # extended frequency omega_av + q Omega
    omega_av: float    # Bohr frequency of the averaged Hamiltonian
    harmonic: int      # q
    op: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("negative channel rate")
        object.__setattr__(self, "op", np.asarray(self.op, dtype=complex))


def harmonic_decompose(
    dec: FloquetDecomposition,
    s_op: Operator,
    q_max: int = 5,
    bath: BathSpec = None,
) -> list[FloquetChannel]:
    """Fourier decomposition of U^dag(t) S U(t) over the extended
    frequencies, crossed with the Bohr structure of the averaged
    Hamiltonian.

    Rejects when the weight beyond |q| <= q_max exceeds 1e-6 of the total,
    when two channels with different omega_av land on one extended
    frequency (the heat-current weight would be ambiguous), or when the
    bath has a pole at one of the harmonics.
    """
    if bath is None:
        raise TypeError("harmonic_decompose needs a bath")
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    if not s_op.is_hermitian():
        raise ValueError("coupling operators must be hermitian")
    d = dec.dim
    n = len(dec.times) - 1  # periodic samples, endpoint dropped
    evals, v = np.linalg.eigh(dec.h_av.mat)
    # \tilde S(t_k) = U_p^dag S U_p in the averaged-Hamiltonian eigenbasis
    s_t = np.empty((n, d, d), dtype=complex)
    for k in range(n):
        up = dec.up_grid[k]
        s_t[k] = v.conj().T @ up.conj().T @ s_op.mat @ up @ v
    # DFT over the period: s_t = sum_q c_q exp(-i q Omega t), so the ifft
    # bin m holds c_q with q = m folded to (-n/2, n/2]
    coeffs = np.fft.ifft(s_t, axis=0)
    q_of_index = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    total_w = float(np.sum(np.abs(coeffs) ** 2))
    kept_w = float(np.sum(np.abs(coeffs[np.abs(q_of_index) <= q_max]) ** 2))
    tail = (total_w - kept_w) / max(total_w, 1e-300)
    if tail > 1e-6:
        raise ValueError(
            f"harmonics beyond |q| = {q_max} carry weight {tail:.3e} > 1e-6; "
            f"raise q_max"
        )

    groups = group_degenerate(evals)
    centers = [float(np.mean(evals[g])) for g in groups]
    spread = max(float(evals.max() - evals.min()), dec.big_omega)
    merge_tol = LEVEL_MERGE_REL * spread
    resolve_tol = LEVEL_RESOLVE_REL * spread

    raw: list[tuple[float, float, int, np.ndarray]] = []
    for idx in range(n):
        q = int(q_of_index[idx])
        if abs(q) > q_max:
            continue
        c_q = coeffs[idx]
        if np.max(np.abs(c_q)) <= _AMP_FLOOR:
            continue
        for gi, g_row in enumerate(groups):
            for gj, g_col in enumerate(groups):
                block = np.zeros((d, d), dtype=complex)
                for r in g_row:
                    for cc in g_col:
                        block[r, cc] = c_q[r, cc]
                if np.max(np.abs(block)) <= _AMP_FLOOR:
                    continue
                omega_av = centers[gj] - centers[gi]
                omega_ext = omega_av + q * dec.big_omega
                raw.append((omega_ext, omega_av, q, block))

    if not raw:
        return []
    # bin extended frequencies; distinct omega_av in one bin is ambiguous
    ext = np.array([r[0] for r in raw])
    bins = group_degenerate(ext, tol=merge_tol)
    centers_ext = [float(np.mean(ext[b])) for b in bins]
    for i in range(len(centers_ext)):
        for j in range(i + 1, len(centers_ext)):
            sep = abs(centers_ext[i] - centers_ext[j])
            if merge_tol < sep < resolve_tol:
                raise ValueError(
                    f"extended frequencies {centers_ext[i]:.12g} and "
                    f"{centers_ext[j]:.12g} are unresolved for bath {bath.label!r}"
                )
    channels = []
    for b, center in zip(bins, centers_ext):
        avs = {round(raw[k][1], 9) for k in b}
        if len(avs) > 1:
            raise ValueError(
                f"extended frequency {center:.12g} mixes averaged-Hamiltonian gaps "
                f"{sorted(avs)}; the heat-current weight is ambiguous"
            )
        op = np.zeros((d, d), dtype=complex)
        q_rep = raw[b[0]][2]
        for k in b:
            op += raw[k][3]
        try:
            rate = spectral_density(center, bath)
        except ValueError as exc:
            raise ValueError(
                f"bath {bath.label!r} rejects harmonic q = {q_rep} at "
                f"omega = {center:.12g}: {exc}"
            ) from exc
        if rate <= 0.0:
            continue
        # rotate back to the computational basis
        op = v @ op @ v.conj().T
        channels.append(
            FloquetChannel(bath.label, center, raw[b[0]][1], q_rep, op, rate)
        )
    return channels


def reconstruction_residual(
    dec: FloquetDecomposition, s_op: Operator, channels: list[FloquetChannel]
) -> float:
    """Max deviation of sum_q e^{-i omega_q t} S(omega_q) from
    U^dag(t) S U(t) on the decomposition grid (rate-weight free check, so
    channels must be rebuilt with a unit-rate bath to include every
    line)."""
    worst = 0.0
    for k, t in enumerate(dec.times[:-1]):
        u = dec.u_grid[k]
        target = u.conj().T @ s_op.mat @ u
        synth = np.zeros_like(target)
        for ch in channels:
            synth += np.exp(-1j * ch.omega * t) * ch.op
        worst = max(worst, float(np.max(np.abs(synth - target))))
    return worst


def build_floquet_generator(
    channels: list[FloquetChannel],
    h_av: Operator,
    baths: dict[str, BathSpec],
) -> GKLSGenerator:
    """Time-independent interaction-picture generator from the harmonic
    channels.  The coherent part lives in the frame transformation, so the
    Liouvillian is purely dissipative; the averaged Hamiltonian is kept
    for energy bookkeeping."""
    jumps = [
        JumpChannel(ch.bath_label, ch.omega, ch.op, ch.rate) for ch in channels
    ]
    return GKLSGenerator(
        h_av, jumps, baths=baths, include_hamiltonian=False, davies_built=False
    )


def floquet_heat_currents(
    gen: GKLSGenerator,
    channels: list[FloquetChannel],
    rho0: DensityMatrix,
) -> dict[str, float]:
    """Per-bath heat currents at the interaction-picture stationary state:
    each channel contributes its energy quantum omega_q at its net jump
    rate, written as (omega_q / omega_av) Tr(H_av L_ch rho).

    Channels with omega_av = 0 but omega_q != 0 are rejected: the weight
    is undefined for them.  (omega_av = omega_q = 0 channels are pure
    dephasing and carry no heat.)
    """
    from .operators import dissipator_superop

    out: dict[str, float] = {label: 0.0 for label in gen.bath_labels}
    for ch in channels:
        if ch.rate <= 0.0:
            continue
        if abs(ch.omega_av) < 1e-12:
            if abs(ch.omega) < 1e-12:
                continue  # zero-frequency dephasing line, no energy quantum
            raise ValueError(
                f"channel at omega = {ch.omega:.12g} has omega_av = 0; its "
                f"heat-current weight is undefined"
            )
        dl = ch.rate * dissipator_superop(ch.op).mat
        flow = float(np.real(np.trace(gen.h.mat @ unvec(dl @ vec(rho0.mat), gen.dim))))
        out[ch.bath_label] += (ch.omega / ch.omega_av) * flow
    return out


@dataclass(frozen=True)
class LimitCycleReport:
    currents: dict[str, float]
    power: float                # net power delivered to the drive
    first_law_residual: float   # |power - sum of currents|
    second_law_value: float     # sum_j J_j / T_j, non-positive in a limit cycle
    regime: str                 # engine | dissipator | refrigerator
    stationary: DensityMatrix


def drive_power(
    gen: GKLSGenerator,
    channels: list[FloquetChannel],
    rho0: DensityMatrix,
) -> float:
    """Net power delivered to the driving field at the state rho0.

    Every jump of the channel at omega_q = omega_av + q Omega moves the
    system by omega_av and the bath by omega_q; the drive supplies the
    difference q Omega.  Summing the drive quanta over channels at their
    net jump rates gives the output power.
    """
    from .operators import dissipator_superop

    total = 0.0
    for ch in channels:
        if ch.rate <= 0.0 or ch.harmonic == 0:
            continue
        if abs(ch.omega_av) < 1e-12:
            raise ValueError(
                f"channel at omega = {ch.omega:.12g} has omega_av = 0; drive "
                f"bookkeeping is undefined"
            )
        drive_quantum = ch.omega - ch.omega_av  # q Omega
        dl = ch.rate * dissipator_superop(ch.op).mat
        # Tr(H_av L_c rho) = -omega_av R_c with R_c the net jump rate, so
        # the drive gives q Omega R_c and receives the negative of it
        flow = float(np.real(np.trace(gen.h.mat @ unvec(dl @ vec(rho0.mat), gen.dim))))
        total += (drive_quantum / ch.omega_av) * flow
    return total


def limit_cycle_laws(
    gen: GKLSGenerator,
    channels: list[FloquetChannel],
    cold_label: str = "cold",
) -> LimitCycleReport:
    """Evaluate the limit-cycle laws at the interaction-picture stationary
    state.

    Power and per-bath heat currents come from two separate
    channel-resolved ledgers (drive quanta against bath quanta); their
    mismatch equals the residual internal-energy drift of the computed
    stationary state, so the first-law number is a consistency check of
    the whole stack rather than an identity.
    """
    rho0 = stationary_state(gen)
    currents = floquet_heat_currents(gen, channels, rho0)
    power = drive_power(gen, channels, rho0)
    total = sum(currents.values())
    second = 0.0
    for label, j in currents.items():
        bath = gen.baths[label]
        if not math.isinf(bath.temperature):
            second += j / bath.temperature
    scale = max(max(abs(v) for v in currents.values()), abs(power), 1e-30)
    if currents.get(cold_label, 0.0) > 1e-12 * scale:
        regime = "refrigerator"
    elif power > 1e-12 * scale:
        regime = "engine"
    else:
        regime = "dissipator"
    return LimitCycleReport(
        currents=currents,
        power=power,
        first_law_residual=abs(power - total),
        second_law_value=second,
        regime=regime,
        stationary=rho0,
    )


@dataclass(frozen=True)
class ModulatedGapQubit:
    """Qubit with a sinusoidally modulated gap: H(t) = (1/2)(omega0 +
    amplitude sin(Omega t)) sigma_z.  The drive commutes with itself at
    all times, so the harmonic weights are Bessel functions and no
    zero-gap channels appear."""

    omega0: float
    amplitude: float
    big_omega: float

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.big_omega

    def __call__(self, t: float) -> Operator:
        from .operators import PAULI_Z

        w = self.omega0 + self.amplitude * math.sin(self.big_omega * t)
        return Operator.hermitian(0.5 * w * PAULI_Z)

    def derivative(self, t: float) -> Operator:
        from .operators import PAULI_Z

        dw = self.amplitude * self.big_omega * math.cos(self.big_omega * t)
        return Operator.hermitian(0.5 * dw * PAULI_Z)


@dataclass(frozen=True)
class CircularlyDrivenQubit:
    """H(t) = (1/2) omega0 sigma_z + (1/2) eps (sigma_x cos Omega t +
    sigma_y sin Omega t); exactly solvable in the rotating frame."""

    omega0: float
    eps: float
    big_omega: float

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.big_omega

    def __call__(self, t: float) -> Operator:
        from .operators import PAULI_X, PAULI_Y, PAULI_Z

        wt = self.big_omega * t
        m = 0.5 * self.omega0 * PAULI_Z + 0.5 * self.eps * (
            math.cos(wt) * PAULI_X + math.sin(wt) * PAULI_Y
        )
        return Operator.hermitian(m)

    def rotating_gap(self) -> float:
        return math.hypot(self.omega0 - self.big_omega, self.eps)


@dataclass(frozen=True)
class ModulatedLadder:
    """Driven three-level ladder with a commuting modulation:
    H(t) = diag(0, omega1, omega1 + omega2) + amplitude sin(Omega t) N
    with N = diag(0, 1, 2)."""

    omega1: float
    omega2: float
    amplitude: float
    big_omega: float

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.big_omega

    def __call__(self, t: float) -> Operator:
        base = np.diag([0.0, self.omega1, self.omega1 + self.omega2])
        num = np.diag([0.0, 1.0, 2.0])
        return Operator.hermitian(
            base + self.amplitude * math.sin(self.big_omega * t) * num
        )

    def derivative(self, t: float) -> Operator:
        num = np.diag([0.0, 1.0, 2.0])
        dw = self.amplitude * self.big_omega * math.cos(self.big_omega * t)
        return Operator.hermitian(dw * num)
