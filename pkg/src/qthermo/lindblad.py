"""Markovian generators in GKLS form.

Direct construction from jump channels, the weak-coupling (secular)
construction from a Hamiltonian, hermitian coupling operators and bath
rate tables, propagation, thermodynamic ledgers, and the audits used by
the law-certification suite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .baths import BathSpec, spectral_density
from .operators import (
    DensityMatrix,
    Operator,
    Superoperator,
    dissipator_superop,
    eig_hermitian,
    group_degenerate,
    hamiltonian_superop,
    matexp,
    vec,
    unvec,
)
from .states import gibbs_state, von_neumann_entropy
from .tolerances import ALGEBRAIC, LEVEL_MERGE_REL, LEVEL_RESOLVE_REL

__all__ = [
    "JumpChannel",
    "GKLSGenerator",
    "ThermoLedger",
    "BohrResolutionError",
    "build_davies",
    "liouvillian",
    "propagate",
    "trajectory",
    "adiabatic_propagate",
    "entropy_production_rate",
    "stationary_state",
    "heat_currents",
    "davies_audit",
]

_RATE_FLOOR = 1e-300


class BohrResolutionError(ValueError):
    """Raised when two distinct Bohr gaps of one coupling family are too
    close to separate but too far to merge (secular approximation fails)."""


@dataclass(frozen=True)
class JumpChannel:
    """One secular jump channel: a Bohr-frequency eigenoperator of the
    Hamiltonian with its bath-supplied rate."""

    bath_label: str
    bohr_frequency: float
    op: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"negative channel rate {self.rate}")
        object.__setattr__(self, "op", np.asarray(self.op, dtype=complex))


class GKLSGenerator:
    """Hamiltonian plus weighted jump channels; exposes the Liouvillian.

    ``include_hamiltonian`` is switched off for interaction-picture
    generators whose coherent part lives in the frame transformation.
    """

    def __init__(
        self,
        h: Operator,
        channels: list[JumpChannel],
        baths: dict[str, BathSpec] | None = None,
        include_hamiltonian: bool = True,
        davies_built: bool = False,
        coherent_shift: Operator | None = None,
    ):
        if not h.is_hermitian():
            raise ValueError("generator Hamiltonian must be hermitian")
        self.h = h
        self.channels = list(channels)
        self.baths = dict(baths or {})
        self.include_hamiltonian = include_hamiltonian
        self.davies_built = davies_built
        # renormalisation correction entering the commutator only; all
        # energy bookkeeping stays with the channel Hamiltonian
        self.coherent_shift = coherent_shift
        self._liouvillian: Superoperator | None = None
        self._bath_parts: dict[str, Superoperator] = {}

    @property
    def dim(self) -> int:
        return self.h.dim

    @property
    def bath_labels(self) -> list[str]:
        seen = []
        for ch in self.channels:
            if ch.bath_label not in seen:
                seen.append(ch.bath_label)
        return seen

    def dissipator(self, label: str | None = None) -> Superoperator:
        """Dissipative part, optionally restricted to one bath."""
        key = label if label is not None else "__all__"
        if key not in self._bath_parts:
            d = self.dim
            m = np.zeros((d * d, d * d), dtype=complex)
            for ch in self.channels:
                if label is not None and ch.bath_label != label:
                    continue
                if ch.rate <= _RATE_FLOOR:
                    continue
                m += ch.rate * dissipator_superop(ch.op).mat
            self._bath_parts[key] = Superoperator(m)
        return self._bath_parts[key]

    def liouvillian(self) -> Superoperator:
        if self._liouvillian is None:
            m = self.dissipator().mat.copy()
            if self.include_hamiltonian:
                h_coh = self.h.mat
                if self.coherent_shift is not None:
                    h_coh = h_coh + self.coherent_shift.mat
                m += hamiltonian_superop(Operator.hermitian(h_coh)).mat
            self._liouvillian = Superoperator(m)
        return self._liouvillian

    def commutant_dimension(self) -> int:
        """Dimension of the joint commutant of all channel operators and
        their adjoints; 1 means only scalars commute (relaxation to a
        unique state is then guaranteed)."""
        d = self.dim
        eye = np.eye(d)
        rows = []
        ops = []
        for ch in self.channels:
            if ch.rate > _RATE_FLOOR:
                ops.extend([ch.op, ch.op.conj().T])
        if not ops:
            return d * d
        for a in ops:
            rows.append(np.kron(eye, a) - np.kron(a.T, eye))
        stack = np.vstack(rows)
        svals = np.linalg.svd(stack, compute_uv=False)
        scale = svals[0] if svals.size and svals[0] > 0 else 1.0
        return int(np.sum(svals <= 1e-10 * scale))

    def has_unique_stationary(self) -> bool:
        return self.commutant_dimension() == 1


def liouvillian(gen: GKLSGenerator) -> Superoperator:
    """Matrix form of the generator acting on column-stacked operators."""
    return gen.liouvillian()


def _coupling_channels(
    h_evals: np.ndarray,
    basis: np.ndarray,
    s_op: Operator,
    bath: BathSpec,
) -> list[JumpChannel]:
    """Secular decomposition of one hermitian coupling against one bath."""
    if not s_op.is_hermitian():
        raise ValueError("coupling operators must be hermitian")
    s_e = basis.conj().T @ s_op.mat @ basis
    groups = group_degenerate(h_evals)
    centers = [float(np.mean(h_evals[g])) for g in groups]
    spread = max(float(h_evals.max() - h_evals.min()), 1.0)
    merge_tol = LEVEL_MERGE_REL * spread
    resolve_tol = LEVEL_RESOLVE_REL * spread
    d = len(h_evals)

    # collect gap -> eigenoperator, only over nonzero blocks
    raw: list[tuple[float, np.ndarray]] = []
    for gi, g_from in enumerate(groups):
        for gj, g_to in enumerate(groups):
            block = np.zeros((d, d), dtype=complex)
            for m in g_from:
                for n in g_to:
                    block[n, m] = s_e[n, m]
            if np.max(np.abs(block)) <= 1e-14 * max(1.0, np.max(np.abs(s_e))):
                continue
            # S(omega) collects |n><m| with omega = E_m - E_n
            raw.append((centers[gi] - centers[gj], block))

    # bin gaps; reject unresolved near-degeneracies
    gaps = np.array([w for w, _ in raw])
    bins = group_degenerate(gaps, tol=merge_tol)
    bin_centers = [float(np.mean(gaps[b])) for b in bins]
    for i in range(len(bin_centers)):
        for j in range(i + 1, len(bin_centers)):
            sep = abs(bin_centers[i] - bin_centers[j])
            if merge_tol < sep < resolve_tol:
                raise BohrResolutionError(
                    f"Bohr gaps {bin_centers[i]:.12g} and {bin_centers[j]:.12g} of "
                    f"coupling to bath {bath.label!r} differ by {sep:.3e}, inside the "
                    f"unresolved band ({merge_tol:.1e}, {resolve_tol:.1e})"
                )

    channels = []
    for b, center in zip(bins, bin_centers):
        op = np.zeros((d, d), dtype=complex)
        for k in b:
            op += raw[k][1]
        rate = spectral_density(center, bath)
        if rate <= _RATE_FLOOR:
            continue
        # rotate the eigenbasis block back to the computational basis
        op = basis @ op @ basis.conj().T
        channels.append(JumpChannel(bath.label, center, op, rate))
    return channels


def build_davies(
    h: Operator,
    couplings: list[tuple[Operator, BathSpec]],
    lamb_shift: Operator | None = None,
) -> GKLSGenerator:
    """Weak-coupling generator: channels enumerate the Bohr frequencies of
    H for each hermitian coupling, with rates drawn from the bath's
    spectral function.  Detailed balance of the rates, and with it Gibbs
    stationarity at a common bath temperature, hold by construction.

    ``lamb_shift`` adds a hermitian correction commuting with H to the
    coherent part only (the renormalisation hook); it moves no
    populations, so every law check is unaffected.
    """
    h_evals, v = eig_hermitian(h)
    channels = []
    baths = {}
    for s_op, bath in couplings:
        if s_op.dim != h.dim:
            raise ValueError("coupling dimension does not match the Hamiltonian")
        if bath.label in baths and baths[bath.label] != bath:
            raise ValueError(f"two different baths share the label {bath.label!r}")
        baths[bath.label] = bath
        channels.extend(_coupling_channels(h_evals, v.mat, s_op, bath))
    if lamb_shift is not None:
        if not lamb_shift.is_hermitian():
            raise ValueError("Lamb-shift correction must be hermitian")
        comm = h.mat @ lamb_shift.mat - lamb_shift.mat @ h.mat
        scale = max(1.0, float(np.max(np.abs(h.mat))))
        if np.max(np.abs(comm)) > ALGEBRAIC * scale:
            raise ValueError("Lamb-shift correction must commute with H")
    return GKLSGenerator(h, channels, baths=baths, davies_built=True,
                         coherent_shift=lamb_shift)


def propagate(gen: GKLSGenerator, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """exp(L t) applied to the state."""
    if t < 0:
        raise ValueError("propagation time must be >= 0")
    prop = matexp(gen.liouvillian(), t)
    return prop.apply(rho0)


def heat_currents(gen: GKLSGenerator, rho: DensityMatrix) -> dict[str, float]:
    """Per-bath currents J_k = Tr(H L_k rho); positive means heat flowing
    from bath k into the system."""
    out = {}
    for label in gen.bath_labels:
        drho = gen.dissipator(label).apply_matrix(rho.mat)
        out[label] = float(np.real(np.trace(gen.h.mat @ drho)))
    return out


def _clipped_log(rho_mat: np.ndarray, clip: float = 1e-14) -> np.ndarray:
    evals, v = np.linalg.eigh((rho_mat + rho_mat.conj().T) / 2.0)
    evals = np.clip(evals, clip, None)
    return (v * np.log(evals)) @ v.conj().T


def entropy_production_rate(gen: GKLSGenerator, rho: DensityMatrix) -> float:
    """Sum over baths of -Tr[L_k rho (ln rho - ln rho_k_st)], the
    non-negative dynamical entropy production.  Each bath's reference is
    its own Gibbs state of the generator Hamiltonian (uniform for a
    beta = 0 bath)."""
    log_rho = _clipped_log(rho.mat)
    total = 0.0
    for label in gen.bath_labels:
        bath = gen.baths.get(label)
        if bath is None:
            raise ValueError(f"no bath registered under label {label!r}")
        ref = gibbs_state(gen.h, bath.beta)
        log_ref = _clipped_log(ref.mat)
        drho = gen.dissipator(label).apply_matrix(rho.mat)
        total += -float(np.real(np.trace(drho @ (log_rho - log_ref))))
    return total


def stationary_state(gen: GKLSGenerator) -> DensityMatrix:
    """The unique null eigenvector of the Liouvillian, normalised to a
    state.  Rejects degenerate null spaces."""
    lmat = gen.liouvillian().mat
    evals, evecs = scipy.linalg.eig(lmat)
    scale = max(1.0, float(np.linalg.norm(lmat)))
    null_tol = 1e-10 * scale
    null_idx = np.where(np.abs(evals) <= null_tol)[0]
    if len(null_idx) == 0:
        null_idx = np.array([int(np.argmin(np.abs(evals)))])
    if len(null_idx) > 1:
        raise ValueError(
            f"stationary state not unique: null space dimension {len(null_idx)}"
        )
    v = evecs[:, null_idx[0]]
    m = unvec(v, gen.dim)
    m = (m + m.conj().T) / 2.0
    tr = float(np.real(np.trace(m)))
    if abs(tr) < 1e-12:
        raise ValueError("null eigenvector is traceless; no stationary state")
    m = m / tr
    evals_m = np.linalg.eigvalsh(m)
    if evals_m[0] < -100 * ALGEBRAIC:
        raise ValueError("null eigenvector is not a positive state")
    m = _project_to_state(m)
    rho = DensityMatrix(m)
    resid = float(np.max(np.abs(gen.liouvillian().apply_matrix(rho.mat))))
    if resid > 1e-10 * scale:
        raise ValueError(f"stationary residual too large: {resid:.3e}")
    return rho


def _project_to_state(m: np.ndarray) -> np.ndarray:
    """Clip eigenvalue dust below zero and renormalise; used only on
    vectors already known to be states up to roundoff."""
    evals, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    evals = np.clip(evals, 0.0, None)
    evals = evals / evals.sum()
    return (v * evals) @ v.conj().T


@dataclass
class ThermoLedger:
    """Time series of the thermodynamic bookkeeping along a trajectory."""

    times: np.ndarray
    energy: np.ndarray
    power: np.ndarray
    entropy: np.ndarray
    entropy_production: np.ndarray
    currents: dict[str, np.ndarray]
    states: list[DensityMatrix] = field(default_factory=list)

    @property
    def bath_labels(self) -> list[str]:
        return list(self.currents)

    def total_current(self) -> np.ndarray:
        if not self.currents:
            return np.zeros_like(self.times)
        return np.sum(list(self.currents.values()), axis=0)

    def first_law_residual(self) -> float:
        """Max |dE/dt - (sum_k J_k - P)| over interior grid points.

        dE/dt comes from a fourth-order central stencil on uniform grids
        (second-order otherwise), so the reported number reflects the
        dynamics rather than differentiation error."""
        if len(self.times) < 3:
            return 0.0
        t = self.times
        rhs = self.total_current() - self.power
        diffs = np.diff(t)
        uniform = np.allclose(diffs, diffs[0], rtol=1e-9, atol=0.0)
        if uniform and len(t) >= 5:
            h = diffs[0]
            e = self.energy
            de = (-e[4:] + 8 * e[3:-1] - 8 * e[1:-3] + e[:-4]) / (12 * h)
            return float(np.max(np.abs(de - rhs[2:-2])))
        de = np.gradient(self.energy, t)
        return float(np.max(np.abs(de[1:-1] - rhs[1:-1])))

    def current_scale(self) -> float:
        vals = [np.max(np.abs(v)) for v in self.currents.values()]
        vals.append(float(np.max(np.abs(self.power))))
        return max(max(vals) if vals else 0.0, 1e-30)

    def to_csv(self) -> str:
        cols = ["t", "E", "P", "S_vn", "sigma"] + [f"J_{k}" for k in self.currents]
        lines = [",".join(cols)]
        for i in range(len(self.times)):
            row = [
                self.times[i],
                self.energy[i],
                self.power[i],
                self.entropy[i],
                self.entropy_production[i],
            ] + [self.currents[k][i] for k in self.currents]
            lines.append(",".join(format(x, ".12g") for x in row))
        return "\n".join(lines) + "\n"


def trajectory(
    gen: GKLSGenerator,
    rho0: DensityMatrix,
    grid,
    keep_states: bool = False,
) -> ThermoLedger:
    """Propagate under a static generator, recording the ledger on the
    grid.  The Hamiltonian is constant so the power column is zero."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1:
        raise ValueError("grid must be a 1d array of times")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be strictly increasing and non-negative")
    lmat = gen.liouvillian().mat
    n = len(grid)
    energy = np.zeros(n)
    entropy = np.zeros(n)
    sigma = np.zeros(n)
    currents = {k: np.zeros(n) for k in gen.bath_labels}
    states = []
    v = vec(rho0.mat)
    prev_t = 0.0
    rho = rho0
    step_cache: dict[float, np.ndarray] = {}
    for i, t in enumerate(grid):
        dt = t - prev_t
        if dt > 0:
            if dt not in step_cache:
                step_cache[dt] = scipy.linalg.expm(lmat * dt)
            v = step_cache[dt] @ v
        prev_t = t
        m = unvec(v, gen.dim)
        rho = DensityMatrix((m + m.conj().T) / 2.0)
        energy[i] = float(np.real(np.trace(rho.mat @ gen.h.mat)))
        entropy[i] = von_neumann_entropy(rho)
        sigma[i] = entropy_production_rate(gen, rho)
        for k, val in heat_currents(gen, rho).items():
            currents[k][i] = val
        if keep_states:
            states.append(rho)
    return ThermoLedger(
        times=grid,
        energy=energy,
        power=np.zeros(n),
        entropy=entropy,
        entropy_production=sigma,
        currents=currents,
        states=states,
    )


def _max_bohr_frequency(h: Operator) -> float:
    evals = np.linalg.eigvalsh(h.mat)
    return float(evals.max() - evals.min())


def adiabatic_propagate(
    h_of_t,
    couplings: list[tuple[Operator, BathSpec]],
    rho0: DensityMatrix,
    grid,
    dh_dt=None,
    keep_states: bool = False,
    substeps: int = 1,
) -> ThermoLedger:
    """Slowly driven dynamics: the weak-coupling generator is rebuilt from
    the instantaneous Hamiltonian at every step and each step advances
    with its exponential.

    Steps longer than a tenth of the fastest Bohr period are refined
    (with a warning) so the instantaneous-generator picture stays inside
    its window of validity.  Power is -Tr(rho dH/dt), from the supplied
    derivative or a centred difference of the schedule.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid must contain at least two times")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    def deriv(t: float) -> np.ndarray:
        if dh_dt is not None:
            d = dh_dt(t)
            return d.mat if isinstance(d, Operator) else np.asarray(d, dtype=complex)
        eps = max(1e-7, 1e-7 * abs(t))
        hi = h_of_t(t + eps).mat
        lo = h_of_t(t - eps).mat if t - eps >= grid[0] else h_of_t(t).mat
        span = 2 * eps if t - eps >= grid[0] else eps
        return (hi - lo) / span

    n = len(grid)
    energy = np.zeros(n)
    power = np.zeros(n)
    entropy = np.zeros(n)
    sigma = np.zeros(n)
    labels = [bath.label for _, bath in couplings]
    currents = {k: np.zeros(n) for k in labels}
    states = []

    warned = False
    rho = rho0

    def record(i: int, gen: GKLSGenerator, t: float):
        energy[i] = float(np.real(np.trace(rho.mat @ gen.h.mat)))
        power[i] = -float(np.real(np.trace(rho.mat @ deriv(t))))
        entropy[i] = von_neumann_entropy(rho)
        if gen.channels:
            sigma[i] = entropy_production_rate(gen, rho)
            for k, val in heat_currents(gen, rho).items():
                currents[k][i] = val
        if keep_states:
            states.append(rho)

    gen0 = build_davies(h_of_t(grid[0]), couplings)
    record(0, gen0, grid[0])
    for i in range(1, n):
        t_a, t_b = grid[i - 1], grid[i]
        dt = t_b - t_a
        h_mid = h_of_t(0.5 * (t_a + t_b))
        omega_max = _max_bohr_frequency(h_mid)
        dt_cap = (2 * math.pi / omega_max) / 10.0 if omega_max > 0 else dt
        n_sub = max(max(1, substeps), int(math.ceil(dt / dt_cap)))
        if n_sub > max(1, substeps) and not warned:
            warnings.warn(
                f"adiabatic step {dt:.3g} exceeds a tenth of the Bohr period; "
                f"refining internally",
                stacklevel=2,
            )
            warned = True
        sub = np.linspace(t_a, t_b, n_sub + 1)
        for j in range(n_sub):
            tm = 0.5 * (sub[j] + sub[j + 1])
            gen = build_davies(h_of_t(tm), couplings)
            m = scipy.linalg.expm(gen.liouvillian().mat * (sub[j + 1] - sub[j]))
            out = unvec(m @ vec(rho.mat), rho.dim)
            rho = DensityMatrix((out + out.conj().T) / 2.0)
        record(i, build_davies(h_of_t(t_b), couplings), t_b)
    return ThermoLedger(
        times=grid,
        energy=energy,
        power=power,
        entropy=entropy,
        entropy_production=sigma,
        currents=currents,
        states=states,
    )


def davies_audit(gen: GKLSGenerator, times=(0.1, 1.0)) -> dict[str, float]:
    """Numerical residuals of the structural properties of a
    weak-coupling generator; all should sit at roundoff.

    Returns a dict with keys:
      cp_min_eig            -- min Choi eigenvalue of exp(L t) over times
      trace_drift           -- trace-preservation residual of exp(L t)
      hamiltonian_commute   -- |[H-part, dissipator]| as superoperators
      pop_coherence_mix     -- population block coupling to coherences
      gibbs_residual        -- |L rho_beta| for a common-temperature bath set
      detailed_balance      -- worst rate-ratio deviation from exp(-beta w)
    """
    from .operators import cp_check

    out: dict[str, float] = {}
    lmat = gen.liouvillian()
    min_eig = math.inf
    drift = 0.0
    for t in times:
        prop = matexp(lmat, t)
        _, me = cp_check(prop)
        min_eig = min(min_eig, me)
        drift = max(drift, prop.trace_preservation_residual())
    out["cp_min_eig"] = min_eig
    out["trace_drift"] = drift

    hpart = hamiltonian_superop(gen.h).mat
    dpart = gen.dissipator().mat
    comm = hpart @ dpart - dpart @ hpart
    scale = max(1.0, float(np.max(np.abs(hpart))) * float(np.max(np.abs(dpart))))
    out["hamiltonian_commute"] = float(np.max(np.abs(comm))) / scale

    # population block decoupling, in the H eigenbasis
    evals, v = eig_hermitian(gen.h)
    d = gen.dim
    basis_change = np.kron(v.mat.conj(), v.mat)  # vec(V^dag X V) = (V^T kron V^dag) vec X
    l_in_basis = basis_change.conj().T @ gen.dissipator().mat @ basis_change
    pop_idx = [i * d + i for i in range(d)]
    coh_idx = [i * d + j for j in range(d) for i in range(d) if i != j]
    mix = 0.0
    groups = group_degenerate(evals)
    if all(len(g) == 1 for g in groups):
        block = l_in_basis[np.ix_(pop_idx, coh_idx)]
        mix = float(np.max(np.abs(block))) if block.size else 0.0
    out["pop_coherence_mix"] = mix

    betas = {b.beta for b in gen.baths.values()}
    if len(betas) == 1:
        beta = betas.pop()
        rho_b = gibbs_state(gen.h, beta)
        out["gibbs_residual"] = float(
            np.max(np.abs(gen.liouvillian().apply_matrix(rho_b.mat)))
        )
    else:
        out["gibbs_residual"] = math.nan

    worst = 0.0
    for ch in gen.channels:
        if ch.bohr_frequency <= 0:
            continue
        partner = [
            c
            for c in gen.channels
            if c.bath_label == ch.bath_label
            and abs(c.bohr_frequency + ch.bohr_frequency) < 1e-9
        ]
        if not partner:
            continue
        bath = gen.baths[ch.bath_label]
        if bath.beta == math.inf:
            continue
        expected = math.exp(-bath.beta * ch.bohr_frequency) if bath.beta > 0 else 1.0
        got = partner[0].rate / ch.rate
        worst = max(worst, abs(got - expected) / max(expected, 1e-30))
    out["detailed_balance"] = worst
    return out
