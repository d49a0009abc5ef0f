"""Quantum machine models.

Reciprocating Otto engines and refrigerators assembled from stroke
propagators, limit-cycle analysis, power optimisation, the sudden-limit
Trotter comparison, quantum-friction diagnostics, and the continuous
three-bath machine (hot/cold/work filter qubits with a trilinear
resonant interaction) used for absorption refrigeration and third-law
sweeps.

Sign conventions, fixed package-wide: W > 0 is net work extracted from
the working medium per cycle; Q_k > 0 is heat flowing from bath k into
the medium.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from .baths import BathSpec
from .lindblad import (
    BohrResolutionError,
    GKLSGenerator,
    build_davies,
    heat_currents,
    stationary_state,
)
from .operators import (
    DensityMatrix,
    Operator,
    Superoperator,
    cp_check,
    eig_hermitian,
    matexp,
    unitary_superop,
    unvec,
)
from .states import relative_entropy, shannon_entropy_in_basis, von_neumann_entropy
from .tolerances import DYNAMICAL

__all__ = [
    "QubitMedium",
    "OscillatorMedium",
    "StrokeSpec",
    "StrokeOp",
    "CycleSpec",
    "CycleReport",
    "TricycleSpec",
    "compose_cycle",
    "find_limit_cycle",
    "run_otto",
    "quantum_friction",
    "optimize_power",
    "sudden_limit_check",
    "build_tricycle",
    "tricycle_steady",
    "third_law_sweep",
    "TricycleSteady",
    "SweepRow",
]

_PROTOCOLS = ("adiabatic", "linear-ramp", "sudden")


@dataclass(frozen=True)
class QubitMedium:
    """Spin working medium H(omega) = (omega/2) sigma_z + (j/2) sigma_x.

    A nonzero transverse term makes the eigenbasis omega-dependent, which
    is what generates coherence (and friction) under fast frequency
    ramps."""

    transverse: float = 0.0

    @property
    def dim(self) -> int:
        return 2

    def hamiltonian(self, omega: float) -> Operator:
        from .operators import PAULI_X, PAULI_Z

        return Operator.hermitian(0.5 * omega * PAULI_Z + 0.5 * self.transverse * PAULI_X)

    def coupling(self) -> Operator:
        from .operators import PAULI_X

        return Operator.hermitian(PAULI_X)


@dataclass(frozen=True)
class OscillatorMedium:
    """Truncated harmonic medium H(omega) = omega n in the number basis.

    All H(omega) commute, so the ideal adiabat is exact population
    transport at any speed; friction studies use the qubit medium."""

    levels: int = 10

    @property
    def dim(self) -> int:
        return self.levels

    def hamiltonian(self, omega: float) -> Operator:
        return Operator.hermitian(omega * np.diag(np.arange(self.levels, dtype=float)))

    def coupling(self) -> Operator:
        a = np.diag(np.sqrt(np.arange(1, self.levels, dtype=float)), k=1)
        return Operator.hermitian(a + a.conj().T)


@dataclass(frozen=True)
class StrokeSpec:
    """One stroke: a bath-contact isochore at fixed frequency, or an
    isolated adiabat sweeping the frequency under a chosen protocol."""

    kind: str                      # isochore | adiabat
    duration: float
    omega: float = 0.0             # isochore frequency
    bath: BathSpec | None = None   # isochore bath
    omega_start: float = 0.0       # adiabat endpoints
    omega_end: float = 0.0
    protocol: str = "adiabatic"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("isochore", "adiabat"):
            raise ValueError(f"unknown stroke kind {self.kind!r}")
        if self.duration < 0:
            raise ValueError("stroke duration must be >= 0")
        if self.kind == "isochore" and self.bath is None:
            raise ValueError("isochore needs a bath")
        if self.kind == "adiabat" and self.protocol not in _PROTOCOLS:
            raise ValueError(f"unknown adiabat protocol {self.protocol!r}")


@dataclass(frozen=True)
class StrokeOp:
    """A compiled stroke: its propagator plus the Hamiltonians in force
    at entry and exit, for the energy bookkeeping."""

    spec: StrokeSpec
    superop: Superoperator
    h_in: Operator
    h_out: Operator

    @property
    def is_isochore(self) -> bool:
        return self.spec.kind == "isochore"


def _dephase_superop(h: Operator) -> Superoperator:
    """Pinch in the eigenbasis of h (kills energy-basis coherence)."""
    _, v = eig_hermitian(h)
    d = h.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        p = np.outer(v.mat[:, j], v.mat[:, j].conj())
        m += np.kron(p.conj(), p)
    return Superoperator(m)


def _adiabat_superop(medium, spec: StrokeSpec) -> Superoperator:
    h_s = medium.hamiltonian(spec.omega_start)
    h_e = medium.hamiltonian(spec.omega_end)
    if spec.protocol == "sudden":
        return Superoperator(np.eye(medium.dim**2))
    if spec.protocol == "adiabatic":
        # ideal infinitely slow limit: populations ride the instantaneous
        # eigenbasis, coherences average away
        _, v_s = eig_hermitian(h_s)
        _, v_e = eig_hermitian(h_e)
        d = medium.dim
        m = np.zeros((d * d, d * d), dtype=complex)
        for j in range(d):
            k = np.outer(v_e.mat[:, j], v_s.mat[:, j].conj())
            m += np.kron(k.conj(), k)
        return Superoperator(m)
    # linear-ramp: time-ordered unitary on a refined grid
    steps = max(64, int(math.ceil(spec.duration * 200)))
    dt = spec.duration / steps
    u = np.eye(medium.dim, dtype=complex)
    for k in range(steps):
        frac = (k + 0.5) / steps
        w = spec.omega_start + (spec.omega_end - spec.omega_start) * frac
        u = scipy.linalg.expm(-1j * medium.hamiltonian(w).mat * dt) @ u
    return unitary_superop(u)


def _compile_stroke(medium, spec: StrokeSpec) -> StrokeOp:
    if spec.kind == "isochore":
        h = medium.hamiltonian(spec.omega)
        gen = build_davies(h, [(medium.coupling(), spec.bath)])
        sop = matexp(gen.liouvillian(), spec.duration)
        return StrokeOp(spec=spec, superop=sop, h_in=h, h_out=h)
    sop = _adiabat_superop(medium, spec)
    return StrokeOp(
        spec=spec,
        superop=sop,
        h_in=medium.hamiltonian(spec.omega_start),
        h_out=medium.hamiltonian(spec.omega_end),
    )


@dataclass(frozen=True)
class CycleSpec:
    """A reciprocating cycle on a working medium.

    ``order`` fixes the stroke sequence: the engine order runs hot
    isochore, expansion, cold isochore, compression; the refrigerator
    order is the reversed sequence, whose frequency-mismatched stroke
    junctions are booked as sudden quenches (free for media whose
    Hamiltonians commute across frequencies).
    """

    medium: object
    omega_h: float
    omega_c: float
    bath_h: BathSpec
    bath_c: BathSpec
    tau_h: float = 5.0
    tau_c: float = 5.0
    tau_hc: float = 1.0
    tau_ch: float = 1.0
    protocol: str = "adiabatic"
    order: str = "engine"
    dephase_after_adiabats: bool = False

    def __post_init__(self):
        if not (self.omega_h > self.omega_c > 0):
            raise ValueError("need omega_h > omega_c > 0")
        if self.order not in ("engine", "refrigerator"):
            raise ValueError(f"unknown cycle order {self.order!r}")
        if self.protocol not in _PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")

    def strokes(self) -> list[StrokeSpec]:
        """Chronological stroke list."""
        hot = StrokeSpec(
            kind="isochore", duration=self.tau_h, omega=self.omega_h,
            bath=self.bath_h, label="hot-isochore",
        )
        cold = StrokeSpec(
            kind="isochore", duration=self.tau_c, omega=self.omega_c,
            bath=self.bath_c, label="cold-isochore",
        )
        expansion = StrokeSpec(
            kind="adiabat", duration=self.tau_hc, omega_start=self.omega_h,
            omega_end=self.omega_c, protocol=self.protocol, label="expansion",
        )
        compression = StrokeSpec(
            kind="adiabat", duration=self.tau_ch, omega_start=self.omega_c,
            omega_end=self.omega_h, protocol=self.protocol, label="compression",
        )
        if self.order == "engine":
            return [hot, expansion, cold, compression]
        return [hot, compression, cold, expansion]

    def cycle_time(self) -> float:
        return self.tau_h + self.tau_c + self.tau_hc + self.tau_ch


def compose_cycle(spec: CycleSpec) -> tuple[Superoperator, list[StrokeOp]]:
    """Compile the strokes and compose the cycle propagator (chronological
    application; the product reads right to left).

    Every stroke is verified completely positive and trace preserving;
    the non-commutation witness |[U_expansion, U_hot]| is computed but not
    enforced (it vanishes only in degenerate limits)."""
    ops = []
    strokes = spec.strokes()
    for st in strokes:
        op = _compile_stroke(spec.medium, st)
        ok, min_eig = cp_check(op.superop)
        drift = op.superop.trace_preservation_residual()
        if not ok or drift > DYNAMICAL:
            raise ValueError(
                f"stroke {st.label or st.kind!r} is not CPTP "
                f"(choi min eig {min_eig:.3e}, trace drift {drift:.3e})"
            )
        ops.append(op)
        if st.kind == "adiabat" and spec.dephase_after_adiabats:
            pinch = _dephase_superop(op.h_out)
            ops.append(StrokeOp(
                spec=StrokeSpec(kind="adiabat", duration=0.0,
                                omega_start=st.omega_end, omega_end=st.omega_end,
                                protocol="sudden", label=f"dephase-after-{st.label}"),
                superop=pinch, h_in=op.h_out, h_out=op.h_out,
            ))
    total = np.eye(spec.medium.dim ** 2, dtype=complex)
    for op in ops:
        total = op.superop.mat @ total
    return Superoperator(total), ops


def noncommutation_witness(ops: list[StrokeOp]) -> float:
    """|[U_expansion, U_hot]| for the first adiabat/isochore pair found."""
    iso = next((o for o in ops if o.is_isochore), None)
    adi = next((o for o in ops if not o.is_isochore), None)
    if iso is None or adi is None:
        return 0.0
    comm = adi.superop.mat @ iso.superop.mat - iso.superop.mat @ adi.superop.mat
    return float(np.linalg.norm(comm, 2))


def find_limit_cycle(
    u_cyc: Superoperator,
    max_iter: int = 2000,
    start: DensityMatrix | None = None,
) -> tuple[DensityMatrix, list[float]]:
    """Fixed point of the cycle propagator and the relative-entropy
    convergence trace of plain iteration toward it.

    The contraction property of relative entropy under CP maps makes the
    recorded distances non-increasing; degenerate unit eigenspaces are
    rejected."""
    d = u_cyc.dim
    evals, evecs = scipy.linalg.eig(u_cyc.mat)
    unit = np.where(np.abs(evals - 1.0) <= 1e-10)[0]
    if len(unit) == 0:
        unit = np.array([int(np.argmin(np.abs(evals - 1.0)))])
    if len(unit) > 1:
        raise ValueError(f"cycle fixed point degenerate: multiplicity {len(unit)}")
    m = unvec(evecs[:, unit[0]], d)
    m = (m + m.conj().T) / 2.0
    tr = float(np.real(np.trace(m)))
    if abs(tr) < 1e-12:
        raise ValueError("unit eigenvector of the cycle is traceless")
    m /= tr
    lam, v = np.linalg.eigh(m)
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    rho_lc = DensityMatrix((v * lam) @ v.conj().T)
    resid = float(np.max(np.abs(u_cyc.apply_matrix(rho_lc.mat) - rho_lc.mat)))
    if resid > 1e-10:
        # eigensolver gave a poor vector; fall back to power iteration
        rho_it = DensityMatrix.maximally_mixed(d)
        for _ in range(max_iter):
            nxt = u_cyc.apply(rho_it)
            step = float(np.max(np.abs(nxt.mat - rho_it.mat)))
            rho_it = nxt
            if step < 1e-14:
                break
        rho_lc = rho_it

    trace_conv: list[float] = []
    rho = start if start is not None else DensityMatrix.maximally_mixed(d)
    for _ in range(max_iter):
        dist = relative_entropy(rho, rho_lc)
        trace_conv.append(dist)
        if dist < 1e-12:
            break
        rho = u_cyc.apply(rho)
    return rho_lc, trace_conv


@dataclass(frozen=True)
class CycleReport:
    """Per-cycle energy bookkeeping at the limit cycle."""

    work: float                      # net extracted work per cycle
    heat: dict[str, float]           # per-bath heat into the medium
    stroke_energy: list[tuple[str, float]]
    efficiency: float | None         # W / Q_h when operating as an engine
    cop: float | None                # Q_c / |W| when operating as a refrigerator
    power: float                     # W / cycle time
    entropy_production: float        # -sum_k Q_k / T_k per cycle
    limit_cycle: DensityMatrix
    convergence: list[float]
    is_engine: bool
    flags: tuple[str, ...] = ()

    @property
    def q_h(self) -> float:
        return self.heat.get("hot", 0.0)

    @property
    def q_c(self) -> float:
        return self.heat.get("cold", 0.0)


def _walk_cycle(ops: list[StrokeOp], rho_start: DensityMatrix):
    """Chronological walk recording heat per bath and extracted work,
    including quench work at frequency-mismatched stroke junctions."""
    heat: dict[str, float] = {}
    stroke_energy = []
    work_extracted = 0.0
    rho = rho_start
    h_prev = ops[0].h_in
    for op in ops:
        if np.max(np.abs(op.h_in.mat - h_prev.mat)) > 1e-12:
            # sudden junction quench: energy jump at fixed state is work
            jump = float(np.real(np.trace(rho.mat @ (op.h_in.mat - h_prev.mat))))
            work_extracted -= jump
            stroke_energy.append(("junction-quench", -jump))
        e_in = float(np.real(np.trace(rho.mat @ op.h_in.mat)))
        rho = op.superop.apply(rho)
        e_out = float(np.real(np.trace(rho.mat @ op.h_out.mat)))
        delta = e_out - e_in
        if op.is_isochore:
            label = op.spec.bath.label
            heat[label] = heat.get(label, 0.0) + delta
            stroke_energy.append((op.spec.label or "isochore", delta))
        else:
            work_extracted -= delta
            stroke_energy.append((op.spec.label or "adiabat", -delta))
        h_prev = op.h_out
    # close the cycle back to the first stroke's Hamiltonian
    if np.max(np.abs(ops[0].h_in.mat - h_prev.mat)) > 1e-12:
        jump = float(np.real(np.trace(rho.mat @ (ops[0].h_in.mat - h_prev.mat))))
        work_extracted -= jump
        stroke_energy.append(("junction-quench", -jump))
    return rho, work_extracted, heat, stroke_energy


def run_otto(spec: CycleSpec, cycles: int = 0) -> CycleReport:
    """Drive the cycle to its limit cycle and report the energy split.

    ``cycles`` > 0 additionally applies that many cycles from a thermal
    start before the fixed-point analysis (the convergence trace is
    recorded either way)."""
    u_cyc, ops = compose_cycle(spec)
    start = None
    if cycles > 0:
        from .states import gibbs_state

        rho = gibbs_state(ops[0].h_in, spec.bath_h.beta)
        for _ in range(cycles):
            rho = u_cyc.apply(rho)
        start = rho
    rho_lc, conv = find_limit_cycle(u_cyc, start=start)
    rho_end, work, heat, stroke_energy = _walk_cycle(ops, rho_lc)

    flags = []
    q_h = heat.get(spec.bath_h.label, 0.0)
    q_c = heat.get(spec.bath_c.label, 0.0)
    scale = max(abs(q_h), abs(q_c), abs(work), 1e-30)
    is_engine = work > DYNAMICAL * scale and q_h > 0
    efficiency = None
    cop = None
    if is_engine:
        efficiency = work / q_h
    elif spec.order == "engine":
        flags.append("not an engine at these parameters")
    if work < -DYNAMICAL * scale and q_c > 0:
        cop = q_c / (-work)
    sigma = 0.0
    for label, q in heat.items():
        bath = spec.bath_h if label == spec.bath_h.label else spec.bath_c
        if not math.isinf(bath.temperature):
            sigma -= q / bath.temperature
    return CycleReport(
        work=work,
        heat=heat,
        stroke_energy=stroke_energy,
        efficiency=efficiency,
        cop=cop,
        power=work / spec.cycle_time(),
        entropy_production=sigma,
        limit_cycle=rho_lc,
        convergence=conv,
        is_engine=is_engine,
        flags=tuple(flags),
    )


def quantum_friction(spec: CycleSpec) -> tuple[float, float]:
    """Extra work demanded by nonadiabatic driving.

    At the protocol's own limit cycle, each adiabat's energy change is
    compared against the ideal population-transport map applied to the
    same entry state; the summed excess is the coherence work and cannot
    be negative when the entry states are passive.  Also returns the
    largest energy-basis Shannon-minus-von-Neumann entropy gap seen at a
    stroke exit (the coherence signature)."""
    u_cyc, ops = compose_cycle(spec)
    rho_lc, _ = find_limit_cycle(u_cyc)
    rho = rho_lc
    h_prev = ops[0].h_in
    extra_work = 0.0
    entropy_gap = 0.0
    for op in ops:
        rho_in = rho
        rho = op.superop.apply(rho)
        if not op.is_isochore:
            e_actual = float(np.real(np.trace(rho.mat @ op.h_out.mat))) - float(
                np.real(np.trace(rho_in.mat @ op.h_in.mat))
            )
            ideal = _adiabat_superop(spec.medium, replace(op.spec, protocol="adiabatic"))
            rho_ideal = ideal.apply(rho_in)
            e_ideal = float(np.real(np.trace(rho_ideal.mat @ op.h_out.mat))) - float(
                np.real(np.trace(rho_in.mat @ op.h_in.mat))
            )
            extra_work += e_actual - e_ideal
            gap = shannon_entropy_in_basis(rho, op.h_out) - von_neumann_entropy(rho)
            entropy_gap = max(entropy_gap, gap)
        h_prev = op.h_out
    return extra_work, entropy_gap


def optimize_power(
    spec: CycleSpec,
    free: dict[str, tuple[float, float]],
    seed: int = 7,
    restarts: int = 3,
    max_evals: int = 200,
) -> tuple[dict[str, float], float, float | None]:
    """Maximise extracted power over the named cycle parameters.

    ``free`` maps CycleSpec field names (stroke durations, and optionally
    ``omega_c``/``omega_h``) to search bounds.  Derivative-free bounded
    simplex search with seeded restarts; non-engine points score zero
    power.  Returns (best parameters, max power, efficiency there)."""
    names = list(free)
    lo = np.array([free[k][0] for k in names], dtype=float)
    hi = np.array([free[k][1] for k in names], dtype=float)
    if np.any(hi < lo):
        raise ValueError("empty search box")

    def objective(x: np.ndarray) -> float:
        params = {k: float(v) for k, v in zip(names, np.clip(x, lo, hi))}
        try:
            rep = run_otto(replace(spec, **params))
        except (ValueError, BohrResolutionError):
            return 0.0
        return rep.power if rep.work > 0 else 0.0

    rng = np.random.default_rng(seed)
    best_x = (lo + hi) / 2.0
    best_p = objective(best_x)
    span = hi - lo
    if np.all(span <= 0):
        rep = run_otto(replace(spec, **{k: float(v) for k, v in zip(names, lo)}))
        return dict(zip(names, lo)), rep.power, rep.efficiency
    any_converged = False
    for _ in range(restarts):
        x0 = lo + rng.uniform(0.15, 0.85, size=len(names)) * span
        res = scipy.optimize.minimize(
            lambda x: -objective(x),
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"maxfev": max_evals, "xatol": 1e-4, "fatol": 1e-10},
        )
        any_converged = any_converged or bool(res.success)
        if -res.fun > best_p:
            best_p = -res.fun
            best_x = np.clip(res.x, lo, hi)
    if not any_converged:
        warnings.warn("power optimisation hit its evaluation cap in every "
                      "restart; returning the best point found", stacklevel=2)
    best = {k: float(v) for k, v in zip(names, best_x)}
    rep = run_otto(replace(spec, **best))
    return best, rep.power, rep.efficiency


def sudden_limit_check(spec: CycleSpec, tau_list) -> list[tuple[float, float]]:
    """Deviation of the symmetric four-stroke split
    U_ch^(1/2) U_c U_hc U_h U_ch^(1/2) from the merged generator
    exp(sum_j L_j tau), tabulated over the stroke time tau.

    The split sandwiches half the compression generator around the cycle,
    which is a conjugated rotation of the plain stroke product; what the
    cyclic structure protects is the spectrum, so the tabulated error is
    the matched eigenvalue distance between the split and merged
    propagators.  It vanishes to third order in tau (the raw operator-norm
    gap between the two matrices is only second order)."""
    medium = spec.medium
    gen_h = build_davies(medium.hamiltonian(spec.omega_h), [(medium.coupling(), spec.bath_h)])
    gen_c = build_davies(medium.hamiltonian(spec.omega_c), [(medium.coupling(), spec.bath_c)])
    from .operators import hamiltonian_superop

    l_h = gen_h.liouvillian().mat
    l_c = gen_c.liouvillian().mat
    l_hc = hamiltonian_superop(medium.hamiltonian(spec.omega_c)).mat
    l_ch = hamiltonian_superop(medium.hamiltonian(spec.omega_h)).mat
    l_sum = l_h + l_c + l_hc + l_ch
    rows = []
    for tau in tau_list:
        u = (
            scipy.linalg.expm(l_ch * (tau / 2.0))
            @ scipy.linalg.expm(l_c * tau)
            @ scipy.linalg.expm(l_hc * tau)
            @ scipy.linalg.expm(l_h * tau)
            @ scipy.linalg.expm(l_ch * (tau / 2.0))
        )
        err = _matched_eigenvalue_distance(u, scipy.linalg.expm(l_sum * tau))
        rows.append((float(tau), err))
    return rows


def _matched_eigenvalue_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max distance between the spectra of a and b under the optimal
    eigenvalue pairing."""
    ea = np.linalg.eigvals(a)
    eb = np.linalg.eigvals(b)
    cost = np.abs(ea[:, None] - eb[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def fit_loglog_slope(rows, err_floor: float = 1e-12, err_cap: float = 1e-2) -> float:
    """Least-squares slope of log(err) vs log(tau), using only rows inside
    the asymptotic band (errors below the cap, above the roundoff floor)."""
    pts = [(t, e) for t, e in rows if err_floor < e < err_cap]
    if len(pts) < 2:
        raise ValueError("not enough points in the asymptotic band to fit")
    x = np.log([t for t, _ in pts])
    y = np.log([e for _, e in pts])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope


# ---------------------------------------------------------------------------
# Continuous three-bath machine


@dataclass(frozen=True)
class TricycleSpec:
    """Three filter qubits (hot, cold, work) exchanging single quanta
    through the resonant trilinear interaction
    eps (sm_h sp_c sp_w + sp_h sm_c sm_w), each filter damped by its own
    bath.  The work bath at infinite temperature turns the device into
    the canonical absorption machine."""

    omega_h: float
    omega_c: float
    bath_h: BathSpec
    bath_c: BathSpec
    bath_w: BathSpec
    eps: float = 0.05
    representation: str = "qubits"
    oscillator_levels: int = 3

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("interaction strength must be >= 0")
        if not (self.omega_h > self.omega_c > 0):
            raise ValueError("need omega_h > omega_c > 0")
        if self.representation not in ("qubits", "oscillators"):
            raise ValueError(f"unknown representation {self.representation!r}")

    @property
    def omega_w(self) -> float:
        # resonance condition; exact by construction
        return self.omega_h - self.omega_c


def _tricycle_hamiltonian_qubits(spec: TricycleSpec) -> tuple[Operator, list[Operator]]:
    from .operators import SIGMA_MINUS, SIGMA_PLUS

    eye = np.eye(2)
    num = np.diag([0.0, 1.0])

    def emb(op, slot):
        mats = [eye, eye, eye]
        mats[slot] = op
        return np.kron(np.kron(mats[0], mats[1]), mats[2])

    h = (
        spec.omega_h * emb(num, 0)
        + spec.omega_c * emb(num, 1)
        + spec.omega_w * emb(num, 2)
    )
    sm = SIGMA_MINUS
    sp = SIGMA_PLUS
    inter = spec.eps * (
        emb(sm, 0) @ emb(sp, 1) @ emb(sp, 2) + emb(sp, 0) @ emb(sm, 1) @ emb(sm, 2)
    )
    h_full = Operator.hermitian(h + inter)
    couplings = [
        Operator.hermitian(emb(sm + sp, slot)) for slot in range(3)
    ]
    return h_full, couplings


def _tricycle_hamiltonian_oscillators(spec: TricycleSpec) -> tuple[Operator, list[Operator]]:
    d = spec.oscillator_levels
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)
    num = a.conj().T @ a
    eye = np.eye(d)

    def emb(op, slot):
        mats = [eye, eye, eye]
        mats[slot] = op
        return np.kron(np.kron(mats[0], mats[1]), mats[2])

    h = (
        spec.omega_h * emb(num, 0)
        + spec.omega_c * emb(num, 1)
        + spec.omega_w * emb(num, 2)
    )
    inter = spec.eps * (
        emb(a, 0) @ emb(a.conj().T, 1) @ emb(a.conj().T, 2)
        + emb(a.conj().T, 0) @ emb(a, 1) @ emb(a, 2)
    )
    h_full = Operator.hermitian(h + inter)
    couplings = [Operator.hermitian(emb(a + a.conj().T, slot)) for slot in range(3)]
    return h_full, couplings


def build_tricycle(spec: TricycleSpec) -> GKLSGenerator:
    """Global weak-coupling generator of the full interacting filter
    Hamiltonian (local per-filter generators are never used: they can
    push heat against the gradient)."""
    if spec.representation == "qubits":
        h, (s_h, s_c, s_w) = _tricycle_hamiltonian_qubits(spec)
    else:
        h, (s_h, s_c, s_w) = _tricycle_hamiltonian_oscillators(spec)
    return build_davies(
        h,
        [(s_h, spec.bath_h), (s_c, spec.bath_c), (s_w, spec.bath_w)],
    )


@dataclass(frozen=True)
class TricycleSteady:
    currents: dict[str, float]
    second_law_value: float    # -sum_k J_k / T_k, non-negative
    first_law_residual: float  # |sum_k J_k|
    gain: float                # bare-basis population inversion of the work transition
    state: DensityMatrix


def tricycle_steady(spec: TricycleSpec) -> TricycleSteady:
    """Steady-state currents and law values of the three-bath machine.

    The gain is the population imbalance between the single-excitation
    hot and cold filter states, the three-level-amplifier inversion
    reading of the machine; it changes sign together with the cooling
    window."""
    gen = build_tricycle(spec)
    rho = stationary_state(gen)
    currents = heat_currents(gen, rho)
    first = abs(sum(currents.values()))
    second = 0.0
    for label, j in currents.items():
        t = gen.baths[label].temperature
        if not math.isinf(t):
            second -= j / t
    if spec.representation == "qubits":
        diag = np.real(np.diag(rho.mat))
        # basis order |h c w>: |100> = index 4, |010> = index 2
        gain = float(diag[4] - diag[2])
    else:
        d = spec.oscillator_levels
        diag = np.real(np.diag(rho.mat))
        gain = float(diag[d * d] - diag[d])
    return TricycleSteady(
        currents=currents,
        second_law_value=second,
        first_law_residual=first,
        gain=gain,
        state=rho,
    )


@dataclass(frozen=True)
class SweepRow:
    t_c: float
    omega_c_star: float
    j_c: float
    conductance: float
    gain: float
    no_cooling: bool = False


def third_law_sweep(
    spec: TricycleSpec,
    t_c_grid,
    ratio_lo: float = 0.2,
    ratio_hi: float = 3.0,
    evals_per_point: int = 40,
) -> list[SweepRow]:
    """Cooling-current sweep toward absolute zero.

    For each cold temperature the cold filter frequency is optimised over
    the bracket [ratio_lo, ratio_hi] * T_c to maximise the cooling current
    J_c; rows report the optimum, the gain, and the conductance
    K = J_c / (omega_c G).  Candidate frequencies that collide with the
    interaction-split Bohr structure are skipped rather than guessed."""
    rows = []
    for t_c in t_c_grid:
        t_c = float(t_c)
        if t_c < 1e-3:
            raise ValueError("cold temperature grid is floored at 1e-3")
        lo, hi = ratio_lo * t_c, ratio_hi * t_c
        hi = min(hi, 0.95 * spec.omega_h)

        def j_c_of(omega_c: float) -> float:
            try:
                trial = replace(
                    spec,
                    omega_c=omega_c,
                    bath_c=replace(spec.bath_c, temperature=t_c),
                )
                return tricycle_steady(trial).currents[spec.bath_c.label]
            except (ValueError, BohrResolutionError):
                return -math.inf

        # golden-section style bounded scan: coarse grid then refine
        grid = np.linspace(lo, hi, evals_per_point // 2)
        vals = np.array([j_c_of(w) for w in grid])
        k = int(np.argmax(vals))
        a = grid[max(0, k - 1)]
        b = grid[min(len(grid) - 1, k + 1)]
        fine = np.linspace(a, b, evals_per_point - evals_per_point // 2)
        fvals = np.array([j_c_of(w) for w in fine])
        kk = int(np.argmax(fvals))
        best_w, best_j = float(fine[kk]), float(fvals[kk])
        if not math.isfinite(best_j) or best_j <= 0:
            rows.append(SweepRow(t_c, best_w, max(best_j, 0.0) if math.isfinite(best_j) else 0.0,
                                 0.0, 0.0, no_cooling=True))
            continue
        trial = replace(
            spec, omega_c=best_w, bath_c=replace(spec.bath_c, temperature=t_c)
        )
        steady = tricycle_steady(trial)
        # in the cooling window the amplifier inversion p2 - p1 is negative;
        # the cold current tracks the cooling inversion, its mirror image
        gain = -steady.gain
        cond = best_j / (best_w * gain) if abs(gain) > 1e-300 else math.nan
        rows.append(SweepRow(t_c, best_w, best_j, cond, gain))
    return rows
