import math

import numpy as np
import pytest

from qthermo.baths import BathSpec
from qthermo.lindblad import (
    BohrResolutionError,
    GKLSGenerator,
    JumpChannel,
    adiabatic_propagate,
    build_davies,
    davies_audit,
    entropy_production_rate,
    heat_currents,
    propagate,
    stationary_state,
    trajectory,
)
from qthermo.operators import (
    PAULI_X,
    PAULI_Z,
    SIGMA_MINUS,
    DensityMatrix,
    Operator,
    cp_check,
    matexp,
    random_density,
    trace_distance,
)
from qthermo.states import gibbs_state, relative_entropy


def qubit_h(omega=1.0):
    return Operator.hermitian(0.5 * omega * PAULI_Z)


def ohmic_bath(label, t, gamma=0.2, cutoff=10.0):
    return BathSpec(label=label, temperature=t, form_factor="ohmic",
                    gamma=gamma, cutoff=cutoff)


def oscillator(d, omega=1.0):
    h = Operator.hermitian(omega * np.diag(np.arange(d, dtype=float)))
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)
    return h, Operator.hermitian(a + a.conj().T)


class TestBuildDavies:
    def test_qubit_channels_and_stationarity(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        freqs = sorted(ch.bohr_frequency for ch in gen.channels)
        assert np.allclose(freqs, [-1.0, 1.0], atol=1e-12)
        rates = {round(ch.bohr_frequency, 6): ch.rate for ch in gen.channels}
        assert rates[-1.0] / rates[1.0] == pytest.approx(math.exp(-1.0), abs=1e-12)
        rho_b = gibbs_state(qubit_h(), 1.0)
        resid = np.max(np.abs(gen.liouvillian().apply_matrix(rho_b.mat)))
        assert resid <= 1e-9
        assert stationary_state(gen).mat == pytest.approx(rho_b.mat, abs=1e-10)

    def test_zero_coupling_pure_hamiltonian(self, rng):
        bath = ohmic_bath("b", 1.0)
        from dataclasses import replace

        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), replace(bath, coupling=0.0))])
        assert gen.channels == []
        rho = random_density(2, rng)
        out = propagate(gen, rho, 0.7)
        import scipy.linalg

        u = scipy.linalg.expm(-1j * qubit_h().mat * 0.7)
        assert np.max(np.abs(out.mat - u @ rho.mat @ u.conj().T)) < 1e-10

    def test_flat_infinite_temperature_oscillator(self):
        h, x = oscillator(10)
        bath = BathSpec(label="w", temperature=math.inf, form_factor="flat",
                        gamma=0.3, cutoff=50.0)
        gen = build_davies(h, [(x, bath)])
        ss = stationary_state(gen)
        assert np.max(np.abs(ss.mat - np.eye(10) / 10)) < 1e-10

    def test_truncated_oscillator_thermalises_to_gibbs(self):
        h, x = oscillator(10)
        gen = build_davies(h, [(x, ohmic_bath("b", 0.8))])
        ss = stationary_state(gen)
        assert trace_distance(ss, gibbs_state(h, 1 / 0.8)) < 1e-10

    def test_nonhermitian_coupling_rejected(self):
        with pytest.raises(ValueError, match="hermitian"):
            build_davies(qubit_h(), [(Operator.general(SIGMA_MINUS), ohmic_bath("b", 1.0))])

    def test_unresolved_bohr_gaps_rejected(self):
        # two gaps differing by a part in 1e7 of the spread sit inside the
        # unresolved band
        h = Operator.hermitian(np.diag([0.0, 1.0, 2.0 + 1.0e-7]))
        s = Operator.hermitian(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex))
        with pytest.raises(BohrResolutionError):
            build_davies(h, [(s, ohmic_bath("b", 1.0))])

    def test_degenerate_gaps_merged(self):
        # equally spaced ladder: one channel per signed gap value per order
        h = Operator.hermitian(np.diag([0.0, 1.0, 2.0]))
        s = Operator.hermitian(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex))
        gen = build_davies(h, [(s, ohmic_bath("b", 1.0))])
        freqs = sorted(ch.bohr_frequency for ch in gen.channels)
        assert np.allclose(freqs, [-1.0, 1.0], atol=1e-12)

    def test_uniqueness_flag(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        assert gen.has_unique_stationary()
        # pure dephasing: sigma_z coupling commutes with everything diagonal
        gen2 = build_davies(qubit_h(), [(Operator.hermitian(PAULI_Z), ohmic_bath("b", 1.0))])
        assert not gen2.has_unique_stationary()

    def test_davies_structural_audit(self):
        gen = build_davies(qubit_h(1.3), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 0.7))])
        audit = davies_audit(gen)
        assert audit["cp_min_eig"] >= -1e-9
        assert audit["trace_drift"] <= 1e-9
        assert audit["hamiltonian_commute"] <= 1e-9
        assert audit["pop_coherence_mix"] <= 1e-10
        assert audit["gibbs_residual"] <= 1e-9
        assert audit["detailed_balance"] <= 1e-10


class TestLiouvillianSpectrum:
    def test_classical_decay_rate(self, rng):
        # H = 0, single jump sigma_minus at unit rate: excited population
        # decays as exp(-t)
        gen = GKLSGenerator(
            Operator.hermitian(np.zeros((2, 2))),
            [JumpChannel("b", 1.0, SIGMA_MINUS, 1.0)],
        )
        rho0 = DensityMatrix(np.diag([0.3, 0.7]))
        for t in (0.5, 1.0, 2.0):
            out = propagate(gen, rho0, t)
            assert out.mat[1, 1].real == pytest.approx(0.7 * math.exp(-t), abs=1e-10)

    def test_empty_channels_imaginary_spectrum(self):
        gen = GKLSGenerator(qubit_h(), [])
        evals = np.linalg.eigvals(gen.liouvillian().mat)
        assert np.max(np.abs(evals.real)) < 1e-12

    def test_davies_qubit_spectrum(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        evals = np.linalg.eigvals(gen.liouvillian().mat)
        assert np.sum(np.abs(evals) < 1e-10) == 1
        assert np.max(evals.real) < 1e-10

    def test_no_channels_stationary_rejected(self):
        gen = GKLSGenerator(qubit_h(), [])
        with pytest.raises(ValueError, match="not unique"):
            stationary_state(gen)


class TestPropagation:
    def test_time_zero_identity(self, rng):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        rho = random_density(2, rng)
        assert np.allclose(propagate(gen, rho, 0.0).mat, rho.mat)

    def test_negative_time_rejected(self, rng):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        with pytest.raises(ValueError):
            propagate(gen, random_density(2, rng), -1.0)

    def test_relaxation_monotone_relative_entropy(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        rho_b = gibbs_state(qubit_h(), 1.0)
        rho = DensityMatrix.pure([1.0, 0.0])  # excited state
        dists = []
        for t in np.linspace(0, 30, 100):
            dists.append(relative_entropy(propagate(gen, rho, float(t)), rho_b))
        diffs = np.diff(dists)
        assert np.all(diffs <= 1e-9)
        assert dists[-1] < 1e-5

    def test_two_bath_steady_current_direction(self):
        hot = ohmic_bath("hot", 2.0)
        cold = ohmic_bath("cold", 1.0, gamma=0.1)
        sx = Operator.hermitian(PAULI_X)
        gen = build_davies(qubit_h(), [(sx, hot), (sx, cold)])
        ss = stationary_state(gen)
        currents = heat_currents(gen, ss)
        assert currents["hot"] > 0
        assert currents["cold"] == pytest.approx(-currents["hot"], abs=1e-12)

    def test_choi_positivity_family(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        for t in (0.1, 1.0, 10.0):
            ok, mineig = cp_check(matexp(gen.liouvillian(), t))
            assert ok and mineig >= -1e-9


class TestEntropyProduction:
    def test_zero_at_stationarity(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        ss = stationary_state(gen)
        assert abs(entropy_production_rate(gen, ss)) < 1e-9

    def test_positive_during_relaxation(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        rho = DensityMatrix(np.diag([0.9, 0.1]))
        for t in (0.0, 0.5, 1.5, 4.0):
            assert entropy_production_rate(gen, propagate(gen, rho, t)) >= -1e-9

    def test_two_bath_steady_state_identity(self):
        hot = ohmic_bath("hot", 2.0)
        cold = ohmic_bath("cold", 1.0, gamma=0.1)
        sx = Operator.hermitian(PAULI_X)
        gen = build_davies(qubit_h(), [(sx, hot), (sx, cold)])
        ss = stationary_state(gen)
        j = heat_currents(gen, ss)
        sigma = entropy_production_rate(gen, ss)
        oracle = -(j["hot"] / 2.0 + j["cold"] / 1.0)
        assert sigma == pytest.approx(oracle, abs=1e-10)
        assert sigma >= -1e-9

    def test_pure_state_boundary_regularised(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        sigma = entropy_production_rate(gen, DensityMatrix.pure([1.0, 0.0]))
        assert math.isfinite(sigma) and sigma >= -1e-9


class TestTrajectoryLedger:
    def test_static_ledger_columns(self):
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        grid = np.linspace(0.01, 10.0, 120)
        led = trajectory(gen, DensityMatrix.pure([1.0, 0.0]), grid)
        assert np.all(led.power == 0.0)
        assert np.all(led.entropy_production >= -1e-9)
        # energy relaxes toward the thermal value monotonically here
        assert led.energy[0] > led.energy[-1]
        csv = led.to_csv()
        head = csv.splitlines()[0]
        assert head == "t,E,P,S_vn,sigma,J_b"

    def test_first_law_static(self):
        # with constant H, dE/dt must equal the total heat current
        gen = build_davies(qubit_h(), [(Operator.hermitian(PAULI_X), ohmic_bath("b", 1.0))])
        grid = np.linspace(0.01, 5.0, 800)
        led = trajectory(gen, DensityMatrix(np.diag([0.9, 0.1])), grid)
        assert led.first_law_residual() <= 1e-6 * led.current_scale()


class TestAdiabaticDriving:
    def test_constant_schedule_matches_trajectory(self):
        bath = ohmic_bath("b", 1.0)
        sx = Operator.hermitian(PAULI_X)
        gen = build_davies(qubit_h(), [(sx, bath)])
        grid = np.linspace(0.0, 4.0, 40)
        rho0 = DensityMatrix(np.diag([0.8, 0.2]))
        led_static = trajectory(gen, rho0, grid[1:])
        led_adia = adiabatic_propagate(lambda t: qubit_h(), [(sx, bath)], rho0, grid)
        assert np.allclose(led_adia.energy[1:], led_static.energy, atol=1e-9)
        assert np.max(np.abs(led_adia.power)) < 1e-9

    def test_slow_ramp_tracks_gibbs(self):
        bath = ohmic_bath("b", 1.0, gamma=0.5)
        sx = Operator.hermitian(PAULI_X)

        def ramp(total):
            def h_of_t(t):
                return qubit_h(1.0 + t / total)
            return h_of_t

        dists = []
        for total in (40.0, 160.0):
            grid = np.linspace(0.0, total, 240)
            rho0 = gibbs_state(qubit_h(1.0), 1.0)
            led = adiabatic_propagate(ramp(total), [(sx, bath)], rho0, grid,
                                      keep_states=True)
            final = led.states[-1]
            dists.append(trace_distance(final, gibbs_state(qubit_h(2.0), 1.0)))
        assert dists[0] < 0.05
        assert dists[1] < dists[0] / 2  # slower ramp tracks better

    def test_isolated_ramp_pure_work(self):
        # no baths: all energy change is work, heat columns vanish
        def h_of_t(t):
            return qubit_h(1.0 + 0.1 * t)

        rho0 = DensityMatrix(np.diag([0.7, 0.3]))
        grid = np.linspace(0.0, 2.0, 400)
        led = adiabatic_propagate(h_of_t, [], rho0, grid,
                                  dh_dt=lambda t: Operator.hermitian(0.05 * PAULI_Z))
        assert led.currents == {}
        # dE = -P dt exactly (diagonal state, commuting schedule)
        de = np.gradient(led.energy, led.times)
        assert np.max(np.abs(de[1:-1] + led.power[1:-1])) < 1e-8

    def test_first_law_residual_driven(self):
        bath = ohmic_bath("b", 1.0, gamma=0.4)
        sx = Operator.hermitian(PAULI_X)

        def h_of_t(t):
            return qubit_h(1.0 + 0.02 * t)

        def dh_dt(t):
            return Operator.hermitian(0.01 * PAULI_Z)

        grid = np.linspace(0.0, 10.0, 400)
        rho0 = gibbs_state(qubit_h(1.0), 1.0)
        led = adiabatic_propagate(h_of_t, [(sx, bath)], rho0, grid, dh_dt=dh_dt,
                                  substeps=8)
        assert led.first_law_residual() <= 1e-6 * led.current_scale()
        assert np.all(led.entropy_production >= -1e-9)

    def test_instantaneous_gibbs_annihilated(self):
        bath = ohmic_bath("b", 1.0)
        sx = Operator.hermitian(PAULI_X)
        for omega in (1.0, 1.5, 2.0):
            gen = build_davies(qubit_h(omega), [(sx, bath)])
            rho_t = gibbs_state(qubit_h(omega), 1.0)
            resid = np.max(np.abs(gen.dissipator().apply_matrix(rho_t.mat)))
            assert resid <= 1e-9

    def test_coarse_grid_warns_and_refines(self):
        bath = ohmic_bath("b", 1.0)
        sx = Operator.hermitian(PAULI_X)
        grid = np.linspace(0.0, 5.0, 4)  # far coarser than the Bohr period
        with pytest.warns(UserWarning, match="refining"):
            adiabatic_propagate(lambda t: qubit_h(5.0), [(sx, bath)],
                                DensityMatrix.maximally_mixed(2), grid)


class TestLambShiftHook:
    def test_commuting_shift_preserves_laws(self):
        bath = ohmic_bath("b", 1.0)
        sx = Operator.hermitian(PAULI_X)
        shift = Operator.hermitian(0.05 * PAULI_Z)
        gen = build_davies(qubit_h(), [(sx, bath)], lamb_shift=shift)
        assert gen.coherent_shift is shift
        audit = davies_audit(gen)
        # populations and every law number are untouched by the shift
        assert audit["detailed_balance"] <= 1e-10
        assert audit["cp_min_eig"] >= -1e-9
        assert audit["gibbs_residual"] <= 1e-9
        plain = build_davies(qubit_h(), [(sx, bath)])
        rho0 = DensityMatrix(np.diag([0.9, 0.1]))
        a = propagate(gen, rho0, 3.0)
        b = propagate(plain, rho0, 3.0)
        assert np.allclose(np.diag(a.mat), np.diag(b.mat), atol=1e-12)

    def test_noncommuting_shift_rejected(self):
        bath = ohmic_bath("b", 1.0)
        sx = Operator.hermitian(PAULI_X)
        with pytest.raises(ValueError, match="commute"):
            build_davies(qubit_h(), [(sx, bath)], lamb_shift=sx)


def test_channel_pairs_are_adjoint():
    # channels of a hermitian coupling come in (omega, -omega) adjoint pairs
    gen = build_davies(qubit_h(1.3), [(Operator.hermitian(PAULI_X),
                                       ohmic_bath("b", 0.9))])
    for ch in gen.channels:
        partner = [c for c in gen.channels
                   if abs(c.bohr_frequency + ch.bohr_frequency) < 1e-12]
        assert len(partner) == 1
        assert np.max(np.abs(partner[0].op - ch.op.conj().T)) < 1e-12
