import math

import numpy as np
import pytest
import scipy.linalg
import scipy.special

from qthermo.baths import BathSpec
from qthermo.floquet import (
    CircularlyDrivenQubit,
    ModulatedGapQubit,
    ModulatedLadder,
    build_floquet_generator,
    floquet_decompose,
    floquet_heat_currents,
    harmonic_decompose,
    limit_cycle_laws,
    reconstruction_residual,
)
from qthermo.lindblad import build_davies, heat_currents, stationary_state
from qthermo.operators import (
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    Operator,
    cp_check,
    matexp,
    random_density,
    trace_distance,
    unvec,
    vec,
)

SX = Operator.hermitian(PAULI_X)


def unit_bath(label="u", gamma=1.0):
    return BathSpec(label=label, temperature=math.inf, form_factor="flat",
                    gamma=gamma, cutoff=100.0)


def two_bath_machine(omega0=1.0, lam=0.6, Omega=0.45, t_c=1.2, t_h=2.0,
                     grid=512, gamma_c=0.1, gamma_h=0.05):
    sched = ModulatedGapQubit(omega0=omega0, amplitude=lam, big_omega=Omega)
    dec = floquet_decompose(sched, sched.tau, grid)
    cold = BathSpec(label="cold", temperature=t_c, form_factor="flat",
                    gamma=gamma_c, cutoff=0.7 * omega0)
    hot = BathSpec(label="hot", temperature=t_h, form_factor="power",
                   exponent=2.0, gamma=gamma_h, cutoff=10.0)
    channels = []
    for b in (hot, cold):
        channels.extend(harmonic_decompose(dec, SX, 8, b))
    gen = build_floquet_generator(channels, dec.h_av, {"hot": hot, "cold": cold})
    return sched, dec, channels, gen


class TestDecomposition:
    def test_constant_hamiltonian(self):
        sched = ModulatedGapQubit(omega0=0.8, amplitude=0.0, big_omega=2.0)
        dec = floquet_decompose(sched, sched.tau, 128)
        assert np.max(np.abs(dec.h_av.mat - 0.4 * PAULI_Z)) < 1e-10
        assert np.max(np.abs(dec.up_grid - np.eye(2))) < 1e-9

    def test_circular_driving_closed_form(self):
        # oracle: U(tau) = exp(-i pi sigma_z) exp(-i H_rot tau) with
        # H_rot = (delta sigma_z + eps sigma_x)/2 from the rotating frame
        sched = CircularlyDrivenQubit(omega0=1.0, eps=0.4, big_omega=1.7)
        dec = floquet_decompose(sched, sched.tau, 800)
        delta = sched.omega0 - sched.big_omega
        h_rot = 0.5 * (delta * PAULI_Z + sched.eps * PAULI_X)
        u_exact = scipy.linalg.expm(-1j * math.pi * PAULI_Z) @ scipy.linalg.expm(
            -1j * h_rot * sched.tau
        )
        assert np.max(np.abs(dec.monodromy.mat - u_exact)) < 1e-9
        # quasi-energies: fold the analytic eigenphases of u_exact
        phases = np.angle(np.linalg.eigvals(u_exact))
        expected = np.sort(-phases / sched.tau)
        got = np.sort(np.linalg.eigvalsh(dec.h_av.mat))
        assert np.allclose(got, expected, atol=1e-9)

    def test_grid_self_convergence(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.6, big_omega=0.45)
        h1 = floquet_decompose(sched, sched.tau, 200).h_av.mat
        h2 = floquet_decompose(sched, sched.tau, 400).h_av.mat
        assert np.max(np.abs(h1 - h2)) <= 1e-8

    def test_monodromy_invariants(self):
        sched = CircularlyDrivenQubit(omega0=1.0, eps=0.3, big_omega=2.3)
        dec = floquet_decompose(sched, sched.tau, 400)
        u_tau = dec.monodromy.mat
        rebuilt = scipy.linalg.expm(-1j * dec.h_av.mat * dec.tau)
        assert np.max(np.abs(u_tau - rebuilt)) < 1e-9

    def test_branch_cut_rejected(self):
        # omega0 = Omega puts the monodromy eigenvalues at -1, on the cut
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.0, big_omega=1.0)
        with pytest.raises(ValueError, match="branch"):
            floquet_decompose(sched, sched.tau, 128)


class TestHarmonics:
    def test_undriven_reduces_to_static_lines(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.0, big_omega=0.45)
        dec = floquet_decompose(sched, sched.tau, 256)
        chans = harmonic_decompose(dec, SX, 8, unit_bath())
        freqs = sorted(ch.omega for ch in chans)
        assert np.allclose(freqs, [-1.0, 1.0], atol=1e-9)

    def test_bessel_weights(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.6, big_omega=0.45)
        dec = floquet_decompose(sched, sched.tau, 512)
        chans = harmonic_decompose(dec, SX, 8, unit_bath())
        z = sched.amplitude / sched.big_omega
        checked = 0
        for ch in chans:
            if ch.omega <= 0:
                continue
            # a positive line sits at omega0 - k Omega (lowering family) or
            # at k Omega - omega0 (raising family); pick the integer k
            k_lower = (sched.omega0 - ch.omega) / sched.big_omega
            k_raise = (sched.omega0 + ch.omega) / sched.big_omega
            if abs(k_lower - round(k_lower)) < 1e-6:
                k = round(k_lower)
            else:
                assert abs(k_raise - round(k_raise)) < 1e-6
                k = round(k_raise)
            expected = abs(scipy.special.jv(k, z))
            if expected < 1e-7:
                continue
            assert np.linalg.norm(ch.op) == pytest.approx(expected, rel=1e-6)
            checked += 1
        assert checked >= 5

    def test_circular_three_lines(self):
        # the sigma_+ part of a circularly driven qubit splits into exactly
        # three lines in the rotating frame
        sched = CircularlyDrivenQubit(omega0=1.0, eps=0.4, big_omega=1.7)
        dec = floquet_decompose(sched, sched.tau, 800)
        chans = harmonic_decompose(dec, SX, 6, unit_bath())
        omega_r = sched.rotating_gap()
        expected = sorted(
            [sched.big_omega - omega_r, sched.big_omega, sched.big_omega + omega_r]
        )
        positive = sorted(ch.omega for ch in chans if ch.omega > 0)
        assert np.allclose(positive, expected, atol=1e-8)

    def test_reconstruction_residual(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.6, big_omega=0.45)
        dec = floquet_decompose(sched, sched.tau, 512)
        chans = harmonic_decompose(dec, SX, 12, unit_bath())
        assert reconstruction_residual(dec, SX, chans) <= 1e-8

    def test_insufficient_qmax_rejected_with_tail(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=1.8, big_omega=0.45)
        dec = floquet_decompose(sched, sched.tau, 512)
        with pytest.raises(ValueError, match="weight"):
            harmonic_decompose(dec, SX, 3, unit_bath())


class TestGeneratorAndLaws:
    def test_zero_amplitude_matches_davies(self):
        sched, dec, channels, gen = two_bath_machine(lam=0.0)
        rep = limit_cycle_laws(gen, channels)
        h0 = Operator.hermitian(0.5 * PAULI_Z)
        cold = BathSpec(label="cold", temperature=1.2, form_factor="flat",
                        gamma=0.1, cutoff=0.7)
        hot = BathSpec(label="hot", temperature=2.0, form_factor="power",
                       exponent=2.0, gamma=0.05, cutoff=10.0)
        gd = build_davies(h0, [(SX, hot), (SX, cold)])
        jd = heat_currents(gd, stationary_state(gd))
        for k in jd:
            assert abs(rep.currents[k] - jd[k]) <= 1e-8

    def test_cp_of_propagator(self):
        _, _, channels, gen = two_bath_machine()
        for t in (0.1, 1.0, 10.0):
            ok, mineig = cp_check(matexp(gen.liouvillian(), t))
            assert ok and mineig >= -1e-9

    def test_limit_cycle_laws_at_refrigerator_point(self):
        _, _, channels, gen = two_bath_machine(t_c=1.2, t_h=2.0)
        rep = limit_cycle_laws(gen, channels)
        assert rep.currents["cold"] > 0
        assert rep.regime == "refrigerator"
        assert rep.second_law_value <= 1e-9
        assert rep.first_law_residual <= 1e-8
        assert rep.power < 0  # refrigeration consumes drive power

    def test_regime_flip_keeps_second_law(self):
        _, _, ch1, gen1 = two_bath_machine(t_c=1.2)
        _, _, ch2, gen2 = two_bath_machine(t_c=0.9)
        r1 = limit_cycle_laws(gen1, ch1)
        r2 = limit_cycle_laws(gen2, ch2)
        assert r1.currents["cold"] > 0 > r2.currents["cold"]
        assert r1.second_law_value <= 1e-9
        assert r2.second_law_value <= 1e-9

    def test_limit_cycle_reconstruction(self, rng):
        sched, dec, channels, gen = two_bath_machine(gamma_c=0.4, gamma_h=0.3)
        rho0 = stationary_state(gen)
        lmat = gen.liouvillian().mat
        rho = random_density(2, rng)
        prop = scipy.linalg.expm(lmat * 50 * dec.tau)
        out = unvec(prop @ vec(rho.mat), 2)
        h_av = dec.h_av.mat
        u = scipy.linalg.expm(-1j * h_av * 50 * dec.tau)
        final = DensityMatrix(u @ ((out + out.conj().T) / 2) @ u.conj().T)
        # at period boundaries the periodic part is the identity, so the
        # limit cycle state is the dressed stationary state itself
        assert trace_distance(final, rho0) <= 1e-6

    def test_undriven_single_bath_zero_current(self):
        sched = ModulatedGapQubit(omega0=1.0, amplitude=0.0, big_omega=0.45)
        dec = floquet_decompose(sched, sched.tau, 256)
        bath = BathSpec(label="b", temperature=1.0, form_factor="ohmic",
                        gamma=0.2, cutoff=10.0)
        chans = harmonic_decompose(dec, SX, 8, bath)
        gen = build_floquet_generator(chans, dec.h_av, {"b": bath})
        rep = limit_cycle_laws(gen, chans)
        assert abs(rep.currents["b"]) < 1e-12
        assert abs(rep.power) < 1e-12

    def test_driven_ladder_second_law(self):
        sched = ModulatedLadder(omega1=1.0, omega2=1.55, amplitude=0.3,
                                big_omega=0.6)
        dec = floquet_decompose(sched, sched.tau, 512)
        lower = Operator.hermitian(np.array(
            [[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex))
        upper = Operator.hermitian(np.array(
            [[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex))
        cold = BathSpec(label="cold", temperature=0.8, form_factor="ohmic",
                        gamma=0.2, cutoff=10.0)
        hot = BathSpec(label="hot", temperature=2.5, form_factor="ohmic",
                       gamma=0.2, cutoff=10.0)
        channels = harmonic_decompose(dec, lower, 6, cold)
        channels += harmonic_decompose(dec, upper, 6, hot)
        gen = build_floquet_generator(channels, dec.h_av,
                                      {"cold": cold, "hot": hot})
        rep = limit_cycle_laws(gen, channels)
        assert rep.second_law_value <= 1e-9
        assert rep.first_law_residual <= 1e-8

    def test_omega_av_zero_heat_current_rejected(self):
        # circular driving with a transverse coupling has dressed-diagonal
        # weight oscillating at the drive frequency: channels at
        # omega_q = q Omega with omega_av = 0, whose heat-current weight
        # is undefined
        sched = CircularlyDrivenQubit(omega0=1.0, eps=0.4, big_omega=1.7)
        dec = floquet_decompose(sched, sched.tau, 512)
        bath = unit_bath("b")
        chans = harmonic_decompose(dec, SX, 6, bath)
        assert any(abs(c.omega_av) < 1e-12 and abs(c.omega) > 1e-12 for c in chans)
        gen = build_floquet_generator(chans, dec.h_av, {"b": bath})
        rho0 = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError, match="omega_av = 0"):
            floquet_heat_currents(gen, chans, rho0)
