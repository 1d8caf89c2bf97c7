from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from hybrid_aqs.errors import ConfigError, Unphysical
from hybrid_aqs.evolution import evolve_closed, interpolate
from hybrid_aqs.noise import (
    HBAR,
    K_B,
    OMEGA0,
    BathSpec,
    ConstantGenerator,
    NoiseConfig,
    NoiseModel,
    coupling_operator,
    evolve_open,
    forward_rates,
    lamb_shift_function,
    ohmic_density,
    sample_bath_parameters,
    solve_coupling,
    transition_rate,
)
from hybrid_aqs.spin_model import PAULI

US = 1e-6
T_REF = 0.020
QUBIT = np.diag([0.0, 1.0])  # splitting omega0 in internal units


def single_qubit_model(t1=1.0 * US, tphi=1.3 * US, lamb_shift=True):
    return NoiseModel((BathSpec(T1=t1, T_phi=tphi),), lamb_shift=lamb_shift)


def fitted_rate(times, values):
    """Decay rate from a straight-line fit to log(values)."""
    return -np.polyfit(times, np.log(values), 1)[0]


class TestSpectralFunctions:
    def test_ohmic_density_negative(self):
        assert ohmic_density(-1.0, 20.0) == 0.0

    def test_ohmic_density_above_cutoff(self):
        assert ohmic_density(21.0, 20.0) == 0.0

    def test_ohmic_density_inside(self):
        assert ohmic_density(OMEGA0, 20 * OMEGA0) == OMEGA0

    def test_detailed_balance_of_rates(self):
        beta = 0.06
        for w in (0.3, 1.0, 4.0):
            ratio = transition_rate(-w, beta, 20.0) / transition_rate(w, beta, 20.0)
            assert ratio == pytest.approx(math.exp(-beta * w), rel=1e-12)

    def test_zero_frequency_limit(self):
        beta = 0.06
        assert transition_rate(0.0, beta, 20.0) == pytest.approx(transition_rate(1e-7, beta, 20.0), rel=1e-6)

    def test_lamb_shift_matches_direct_principal_value(self):
        from scipy import integrate

        beta, wc = 0.06, 20.0
        for w in (0.5, 1.0, 3.0):
            pv, _ = integrate.quad(lambda x: transition_rate(x, beta, wc), -wc, wc, weight="cauchy", wvar=w, limit=400)
            assert lamb_shift_function(w, beta, wc) == pytest.approx(-pv / (2 * np.pi), rel=1e-3)


class TestCouplingOperator:
    def test_pure_dephasing_direction(self):
        np.testing.assert_allclose(coupling_operator(0.3, 0.0).matrix, 0.3 * PAULI["Z"], atol=1e-16)

    def test_pure_relaxation_direction(self):
        np.testing.assert_allclose(coupling_operator(0.3, np.pi / 2).matrix, 0.3 * PAULI["X"], atol=1e-16)

    def test_zero_coupling(self):
        assert np.max(np.abs(coupling_operator(0.0, 0.7).matrix)) == 0

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            coupling_operator(-0.1, 0.0)


class TestSolveCoupling:
    def test_reference_round_trip(self):
        t1, tphi = 1.0 * US, 1.3 * US
        t2 = 1 / (0.5 / t1 + 1 / tphi)
        lam, alpha = solve_coupling(t1, t2, T_REF, OMEGA0)
        inv_t1, inv_t2 = forward_rates(lam, alpha, T_REF, OMEGA0)
        assert 1 / inv_t1 == pytest.approx(t1, rel=1e-9)
        assert 1 / inv_t2 == pytest.approx(t2, rel=1e-9)

    def test_no_pure_dephasing(self):
        _, alpha = solve_coupling(1.0 * US, 2.0 * US, T_REF, OMEGA0)
        assert alpha == pytest.approx(np.pi / 2, abs=1e-7)

    def test_no_relaxation(self):
        _, alpha = solve_coupling(math.inf, 1.0 * US, T_REF, OMEGA0)
        assert alpha == 0.0

    def test_t2_above_twice_t1(self):
        with pytest.raises(Unphysical):
            solve_coupling(1.0 * US, 2.5 * US, T_REF, OMEGA0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.1, 100.0), st.floats(0.05, 1.0), st.floats(1e-3, 1.0), st.floats(0.1, 10.0))
    def test_round_trip_property(self, t1_us, t2_frac, temp, dq):
        t1 = t1_us * US
        t2 = t2_frac * 2 * t1
        lam, alpha = solve_coupling(t1, t2, temp, dq * OMEGA0)
        inv_t1, inv_t2 = forward_rates(lam, alpha, temp, dq * OMEGA0)
        assert inv_t1 * t1 == pytest.approx(1.0, rel=1e-9)
        assert inv_t2 * t2 == pytest.approx(1.0, rel=1e-9)

    def test_bath_spec_derived_fields(self):
        spec = BathSpec(T1=1.0 * US, T_phi=1.3 * US)
        assert spec.T2 == pytest.approx(1 / (0.5 / US + 1 / (1.3 * US)))
        assert 0 < spec.alpha < np.pi / 2


class TestDecay:
    def test_population_decay_matches_t1(self):
        model = single_qubit_model()
        t1 = model.to_internal_time(1.0 * US)
        beta = HBAR * OMEGA0 / (K_B * T_REF)
        p_eq = 1 / (1 + math.exp(beta))
        gen = ConstantGenerator(QUBIT, model)
        rho = np.diag([0.0, 1.0]).astype(complex)
        times = np.linspace(0.1, 1.5, 15) * t1
        excess = [gen.evolve(rho, t)[1, 1].real - p_eq for t in times]
        assert 1 / fitted_rate(times, excess) == pytest.approx(t1, rel=0.02)

    def test_coherence_decay_matches_t2(self):
        model = single_qubit_model()
        t2 = model.to_internal_time(model.baths[0].T2)
        gen = ConstantGenerator(QUBIT, model)
        rho = np.full((2, 2), 0.5, dtype=complex)
        times = np.linspace(0.1, 1.5, 15) * t2
        coh = [abs(gen.evolve(rho, t)[0, 1]) for t in times]
        assert 1 / fitted_rate(times, coh) == pytest.approx(t2, rel=0.02)

    def test_relaxes_to_boltzmann_populations(self):
        model = single_qubit_model()
        beta = model.beta(0)
        rho = evolve_open(np.diag([1.0, 0.0]).astype(complex), QUBIT, model, 0.0, 40 * model.to_internal_time(US))
        assert rho[1, 1].real / rho[0, 0].real == pytest.approx(math.exp(-beta), rel=0.02)

    def test_decoupled_equals_closed(self, rng):
        model = NoiseModel((BathSpec.decoupled(), BathSpec.decoupled()))
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        path = lambda t: interpolate(a, b, t / 2.0)  # noqa: E731
        rho0 = np.diag([1.0, 0, 0, 0]).astype(complex)
        open_ = evolve_open(rho0, path, model, 0.0, 2.0, 200)
        closed = evolve_closed(rho0, path, 0.0, 2.0, 200)
        trace_distance = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(open_ - closed)))
        assert trace_distance < 1e-9

    def test_trace_and_positivity_along_sweep(self, rng):
        model = NoiseConfig().build(3, rng_seed=7)
        a, b = random_hermitian(rng, 8), random_hermitian(rng, 8)
        rho = np.eye(8, dtype=complex) / 8
        rho[0, 0] += 0.5
        rho /= np.trace(rho)
        path = lambda t: interpolate(a, b, min(t / 10.0, 1.0))  # noqa: E731
        for k in range(10):
            rho = evolve_open(rho, path, model, k, k + 1.0, 20)
            assert abs(np.trace(rho).real - 1) <= 1e-8
            assert np.linalg.eigvalsh(rho)[0] >= -1e-8

    def test_lamb_shift_only_moves_frequencies(self):
        on = ConstantGenerator(QUBIT, single_qubit_model(lamb_shift=True))
        off = ConstantGenerator(QUBIT, single_qubit_model(lamb_shift=False))
        rho = np.diag([0.0, 1.0]).astype(complex)
        np.testing.assert_allclose(on.evolve(rho, 30.0), off.evolve(rho, 30.0), atol=1e-12)
        plus = np.full((2, 2), 0.5, dtype=complex)
        phase_on = np.angle(on.evolve(plus, 30.0)[0, 1])
        phase_off = np.angle(off.evolve(plus, 30.0)[0, 1])
        assert abs(phase_on - phase_off) > 1e-6


class TestSampling:
    def test_deterministic(self):
        assert sample_bath_parameters(11, 3) == sample_bath_parameters(11, 3)

    def test_sample_mean(self):
        t1 = np.array([a for a, _ in sample_bath_parameters(5, 10_000)])
        assert abs(t1.mean() - 1.0 * US) <= 3 * 0.1 * US / np.sqrt(10_000)

    def test_truncated_at_three_sigma(self):
        draws = np.array(sample_bath_parameters(3, 10_000))
        assert np.all(np.abs(draws[:, 0] - US) <= 3 * 0.1 * US + 1e-18)

    def test_zero_spread(self):
        assert sample_bath_parameters(1, 2, t1_sd=0.0, tphi_sd=0.0) == [(1.0 * US, 1.3 * US)] * 2

    def test_noise_config_round_trip(self):
        cfg = NoiseConfig(temperature_mK=15.0, seed=4)
        assert NoiseConfig.from_dict(cfg.to_dict()) == cfg

    def test_noise_config_unknown_key(self):
        with pytest.raises(ConfigError):
            NoiseConfig.from_dict({"T3_us": 1.0})
