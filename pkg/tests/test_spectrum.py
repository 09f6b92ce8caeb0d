import math

import numpy as np
import pytest
from scipy.special import gammainc

from oamspdc import (
    AiryPump,
    DegenerateInputError,
    DivergenceError,
    GaussianPump,
    NormalizationError,
    SetupParams,
    SpiralSpectrum,
    TabulatedPump,
    TruncatedExponentialPump,
    WindowError,
    crosstalk_visibility,
    exponential_spectrum,
    gaussian_spectrum,
    numerical_spectrum,
    overlap_amplitude,
    schmidt_number,
)


@pytest.fixture
def paper_params():
    return SetupParams.from_ratios(2.4, 0.31)


class TestSetupParams:
    def test_ratios_are_derived_exactly(self):
        p = SetupParams(w_p=2.0, w_si=0.8, w_f=5.0)
        assert p.gamma == 2.0 / 0.8
        assert p.eta == 2.0 / 5.0

    def test_from_ratios_round_trip(self):
        p = SetupParams.from_ratios(2.4, 0.31, w_p=3.0)
        assert p.gamma == pytest.approx(2.4, rel=1e-15)
        assert p.eta == pytest.approx(0.31, rel=1e-15)

    @pytest.mark.parametrize("kwargs", [
        {"w_p": 0.0, "w_si": 1.0, "w_f": 1.0},
        {"w_p": 1.0, "w_si": -1.0, "w_f": 1.0},
        {"w_p": 1.0, "w_si": 1.0, "w_f": 0.0},
    ])
    def test_rejects_nonpositive_waists(self, kwargs):
        with pytest.raises(ValueError):
            SetupParams(**kwargs)


class TestSpiralSpectrumType:
    def test_window_must_bracket_zero(self):
        with pytest.raises(WindowError):
            SpiralSpectrum(1, 5, np.ones(5) / math.sqrt(5))
        with pytest.raises(WindowError):
            SpiralSpectrum(-5, -1, np.ones(5) / math.sqrt(5))

    def test_normalization_flag_is_checked(self):
        with pytest.raises(NormalizationError):
            SpiralSpectrum(-1, 1, np.array([1.0, 1.0, 1.0]), normalized=True)

    def test_negative_amplitudes_rejected(self):
        with pytest.raises(ValueError):
            SpiralSpectrum(-1, 1, np.array([0.5, -0.5, 0.5]), normalized=False)

    def test_amplitude_lookup(self):
        s = SpiralSpectrum(-1, 1, np.array([0.6, math.sqrt(1 - 2 * 0.36), 0.6]))
        assert s.amplitude(-1) == 0.6
        with pytest.raises(WindowError):
            s.amplitude(2)


class TestGaussianSpectrum:
    def test_flat_in_large_gamma_limit(self):
        # gamma -> inf makes the geometric ratio 1: 11 equal probabilities
        spec = gaussian_spectrum(SetupParams.from_ratios(1e6, 0.31), -5, 5)
        assert np.max(np.abs(spec.probabilities() - 1.0 / 11.0)) < 1e-6

    def test_amplitude_ratio_is_geometric(self):
        # gamma=2, eta=0.31: ratio 2g^2/(2g^2+2e^2+1) = 8/9.1922
        spec = gaussian_spectrum(SetupParams.from_ratios(2.0, 0.31), -1, 1)
        ratio = 8.0 / (8.0 + 2 * 0.31**2 + 1.0)
        assert spec.amplitude(1) / spec.amplitude(0) == pytest.approx(ratio, rel=1e-12)
        assert spec.amplitude(1) ** 2 / spec.amplitude(0) ** 2 == pytest.approx(
            ratio**2, rel=1e-12
        )

    def test_peaks_at_zero_and_even(self, paper_params):
        spec = gaussian_spectrum(paper_params, -8, 8)
        amps = spec.amplitudes
        assert np.argmax(amps) == 8
        assert np.allclose(amps, amps[::-1], rtol=0, atol=0)

    def test_normalized(self, paper_params):
        spec = gaussian_spectrum(paper_params, -12, 12)
        assert abs(np.sum(spec.probabilities()) - 1.0) < 1e-12

    def test_untruncated_schmidt_number(self, paper_params):
        # the aperture-free Gaussian closed form at the measured settings
        assert schmidt_number(gaussian_spectrum(paper_params, -12, 12)) == pytest.approx(
            17.0222, abs=1e-3
        )

    def test_window_error(self, paper_params):
        with pytest.raises(WindowError):
            gaussian_spectrum(paper_params, 3, -3)


class TestExponentialSpectrum:
    def test_flat_first_factor_at_optimum(self):
        # a = 2 eta^2 kills the geometric factor: amplitudes decay only
        # through the aperture bracket P(|l|+1, T)
        eta = 0.31
        params = SetupParams.from_ratios(3.0, eta)
        a = 2 * eta**2
        t = 2 * 3.0**2
        spec = exponential_spectrum(a, params, -6, 6)
        for ell in range(7):
            expected = gammainc(ell + 1, t) / gammainc(1, t)
            assert spec.amplitude(ell) / spec.amplitude(0) == pytest.approx(
                expected, rel=1e-10
            )

    def test_paper_schmidt_number(self, paper_params):
        spec = exponential_spectrum(0.10, paper_params, -12, 12)
        assert schmidt_number(spec) == pytest.approx(20.7, abs=1.0)

    def test_truncated_gaussian_member(self, paper_params):
        # a = -1 with the aperture reproduces the Gaussian-pump K of 15
        spec = exponential_spectrum(-1.0, paper_params, -12, 12)
        assert schmidt_number(spec) == pytest.approx(15.0, abs=1.0)

    def test_aperture_bracket_against_direct_evaluation(self):
        # a=-1, gamma=2, eta=0.31, l=3: amplitude ratio equals the Gaussian
        # geometric factor times the bracket ratio; evaluate the bracket
        # Gamma(4, T)/3! directly from its finite sum
        params = SetupParams.from_ratios(2.0, 0.31)
        t = 8.0 + 2 * 0.31**2 + 1.0
        spec = exponential_spectrum(-1.0, params, -3, 3)
        x = 8.0 / t
        upper_over_factorial = math.exp(-t) * (1 + t + t**2 / 2 + t**3 / 6)
        bracket3 = 1.0 - upper_over_factorial
        bracket0 = 1.0 - math.exp(-t)
        assert bracket3 == pytest.approx(0.981477, abs=1e-6)
        assert spec.amplitude(3) / spec.amplitude(0) == pytest.approx(
            x**3 * bracket3 / bracket0, rel=1e-12
        )

    def test_divergence_error_names_parameters(self):
        params = SetupParams.from_ratios(1.0, 0.31)
        with pytest.raises(DivergenceError, match="gamma"):
            exponential_spectrum(3.0, params, -3, 3)

    def test_even_parity(self, paper_params):
        spec = exponential_spectrum(0.3, paper_params, -9, 9)
        assert np.allclose(spec.amplitudes, spec.amplitudes[::-1], rtol=0, atol=0)

    def test_log_space_survives_extreme_tilt(self):
        # T near zero: the geometric factor alone overflows, the bracket
        # alone underflows; the assembled spectrum must still normalize
        params = SetupParams.from_ratios(2.4, 0.31)
        a = 2 * 2.4**2 + 2 * 0.31**2 - 1e-4
        spec = exponential_spectrum(a, params, -50, 50)
        assert abs(np.sum(spec.probabilities()) - 1.0) < 1e-12
        # strong tilt pushes the peak off center (a > 2 eta^2 regime)
        assert spec.amplitude(0) < np.max(spec.amplitudes)
        assert np.all(np.isfinite(spec.amplitudes))


class TestOverlapAmplitude:
    @pytest.mark.parametrize("gamma,eta,ell", [
        (2.0, 0.31, 1), (2.4, 0.31, 5), (0.7, 0.9, 3), (4.0, 0.15, 12),
    ])
    def test_gaussian_ratio_matches_closed_form(self, gamma, eta, ell):
        params = SetupParams.from_ratios(gamma, eta)
        x = 2 * gamma**2 / (2 * gamma**2 + 2 * eta**2 + 1)
        ratio = overlap_amplitude(GaussianPump(), ell, params) / overlap_amplitude(
            GaussianPump(), 0, params
        )
        assert ratio == pytest.approx(x**ell, rel=1e-8)

    def test_truncated_exponential_matches_closed_form(self):
        params = SetupParams.from_ratios(2.0, 0.31)
        pump = TruncatedExponentialPump(0.19)
        closed = exponential_spectrum(0.19, params, -8, 8)
        raw = np.array([overlap_amplitude(pump, ell, params) for ell in range(9)])
        raw = raw / math.sqrt(np.sum(np.concatenate([raw[::-1], raw[1:]]) ** 2))
        for ell in range(9):
            assert raw[ell] == pytest.approx(closed.amplitude(ell), abs=1e-8)

    def test_tabulated_gaussian_matches_gaussian(self, paper_params):
        r = np.linspace(0.0, 6.0, 4096)
        pump = TabulatedPump(r, np.exp(-(r**2)))
        tab = numerical_spectrum(pump, paper_params, -12, 12)
        ref = gaussian_spectrum(paper_params, -12, 12)
        assert np.max(np.abs(tab.amplitudes - ref.amplitudes)) < 1e-6


class TestNumericalSpectrum:
    def test_matches_gaussian_closed_form_pointwise(self, paper_params):
        num = numerical_spectrum(GaussianPump(), paper_params, -12, 12)
        ref = gaussian_spectrum(paper_params, -12, 12)
        assert np.max(np.abs(num.amplitudes - ref.amplitudes)) < 1e-8

    def test_airy_pump_regression(self, paper_params):
        spec = numerical_spectrum(AiryPump(bessel_order=1), paper_params, -12, 12)
        assert abs(np.sum(spec.probabilities()) - 1.0) < 1e-12
        # first computation locked: amplitudes at l = 0..3
        locked = [0.6712865711745467, 0.4206901429310735, 0.23944227651586894,
                  0.1121980943887988]
        for ell, expected in enumerate(locked):
            assert spec.amplitude(ell) == pytest.approx(expected, rel=1e-7)

    def test_zero_pump_is_degenerate(self, paper_params):
        r = np.linspace(0.0, 4.0, 64)
        with pytest.raises(DegenerateInputError):
            numerical_spectrum(TabulatedPump(r, np.zeros_like(r)), paper_params, -3, 3)

    def test_parity(self, paper_params):
        spec = numerical_spectrum(TruncatedExponentialPump(0.10), paper_params, -6, 6)
        assert np.allclose(spec.amplitudes, spec.amplitudes[::-1], rtol=0, atol=0)

    def test_closed_form_consistency_random_sample(self):
        # small randomized version of the acceptance sweep
        rng = np.random.default_rng(5)
        for _ in range(10):
            gamma = rng.uniform(0.5, 5.0)
            eta = rng.uniform(0.1, 1.0)
            params = SetupParams.from_ratios(gamma, eta)
            a_hi = min(1.0, 2 * gamma**2 + 2 * eta**2 - 0.1)
            a = rng.uniform(-3.0, a_hi)
            num = numerical_spectrum(TruncatedExponentialPump(a), params, -20, 20)
            ref = exponential_spectrum(a, params, -20, 20)
            assert np.max(np.abs(num.amplitudes - ref.amplitudes)) < 1e-8


class TestSchmidtNumber:
    def test_uniform_gives_window_size(self):
        d = 7
        spec = SpiralSpectrum(-3, 3, np.ones(d) / math.sqrt(d))
        assert schmidt_number(spec) == pytest.approx(d, rel=1e-14)

    def test_single_mode_gives_one(self):
        amps = np.zeros(7)
        amps[3] = 1.0
        assert schmidt_number(SpiralSpectrum(-3, 3, amps)) == pytest.approx(1.0)

    def test_requires_normalized(self):
        spec = SpiralSpectrum(-1, 1, np.ones(3), normalized=False)
        with pytest.raises(NormalizationError):
            schmidt_number(spec)

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            amps = rng.uniform(0.0, 1.0, size=9)
            spec = SpiralSpectrum(-4, 4, amps, normalized=False).normalize()
            k = schmidt_number(spec)
            assert 1.0 - 1e-12 <= k <= 9.0 + 1e-12


class TestCrosstalkVisibility:
    def test_diagonal_matrix_is_one(self):
        assert crosstalk_visibility(np.diag([3.0, 1.0, 2.0, 5.0])) == 1.0

    def test_paper_style_grid(self):
        # 25x25, unit diagonal, both first off-diagonals 0.1:
        # 1 - 48 * 0.01 / 25 = 0.9808
        c = np.eye(25) + 0.1 * (np.eye(25, k=1) + np.eye(25, k=-1))
        assert crosstalk_visibility(c) == pytest.approx(0.9808, rel=1e-12)

    def test_zero_diagonal_raises(self):
        with pytest.raises(DegenerateInputError):
            crosstalk_visibility(np.eye(4, k=1))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            crosstalk_visibility(np.ones((2, 2)))
        with pytest.raises(ValueError):
            crosstalk_visibility(np.ones((3, 4)))
