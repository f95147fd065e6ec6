import itertools

import numpy as np
import pytest

from blinky_bss.domain import exceptions, model
from blinky_bss.domain.structs import SceneConfig
from blinky_bss.dsp import stft
from blinky_bss.separation import auxiva, linalg
from blinky_bss.service_layer import services
from tests import factories


def rotation(theta: float) -> np.ndarray:
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def leakage(W: np.ndarray, A: np.ndarray) -> float:
    """Smallest off-target to on-target power ratio of the global system W_f A."""
    C = np.abs(W @ A) ** 2
    n_channels = A.shape[0]
    ratios = []
    for perm in itertools.permutations(range(n_channels)):
        mask = np.zeros((n_channels, n_channels), dtype=bool)
        mask[np.arange(n_channels), list(perm)] = True
        ratios.append(float(np.sum(C[:, ~mask]) / np.sum(C[:, mask])))
    return min(ratios)


class TestVariances:
    def test_floor_and_gauss_model(self):
        P = np.array([[0.0, 4.0], [8.0, 12.0]])

        epsilon = auxiva.variance_floor(P, 4)
        R = auxiva.gauss_variances(P, 4, epsilon)

        assert epsilon == pytest.approx(1e-10 * 6.0 / 4)
        np.testing.assert_allclose(R, [[epsilon, 1.0], [2.0, 3.0]])

    def test_cost_rejects_non_positive_variances(self):
        W = np.tile(np.eye(2, dtype=np.complex128), (3, 1, 1))

        with pytest.raises(exceptions.InvalidJointStateError):
            auxiva.auxiva_cost(W, np.ones((2, 4)), np.zeros((2, 4)))


class TestSelectChannels:
    def test_picks_most_powerful_channels_in_order(self):
        data = np.ones((3, 5, 3), dtype=np.complex128) * np.sqrt([1.0, 4.0, 2.0])
        spec = model.Spectrogram(data=data, frame_size=4, hop=2)

        assert auxiva.select_channels(spec, 2) == [1, 2]
        assert auxiva.select_channels(spec, 3) == [1, 2, 0]

    def test_agrees_with_brute_force_ranking(self):
        spec = factories.generate_spectrogram(n_channels=4, seed=6)
        power = np.sum(np.abs(spec.data) ** 2, axis=(0, 1))

        best = max(
            itertools.combinations(range(4), 2), key=lambda pair: float(power[list(pair)].sum())
        )

        assert sorted(auxiva.select_channels(spec, 2)) == sorted(best)

    @pytest.mark.parametrize("n_sources", [0, 3])
    def test_invalid_count_raises(self, n_sources: int):
        spec = factories.generate_spectrogram(n_channels=2)

        with pytest.raises(exceptions.ConfigurationError):
            auxiva.select_channels(spec, n_sources)


class TestAuxIVASeparator:
    def test_zero_iterations_return_input(self):
        spec = factories.generate_spectrogram(n_channels=3, seed=2)

        result = auxiva.AuxIVASeparator(n_iter=0).separate(spec, 2)

        np.testing.assert_array_equal(result.demixed.data, spec.data)
        np.testing.assert_array_equal(
            result.demixing.W, model.DemixingStack.identity(spec.n_freq, 3).W
        )
        assert result.cost_trace == []
        assert result.algorithm is model.Algorithm.AUXIVA
        assert len(result.channels) == 2

    def test_ignores_blinky_data(self):
        spec = factories.generate_spectrogram(seed=3)
        separator = auxiva.AuxIVASeparator(n_iter=2)

        with_blinky = separator.separate(spec, 2, np.ones((3, spec.n_frames)))
        without = separator.separate(spec, 2)

        np.testing.assert_allclose(with_blinky.demixed.data, without.demixed.data)

    def test_separates_instantaneous_rotation(self):
        A = rotation(0.6)
        _, X = factories.instantaneous_mixture(33, 200, A, seed=1)
        spec = model.Spectrogram(data=X, frame_size=64, hop=32)

        result = auxiva.AuxIVASeparator(n_iter=50).separate(spec, 2)

        assert 10 * np.log10(leakage(result.demixing.W, A)) <= -20.0
        assert result.max_normalization_error < 1e-8
        assert len(result.cost_trace) == 50

    @pytest.mark.parametrize("n_iter", [1, 5, 20])
    def test_output_power_stays_normalized(self, n_iter: int):
        spec = factories.generate_spectrogram(frame_size=32, n_frames=40, seed=8)

        result = auxiva.AuxIVASeparator(n_iter=n_iter).run(spec)

        np.testing.assert_allclose(result.variances.mean(axis=1), 1.0, rtol=1e-9)
        np.testing.assert_allclose(
            np.mean(np.abs(result.demixed.data) ** 2, axis=(0, 1)), 1.0, rtol=1e-9
        )

    def test_long_run_on_a_four_microphone_scene(self):
        config = SceneConfig(
            n_sources=2,
            n_mics=4,
            n_blinkies=2,
            rir_length=256,
            rir_decay_ms=20.0,
            seed=0,
            duration_s=1.0,
        )
        mixed = services.simulate(config, frame_size=512)
        spec = stft.analyze(mixed.mic_signals, 512)

        result = auxiva.AuxIVASeparator(n_iter=100).separate(spec, 2)

        assert len(result.cost_trace) == 100
        assert np.all(np.isfinite(result.cost_trace))
        assert np.all(np.isfinite(result.demixing.W))
        np.testing.assert_allclose(result.variances.mean(axis=1), 1.0, rtol=1e-9)
        assert result.max_normalization_error < 1e-8

    def test_separates_after_a_per_bin_premultiply(self):
        A = rotation(0.6)
        _, X = factories.instantaneous_mixture(33, 200, A, seed=1)
        Q = factories.generate_demixing(33, 2, np.random.default_rng(9))
        spec = model.Spectrogram(data=X @ Q.transpose(0, 2, 1), frame_size=64, hop=32)

        result = auxiva.AuxIVASeparator(n_iter=100).separate(spec, 2)

        assert 10 * np.log10(leakage(result.demixing.W, Q @ A)) <= -20.0

    def test_ip_sweep_never_increases_its_surrogate(self):
        spec = factories.generate_spectrogram(frame_size=16, n_frames=40, n_channels=3, seed=4)
        X = spec.data
        W = factories.generate_demixing(spec.n_freq, 3, np.random.default_rng(4))
        epsilon = 1e-10

        for _ in range(5):
            R = auxiva.gauss_variances(linalg.frame_power(linalg.demix(W, X)), spec.n_freq, epsilon)
            before = auxiva.ip_surrogate(W, X, R, epsilon)
            linalg.iterative_projection(W, X, R, epsilon)
            after = auxiva.ip_surrogate(W, X, R, epsilon)
            assert after <= before + 1e-9 * abs(before)

    def test_negative_iterations_raise(self):
        with pytest.raises(exceptions.ConfigurationError):
            auxiva.AuxIVASeparator(n_iter=-1)

    def test_silent_input_raises(self):
        spec = model.Spectrogram(
            data=np.zeros((9, 10, 2), dtype=np.complex128), frame_size=16, hop=8
        )

        with pytest.raises(exceptions.InvalidJointStateError):
            auxiva.AuxIVASeparator(n_iter=3).separate(spec, 2)


class TestAuxivaRun:
    def test_returns_demixed_and_demixing(self):
        spec = factories.generate_spectrogram(seed=7)

        demixed, demixing = auxiva.auxiva_run(spec, 3)

        np.testing.assert_allclose(demixed.data, linalg.demix(demixing.W, spec.data), atol=1e-12)
