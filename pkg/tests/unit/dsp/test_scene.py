import math
from dataclasses import replace

import numpy as np
import pytest

from blinky_bss.domain import exceptions, model
from blinky_bss.domain.structs import SceneConfig
from blinky_bss.dsp import scene, stft
from tests import factories


def make_sources(config: SceneConfig, seed: int = 0) -> list[model.TimeSignal]:
    rng = np.random.default_rng(seed)
    n_samples = int(round(config.duration_s * 16000))
    return [
        model.TimeSignal(samples=scene.speech_like_source(n_samples, 16000, rng))
        for _ in range(config.n_sources)
    ]


def make_scene(config: SceneConfig, frame_size: int = 512) -> scene.Scene:
    return scene.mix(
        config, make_sources(config), np.random.default_rng(config.seed), frame_size
    )


class TestGenerateRir:
    def test_vanishing_decay_gives_unit_impulse(self, rng: np.random.Generator):
        rir = scene.generate_rir(1e-6, 512, 0, rng)

        assert rir[0] == 1.0
        assert float(np.sum(rir[1:] ** 2)) <= 1e-6 * float(np.sum(rir**2))

    def test_leading_tap_sits_at_delay(self, rng: np.random.Generator):
        rir = scene.generate_rir(150.0, 2048, 17, rng)

        assert not np.any(rir[:17])
        assert rir[17] == 1.0

    def test_is_deterministic_for_a_seed(self):
        first = scene.generate_rir(150.0, 2048, 5, np.random.default_rng(7))
        second = scene.generate_rir(150.0, 2048, 5, np.random.default_rng(7))

        np.testing.assert_array_equal(first, second)

    def test_envelope_reaches_minus_60_db_at_decay_time(self):
        decay_ms, length = 300.0, 4800
        rir = scene.generate_rir(decay_ms, length, 0, np.random.default_rng(0))

        lags = np.arange(1, length)
        slope, _ = np.polyfit(lags, np.log(rir[1:] ** 2), 1)
        estimated_ms = 2 * math.log(1000.0) / -slope / 16000 * 1000

        assert estimated_ms == pytest.approx(decay_ms, rel=0.2)

    @pytest.mark.parametrize("decay_ms", [0.0, -10.0])
    def test_non_positive_decay_raises(self, decay_ms: float, rng: np.random.Generator):
        with pytest.raises(exceptions.ConfigurationError):
            scene.generate_rir(decay_ms, 512, 0, rng)

    def test_delay_outside_filter_raises(self, rng: np.random.Generator):
        with pytest.raises(exceptions.ConfigurationError):
            scene.generate_rir(100.0, 64, 64, rng)


class TestSpeechLikeSource:
    def test_has_unit_power_and_requested_length(self, rng: np.random.Generator):
        x = scene.speech_like_source(32000, 16000, rng)

        assert x.shape == (32000,)
        assert float(np.mean(x**2)) == pytest.approx(1.0)

    def test_is_gated(self, rng: np.random.Generator):
        x = scene.speech_like_source(64000, 16000, rng)

        frame_power = np.mean(x[: 64000 // 160 * 160].reshape(-1, 160) ** 2, axis=1)
        assert np.min(frame_power) < 1e-3 * np.max(frame_power)

    def test_speech_shaped_noise_has_unit_power(self, rng: np.random.Generator):
        x = scene.speech_shaped_noise(16000, 16000, rng)

        assert float(np.mean(x**2)) == pytest.approx(1.0)


class TestCalibrate:
    def test_solves_level_targets(self):
        config = SceneConfig(variances=(0.25, 1.0), snr_db=60.0, sinr_db=10.0)

        noise_variance, interferer_variance = scene.calibrate(config)

        assert noise_variance == pytest.approx(6.25e-7, rel=1e-12)
        assert interferer_variance == pytest.approx((0.125 - 6.25e-7) / 10, rel=1e-12)
        assert interferer_variance == pytest.approx(1.249999e-2, rel=1e-6)

    def test_infinite_sinr_has_no_interference(self):
        config = SceneConfig(n_interferers=0, sinr_db=None)

        _, interferer_variance = scene.calibrate(config)

        assert interferer_variance == 0.0

    def test_infeasible_sinr_raises(self):
        config = SceneConfig(snr_db=0.0, sinr_db=10.0)

        with pytest.raises(exceptions.InfeasibleSINRError, match="infeasible SINR"):
            scene.calibrate(config)


class TestBlinkyDistances:
    @pytest.fixture
    def config(self) -> SceneConfig:
        return SceneConfig(n_sources=3, n_mics=3, n_blinkies=7, n_interferers=4)

    def test_each_blinky_is_closest_to_its_own_target(
        self, config: SceneConfig, rng: np.random.Generator
    ):
        distances = scene.blinky_distances(config, rng)

        assert distances.shape == (7, 3 + 4)
        np.testing.assert_array_equal(
            np.argmin(distances[:, :3], axis=1), np.arange(7) % 3
        )
        near = distances[np.arange(7), np.arange(7) % 3]
        assert np.all((near >= scene.BLINKY_NEAR_M[0]) & (near <= scene.BLINKY_NEAR_M[1]))

    def test_interferers_are_farther_than_every_target(
        self, config: SceneConfig, rng: np.random.Generator
    ):
        distances = scene.blinky_distances(config, rng)

        assert distances[:, 3:].min() > distances[:, :3].max()

    def test_without_interferers(self, rng: np.random.Generator):
        config = SceneConfig(n_interferers=0, sinr_db=None, n_blinkies=2)

        assert scene.blinky_distances(config, rng).shape == (2, 2)


class TestMix:
    @pytest.fixture
    def config(self) -> SceneConfig:
        return SceneConfig(
            n_sources=2,
            n_mics=3,
            n_blinkies=4,
            n_interferers=10,
            rir_length=512,
            rir_decay_ms=50.0,
            seed=11,
            duration_s=4.0,
        )

    def test_measured_ratios_match_targets(self, config: SceneConfig):
        mixed = make_scene(config)

        snr_db, sinr_db = scene.measure_ratios(mixed)

        assert snr_db == pytest.approx(60.0, abs=0.2)
        assert sinr_db == pytest.approx(10.0, abs=0.2)

    def test_source_images_have_configured_variances(self, config: SceneConfig):
        mixed = make_scene(config)

        powers = [float(np.mean(image.samples[:, 0] ** 2)) for image in mixed.images]

        assert powers == pytest.approx([0.25, 1.0], rel=1e-9)

    def test_microphones_sum_images_interference_and_noise(self, config: SceneConfig):
        mixed = make_scene(config)

        expected = sum(image.samples for image in mixed.images) + mixed.interference.samples

        np.testing.assert_allclose(mixed.mic_signals.samples, expected, atol=1e-12)
        assert mixed.mic_signals.samples.shape == (64000, 3)

    def test_references_are_images_at_first_microphone(self, config: SceneConfig):
        mixed = make_scene(config)

        for reference, image in zip(mixed.references, mixed.images):
            np.testing.assert_array_equal(reference.samples[:, 0], image.samples[:, 0])

    def test_blinky_power_is_nonnegative_and_framed(self, config: SceneConfig):
        mixed = make_scene(config, frame_size=512)

        assert mixed.blinky_power.shape == (4, stft.frame_count(64000, 512))
        assert np.all(mixed.blinky_power >= 0)
        assert np.all(np.isfinite(mixed.blinky_power))

    def test_is_deterministic_for_a_seed(self, config: SceneConfig):
        first = make_scene(config)
        second = make_scene(config)

        np.testing.assert_array_equal(first.mic_signals.samples, second.mic_signals.samples)
        np.testing.assert_array_equal(first.blinky_power, second.blinky_power)

    def test_other_seed_changes_mixture_but_not_levels(self, config: SceneConfig):
        first = make_scene(config)
        second = make_scene(replace(config, seed=12))

        assert not np.array_equal(first.mic_signals.samples, second.mic_signals.samples)
        assert first.noise_variance == second.noise_variance
        assert first.interferer_variance == second.interferer_variance

    def test_infinite_sinr_adds_noise_only(self, config: SceneConfig):
        mixed = make_scene(replace(config, n_interferers=0, sinr_db=None))

        snr_db, _ = scene.measure_ratios(mixed)

        assert not np.any(mixed.interferers.samples)
        assert snr_db == pytest.approx(60.0, abs=0.2)

    def test_wrong_source_count_raises(self, config: SceneConfig):
        sources = make_sources(config)[:1]

        with pytest.raises(exceptions.ConfigurationError):
            scene.mix(config, sources, np.random.default_rng(0))

    def test_short_sources_raise(self, config: SceneConfig):
        sources = [
            model.TimeSignal(samples=source.samples[:1000]) for source in make_sources(config)
        ]

        with pytest.raises(exceptions.SignalTooShortError, match="signal too short"):
            scene.mix(config, sources, np.random.default_rng(0))

    def test_blinkies_follow_their_own_target(self):
        config = SceneConfig(
            n_sources=2,
            n_mics=2,
            n_blinkies=2,
            n_interferers=0,
            sinr_db=None,
            rir_length=256,
            rir_decay_ms=20.0,
            seed=4,
            duration_s=2.0,
        )
        sources = factories.alternating_sources(32000, 4096, floor=1e-3, seed=1)

        mixed = scene.mix(config, sources, np.random.default_rng(config.seed), 512)

        energies = [stft.frame_energies(source, 512)[0] for source in sources]
        first_only = energies[0] > 100 * energies[1]
        second_only = energies[1] > 100 * energies[0]
        ratio = mixed.blinky_power[0] / mixed.blinky_power[1]
        assert np.median(ratio[first_only]) > 3.0
        assert np.median(ratio[second_only]) < 1 / 3.0


class TestBlinkySignals:
    def test_silence_gives_zero_power(self):
        U = scene.blinky_signals(model.TimeSignal(samples=np.zeros((4096, 3))), 512)

        assert U.shape == (3, stft.frame_count(4096, 512))
        assert not np.any(U)

    def test_identical_inputs_give_identical_rows(self, rng: np.random.Generator):
        x = rng.standard_normal(8000)

        U = scene.blinky_signals(model.TimeSignal(samples=np.stack([x, x], axis=1)), 256)

        np.testing.assert_allclose(U[0], U[1], rtol=1e-14)

    def test_equals_summed_squared_stft_magnitudes(self, rng: np.random.Generator):
        signal = model.TimeSignal(samples=rng.standard_normal((8000, 2)))

        U = scene.blinky_signals(signal, 512)

        expected = np.sum(np.abs(stft.analyze(signal, 512).data) ** 2, axis=0).T
        np.testing.assert_array_equal(U, expected)

    def test_single_frame_matches_time_domain_energy(self):
        x = np.zeros(1024)
        x[256:768] = 1.0
        signal = model.TimeSignal(samples=x)

        U = scene.blinky_signals(signal, 512)

        expected = stft.parseval_constant(512) * stft.frame_energies(signal, 512)
        np.testing.assert_allclose(U, expected, rtol=1e-10, atol=1e-10)
