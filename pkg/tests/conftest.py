import pytest

from avqfuse.synth import DistortionScenario, GeneratorSpec, generate_clip


@pytest.fixture(scope="session")
def gen_spec():
    return GeneratorSpec()


@pytest.fixture(scope="session")
def tiny_batch(gen_spec):
    """Two deterministic clips with distinct degradation regimes."""
    return [
        generate_clip(DistortionScenario("both", video_severity=0.55, audio_severity=0.35, seed=90_000_001), gen_spec),
        generate_clip(DistortionScenario("video_only", video_severity=0.8, seed=90_000_002), gen_spec),
    ]


def make_clips(spec, scenarios):
    return [generate_clip(s, spec) for s in scenarios]


@pytest.fixture(scope="session")
def small_spec():
    """Reduced dims keep full-model finite-difference sweeps fast."""
    return GeneratorSpec(channels=6, height=2, width=2, audio_dim=4, frames=4, artifact_kinds=5)
