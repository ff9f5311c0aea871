import pytest
from hypothesis import HealthCheck, settings

# Numeric property tests routinely exceed hypothesis' default deadline.
settings.register_profile(
    "primelab",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("primelab")


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    """Keep every test's checkpoint cache inside its own tmp directory."""
    cache = tmp_path / "cache"
    monkeypatch.setenv("PRIME_LAB_CACHE", str(cache))
    return cache
