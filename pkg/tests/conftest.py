"""Shared pytest fixtures for cohn-localization tests."""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Callable, Optional

import pytest
from click.testing import CliRunner

from cohn_localization.core.localize import SigmaSet
from cohn_localization.core.rings import RingDescriptor
from cohn_localization.core.settings import Settings
from cohn_localization.tools import Workbench


# =============================================================================
# Pytest Configuration
# =============================================================================

def pytest_configure(config: pytest.Config) -> None:
    """Register custom markers."""
    config.addinivalue_line(
        "markers", "integration: marks tests that run whole commands end to end"
    )
    config.addinivalue_line(
        "markers", "slow: marks the large seeded property suites"
    )


# =============================================================================
# Ring Fixtures
# =============================================================================

@pytest.fixture
def z() -> RingDescriptor:
    """The integers."""
    return RingDescriptor.integers()


@pytest.fixture
def q() -> RingDescriptor:
    """The rationals."""
    return RingDescriptor.rationals()


@pytest.fixture
def f5() -> RingDescriptor:
    """The prime field F_5."""
    return RingDescriptor.prime_field(5)


@pytest.fixture
def qx1(q: RingDescriptor) -> RingDescriptor:
    """Q<x1>."""
    return RingDescriptor.free_algebra(q, 1)


@pytest.fixture
def qx2(q: RingDescriptor) -> RingDescriptor:
    """Q<x1, x2>."""
    return RingDescriptor.free_algebra(q, 2)


# =============================================================================
# Sigma Fixtures
# =============================================================================

@pytest.fixture
def sigma_two(z: RingDescriptor) -> SigmaSet:
    """Powers of 2 in Z."""
    return SigmaSet.central(z, [2])


@pytest.fixture
def sigma_two_three(z: RingDescriptor) -> SigmaSet:
    """The multiplicative set generated by 2 and 3 in Z."""
    return SigmaSet.central(z, [2, 3])


@pytest.fixture
def sigma_nonzero(z: RingDescriptor) -> SigmaSet:
    """Z \\ {0}, so that sigma^-1 Z = Q."""
    return SigmaSet.nonzero(z)


@pytest.fixture
def sigma_aug(qx1: RingDescriptor) -> SigmaSet:
    """Augmentation-invertible matrices over Q<x1>."""
    return SigmaSet.augmentation(qx1)


@pytest.fixture
def sigma_aug2(qx2: RingDescriptor) -> SigmaSet:
    """Augmentation-invertible matrices over Q<x1, x2>."""
    return SigmaSet.augmentation(qx2)


# =============================================================================
# Randomness
# =============================================================================

@pytest.fixture
def rng() -> random.Random:
    """Seeded generator so the property suites are reproducible."""
    return random.Random(20240115)


# =============================================================================
# Workbench and Document Fixtures
# =============================================================================

@pytest.fixture
def settings() -> Settings:
    """Default settings, independent of the user's home directory."""
    return Settings()


@pytest.fixture
def workbench(settings: Settings) -> Workbench:
    """Workbench with default settings."""
    return Workbench(settings)


@pytest.fixture
def make_doc() -> Callable[..., str]:
    """Build document text from a payload kind and value."""

    def _make(kind: str, value, ring: Optional[dict] = None, sigma: Optional[dict] = None) -> str:
        data: dict = {"version": "1", "ring": ring or {"kind": "Z"}}
        if sigma is not None:
            data["sigma"] = sigma
        data["payload"] = {kind: value}
        return json.dumps(data)

    return _make


@pytest.fixture
def cli_runner() -> CliRunner:
    """Click test runner."""
    return CliRunner()


@pytest.fixture
def isolated_home(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point HOME at an empty directory so no user settings leak in."""
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv("COHN_LOCALIZATION_WITT_BOUND", raising=False)
    monkeypatch.delenv("COHN_LOCALIZATION_SERIES_DEGREE", raising=False)
    return tmp_path
