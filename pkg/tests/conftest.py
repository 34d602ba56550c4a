import pytest

from gsoscheck.checker import CampaignConfig
from gsoscheck.compilers import compiler_registry
from gsoscheck.languages import language_registry


@pytest.fixture(scope="session")
def langs():
    return language_registry()


@pytest.fixture(scope="session")
def comps():
    return compiler_registry()


@pytest.fixture(scope="session")
def cfg():
    return CampaignConfig()
