import pytest

from clickrank.corpus import build_qrels_from_clicks
from clickrank.synth import FixtureSpec, generate_fixture


@pytest.fixture(scope="session")
def small_fixture():
    """Shared desk-scale corpus bundle; cheap enough to build once per session."""
    return generate_fixture(FixtureSpec(n_passages=300, n_queries=30, seed=11))


@pytest.fixture(scope="session")
def small_qrels(small_fixture):
    return build_qrels_from_clicks(small_fixture.clicks, "dctr", (0.1, 0.3))
