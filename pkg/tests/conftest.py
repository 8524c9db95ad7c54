import pytest

from fglab.verify import Pipeline, build_pipeline

CONFIGS = [(2, 1), (3, 1), (2, 2)]


@pytest.fixture(scope="session")
def pipeline():
    """Pipelines are expensive; build_pipeline is cached, share across files."""

    def get(p: int, n: int, u_prec: int = 32) -> Pipeline:
        return build_pipeline(p, n, 0, u_prec)

    return get
