import pytest

from propcheck import check_model
from randmodels import random_models

MODELS = random_models(50)


@pytest.fixture(scope="module")
def reports():
    return {}


@pytest.mark.parametrize("idx", range(len(MODELS)))
def test_random_model_properties(idx):
    rep = check_model(MODELS[idx])
    assert rep.ok, rep.failures


def test_random_models_are_varied():
    ps = {m.p for m in MODELS}
    assert {1.5, 2.0, 3.0} <= ps
    assert sum(1 for m in MODELS if m.theta) >= 25
    assert len({m.source_hash for m in MODELS}) == 50


def test_bounds_ordered_on_random_models():
    from frontspeed import bounds_c_star
    for m in MODELS:
        b = bounds_c_star(m, m.stats)
        assert b.lower <= b.upper, m.name
