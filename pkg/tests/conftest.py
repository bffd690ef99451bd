import time

import pytest

from repcon import fixtures
from repcon.engine import run


def timed_run(pieces):
    t0 = time.perf_counter()
    result = run(pieces["graph"], pieces["protocol"], pieces["attacks"], pieces["init"],
                 pieces["dim"], pieces["rounds"], pieces["master_seed"])
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def chain_run_2000():
    """Separated fixed-value attackers on the slow chain, 2000 rounds."""
    return timed_run(fixtures.separated_chain_pieces(rounds=2000))


@pytest.fixture(scope="session")
def mixed_runs_2000():
    """Mixed-attack fixture under each of the three protocols."""
    out = {}
    for kind in ("arepc", "wmsr", "wla"):
        out[kind] = timed_run(fixtures.mixed_pieces(kind, rounds=2000))
    return out
