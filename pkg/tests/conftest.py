import sys
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

from ctxlab.generators import GeneratorSpec, gen_system

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("ctxlab", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("ctxlab")

SYSTEMS_DIR = Path(__file__).parent.parent / "systems"


@st.composite
def systems(draw, consistency="either", max_contents=3, max_contexts=3, sizes=(2,)):
    seed = draw(st.integers(0, 2**64 - 1))
    precision = draw(st.sampled_from((2, 4, 8, 64)))
    density = draw(st.sampled_from(("1/2", "3/4", "1")))
    return gen_system(GeneratorSpec(
        seed=seed, max_contents=max_contents, max_contexts=max_contexts,
        alphabet_sizes=sizes, density=density, consistency=consistency,
        precision=precision,
    ))


@pytest.fixture
def shipped_files():
    files = sorted(SYSTEMS_DIR.glob("*.sys"))
    assert files
    return files


class SolverTally:
    """Every LP solved through the decision and oracle paths, re-verified on the spot."""

    def __init__(self):
        self.checked = 0
        self.failed = 0


TALLY = SolverTally()


@pytest.fixture(autouse=True, scope="session")
def _record_solver_outputs():
    import ctxlab.contextuality as ctx
    from ctxlab.feasibility import verify_result

    original = ctx.solve_feasibility

    def recording(ls, *args, **kwargs):
        result = original(ls, *args, **kwargs)
        TALLY.checked += 1
        TALLY.failed += not verify_result(ls, result)
        return result

    ctx.solve_feasibility = recording
    yield TALLY
    ctx.solve_feasibility = original


def pytest_terminal_summary(terminalreporter):
    if TALLY.checked:
        terminalreporter.write_line(
            f"solver outputs re-verified: {TALLY.checked - TALLY.failed}/{TALLY.checked}"
        )
