import numpy as np
import pytest

from semprecond.autotune import TuneProblem, TuneRecord, autotune, select
from semprecond.bench import build_rhs
from semprecond.krylov import GmresConfig
from semprecond.mesh import KershawParams, generate_kershaw
from semprecond.precond import parse_config, tune_space
from semprecond.sem import SemOperator


class ScriptedClock:
    """Returns pre-computed readings: per candidate ``setup`` then ``trials`` solves."""

    def __init__(self, solve_times, trials, setup=0.01):
        self.readings = []
        t = 0.0
        for times in solve_times:
            self.readings += [t, t + setup]
            t += setup
            for k in range(trials):
                dt = times[k] if np.ndim(times) else times
                self.readings += [t, t + dt]
                t += dt
        self.readings.reverse()

    def __call__(self):
        return self.readings.pop()


@pytest.fixture(scope="module")
def problem():
    op = SemOperator(generate_kershaw(KershawParams(0.3, 2)), 3)
    return TuneProblem(op, build_rhs(op, 0), GmresConfig())


def test_injected_times_pick_argmin(problem):
    space = tune_space(3)
    clock = ScriptedClock([0.5, 0.4, 0.1, 0.3], trials=1)
    chosen, records = autotune(problem, space, trials=1, timer=clock)
    assert chosen == space[2]
    assert [r.solve_time for r in records] == pytest.approx([0.5, 0.4, 0.1, 0.3])
    assert not clock.readings  # no hidden retries: exactly |space| x (setup + trials)


def test_ties_go_to_list_order(problem):
    space = tune_space(3)
    chosen, _ = autotune(problem, space, trials=1, timer=ScriptedClock([0.2, 0.2, 0.3, 0.2], 1))
    assert chosen == space[0]
    chosen, _ = autotune(problem, space, trials=1, timer=ScriptedClock([0.3, 0.2, 0.3, 0.2], 1))
    assert chosen == space[1]


def test_median_of_trials(problem):
    space = tune_space(3)[:2]
    clock = ScriptedClock([[0.1, 9.0, 0.2], [0.3, 0.3, 0.3]], trials=3)
    chosen, records = autotune(problem, space, trials=3, timer=clock)
    assert records[0].solve_time == pytest.approx(0.2)
    assert chosen == space[0]


def _rec(t, ok):
    return TuneRecord(parse_config("SEMFEM", 3), 0.0, t, 5, ok, 1e-9)


def test_select_skips_unconverged():
    assert select([_rec(0.1, False), _rec(0.5, True), _rec(0.2, True)]) == 2
    with pytest.raises(RuntimeError):
        select([_rec(0.1, False)])


def test_all_failing_raises(problem):
    hard = TuneProblem(problem.op, problem.b, GmresConfig(tol=1e-14, max_iters=1))
    with pytest.raises(RuntimeError, match="no candidate converged"):
        autotune(hard, tune_space(3), trials=1)


def test_empty_space_raises(problem):
    with pytest.raises(ValueError):
        autotune(problem, [])


def test_real_timing_selects_converged(problem):
    chosen, records = autotune(problem, tune_space(3), trials=1)
    best = min(r.solve_time for r in records if r.converged)
    pick = next(r for r in records if r.config == chosen)
    assert pick.converged and pick.solve_time == best
