import math

import pytest

from fodeabm import FractionalProblem
from fodeabm.bench import (
    BenchRecord,
    idle_to_csv,
    project_time,
    records_to_csv,
    run_cell,
    run_sweep,
)

from conftest import linear_problem


class TestRunCell:
    def test_serial_cell_times(self):
        problem = linear_problem(0.5, -1.0)
        t, _ = run_cell(problem, "serial", 200, repetitions=2)
        assert t > 0.0

    def test_block_cell_collects_stats(self):
        problem = linear_problem(0.5, -1.0)
        t, stats = run_cell(problem, "block", 200, workers=2, repetitions=1)
        assert t > 0.0
        assert len(stats["idle_steps"]) == 2

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            run_cell(linear_problem(), "magic", 100)


class TestSweep:
    def test_speedups_and_schema(self):
        problem = linear_problem(0.5, -1.0)
        records, idle_rows = run_sweep(
            problem,
            strategies=("serial", "block", "reduction"),
            n_list=(200, 400),
            workers_list=(2,),
            chunk=64,
            repetitions=1,
        )
        by_key = {(r.strategy, r.n_steps): r for r in records}
        assert ("serial", 200) in by_key and ("serial", 400) in by_key
        blk = by_key[("block", 400)]
        assert math.isfinite(blk.speedup_vs_serial)
        assert blk.chunk is None
        red = by_key[("reduction", 400)]
        assert red.chunk == 64
        assert idle_rows and {"worker", "idle_steps"} <= set(idle_rows[0])

    def test_failing_cell_recorded_and_sweep_continues(self):
        def exploding(t, y):
            return (float("nan"),) if t > 0.4 else (1.0,)

        problem = FractionalProblem(alpha=0.5, dim=1, rhs=exploding, y0=[0.0], t_end=1.0)
        records, _ = run_sweep(
            problem, strategies=("serial",), n_list=(50, 100), repetitions=1
        )
        assert len(records) == 2
        assert all(r.error for r in records)

    def test_projection_follows_square_law(self):
        records = [BenchRecord("serial", 1000, 1, None, 2.0, 3, 1.0)]
        assert project_time(records, 2000) == pytest.approx(8.0)
        assert project_time([], 1000) is None


class TestCsv:
    def test_records_header_and_chunk_blank(self):
        text = records_to_csv([BenchRecord("serial", 10, 1, None, 0.5, 3, 1.0)])
        lines = text.splitlines()
        assert lines[0] == (
            "strategy,n_steps,workers,chunk,wall_time_s,repetitions,speedup_vs_serial,error"
        )
        assert lines[1].split(",")[3] == ""

    def test_idle_csv(self):
        rows = [
            {
                "strategy": "block",
                "n_steps": 100,
                "workers": 2,
                "worker": 1,
                "idle_steps": 50,
                "messages_sent": 100,
            }
        ]
        lines = idle_to_csv(rows).splitlines()
        assert lines[0] == "strategy,n_steps,workers,worker,idle_steps,messages_sent"
        assert lines[1] == "block,100,2,1,50,100"
