import math

import numpy as np
import pytest

import pastaopt.harness as harness
from pastaopt import (
    InstanceConfig,
    PastaOptions,
    ResultRow,
    SweepConfig,
    assortment_accuracy,
    expected_revenue,
    generate_instance,
    read_results_csv,
    regret,
    run_sweep,
    summarize,
    write_metric_svg,
    write_results_csv,
)


@pytest.fixture(scope="module")
def small_instance():
    return generate_instance(InstanceConfig(n_items=6, k=2, dim=3, seed=51))


class TestRegret:
    def test_zero_at_optimum(self, small_instance):
        assert regret(small_instance, small_instance.s_star) == 0.0

    def test_hand_gap(self):
        # build an instance-like object on a catalog where the gap is known
        from pastaopt import Catalog, Instance

        cat = Catalog(features=np.zeros((2, 1)), revenues=np.array([0.6, 0.5]))
        inst = Instance(
            catalog=cat,
            theta_star=np.array([0.0]),
            s_star=(1,),
            v_star=0.3,
            config=InstanceConfig(n_items=2, k=1, dim=1, seed=0),
        )
        assert regret(inst, (2,)) == pytest.approx(0.05, abs=1e-12)

    def test_worst_singleton_equals_enumerated_gap(self, small_instance):
        inst = small_instance
        values = [expected_revenue(inst.catalog, (j,), inst.theta_star) for j in range(1, 7)]
        worst = int(np.argmin(values)) + 1
        assert regret(inst, (worst,)) == pytest.approx(inst.v_star - min(values), abs=1e-12)

    def test_inconsistent_truth_rejected(self, small_instance):
        from dataclasses import replace

        broken = replace(small_instance, v_star=0.0)
        with pytest.raises(ValueError):
            regret(broken, broken.s_star)


class TestAccuracy:
    def test_exact_match(self):
        assert assortment_accuracy((1, 2, 3), (1, 2, 3)) == 1.0

    def test_disjoint(self):
        assert assortment_accuracy((4, 5), (1, 2)) == 0.0

    def test_partial(self):
        assert assortment_accuracy((1, 2, 3, 9), (1, 2, 3, 4)) == 0.75

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            assortment_accuracy((1,), ())

    def test_equality_implies_perfect_metrics(self, small_instance):
        s = small_instance.s_star
        assert assortment_accuracy(s, s) == 1.0
        assert regret(small_instance, s) == 0.0


def tiny_sweep(values=(40,), reps=1, seed=60):
    return SweepConfig(
        sweep_variable="n",
        values=values,
        master_seed=seed,
        n_items=6,
        k=2,
        dim=2,
        p=0.7,
        replications=reps,
        pasta=PastaOptions(max_outer_iters=3),
    )


class TestRunSweep:
    def test_row_count_and_order(self):
        rows = run_sweep(tiny_sweep())
        assert len(rows) == 2
        assert [r.method for r in rows] == ["baseline", "pasta"]
        assert all(r.sweep_var == "n" and r.sweep_value == 40.0 for r in rows)

    def test_metrics_within_range(self):
        rows = run_sweep(tiny_sweep(values=(30, 50), reps=2))
        assert len(rows) == 8
        for r in rows:
            assert r.regret >= 0.0
            assert 0.0 <= r.accuracy <= 1.0
            assert r.wall_time_ms > 0.0

    def test_deterministic_modulo_wall_time(self):
        a = run_sweep(tiny_sweep(reps=2))
        b = run_sweep(tiny_sweep(reps=2))
        strip = lambda r: (r.sweep_var, r.sweep_value, r.rep, r.method, r.regret, r.accuracy)
        assert [strip(r) for r in a] == [strip(r) for r in b]

    def test_failed_replication_marked_not_dropped(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(harness, "pasta_solve", boom)
        rows = run_sweep(tiny_sweep())
        assert len(rows) == 2
        assert all(math.isnan(r.regret) and math.isnan(r.accuracy) for r in rows)

    def test_sweep_value_validation(self):
        with pytest.raises(ValueError):
            SweepConfig(sweep_variable="p", values=(1.5,), master_seed=0)
        with pytest.raises(ValueError):
            SweepConfig(sweep_variable="q", values=(1,), master_seed=0)

    def test_near_full_coverage_both_methods_near_optimal(self):
        cfg = SweepConfig(
            sweep_variable="p",
            values=(0.999,),
            master_seed=61,
            n_items=6,
            k=2,
            dim=2,
            n=400,
            replications=5,
            pasta=PastaOptions(max_outer_iters=5),
        )
        rows = run_sweep(cfg)
        for method, pts in summarize(rows, "regret").items():
            ((_, mean, _),) = pts
            assert mean < 0.01, (method, mean)


class TestResultsCsv:
    def test_round_trip_identity(self, tmp_path):
        rows = run_sweep(tiny_sweep(values=(30, 45), reps=2))
        path = tmp_path / "results.csv"
        write_results_csv(rows, path)
        assert read_results_csv(path) == rows
        header = path.read_text().splitlines()[0]
        assert header == "sweep_var,sweep_value,rep,method,regret,accuracy,wall_time_ms"

    def test_emit_deterministic_for_fixed_rows(self, tmp_path):
        rows = run_sweep(tiny_sweep())
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_results_csv(rows, pa)
        write_results_csv(rows, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_results_csv([], tmp_path / "x.csv")


def constant_rows(metric_value=0.25):
    return [
        ResultRow("n", float(v), rep, m, metric_value, 0.5, 1.0)
        for v in (50, 100, 150)
        for rep in range(3)
        for m in ("pasta", "baseline")
    ]


class TestSvg:
    def test_bytes_deterministic(self, tmp_path):
        rows = run_sweep(tiny_sweep(values=(30, 45), reps=2))
        pa, pb = tmp_path / "a.svg", tmp_path / "b.svg"
        write_metric_svg(rows, "regret", pa)
        write_metric_svg(rows, "regret", pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_structure_and_legend(self, tmp_path):
        path = tmp_path / "plot.svg"
        write_metric_svg(constant_rows(), "regret", path)
        text = path.read_text()
        assert text.startswith('<?xml version="1.0"')
        assert text.count("<polyline") == 2
        assert ">pasta</text>" in text and ">baseline</text>" in text
        assert ">regret</text>" in text and ">n</text>" in text

    def test_constant_metric_gives_horizontal_polyline(self, tmp_path):
        path = tmp_path / "flat.svg"
        write_metric_svg(constant_rows(0.25), "regret", path)
        text = path.read_text()
        import re

        for pts in re.findall(r'<polyline points="([^"]+)"', text):
            ys = {coord.split(",")[1] for coord in pts.split()}
            assert len(ys) == 1

    def test_nan_rows_excluded_from_summary(self):
        rows = constant_rows() + [ResultRow("n", 50.0, 9, "pasta", math.nan, math.nan, math.nan)]
        series = summarize(rows, "regret")
        assert all(math.isfinite(mean) for _, mean, _ in series["pasta"])


class TestSummarize:
    def test_mean_and_se(self):
        rows = [
            ResultRow("n", 10.0, 0, "pasta", 0.1, 1.0, 1.0),
            ResultRow("n", 10.0, 1, "pasta", 0.3, 1.0, 1.0),
        ]
        ((value, mean, se),) = summarize(rows, "regret")["pasta"]
        assert value == 10.0
        assert mean == pytest.approx(0.2, abs=1e-15)
        assert se == pytest.approx(np.std([0.1, 0.3], ddof=1) / math.sqrt(2), abs=1e-15)

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            summarize(constant_rows(), "speed")
