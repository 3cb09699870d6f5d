import json
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from pastaopt import (
    Instance,
    InstanceConfig,
    SamplingDesign,
    brute_force_best,
    cardinality_constraints,
    count_assortments,
    derive_rng,
    expected_revenue,
    generate_dataset,
    generate_instance,
    sample_assortment,
)


def comb_oracle(n: int, k: int) -> int:
    """Independent binomial via Pascal's rule, exact integers only."""
    row = [1]
    for _ in range(n):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return row[k]


class TestCountAssortments:
    def test_small_cases(self):
        assert count_assortments(3, 2) == 6
        assert count_assortments(3, 3) == 7  # 2^3 - 1

    def test_experiment_scale_against_oracle(self):
        expected = sum(comb_oracle(40, j) for j in range(1, 9))
        assert expected == 100_146_723
        assert count_assortments(40, 8) == expected

    def test_range_guard(self):
        with pytest.raises(ValueError):
            count_assortments(10, 0)
        with pytest.raises(ValueError):
            count_assortments(65, 5)


class TestGenerateInstance:
    def test_unit_sphere_truth(self):
        inst = generate_instance(InstanceConfig(n_items=8, k=3, dim=5, seed=3))
        assert abs(np.linalg.norm(inst.theta_star) - 1.0) < 1e-12

    def test_iid_uniform_truth(self):
        cfg = InstanceConfig(n_items=8, k=3, dim=12, seed=3, theta_star_mode="iid-uniform")
        inst = generate_instance(cfg)
        assert np.all(np.abs(inst.theta_star) <= 1.0)
        assert abs(np.linalg.norm(inst.theta_star) - 1.0) > 1e-6

    def test_utilities_respect_threshold(self):
        inst = generate_instance(InstanceConfig(n_items=12, k=4, dim=6, seed=5))
        assert inst.catalog.utilities(inst.theta_star).max() <= -0.6

    def test_revenue_range(self):
        inst = generate_instance(InstanceConfig(n_items=12, k=4, dim=6, seed=6))
        assert np.all(inst.catalog.revenues >= 0.5)
        assert np.all(inst.catalog.revenues <= 0.8)

    def test_optimum_matches_enumeration(self):
        inst = generate_instance(InstanceConfig(n_items=6, k=3, dim=3, seed=8))
        oracle = brute_force_best(
            inst.catalog, inst.theta_star, cardinality_constraints(6, 3)
        )
        assert expected_revenue(inst.catalog, inst.s_star, inst.theta_star) == pytest.approx(
            expected_revenue(inst.catalog, oracle, inst.theta_star), abs=1e-12
        )
        assert inst.v_star == pytest.approx(
            expected_revenue(inst.catalog, inst.s_star, inst.theta_star), abs=1e-15
        )

    def test_ground_truth_dominates_every_assortment(self):
        inst = generate_instance(InstanceConfig(n_items=6, k=2, dim=2, seed=9))
        import itertools

        for size in (1, 2):
            for s in itertools.combinations(range(1, 7), size):
                assert inst.v_star >= expected_revenue(inst.catalog, s, inst.theta_star) - 1e-12

    def test_unreachable_threshold_errors(self):
        cfg = InstanceConfig(n_items=1, k=1, dim=3, seed=10, tau=-0.999999)
        with pytest.raises(RuntimeError):
            generate_instance(cfg)

    def test_deterministic_serialization(self, tmp_path):
        cfg = InstanceConfig(n_items=7, k=2, dim=3, seed=12)
        a, b = generate_instance(cfg), generate_instance(cfg)
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        a.save(pa)
        b.save(pb)
        assert pa.read_bytes() == pb.read_bytes()
        loaded = Instance.load(pa)
        assert loaded.s_star == a.s_star
        assert np.array_equal(loaded.theta_star, a.theta_star)


class TestSamplingDesign:
    def test_mass_bookkeeping(self):
        design = SamplingDesign(p=0.4, n_items=3, k=1)
        assert design.n_assortments == 3
        assert design.mass_of((1,), (1,)) == 0.4
        assert design.mass_of((2,), (1,)) == pytest.approx(0.3, abs=1e-15)

    def test_near_degenerate_p(self):
        inst = generate_instance(InstanceConfig(n_items=5, k=2, dim=2, seed=14))
        design = SamplingDesign(p=0.999999, n_items=5, k=2)
        rng = derive_rng(14, 0, "draws")
        hits = sum(sample_assortment(inst, design, rng) == inst.s_star for _ in range(10_000))
        assert hits / 10_000 > 0.999

    def test_three_singletons_frequencies(self):
        inst = generate_instance(InstanceConfig(n_items=3, k=1, dim=2, seed=15))
        design = SamplingDesign(p=0.4, n_items=3, k=1)
        rng = derive_rng(15, 0, "draws")
        counts = Counter(sample_assortment(inst, design, rng) for _ in range(100_000))
        assert counts[inst.s_star] / 100_000 == pytest.approx(0.4, abs=0.01)
        for s in ((1,), (2,), (3,)):
            if s != inst.s_star:
                assert counts[s] / 100_000 == pytest.approx(0.3, abs=0.01)

    def test_uniformity_chi_squared(self):
        # 9 non-optimal cells at N=4, K=2 should look uniform
        inst = generate_instance(InstanceConfig(n_items=4, k=2, dim=2, seed=16))
        design = SamplingDesign(p=0.3, n_items=4, k=2)
        assert design.n_assortments == 10
        rng = derive_rng(16, 0, "draws")
        counts = Counter()
        n_draws = 100_000
        for _ in range(n_draws):
            s = sample_assortment(inst, design, rng)
            if s != inst.s_star:
                counts[s] += 1
        total = sum(counts.values())
        assert len(counts) == 9
        expected = total / 9
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < stats.chi2.ppf(0.999, df=8)


class TestGenerateDataset:
    def test_record_structure(self):
        inst = generate_instance(InstanceConfig(n_items=6, k=2, dim=3, seed=17))
        design = SamplingDesign(p=0.7, n_items=6, k=2)
        ds = generate_dataset(inst, design, 500, derive_rng(17, 0, "ds"))
        for s, a, r in ds.records():
            assert a == 0 or a in s
            if a == 0:
                assert r == 0.0
            else:
                assert r == inst.catalog.revenues[a - 1] and r >= 0.5

    def test_optimal_assortment_frequency(self):
        inst = generate_instance(InstanceConfig(n_items=8, k=3, dim=3, seed=18))
        design = SamplingDesign(p=0.9, n_items=8, k=3)
        ds = generate_dataset(inst, design, 10_000, derive_rng(18, 0, "ds"))
        frac = np.mean([s == inst.s_star for s in ds.assortments])
        assert abs(frac - 0.9) < 0.02

    def test_extending_n_preserves_prefix(self):
        inst = generate_instance(InstanceConfig(n_items=6, k=2, dim=2, seed=19))
        design = SamplingDesign(p=0.5, n_items=6, k=2)
        short = generate_dataset(inst, design, 50, derive_rng(19, 0, "ds"))
        long = generate_dataset(inst, design, 80, derive_rng(19, 0, "ds"))
        assert long.assortments[:50] == short.assortments
        assert np.array_equal(long.choices[:50], short.choices)

    def test_deterministic_csv_bytes(self, tmp_path):
        inst = generate_instance(InstanceConfig(n_items=6, k=2, dim=2, seed=20))
        design = SamplingDesign(p=0.5, n_items=6, k=2)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        generate_dataset(inst, design, 60, derive_rng(20, 0, "ds")).save_csv(pa)
        generate_dataset(inst, design, 60, derive_rng(20, 0, "ds")).save_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_instance_json_carries_config_echo(self, tmp_path):
        cfg = InstanceConfig(n_items=5, k=2, dim=2, seed=21)
        inst = generate_instance(cfg)
        path = tmp_path / "inst.json"
        inst.save(path)
        obj = json.loads(path.read_text())
        assert obj["config"]["n_items"] == 5
        assert obj["config"]["seed"] == 21
        assert obj["s_star"] == list(inst.s_star)
