"""RMSE comparison, significance testing, and vote tallying."""
from __future__ import annotations

import numpy as np
import pytest

from geocon.consensus import (aggregate_votes, one_tailed_test, permutation_oracle,
                              rmse_per_county, tally_votes)
from geocon.train import RunRecord


class TestRmsePerCounty:
    def test_exact_predictions_are_zero(self, rng):
        x = rng.normal(size=(4, 15, 6))
        np.testing.assert_array_equal(rmse_per_county(x, x), np.zeros(6))

    def test_constant_offset(self, rng):
        actual = rng.normal(size=(3, 5, 4))
        np.testing.assert_allclose(rmse_per_county(actual + 2.5, actual), np.full(4, 2.5))
        np.testing.assert_allclose(rmse_per_county(actual - 1.25, actual), np.full(4, 1.25))

    def test_matches_triple_loop(self, rng):
        pred = rng.normal(size=(3, 4, 5))
        actual = rng.normal(size=(3, 4, 5))
        out = rmse_per_county(pred, actual)
        for n in range(5):
            total = 0.0
            for s in range(3):
                for h in range(4):
                    total += (pred[s, h, n] - actual[s, h, n]) ** 2
            assert out[n] == pytest.approx(np.sqrt(total / 12), rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError, match="mismatch"):
            rmse_per_county(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(ValueError, match="empty"):
            rmse_per_county(np.zeros((0, 3)), np.zeros((0, 3)))


class TestOneTailedTest:
    def test_identical_samples(self):
        x = [1.0, 2.0, 3.0, 4.0]
        p, sig = one_tailed_test(x, x, 0.1)
        assert p == 1.0 and not sig

    def test_zero_variance_positive_shift(self):
        base = [5.0, 6.0, 7.0]
        factor = [4.0, 5.0, 6.0]
        p, sig = one_tailed_test(base, factor, 0.1)
        assert p == 0.0 and sig

    def test_zero_variance_negative_shift(self):
        p, sig = one_tailed_test([1.0, 2.0], [2.0, 3.0], 0.1)
        assert p == 1.0 and not sig

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="paired"):
            one_tailed_test([1.0, 2.0], [1.0], 0.1)
        with pytest.raises(ValueError, match="at least 2"):
            one_tailed_test([1.0], [0.5], 0.1)

    def test_shift_and_scale_invariance(self, rng):
        base = rng.normal(2.0, 0.5, size=10)
        fact = rng.normal(1.8, 0.5, size=10)
        p, _ = one_tailed_test(base, fact, 0.1)
        p_shift, _ = one_tailed_test(base + 100.0, fact + 100.0, 0.1)
        p_scale, _ = one_tailed_test(base * 7.0, fact * 7.0, 0.1)
        assert p == pytest.approx(p_shift, abs=1e-12)
        assert p == pytest.approx(p_scale, abs=1e-12)

    def test_known_t_value(self):
        # d = [1, 2, 3]: mean 2, sd 1, t = 2 / (1/sqrt(3)), df = 2
        from scipy import stats as sstats
        base = np.array([2.0, 4.0, 6.0])
        fact = np.array([1.0, 2.0, 3.0])
        p, _ = one_tailed_test(base, fact, 0.1)
        assert p == pytest.approx(float(sstats.t.sf(2 * np.sqrt(3), 2)), rel=1e-12)


class TestPermutationOracle:
    def test_all_zero_differences(self):
        x = [1.0, 2.0, 3.0]
        assert permutation_oracle(x, x, resamples=2000, seed=1) == 1.0

    def test_mirrored_sample_near_half(self, rng):
        d = rng.normal(size=5)
        base = np.concatenate([d, -d]) + 3.0
        fact = np.full(10, 3.0)
        p = permutation_oracle(base, fact, resamples=100_000, seed=2)
        assert p == pytest.approx(0.5, abs=0.02)

    def test_agrees_with_t_on_random_samples(self, rng):
        agree = 0
        for i in range(30):
            base = rng.normal(1.0, 0.3, size=10)
            fact = base - rng.normal(0.0, 0.25) + rng.normal(0, 0.2, size=10)
            p_t, _ = one_tailed_test(base, fact, 0.1)
            p_perm = permutation_oracle(base, fact, resamples=20_000, seed=i)
            agree += abs(p_t - p_perm) <= 0.03
        assert agree >= 28


def record(model, run, feature_set, rmse, failed=False, seed=0):
    return RunRecord(state="SYN", model=model, run=run, feature_set=feature_set,
                     graph_kind="border", seed=seed, epochs=1,
                     rmse=None if failed else list(rmse), per_horizon_rmse=None,
                     loss_curve=[], failed=failed)


def paired_records(models=("m1", "m2"), runs=10, n=3, improvement=None, noise=0.05, seed=0):
    """improvement[model][county] subtracted from the factor run's RMSE."""
    rng = np.random.default_rng(seed)
    improvement = improvement or {}
    out = []
    for m in models:
        for r in range(runs):
            base = 1.0 + 0.1 * rng.random(n)
            gain = np.array([improvement.get(m, {}).get(i, 0.0) for i in range(n)])
            fact = base - gain + noise * rng.normal(size=n)
            out.append(record(m, r, "baseline", base, seed=r))
            out.append(record(m, r, "factor:aod", fact, seed=r))
    return out


class TestTally:
    COUNTIES = ["99001", "99003", "99005"]

    def test_unanimous_vote_ceiling_and_floor(self):
        # zero noise makes the outcome exact: county 0 sees a pure positive
        # shift (p=0) for every member, the others see identical pairs (p=1)
        improvement = {m: {0: 0.5} for m in ("m1", "m2")}
        records = paired_records(improvement=improvement, noise=0.0)
        table = tally_votes(records, 0.1, factor="aod", county_order=self.COUNTIES)
        assert table.counties[0].votes == 2
        assert table.counties[1].votes == 0 and table.counties[2].votes == 0

    def test_votes_match_significance_flags(self):
        records = paired_records(improvement={"m1": {1: 0.4}})
        table = tally_votes(records, 0.1, factor="aod", county_order=self.COUNTIES)
        for county in table.counties:
            assert county.votes == sum(m.significant for m in county.models)
            for m in county.models:
                assert m.p_value is not None and 0.0 <= m.p_value <= 1.0

    def test_monotone_in_alpha(self):
        records = paired_records(improvement={"m1": {0: 0.05, 1: 0.02}}, noise=0.04)
        t_small = tally_votes(records, 0.02, factor="aod", county_order=self.COUNTIES)
        t_large = tally_votes(records, 0.3, factor="aod", county_order=self.COUNTIES)
        for a, b in zip(t_small.counties, t_large.counties):
            assert a.votes <= b.votes

    def test_failed_runs_shrink_pairs(self, caplog):
        records = paired_records(improvement={"m1": {0: 0.5}}, noise=0.01)
        # fail three of m1's factor runs: 7 complete pairs remain, still votes
        failed = 0
        for rec in records:
            if rec.model == "m1" and rec.feature_set == "factor:aod" and failed < 3:
                rec.failed = True
                rec.rmse = None
                failed += 1
        with caplog.at_level("INFO"):
            table = tally_votes(records, 0.1, factor="aod", county_order=self.COUNTIES)
        assert table.counties[0].votes >= 1
        assert "incomplete pair" in caplog.text or "dropping failed" in caplog.text

    def test_member_below_min_pairs_abstains(self):
        records = paired_records(runs=3, improvement={"m1": {0: 0.5}})
        table = tally_votes(records, 0.1, factor="aod", county_order=self.COUNTIES)
        for county in table.counties:
            assert county.votes == 0
            assert all(m.p_value is None and not m.significant for m in county.models)

    def test_json_contract(self):
        records = paired_records()
        table = tally_votes(records, 0.1, factor="aod", county_order=self.COUNTIES)
        obj = table.to_json()
        assert set(obj) == {"state", "factor", "graph_kind", "alpha", "counties"}
        entry = obj["counties"][0]
        assert set(entry) == {"fips", "votes", "models"}
        assert set(entry["models"][0]) == {"name", "p", "significant", "rmse_base",
                                           "rmse_factor"}


class TestAggregate:
    def table(self, votes):
        from geocon.consensus import CountyVotes, ModelVote, VoteTable
        counties = []
        for i, v in enumerate(votes):
            models = [ModelVote(f"m{j}", 0.05, j < v, 1.0, 0.9) for j in range(8)]
            counties.append(CountyVotes(f"99{2 * i + 1:03d}", v, models))
        return VoteTable("SYN", "aod", "border", 0.1, counties)

    def test_total_and_histogram(self):
        agg = aggregate_votes(self.table([0, 3, 5]))
        assert agg["total"] == 8
        assert agg["histogram"][0] == 1 and agg["histogram"][3] == 1 and agg["histogram"][5] == 1
        assert agg["histogram"][1] == 0
        assert agg["ceiling"] == 8

    def test_histogram_partitions_counties(self):
        votes = [0, 1, 1, 4, 8, 8, 2]
        agg = aggregate_votes(self.table(votes))
        assert sum(agg["histogram"].values()) == len(votes)
        assert agg["total"] == sum(k * v for k, v in agg["histogram"].items())
