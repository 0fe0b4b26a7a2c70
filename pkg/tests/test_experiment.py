import json

import numpy as np
import pytest

from leakguard.boosting import GbdtParams
from leakguard.dataset import (
    FitScope,
    RowProvenance,
    SplitSpec,
    TabularDataset,
    generate_synthetic_imbalanced,
    stratified_split,
)
from leakguard.experiment import (
    LeakageReport,
    Placement,
    Preprocessing,
    ScenarioError,
    ScenarioResult,
    ScenarioSpec,
    Verdict,
    compare_scenarios,
    dataset_fingerprint,
    detect_leakage,
    recompute_report,
    run_scenario,
)
from leakguard.sampling import SamplerKind, SamplerPipeline, SamplerSpec

FAST_MODEL = GbdtParams(learning_rate=0.3, n_estimators=8, max_depth=3)


def smote_pipeline(strategy=1.0, seed=7):
    return SamplerPipeline(steps=(SamplerSpec(SamplerKind.SMOTE, strategy, 5, seed),))


def small_data(seed=11):
    return generate_synthetic_imbalanced(800, 0.05, 4, 1.5, seed)


def scenario(name, placement, pipeline=None, preprocessing=Preprocessing.GUARDED,
             split_seed=42, threshold=0.5, model=FAST_MODEL):
    return ScenarioSpec(
        name=name,
        placement=placement,
        pipeline=pipeline,
        preprocessing=preprocessing,
        split=SplitSpec(0.2, split_seed, True),
        model=model,
        threshold=threshold,
    )


def brute_force_duplicate_pairs(train, test):
    count = 0
    for i in range(test.n_rows):
        for j in range(train.n_rows):
            if np.array_equal(test.features[i], train.features[j]):
                count += 1
    return count


class TestDetectLeakage:
    def test_disjoint_original_partitions_are_clean(self):
        data = small_data()
        train, test = stratified_split(data, SplitSpec(0.2, 1, True))
        report = detect_leakage(train, test, FitScope.TRAIN_ONLY)
        assert report.verdict == Verdict.CLEAN
        assert report.synthetic_rows_in_test == 0
        assert report.duplicate_pairs_across_split == 0

    def test_planted_duplicate_detected(self):
        data = small_data()
        train, test = stratified_split(data, SplitSpec(0.2, 1, True))
        polluted = TabularDataset(
            features=np.vstack([test.features, train.features[:1]]),
            feature_names=test.feature_names,
            labels=np.concatenate([test.labels, train.labels[:1]]),
            provenance=test.provenance + (RowProvenance.original(0),),
        )
        report = detect_leakage(train, polluted, FitScope.TRAIN_ONLY)
        assert report.duplicate_pairs_across_split >= 1
        assert report.verdict == Verdict.LEAKY

    def test_duplicate_count_matches_brute_force_scan(self):
        rng = np.random.default_rng(5)
        pool = rng.integers(0, 3, size=(40, 2)).astype(float)  # forced collisions
        labels = rng.integers(0, 2, 40)
        labels[:2] = (0, 1)
        prov = tuple(RowProvenance.original(i) for i in range(40))
        data = TabularDataset(pool, ("a", "b"), labels, prov)
        train = data.select_rows(range(25))
        test = data.select_rows(range(25, 40))
        report = detect_leakage(train, test, FitScope.TRAIN_ONLY)
        assert report.duplicate_pairs_across_split == brute_force_duplicate_pairs(train, test)
        assert report.duplicate_pairs_across_split > 0

    def test_synthetic_provenance_in_test_counted(self):
        data = small_data()
        train, test = stratified_split(data, SplitSpec(0.2, 1, True))
        tainted = TabularDataset(
            features=test.features,
            feature_names=test.feature_names,
            labels=test.labels,
            provenance=(RowProvenance.synthetic("smote"),) + test.provenance[1:],
        )
        report = detect_leakage(train, tainted, FitScope.TRAIN_ONLY)
        assert report.synthetic_rows_in_test == 1
        assert report.verdict == Verdict.LEAKY

    def test_full_data_scaler_flag_forces_leaky(self):
        data = small_data()
        train, test = stratified_split(data, SplitSpec(0.2, 1, True))
        report = detect_leakage(train, test, FitScope.FULL_DATASET)
        assert report.scaler_fitted_on_full_data
        assert report.verdict == Verdict.LEAKY

    def test_near_duplicate_diagnostic_is_optional_and_counted(self):
        features = np.array([[0.0, 0.0], [10.0, 10.0], [0.05, 0.0], [20.0, 20.0]])
        labels = np.array([0, 1, 0, 1])
        prov = tuple(RowProvenance.original(i) for i in range(4))
        data = TabularDataset(features, ("a", "b"), labels, prov)
        train = data.select_rows([0, 1])
        test = data.select_rows([2, 3])
        none_requested = detect_leakage(train, test, FitScope.TRAIN_ONLY)
        assert none_requested.near_duplicate_pairs is None
        report = detect_leakage(train, test, FitScope.TRAIN_ONLY, near_duplicate_radius=0.1)
        assert report.near_duplicate_pairs == 1
        # the diagnostic alone never flips the verdict
        assert report.verdict == Verdict.CLEAN

    def test_verdict_invariant_enforced(self):
        with pytest.raises(ValueError, match="verdict"):
            LeakageReport(
                synthetic_rows_in_test=1,
                duplicate_pairs_across_split=0,
                scaler_fitted_on_full_data=False,
                verdict=Verdict.CLEAN,
            )


class TestRunScenario:
    def test_after_split_is_clean_by_construction(self):
        result = run_scenario(
            small_data(), scenario("post", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline())
        )
        assert result.leakage.synthetic_rows_in_test == 0
        assert result.leakage.verdict == Verdict.CLEAN
        assert result.test_provenance_counts["original"] == sum(
            result.test_class_counts.values()
        )

    def test_before_split_leaks_synthetic_rows_into_test(self):
        result = run_scenario(
            small_data(), scenario("pre", Placement.SAMPLING_BEFORE_SPLIT, smote_pipeline())
        )
        assert result.leakage.synthetic_rows_in_test > 0
        assert result.leakage.verdict == Verdict.LEAKY

    def test_no_sampling_guarded_depends_only_on_train_rows(self):
        data = small_data()
        spec = scenario("baseline", Placement.NO_SAMPLING)
        # Identify the test rows, then corrupt their features: the trained
        # model (and hence the persisted scores on the same rows) only
        # changes through leakage, which the guarded path must not have.
        train, test = stratified_split(data, spec.split)
        test_rows = {p.source_index for p in test.provenance}
        mutated_features = data.features.copy()
        for i in range(data.n_rows):
            if i in test_rows:
                mutated_features[i] = mutated_features[i] + 123.0
        mutated = TabularDataset(
            features=mutated_features,
            feature_names=data.feature_names,
            labels=data.labels,
            provenance=data.provenance,
        )
        from leakguard.boosting import train as train_model
        from leakguard.dataset import apply_standardizer, fit_standardizer

        def train_side_model(source):
            tr, _ = stratified_split(source, spec.split)
            params = fit_standardizer(tr, list(tr.feature_names), FitScope.TRAIN_ONLY)
            return train_model(apply_standardizer(tr, params), spec.model).to_json()

        assert train_side_model(data) == train_side_model(mutated)

    def test_paper_faithful_scaler_marks_result_leaky(self):
        result = run_scenario(
            small_data(),
            scenario("faithful", Placement.NO_SAMPLING, preprocessing=Preprocessing.PAPER_FAITHFUL),
        )
        assert result.leakage.scaler_fitted_on_full_data
        assert result.leakage.verdict == Verdict.LEAKY

    def test_deterministic_except_wall_time(self):
        data = small_data()
        spec = scenario("post", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline())
        a = run_scenario(data, spec)
        b = run_scenario(data, spec)
        da, db = a.to_dict(), b.to_dict()
        da.pop("wall_time"), db.pop("wall_time")
        assert da == db

    def test_metrics_recompute_exactly_from_persisted_values(self):
        result = run_scenario(
            small_data(), scenario("post", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline())
        )
        recomputed = recompute_report(result)
        assert recomputed == result.metrics

    def test_result_dict_round_trip(self):
        result = run_scenario(
            small_data(), scenario("post", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline())
        )
        text = json.dumps(result.to_dict())
        restored = ScenarioResult.from_dict(json.loads(text))
        assert restored.metrics == result.metrics
        assert restored.leakage == result.leakage
        assert restored.scenario == result.scenario
        assert restored.data_fingerprint == result.data_fingerprint

    def test_stage_annotation_on_failure(self):
        bad_pipeline = SamplerPipeline(
            steps=(SamplerSpec(SamplerKind.SMOTE, 1.0, k_neighbors=200, seed=1),)
        )
        with pytest.raises(ScenarioError, match="sampling after split"):
            run_scenario(small_data(), scenario("boom", Placement.SAMPLING_AFTER_SPLIT, bad_pipeline))

    def test_pipeline_required_unless_no_sampling(self):
        with pytest.raises(ValueError, match="pipeline"):
            scenario("bad", Placement.SAMPLING_AFTER_SPLIT, None)
        with pytest.raises(ValueError, match="pipeline"):
            scenario("bad", Placement.NO_SAMPLING, smote_pipeline())

    def test_time_column_gets_hour_and_scaled_preprocessing(self):
        rng = np.random.default_rng(3)
        n = 400
        features = np.column_stack(
            [
                rng.uniform(0, 48 * 3600, n),  # Time: two days of seconds
                rng.normal(size=n),
                rng.uniform(1, 500, n),  # Amount
            ]
        )
        labels = (rng.random(n) < 0.2).astype(int)
        labels[:2] = (0, 1)
        data = TabularDataset(
            features=features,
            feature_names=("Time", "V1", "Amount"),
            labels=labels,
            provenance=tuple(RowProvenance.original(i) for i in range(n)),
        )
        result = run_scenario(data, scenario("cc", Placement.NO_SAMPLING))
        assert result.metrics.confusion.total == sum(result.test_class_counts.values())


def test_zero_separation_data_scores_near_chance_auc():
    # Identically distributed classes leave nothing to learn: held-out
    # AUC sits at coin-flip level no matter what the model memorizes.
    data = generate_synthetic_imbalanced(2000, 0.5, 4, 0.0, seed=77)
    result = run_scenario(data, scenario("chance", Placement.NO_SAMPLING))
    assert 0.35 < result.metrics.auc < 0.65


class TestFingerprint:
    def test_order_independent(self):
        data = small_data()
        shuffled = data.select_rows(np.random.default_rng(0).permutation(data.n_rows))
        assert dataset_fingerprint(data) == dataset_fingerprint(shuffled)

    def test_sensitive_to_values_and_multiplicity(self):
        data = small_data()
        bumped = TabularDataset(
            features=np.vstack([data.features, data.features[:1]]),
            feature_names=data.feature_names,
            labels=np.concatenate([data.labels, data.labels[:1]]),
            provenance=data.provenance + (RowProvenance.original(0),),
        )
        assert dataset_fingerprint(data) != dataset_fingerprint(bumped)


class TestCompareScenarios:
    def run_pair(self):
        data = small_data()
        pre = run_scenario(
            data, scenario("pre", Placement.SAMPLING_BEFORE_SPLIT, smote_pipeline())
        )
        post = run_scenario(
            data, scenario("post", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline())
        )
        return pre, post

    def test_inflation_deltas(self):
        pre, post = self.run_pair()
        report = compare_scenarios([pre, post])
        assert report.names == ("pre", "post")
        assert len(report.inflation) == 1
        entry = report.inflation[0]
        assert entry["minuend"] == "pre" and entry["subtrahend"] == "post"
        expected = pre.metrics.recall - post.metrics.recall
        assert abs(entry["deltas"]["recall"] - expected) < 1e-15

    def test_self_comparison_gives_zero_deltas(self):
        _, post = self.run_pair()
        report = compare_scenarios([post, post])
        for entry in report.metric_deltas:
            assert all(v == 0.0 for v in entry["deltas"].values())

    def test_leaky_outperforming_clean_flagged(self):
        pre, post = self.run_pair()
        report = compare_scenarios([pre, post])
        if pre.metrics.f1 > post.metrics.f1:
            assert "pre" in report.leaky_outperforming_clean

    def test_mismatched_fingerprints_refused(self):
        pre, _ = self.run_pair()
        other = run_scenario(
            small_data(seed=99),
            scenario("other", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline()),
        )
        with pytest.raises(ValueError, match="different source"):
            compare_scenarios([pre, other])

    def test_mismatched_split_seeds_refused(self):
        data = small_data()
        a = run_scenario(
            data, scenario("a", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline(), split_seed=1)
        )
        b = run_scenario(
            data, scenario("b", Placement.SAMPLING_AFTER_SPLIT, smote_pipeline(), split_seed=2)
        )
        with pytest.raises(ValueError, match="seed"):
            compare_scenarios([a, b])

    def test_needs_two_results(self):
        pre, _ = self.run_pair()
        with pytest.raises(ValueError, match="two"):
            compare_scenarios([pre])


class TestScenarioSpecRoundTrip:
    def test_dict_round_trip(self):
        spec = scenario("x", Placement.SAMPLING_BEFORE_SPLIT, smote_pipeline(0.8, 3))
        assert ScenarioSpec.from_dict(spec.to_dict()) == spec

    def test_no_sampling_round_trip(self):
        spec = scenario("y", Placement.NO_SAMPLING)
        restored = ScenarioSpec.from_dict(spec.to_dict())
        assert restored == spec
        assert restored.pipeline is None
