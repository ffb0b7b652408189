"""Tests for the runtime benchmark."""

import pytest

from app.lib.common.exceptions import ConfigurationError
from app.lib.detectors import SphereDecoder, ZeroForcingDetector
from app.lib.evaluation.bench import BENCH_COLUMNS, runtime_bench


@pytest.mark.integration
class TestRuntimeBench:
    """Per-sample wall-clock timings."""

    def test_one_record_per_detector_and_batch(self, small_model, bpsk):
        records = runtime_bench(
            [ZeroForcingDetector(bpsk), SphereDecoder(bpsk)],
            small_model,
            bpsk,
            5.0,
            10.0,
            batch_sizes=(1, 5),
            repetitions=3,
            warmup=1,
        )
        assert [(r.detector, r.batch) for r in records] == [("zf", 1), ("sd", 1), ("zf", 5), ("sd", 5)]
        for record in records:
            assert 0.0 <= record.min_s <= record.median_s <= record.max_s
            assert record.min_s <= record.mean_s <= record.max_s
        assert set(records[0].as_dict()) == set(BENCH_COLUMNS)

    def test_search_detectors_timed_per_instance(self, small_model, bpsk):
        records = runtime_bench([SphereDecoder(bpsk)], small_model, bpsk, 5.0, 5.0, batch_sizes=(1, 4), repetitions=3)
        assert [r.repetitions for r in records] == [3, 4]

    def test_tree_search_reports_nodes(self, small_model, bpsk):
        records = runtime_bench(
            [ZeroForcingDetector(bpsk), SphereDecoder(bpsk)], small_model, bpsk, 10.0, 10.0, batch_sizes=(6,), repetitions=6
        )
        zf, sd = records
        assert zf.median_nodes is None
        # At least one node per tree level
        assert 4 <= sd.min_nodes <= sd.median_nodes <= sd.max_nodes
        assert "nodes=" in sd.summary()

    def test_batched_detectors_timed_per_batch(self, small_model, bpsk):
        records = runtime_bench([ZeroForcingDetector(bpsk)], small_model, bpsk, 5.0, 5.0, batch_sizes=(8,), repetitions=4)
        assert records[0].repetitions == 4

    def test_rejects_zero_repetitions(self, small_model, bpsk):
        with pytest.raises(ConfigurationError):
            runtime_bench([ZeroForcingDetector(bpsk)], small_model, bpsk, 0.0, 0.0, repetitions=0)
