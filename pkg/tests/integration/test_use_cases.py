#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR USE CASES AND THE EXPERIMENT ORCHESTRATOR
===========================================================
"""

import pytest

from application.orchestrators.experiment_orchestrator import ExperimentOrchestrator
from application.use_cases.bench_scan_use_case import BenchConfig, BenchScanUseCase
from application.use_cases.generate_grammar_use_case import GenerateGrammarUseCase, GrammarConfig
from application.use_cases.probe_table_use_case import ProbeTableConfig, ProbeTableUseCase
from application.use_cases.stream_eval_use_case import parse_grid
from domain.exceptions import ConfigError, DivergenceError, InvariantViolation
from domain.entities.probe_report import ABLATION_REFERENCE
from domain.services.grammar.grammar_generator import make_splits, read_corpus
from domain.services.probing.probe_evaluator import ProbeEvaluator
from domain.services.spcn.corpus_processor import deep_mask, token_labels
from infrastructure.config.experiment_config import load_config
from infrastructure.repositories.file_repository import FileRepository

TINY_TRAIN = ["n_sentences=40", "d_model=8", "d_ff=16", "k_active=4", "seq_len=16", "chunk_len=4",
              "steps=2", "batch_size=2", "dtype=float64"]


def test_parse_grid():
    """Test eta:pi_max pairs, the default pi_max and malformed entries"""
    assert parse_grid("0:10, 1e-3:100,") == [(0.0, 10.0), (1e-3, 100.0)]
    assert parse_grid("1e-4") == [(1e-4, 10.0)]
    with pytest.raises(ConfigError):
        parse_grid("fast:1")
    with pytest.raises(ConfigError):
        parse_grid(" , ")


@pytest.mark.asyncio
async def test_grammar_use_case_writes_readable_splits(tmp_path):
    """Test the three split files parse back with their sizes"""
    result = await GenerateGrammarUseCase().execute(GrammarConfig(out_dir=tmp_path, n_train=30, n_test=12))
    assert result["sizes"] == {"train": 30, "test_within": 12, "test_transfer": 12}
    assert len(read_corpus(tmp_path / "test_transfer.txt")) == 12
    with pytest.raises(InvariantViolation):
        await GenerateGrammarUseCase().execute(GrammarConfig(out_dir=tmp_path, n_train=30, n_test=12))


@pytest.mark.asyncio
async def test_bench_use_case_record(tmp_path):
    """Test the bench record carries throughput and deviation"""
    record = await BenchScanUseCase(FileRepository(tmp_path)).execute(
        BenchConfig(T=64, d=4, chunk_len=8, repeats=1, lanes=1))
    assert record["tok_per_s_seq"] > 0
    assert record["tok_per_s_chunked"] > 0
    assert (tmp_path / "bench.jsonl").is_file()


@pytest.mark.asyncio
async def test_orchestrator_maps_divergence_to_exit_4(tmp_path, mocker):
    """Test a diverging training run exits 4"""
    mocker.patch("application.use_cases.train_spen_use_case.MicroTrainer.train",
                 side_effect=DivergenceError("loss is nan", step=2, last_finite_loss=4.1))
    config = load_config("spen-train", overrides=TINY_TRAIN)
    assert await ExperimentOrchestrator(results_root=tmp_path).run(config, out_dir=str(tmp_path / "run")) == 4
    assert "diverged at step 2" in (tmp_path / "run" / "run.log").read_text()


@pytest.mark.asyncio
async def test_orchestrator_maps_unexpected_errors_to_exit_1(tmp_path, mocker):
    """Test an unexpected exception exits 1"""
    mocker.patch("application.use_cases.train_spen_use_case.MicroTrainer.train", side_effect=RuntimeError("boom"))
    config = load_config("spen-train", overrides=TINY_TRAIN)
    assert await ExperimentOrchestrator(results_root=tmp_path).run(config, out_dir=str(tmp_path / "run")) == 1


@pytest.mark.asyncio
async def test_orchestrator_default_run_directory(tmp_path):
    """Test runs without --out-dir land in a timestamped folder under the results root"""
    config = load_config("bench", overrides=["T=32", "d=2", "chunk_len=8", "repeats=1", "lanes=1"])
    assert await ExperimentOrchestrator(results_root=tmp_path).run(config) == 0
    runs = list(tmp_path.glob("bench_*"))
    assert len(runs) == 1
    assert (runs[0] / "resolved_config.txt").read_text().startswith("command=bench\n")


def test_no_machinery_arm_drops_spa_and_slow_traces(tmp_path, mocker):
    """Test the ablated pair trains without SPA and is probed without slow traces"""
    split = make_splits(seed=2, n_train=20, n_test=8)
    splits = (split.train, split.test_within, split.test_transfer)
    labels = (token_labels(split.train), token_labels(split.test_within), token_labels(split.test_transfer),
              deep_mask(split.test_within), deep_mask(split.test_transfer))
    config = ProbeTableConfig(dims=(16, 12, 8, 8), projection_seeds=1)
    use_case = ProbeTableUseCase(FileRepository(tmp_path))
    spy = mocker.spy(use_case, "train_pair")

    report = use_case.no_machinery_report(config, splits, labels, ProbeEvaluator(config.lam))

    assert spy.call_args.kwargs["use_spa"] is False
    assert report.representation == "no_machinery"
    assert report.dim == 4 * 16
    assert "no_machinery" in ABLATION_REFERENCE
