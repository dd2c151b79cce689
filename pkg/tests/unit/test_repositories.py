#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR FILE AND CHECKPOINT REPOSITORIES
==================================================
"""

import numpy as np
import pandas as pd
import pytest

from conftest import random_ids, tiny_config
from domain.entities.predictor import PredictorKind
from domain.exceptions import InvariantViolation
from domain.services.spcn.hierarchy_dynamics import init_hierarchy, step_token
from domain.services.spen.model import init_model, model_forward
from infrastructure.repositories.checkpoint_repository import (
    corpus_hash,
    load_hierarchy,
    load_representation,
    load_spen,
    save_hierarchy,
    save_representation,
    save_spen,
)
from infrastructure.repositories.file_repository import FileRepository


@pytest.mark.asyncio
async def test_json_roundtrip_and_overwrite_guard(tmp_path):
    """Test JSON output with numpy values and the refusal to clobber"""
    repository = FileRepository(tmp_path)
    await repository.save_json({"ce": np.float64(1.5), "kind": PredictorKind.STATIC}, "report.json")
    assert await repository.load_json("report.json") == {"ce": 1.5, "kind": "static"}
    with pytest.raises(InvariantViolation):
        await repository.save_json({}, "report.json")
    await FileRepository(tmp_path, force=True).save_json({"ce": 2.0}, "report.json")
    assert (await repository.load_json("report.json"))["ce"] == 2.0


@pytest.mark.asyncio
async def test_csv_and_jsonl(tmp_path):
    """Test CSV tables and append-only JSON lines"""
    repository = FileRepository(tmp_path)
    await repository.save_csv([{"role": "noun", "acc": 0.9}], "table.csv", columns=["role", "acc"])
    frame = pd.read_csv(tmp_path / "table.csv")
    assert frame.columns.tolist() == ["role", "acc"]
    await repository.append_jsonl({"i": 1}, "bench.jsonl")
    await repository.append_jsonl({"i": 2}, "bench.jsonl")
    assert (tmp_path / "bench.jsonl").read_text().splitlines() == ['{"i":1}', '{"i":2}']


@pytest.mark.parametrize("kind", [PredictorKind.STATIC, PredictorKind.SOFTMAX_ATTENTION,
                                  PredictorKind.PROJECTED_STATIC])
def test_spen_checkpoint_roundtrip(tmp_path, kind):
    """Test a float32 model reloads with identical parameters and logits"""
    model = init_model(tiny_config(kind), seed=7, dtype=np.float32)
    model.blocks[0].w_down[:] = 0.1
    path = save_spen(model, tmp_path / "model.spen")
    loaded = load_spen(path)
    assert loaded.config == model.config
    for name, value in model.named_parameters().items():
        assert np.array_equal(value, loaded.named_parameters()[name])
    ids = random_ids(20, seed=1)
    assert np.array_equal(model_forward(model, ids, train=False), model_forward(loaded, ids, train=False))


def test_spen_checkpoint_rejects_foreign_files(tmp_path):
    """Test the magic bytes are checked"""
    path = tmp_path / "junk.spen"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(ValueError):
        load_spen(path)


def test_hierarchy_checkpoint_roundtrip(tmp_path):
    """Test learned feedback weights and precision survive a reload"""
    hierarchy = init_hierarchy((16, 12, 8, 8), seed=2)
    for token in range(10):
        u = np.zeros(147)
        u[token] = 1.0
        step_token(hierarchy, u, train=True)
    loaded = load_hierarchy(save_hierarchy(hierarchy, tmp_path / "fwd.npz"))
    assert loaded.dims == hierarchy.dims
    assert loaded.tokens_seen == 10
    for a, b in zip(hierarchy.levels, loaded.levels):
        assert np.array_equal(a.weights.w_ff, b.weights.w_ff)
        assert np.array_equal(a.state.precision, b.state.precision)
        if a.weights.w_fb is not None:
            assert np.array_equal(a.weights.w_fb, b.weights.w_fb)


def test_representation_dump(tmp_path):
    """Test float32 rows and the metadata sidecar"""
    matrix = np.arange(12, dtype=np.float64).reshape(4, 3)
    digest = corpus_hash(["the cat sleeps ."])
    save_representation(matrix, tmp_path, "activation", digest)
    loaded, meta = load_representation(tmp_path, "activation")
    assert loaded.dtype == np.float32
    np.testing.assert_array_equal(loaded, matrix)
    assert meta == {"corpus_hash": digest, "dims": "3", "kind": "activation", "rows": "4"}
