#!/usr/bin/env python3
"""
🗄️ CHECKPOINT REPOSITORY
=======================
Binary persistence for trained models and dumped representations.

- SPCN hierarchy: versioned .npz (weights, precision, err_var, config json)
- SPEN model: magic b"SPEN", uint32 version, uint32 header length, orjson
  header {config, tensors: [{name, shape, offset}]}, then little-endian
  float32 tensor data
- representations: <kind>.f32 rows of float32 plus a <kind>.meta key=value
  sidecar
"""

import hashlib
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import orjson

from domain.entities.hierarchy import Hierarchy, HierarchyOptions
from domain.entities.spen_model import BlockParams, SpenConfig, SpenModel
from domain.services.spcn.hierarchy_dynamics import init_hierarchy

logger = logging.getLogger(__name__)

SPCN_FORMAT_VERSION = 1
SPEN_MAGIC = b"SPEN"
SPEN_FORMAT_VERSION = 1
PathLike = Union[str, Path]


# ---------------------------------------------------------------------------
# SPCN
# ---------------------------------------------------------------------------

def save_hierarchy(hierarchy: Hierarchy, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: Dict[str, np.ndarray] = {}
    for lvl, level in enumerate(hierarchy.levels):
        arrays[f"w_ff_{lvl}"] = level.weights.w_ff
        arrays[f"w_lat_{lvl}"] = level.weights.w_lat
        if level.weights.w_fb is not None:
            arrays[f"w_fb_{lvl}"] = level.weights.w_fb
        arrays[f"precision_{lvl}"] = level.state.precision
        arrays[f"err_var_{lvl}"] = level.state.err_var
    header = {"format_version": SPCN_FORMAT_VERSION, "config": hierarchy.config_dict(),
              "tokens_seen": hierarchy.tokens_seen}
    arrays["header"] = np.frombuffer(orjson.dumps(header), dtype=np.uint8)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info(f"💾 Saved SPCN hierarchy: {path}")
    return path


def load_hierarchy(path: PathLike) -> Hierarchy:
    with np.load(Path(path)) as data:
        header = orjson.loads(data["header"].tobytes())
        if header.get("format_version") != SPCN_FORMAT_VERSION:
            raise ValueError(f"unsupported SPCN checkpoint version {header.get('format_version')}")
        cfg = header["config"]
        hierarchy = init_hierarchy(
            dims=[level["dim"] for level in cfg["levels"]],
            seed=cfg["seed"],
            input_dim=cfg["input_dim"],
            k_active=[level["k_active"] for level in cfg["levels"]],
            options=HierarchyOptions(use_spa=cfg["use_spa"], learn=cfg["learn"]),
            settle_steps=cfg["settle_steps"],
            mix=tuple(cfg["mix"]),
            eta=cfg["eta"],
            lambda_decay=cfg["lambda_decay"],
            rho=cfg["rho"],
            eps_precision=cfg["eps_precision"],
            pi_min=cfg["pi_min"],
            pi_max=cfg["pi_max"],
        )
        for lvl, level in enumerate(hierarchy.levels):
            level.weights.w_ff = data[f"w_ff_{lvl}"].copy()
            level.weights.w_lat = data[f"w_lat_{lvl}"].copy()
            if f"w_fb_{lvl}" in data:
                level.weights.w_fb = data[f"w_fb_{lvl}"].copy()
            level.state.precision = data[f"precision_{lvl}"].copy()
            level.state.err_var = data[f"err_var_{lvl}"].copy()
        hierarchy.tokens_seen = int(header.get("tokens_seen", 0))
    return hierarchy


# ---------------------------------------------------------------------------
# SPEN
# ---------------------------------------------------------------------------

def save_spen(model: SpenModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors: List[Dict[str, Any]] = []
    blobs: List[bytes] = []
    offset = 0
    items = list(model.named_parameters().items()) + [(f"buffer:{k}", v) for k, v in model.named_buffers().items()]
    for name, value in items:
        blob = np.ascontiguousarray(value, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(value.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = orjson.dumps({"config": model.config.to_dict(), "tensors": tensors}, option=orjson.OPT_SORT_KEYS)
    with open(path, "wb") as f:
        f.write(SPEN_MAGIC)
        f.write(struct.pack("<II", SPEN_FORMAT_VERSION, len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)
    logger.info(f"💾 Saved SPEN checkpoint ({model.n_parameters():,} parameters): {path}")
    return path


def load_spen(path: PathLike) -> SpenModel:
    raw = Path(path).read_bytes()
    if raw[:4] != SPEN_MAGIC:
        raise ValueError(f"{path} is not a SPEN checkpoint")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != SPEN_FORMAT_VERSION:
        raise ValueError(f"unsupported SPEN checkpoint version {version}")
    header = orjson.loads(raw[12:12 + header_len])
    data = raw[12 + header_len:]
    config = SpenConfig.from_dict(header["config"])

    tensors: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        array = np.frombuffer(data, dtype="<f4", count=count, offset=entry["offset"])
        tensors[entry["name"]] = array.reshape(entry["shape"]).astype(np.float32)

    blocks: List[BlockParams] = []
    for b in range(config.n_blocks):
        prefix = f"blocks.{b}."
        core = {name[len(prefix):]: value for name, value in tensors.items() if name.startswith(prefix)}
        predictor = {k[len("predictor."):]: v for k, v in core.items() if k.startswith("predictor.")}
        buffer_prefix = f"buffer:{prefix}"
        buffers = {name[len(buffer_prefix):]: value for name, value in tensors.items()
                   if name.startswith(buffer_prefix)}
        blocks.append(BlockParams(
            **{name: core[name] for name in BlockParams.CORE if name != "w_pred"},
            w_pred=core.get("w_pred"),
            predictor=predictor,
            buffers=buffers,
        ))
    return SpenModel(config=config, embedding=tensors["embedding"], blocks=blocks)


# ---------------------------------------------------------------------------
# Representation dumps
# ---------------------------------------------------------------------------

def save_representation(matrix: np.ndarray, directory: PathLike, kind: str, corpus_hash: str) -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data_path = directory / f"{kind}.f32"
    meta_path = directory / f"{kind}.meta"
    np.ascontiguousarray(matrix, dtype="<f4").tofile(data_path)
    meta = {"rows": matrix.shape[0], "dims": matrix.shape[1], "kind": kind, "corpus_hash": corpus_hash}
    meta_path.write_text("".join(f"{k}={meta[k]}\n" for k in sorted(meta)), encoding="utf-8")
    logger.info(f"💾 Saved {kind} representation {matrix.shape}: {data_path}")
    return data_path, meta_path


def load_representation(directory: PathLike, kind: str) -> Tuple[np.ndarray, Dict[str, str]]:
    directory = Path(directory)
    meta: Dict[str, str] = {}
    for line in (directory / f"{kind}.meta").read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key] = value
    matrix = np.fromfile(directory / f"{kind}.f32", dtype="<f4").reshape(int(meta["rows"]), int(meta["dims"]))
    return matrix, meta


def corpus_hash(lines: List[str]) -> str:
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()[:16]
