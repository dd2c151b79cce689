#!/usr/bin/env python3
"""
📊 PROBE TABLE USE CASE
======================
Trains a forward and a backward SPCN hierarchy once on the grammar-A corpus
and probes every representation they produce:

- activation / traces / combined (the main comparison)
- forward-only variants (bidirectionality ablation)
- per-level traces (level ablation)
- fast traces only
- random projections to fixed widths (dimension-matched control)
- optionally a second pair trained without the associative buffer and probed
  without slow traces (activation plus fast traces only)

Domain-Driven Design: Application layer use case coordinating spcn and probing.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from domain.entities.grammar import LabeledSentence
from domain.entities.hierarchy import HierarchyOptions, Representations
from domain.entities.probe_report import (
    ABLATION_REFERENCE,
    PER_ROLE_TRANSFER_REFERENCE,
    PROJECTION_REFERENCE,
    SUPERVISED_REFERENCE,
    PROBE_REFERENCE,
    ProbeDataset,
    ProbeReport,
)
from domain.exceptions import ConfigError
from domain.services.grammar.grammar_generator import make_splits, read_corpus
from domain.services.probing.probe_evaluator import ProbeEvaluator
from domain.services.spcn.corpus_processor import CorpusProcessor, deep_mask, token_labels
from domain.services.spcn.hierarchy_dynamics import init_hierarchy, verify_fingerprint, weight_fingerprint
from infrastructure.repositories.checkpoint_repository import corpus_hash, save_hierarchy, save_representation
from infrastructure.repositories.file_repository import FileRepository

MAIN_KINDS = ("activation", "traces", "combined")
ABLATION_KINDS = ("fwd_activation", "fwd_traces", "fwd_combined", "fast_traces",
                  "level_traces_0", "level_traces_1", "level_traces_2", "level_traces_3")
NO_MACHINERY_KIND = "fast_combined"
SPLIT_FILES = ("train.txt", "test_within.txt", "test_transfer.txt")


@dataclass
class ProbeTableConfig:
    """Configuration for the probing table"""
    seed: int = 0
    corpus_dir: Optional[Path] = None
    dims: Tuple[int, ...] = (512, 256, 128, 64)
    lam: float = 0.01
    projection_dims: Tuple[int, ...] = (1024, 512)
    projection_seeds: int = 5
    use_spa: bool = True
    no_machinery_ablation: bool = True
    workers: int = 1
    dump_representations: bool = False
    log_every: int = 1000


@dataclass
class TrainedPair:
    train: Representations
    within: Representations
    transfer: Representations
    fingerprints: Dict[str, Dict[str, str]] = field(default_factory=dict)


class ProbeTableUseCase:
    """
    📊 Representation probing over one trained SPCN pair
    """

    def __init__(self, file_repository: FileRepository):
        self.file_repository = file_repository
        self.logger = logging.getLogger(__name__)

    @classmethod
    def create_from_env(cls, base_path: Path, force: bool = False) -> 'ProbeTableUseCase':
        return cls(FileRepository(base_path, force=force))

    def load_splits(self, config: ProbeTableConfig) -> Tuple[List[LabeledSentence], ...]:
        if config.corpus_dir is None:
            self.logger.info("📝 No corpus directory given, generating splits in memory")
            split = make_splits(config.seed)
            return split.train, split.test_within, split.test_transfer
        directory = Path(config.corpus_dir)
        missing = [name for name in SPLIT_FILES if not (directory / name).is_file()]
        if missing:
            raise ConfigError(f"corpus files missing in {directory}: {missing}")
        return tuple(read_corpus(directory / name) for name in SPLIT_FILES)

    def train_pair(self, config: ProbeTableConfig, sentences: Sequence[Sequence[LabeledSentence]],
                   use_spa: bool) -> Tuple[TrainedPair, Any, Any]:
        train, within, transfer = sentences
        options = HierarchyOptions(use_spa=use_spa, learn=True)
        fwd = init_hierarchy(config.dims, config.seed, options=options)
        bwd = init_hierarchy(config.dims, config.seed + 1, options=options)
        prints = {"fwd": weight_fingerprint(fwd), "bwd": weight_fingerprint(bwd)}

        processor = CorpusProcessor(log_every=config.log_every)
        train_reps = processor.process_corpus(fwd, bwd, train, train=True)
        verify_fingerprint(fwd, prints["fwd"])
        verify_fingerprint(bwd, prints["bwd"])
        self.logger.info("✅ Frozen feedforward and lateral weights unchanged after training")

        within_reps = processor.process_corpus(fwd, bwd, within, train=False, workers=config.workers)
        transfer_reps = processor.process_corpus(fwd, bwd, transfer, train=False, workers=config.workers)
        return TrainedPair(train_reps, within_reps, transfer_reps, prints), fwd, bwd

    @staticmethod
    def datasets(pair: TrainedPair, kind: str, labels: Sequence) -> Tuple[ProbeDataset, ...]:
        train_labels, within_labels, transfer_labels, within_deep, transfer_deep = labels
        return (
            ProbeDataset(pair.train.get(kind), train_labels),
            ProbeDataset(pair.within.get(kind), within_labels, within_deep),
            ProbeDataset(pair.transfer.get(kind), transfer_labels, transfer_deep),
        )

    def no_machinery_report(self, config: ProbeTableConfig, splits: Sequence[Sequence[LabeledSentence]],
                            labels: Sequence, evaluator: ProbeEvaluator) -> ProbeReport:
        """Pair trained without SPA, probed on activation plus fast traces (no slow traces)"""
        self.logger.info("🚀 Training the pair without the associative buffer")
        bare, _, _ = self.train_pair(config, splits, use_spa=False)
        return evaluator.probe("no_machinery", *self.datasets(bare, NO_MACHINERY_KIND, labels))

    async def execute(self, config: ProbeTableConfig) -> Dict[str, Any]:
        splits = self.load_splits(config)
        train, within, transfer = splits
        labels = (token_labels(train), token_labels(within), token_labels(transfer),
                  deep_mask(within), deep_mask(transfer))

        self.logger.info(f"🚀 Training SPCN pair (dims {config.dims}, seed {config.seed})")
        pair, fwd, bwd = self.train_pair(config, splits, config.use_spa)
        save_hierarchy(fwd, self.file_repository.path_for("spcn_fwd.npz", "checkpoints"))
        save_hierarchy(bwd, self.file_repository.path_for("spcn_bwd.npz", "checkpoints"))

        evaluator = ProbeEvaluator(config.lam)
        reports: Dict[str, ProbeReport] = {}
        for kind in MAIN_KINDS + ABLATION_KINDS:
            reports[kind] = evaluator.probe(kind, *self.datasets(pair, kind, labels))

        projections = []
        for kind in MAIN_KINDS:
            for d_out in config.projection_dims:
                result = evaluator.projection_control(kind, *self.datasets(pair, kind, labels), d_out=d_out,
                                                      seeds=range(config.projection_seeds))
                projections.append(result.to_dict())

        if config.no_machinery_ablation and config.use_spa:
            reports["no_machinery"] = self.no_machinery_report(config, splits, labels, evaluator)

        if config.dump_representations:
            digest = corpus_hash([s.to_line() for s in train])
            for kind in MAIN_KINDS:
                save_representation(pair.within.get(kind), self.file_repository.path_for("", "representations"),
                                    f"within_{kind}", digest)

        rows = [{
            "representation": name,
            "d": r.dim,
            "within": r.within,
            "within_low": r.intervals.get("within", (None, None))[0],
            "within_high": r.intervals.get("within", (None, None))[1],
            "transfer": r.transfer,
            "deep": r.deep,
            "deep_transfer": r.deep_transfer,
            "fraction_of_supervised": r.fraction_of_supervised,
        } for name, r in reports.items()]
        role_rows = [{"representation": name, "split": split, **row}
                     for name, r in reports.items() for split in ("within", "transfer")
                     for row in r.role_rows(split)]

        summary = {
            "rows": rows,
            "reports": {name: r.to_dict() for name, r in reports.items()},
            "projection_control": projections,
            "fingerprints": pair.fingerprints,
            "token_counts": {"train": len(labels[0]), "within": len(labels[1]), "transfer": len(labels[2])},
            "reference": {
                "table": PROBE_REFERENCE,
                "projection": PROJECTION_REFERENCE,
                "ablation": ABLATION_REFERENCE,
                "supervised": SUPERVISED_REFERENCE,
                "per_role_transfer": PER_ROLE_TRANSFER_REFERENCE,
            },
        }
        await self.file_repository.save_csv(rows, "table1.csv")
        await self.file_repository.save_csv(role_rows, "per_role.csv")
        await self.file_repository.save_json(summary, "table1.json")
        self.logger.info("✅ Probe table written")
        return summary
