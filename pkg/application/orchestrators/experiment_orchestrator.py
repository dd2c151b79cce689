#!/usr/bin/env python3
"""
🎯 EXPERIMENT ORCHESTRATOR
=========================
Runs one workbench command end to end.

This orchestrator manages:
- the run directory (resolved_config.txt, run.log, reports)
- translating the flat experiment config into use-case configs
- mapping failures to process exit codes

Domain-Driven Design: Application orchestrator for complete experiments.
"""

import logging
from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, Optional

from application.services.spen_setup import corpus_tokens, spen_config_from, training_config_from
from application.use_cases.ablation_use_case import AblationConfig, AblationUseCase
from application.use_cases.bench_scan_use_case import BenchConfig, BenchScanUseCase
from application.use_cases.generate_grammar_use_case import GenerateGrammarUseCase, GrammarConfig
from application.use_cases.probe_table_use_case import ProbeTableConfig, ProbeTableUseCase
from application.use_cases.stream_eval_use_case import StreamEvalConfig, StreamEvalUseCase, parse_grid
from application.use_cases.train_spen_use_case import TrainSpenConfig, TrainSpenUseCase
from domain.entities.predictor import PredictorKind
from domain.exceptions import ConfigError, DivergenceError, WorkbenchError
from infrastructure.config.experiment_config import ExperimentConfig, results_dir
from infrastructure.logging.log_setup import attach_run_log, detach
from infrastructure.repositories.checkpoint_repository import load_spen
from infrastructure.repositories.file_repository import FileRepository

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class ExperimentOrchestrator:
    """
    🎯 Main workbench orchestrator

    One instance per process; `run` returns the exit code.
    """

    def __init__(self, results_root: Optional[Path] = None, force: bool = False):
        self.results_root = Path(results_root) if results_root else results_dir()
        self.force = force
        self.logger = logging.getLogger(__name__)
        self.commands: Dict[str, Callable[[ExperimentConfig, FileRepository], Awaitable[Dict[str, Any]]]] = {
            "grammar": self.cmd_grammar,
            "table1": self.cmd_table1,
            "spen-train": self.cmd_spen_train,
            "ablate": self.cmd_ablate,
            "stream": self.cmd_stream,
            "bench": self.cmd_bench,
        }

    def run_dir_for(self, command: str, out_dir: Optional[str]) -> Path:
        if out_dir:
            return Path(out_dir)
        stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return self.results_root / f"{command}_{stamp}"

    async def run(self, config: ExperimentConfig, out_dir: Optional[str] = None) -> int:
        command = config.command
        if command not in self.commands:
            self.logger.error(f"❌ Unknown command {command!r}")
            return EXIT_CONFIG
        run_dir = self.run_dir_for(command, out_dir)
        repository = FileRepository(run_dir, force=self.force)
        handler = attach_run_log(run_dir)
        try:
            self.logger.info(f"🚀 {command} -> {run_dir}")
            await repository.save_text_file(config.resolved_text(), "resolved_config.txt")
            await self.commands[command](config, repository)
            self.logger.info(f"✅ {command} finished")
            return EXIT_OK
        except DivergenceError as e:
            self.logger.error(f"❌ {command}: {e.diagnostic()}")
            return e.exit_code
        except WorkbenchError as e:
            self.logger.error(f"❌ {command}: {type(e).__name__}: {str(e)}")
            return e.exit_code
        except (ValueError, FileNotFoundError) as e:
            self.logger.error(f"❌ {command}: invalid input: {str(e)}")
            return EXIT_CONFIG
        except Exception as e:
            self.logger.exception(f"❌ {command} failed: {str(e)}")
            return EXIT_FAILURE
        finally:
            detach(handler)

    # ---- commands -----------------------------------------------------------

    async def cmd_grammar(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        config = GrammarConfig(out_dir=repository.base_path, seed=cfg["seed"], n_train=cfg["n_train"],
                               n_test=cfg["n_test"], force=self.force)
        return await GenerateGrammarUseCase().execute(config)

    async def cmd_table1(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        if len(cfg["dims"]) != 4:
            raise ConfigError("dims must list four level widths")
        config = ProbeTableConfig(
            seed=cfg["seed"],
            corpus_dir=Path(cfg["corpus_dir"]) if cfg["corpus_dir"] else None,
            dims=tuple(cfg["dims"]),
            lam=cfg["lam"],
            projection_dims=tuple(cfg["projection_dims"]),
            projection_seeds=cfg["projection_seeds"],
            use_spa=cfg["use_spa"],
            no_machinery_ablation=cfg["no_machinery_ablation"],
            workers=cfg["workers"],
            dump_representations=cfg["dump_representations"],
            log_every=cfg["log_every"],
        )
        return await ProbeTableUseCase(repository).execute(config)

    async def cmd_spen_train(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        train_tokens, eval_tokens = corpus_tokens(cfg)
        config = TrainSpenConfig(spen=spen_config_from(cfg), training=training_config_from(cfg),
                                 check_equivalence=cfg["check_equivalence"])
        return await TrainSpenUseCase(repository).execute(config, train_tokens, eval_tokens)

    async def cmd_ablate(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        train_tokens, eval_tokens = corpus_tokens(cfg)
        try:
            arms = [PredictorKind(name.strip()) for name in cfg["arms"].split(",") if name.strip()]
        except ValueError as e:
            raise ConfigError(f"unknown predictor arm: {e}") from None
        config = AblationConfig(spen=spen_config_from(cfg), training=training_config_from(cfg),
                                seeds=tuple(cfg["seeds"]), arms=arms, parallel_arms=cfg["parallel_arms"])
        return await AblationUseCase(repository).execute(config, train_tokens, eval_tokens)

    async def cmd_stream(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        train_tokens, eval_tokens = corpus_tokens(cfg)
        if cfg["checkpoint"]:
            path = Path(cfg["checkpoint"])
            if not path.is_file():
                raise ConfigError(f"checkpoint not found: {path}")
            model = load_spen(path)
        else:
            self.logger.info("🏋️ No checkpoint given, training a static-predictor model first")
            spen = replace(spen_config_from(cfg), predictor=PredictorKind.STATIC)
            train_config = TrainSpenConfig(spen=spen, training=training_config_from(cfg), check_equivalence=False)
            use_case = TrainSpenUseCase(repository)
            result = use_case.train(train_config, train_tokens)
            await use_case.persist(train_config, result, train_tokens, eval_tokens)
            model = result.model
        config = StreamEvalConfig(grid=parse_grid(cfg["grid"]), window=cfg["window"],
                                  stream_tokens=cfg["stream_tokens"], flatness_bins=cfg["flatness_bins"],
                                  seed=cfg["seed"])
        in_distribution = eval_tokens if eval_tokens.size >= config.stream_tokens else train_tokens
        return await StreamEvalUseCase(repository).execute(config, model, in_distribution)

    async def cmd_bench(self, cfg: ExperimentConfig, repository: FileRepository) -> Dict[str, Any]:
        config = BenchConfig(T=cfg["T"], d=cfg["d"], chunk_len=cfg["chunk_len"], repeats=cfg["repeats"],
                             lanes=cfg["lanes"], alpha=cfg["alpha"], seed=cfg["seed"])
        return await BenchScanUseCase(repository).execute(config)
