#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
CLI 子命令處理器

每個子命令對應一個 handle_* 方法，結果以 JSON 輸出到 stdout（或 --out 指定的檔案），
診斷訊息走 logging（stderr）。
"""

import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np

from src.algorithms.metrics import energy_vad
from src.config import load_pipeline_config
from src.database.labels import read_labels
from src.database.manifest import ManifestRepository
from src.database.model_store import load_model, save_model
from src.database.wav_io import read_wav, write_wav
from src.models.configs import DfsmnConfig, PipelineConfig, TrainConfig
from src.models.datasets import SpecAugmentParams
from src.models.dfsmn_model import DfsmnModel, count_params, init_model
from src.services.datagen import build_corpus, toy_corpus
from src.services.evaluation import SWEEP_BETAS, beta_sweep, evaluate_pair
from src.services.pipeline import run_pipeline
from src.services.trainer import (
    TOY_DFSMN_CONFIG, TOY_TRAIN_CONFIG, example_from_components, examples_from_manifest, feature_stats,
    mean_stage_ser_improvement, train, write_loss_curve
)
from src.utils.errors import ConfigError, ShapeMismatchError

logger = logging.getLogger(__name__)

SKIP = '-'


class CommandHandler:
    def __init__(self, stream=None):
        self.stream = stream or sys.stdout

    def _emit(self, payload, out_path: Optional[str] = None):
        text = json.dumps(payload, indent=2, ensure_ascii=False)
        if out_path:
            with open(out_path, 'w', encoding='utf-8') as handle:
                handle.write(text + '\n')
            logger.info(f"[CLI] Report written to {out_path}")
        else:
            self.stream.write(text + '\n')
        return payload

    def handle(self, args) -> dict:
        method = getattr(self, f"handle_{args.command.replace('-', '_')}")
        return method(args)

    # ------------------------------------------------------------ process

    @staticmethod
    def _output_selection(args) -> Optional[str]:
        if args.output:
            return args.output
        if args.pairs:
            return None
        if args.out_vad and args.out_asr:
            return 'both'
        if args.out_vad:
            return 'vad'
        if args.out_asr:
            return 'asr'
        raise ConfigError("process needs --out-vad and/or --out-asr")

    def _pipeline_config(self, args) -> PipelineConfig:
        overrides = {
            'model.path': args.model,
            'pwf.beta_vad': args.beta_vad,
            'pwf.beta_asr': args.beta_asr,
            'tde.max_delay_ms': args.max_delay_ms,
            'tde.enabled': False if args.no_tde else None,
            'output.select': self._output_selection(args),
            'output.mask_mode': args.mask_mode,
        }
        return load_pipeline_config(args.config, overrides)

    @staticmethod
    def _load_checked_model(config: PipelineConfig) -> Optional[DfsmnModel]:
        if not config.model_path:
            logger.info("[CLI] No model configured, running LAEC only")
            return None
        model = load_model(config.model_path)
        if model.config.bins != config.stft.bins():
            raise ShapeMismatchError(
                f"model has {model.config.bins} bins, STFT config produces {config.stft.bins()}")
        return model

    @staticmethod
    def _process_pair(config: PipelineConfig, model, ref_path: str, mic_path: str,
                      targets: Dict[str, str], chunk_size: Optional[int]) -> dict:
        reference = read_wav(ref_path)
        mic = read_wav(mic_path)
        result = run_pipeline(config, reference, mic, model=model, chunk_size=chunk_size)
        written = {}
        for name, path in targets.items():
            if path and path != SKIP and name in result.outputs:
                written[name] = write_wav(path, result.outputs[name])
        logger.info(f"[CLI] Processed {mic_path} -> {', '.join(written.values()) or 'nothing'}")
        return {'mic': mic_path, 'reference': ref_path, 'delay': result.delay.to_dict(), 'outputs': written}

    @staticmethod
    def _read_pairs(path: str, min_fields: int) -> List[List[str]]:
        rows = []
        with open(path, 'r', encoding='utf-8') as handle:
            for line_no, line in enumerate(handle, start=1):
                fields = line.split()
                if not fields or fields[0].startswith('#'):
                    continue
                if len(fields) < min_fields:
                    raise ConfigError(f"{path}:{line_no}: expected at least {min_fields} fields")
                rows.append(fields)
        return rows

    def handle_process(self, args) -> dict:
        config = self._pipeline_config(args)
        model = self._load_checked_model(config)

        if not args.pairs:
            if not (args.ref and args.mic):
                raise ConfigError("process needs --ref and --mic (or --pairs)")
            report = self._process_pair(config, model, args.ref, args.mic,
                                        {'vad': args.out_vad, 'asr': args.out_asr}, args.chunk_size)
            return self._emit(report, args.report)

        # 每列：ref mic out_vad out_asr（'-' 表示不輸出）
        rows = self._read_pairs(args.pairs, 4)
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(self._process_pair, config, model, row[0], row[1],
                                   {'vad': row[2], 'asr': row[3]}, args.chunk_size) for row in rows]
            reports = [future.result() for future in futures]
        return self._emit(reports, args.report)

    # ------------------------------------------------------------ synth

    def handle_synth(self, args) -> dict:
        repository = build_corpus(args.out, args.examples, seed=args.seed, duration_s=args.duration)
        return self._emit({'manifest': repository.path, 'count': repository.count()})

    # ------------------------------------------------------------ eval

    def handle_eval_erle(self, args) -> dict:
        if args.pairs:
            rows = self._read_pairs(args.pairs, 2)
        elif args.mic and args.processed:
            rows = [[args.mic, args.processed]]
        else:
            raise ConfigError("eval-erle needs --mic and --processed (or --pairs)")

        reports = []
        for row in rows:
            speech = read_wav(args.speech) if args.speech else None
            echo = read_wav(args.echo) if args.echo else None
            report = evaluate_pair(mic=read_wav(row[0]), processed=read_wav(row[1]), speech=speech, echo=echo)
            reports.append({'mic': row[0], 'processed': row[1], **report.to_dict()})
        return self._emit(reports if args.pairs else reports[0], args.out)

    def handle_eval_dcf(self, args) -> dict:
        truth = read_labels(args.truth)
        if args.decisions:
            decisions = read_labels(args.decisions)
        elif args.wav:
            decisions = energy_vad(read_wav(args.wav), args.threshold_db, args.hangover)
        else:
            raise ConfigError("eval-dcf needs --decisions or --wav")
        report = evaluate_pair(decisions=decisions, truth=truth)
        return self._emit(report.to_dict(), args.out)

    def handle_eval_beta(self, args) -> dict:
        betas = [float(value) for value in args.betas.split(',')] if args.betas else list(SWEEP_BETAS)
        model = load_model(args.model) if args.model else None
        speech = read_wav(args.speech) if args.speech else None
        config = load_pipeline_config(args.config)
        rows = beta_sweep(read_wav(args.ref), read_wav(args.mic), speech=speech, betas=betas,
                          model=model, config=config, leak=args.leak)
        return self._emit(rows, args.out)

    # ------------------------------------------------------------ train / model

    def handle_train_toy(self, args) -> dict:
        net_config = DfsmnConfig() if args.full_size else TOY_DFSMN_CONFIG
        if args.manifest:
            dataset = examples_from_manifest(ManifestRepository(args.manifest), limit=args.examples)
            held_out = []
        else:
            dataset = [example_from_components(c) for c in toy_corpus(args.examples, seed=args.seed)]
            held_out = toy_corpus(args.held_out, seed=args.seed + 1) if args.held_out else []

        mean, std = feature_stats(dataset)
        model = init_model(net_config, np.random.default_rng(args.seed), norm_mean=mean, norm_std=std)
        train_config = TrainConfig(
            learning_rate=args.lr if args.lr is not None else TOY_TRAIN_CONFIG.learning_rate,
            momentum=args.momentum,
            epochs=args.epochs,
            batch_size=args.batch_size,
            rng_seed=args.seed,
            grad_clip=args.grad_clip if args.grad_clip is not None else TOY_TRAIN_CONFIG.grad_clip,
        )
        augment = SpecAugmentParams() if args.spec_augment else None
        result = train(model, dataset, train_config, augment=augment)
        save_model(result.model, args.out)
        if args.loss_csv:
            write_loss_curve(args.loss_csv, result.losses)

        summary = {
            'model': args.out,
            'examples': len(dataset),
            'spec_augment': augment is not None,
            'initial_loss': result.initial_loss,
            'final_loss': result.losses[-1] if result.losses else result.initial_loss,
            'losses': result.losses,
        }
        if held_out:
            summary['stage_ser_improvement_db'] = mean_stage_ser_improvement(result.model, held_out)
        return self._emit(summary, args.report)

    def handle_info(self, args) -> dict:
        if args.model:
            model = load_model(args.model)
            config, num_params = model.config, model.num_params()
        else:
            config = TOY_DFSMN_CONFIG if args.toy else DfsmnConfig()
            num_params = count_params(config)
        return self._emit({'config': config.to_dict(), 'num_params': num_params,
                           'num_layers': config.num_layers})

    def handle_init_model(self, args) -> dict:
        config = TOY_DFSMN_CONFIG if args.toy else DfsmnConfig()
        model = init_model(config, np.random.default_rng(args.seed))
        save_model(model, args.out)
        return self._emit({'model': args.out, 'num_params': model.num_params()})
