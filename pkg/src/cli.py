#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
命令列入口

使用方式:
    python -m src.cli process --ref r.wav --mic m.wav --model w.bin --out-asr a.wav --out-vad v.wav
    python -m src.cli synth --out data/ --examples 10
    python -m src.cli eval-erle --mic m.wav --processed v.wav
    python -m src.cli eval-dcf --decisions d.txt --truth t.txt
    python -m src.cli eval-beta --ref r.wav --mic m.wav
    python -m src.cli train-toy --out toy.bin --loss-csv loss.csv
    python -m src.cli info [--model w.bin]
    python -m src.cli init-model --out w.bin

結束碼: 0 成功, 1 使用錯誤, 2 資料錯誤
"""

import argparse
import logging
import sys

from src.config import get_config
from src.handlers.command_handler import CommandHandler
from src.models.configs import MASK_MODES, OUTPUT_SELECTIONS
from src.utils.errors import AecError, ConfigError
from src.utils.log import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """參數錯誤改為拋出例外，由 main 轉成結束碼 1"""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='aec', description='Streaming two-stage acoustic echo cancellation toolkit')
    parser.add_argument('--log-level', default=None, help='DEBUG / INFO / WARNING / ERROR')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    process = commands.add_parser('process', help='run TDE -> LAEC -> RES -> PWF on WAV pairs')
    process.add_argument('--ref', help='far-end reference WAV')
    process.add_argument('--mic', help='microphone WAV')
    process.add_argument('--pairs', help='file with lines "ref mic out_vad out_asr" (- to skip)')
    process.add_argument('--workers', type=int, default=4, help='parallel pairs (with --pairs)')
    process.add_argument('--model', help='DFSMN model file (omit for LAEC only)')
    process.add_argument('--config', help='key=value pipeline config file')
    process.add_argument('--out-vad', help='output WAV for the VAD consumer')
    process.add_argument('--out-asr', help='output WAV for the ASR consumer')
    process.add_argument('--output', choices=OUTPUT_SELECTIONS)
    process.add_argument('--beta-vad', type=float)
    process.add_argument('--beta-asr', type=float)
    process.add_argument('--max-delay-ms', type=int)
    process.add_argument('--no-tde', action='store_true', help='skip delay estimation')
    process.add_argument('--mask-mode', choices=MASK_MODES)
    process.add_argument('--chunk-size', type=int, help='push samples in chunks of this size')
    process.add_argument('--report', help='write the JSON summary here instead of stdout')

    synth = commands.add_parser('synth', help='synthesize a training corpus with a JSON-lines manifest')
    synth.add_argument('--out', required=True, help='output directory')
    synth.add_argument('--examples', type=int, default=10)
    synth.add_argument('--seed', type=int, default=0)
    synth.add_argument('--duration', type=float, default=4.0, help='seconds per example')

    eval_erle = commands.add_parser('eval-erle', help='ERLE (and optionally SER) report')
    eval_erle.add_argument('--mic')
    eval_erle.add_argument('--processed')
    eval_erle.add_argument('--pairs', help='file with lines "mic processed"')
    eval_erle.add_argument('--speech', help='near-end speech component (for SER)')
    eval_erle.add_argument('--echo', help='echo component (for SER)')
    eval_erle.add_argument('--out')

    eval_dcf = commands.add_parser('eval-dcf', help='frame-level DCF report')
    eval_dcf.add_argument('--truth', required=True, help='ground-truth 0/1 label file')
    eval_dcf.add_argument('--decisions', help='decision 0/1 label file')
    eval_dcf.add_argument('--wav', help='derive decisions with the energy VAD on this WAV')
    eval_dcf.add_argument('--threshold-db', type=float, default=-30.0)
    eval_dcf.add_argument('--hangover', type=int, default=0)
    eval_dcf.add_argument('--out')

    eval_beta = commands.add_parser('eval-beta', help='ERLE versus Wiener exponent on far-end single talk')
    eval_beta.add_argument('--ref', required=True)
    eval_beta.add_argument('--mic', required=True)
    eval_beta.add_argument('--speech', help='near-end speech for oracle masks (default: silence)')
    eval_beta.add_argument('--model', help='use this model instead of oracle masks')
    eval_beta.add_argument('--betas', help='comma separated, default 0.1,0.2,0.4,0.6,0.8')
    eval_beta.add_argument('--leak', type=float, default=0.05)
    eval_beta.add_argument('--config')
    eval_beta.add_argument('--out')

    train_toy = commands.add_parser('train-toy', help='desk-scale progressive-learning training')
    train_toy.add_argument('--out', required=True, help='model file to write')
    train_toy.add_argument('--manifest', help='train on a synthesized corpus instead of the toy corpus')
    train_toy.add_argument('--examples', type=int, default=200)
    train_toy.add_argument('--held-out', type=int, default=20)
    train_toy.add_argument('--epochs', type=int, default=50)
    train_toy.add_argument('--lr', type=float)
    train_toy.add_argument('--momentum', type=float, default=0.9)
    train_toy.add_argument('--batch-size', type=int, default=8)
    train_toy.add_argument('--grad-clip', type=float, help='global gradient norm limit (default: toy preset)')
    train_toy.add_argument('--spec-augment', action='store_true', help='mask reference features during training')
    train_toy.add_argument('--seed', type=int, default=0)
    train_toy.add_argument('--full-size', action='store_true', help='use the default 9-layer 128/80 network')
    train_toy.add_argument('--loss-csv')
    train_toy.add_argument('--report')

    info = commands.add_parser('info', help='print model config and parameter count')
    info.add_argument('--model')
    info.add_argument('--toy', action='store_true')

    init = commands.add_parser('init-model', help='write a randomly initialized model')
    init.add_argument('--out', required=True)
    init.add_argument('--seed', type=int, default=0)
    init.add_argument('--toy', action='store_true')
    return parser


def main(argv=None, stream=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level or get_config().LOG_LEVEL)
    try:
        CommandHandler(stream).handle(args)
    except ConfigError as e:
        logger.error(f"[CLI] {e}")
        return EXIT_USAGE
    except (AecError, OSError) as e:
        logger.error(f"[CLI] {e}")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
