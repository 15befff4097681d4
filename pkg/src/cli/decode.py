import argparse
import json
import logging
import os
from typing import Dict, Any

from src.cli.common import asr_service, build_run_config, checkpoint_stem, corpus_repository
from src.data.jsonl.token_stream import write_stream_text

logger = logging.getLogger(__name__)


def register_decode_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команду распознавания"""

    parser = subparsers.add_parser('decode', aliases=['asr-decode'], parents=[common],
                                   help="Распознать смеси лучевым поиском")
    parser.add_argument('--corpus', help="Каталог корпуса")
    parser.add_argument('--split', default='eval', help="Часть корпуса")
    parser.add_argument('--asr', help="Чекпоинт ASR без расширения")
    parser.add_argument('--chunk-frames', type=int, help="Размер блока маски внимания в кадрах энкодера")
    parser.add_argument('--beam', type=int, help="Ширина луча")
    parser.add_argument('--out', help="Каталог результатов (по умолчанию <work_dir>/decode)")

    def cmd_decode(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Распознает смеси и сохраняет потоки t-SOT"""
        if args.chunk_frames is not None:
            args.overrides.append(f"mask.chunk_size={args.chunk_frames}")
        if args.beam is not None:
            args.overrides.append(f"decoding.beam_width={args.beam}")
        config = build_run_config(args, settings)
        repository = corpus_repository(args.corpus, config)
        asr = asr_service(config, repository)
        asr.load(checkpoint_stem(args.asr, config, 'asr'))

        out = args.out or os.path.join(config.work_dir, 'decode')
        os.makedirs(out, exist_ok=True)
        streams = {}
        for sample_id in repository.sample_ids(args.split):
            mixture = repository.load_mixture(args.split, sample_id)
            decoded = asr.decode(sample_id, mixture.features, config.decoding)
            with open(os.path.join(out, f"{sample_id}.json"), 'w', encoding='utf-8') as f:
                json.dump(decoded.to_dict(), f, ensure_ascii=False)
            write_stream_text(os.path.join(out, f"{sample_id}.txt"), decoded.stream)
            streams[sample_id] = decoded.stream.to_text()

        logger.info(f"Распознано {len(streams)} смесей, результаты в {out}")
        return {'out': out, 'samples': len(streams), 'streams': streams}

    parser.set_defaults(handler=cmd_decode)
