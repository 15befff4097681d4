import argparse
import json
import logging
import os
from typing import Dict, Any

from src.cli.common import asr_service, build_run_config, checkpoint_stem, corpus_repository
from src.core.models.hypothesis import DecodedStream
from src.core.services.attribution_service import AttributionService, summarize_reference_scores
from src.core.services.simulation_service import oracle_tvectors
from src.core.services.speaker_service import SpeakerService
from src.data.jsonl.token_stream import read_profiles, write_records

logger = logging.getLogger(__name__)


def register_attribute_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команду потоковой атрибуции дикторов"""

    parser = subparsers.add_parser('attribute', parents=[common], help="Атрибутировать дикторов (SID или SD)")
    parser.add_argument('--mode', choices=['sid', 'sd'], help="Режим атрибуции")
    parser.add_argument('--profiles', help="JSONL с профилями дикторов (по умолчанию пул каждой смеси)")
    parser.add_argument('--delay-words', type=int, help="Задержка решения D в словах")
    parser.add_argument('--sd-threshold', type=float, help="Порог косинуса для обнаружения смены в SD")
    parser.add_argument('--corpus', help="Каталог корпуса")
    parser.add_argument('--split', default='eval', help="Часть корпуса")
    parser.add_argument('--decoded', help="Каталог распознанных потоков (по умолчанию <work_dir>/decode)")
    parser.add_argument('--reference', action='store_true', help="Атрибутировать эталонные транскрипции")
    parser.add_argument('--asr', help="Чекпоинт ASR без расширения")
    parser.add_argument('--speaker', help="Чекпоинт модуля дикторов без расширения")
    parser.add_argument('--out', help="Каталог результатов (по умолчанию <work_dir>/attribute)")

    def cmd_attribute(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """
        Атрибутирует потоки смесей и сохраняет JSONL {token, channel, speaker, final_at_token_index}

        С оракульными эмбеддингами (embedding_source=oracle) атрибутируется
        эталонный поток.
        """
        for flag, key in (('mode', 'attribution.mode'), ('delay_words', 'attribution.delay_words'),
                          ('sd_threshold', 'attribution.sd_threshold')):
            if getattr(args, flag) is not None:
                args.overrides.append(f"{key}={json.dumps(getattr(args, flag))}")
        config = build_run_config(args, settings)
        repository = corpus_repository(args.corpus, config)
        service = AttributionService(config.attribution)
        profiles = read_profiles(args.profiles) if args.profiles else None

        oracle = config.embedding_source == 'oracle'
        use_reference = oracle or args.reference
        speaker = None
        if not oracle:
            asr = asr_service(config, repository)
            asr.load(checkpoint_stem(args.asr, config, 'asr'))
            speaker = SpeakerService(asr)
            speaker.load(checkpoint_stem(args.speaker, config, 'speaker'))

        decoded_dir = args.decoded or os.path.join(config.work_dir, 'decode')
        out = args.out or os.path.join(config.work_dir, 'attribute')
        scores = []
        tokens = 0
        for sample_id in repository.sample_ids(args.split):
            mixture = repository.load_mixture(args.split, sample_id)
            if use_reference:
                tvectors = oracle_tvectors(mixture) if oracle else speaker.reference_tvectors(mixture)
                result = service.attribute_reference(mixture, tvectors, profiles)
                scores.append(service.score_reference(mixture, result))
            else:
                path = os.path.join(decoded_dir, f"{sample_id}.json")
                if not os.path.exists(path):
                    raise FileNotFoundError(f"Нет результата распознавания: {path}")
                with open(path, 'r', encoding='utf-8') as f:
                    decoded = DecodedStream.from_dict(json.load(f))
                tvectors = speaker.extract(mixture.features, decoded.stream.entries, decoded.frames)
                result = service.attribute(mixture, decoded, tvectors, profiles)
            tokens += write_records(os.path.join(out, f"{sample_id}.jsonl"), result.to_records())

        report: Dict[str, Any] = {'out': out, 'mode': config.attribution.mode, 'tokens': tokens,
                                  'source': 'reference' if use_reference else 'decoded'}
        if scores:
            report['reference_attribution'] = summarize_reference_scores(scores)
        return report

    parser.set_defaults(handler=cmd_attribute)
