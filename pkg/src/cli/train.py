import argparse
import logging
from typing import Dict, Any

from src.cli.common import asr_service, build_run_config, checkpoint_stem, corpus_repository
from src.core.services.speaker_service import SpeakerService

logger = logging.getLogger(__name__)


def register_train_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команды обучения ASR и модуля дикторов"""

    asr_parser = subparsers.add_parser('asr-train', parents=[common], help="Обучить трансформер-трансдьюсер")
    asr_parser.add_argument('--corpus', help="Каталог корпуса")
    asr_parser.add_argument('--out', help="Путь чекпоинта без расширения")
    asr_parser.add_argument('--steps', type=int, help="Число шагов обучения")

    spk_parser = subparsers.add_parser('spk-train', parents=[common], help="Обучить модуль t-векторов")
    spk_parser.add_argument('--corpus', help="Каталог корпуса")
    spk_parser.add_argument('--asr', help="Чекпоинт ASR без расширения")
    spk_parser.add_argument('--out', help="Путь чекпоинта без расширения")
    spk_parser.add_argument('--steps', type=int, help="Число шагов обучения")

    def cmd_asr_train(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Обучает ASR на обучающей части корпуса"""
        if args.steps is not None:
            args.overrides.append(f"asr_training.steps={args.steps}")
        config = build_run_config(args, settings)
        repository = corpus_repository(args.corpus, config)
        asr = asr_service(config, repository)
        losses = asr.train(repository.load_split('train'), config.asr_training)
        path = asr.save(checkpoint_stem(args.out, config, 'asr'))
        return {'checkpoint': path, 'steps': len(losses), 'final_loss': losses[-1] if losses else None}

    def cmd_spk_train(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Обучает энкодер дикторов и декодер t-векторов при замороженном ASR"""
        if args.steps is not None:
            args.overrides.append(f"speaker_training.steps={args.steps}")
        config = build_run_config(args, settings)
        repository = corpus_repository(args.corpus, config)
        asr = asr_service(config, repository)
        asr.load(checkpoint_stem(args.asr, config, 'asr'))

        speaker = SpeakerService(asr)
        losses = speaker.train(repository.load_split('train'), repository.population(), config.speaker_training)
        path = speaker.save(checkpoint_stem(args.out, config, 'speaker'))
        return {'checkpoint': path, 'steps': len(losses), 'final_loss': losses[-1] if losses else None}

    asr_parser.set_defaults(handler=cmd_asr_train)
    spk_parser.set_defaults(handler=cmd_spk_train)
