import argparse
import os
from typing import Dict, Any, Optional

from src.config import load_run_config, preset_names
from src.core.models.run_config import RunConfig
from src.core.services.asr_service import AsrService
from src.data.corpus.repository import CorpusRepository


def common_parser() -> argparse.ArgumentParser:
    """Флаги, общие для всех подкоманд"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', help="JSON-файл конфигурации запуска")
    parser.add_argument('--preset', choices=preset_names(), help="Именованный набор параметров")
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help="Изменение параметра, например attribution.delay_words=4")
    parser.add_argument('--work-dir', help="Рабочий каталог запуска")
    parser.add_argument('--json', action='store_true', help="Вывести результат в stdout в формате JSON")
    parser.add_argument('--log-level', help="Уровень логирования (DEBUG, INFO, WARNING, ERROR)")
    return parser


def build_run_config(args: argparse.Namespace, settings: Dict[str, Any]) -> RunConfig:
    """
    Конфигурация запуска из флагов подкоманды

    Рабочий каталог: --work-dir, затем work_dir из файла и --set,
    затем <TSOT_WORK_DIR>/<preset или default>.
    """
    default_dir = os.path.join(settings.get('WORK_DIR', 'runs'), args.preset or 'default')
    overrides = list(args.overrides)
    if args.work_dir:
        overrides.append(f"work_dir={args.work_dir}")
    return load_run_config(args.config, overrides, preset=args.preset, work_dir=default_dir)


def corpus_repository(path: Optional[str], config: RunConfig) -> CorpusRepository:
    """
    Репозиторий корпуса по явному пути или в рабочем каталоге

    Raises:
        FileNotFoundError: Если манифест корпуса не найден
    """
    repository = CorpusRepository(path or os.path.join(config.work_dir, 'corpus'))
    if not repository.exists():
        raise FileNotFoundError(f"Корпус не найден: {repository.root}")
    return repository


def checkpoint_stem(path: Optional[str], config: RunConfig, name: str) -> str:
    return path or os.path.join(config.work_dir, 'checkpoints', name)


def asr_service(config: RunConfig, repository: CorpusRepository) -> AsrService:
    """Сервис ASR с размерами из конфигурации и словарем корпуса"""
    spec = repository.spec()
    return AsrService(config.model, config.mask, repository.vocabulary(), spec.feature_dim,
                      frame_hop_seconds=spec.frame_hop_seconds, max_channels=spec.max_overlap)
