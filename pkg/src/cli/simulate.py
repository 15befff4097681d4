import argparse
import logging
import os
from typing import Dict, Any

from src.cli.common import build_run_config
from src.config import deep_merge, read_run_file
from src.core.models.mixture import MixtureSpec
from src.core.services.simulation_service import SimulationService
from src.data.corpus.repository import CorpusRepository

logger = logging.getLogger(__name__)


def register_simulate_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команду генерации синтетического корпуса"""

    parser = subparsers.add_parser('simulate', parents=[common], help="Сгенерировать синтетический корпус")
    parser.add_argument('--spec', help="JSON-файл с параметрами смесей (поля MixtureSpec)")
    parser.add_argument('--out', help="Каталог корпуса (по умолчанию <work_dir>/corpus)")
    parser.add_argument('--train-size', type=int, help="Число обучающих смесей")
    parser.add_argument('--eval-size', type=int, help="Число тестовых смесей")

    def cmd_simulate(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Генерирует корпус и сохраняет его на диск"""
        config = build_run_config(args, settings)
        simulation = config.simulation
        spec = simulation.mixture
        if args.spec:
            spec = MixtureSpec.from_dict(deep_merge(spec.to_dict(), read_run_file(args.spec)))

        out = args.out or os.path.join(config.work_dir, "corpus")
        service = SimulationService(spec, CorpusRepository(out), settings.get('NUM_THREADS', 1))
        train_size = simulation.train_size if args.train_size is None else args.train_size
        eval_size = simulation.eval_size if args.eval_size is None else args.eval_size
        corpus = service.generate_corpus(train_size, eval_size)

        tokens = sum(len(m.tokens) for mixtures in corpus.values() for m in mixtures)
        logger.info(f"Корпус сохранен в {out}: {tokens} токенов")
        return {'corpus': out, 'train': len(corpus['train']), 'eval': len(corpus['eval']), 'tokens': tokens}

    parser.set_defaults(handler=cmd_simulate)
