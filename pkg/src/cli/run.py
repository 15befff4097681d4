import argparse
import json
import logging
from typing import Dict, Any

from src.cli.common import build_run_config
from src.core.models.run_config import STAGES
from src.core.services.pipeline_service import pipeline_run

logger = logging.getLogger(__name__)


def register_run_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команду полного прогона конвейера"""

    parser = subparsers.add_parser('run', parents=[common], help="Выполнить конвейер целиком")
    parser.add_argument('--stages', nargs='+', choices=STAGES, help="Подмножество этапов")

    def cmd_run(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Выполняет этапы simulate -> asr-train -> spk-train -> decode -> attribute -> eval"""
        if args.stages:
            args.overrides.append(f"stages={json.dumps(args.stages)}")
        config = build_run_config(args, settings)
        report = pipeline_run(config, settings.get('NUM_THREADS', 1))
        logger.info("\n" + report.render_text())
        result = report.to_dict()
        result['work_dir'] = config.work_dir
        result['stages'] = report.stages
        return result

    parser.set_defaults(handler=cmd_run)
