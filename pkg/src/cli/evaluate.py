import argparse
import logging
import os
from typing import List, Dict, Any, Tuple

from src.cli.common import build_run_config
from src.core.errors import EmptyInput
from src.core.services.evaluation_service import EvaluationService
from src.data.jsonl.token_stream import read_tokens
from src.utils.file_utils import list_files

logger = logging.getLogger(__name__)

SUFFIXES = ('.tokens.jsonl', '.jsonl')


def _sample_id(path: str) -> str:
    name = os.path.basename(path)
    for suffix in SUFFIXES:
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return name


def pair_files(ref: str, hyp: str) -> List[Tuple[str, str, str]]:
    """
    Пары файлов эталон/гипотеза

    Два файла образуют одну пару; в каталогах файлы сопоставляются по
    идентификатору образца (<id>.tokens.jsonl эталона и <id>.jsonl гипотезы).

    Returns:
        List[Tuple[str, str, str]]: (идентификатор, эталон, гипотеза)

    Raises:
        EmptyInput: Если общих образцов нет
    """
    if os.path.isfile(ref) and os.path.isfile(hyp):
        return [(_sample_id(ref), ref, hyp)]
    if not (os.path.isdir(ref) and os.path.isdir(hyp)):
        raise FileNotFoundError(f"Ожидались два файла или два каталога: {ref}, {hyp}")
    references = {_sample_id(p): p for p in list_files(ref, '.tokens.jsonl')}
    hypotheses = {_sample_id(p): p for p in list_files(hyp, '.jsonl')}
    common = sorted(set(references) & set(hypotheses))
    if not common:
        raise EmptyInput(f"Нет общих образцов в {ref} и {hyp}")
    missing = sorted(set(references) - set(hypotheses))
    if missing:
        logger.warning(f"Для {len(missing)} эталонов нет гипотез: {missing[:5]}")
    return [(sample_id, references[sample_id], hypotheses[sample_id]) for sample_id in common]


def register_evaluate_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует команду подсчета метрик"""

    parser = subparsers.add_parser('eval', parents=[common], help="Посчитать WER, SAWER или cpWER")
    parser.add_argument('--metric', action='append', choices=['wer', 'sawer', 'cpwer'],
                        help="Метрика (можно указать несколько раз)")
    parser.add_argument('--ref', required=True, help="Эталонный JSONL или каталог корпуса")
    parser.add_argument('--hyp', required=True, help="JSONL гипотезы или каталог результатов атрибуции")
    parser.add_argument('--relabel', action='store_true',
                        help="Сопоставить анонимные метки гипотезы дикторам эталона (для SD)")

    def cmd_eval(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
        """Считает метрики по парам эталон/гипотеза"""
        config = build_run_config(args, settings)
        service = EvaluationService(args.metric or config.evaluation.metrics)
        samples = {}
        for sample_id, ref_path, hyp_path in pair_files(args.ref, args.hyp):
            samples[sample_id] = service.compare(read_tokens(ref_path), read_tokens(hyp_path), args.relabel)

        report: Dict[str, Any] = {'metrics': service.metrics, 'samples': samples}
        if len(samples) > 1:
            report['total'] = _totals(samples)
        return report

    parser.set_defaults(handler=cmd_eval)


def _totals(samples: Dict[str, Dict[str, Any]]) -> Dict[str, float]:
    """Доли ошибок по всем образцам (отношение сумм)"""
    def total(metric: str, key: str) -> int:
        return sum(s[metric][key] for s in samples.values() if metric in s)

    totals: Dict[str, float] = {}
    first = next(iter(samples.values()))
    if 'wer' in first:
        totals['wer'] = total('wer', 'errors') / max(1, total('wer', 'reference_length'))
    if 'sawer' in first:
        totals['sawer'] = total('sawer', 'joint_errors') / max(1, total('sawer', 'reference_length'))
        hits = total('sawer', 'word_hits')
        totals['ser'] = total('sawer', 'speaker_errors') / hits if hits else 0.0
    if 'cpwer' in first:
        totals['cpwer'] = total('cpwer', 'errors') / max(1, total('cpwer', 'length'))
    return totals
