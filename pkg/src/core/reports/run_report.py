import datetime
import json
import logging
import os
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional

import psutil

from src import __version__

logger = logging.getLogger(__name__)

REPORT_FORMAT = 'tsot-report-v1'


def system_info() -> Dict[str, Any]:
    """Сведения о платформе и ресурсах процесса"""
    info: Dict[str, Any] = {
        'os': f"{platform.system()} {platform.release()}",
        'python': platform.python_version(),
        'package_version': __version__,
    }
    try:
        process = psutil.Process(os.getpid())
        info['memory_mb'] = round(process.memory_info().rss / 1024 / 1024, 2)
        info['cpu_seconds'] = round(sum(process.cpu_times()[:2]), 3)
        info['cpu_count'] = psutil.cpu_count(logical=False) or psutil.cpu_count()
    except psutil.Error as e:
        logger.warning(f"Данные о системных ресурсах недоступны: {e}")
    return info


@dataclass
class RunReport:
    """Манифест запуска и итоговые метрики"""

    config: Dict[str, Any]
    stages: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    latency: Dict[str, Any] = field(default_factory=dict)
    delay_sweep: List[Dict[str, Any]] = field(default_factory=list)
    failed_stage: Optional[str] = None
    error: Optional[str] = None

    @contextmanager
    def stage(self, name: str):
        """
        Замеряет длительность этапа и фиксирует его статус

        Args:
            name: Имя этапа
        """
        started = time.perf_counter()
        record: Dict[str, Any] = {'status': 'running'}
        self.stages[name] = record
        logger.info(f"Этап '{name}' начат")
        try:
            yield record
        except Exception as e:
            record['status'] = 'failed'
            self.failed_stage = name
            self.error = str(e)
            raise
        else:
            record['status'] = 'ok'
        finally:
            record['seconds'] = round(time.perf_counter() - started, 3)
            logger.info(f"Этап '{name}': {record['status']} за {record['seconds']:.2f} с")

    def add_artifact(self, name: str, path: str) -> None:
        self.artifacts[name] = path

    def manifest(self) -> Dict[str, Any]:
        """Воспроизводимая часть отчета: конфигурация, версия кода, этапы, артефакты"""
        return {
            'format': REPORT_FORMAT,
            'config': self.config,
            'system': system_info(),
            'stages': self.stages,
            'artifacts': self.artifacts,
            'failed_stage': self.failed_stage,
        }

    def to_dict(self) -> Dict[str, Any]:
        """
        Итоговый отчет

        Детерминированные поля (метрики, задержки, таблица перебора) не
        зависят от времени и ресурсов и совпадают для одинаковых запусков.
        """
        report: Dict[str, Any] = {
            'format': REPORT_FORMAT,
            'metrics': self.metrics,
            'latency': self.latency,
        }
        if self.delay_sweep:
            report['delay_sweep'] = self.delay_sweep
        if self.failed_stage:
            report['failed_stage'] = self.failed_stage
            report['error'] = self.error
        return report

    def write(self, work_dir: str) -> Dict[str, str]:
        """
        Сохраняет report.json и manifest.json в рабочий каталог

        Args:
            work_dir: Рабочий каталог запуска

        Returns:
            dict: Пути к файлам
        """
        os.makedirs(work_dir, exist_ok=True)
        paths = {'report': os.path.join(work_dir, 'report.json'),
                 'manifest': os.path.join(work_dir, 'manifest.json')}
        with open(paths['report'], 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
        manifest = self.manifest()
        manifest['written_at'] = datetime.datetime.now().isoformat(timespec='seconds')
        with open(paths['manifest'], 'w', encoding='utf-8') as f:
            json.dump(manifest, f, ensure_ascii=False, indent=2)
        logger.info(f"Отчет сохранен: {paths['report']}")
        return paths

    def render_text(self) -> str:
        """Текстовая сводка запуска"""
        text = "ОТЧЕТ ПО ЗАПУСКУ t-SOT\n"
        text += "=============================================\n\n"
        text += "ЭТАПЫ\n"
        for name, record in self.stages.items():
            text += f"  {name}: {record.get('status')} ({record.get('seconds', 0.0):.2f} с)\n"
        if self.metrics:
            text += "\nМЕТРИКИ\n"
            for key, value in self.metrics.items():
                if isinstance(value, float):
                    text += f"  {key}: {value:.4f}\n"
        if self.latency:
            text += "\nЗАДЕРЖКА\n"
            for key, value in self.latency.items():
                text += f"  {key}: {value}\n"
        if self.delay_sweep:
            text += "\nПЕРЕБОР ЗАДЕРЖЕК\n"
            text += "  D   ошибка   пропущено   +секунд\n"
            for row in self.delay_sweep:
                text += (f"  {row['delay']:<3d} {row['attribution_error']:.4f}   {row['missed_changes']:<9d}   "
                         f"{row['latency_seconds']:.2f}\n")
        if self.failed_stage:
            text += f"\nОШИБКА на этапе '{self.failed_stage}': {self.error}\n"
        return text
