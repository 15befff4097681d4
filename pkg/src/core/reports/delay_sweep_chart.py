import logging
import os
import tempfile
from typing import List, Dict, Any, Optional

import matplotlib.pyplot as plt
import numpy as np

from src.utils.file_utils import create_safe_filename

logger = logging.getLogger(__name__)


class DelaySweepChart:
    """Генератор диаграммы ошибки атрибуции и пропущенных смен в зависимости от задержки D"""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Инициализирует генератор диаграммы

        Args:
            output_dir: Каталог для файлов (по умолчанию временный)
        """
        self.output_dir = output_dir or tempfile.mkdtemp()

    def generate(self, title: str, rows: List[Dict[str, Any]]) -> str:
        """
        Строит диаграмму по таблице перебора задержек

        Args:
            title: Заголовок (например, режим и корпус)
            rows: Строки run_delay_sweep

        Returns:
            str: Путь к PNG-файлу
        """
        os.makedirs(self.output_dir, exist_ok=True)
        chart_file = os.path.join(self.output_dir, f"{create_safe_filename(title)}_delay_sweep.png")

        if not rows:
            fig, ax = plt.subplots(figsize=(8, 6))
            ax.text(0.5, 0.5, "Нет данных перебора задержек", ha='center', va='center', fontsize=14)
            plt.tight_layout()
            plt.savefig(chart_file, dpi=150)
            plt.close(fig)
            return chart_file

        delays = [row['delay'] for row in rows]
        errors = [100.0 * row['attribution_error'] for row in rows]
        misses = [row['missed_changes'] for row in rows]
        x_pos = np.arange(len(delays))

        fig, ax = plt.subplots(figsize=(10, 6))
        ax.bar(x_pos, errors, align='center', color='tab:blue', alpha=0.8, label='Ошибка атрибуции, %')
        for i, value in enumerate(errors):
            ax.text(i, value, f"{value:.1f}", ha='center', va='bottom', fontsize=9)
        ax.set_xticks(x_pos)
        ax.set_xticklabels([f"D={d}\n+{row['latency_seconds']:.2f} с" for d, row in zip(delays, rows)])
        ax.set_ylabel('Ошибка атрибуции, %')
        ax.set_xlabel('Задержка решения (слова и секунды)')

        misses_ax = ax.twinx()
        misses_ax.plot(x_pos, misses, color='tab:red', marker='o', label='Пропущенные смены')
        misses_ax.set_ylabel('Пропущенные смены дикторов')

        ax.set_title(f"Задержка решения: {title}")
        ax.grid(True, axis='y', linestyle='--', alpha=0.7)
        handles = ax.get_legend_handles_labels()[0] + misses_ax.get_legend_handles_labels()[0]
        ax.legend(handles=handles, loc='upper left')

        plt.tight_layout()
        plt.savefig(chart_file, dpi=150)
        plt.close(fig)

        logger.info(f"Диаграмма перебора задержек сохранена: {chart_file}")
        return chart_file
