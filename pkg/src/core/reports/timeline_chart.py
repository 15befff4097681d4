import logging
import os
import tempfile
from typing import Dict, Optional

import matplotlib.pyplot as plt
from matplotlib.patches import Patch

from src.core.models.attribution import AttributionResult
from src.utils.file_utils import create_safe_filename

logger = logging.getLogger(__name__)

MIN_BAR_SECONDS = 0.05


class AttributionTimelineChart:
    """Временная диаграмма токенов по виртуальным каналам, окрашенных по дикторам"""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Инициализирует генератор диаграммы

        Args:
            output_dir: Каталог для файлов (по умолчанию временный)
        """
        self.output_dir = output_dir or tempfile.mkdtemp()

    def generate(self, sample_id: str, result: AttributionResult) -> str:
        """
        Строит диаграмму для одной смеси

        Args:
            sample_id: Идентификатор смеси
            result: Результат атрибуции (токены с каналами и временем)

        Returns:
            str: Путь к PNG-файлу
        """
        os.makedirs(self.output_dir, exist_ok=True)
        chart_file = os.path.join(self.output_dir, f"{create_safe_filename(sample_id)}_timeline.png")

        tokens = [event for event in result.tokens if event.channel is not None]
        if not tokens:
            logger.warning(f"{sample_id}: нет токенов для временной диаграммы")
            fig, ax = plt.subplots(figsize=(8, 4))
            ax.text(0.5, 0.5, "Нет распознанных токенов", ha='center', va='center', fontsize=14)
            plt.savefig(chart_file, dpi=150)
            plt.close(fig)
            return chart_file

        speakers = sorted({str(event.speaker_id) for event in tokens})
        palette = plt.get_cmap('tab10')
        colors: Dict[str, tuple] = {speaker: palette(i % 10) for i, speaker in enumerate(speakers)}
        channels = sorted({event.channel for event in tokens})

        fig_height = max(3, len(channels) * 1.2 + 1.5)
        fig, ax = plt.subplots(figsize=(14, fig_height))
        for event in tokens:
            width = max(event.duration, MIN_BAR_SECONDS)
            ax.barh(event.channel, width, left=event.start_time, height=0.5, align='center',
                    color=colors[str(event.speaker_id)], alpha=0.85, edgecolor='black')
            ax.text(event.start_time + width / 2, event.channel, event.token,
                    ha='center', va='center', fontsize=7, rotation=90)

        for channel, points in result.change_points.items():
            channel_tokens = [event for event in tokens if event.channel == channel]
            for point in points:
                if point < len(channel_tokens):
                    ax.axvline(x=channel_tokens[point].start_time, color='r', linestyle='--', alpha=0.5)

        ax.set_yticks(channels)
        ax.set_yticklabels([f"Канал {c}" for c in channels])
        ax.invert_yaxis()
        ax.set_xlabel('Время, с')
        ax.set_title(f"Атрибуция дикторов ({result.mode}): {sample_id}")
        ax.grid(True, axis='x', linestyle='--', alpha=0.7)
        ax.legend(handles=[Patch(color=colors[s], label=s) for s in speakers], loc='upper right')

        plt.tight_layout()
        plt.savefig(chart_file, dpi=150)
        plt.close(fig)

        logger.info(f"Временная диаграмма сохранена: {chart_file}")
        return chart_file
