"""Исключения предметной области"""

from typing import Optional


class TsotError(ValueError):
    """Базовая ошибка конвейера t-SOT"""


class OverlapBudgetExceeded(TsotError):
    """Одновременно звучит больше высказываний, чем допускает M"""


class EmptyInput(TsotError):
    """Пустые входные данные"""


class MalformedStream(TsotError):
    """Сериализованный поток нарушает инварианты (ведущий или двойной <cc>)"""


class DimensionMismatch(TsotError):
    """Несогласованные размерности тензоров"""


class NonFiniteValue(TsotError):
    """В вычислениях появилось NaN или бесконечность"""


class TargetLongerThanFrames(TsotError):
    """Эталон длиннее, чем число кадров энкодера"""


class FrameCountMismatch(TsotError):
    """Состояния энкодеров покрывают разное число кадров"""


class FrameOutOfRange(TsotError):
    """Кадр эмиссии вне диапазона кадров энкодера"""


class EmptyReference(TsotError):
    """Нет ни одного обычного (не <cc>) токена для функции потерь"""


class NoProfiles(TsotError):
    """Не заданы профили дикторов"""


class TooFewSegments(TsotError):
    """Сегментов меньше, чем требуемое число кластеров"""


class InfeasibleSpec(TsotError):
    """Параметры симуляции невозможно выполнить"""


class TVectorCountMismatch(TsotError):
    """Число t-векторов не совпадает с числом обычных токенов"""


class ConfigError(TsotError):
    """Ошибка в конфигурации запуска"""


class CheckpointError(TsotError):
    """Повреждённый или несовместимый чекпоинт"""


class StageFailure(TsotError):
    """Сбой этапа конвейера"""

    def __init__(self, stage: str, message: str, cause: Optional[BaseException] = None):
        super().__init__(f"Этап '{stage}' завершился ошибкой: {message}")
        self.stage = stage
        self.cause = cause
