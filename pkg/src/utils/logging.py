import logging
import sys
from typing import Optional, Union

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
QUIET_LOGGERS = ('matplotlib', 'PIL', 'torch', 'numba')


def parse_level(level: Union[int, str]) -> int:
    """
    Преобразует имя уровня логирования в число

    Args:
        level: Уровень ('DEBUG', 'INFO', ...) или число

    Returns:
        int: Числовой уровень

    Raises:
        ValueError: Если имя уровня неизвестно
    """
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError(f"Неизвестный уровень логирования: {level}")
    return value


def setup_logging(level: Union[int, str] = logging.INFO, log_file: Optional[str] = None) -> None:
    """
    Настраивает логирование для приложения

    Логи пишутся в stderr: stdout остается для вывода --json.

    Args:
        level: Уровень логирования
        log_file: Путь к файлу логов (если нужно)
    """
    logger = logging.getLogger()
    logger.setLevel(parse_level(level))
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # Шумные логгеры библиотек
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
