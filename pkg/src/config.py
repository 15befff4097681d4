import copy
import json
import logging
import os
from typing import Dict, List, Any, Optional, Sequence

from dotenv import load_dotenv

from src.core.errors import ConfigError
from src.core.models.run_config import RunConfig
from src.data.templates.default_presets import DEFAULT_RUN_CONFIG, RUN_PRESETS

logger = logging.getLogger(__name__)


def load_config() -> Dict[str, Any]:
    """
    Загружает настройки процесса из переменных окружения

    Returns:
        dict: Словарь с настройками
    """
    # Загружаем .env файл, если он существует
    load_dotenv()

    return {
        'LOG_LEVEL': os.getenv('TSOT_LOG_LEVEL', 'INFO'),
        'LOG_FILE': os.getenv('TSOT_LOG_FILE') or None,
        'WORK_DIR': os.getenv('TSOT_WORK_DIR', 'runs'),
        'NUM_THREADS': parse_threads(os.getenv('TSOT_NUM_THREADS', '1')),
    }


def parse_threads(value: str) -> int:
    """
    Парсит число потоков

    Args:
        value: Строковое значение переменной окружения

    Returns:
        int: Число потоков (не меньше 1)
    """
    try:
        return max(1, int(value))
    except ValueError:
        logger.warning(f"Некорректное значение TSOT_NUM_THREADS='{value}', используется 1")
        return 1


def deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """
    Рекурсивно накладывает update на копию base

    Args:
        base: Исходный словарь
        update: Изменения (вложенные словари сливаются, остальное заменяется)

    Returns:
        dict: Новый словарь
    """
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(override: str) -> Dict[str, Any]:
    """
    Разбирает изменение вида a.b.c=value

    Значение читается как JSON, при неудаче остается строкой.

    Args:
        override: Строка изменения

    Returns:
        dict: Вложенный словарь с одним значением

    Raises:
        ConfigError: Если строка не содержит '=' или путь пустой
    """
    if '=' not in override:
        raise ConfigError(f"Изменение должно иметь вид ключ=значение: '{override}'")
    path, raw = override.split('=', 1)
    keys = [key.strip() for key in path.split('.')]
    if not all(keys):
        raise ConfigError(f"Пустой ключ в изменении '{override}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw

    nested: Dict[str, Any] = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        nested = {key: nested}
    return nested


def read_run_file(path: str) -> Dict[str, Any]:
    """
    Читает JSON-файл запуска

    Raises:
        ConfigError: Если файл отсутствует или не является JSON-объектом
    """
    if not os.path.exists(path):
        raise ConfigError(f"Файл конфигурации не найден: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Файл {path} не является корректным JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Файл {path} должен содержать JSON-объект")
    return data


def load_run_config(path: Optional[str] = None, overrides: Sequence[str] = (),
                    preset: Optional[str] = None, work_dir: Optional[str] = None) -> RunConfig:
    """
    Собирает конфигурацию запуска

    Порядок наложения: базовая конфигурация, именованный набор (preset),
    файл запуска, изменения --set.

    Args:
        path: JSON-файл запуска
        overrides: Изменения вида a.b=value
        preset: Имя набора из RUN_PRESETS
        work_dir: Рабочий каталог по умолчанию (если не задан в файле и изменениях)

    Returns:
        RunConfig: Проверенная конфигурация

    Raises:
        ConfigError: Если конфигурация некорректна
    """
    data = copy.deepcopy(DEFAULT_RUN_CONFIG)
    if work_dir:
        data['work_dir'] = work_dir
    if preset:
        if preset not in RUN_PRESETS:
            raise ConfigError(f"Неизвестный набор '{preset}', доступны: {sorted(RUN_PRESETS)}")
        data = deep_merge(data, RUN_PRESETS[preset])
    if path:
        data = deep_merge(data, read_run_file(path))
    for override in overrides:
        data = deep_merge(data, parse_override(override))

    config = RunConfig.from_dict(data)
    logger.debug(f"Конфигурация запуска: {json.dumps(config.to_dict(), ensure_ascii=False)}")
    return config


def preset_names() -> List[str]:
    return sorted(RUN_PRESETS)
