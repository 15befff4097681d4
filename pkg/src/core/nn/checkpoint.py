import json
import logging
import os
from collections import OrderedDict
from typing import Dict, Any, Optional, Tuple

import numpy as np
import torch
from torch import nn

from src.core.errors import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'tsot-f64le-v1'


def checkpoint_paths(stem: str) -> Tuple[str, str]:
    """Пути к двоичному файлу и JSON-описанию чекпоинта"""
    return f"{stem}.bin", f"{stem}.json"


def save_checkpoint(module: nn.Module, stem: str, meta: Optional[Dict[str, Any]] = None) -> str:
    """
    Сохраняет параметры модуля

    Формат: плоский массив float64 little-endian в <stem>.bin и описание
    тензоров (имя, форма, смещение) в <stem>.json.

    Args:
        module: Модуль torch
        stem: Путь без расширения
        meta: Дополнительные сведения (конфигурация, словарь)

    Returns:
        str: Путь к JSON-описанию
    """
    bin_path, json_path = checkpoint_paths(stem)
    os.makedirs(os.path.dirname(os.path.abspath(bin_path)), exist_ok=True)

    tensors = []
    chunks = []
    offset = 0
    for name, tensor in module.state_dict().items():
        values = tensor.detach().cpu().to(torch.float64).numpy().astype('<f8').ravel()
        tensors.append({'name': name, 'shape': list(tensor.shape), 'offset': offset})
        chunks.append(values)
        offset += values.size

    flat = np.concatenate(chunks) if chunks else np.zeros(0, dtype='<f8')
    flat.astype('<f8').tofile(bin_path)
    with open(json_path, 'w', encoding='utf-8') as f:
        json.dump({'format': CHECKPOINT_FORMAT, 'size': int(offset), 'tensors': tensors, 'meta': meta or {}},
                  f, ensure_ascii=False, indent=2)

    logger.info(f"Чекпоинт сохранен: {bin_path} ({offset} параметров)")
    return json_path


def read_checkpoint(stem: str) -> Tuple['OrderedDict[str, torch.Tensor]', Dict[str, Any]]:
    """
    Читает чекпоинт

    Args:
        stem: Путь без расширения

    Returns:
        Tuple[OrderedDict, dict]: Тензоры по именам и meta

    Raises:
        CheckpointError: Если файлы отсутствуют или не согласованы
    """
    bin_path, json_path = checkpoint_paths(stem)
    if not (os.path.exists(bin_path) and os.path.exists(json_path)):
        raise CheckpointError(f"Чекпоинт {stem} не найден")
    with open(json_path, 'r', encoding='utf-8') as f:
        sidecar = json.load(f)
    if sidecar.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f"Неизвестный формат чекпоинта: {sidecar.get('format')}")

    flat = np.fromfile(bin_path, dtype='<f8')
    if flat.size != sidecar['size']:
        raise CheckpointError(f"Размер {bin_path} ({flat.size}) не совпадает с описанием ({sidecar['size']})")

    tensors: 'OrderedDict[str, torch.Tensor]' = OrderedDict()
    for entry in sidecar['tensors']:
        count = int(np.prod(entry['shape'])) if entry['shape'] else 1
        values = flat[entry['offset']:entry['offset'] + count]
        tensors[entry['name']] = torch.from_numpy(values.astype(np.float64).reshape(entry['shape']).copy())
    return tensors, sidecar.get('meta', {})


def load_checkpoint(module: nn.Module, stem: str) -> Dict[str, Any]:
    """
    Загружает параметры в модуль со строгой проверкой имен и форм

    Args:
        module: Модуль с той же архитектурой
        stem: Путь без расширения

    Returns:
        dict: meta чекпоинта
    """
    tensors, meta = read_checkpoint(stem)
    expected = module.state_dict()
    missing = set(expected) - set(tensors)
    unexpected = set(tensors) - set(expected)
    if missing or unexpected:
        raise CheckpointError(f"Чекпоинт не соответствует модели: нет {sorted(missing)}, лишние {sorted(unexpected)}")
    for name, tensor in tensors.items():
        if tuple(tensor.shape) != tuple(expected[name].shape):
            raise CheckpointError(f"Форма {name}: {tuple(tensor.shape)} вместо {tuple(expected[name].shape)}")
    module.load_state_dict(tensors)
    logger.info(f"Чекпоинт загружен: {stem}")
    return meta
