import os
from typing import List


def create_safe_filename(filename: str, max_length: int = 100) -> str:
    """
    Создает безопасное имя файла, удаляя или заменяя недопустимые символы

    Args:
        filename (str): Исходное имя файла
        max_length (int): Максимальная длина имени файла

    Returns:
        str: Безопасное имя файла
    """
    invalid_chars = ['<', '>', ':', '"', '/', '\\', '|', '?', '*', ' ']

    safe_name = filename
    for char in invalid_chars:
        safe_name = safe_name.replace(char, '_')

    return safe_name[:max_length] or 'unnamed'


def ensure_parent(path: str) -> str:
    """
    Создает родительский каталог файла

    Args:
        path: Путь к файлу

    Returns:
        str: Тот же путь
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def list_files(directory: str, suffix: str) -> List[str]:
    """
    Файлы каталога с заданным окончанием, отсортированные по имени

    Args:
        directory (str): Каталог
        suffix (str): Окончание имени (например, '.jsonl')

    Returns:
        List[str]: Полные пути
    """
    if not os.path.isdir(directory):
        return []
    return [os.path.join(directory, name) for name in sorted(os.listdir(directory)) if name.endswith(suffix)]
