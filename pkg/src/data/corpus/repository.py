import json
import logging
import os
from typing import List, Dict, Any, Optional

import numpy as np

from src.core.models.mixture import Mixture, MixtureSpec, SpeakerPopulation
from src.core.models.token import SerializedStream
from src.core.models.vocabulary import Vocabulary
from src.data.jsonl.token_stream import read_profiles, read_records, read_tokens, write_profiles, write_records, write_tokens

logger = logging.getLogger(__name__)

CORPUS_FORMAT = 'tsot-corpus-v1'
SPLITS = ('train', 'eval')


def write_array(path: str, array: np.ndarray) -> None:
    """Записывает массив как плоский float64 little-endian"""
    np.ascontiguousarray(array, dtype='<f8').tofile(path)


def read_array(path: str, shape) -> np.ndarray:
    flat = np.fromfile(path, dtype='<f8')
    expected = int(np.prod(shape))
    if flat.size != expected:
        raise ValueError(f"В файле {path} {flat.size} значений, ожидалось {expected}")
    return flat.astype(np.float64).reshape(shape)


class CorpusRepository:
    """
    Репозиторий синтетического корпуса на диске

    Структура каталога:
        manifest.json           - формат, параметры смесей, словарь, состав частей
        speakers.jsonl          - d-векторы популяции дикторов
        <split>/<id>.tokens.jsonl, <id>.profiles.jsonl, <id>.features.bin, <id>.meta.json
    """

    def __init__(self, root: str):
        """
        Инициализирует репозиторий

        Args:
            root: Каталог корпуса
        """
        self.root = root
        self._manifest: Optional[Dict[str, Any]] = None

    @property
    def manifest_path(self) -> str:
        return os.path.join(self.root, 'manifest.json')

    def exists(self) -> bool:
        return os.path.exists(self.manifest_path)

    def _sample_path(self, split: str, sample_id: str, suffix: str) -> str:
        return os.path.join(self.root, split, f"{sample_id}.{suffix}")

    def save_manifest(self, spec: MixtureSpec, vocabulary: Vocabulary, population: SpeakerPopulation,
                      splits: Dict[str, List[str]]) -> str:
        """
        Сохраняет манифест корпуса и популяцию дикторов

        Args:
            spec: Параметры генерации
            vocabulary: Словарь распознавания
            population: Популяция дикторов
            splits: Идентификаторы образцов по частям

        Returns:
            str: Путь к manifest.json
        """
        os.makedirs(self.root, exist_ok=True)
        write_records(os.path.join(self.root, 'speakers.jsonl'), (
            {'speaker_id': speaker_id, 'vector': population.dvectors[i].tolist()}
            for i, speaker_id in enumerate(population.speaker_ids)
        ))
        manifest = {
            'format': CORPUS_FORMAT,
            'spec': spec.to_dict(),
            'vocabulary': vocabulary.to_dict(),
            'voice_matrix': population.voice_matrix.tolist(),
            'splits': {split: list(ids) for split, ids in splits.items()},
        }
        with open(self.manifest_path, 'w', encoding='utf-8') as f:
            json.dump(manifest, f, ensure_ascii=False, indent=2)
        self._manifest = manifest
        logger.info(f"Манифест корпуса сохранен: {self.manifest_path}")
        return self.manifest_path

    def manifest(self) -> Dict[str, Any]:
        """
        Возвращает манифест корпуса

        Raises:
            ValueError: Если корпус не найден или формат неизвестен
        """
        if self._manifest is None:
            if not self.exists():
                raise ValueError(f"Корпус не найден в {self.root}")
            with open(self.manifest_path, 'r', encoding='utf-8') as f:
                manifest = json.load(f)
            if manifest.get('format') != CORPUS_FORMAT:
                raise ValueError(f"Неизвестный формат корпуса: {manifest.get('format')}")
            self._manifest = manifest
        return self._manifest

    def spec(self) -> MixtureSpec:
        return MixtureSpec.from_dict(self.manifest()['spec'])

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.from_dict(self.manifest()['vocabulary'])

    def population(self) -> SpeakerPopulation:
        records = read_records(os.path.join(self.root, 'speakers.jsonl'))
        return SpeakerPopulation(
            speaker_ids=tuple(record['speaker_id'] for record in records),
            dvectors=np.asarray([record['vector'] for record in records], dtype=np.float64),
            voice_matrix=np.asarray(self.manifest()['voice_matrix'], dtype=np.float64),
        )

    def sample_ids(self, split: str) -> List[str]:
        splits = self.manifest()['splits']
        if split not in splits:
            raise ValueError(f"Часть корпуса '{split}' не найдена")
        return list(splits[split])

    def save_mixture(self, split: str, mixture: Mixture) -> None:
        """
        Сохраняет смесь в каталог части корпуса

        Args:
            split: Часть корпуса ('train' или 'eval')
            mixture: Смесь
        """
        os.makedirs(os.path.join(self.root, split), exist_ok=True)
        write_tokens(self._sample_path(split, mixture.sample_id, 'tokens.jsonl'), mixture.tokens)
        write_profiles(self._sample_path(split, mixture.sample_id, 'profiles.jsonl'), mixture.profiles)
        write_array(self._sample_path(split, mixture.sample_id, 'features.bin'), mixture.features)

        meta = {
            'sample_id': mixture.sample_id,
            'feature_shape': list(mixture.features.shape),
            'serialized': mixture.serialized.to_dict(),
            'speaker_labels': list(mixture.speaker_labels),
            'seed': mixture.seed,
            'word_durations': list(mixture.word_durations),
        }
        if mixture.oracle_embeddings is not None:
            write_array(self._sample_path(split, mixture.sample_id, 'oracle.bin'), mixture.oracle_embeddings)
            meta['oracle_shape'] = list(mixture.oracle_embeddings.shape)
        with open(self._sample_path(split, mixture.sample_id, 'meta.json'), 'w', encoding='utf-8') as f:
            json.dump(meta, f, ensure_ascii=False, indent=2)

    def load_mixture(self, split: str, sample_id: str) -> Mixture:
        """
        Загружает смесь

        Args:
            split: Часть корпуса
            sample_id: Идентификатор образца

        Returns:
            Mixture: Смесь с признаками, эталоном и пулом профилей
        """
        meta_path = self._sample_path(split, sample_id, 'meta.json')
        if not os.path.exists(meta_path):
            raise ValueError(f"Образец {split}/{sample_id} не найден")
        with open(meta_path, 'r', encoding='utf-8') as f:
            meta = json.load(f)

        oracle = None
        if 'oracle_shape' in meta:
            oracle = read_array(self._sample_path(split, sample_id, 'oracle.bin'), meta['oracle_shape'])
        return Mixture(
            sample_id=sample_id,
            features=read_array(self._sample_path(split, sample_id, 'features.bin'), meta['feature_shape']),
            tokens=read_tokens(self._sample_path(split, sample_id, 'tokens.jsonl')),
            serialized=SerializedStream.from_dict(meta['serialized']),
            speaker_labels=list(meta['speaker_labels']),
            profiles=read_profiles(self._sample_path(split, sample_id, 'profiles.jsonl')),
            seed=int(meta.get('seed', 0)),
            word_durations=[float(d) for d in meta.get('word_durations', [])],
            oracle_embeddings=oracle,
        )

    def load_split(self, split: str) -> List[Mixture]:
        mixtures = [self.load_mixture(split, sample_id) for sample_id in self.sample_ids(split)]
        logger.info(f"Загружено {len(mixtures)} смесей из части '{split}'")
        return mixtures
