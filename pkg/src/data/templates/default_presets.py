# Базовая конфигурация запуска: поверх нее накладываются файл запуска и --set
DEFAULT_RUN_CONFIG = {
    "simulation": {
        "train_size": 200,
        "eval_size": 50,
        "mixture": {
            "min_speakers": 2,
            "max_speakers": 2,
            "vocab_size": 32,
            "min_tokens": 4,
            "max_tokens": 8,
            "intra_cosine": 0.95,
            "inter_cosine": 0.2,
            "noise_level": 0.05,
            "num_profiles": 8,
            "max_overlap": 2,
            "seed": 0
        }
    },
    "mask": {
        "chunk_size": 4,
        "left_context": None
    },
    "model": {
        "d_model": 32,
        "heads": 4,
        "asr_layers": 2,
        "subsample": 4,
        "profile_dim": 32
    },
    "asr_training": {
        "steps": 300,
        "learning_rate": 0.003,
        "warmup_steps": 30,
        "seed": 0
    },
    "speaker_training": {
        "steps": 200,
        "learning_rate": 0.003,
        "warmup_steps": 20,
        "seed": 1
    },
    "decoding": {
        "beam_width": 4,
        "max_symbols_per_frame": 4
    },
    "attribution": {
        "mode": "sid",
        "delay_words": 2,
        "sd_threshold": 0.98,
        "decision_rule": "final"
    },
    "evaluation": {
        "metrics": ["sawer", "cpwer"]
    },
    "sweep": {
        "enabled": False,
        "delays": [0, 1, 2, 4, 8],
        "mode": "sid"
    },
    "embedding_source": "model",
    "seed": 0,
    "work_dir": "runs/default",
    "charts": False
}

# Именованные наборы изменений относительно базовой конфигурации
RUN_PRESETS = {
    # Обучение ASR и модуля дикторов на эталонном игрушечном корпусе
    "toy": {},
    # Без обучения: эталонный поток и оракульные t-векторы без шума
    "oracle": {
        "simulation": {
            "train_size": 0,
            "eval_size": 20,
            "mixture": {"intra_cosine": 1.0}
        },
        "embedding_source": "oracle",
        "stages": ["simulate", "decode", "attribute", "eval"],
        "sweep": {"enabled": True}
    },
    # Перебор задержек в режиме SD с быстрыми сменами дикторов
    "sweep-sd": {
        "simulation": {
            "train_size": 0,
            "eval_size": 20,
            "mixture": {"min_speakers": 2, "max_speakers": 3, "max_overlap": 3}
        },
        "embedding_source": "oracle",
        "stages": ["simulate", "decode", "attribute", "eval"],
        "attribution": {"mode": "sd"},
        "sweep": {"enabled": True, "mode": "sd"}
    }
}
