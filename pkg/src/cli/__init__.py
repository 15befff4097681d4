import argparse


def register_all_commands(subparsers, common: argparse.ArgumentParser):
    """Регистрирует все подкоманды командной строки"""
    # Импорт всех команд
    from .simulate import register_simulate_commands
    from .train import register_train_commands
    from .decode import register_decode_commands
    from .attribute import register_attribute_commands
    from .evaluate import register_evaluate_commands
    from .run import register_run_commands

    # Регистрация команд
    register_simulate_commands(subparsers, common)
    register_train_commands(subparsers, common)
    register_decode_commands(subparsers, common)
    register_attribute_commands(subparsers, common)
    register_evaluate_commands(subparsers, common)
    register_run_commands(subparsers, common)
