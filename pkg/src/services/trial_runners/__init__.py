from src.services.trial_runners.registry import build_default_runner_registry

__all__ = ["build_default_runner_registry"]
