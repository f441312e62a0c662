"""
Runtime configuration management for em-shield
"""
import os
import sys
import logging
from dataclasses import dataclass, field
from typing import Optional
from enum import Enum


class Environment(Enum):
    DEVELOPMENT = "development"
    RESEARCH = "research"
    BATCH = "batch"


@dataclass
class SolverConfig:
    # Stop when the normalized objective improves by less than this.
    tolerance: float = 1e-12
    max_sweeps: int = 200
    irls_iterations: int = 30
    penalty_escalations: int = 20
    enumeration_limit_bits: int = 24
    restarts: int = 8
    regularization: float = 1e-12


@dataclass
class MonteCarloConfig:
    chunk_size: int = 250_000
    n_jobs: int = 1


@dataclass
class AppConfig:
    environment: Environment
    solver: SolverConfig = field(default_factory=SolverConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    output_dir: str = "results"
    default_seed: int = 0


class ConfigManager:
    """Configuration loading with validation"""

    @staticmethod
    def load_config() -> AppConfig:
        """Load configuration from environment variables (and .env when present)"""
        from dotenv import load_dotenv
        load_dotenv()

        env_str = os.getenv('EMSHIELD_ENVIRONMENT', 'development').lower()
        try:
            environment = Environment(env_str)
        except ValueError:
            environment = Environment.DEVELOPMENT

        solver = SolverConfig(
            tolerance=float(os.getenv('EMSHIELD_TOLERANCE', '1e-12')),
            max_sweeps=int(os.getenv('EMSHIELD_MAX_SWEEPS', '200')),
        )

        monte_carlo = MonteCarloConfig(
            chunk_size=int(os.getenv('EMSHIELD_MC_CHUNK', '250000')),
            n_jobs=int(os.getenv('EMSHIELD_N_JOBS', '1')),
        )

        return AppConfig(
            environment=environment,
            solver=solver,
            monte_carlo=monte_carlo,
            log_level=os.getenv('EMSHIELD_LOG_LEVEL', 'INFO').upper(),
            log_dir=os.getenv('EMSHIELD_LOG_DIR') or None,
            output_dir=os.getenv('EMSHIELD_OUTPUT_DIR', 'results'),
            default_seed=int(os.getenv('EMSHIELD_SEED', '0')),
        )


def setup_logging(config: AppConfig, quiet: bool = False) -> logging.Logger:
    """Set up logging: console on stderr, optional detailed log files"""

    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(funcName)s - %(message)s'
    )
    simple_formatter = logging.Formatter(log_format)

    level = getattr(logging, config.log_level, logging.INFO)
    console_level = logging.WARNING if quiet else level

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if config.log_dir else level)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    # stdout carries the run summary line only
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(simple_formatter)
    console_handler.setLevel(console_level)
    root_logger.addHandler(console_handler)

    if config.log_dir:
        os.makedirs(config.log_dir, exist_ok=True)

        file_handler = logging.FileHandler(os.path.join(config.log_dir, 'emshield.log'), encoding='utf-8')
        file_handler.setFormatter(detailed_formatter)
        file_handler.setLevel(logging.DEBUG)

        error_handler = logging.FileHandler(os.path.join(config.log_dir, 'emshield_errors.log'), encoding='utf-8')
        error_handler.setFormatter(detailed_formatter)
        error_handler.setLevel(logging.ERROR)

        root_logger.addHandler(file_handler)
        root_logger.addHandler(error_handler)

    logging.getLogger('joblib').setLevel(logging.WARNING)

    return logging.getLogger(__name__)


def validate_config(config: AppConfig) -> list[str]:
    """Validate configuration and return list of warnings"""
    warnings = []

    if config.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        warnings.append(f"Unknown log level {config.log_level!r}, falling back to INFO")

    if config.monte_carlo.n_jobs == 0:
        warnings.append("EMSHIELD_N_JOBS=0 is not a valid joblib setting, using 1")
        config.monte_carlo.n_jobs = 1

    if config.monte_carlo.chunk_size < 1:
        warnings.append("EMSHIELD_MC_CHUNK must be positive, using 250000")
        config.monte_carlo.chunk_size = 250_000

    if config.solver.tolerance <= 0:
        warnings.append("EMSHIELD_TOLERANCE must be positive, using 1e-12")
        config.solver.tolerance = 1e-12

    if os.path.exists(config.output_dir) and not os.access(config.output_dir, os.W_OK):
        warnings.append(f"Output directory {config.output_dir} is not writable")

    return warnings


DEFAULT_SOLVER = SolverConfig()
