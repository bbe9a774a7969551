"""Configuration loader for FitGrowth."""
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple, Union

import yaml

CONFIG_PATH = Path(__file__).parent.parent / "config.yaml"
CONFIG_ENV_VAR = "FITGROWTH_CONFIG"


@dataclass
class SystemConfig:
    max_workers: Union[str, int] = "auto"
    memory_per_worker_mb: int = 64


@dataclass
class LoggingConfig:
    level: str = "INFO"
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass
class RcaConfig:
    threshold: float = 1.0


@dataclass
class FitnessConfig:
    max_iter: int = 1000
    tol: float = 1e-8
    floor: float = 1e-12
    rank_window: int = 10
    scheme: str = "sequential"


@dataclass
class GrowthConfig:
    alpha: Optional[float] = None


@dataclass
class KernelConfig:
    grid_n: int = 100
    grid_n_2d: int = 30
    bootstrap_b: int = 1000
    level: float = 0.90
    support_floor: float = 5.0
    seed: int = 0
    log_fitness: bool = True
    threshold_fraction: float = 0.5


@dataclass
class SimulationConfig:
    k_max: float = 200.0
    n_scan: int = 1000
    scan_floor: float = 1e-12
    steps: int = 200
    k0: float = 1.0


@dataclass
class SynthConfig:
    n_countries: int = 12
    steps: int = 50
    seed: int = 7
    start_year: int = 1963
    n_products: int = 60
    k_f0: float = 15.0
    A: float = 1.0
    alpha: float = 0.4
    delta: float = 0.05
    s_max: float = 0.5
    a_noise_sd: float = 0.01
    flip_rate: float = 0.05
    labor_share: float = 0.6
    high_growth_fraction: float = 0.5
    k0_margin: Tuple[float, float] = (0.02, 0.2)
    employment: Tuple[float, float] = (0.3, 0.6)
    human_capital: Tuple[float, float] = (1.5, 3.0)
    population_growth: float = 0.01
    fitness_span: Tuple[float, float] = (1.0, 10.0)


@dataclass
class Config:
    system: SystemConfig = field(default_factory=SystemConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    rca: RcaConfig = field(default_factory=RcaConfig)
    fitness: FitnessConfig = field(default_factory=FitnessConfig)
    growth: GrowthConfig = field(default_factory=GrowthConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "Config":
        config_path = path or _default_path()
        if not config_path.exists():
            return cls()

        with open(config_path) as f:
            data = yaml.safe_load(f) or {}

        return cls._from_dict(data)

    @classmethod
    def _from_dict(cls, data: dict) -> "Config":
        config = cls()

        if "system" in data:
            config.system = SystemConfig(**data["system"])
        if "logging" in data:
            config.logging = LoggingConfig(**data["logging"])
        if "rca" in data:
            config.rca = RcaConfig(**data["rca"])
        if "fitness" in data:
            config.fitness = FitnessConfig(**data["fitness"])
        if "growth" in data:
            config.growth = GrowthConfig(**data["growth"])
        if "kernel" in data:
            config.kernel = KernelConfig(**data["kernel"])
        if "simulation" in data:
            config.simulation = SimulationConfig(**data["simulation"])
        if "synth" in data:
            synth_data = dict(data["synth"])
            # YAML gives lists; the pair-valued knobs are stored as tuples
            for f in fields(SynthConfig):
                if isinstance(f.default, tuple) and f.name in synth_data:
                    synth_data[f.name] = tuple(synth_data[f.name])
            config.synth = SynthConfig(**synth_data)

        return config


def _default_path() -> Path:
    env_path = os.getenv(CONFIG_ENV_VAR)
    return Path(env_path) if env_path else CONFIG_PATH


# Global config instance
_config: Optional[Config] = None


def get_config() -> Config:
    global _config
    if _config is None:
        _config = Config.load()
    return _config


def set_config(config: Optional[Config]) -> None:
    """Replace the global config (None resets to lazy reload)."""
    global _config
    _config = config
