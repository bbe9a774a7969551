import textwrap
from pathlib import Path

import numpy as np
import pytest

from fitgrowth_core.config import Config, set_config
from fitgrowth_core.panel_model import MacroPanel, SavingMode, SolowParams
from tests.helpers import macro_obs

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def default_config():
    """Every test runs against pure defaults, with a small fixed worker pool."""
    config = Config()
    config.system.max_workers = 2
    set_config(config)
    yield config
    set_config(None)


@pytest.fixture
def write_text(tmp_path):
    def _write(name: str, content: str) -> Path:
        path = tmp_path / name
        path.write_text(textwrap.dedent(content).lstrip(), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def two_country_panel() -> MacroPanel:
    """A grows 5% a year in GDP and capital, B grows 1%; other inputs flat."""
    observations = []
    for country, g in (("A", 0.05), ("B", 0.01)):
        for t, year in enumerate((2000, 2001, 2002)):
            observations.append(
                macro_obs(country, year, gdp=1000.0 * np.exp(g * t), capital=3000.0 * np.exp(g * t))
            )
    return MacroPanel.from_observations(observations)


@pytest.fixture
def constant_params() -> SolowParams:
    return SolowParams(A=1.0, alpha=0.5, L=1.0, delta=0.1, s_max=0.2)


@pytest.fixture
def sigmoid_params() -> SolowParams:
    return SolowParams(A=1.0, alpha=0.5, L=1.0, delta=0.05, s_max=0.4, K_F=10.0,
                       saving_mode=SavingMode.SIGMOID)
