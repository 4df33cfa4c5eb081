from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

load_dotenv()

DEFAULT_CONFIG_PATH = (
    Path(__file__).resolve().parent.parent.parent / "config" / "analysis.yaml"
)


class AnalysisSettings(BaseSettings):
    """Tolerances and budgets used by every analysis step.

    Values come from (lowest to highest priority) the field defaults, the
    YAML file given to ``from_yaml``, ``KRAUS_SPECTRA_*`` environment
    variables, and finally explicit keyword overrides.
    """

    model_config = SettingsConfigDict(
        env_prefix="KRAUS_SPECTRA_",
        env_file=".env",
        extra="ignore",
    )

    # Rank decisions
    rank_tol: float = Field(1e-10, gt=0)
    closure_tol: float = Field(1e-8, gt=0)
    leakage_tol: float = Field(1e-7, gt=0)

    # Spectrum
    peripheral_eps: float = Field(1e-6, gt=0, lt=0.5)
    cycle_tol: float = Field(1e-6, gt=0)
    consistency_tol: float = Field(1e-6, gt=0)

    # Fixed points
    fixed_point_tol: float = Field(1e-9, gt=0)
    positivity_cutoff: float = Field(1e-8, gt=0)
    max_doublings: int = Field(64, ge=1)

    # Randomized decisions
    seed: int = 0
    invertibility_trials: int = Field(16, ge=1)

    # Primitivity and dynamics
    m_max: Optional[int] = Field(None, ge=1)
    simulate_steps: int = Field(200, ge=1)

    # Logging
    log_level: str = "INFO"

    @classmethod
    def from_yaml(
        cls,
        config_path: Optional[Union[str, Path]] = None,
        **overrides: Any,
    ) -> "AnalysisSettings":
        """Load settings from a YAML file, then apply explicit overrides."""
        path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        file_values: Dict[str, Any] = {}
        if path.exists():
            try:
                with open(path, "r", encoding="utf-8") as f:
                    loaded = yaml.safe_load(f) or {}
            except (OSError, yaml.YAMLError) as e:
                raise ConfigurationError(
                    f"Error loading config: {e}", source=str(path)
                ) from e
            if not isinstance(loaded, dict):
                raise ConfigurationError(
                    "Config root must be a mapping", source=str(path)
                )
            file_values = _flatten(loaded)
        elif config_path:
            raise ConfigurationError(
                f"Config file not found: {path}", source=str(path)
            )

        explicit = {k: v for k, v in overrides.items() if v is not None}
        try:
            env_values = cls().model_dump(exclude_unset=True)
            return cls(**{**file_values, **env_values, **explicit})
        except ValidationError as e:
            raise ConfigurationError(
                f"Invalid settings: {e}", source=str(path)
            ) from e

    def tolerances(self) -> Dict[str, float]:
        """Every numeric threshold that enters a decision."""
        return {
            "rank_tol": self.rank_tol,
            "closure_tol": self.closure_tol,
            "leakage_tol": self.leakage_tol,
            "peripheral_eps": self.peripheral_eps,
            "cycle_tol": self.cycle_tol,
            "consistency_tol": self.consistency_tol,
            "fixed_point_tol": self.fixed_point_tol,
            "positivity_cutoff": self.positivity_cutoff,
        }


def _flatten(sections: Dict[str, Any]) -> Dict[str, Any]:
    # The YAML groups keys by topic; the settings model is flat.
    flat: Dict[str, Any] = {}
    for key, value in sections.items():
        if isinstance(value, dict):
            flat.update(_flatten(value))
        else:
            flat[key] = value
    return flat
