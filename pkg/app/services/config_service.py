from pathlib import Path
import logging
import os
from typing import Dict, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from app.grid.errors import ScenarioError
from app.models.scenario_models import ScenarioConfig, ScenarioEntry, ScenarioRegistry

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

class ConfigService:
    """Service for loading environment settings and scenario files"""

    def __init__(self):
        self._registry: Optional[ScenarioRegistry] = None
        self._env_loaded = False
        self._load_environment()

    def _load_environment(self):
        """Load environment variables from .env file"""
        if not self._env_loaded:
            env_path = _get_project_root() / ".env"

            if env_path.exists():
                load_dotenv(env_path)
            else:
                load_dotenv()

            self._env_loaded = True

    def env_var(self, key: str, default: Optional[str] = None, required: bool = False) -> str:
        """Get environment variable with validation"""
        value = os.getenv(key, default)

        if required and not value:
            raise ValueError(f"Required environment variable '{key}' is not set")

        return value

    @property
    def log_level(self) -> str:
        """Log level from environment"""
        return self.env_var("LOG_LEVEL", default="INFO").upper()

    @property
    def environment(self) -> str:
        """Current environment (development, production, etc.)"""
        return self.env_var("ENVIRONMENT", default="development")

    @property
    def output_dir(self) -> Path:
        """Root directory for run artifacts; relative paths hang off the project root"""
        path = Path(self.env_var("OUTPUT_DIR", default="output"))
        return path if path.is_absolute() else _get_project_root() / path

    @property
    def default_seed(self) -> int:
        """Seed used when neither the scenario nor the caller sets one"""
        return int(self.env_var("DEFAULT_SEED", default="1"))

    @property
    def batch_workers(self) -> int:
        """Worker processes for batch runs"""
        return max(1, int(self.env_var("BATCH_WORKERS", default="1")))

    @property
    def config_dir(self) -> Path:
        return _get_project_root() / "config"

    def configure_logging(self, level: Optional[str] = None) -> None:
        """Configure the root logger once from LOG_LEVEL"""
        logging.basicConfig(level=(level or self.log_level).upper(), format=LOG_FORMAT)

    def load_registry(self) -> ScenarioRegistry:
        """Loads the scenario registry from scenarios.yaml"""
        if self._registry is not None:
            return self._registry

        registry_path = self.config_dir / "scenarios.yaml"

        if not registry_path.exists():
            raise FileNotFoundError(f"Scenario registry not found at {registry_path}")

        raw_registry = _read_yaml(registry_path)
        try:
            self._registry = ScenarioRegistry(**raw_registry)
        except ValidationError as e:
            raise ScenarioError(f"Invalid scenario registry {registry_path}", _issues(e)) from e

        return self._registry

    @property
    def all_scenarios(self) -> Dict[str, ScenarioEntry]:
        """Get all registered scenarios"""
        return self.load_registry().scenarios

    def scenario_entry(self, scenario_id: str) -> Optional[ScenarioEntry]:
        """Get a specific registry entry by ID"""
        return self.all_scenarios.get(scenario_id)

    def scenario_path(self, scenario: Union[str, Path]) -> Path:
        """Resolve a registered scenario id or a file path"""
        entry = self.scenario_entry(str(scenario))
        if entry is not None:
            return self.config_dir / entry.path

        path = Path(scenario)
        if path.exists():
            return path

        raise ScenarioError(f"Scenario '{scenario}' is neither a registered id nor an existing file")

    def load_scenario(self, scenario: Union[str, Path]) -> ScenarioConfig:
        """Parse and validate a scenario by id or path"""
        path = self.scenario_path(scenario)
        raw_scenario = _read_yaml(path)

        raw_scenario.setdefault("id", str(scenario) if self.scenario_entry(str(scenario)) else path.stem)
        entry = self.scenario_entry(str(raw_scenario["id"]))
        if entry is not None:
            raw_scenario.setdefault("description", entry.description)

        try:
            return ScenarioConfig(**raw_scenario)
        except ValidationError as e:
            raise ScenarioError(f"Invalid scenario {path}", _issues(e)) from e


def _read_yaml(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as file:
        try:
            raw = yaml.safe_load(file)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ScenarioError(f"Error parsing {path}{where}: {getattr(e, 'problem', e)}") from e

    if not isinstance(raw, dict):
        raise ScenarioError(f"Invalid configuration format in {path}: expected a mapping")
    return raw


def _issues(error: ValidationError) -> list:
    return [
        f"{'.'.join(str(part) for part in issue['loc']) or '<root>'}: {issue['msg']}"
        for issue in error.errors()
    ]


def _get_project_root() -> Path:
    return Path(__file__).parent.parent.parent


# Global instance
config_service = ConfigService()
