"""
Configuración desde variables de entorno (.env vía python-dotenv)
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError

from .models import ConfigurationError


ENV_KEYS = {
    "tol": "MULTITWIST_TOL",
    "budget": "MULTITWIST_BUDGET",
    "dim_cap": "MULTITWIST_DIM_CAP",
    "log_file": "MULTITWIST_LOG_FILE",
    "max_newton": "MULTITWIST_MAX_NEWTON",
    "workdir": "MULTITWIST_WORKDIR",
}


class Settings(BaseModel):
    """Parámetros del análisis; las opciones de la CLI tienen prioridad"""
    tol: float = Field(default=1e-10, gt=0)
    budget: int = Field(default=1_000_000, gt=0)
    dim_cap: int = Field(default=3, ge=1)
    log_file: str = "multitwist_analysis.log"
    max_newton: int = Field(default=50, ge=1)
    workdir: Path = Path("./artifacts")

    @classmethod
    def from_env(cls, overrides: Optional[Dict[str, Any]] = None) -> "Settings":
        """
        Lee las variables MULTITWIST_* ya cargadas con load_dotenv()

        Raises:
            ConfigurationError con la clave inválida
        """
        values: Dict[str, Any] = {}
        for field, key in ENV_KEYS.items():
            raw = os.getenv(key)
            if raw is not None and raw != "":
                values[field] = raw
        for field, value in (overrides or {}).items():
            if value is not None:
                values[field] = value
        try:
            return cls(**values)
        except PydanticValidationError as e:
            field = e.errors()[0]["loc"][0]
            key = ENV_KEYS.get(str(field), str(field))
            raise ConfigurationError(f"Valor inválido para {key}: {values.get(field)!r}") from e

    def ensure_workdir(self) -> Path:
        self.workdir.mkdir(parents=True, exist_ok=True)
        return self.workdir
