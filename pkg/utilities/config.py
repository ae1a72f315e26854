"""
`config` module stores toolkit-wide constants and the `Settings` model built from CLI flags.
"""
from os.path import abspath, dirname, join, normpath
from typing import Tuple

from pydantic import BaseModel, Field, field_validator

# Save main app directory
APP_ROOT = normpath(dirname(dirname(abspath(__file__))))
MATERIALS_ROOT = join(APP_ROOT, 'materials')

DEFAULT_SAMPLE = 256
DENSE_CAP = 20
REPETITIONS = 3
RETRY_LIMIT = 8
TYPE_PAIR = ('X', 'Z')
CLASSIFY_LIMIT = 16
# Phases of sparse states are exponents of exp(2πi/16)
PHASE_UNIT = 16
VERIFY_TRIALS = 8


class Settings(BaseModel):
    """
    `Settings` is a pydantic model collecting the tunables of one CLI run.
    """
    sample: int = Field(default=DEFAULT_SAMPLE, ge=0)
    seed: int = 0
    repetitions: int = Field(default=REPETITIONS, ge=1)
    retry_limit: int = Field(default=RETRY_LIMIT, ge=1)
    type_pair: Tuple[str, str] = TYPE_PAIR
    dense_cap: int = Field(default=DENSE_CAP, ge=1, le=24)
    classify_limit: int = CLASSIFY_LIMIT
    trials: int = Field(default=VERIFY_TRIALS, ge=0)
    jobs: int = Field(default=1, ge=1)
    debug: bool = False

    model_config = {
        "json_schema_extra": {
            "example": {
                "sample": 256, "seed": 7, "repetitions": 3, "retry_limit": 8,
                "type_pair": ["X", "Z"], "dense_cap": 20, "classify_limit": 16,
                "trials": 8, "jobs": 1, "debug": False,
            }
        }
    }

    @field_validator('type_pair', mode='before')
    @classmethod
    def parse_type_pair(cls, value):
        if isinstance(value, str):
            value = tuple(value.replace(',', '').upper())
        pair = tuple(sorted(value))
        if len(pair) != 2 or len(set(pair)) != 2 or set(pair) - {'X', 'Y', 'Z'}:
            raise ValueError(f'type pair must be two of X, Y, Z, got {value}')
        return pair


settings = Settings()
