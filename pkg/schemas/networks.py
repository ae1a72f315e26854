from pydantic import BaseModel, model_validator
from typing import Dict, List, Optional


class ResourceReport(BaseModel):
    """
    `ResourceReport` is a pydantic model defining the schema
    for the block, time-step and area counts of one network, split by label.
    """
    network: str
    blocks_offline: int = 0
    steps_offline: int = 0
    area_offline: int = 0
    blocks_online: int = 0
    steps_online: int = 0
    area_online: int = 0

    model_config = {
        "json_schema_extra": {
            "example": {
                "network": "cnot-gc",
                "blocks_offline": 2, "steps_offline": 3, "area_offline": 6,
                "blocks_online": 3, "steps_online": 1, "area_online": 3,
            }
        }
    }

    @property
    def offline(self) -> tuple:
        return self.blocks_offline, self.steps_offline, self.area_offline

    @property
    def online(self) -> tuple:
        return self.blocks_online, self.steps_online, self.area_online


class FaultReport(BaseModel):
    """
    `FaultReport` is a pydantic model defining the schema
    for exhaustive single-fault injection over one network.
    """
    network: str
    code: str
    locations: int
    worst: Dict[str, int]
    passed: bool
    witness: Optional[str] = None

    model_config = {
        "json_schema_extra": {
            "example": {
                "network": "teleport", "code": "hamming7", "locations": 126,
                "worst": {"S": 1, "E": 1, "D": 1}, "passed": True,
            }
        }
    }

    @model_validator(mode='after')
    def passed_means_weight_one(self) -> 'FaultReport':
        if self.passed != all(weight <= 1 for weight in self.worst.values()):
            raise ValueError('a passing report has residual weight <= 1 in every block')
        if self.passed == (self.witness is not None):
            raise ValueError('a witness is present exactly when the check fails')
        return self


class ToffoliAnalysis(BaseModel):
    """
    `ToffoliAnalysis` is a pydantic model defining the schema
    for the online cost of the conditional corrections of a Toffoli network.
    `distribution` maps the number of correction steps to the number of outcomes,
    `mean` is the exact average number of online steps as a fraction.
    """
    network: str
    outcomes: int
    distribution: Dict[int, int]
    mean: str
    mean_value: float
    branches: List[str] = []

    model_config = {
        "json_schema_extra": {
            "example": {
                "network": "toffoli", "outcomes": 8,
                "distribution": {0: 1, 1: 3, 2: 3, 3: 1},
                "mean": "13/8", "mean_value": 1.625,
            }
        }
    }


class SimulationReport(BaseModel):
    """
    `SimulationReport` is a pydantic model defining the schema
    for one seeded run of a network plus the check of its advertised action.
    """
    network: str
    code: str
    level: str
    backend: str
    seed: int
    outcomes: Dict[str, int]
    action: str
    verified: Optional[bool] = None
    trials: int = 0
    trace: List[str] = []

    model_config = {
        "json_schema_extra": {
            "example": {
                "network": "teleport", "code": "hamming7", "level": "logical",
                "backend": "tableau", "seed": 7, "outcomes": {"a": 1, "b": -1, "t": 1},
                "action": "I", "verified": True, "trials": 8,
            }
        }
    }
