from pydantic import BaseModel, model_validator
from typing import Dict, List, Optional


class PreparationReport(BaseModel):
    """
    `PreparationReport` is a pydantic model defining the schema
    for the `prep-state` report: the measurement trace and the final verification.
    """
    plan: str
    code: Optional[str] = None
    qubits: int
    start: List[str]
    trace: List[str]
    eigenvalues: List[int]
    verified: bool
    fidelity: Optional[float] = None

    model_config = {
        "json_schema_extra": {
            "example": {
                "plan": "xz_yy", "code": "hamming15", "qubits": 2,
                "start": ["PLUS 0", "ZERO 1"],
                "trace": ["M2 +YY -> -1, applied Q2 +IZ"],
                "eigenvalues": [1, 1], "verified": True, "fidelity": 1.0,
            }
        }
    }

    @model_validator(mode='after')
    def verified_means_all_plus(self) -> 'PreparationReport':
        if self.verified and any(value != 1 for value in self.eigenvalues):
            raise ValueError('a verified preparation has every eigenvalue +1')
        return self


class MergedMeasurementReport(BaseModel):
    """
    `MergedMeasurementReport` is a pydantic model defining the schema
    for one recovery merged with logical-observable measurements.
    """
    code: str
    observables: List[str]
    eigenvalues: List[int]
    syndromes: Dict[str, str]
    corrections: List[str]
    repetitions: int
    ancilla_attempts: int
    information_bits: int
    agrees_with_logical: Optional[bool] = None

    model_config = {
        "json_schema_extra": {
            "example": {
                "code": "hamming7", "observables": ["Z:1"], "eigenvalues": [-1],
                "syndromes": {"X": "000", "Z": "000"}, "corrections": [],
                "repetitions": 3, "ancilla_attempts": 2, "information_bits": 7,
                "agrees_with_logical": True,
            }
        }
    }
