from pydantic import BaseModel, model_validator
from typing import List, Optional


class LegitimacyReport(BaseModel):
    """
    `LegitimacyReport` is a pydantic model defining the schema
    for the outcome of one transversal-gate check.
    Both the combinatorial and the simulated entry must hold for `legitimate`,
    and a witness is present exactly when the gate is not legitimate.
    """
    code: str
    gate: str
    w: Optional[int] = None
    legitimate: bool
    combinatorial: bool
    simulated: bool
    logical_action: str
    global_phase: int = 0
    checked: int = 0
    terms: int = 0
    sampled: bool = False
    witness: Optional[str] = None
    details: List[str] = []

    model_config = {
        "json_schema_extra": {
            "example": {
                "code": "hamming7", "gate": "S", "legitimate": True,
                "combinatorial": True, "simulated": True,
                "logical_action": "S^3", "global_phase": 0, "checked": 2, "terms": 16,
                "details": ["u=0 phase=i^0", "u=1 phase=i^3"],
            }
        }
    }

    @model_validator(mode='after')
    def witness_iff_illegitimate(self) -> 'LegitimacyReport':
        if self.legitimate != (self.combinatorial and self.simulated):
            raise ValueError('legitimate requires both the combinatorial and the simulated entry')
        if self.legitimate == (self.witness is not None):
            raise ValueError('a witness is present exactly when the gate is not legitimate')
        return self
