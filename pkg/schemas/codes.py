from pydantic import BaseModel
from typing import List, Optional


class PartitionReport(BaseModel):
    """
    `PartitionReport` is a pydantic model defining the schema
    for the split of X-type and Z-type operators of one code block.
    """
    code: str
    n: int
    x_stabilizers: int
    z_stabilizers: int
    logical_x: int
    logical_z: int
    detectable_x: int
    detectable_z: int
    explicit: bool

    model_config = {
        "json_schema_extra": {
            "example": {
                "code": "hamming7", "n": 7,
                "x_stabilizers": 8, "z_stabilizers": 8,
                "logical_x": 2, "logical_z": 2,
                "detectable_x": 8, "detectable_z": 8,
                "explicit": True,
            }
        }
    }

    @property
    def counts(self) -> tuple:
        return (self.x_stabilizers, self.z_stabilizers, self.logical_x,
                self.logical_z, self.detectable_x, self.detectable_z)


class CodeSummary(BaseModel):
    """
    `CodeSummary` is a pydantic model defining the schema
    for the `build-code` report: sizes, coset leaders, logical supports and flags.
    """
    name: str
    n: int
    k: int
    kappa: int
    kappa_z: int
    d: Optional[int] = None
    leaders: List[str]
    logical_z: List[str]
    gram: List[str]
    dual_contained: bool
    symmetric: bool
    doubly_even: bool
    weights_mult4: bool
    ddt_identity: bool
    zbar_consistent: bool
    partition: PartitionReport

    model_config = {
        "json_schema_extra": {
            "example": {
                "name": "hamming7", "n": 7, "k": 1, "kappa": 3, "kappa_z": 3, "d": 3,
                "leaders": ["1101000"], "logical_z": ["1101000"], "gram": ["1"],
                "dual_contained": True, "symmetric": True, "doubly_even": True,
                "weights_mult4": True, "ddt_identity": True, "zbar_consistent": True,
            }
        }
    }
