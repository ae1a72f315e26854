"""
`schemas.errors` module defines pydantic models for different error responses.
"""
from pydantic import BaseModel


class DimensionMismatch(BaseModel):
    error: str = "Dimension mismatch: {} vs {}"


class MalformedMatrix(BaseModel):
    error: str = "line {}: malformed matrix text, {}"


class NotFoundCode(BaseModel):
    error: str = "Code not found by name or path: {}"


class NotFoundPlan(BaseModel):
    error: str = "Preparation plan not found by name or path: {}"


class NotFoundNetwork(BaseModel):
    error: str = "Network not found by name or path: {}"


class NotDualContaining(BaseModel):
    error: str = "The classical code does not contain its dual"


class NonPositiveK(BaseModel):
    error: str = "The code encodes no logical qubits (k = {})"


class DependentCosetLeaders(BaseModel):
    error: str = "Coset leaders are not independent modulo C0"


class SingularGram(BaseModel):
    error: str = "D D^T is not invertible, logical Z operators are undefined"


class ZbarOutsideDual(BaseModel):
    error: str = "Logical Z support of qubit {} leaves the dual of C0"


class InvalidPauli(BaseModel):
    error: str = "Invalid Pauli literal: {}"


class InvalidObservable(BaseModel):
    error: str = "Invalid logical observable: {}"


class NonCommutingGenerators(BaseModel):
    error: str = "Stabilizer generators {} and {} anticommute"


class DependentGenerators(BaseModel):
    error: str = "Stabilizer generators are not independent"


class PreconditionFailed(BaseModel):
    error: str = "Precondition failed for {}: {}"


class DenseCapExceeded(BaseModel):
    error: str = "Dense simulation is limited to {} qubits, got {}"


class ForcedOutcomeImpossible(BaseModel):
    error: str = "Forced outcome {} has zero probability for {}"


class MalformedSpec(BaseModel):
    error: str = "Malformed merged measurement: {}"


class LevelMismatch(BaseModel):
    error: str = "Operation {} cannot run at the {} level"


class InvalidPlacement(BaseModel):
    error: str = "Invalid placement for {}: {}"


class UnknownBuiltin(BaseModel):
    error: str = "No such builtin network like \"{}\""


class ParseError(BaseModel):
    error: str = "line {}: {}"


class NonCliffordGate(BaseModel):
    error: str = "Gate {} is not in the Clifford generator set"


class WrongNetwork(BaseModel):
    error: str = "Network {} carries no conditional two-bit corrections"
