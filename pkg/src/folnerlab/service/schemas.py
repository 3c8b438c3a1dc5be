"""Request and response models for the certificate service.

Requests mirror the config documents the CLI reads; rationals travel as
"p/q" strings and exactness lives in the core, so these models only pin the
shape.  ``model_dump(exclude_none=True)`` turns a request back into the
config dict the runners consume.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class CommandConfig(BaseModel):
    """Shared envelope: configs may restate their command and carry a seed."""

    model_config = ConfigDict(extra="forbid")

    command: Optional[str] = None
    seed: Optional[int] = None

    def to_config(self) -> dict:
        return self.model_dump(exclude_none=True)


class SetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["box", "elements", "units"]
    side: Optional[int] = None
    translate: Optional[list] = None
    elements: Optional[list] = None
    identity: Optional[bool] = None
    inverses: Optional[bool] = None


class PartitionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["congruence", "checkerboard"]
    modulus: Optional[int] = None
    coordinate: Optional[int] = None


class StreamSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    side: int
    spacing: Optional[int] = None
    axis: Optional[int] = None


class InvarianceRequest(CommandConfig):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    backend: str
    set_: SetSpec = Field(alias="set")
    K: SetSpec
    epsilon: str
    klass: int = Field(0, alias="class")

    def to_config(self) -> dict:
        out = self.model_dump(exclude_none=True, by_alias=True)
        return out


class WnsRequest(CommandConfig):
    backend: str
    partition: PartitionSpec
    x: list
    target: Optional[list] = None
    trials: int = 1
    seed: int = 0


class MidpointRequest(CommandConfig):
    backend: str
    A: SetSpec
    B: SetSpec
    delta: str
    K: Optional[SetSpec] = None
    mode: Literal["union", "hs"] = "union"
    partition: Optional[PartitionSpec] = None


class QuasitileRequest(CommandConfig):
    backend: str
    target: SetSpec
    tile_sides: list
    epsilon: str
    K: SetSpec
    certify_pieces: bool = True


class QuotafillRequest(CommandConfig):
    backend: str = "z1"
    piece_sizes: list
    partition: PartitionSpec
    epsilon: str
    M: str
    tile_bound: int
    gap: int = 5


class PipelineRequest(CommandConfig):
    backend: str
    partition: PartitionSpec
    target: list
    K: SetSpec
    epsilon: str
    tile_sides: list
    stream: StreamSpec


class AffineFolnerRequest(CommandConfig):
    n_values: list


class AffineObstructionRequest(CommandConfig):
    n_max: int = 6
    candidates: int = 1000
    seed: int = 0


class Report(BaseModel):
    """Envelope of every report; command-specific payload rides along."""

    model_config = ConfigDict(extra="allow")

    schema_version: int = Field(alias="schema")
    command: str
    passed: bool = Field(alias="pass")


class HealthResponse(BaseModel):
    status: str
    schema_version: int
    commands: list
