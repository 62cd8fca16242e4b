from pydantic import BaseModel, Field


class RunStamp(BaseModel):
    tool: str = Field(default="imprecise-logit", description="Name of the producing tool")
    version: str = Field(description="Tool version that produced the file")
    command: str = Field(description="Subcommand that produced the file")
    seed: int | None = Field(default=None, description="Run seed (None when the command draws no randomness)")
    inputs: dict[str, str] = Field(default_factory=dict, description="SHA-256 digests of the input files, by role")

    # Pydantic v2 style
    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "tool": "imprecise-logit",
                "version": "0.1.0",
                "command": "fit",
                "seed": 7,
                "inputs": {"data": "9f2c5e..."},
            }
        }
    }
