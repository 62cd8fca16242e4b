import hashlib

from pydantic import BaseModel


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_model(model: BaseModel) -> str:
    """SHA-256 of the compact canonical JSON of a pydantic model."""
    return digest_bytes(model.model_dump_json().encode("utf-8"))
