from __future__ import annotations

import numpy as np
from pydantic import BaseModel, model_serializer
from pydantic.config import ConfigDict


def to_camel(value: str) -> str:
    parts = value.split("_")
    return parts[0] + "".join(word.capitalize() for word in parts[1:])


class BaseSchema(BaseModel):
    model_config = ConfigDict(
        alias_generator=to_camel,
        populate_by_name=True,
    )

    @model_serializer(mode="wrap")
    def _serialize_model(self, handler):  # type: ignore[no-untyped-def]
        return _convert_numpy(handler(self))


def _convert_numpy(value):  # type: ignore[no-untyped-def]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, list):
        return [_convert_numpy(item) for item in value]
    if isinstance(value, dict):
        return {key: _convert_numpy(item) for key, item in value.items()}
    return value
