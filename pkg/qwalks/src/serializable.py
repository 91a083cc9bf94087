"""
Common interface for the value types that are written to disk
"""
import json
from abc import ABC, abstractmethod
from typing import Any


class Serializable(ABC):
    """
    Base class for objects exported as JSON documents. Equality and hashing
    follow the serialized form, so two objects describing the same
    configuration compare equal.
    """

    @abstractmethod
    def serialize(self) -> dict[str, Any]:
        pass

    @classmethod
    @abstractmethod
    def deserialize(cls, *args, **kwargs) -> "Serializable":
        pass

    def to_json(self) -> str:
        """Canonical JSON text (sorted keys) of the serialized form"""
        return json.dumps(self.serialize(), sort_keys=True)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.serialize()})"

    def __str__(self) -> str:
        return self.__repr__()

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, self.__class__):
            return self.serialize() == other.serialize()
        return False

    def __ne__(self, other: Any) -> bool:
        return not self.__eq__(other)

    def __hash__(self) -> int:
        return hash(self.to_json())
