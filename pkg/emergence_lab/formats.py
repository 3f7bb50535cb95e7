"""Wrappers around the JSON input files: systems, measures, sets, ensembles and certificates."""

from __future__ import annotations

import json
import typing
from abc import ABC, abstractmethod

import aiofiles
import jsonschema

from emergence_lab import utils
from emergence_lab.certificates import Certificate
from emergence_lab.errors import MalformedSpecError
from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure
from emergence_lab.systems import SymbolicSystem

RATIONAL = {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}
WORD = {"type": "string", "pattern": f"^[{utils.ALPHABET}]+$"}

SYSTEM_SCHEMA: typing.Dict[str, typing.Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "system",
    "type": "object",
    "properties": {
        "type": {"enum": [utils.FULL_SHIFT, utils.SFT]},
        "m": {"type": "integer", "minimum": 2, "maximum": utils.MAX_ALPHABET_SIZE},
        "lambda": RATIONAL,
        "transitions": {
            "type": "array",
            "items": {"type": "array", "items": {"enum": [0, 1, True, False]}},
        },
    },
    "required": ["type", "m"],
    "additionalProperties": False,
}

ATOMS = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "properties": {"word": WORD, "weight": RATIONAL},
        "required": ["word", "weight"],
        "additionalProperties": False,
    },
}

MEASURE_SCHEMA: typing.Dict[str, typing.Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "measure",
    "type": "object",
    "properties": {"atoms": ATOMS},
    "required": ["atoms"],
}

SET_SCHEMA: typing.Dict[str, typing.Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "set",
    "type": "object",
    "properties": {"points": {"type": "array", "minItems": 1, "items": WORD}},
    "required": ["points"],
}

ENSEMBLE_SCHEMA: typing.Dict[str, typing.Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "ensemble",
    "type": "object",
    "properties": {
        "measures": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {"weight": RATIONAL, "atoms": ATOMS},
                "required": ["atoms"],
            },
        }
    },
    "required": ["measures"],
}

CERTIFICATE_SCHEMA: typing.Dict[str, typing.Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "certificate",
    "type": "object",
    "properties": {
        "kind": {"enum": list(utils.VALID_CERTIFICATE_KINDS)},
        "system": SYSTEM_SCHEMA,
        "scale": {
            "type": "object",
            "properties": {"n": {"type": "integer", "minimum": 1}, "epsilon": RATIONAL},
            "required": ["n", "epsilon"],
        },
        "witnesses": {"type": "array", "minItems": 1},
        "verification": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["full", "sampled"]},
                "seed": {"type": ["integer", "null"]},
                "pairs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "pair": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                            "distance": RATIONAL,
                            "bound": RATIONAL,
                            "witness": WORD,
                        },
                        "required": ["pair"],
                    },
                },
            },
            "required": ["mode", "pairs"],
        },
        "metadata": {"type": "object"},
    },
    "required": ["kind", "system", "scale", "witnesses", "verification"],
}


class BaseFormat(ABC):
    """A JSON input file checked against its Draft 7 schema.

    Args:
        content: Raw JSON text or the already decoded object

    Raises:
        MalformedSpecError: when the content is not JSON or does not match the format.
    """

    schema: typing.ClassVar[typing.Dict[str, typing.Any]]

    def __init__(self, content: typing.Union[str, typing.Dict[str, typing.Any]]) -> None:
        if isinstance(content, str):
            try:
                content = json.loads(content)
            except json.JSONDecodeError as err:
                raise MalformedSpecError(f"{self.name} file is not valid JSON: {err}") from err
        self.raw = typing.cast(typing.Dict[str, typing.Any], content)
        self.validate()

    @property
    def name(self) -> str:
        return self.schema["title"]

    def validate(self) -> None:
        try:
            jsonschema.Draft7Validator(self.schema).validate(self.raw)
        except jsonschema.ValidationError as err:
            raise MalformedSpecError(f"{self.name} file does not match its format: {err.message}") from err

    @classmethod
    def load(cls, fp: str) -> BaseFormat:
        """Parse the file at a path."""
        with open(fp, mode="r") as f:
            content = f.read()
            return cls(content)

    @classmethod
    async def async_load(cls, fp: str) -> BaseFormat:
        """Parse the file at a path."""
        async with aiofiles.open(fp, mode="r") as f:
            content = await f.read()
            return cls(content)

    @abstractmethod
    def build(self, system: typing.Optional[SymbolicSystem] = None) -> typing.Any:
        """The domain object the file describes."""

    def __eq__(self, other: typing.Any) -> bool:
        if not isinstance(other, BaseFormat):
            return NotImplemented
        return type(self) is type(other) and self.raw == other.raw

    def __hash__(self) -> int:
        return hash(json.dumps(self.raw, sort_keys=True))


class SystemFormat(BaseFormat):
    """A full shift or an SFT with its metric parameter."""

    schema = SYSTEM_SCHEMA

    def build(self, system: typing.Optional[SymbolicSystem] = None) -> SymbolicSystem:
        return SymbolicSystem.from_dict(self.raw)


class MeasureFormat(BaseFormat):
    """Weighted cylinder atoms."""

    schema = MEASURE_SCHEMA

    def build(self, system: typing.Optional[SymbolicSystem] = None) -> DiscreteMeasure:
        return DiscreteMeasure(((atom["word"], atom["weight"]) for atom in self.raw["atoms"]), _require(system))


class SetFormat(BaseFormat):
    """Finitely many cylinder points."""

    schema = SET_SCHEMA

    def build(self, system: typing.Optional[SymbolicSystem] = None) -> FiniteClosedSet:
        return FiniteClosedSet(self.raw["points"], _require(system))


class EnsembleFormat(BaseFormat):
    """A list of measures with optional weights; missing weights make the ensemble uniform."""

    schema = ENSEMBLE_SCHEMA

    def build(
        self, system: typing.Optional[SymbolicSystem] = None
    ) -> typing.List[typing.Tuple[DiscreteMeasure, typing.Any]]:
        entries = self.raw["measures"]
        uniform = f"1/{len(entries)}"
        return [
            (MeasureFormat({"atoms": entry["atoms"]}).build(system), entry.get("weight", uniform))
            for entry in entries
        ]


class CertificateFormat(BaseFormat):
    """A separation certificate as written by `certify`."""

    schema = CERTIFICATE_SCHEMA

    def build(self, system: typing.Optional[SymbolicSystem] = None) -> Certificate:
        return Certificate.from_dict(self.raw)


def _require(system: typing.Optional[SymbolicSystem]) -> SymbolicSystem:
    if system is None:
        raise ValueError("this file format needs a system to build against")
    return system
