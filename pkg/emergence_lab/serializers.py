"""Writers for run artifacts: per-cell tables (CSV or Avro), JSON summaries and run manifests.

Exact values are written as "p/q" or integer strings; floats only go into `_float` columns.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import platform
import typing
from abc import ABC, abstractmethod
from fractions import Fraction

import fastavro

from emergence_lab import __version__, utils
from emergence_lab.config import AVRO, RunConfig
from emergence_lab.emergence import ScalingCell
from emergence_lab.errors import SerializerError

logger = logging.getLogger(__name__)

CELL_COLUMNS = (
    "n",
    "epsilon",
    "lower",
    "upper",
    "exact",
    "base",
    "log_lower_float",
    "log_upper_float",
    "double_log_lower_float",
    "double_log_upper_float",
    "log_base_float",
    "witness",
)

CELL_AVRO_SCHEMA = {
    "type": "record",
    "name": "ScalingCell",
    "namespace": "emergence_lab",
    "fields": [
        {"name": "n", "type": "int"},
        {"name": "epsilon", "type": "string"},
        {"name": "lower", "type": ["null", "string"], "default": None},
        {"name": "upper", "type": ["null", "string"], "default": None},
        {"name": "exact", "type": "boolean"},
        {"name": "base", "type": ["null", "string"], "default": None},
        {"name": "log_lower_float", "type": "double"},
        {"name": "log_upper_float", "type": "double"},
        {"name": "double_log_lower_float", "type": "double"},
        {"name": "double_log_upper_float", "type": "double"},
        {"name": "log_base_float", "type": ["null", "double"], "default": None},
        {"name": "witness", "type": ["null", "string"], "default": None},
    ],
}

PACKAGES = ("numpy", "networkx", "jsonschema", "fastavro", "click")


def _exact(value: typing.Optional[int]) -> typing.Optional[str]:
    return None if value is None else str(value)


def cell_record(cell: ScalingCell, witness: typing.Optional[str] = None) -> typing.Dict[str, typing.Any]:
    """One row of the cell table."""
    return {
        "n": cell.n,
        "epsilon": utils.format_rational(cell.eps),
        "lower": _exact(cell.lower),
        "upper": _exact(cell.upper),
        "exact": cell.lower is not None and cell.lower == cell.upper,
        "base": _exact(cell.base),
        "log_lower_float": cell.log_lower,
        "log_upper_float": cell.log_upper,
        "double_log_lower_float": cell.double_log_lower,
        "double_log_upper_float": cell.double_log_upper,
        "log_base_float": cell.log_base,
        "witness": witness,
    }


def to_json(payload: typing.Any) -> str:
    """Deterministic JSON text: sorted keys, rationals as "p/q"."""

    def default(value: typing.Any) -> typing.Any:
        if isinstance(value, Fraction):
            return utils.format_rational(value)
        if hasattr(value, "to_dict"):
            return value.to_dict()
        raise TypeError(f"{type(value).__name__} is not JSON serializable")

    return json.dumps(payload, sort_keys=True, indent=2, default=default) + "\n"


def package_versions() -> typing.Dict[str, str]:
    from importlib import metadata

    versions = {"emergence_lab": __version__, "python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class ArtifactWriter(ABC):
    """Writes the artifacts of one run into `config.output_dir`.

    Args:
        config: The run configuration, echoed into the manifest
    """

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.artifacts: typing.List[str] = []

    @property
    @abstractmethod
    def extension(self) -> str: ...

    @abstractmethod
    def _encode_cells(self, records: typing.List[typing.Dict[str, typing.Any]]) -> bytes: ...

    def _path(self, name: str) -> str:
        return os.path.join(self.config.output_dir, name)

    def _write(self, name: str, content: bytes) -> str:
        path = self._path(name)
        try:
            os.makedirs(self.config.output_dir, exist_ok=True)
            with open(path, mode="wb") as f:
                f.write(content)
        except OSError as err:
            raise SerializerError(f"could not write {path}: {err}") from err
        self.artifacts.append(name)
        logger.info(f"Wrote {path}")
        return path

    def write_cells(
        self,
        name: str,
        cells: typing.Sequence[ScalingCell],
        witnesses: typing.Optional[typing.Mapping[typing.Tuple[int, Fraction], str]] = None,
    ) -> str:
        """Write one row per cell, ordered by (eps descending, n)."""
        witnesses = witnesses or {}
        ordered = sorted(cells, key=lambda cell: (-cell.eps, cell.n))
        records = [cell_record(cell, witnesses.get((cell.n, cell.eps))) for cell in ordered]
        return self._write(f"{name}.{self.extension}", self._encode_cells(records))

    def write_json(self, name: str, payload: typing.Any) -> str:
        return self._write(f"{name}.json", to_json(payload).encode())

    def write_manifest(self) -> str:
        """The manifest holds the configuration, package versions, seed and the artifact list."""
        manifest = {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "versions": package_versions(),
            "artifacts": sorted(self.artifacts),
        }
        return self._write("manifest.json", to_json(manifest).encode())


class CsvWriter(ArtifactWriter):
    """Cell tables as CSV with a header row."""

    extension = "csv"

    def _encode_cells(self, records: typing.List[typing.Dict[str, typing.Any]]) -> bytes:
        with io.StringIO() as buffer:
            writer = csv.DictWriter(buffer, fieldnames=CELL_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for record in records:
                writer.writerow({key: "" if value is None else _csv_value(value) for key, value in record.items()})
            return buffer.getvalue().encode()


def _csv_value(value: typing.Any) -> typing.Any:
    if isinstance(value, float):
        return repr(value)
    return value


class AvroWriter(ArtifactWriter):
    """Cell tables as an Avro object container.

    The sync marker is derived from the seed so identical runs write identical bytes.
    """

    extension = "avro"

    def __init__(self, config: RunConfig) -> None:
        super().__init__(config)
        self.schema = fastavro.parse_schema(CELL_AVRO_SCHEMA)

    def _encode_cells(self, records: typing.List[typing.Dict[str, typing.Any]]) -> bytes:
        marker = hashlib.sha256(f"emergence_lab:{self.config.seed}".encode()).digest()[:16]
        with io.BytesIO() as buffer:
            try:
                fastavro.writer(buffer, self.schema, records, sync_marker=marker)
            except (ValueError, TypeError) as err:
                raise SerializerError(f"cell records do not match the Avro schema: {err}") from err
            return buffer.getvalue()


def read_avro_cells(path: str) -> typing.List[typing.Dict[str, typing.Any]]:
    with open(path, mode="rb") as f:
        return list(fastavro.reader(f))


def get_writer(config: RunConfig) -> ArtifactWriter:
    if config.format == AVRO:
        return AvroWriter(config)
    return CsvWriter(config)
