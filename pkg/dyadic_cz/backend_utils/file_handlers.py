import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from dyadic_cz.backend_utils.czd import CZDecomposition
from dyadic_cz.backend_utils.errors import InputFormatError
from dyadic_cz.backend_utils.geometry import Point, parse_rational
from dyadic_cz.backend_utils.grids import GridFamily
from dyadic_cz.backend_utils.measure import Atom, DiscreteMeasure


"""
In this module the factory pattern is used to keep artifact reading flexible & maintainable.
Currently there are three handlers: measure files, decomposition reports and plain JSON artifacts.

To extend the artifact types:
1) Create a new subclass of ArtifactHandler in this file.
2) Implement read_file: parse the file and return the domain object.
3) Register the subclass in FileHandlerFactory under its artifact kind.

Every artifact is written through write_artifact, with sorted keys and a fixed
indentation, so identical runs produce byte-identical files.
"""


PathLike = Union[str, Path]


def _load_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise InputFormatError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path} is not valid JSON: {exc}") from exc


def dump_artifact(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_artifact(path: PathLike, payload: Any) -> None:
    """Write one JSON artifact; a single writer per file."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_artifact(payload))
    logging.info("wrote %s", path)


class ArtifactHandler(ABC):
    """Abstract base class for artifact readers."""

    @abstractmethod
    def read_file(self, path: PathLike) -> Any:
        """Read an artifact.

        Parameters:
        path (str or Path): file to read.

        Returns:
        The parsed domain object.
        """


class MeasureFileHandler(ArtifactHandler):
    """Measure files: {"dimension", "growth_dim", "points": [{"x", "mass", "f"}]}."""

    def read_file(self, path: PathLike) -> DiscreteMeasure:
        return DiscreteMeasure.from_json(_load_json(path))

    def read_signed(self, path: PathLike) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
        """Split a measure with signed f into the parts carrying f+ and f-.

        Returns:
        tuple: (measure with max(f, 0), measure with max(-f, 0)), same atoms and masses.
        """
        data = _load_json(path)
        try:
            dimension = int(data["dimension"])
            growth_dim = parse_rational(data["growth_dim"])
            records = [
                (Point.parse(rec["x"]), parse_rational(rec["mass"]), parse_rational(rec.get("f", "0")))
                for rec in data["points"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed measure record in {path}: {exc}") from exc
        positive = DiscreteMeasure(dimension, tuple(Atom(x, m, max(f, 0)) for x, m, f in records), growth_dim)
        negative = positive.with_density([max(-f, 0) for _, _, f in records])
        return positive, negative


class ReportFileHandler(ArtifactHandler):
    """Decomposition reports; they embed the measure so they verify on their own."""

    def read_file(self, path: PathLike) -> Dict[str, Tuple[DiscreteMeasure, GridFamily, CZDecomposition]]:
        data = _load_json(path)
        parts = data.get("parts") if isinstance(data, dict) else None
        if parts is None:
            return {"f": self.parse_part(data)}
        return {name: self.parse_part(part) for name, part in sorted(parts.items())}

    @staticmethod
    def parse_part(data: Dict[str, Any]) -> Tuple[DiscreteMeasure, GridFamily, CZDecomposition]:
        try:
            mu = DiscreteMeasure.from_json(data["measure"])
            dec = CZDecomposition.from_json(data["decomposition"])
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed report: missing {exc}") from exc
        if len(dec.g) != len(mu) or len(dec.b) != len(mu):
            raise InputFormatError("report g/b values do not match the embedded measure")
        return mu, GridFamily(mu.dimension), dec


class JSONArtifactHandler(ArtifactHandler):
    def read_file(self, path: PathLike) -> Any:
        return _load_json(path)


class FileHandlerFactory:
    """Factory for artifact handlers based on artifact kind."""

    @staticmethod
    def get_file_handler(kind: str) -> ArtifactHandler:
        """Get the handler for the given artifact kind.

        Raises:
        InputFormatError: If the kind is not supported.
        """
        if kind == "measure":
            return MeasureFileHandler()
        elif kind == "report":
            return ReportFileHandler()
        elif kind == "json":
            return JSONArtifactHandler()
        else:
            raise InputFormatError(f"invalid artifact kind {kind!r}")
