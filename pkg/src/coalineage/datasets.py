"""Loading allele data files and the bundled reference dataset.

A data file is a JSON object with either "counts" (a list of positive
integers, one per allele class) or "spectrum" (an object mapping class
size to the number of classes of that size), plus an optional "name".
Parsing is strict: unknown keys, non-integer numbers, and disagreements
between a redundant counts/spectrum pair are all rejected, because a
silently mangled configuration would corrupt every number downstream.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DataFormatError
from .ewens import AlleleConfiguration, AllelicPartition

__all__ = ["Dataset", "bundled_names", "load_dataset", "parse_dataset"]

_ALLOWED_KEYS = {"name", "counts", "spectrum"}


@dataclass(frozen=True)
class Dataset:
    """A named allelic partition ready for estimation or simulation."""

    partition: AllelicPartition
    name: str | None = None

    @property
    def configuration(self) -> AlleleConfiguration:
        return self.partition.to_configuration()

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def k(self) -> int:
        return self.partition.k


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataFormatError(f"{what} must be an integer, got {value!r}")
    return value


def _counts_from_list(raw) -> Counter:
    if not isinstance(raw, list) or not raw:
        raise DataFormatError('"counts" must be a non-empty list of integers')
    sizes = Counter()
    for c in raw:
        c = _as_int(c, "an allele count")
        if c < 1:
            raise DataFormatError(f"allele counts must be >= 1, got {c}")
        sizes[c] += 1
    return sizes


def _counts_from_spectrum(raw) -> Counter:
    if not isinstance(raw, dict) or not raw:
        raise DataFormatError('"spectrum" must be a non-empty object')
    sizes = Counter()
    for key, value in raw.items():
        try:
            size = int(key)
        except (TypeError, ValueError):
            raise DataFormatError(f"spectrum keys must be integers, got {key!r}") from None
        if str(size) != str(key).strip():
            raise DataFormatError(f"spectrum keys must be plain integers, got {key!r}")
        if size < 1:
            raise DataFormatError(f"class sizes must be >= 1, got {size}")
        count = _as_int(value, f"the class count for size {size}")
        if count < 1:
            raise DataFormatError(
                f"class counts must be >= 1, got {count} for size {size}"
            )
        if size in sizes:
            raise DataFormatError(f"size {size} appears twice in the spectrum")
        sizes[size] = count
    return sizes


def parse_dataset(text: str, source: str = "<string>") -> Dataset:
    """Parse a data document; DataFormatError carries the source name."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{source}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise DataFormatError(f"{source}: the top level must be an object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise DataFormatError(
            f"{source}: unknown keys {sorted(unknown)}; allowed keys are "
            f"{sorted(_ALLOWED_KEYS)}"
        )
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise DataFormatError(f'{source}: "name" must be a string')
    if "counts" not in doc and "spectrum" not in doc:
        raise DataFormatError(f'{source}: needs "counts" or "spectrum"')
    try:
        from_counts = _counts_from_list(doc["counts"]) if "counts" in doc else None
        from_spectrum = (
            _counts_from_spectrum(doc["spectrum"]) if "spectrum" in doc else None
        )
    except DataFormatError as exc:
        raise DataFormatError(f"{source}: {exc}") from None
    if from_counts is not None and from_spectrum is not None:
        if from_counts != from_spectrum:
            raise DataFormatError(
                f"{source}: counts and spectrum describe different partitions"
            )
    sizes = from_counts if from_counts is not None else from_spectrum
    return Dataset(partition=AllelicPartition.from_dict(dict(sizes)), name=name)


def bundled_names() -> list[str]:
    """Names of the data files shipped inside the package."""
    root = resources.files("coalineage").joinpath("data")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_dataset(source: str | Path) -> Dataset:
    """Load a data file by path, or a bundled dataset by name.

    An existing file path wins; otherwise the basename (with any
    directory prefix and .json suffix stripped) is looked up among the
    bundled datasets, so "singh1976" and "examples/singh1976" both
    resolve to the shipped copy.
    """
    path = Path(source)
    if path.is_file():
        return parse_dataset(path.read_text(), source=str(path))
    bare = path.name
    if bare.endswith(".json"):
        bare = bare[: -len(".json")]
    resource = resources.files("coalineage").joinpath("data", f"{bare}.json")
    if bare and resource.is_file():
        return parse_dataset(resource.read_text(), source=f"bundled:{bare}")
    raise DataFormatError(
        f"{source}: no such file, and no bundled dataset named {bare!r} "
        f"(bundled: {', '.join(bundled_names())})"
    )
