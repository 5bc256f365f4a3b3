"""
Loaders for the UCI SPECT Heart, Primary Tumor and Congressional Voting
datasets, with one-hot expansion of categorical attributes.

A schema file lists one ``name = kind`` line per CSV field, in file order::

    @missing = ?
    party = label                  # dropped
    crime = categorical y n        # one column per category
    bone = boolean 1 2             # <one-token> <zero-token>

A missing token yields zeros in every column of that attribute.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .boolmat import BooleanMatrix

PathLike = Union[str, Path]

# expected feature-matrix shapes after label removal and expansion
DATASET_SHAPES = {"spect": (267, 22), "tumor": (339, 24), "voting": (435, 32)}
DATASET_FILES = {
    "spect": ("SPECT.train", "SPECT.test"),
    "tumor": ("primary-tumor.data",),
    "voting": ("house-votes-84.data",),
}


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "boolean", "categorical" or "label"
    tokens: tuple = ()  # categories, or (one_token, zero_token) for booleans

    @property
    def width(self) -> int:
        return {"label": 0, "boolean": 1}.get(self.kind, len(self.tokens))


@dataclass(frozen=True)
class CategoricalSchema:
    columns: tuple
    missing_token: str = "?"

    def __post_init__(self):
        for col in self.columns:
            if col.kind == "categorical":
                if not col.tokens:
                    raise ValueError(f"categorical column {col.name} has no categories")
                if len(set(col.tokens)) != len(col.tokens):
                    raise ValueError(f"categorical column {col.name} repeats a category")
            elif col.kind == "boolean":
                if len(col.tokens) != 2 or col.tokens[0] == col.tokens[1]:
                    raise ValueError(f"boolean column {col.name} needs distinct one/zero tokens")
            elif col.kind != "label":
                raise ValueError(f"unknown column kind {col.kind!r}")

    @property
    def width(self) -> int:
        return sum(c.width for c in self.columns)

    def feature_names(self) -> list:
        names = []
        for col in self.columns:
            if col.kind == "boolean":
                names.append(col.name)
            elif col.kind == "categorical":
                names.extend(f"{col.name}={t}" for t in col.tokens)
        return names

    @classmethod
    def parse(cls, text: str) -> "CategoricalSchema":
        missing = "?"
        columns = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"schema line {lineno}: expected 'name = kind ...'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "@missing":
                missing = value
                continue
            parts = value.split()
            if not parts:
                raise ValueError(f"schema line {lineno}: missing kind for {key}")
            columns.append(Column(key, parts[0], tuple(parts[1:])))
        return cls(tuple(columns), missing)

    @classmethod
    def read(cls, path: PathLike) -> "CategoricalSchema":
        return cls.parse(Path(path).read_text())

    @classmethod
    def builtin(cls, dataset: str) -> "CategoricalSchema":
        text = resources.files("boolfact").joinpath("schemas", f"{dataset}.schema").read_text()
        return cls.parse(text)

    @classmethod
    def all_boolean(cls, width: int) -> "CategoricalSchema":
        return cls(tuple(Column(f"b{j + 1}", "boolean", ("1", "0")) for j in range(width)))


def expand(table: Sequence[Sequence[str]], schema: CategoricalSchema) -> BooleanMatrix:
    """
    One-hot expand a table of text tokens.

    :param table:   rows of tokens, one token per schema column
    :param schema:  column kinds and categories

    :return:        Boolean matrix with ``schema.width`` columns; label columns dropped
    """
    out = np.zeros((len(table), schema.width), dtype=np.uint8)
    for r, row in enumerate(table):
        if len(row) != len(schema.columns):
            raise IngestError(f"row {r + 1}: expected {len(schema.columns)} fields, found {len(row)}")
        pos = 0
        for col, token in zip(schema.columns, row):
            token = token.strip()
            if col.kind == "label":
                continue
            if token != schema.missing_token:
                if col.kind == "boolean":
                    if token == col.tokens[0]:
                        out[r, pos] = 1
                    elif token != col.tokens[1]:
                        raise IngestError(f"row {r + 1}, column {col.name}: unexpected token {token!r}")
                else:
                    try:
                        out[r, pos + col.tokens.index(token)] = 1
                    except ValueError:
                        raise IngestError(
                            f"row {r + 1}, column {col.name}: unexpected token {token!r}"
                        ) from None
            pos += col.width
    if len(table) == 0:
        raise IngestError("no data rows")
    return BooleanMatrix(out)


def read_table(path: PathLike) -> list:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row and any(tok.strip() for tok in row)]


def _check_shape(X: BooleanMatrix, dataset: str) -> BooleanMatrix:
    expected = DATASET_SHAPES[dataset]
    if X.shape != expected:
        raise IngestError(f"{dataset}: expected a {expected[0]}x{expected[1]} matrix, found {X.shape[0]}x{X.shape[1]}")
    return X


def _paths(files: Union[PathLike, Iterable[PathLike]]) -> list:
    if isinstance(files, (str, Path)):
        return [Path(files)]
    return [Path(f) for f in files]


def load_spect(files: Union[PathLike, Iterable[PathLike]]) -> BooleanMatrix:
    """SPECT Heart features; pass SPECT.train and SPECT.test together for the 267 patients."""
    schema = CategoricalSchema.builtin("spect")
    rows = [row for p in _paths(files) for row in read_table(p)]
    return _check_shape(expand(rows, schema), "spect")


def load_tumor(file: PathLike, schema: Optional[CategoricalSchema] = None) -> BooleanMatrix:
    """Primary Tumor features with the shipped (or a supplied) expansion schema."""
    schema = schema or CategoricalSchema.builtin("tumor")
    return _check_shape(expand(read_table(file), schema), "tumor")


def load_voting(file: PathLike) -> BooleanMatrix:
    """Congressional Voting Records: each of the 16 votes becomes a yes and a no column."""
    return _check_shape(expand(read_table(file), CategoricalSchema.builtin("voting")), "voting")


def find_dataset(name: str, data_dir: PathLike) -> Optional[list]:
    """Paths of the raw files for ``name`` under ``data_dir``, or None if any is missing."""
    paths = [Path(data_dir) / f for f in DATASET_FILES[name]]
    return paths if all(p.is_file() for p in paths) else None


def load_dataset(name: str, data_dir: PathLike) -> BooleanMatrix:
    if name not in DATASET_FILES:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(DATASET_FILES)}")
    paths = find_dataset(name, data_dir)
    if paths is None:
        missing = ", ".join(DATASET_FILES[name])
        raise FileNotFoundError(f"{name}: expected {missing} in {data_dir}")
    if name == "spect":
        return load_spect(paths)
    if name == "tumor":
        return load_tumor(paths[0])
    return load_voting(paths[0])
