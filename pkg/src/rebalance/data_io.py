"""KEEL dataset parsing, class partitioning and stratified fold planning."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

MAJORITY = 0
MINORITY = 1

BUNDLED_DATASETS = (
    "abalone9-18",
    "cleveland-0_vs_4",
    "glass-0-1-4-6_vs_2",
    "haberman",
    "pima",
    "poker-8_vs_6",
    "poker-9_vs_7",
    "vehicle3",
    "winequality-red-8_vs_6-7",
    "yeast-0-5-6-7-9_vs_4",
)

_MISSING_TOKENS = {"?", "<null>", ""}


class DatasetError(ValueError):
    """Base class for dataset problems; carries an optional 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedHeader(DatasetError):
    pass


class NonBinaryClass(DatasetError):
    pass


class RaggedRow(DatasetError):
    pass


class UnknownNominalValue(DatasetError):
    pass


class MissingValue(DatasetError):
    pass


class BadFoldCount(ValueError):
    pass


class EmptySelection(ValueError):
    pass


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str  # "numeric" | "nominal"
    nominal_values: tuple[str, ...] = ()
    range_hint: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("attribute name must be nonempty")
        if self.kind not in ("numeric", "nominal"):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "nominal" and len(self.nominal_values) < 2:
            raise ValueError(f"nominal attribute {self.name!r} needs >= 2 values")

    @property
    def n_categories(self) -> int:
        return len(self.nominal_values) if self.kind == "nominal" else 0


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """Feature matrix plus majority/minority tags.

    ``labels`` holds MAJORITY (0) or MINORITY (1) per row; ``class_names``
    maps those tags back to the original label text.  Nominal features are
    stored as category indices.
    """

    attributes: tuple[AttributeSpec, ...]
    rows: np.ndarray
    labels: np.ndarray
    class_names: dict[int, str]
    relation: str = "dataset"
    class_attribute: str = "Class"
    class_order: tuple[str, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int8, copy=True)
        if rows.ndim != 2 or rows.shape[1] != len(self.attributes):
            raise ValueError("rows must be a 2-D matrix with one column per attribute")
        if rows.shape[0] != labels.shape[0]:
            raise ValueError("row count and label count differ")
        if not np.all(np.isfinite(rows)):
            raise ValueError("feature values must be finite")
        if not (np.any(labels == MAJORITY) and np.any(labels == MINORITY)):
            raise ValueError("both classes need at least one row")
        if set(np.unique(labels).tolist()) - {MAJORITY, MINORITY}:
            raise ValueError("labels must be MAJORITY or MINORITY")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if not self.class_order:
            object.__setattr__(
                self, "class_order", (self.class_names[MAJORITY], self.class_names[MINORITY])
            )

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented
        return (
            self.attributes == other.attributes
            and self.class_names == other.class_names
            and self.relation == other.relation
            and self.class_attribute == other.class_attribute
            and self.class_order == other.class_order
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    @property
    def ncat(self) -> np.ndarray:
        """Per-feature category count (0 for numeric columns)."""
        return np.array([a.n_categories for a in self.attributes], dtype=np.int64)

    def take(self, idx) -> BinaryDataset:
        idx = np.asarray(idx, dtype=np.int64)
        return BinaryDataset(
            attributes=self.attributes,
            rows=self.rows[idx],
            labels=self.labels[idx],
            class_names=self.class_names,
            relation=self.relation,
            class_attribute=self.class_attribute,
            class_order=self.class_order,
            name=self.name,
        )


@dataclass(frozen=True)
class ClassPartition:
    majority_idx: np.ndarray
    minority_idx: np.ndarray

    @property
    def n_majority(self) -> int:
        return int(self.majority_idx.size)

    @property
    def n_minority(self) -> int:
        return int(self.minority_idx.size)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    fold_assignments: np.ndarray
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (train_idx, test_idx) for one fold."""
        test = self.fold_assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def __iter__(self):
        for f in range(self.k):
            yield self.split(f)


# --------------------------------------------------------------------------
# parsing

_RANGE_RE = re.compile(r"\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]")


def _parse_attribute(line: str, lineno: int) -> AttributeSpec:
    body = line[len("@attribute"):].strip()
    if body.startswith("'"):
        close = body.find("'", 1)
        if close < 0:
            raise MalformedHeader(f"unterminated quoted name in {line!r}", lineno)
        name, rest = body[1:close], body[close + 1:].strip()
    else:
        m = re.match(r"[^\s{\[]+", body)
        if not m:
            raise MalformedHeader(f"cannot parse attribute declaration {line!r}", lineno)
        name, rest = m.group(0), body[m.end():].strip()
    if not rest:
        raise MalformedHeader(f"attribute {name!r} has no type", lineno)
    if rest.startswith("{"):
        if not rest.endswith("}"):
            raise MalformedHeader(f"unterminated nominal list for {name!r}", lineno)
        values = tuple(v.strip() for v in rest[1:-1].split(",") if v.strip())
        if len(values) != len(set(values)):
            raise MalformedHeader(f"duplicate nominal values for {name!r}", lineno)
        if len(values) < 2:
            raise MalformedHeader(f"nominal attribute {name!r} needs >= 2 values", lineno)
        return AttributeSpec(name, "nominal", values)
    kind_word = re.match(r"[A-Za-z]+", rest)
    if not kind_word or kind_word.group(0).lower() not in ("real", "integer", "numeric"):
        raise MalformedHeader(f"unsupported attribute type in {line!r}", lineno)
    hint = None
    rm = _RANGE_RE.search(rest)
    if rm:
        try:
            hint = (float(rm.group(1)), float(rm.group(2)))
        except ValueError:
            raise MalformedHeader(f"bad range for {name!r}", lineno) from None
    return AttributeSpec(name, "numeric", (), hint)


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_keel(text: str | io.TextIOBase, name: str = "") -> BinaryDataset:
    """Parse a KEEL ``.dat`` file into a BinaryDataset.

    The class column is the ``@outputs`` attribute when declared, otherwise
    the last attribute.  The class with fewer rows becomes the minority; on a
    tie the first-declared label is the majority.
    """
    if not isinstance(text, str):
        text = text.read()
    relation = None
    attrs: list[tuple[AttributeSpec, int]] = []
    inputs = outputs = None
    data_line = None
    lines = text.splitlines()
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if not low.startswith("@"):
            raise MalformedHeader(f"unexpected content before @data: {line!r}", i)
        if low.startswith("@relation"):
            if relation is not None:
                raise MalformedHeader("duplicate @relation", i)
            relation = line[len("@relation"):].strip() or "dataset"
        elif low.startswith("@attribute"):
            spec = _parse_attribute(line, i)
            if any(a.name == spec.name for a, _ in attrs):
                raise MalformedHeader(f"duplicate attribute {spec.name!r}", i)
            attrs.append((spec, i))
        elif low.startswith("@inputs"):
            if inputs is not None:
                raise MalformedHeader("duplicate @inputs", i)
            inputs = _split_list(line[len("@inputs"):])
        elif low.startswith("@outputs") or low.startswith("@output"):
            if outputs is not None:
                raise MalformedHeader("duplicate @outputs", i)
            outputs = _split_list(line.split(None, 1)[1] if " " in line else "")
        elif low.startswith("@data"):
            data_line = i
            break
        else:
            raise MalformedHeader(f"unknown directive {line.split()[0]!r}", i)
    if relation is None:
        raise MalformedHeader("missing @relation")
    if not attrs:
        raise MalformedHeader("no @attribute declarations")
    if data_line is None:
        raise MalformedHeader("missing @data")

    names = [a.name for a, _ in attrs]
    if outputs:
        if len(outputs) != 1 or outputs[0] not in names:
            raise MalformedHeader(f"@outputs must name exactly one declared attribute, got {outputs}")
        class_pos = names.index(outputs[0])
    else:
        class_pos = len(attrs) - 1
    class_spec, class_line = attrs[class_pos]
    if inputs is not None:
        unknown = [n for n in inputs if n not in names]
        if unknown:
            raise MalformedHeader(f"@inputs names undeclared attributes {unknown}")
    feature_pos = [j for j in range(len(attrs)) if j != class_pos]
    if inputs is not None:
        feature_pos = [names.index(n) for n in inputs if names.index(n) != class_pos]

    records: list[tuple[list[str], int]] = []
    for i in range(data_line, len(lines)):
        line = lines[i].strip()
        if not line or line.startswith("%"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(attrs):
            raise RaggedRow(f"expected {len(attrs)} values, found {len(cells)}", i + 1)
        records.append((cells, i + 1))
    return _build_dataset(
        records,
        [attrs[j][0] for j in feature_pos],
        feature_pos,
        class_spec,
        class_pos,
        relation,
        name or relation,
    )


def _build_dataset(records, feature_specs, feature_pos, class_spec, class_pos, relation, name):
    raw_labels = [cells[class_pos] for cells, _ in records]
    if class_spec.kind == "nominal":
        declared = list(class_spec.nominal_values)
        for lab, (_, ln) in zip(raw_labels, records):
            if lab in _MISSING_TOKENS:
                raise MissingValue("missing class label", ln)
            if lab not in declared:
                raise UnknownNominalValue(f"class label {lab!r} not declared", ln)
        present = [v for v in declared if v in set(raw_labels)]
    else:
        present = list(dict.fromkeys(raw_labels))
    if len(present) != 2 or (class_spec.kind == "nominal" and len(class_spec.nominal_values) != 2):
        distinct = sorted(set(raw_labels))
        raise NonBinaryClass(f"need exactly two class labels, found {distinct}")
    counts = {v: raw_labels.count(v) for v in present}
    first, second = present
    if counts[second] > counts[first]:
        major, minor = second, first
    else:
        major, minor = first, second

    rows = np.empty((len(records), len(feature_specs)), dtype=np.float64)
    for r, (cells, ln) in enumerate(records):
        for c, (spec, pos) in enumerate(zip(feature_specs, feature_pos)):
            tok = cells[pos]
            if tok in _MISSING_TOKENS:
                raise MissingValue(f"missing value for {spec.name!r}", ln)
            if spec.kind == "nominal":
                try:
                    rows[r, c] = spec.nominal_values.index(tok)
                except ValueError:
                    raise UnknownNominalValue(
                        f"value {tok!r} not declared for {spec.name!r}", ln
                    ) from None
            else:
                try:
                    rows[r, c] = float(tok)
                except ValueError:
                    raise DatasetError(f"non-numeric value {tok!r} for {spec.name!r}", ln) from None
                if not np.isfinite(rows[r, c]):
                    raise DatasetError(f"non-finite value {tok!r} for {spec.name!r}", ln)
    labels = np.array([MINORITY if v == minor else MAJORITY for v in raw_labels], dtype=np.int8)
    class_order = tuple(class_spec.nominal_values) if class_spec.kind == "nominal" else (first, second)
    return BinaryDataset(
        attributes=tuple(feature_specs),
        rows=rows,
        labels=labels,
        class_names={MAJORITY: major, MINORITY: minor},
        relation=relation,
        class_attribute=class_spec.name,
        class_order=class_order,
        name=name,
    )


def parse_csv(text: str | io.TextIOBase, class_col: int = -1, name: str = "dataset") -> BinaryDataset:
    """Parse a headerless CSV with numeric features and one class column."""
    if not isinstance(text, str):
        text = text.read()
    records = []
    width = None
    for i, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in cells]
        if not any(cells):
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRow(f"expected {width} values, found {len(cells)}", i)
        records.append((cells, i))
    if not records:
        raise MalformedHeader("empty CSV")
    pos = class_col % width
    if width < 2:
        raise MalformedHeader("CSV needs at least one feature column and a class column")
    feature_pos = [j for j in range(width) if j != pos]
    feature_specs = [AttributeSpec(f"x{j}", "numeric") for j in range(len(feature_pos))]
    class_values = tuple(dict.fromkeys(cells[pos] for cells, _ in records))
    if len(class_values) != 2:
        raise NonBinaryClass(f"need exactly two class labels, found {sorted(set(class_values))}")
    class_spec = AttributeSpec("Class", "nominal", class_values)
    return _build_dataset(records, feature_specs, feature_pos, class_spec, pos, name, name)


def load_dataset(path: str | Path, class_col: int | None = None) -> BinaryDataset:
    """Load a KEEL file, or a headerless CSV when ``class_col`` is given."""
    path = Path(path)
    text = path.read_text()
    if class_col is not None:
        return parse_csv(text, class_col=class_col, name=path.stem)
    return parse_keel(text, name=path.stem)


def bundled_path(name: str) -> Path:
    """Path of one of the ten bundled KEEL files."""
    ref = resources.files("rebalance") / "data" / f"{name}.dat"
    path = Path(str(ref))
    if not path.exists():
        raise FileNotFoundError(f"no bundled dataset named {name!r}")
    return path


def load_bundled(name: str) -> BinaryDataset:
    return load_dataset(bundled_path(name))


def _fmt(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return f"{x:.1f}"
    return repr(float(x))


def serialize_keel(ds: BinaryDataset) -> str:
    """Write ``ds`` back out in KEEL format (features first, class last)."""
    out = [f"@relation {ds.relation}"]
    for a in ds.attributes:
        if a.kind == "nominal":
            out.append(f"@attribute {a.name} {{{', '.join(a.nominal_values)}}}")
        elif a.range_hint is not None:
            out.append(f"@attribute {a.name} real [{_fmt(a.range_hint[0])}, {_fmt(a.range_hint[1])}]")
        else:
            out.append(f"@attribute {a.name} real")
    out.append(f"@attribute {ds.class_attribute} {{{', '.join(ds.class_order)}}}")
    out.append(f"@inputs {', '.join(a.name for a in ds.attributes)}")
    out.append(f"@outputs {ds.class_attribute}")
    out.append("@data")
    for row, lab in zip(ds.rows, ds.labels):
        cells = [
            a.nominal_values[int(v)] if a.kind == "nominal" else _fmt(v)
            for a, v in zip(ds.attributes, row)
        ]
        cells.append(ds.class_names[int(lab)])
        out.append(", ".join(cells))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# partitioning and folds

def partition_classes(ds: BinaryDataset) -> ClassPartition:
    return ClassPartition(
        majority_idx=np.flatnonzero(ds.labels == MAJORITY),
        minority_idx=np.flatnonzero(ds.labels == MINORITY),
    )


def imbalance_ratio(ds: BinaryDataset) -> float:
    n_min = int(np.count_nonzero(ds.labels == MINORITY))
    return (len(ds) - n_min) / n_min


def stratified_folds_from_labels(labels: np.ndarray, k: int, seed: int) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal rows round-robin into ``k`` folds.

    Dealing continues across classes (minority picks up where the majority
    left off) so total fold sizes differ by at most one.
    """
    labels = np.asarray(labels)
    n = labels.size
    if k < 2 or k > n:
        raise BadFoldCount(f"fold count {k} outside [2, {n}]")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in (MAJORITY, MINORITY):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    assign.setflags(write=False)
    return FoldPlan(k=k, fold_assignments=assign, seed=seed)


def stratified_folds(ds: BinaryDataset, k: int = 10, seed: int = 0) -> FoldPlan:
    return stratified_folds_from_labels(ds.labels, k, seed)


def assemble_subset(ds: BinaryDataset, part: ClassPartition, mask) -> BinaryDataset:
    """All minority rows plus the majority rows whose mask bit is set, in original order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (part.n_majority,):
        raise ValueError(f"mask length {mask.size} != majority count {part.n_majority}")
    if not mask.any():
        raise EmptySelection("selection mask keeps no majority rows")
    keep = np.sort(np.concatenate([part.minority_idx, part.majority_idx[mask]]))
    return ds.take(keep)
