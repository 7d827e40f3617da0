"""Dataset and model text formats, synthetic data with a planted teacher,
and split utilities.

Dataset format (UTF-8, line oriented, '\\n' terminated, '#' starts a comment):

    @schema I_1 I_2 ... I_m
    <label> <view>:<position>:<value> ...

Views and positions are 1-based; a (view, position) pair may appear at most
once per line; explicit zero values are dropped on parse. Labels are
arbitrary reals (classification losses expect +/-1). `write_dataset` emits
the canonical form: sorted entries and shortest round-trip decimals, so
write -> parse -> write is byte-identical.

Model files open with a ``mvm-model v1 <family>`` header followed by the
schema line and the family's payload, all numbers written with `repr` (exact
float64 round trip). See `serialize_model`.
"""

import math

import numpy as np

from .baselines import LinearModel, MvfmModel
from .errors import DataFormatError, ModelFormatError, SchemaError
from .model import (
    MultiViewInstance,
    MvmModel,
    SparseViewVector,
    ViewSchema,
    pack_instance,
    predict_dataset,
)

MODEL_MAGIC = "mvm-model"
MODEL_VERSION = 1
MODEL_FAMILIES = ("mvm", "linear", "mvfm")


class Dataset:
    """Immutable ordered collection of instances under one schema."""

    __slots__ = ("schema", "instances", "_packed")

    def __init__(self, schema, instances):
        insts = tuple(instances)
        for pos, inst in enumerate(insts):
            try:
                inst.validate(schema)
            except SchemaError as exc:
                raise SchemaError(f"instance {pos}: {exc}") from None
        self.schema = schema
        self.instances = insts
        self._packed = None

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, i):
        return self.instances[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.schema == other.schema and self.instances == other.instances

    def packed(self):
        """Kernel-ready arrays: (indptr, rows, values, view ids, labels)."""
        if self._packed is None:
            n = len(self.instances)
            chunks = [pack_instance(self.schema, inst) for inst in self.instances]
            indptr = np.zeros(n + 1, dtype=np.intp)
            if n:
                indptr[1:] = np.cumsum([c[0].size for c in chunks])
            gidx = np.concatenate([c[0] for c in chunks]) if n else np.empty(0, np.intp)
            vals = np.concatenate([c[1] for c in chunks]) if n else np.empty(0)
            vview = np.concatenate([c[2] for c in chunks]) if n else np.empty(0, np.intp)
            labels = np.array([inst.label for inst in self.instances], dtype=np.float64)
            gidx = gidx.astype(np.intp, copy=False)
            vview = vview.astype(np.intp, copy=False)
            for arr in (indptr, gidx, vals, vview, labels):
                arr.setflags(write=False)
            self._packed = (indptr, gidx, vals, vview, labels)
        return self._packed

    @property
    def labels(self):
        return self.packed()[4]


def parse_dataset(source):
    """Parse the dataset text format from a string or an iterable of lines."""
    lines = source.splitlines() if isinstance(source, str) else source
    schema = None
    dims = None
    instances = []
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if schema is None:
            if tokens[0] != "@schema":
                raise DataFormatError(
                    f"line {lineno}: expected '@schema' header before data"
                )
            if len(tokens) < 2:
                raise DataFormatError(
                    f"line {lineno}: '@schema' needs at least one view size"
                )
            try:
                dims = tuple(int(t) for t in tokens[1:])
            except ValueError:
                raise DataFormatError(f"line {lineno}: malformed view size") from None
            try:
                schema = ViewSchema(dims)
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
            continue
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataFormatError(
                f"line {lineno}: malformed label {tokens[0]!r}"
            ) from None
        if not math.isfinite(label):
            raise DataFormatError(f"line {lineno}: non-finite label")
        per_view = [[] for _ in dims]
        seen = set()
        for token in tokens[1:]:
            parts = token.split(":")
            if len(parts) != 3:
                raise DataFormatError(
                    f"line {lineno}: expected view:position:value, got {token!r}"
                )
            try:
                view = int(parts[0])
                position = int(parts[1])
                value = float(parts[2])
            except ValueError:
                raise DataFormatError(
                    f"line {lineno}: malformed entry {token!r}"
                ) from None
            if not 1 <= view <= len(dims):
                raise DataFormatError(
                    f"line {lineno}: view {view} out of range 1..{len(dims)}"
                )
            if not 1 <= position <= dims[view - 1]:
                raise DataFormatError(
                    f"line {lineno}: position {position} out of range "
                    f"1..{dims[view - 1]} for view {view}"
                )
            if not math.isfinite(value):
                raise DataFormatError(f"line {lineno}: non-finite value in {token!r}")
            if (view, position) in seen:
                raise DataFormatError(
                    f"line {lineno}: duplicate entry {view}:{position}"
                )
            seen.add((view, position))
            per_view[view - 1].append((position, value))
        instances.append(
            MultiViewInstance(
                [SparseViewVector.from_entries(e) for e in per_view], label
            )
        )
    if schema is None:
        raise DataFormatError("missing '@schema' header")
    return Dataset(schema, instances)


def write_dataset(dataset):
    """Canonical text form; `parse_dataset` inverts it exactly."""
    out = ["@schema " + " ".join(str(d) for d in dataset.schema.dims)]
    for inst in dataset:
        parts = [repr(float(inst.label))]
        for v, view in enumerate(inst.views, start=1):
            for i, x in zip(view.indices, view.values):
                parts.append(f"{v}:{int(i)}:{float(x)!r}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def load_dataset(path):
    """Read and parse a dataset file; errors carry the path and line number."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        return parse_dataset(text)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def save_dataset(path, dataset):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_dataset(dataset))


def synth_generate(schema, k_teacher, n, density, noise, seed):
    """Dataset whose labels come from a random planted full-order teacher.

    Teacher factors draw from N(0, 1); each instance keeps every feature with
    probability ``density`` and draws kept values from N(0, 1). Teacher
    scores are centered at their median -- folded into the returned teacher
    as one extra bias-only factor, so its raw scores reproduce the labels
    exactly -- and labels take the centered score's sign (ties to +1),
    flipped with probability ``noise``. Deterministic under ``seed``.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if not 0.0 <= noise < 0.5:
        raise ValueError(f"noise must be in [0, 0.5), got {noise}")
    if int(k_teacher) < 1:
        raise ValueError("k_teacher must be >= 1")
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    raw = MvmModel(
        schema,
        k_teacher,
        augment=True,
        weights=rng.normal(0.0, 1.0, size=(schema.total_rows, k_teacher)),
    )
    all_views = []
    for _ in range(int(n)):
        views = []
        for dim in schema.dims:
            mask = rng.random(dim) < density
            idx = np.flatnonzero(mask) + 1
            views.append(SparseViewVector(idx, rng.normal(0.0, 1.0, idx.size)))
        all_views.append(views)
    probe = Dataset(schema, [MultiViewInstance(vs, 0.0) for vs in all_views])
    scores = predict_dataset(raw, probe)
    median = float(np.median(scores))
    labels = np.where(scores - median >= 0.0, 1.0, -1.0)
    flips = rng.random(int(n)) < noise
    labels[flips] *= -1.0
    # One extra factor column touching only bias rows adds exactly -median to
    # every score and nothing to any other interaction weight.
    extra = np.zeros((schema.total_rows, 1))
    extra[schema.bias_rows[0], 0] = -median
    extra[schema.bias_rows[1:], 0] = 1.0
    teacher = MvmModel(
        schema,
        k_teacher + 1,
        augment=True,
        weights=np.concatenate([raw.weights, extra], axis=1),
    )
    dataset = Dataset(
        schema,
        [MultiViewInstance(vs, lab) for vs, lab in zip(all_views, labels)],
    )
    return dataset, teacher


def split(dataset, fraction, seed):
    """Disjoint, exhaustive (train, holdout) split by a seeded permutation;
    the first part receives floor(n * fraction) instances."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(dataset)
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(n * fraction)
    first = Dataset(dataset.schema, [dataset.instances[j] for j in perm[:cut]])
    second = Dataset(dataset.schema, [dataset.instances[j] for j in perm[cut:]])
    return first, second


def _float_line(values):
    return " ".join(repr(float(x)) for x in values)


def serialize_model(model):
    """Text form of any model family; `deserialize_model` inverts it exactly
    (byte-identical re-serialization, bit-identical predictions)."""
    lines = [
        f"{MODEL_MAGIC} v{MODEL_VERSION} {model.family}",
        "schema " + " ".join(str(d) for d in model.schema.dims),
    ]
    if model.family == "mvm":
        lines.append(f"k {model.k}")
        lines.append(f"augment {int(model.augment)}")
        for row in model.weights:
            lines.append(_float_line(row))
    elif model.family == "linear":
        lines.append(f"w0 {repr(float(model.w0))}")
        for block in model.view_weights:
            lines.append(_float_line(block))
    elif model.family == "mvfm":
        lines.append(f"k {model.k}")
        lines.append(f"w0 {repr(float(model.w0))}")
        pos = 0
        for dim in model.schema.dims:
            lines.append(_float_line(model.first_order[pos : pos + dim]))
            pos += dim
        for row in model.latent:
            lines.append(_float_line(row))
    else:
        raise ModelFormatError(f"unknown model family {model.family!r}")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"unexpected end of file, expected {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def next_floats(self, count, what):
        line = self.next(what)
        tokens = line.split()
        if len(tokens) != count:
            raise ModelFormatError(
                f"line {self.pos}: expected {count} values for {what}, "
                f"got {len(tokens)}"
            )
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ModelFormatError(f"line {self.pos}: malformed number") from None
        if not all(math.isfinite(v) for v in values):
            raise ModelFormatError(f"line {self.pos}: non-finite value")
        return values

    def next_field(self, name):
        line = self.next(f"'{name}' line")
        tokens = line.split()
        if len(tokens) != 2 or tokens[0] != name:
            raise ModelFormatError(f"line {self.pos}: expected '{name} <value>'")
        return tokens[1]

    def finish(self):
        while self.pos < len(self.lines):
            if self.lines[self.pos].strip():
                raise ModelFormatError(f"line {self.pos + 1}: trailing content")
            self.pos += 1


def deserialize_model(text):
    """Parse a model file; returns an MvmModel, LinearModel, or MvfmModel."""
    reader = _Reader(text)
    header = reader.next("header").split()
    if len(header) != 3 or header[0] != MODEL_MAGIC:
        raise ModelFormatError("not a model file (bad header)")
    if header[1] != f"v{MODEL_VERSION}":
        raise ModelFormatError(f"unsupported model file version {header[1]!r}")
    family = header[2]
    if family not in MODEL_FAMILIES:
        raise ModelFormatError(f"unknown model family {family!r}")
    schema_tokens = reader.next("schema line").split()
    if not schema_tokens or schema_tokens[0] != "schema":
        raise ModelFormatError("line 2: expected 'schema I_1 ... I_m'")
    try:
        schema = ViewSchema(tuple(int(t) for t in schema_tokens[1:]))
    except ValueError as exc:
        raise ModelFormatError(f"line 2: {exc}") from None

    def read_int_field(name):
        token = reader.next_field(name)
        try:
            return int(token)
        except ValueError:
            raise ModelFormatError(f"malformed '{name}' value {token!r}") from None

    def read_float_field(name):
        token = reader.next_field(name)
        try:
            value = float(token)
        except ValueError:
            raise ModelFormatError(f"malformed '{name}' value {token!r}") from None
        if not math.isfinite(value):
            raise ModelFormatError(f"non-finite '{name}' value")
        return value

    if family == "mvm":
        k = read_int_field("k")
        augment = read_int_field("augment")
        if augment not in (0, 1):
            raise ModelFormatError("'augment' must be 0 or 1")
        if k < 1:
            raise ModelFormatError("'k' must be >= 1")
        rows = [reader.next_floats(k, "weight row") for _ in range(schema.total_rows)]
        reader.finish()
        return MvmModel(schema, k, augment=bool(augment), weights=np.asarray(rows))
    if family == "linear":
        w0 = read_float_field("w0")
        blocks = [
            reader.next_floats(dim, f"view {v + 1} weights")
            for v, dim in enumerate(schema.dims)
        ]
        reader.finish()
        return LinearModel(schema, w0=w0, weights=np.concatenate(blocks))
    k = read_int_field("k")
    if k < 1:
        raise ModelFormatError("'k' must be >= 1")
    w0 = read_float_field("w0")
    blocks = [
        reader.next_floats(dim, f"view {v + 1} first-order weights")
        for v, dim in enumerate(schema.dims)
    ]
    latent = [reader.next_floats(k, "latent row") for _ in range(schema.d)]
    reader.finish()
    return MvfmModel(
        schema,
        k,
        w0=w0,
        first_order=np.concatenate(blocks),
        latent=np.asarray(latent),
    )


def load_model(path):
    """Read and parse a model file; errors carry the path."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        return deserialize_model(text)
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None


def save_model(path, model):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_model(model))
