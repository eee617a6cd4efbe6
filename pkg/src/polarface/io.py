"""Image, manifest, feature, model and report files.

Everything here is plain text except PGM payloads. Reals are written with
17 significant digits so every file round-trips bit-identically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import FormatError, ManifestError

VARIANTS = ("fbt_global", "fbt_local", "pft_global", "pft_local")

FEATURE_MAGIC = "polarface-features"
MODEL_MAGIC = "polarface-model"
FORMAT_VERSION = "v1"


def _real(x) -> str:
    return format(float(x), ".17g")


@dataclass
class GrayImage:
    """Real-valued raster; ``mask`` marks valid pixels when present."""

    pixels: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {self.pixels.shape}")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.pixels.shape:
                raise ValueError(
                    f"mask shape {self.mask.shape} differs from pixels {self.pixels.shape}"
                )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def valid(self) -> np.ndarray:
        """Boolean validity mask; all true when no mask is set."""
        if self.mask is None:
            return np.ones(self.pixels.shape, dtype=bool)
        return self.mask


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    subject_id: str
    left_eye: tuple
    right_eye: tuple


@dataclass
class FeatureRecord:
    image_id: str
    subject_id: str
    variant: str
    vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        self.vector = np.asarray(self.vector, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, FeatureRecord):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.subject_id == other.subject_id
            and self.variant == other.variant
            and np.array_equal(self.vector, other.vector)
        )


# -- PGM ---------------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise FormatError("unexpected end of PGM header", offset=pos)
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def _header_int(token, start, what):
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"non-integer PGM {what} {token!r}", offset=start) from None
    if value <= 0:
        raise FormatError(f"PGM {what} must be positive, got {value}", offset=start)
    return value


def parse_pgm(data: bytes) -> GrayImage:
    """Decode P5 (binary) or P2 (ASCII) PGM bytes into a [0, 1] image."""
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"unsupported PGM magic {magic!r}", offset=0)
    tokens, pos = _pgm_tokens(data, 3, 2)
    width, height, maxval = (
        _header_int(tok, start, what)
        for (tok, start), what in zip(tokens, ("width", "height", "maxval"))
    )
    if maxval > 65535:
        raise FormatError(f"PGM maxval {maxval} exceeds 65535", offset=tokens[2][1])
    count = width * height

    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise FormatError("missing whitespace after PGM maxval", offset=pos)
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        payload = data[pos : pos + need]
        if len(payload) < need:
            raise FormatError(
                f"truncated PGM payload: expected {need} bytes, found {len(payload)}",
                offset=pos + len(payload),
            )
        values = np.frombuffer(payload, dtype=dtype).astype(float)
    else:
        body = data[pos:]
        parts = body.split()
        if len(parts) < count:
            raise FormatError(
                f"truncated PGM payload: expected {count} samples, found {len(parts)}",
                offset=len(data),
            )
        try:
            values = np.array([int(p) for p in parts[:count]], dtype=float)
        except ValueError:
            raise FormatError("non-integer sample in ASCII PGM", offset=pos) from None
    if values.size and values.max() > maxval:
        raise FormatError(f"PGM sample exceeds maxval {maxval}", offset=pos)
    return GrayImage(values.reshape(height, width) / maxval)


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return parse_pgm(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def encode_pgm(image, maxval: int = 255, binary: bool = True) -> bytes:
    """Encode an image (values clipped to [0, 1]) as PGM bytes."""
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, float)
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in 1..65535")
    h, w = pixels.shape
    levels = np.rint(np.clip(pixels, 0.0, 1.0) * maxval).astype(np.int64)
    if binary:
        header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
        dtype = ">u2" if maxval > 255 else "u1"
        return header + levels.astype(dtype).tobytes()
    lines = [f"P2\n{w} {h}\n{maxval}"]
    lines.extend(" ".join(str(v) for v in row) for row in levels)
    return ("\n".join(lines) + "\n").encode("ascii")


def save_pgm(image, path, maxval: int = 255, binary: bool = True) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image, maxval=maxval, binary=binary))


# -- manifests ---------------------------------------------------------------

def parse_manifest_lines(lines: Iterable[str]) -> list[ManifestEntry]:
    entries = []
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 6:
            raise ManifestError(
                f"expected 6 fields (image_path,subject_id,lx,ly,rx,ry), got {len(fields)}",
                line=lineno,
            )
        path, subject = fields[0], fields[1]
        if not path or not subject:
            raise ManifestError("empty image path or subject id", line=lineno)
        try:
            lx, ly, rx, ry = (float(v) for v in fields[2:])
        except ValueError:
            raise ManifestError(f"non-numeric eye coordinate in {line!r}", line=lineno) from None
        if not all(np.isfinite((lx, ly, rx, ry))):
            raise ManifestError("eye coordinates must be finite", line=lineno)
        if not lx < rx:
            raise ManifestError("left eye x must be smaller than right eye x", line=lineno)
        if path in seen:
            raise ManifestError(f"duplicate image path {path!r}", line=lineno)
        seen.add(path)
        entries.append(ManifestEntry(path, subject, (lx, ly), (rx, ry)))
    return entries


def parse_manifest(path) -> list[ManifestEntry]:
    """Read ``image_path,subject_id,lx,ly,rx,ry`` records; '#' starts a comment."""
    with open(path, encoding="utf-8") as fh:
        return parse_manifest_lines(fh)


def write_manifest(entries: Sequence[ManifestEntry], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# image_path,subject_id,lx,ly,rx,ry\n")
        for e in entries:
            coords = ",".join(repr(float(v)) for v in (*e.left_eye, *e.right_eye))
            fh.write(f"{e.image_path},{e.subject_id},{coords}\n")


# -- features ----------------------------------------------------------------

def _check_id(value: str, what: str) -> None:
    if not value or "," in value or "\n" in value:
        raise ValueError(f"{what} {value!r} must be nonempty and free of commas/newlines")


def _feature_header(variant: str, dim: int) -> str:
    return f"{FEATURE_MAGIC} {FORMAT_VERSION} {variant} {dim}\n"


def _feature_lines(records, dim):
    for r in records:
        _check_id(r.image_id, "image id")
        _check_id(r.subject_id, "subject id")
        if r.vector.shape != (dim,):
            raise ValueError(
                f"record {r.image_id!r} has length {r.vector.size}, expected {dim}"
            )
        yield ",".join([r.image_id, r.subject_id, *map(_real, r.vector)]) + "\n"


def _common_variant(records, variant):
    variants = {r.variant for r in records}
    if variant is not None:
        variants.add(variant)
    if len(variants) > 1:
        raise ValueError(f"mixed feature variants {sorted(variants)}")
    if not variants:
        raise ValueError("an empty feature file needs an explicit variant")
    return variants.pop()


def write_features(records: Sequence[FeatureRecord], path, variant=None, dim=None) -> None:
    """Write records sharing one variant under a one-line versioned header."""
    records = list(records)
    variant = _common_variant(records, variant)
    if dim is None:
        dim = records[0].vector.size if records else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_feature_header(variant, dim))
        fh.writelines(_feature_lines(records, dim))


def _read_feature_header(line: str, path):
    parts = line.split()
    if len(parts) != 4 or parts[0] != FEATURE_MAGIC:
        raise FormatError(f"{path}: not a polarface feature file")
    if parts[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported feature format version {parts[1]!r}")
    if parts[2] not in VARIANTS:
        raise FormatError(f"{path}: unknown variant {parts[2]!r}")
    try:
        dim = int(parts[3])
    except ValueError:
        raise FormatError(f"{path}: bad dimension {parts[3]!r}") from None
    return parts[2], dim


def append_features(records: Sequence[FeatureRecord], path) -> None:
    """Append to an existing feature file, or create it."""
    records = list(records)
    if not os.path.exists(path) or os.path.getsize(path) == 0:
        write_features(records, path)
        return
    with open(path, encoding="utf-8") as fh:
        variant, dim = _read_feature_header(fh.readline(), path)
    _common_variant(records, variant)
    if dim == 0 and records:
        raise ValueError(f"{path}: cannot append vectors to a zero-dimension file")
    with open(path, "a", encoding="utf-8") as fh:
        fh.writelines(_feature_lines(records, dim))


def read_features_with_header(path):
    """Return ``(variant, dim, records)``."""
    with open(path, encoding="utf-8") as fh:
        variant, dim = _read_feature_header(fh.readline(), path)
        records = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 2:
                raise FormatError(
                    f"{path}: line {lineno} has {len(parts) - 2} values, expected {dim}"
                )
            try:
                vec = np.array([float(v) for v in parts[2:]], dtype=float)
            except ValueError:
                raise FormatError(f"{path}: line {lineno} has a non-numeric value") from None
            records.append(FeatureRecord(parts[0], parts[1], variant, vec))
    return variant, dim, records


def read_features(path) -> list[FeatureRecord]:
    return read_features_with_header(path)[2]


# -- models ------------------------------------------------------------------

def write_model(model, path) -> None:
    """Persist a trained DiscriminantModel (see ``polarface.classifier``)."""
    n_train, dim = model.training_features.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{MODEL_MAGIC} {FORMAT_VERSION} {model.variant or '-'} "
            f"{n_train} {dim} {len(model.subjects)}\n"
        )
        for s in model.subjects:
            _check_id(s, "subject id")
        fh.write(",".join(["subjects", *model.subjects]) + "\n")
        for image_id, subject, vec in zip(
            model.training_ids, model.training_subjects, model.training_features
        ):
            _check_id(image_id, "image id")
            fh.write(",".join(["train", image_id, subject, *map(_real, vec)]) + "\n")
        for subject, w in zip(model.subjects, model.weights):
            fh.write(",".join(["weight", subject, *map(_real, w)]) + "\n")


def read_model(path):
    from .classifier import DiscriminantModel

    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines:
        raise FormatError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 6 or head[0] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a polarface model file")
    if head[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model format version {head[1]!r}")
    variant = None if head[2] == "-" else head[2]
    try:
        n_train, dim, n_sub = (int(v) for v in head[3:])
    except ValueError:
        raise FormatError(f"{path}: bad model header") from None
    body = lines[1:]
    if len(body) != 1 + n_train + n_sub:
        raise FormatError(f"{path}: expected {1 + n_train + n_sub} body lines, got {len(body)}")
    subj_line = body[0].split(",")
    if subj_line[0] != "subjects" or len(subj_line) != n_sub + 1:
        raise FormatError(f"{path}: malformed subjects line")
    subjects = subj_line[1:]

    ids, train_subjects, feats = [], [], []
    for line in body[1 : 1 + n_train]:
        parts = line.split(",")
        if parts[0] != "train" or len(parts) != dim + 3:
            raise FormatError(f"{path}: malformed training line")
        ids.append(parts[1])
        train_subjects.append(parts[2])
        feats.append([float(v) for v in parts[3:]])
    weights = []
    for k, line in enumerate(body[1 + n_train :]):
        parts = line.split(",")
        if parts[0] != "weight" or len(parts) != n_train + 3 or parts[1] != subjects[k]:
            raise FormatError(f"{path}: malformed weight line for subject {k}")
        weights.append([float(v) for v in parts[2:]])
    return DiscriminantModel(
        weights=np.array(weights, dtype=float).reshape(n_sub, n_train + 1),
        subjects=subjects,
        training_features=np.array(feats, dtype=float).reshape(n_train, dim),
        training_ids=ids,
        training_subjects=train_subjects,
        variant=variant,
    )


# -- evaluation reports ------------------------------------------------------

def write_roc(curve, path) -> None:
    """Write a RocCurve as ``threshold,pf,pv`` CSV (thresholds may be +-inf)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,pf,pv\n")
        for c, pv, pf in curve.points:
            fh.write(f"{_real(c)},{_real(pf)},{_real(pv)}\n")


def read_roc(path) -> np.ndarray:
    """Return an (n, 3) array of (threshold, pf, pv) rows."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "threshold,pf,pv":
            raise FormatError(f"{path}: missing ROC header")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_summary(summary: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
