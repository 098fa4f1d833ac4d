"""File formats: trial/fixation/voxel CSV schemas, the text grid format,
measured-response tables and model persistence.

All emitters write LF line endings, never quote, and serialize floats
with Python's shortest round-trip repr, so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .fixmaps import Fixation, SalienceGrid
from .pairwise import GlobalSalienceModel, Outcome, Side, Trial
from .prf import PRFVoxel

TRIALS_HEADER = ["subject_id", "left_image", "right_image",
                 "task_target_side", "familiar_side", "outcome"]
FIXATIONS_HEADER = ["subject_id", "image_id", "x_deg", "y_deg",
                    "duration_ms", "latency_ms", "ordinal"]
VOXELS_HEADER = ["area", "x_c", "y_c", "sigma", "t_value", "variance_explained"]


class DataFormatError(ValueError):
    """Malformed input file; message names the line and field."""


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(x))


def _open_rows(path, expected_header, kind):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty {kind} file") from None
        if header != expected_header:
            raise DataFormatError(
                f"{path}: bad {kind} header {header!r}, expected {expected_header!r}")
        return list(reader)


def _parse_enum(enum_cls, value, path, lineno, fieldname):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = "|".join(e.value for e in enum_cls)
        raise DataFormatError(
            f"{path}: line {lineno}, field {fieldname}: "
            f"{value!r} not in {{{allowed}}}") from None


def _parse_num(cast, value, path, lineno, fieldname):
    try:
        return cast(value)
    except ValueError:
        raise DataFormatError(
            f"{path}: line {lineno}, field {fieldname}: cannot parse {value!r}") from None


def load_trials(path) -> list[Trial]:
    trials = []
    for lineno, row in enumerate(_open_rows(path, TRIALS_HEADER, "trials"), start=2):
        if len(row) != len(TRIALS_HEADER):
            raise DataFormatError(f"{path}: line {lineno}: expected "
                                  f"{len(TRIALS_HEADER)} fields, got {len(row)}")
        trials.append(Trial(
            subject_id=_parse_num(int, row[0], path, lineno, "subject_id"),
            left_image=_parse_num(int, row[1], path, lineno, "left_image"),
            right_image=_parse_num(int, row[2], path, lineno, "right_image"),
            task_target_side=_parse_enum(Side, row[3], path, lineno, "task_target_side"),
            familiar_side=_parse_enum(Side, row[4], path, lineno, "familiar_side"),
            outcome=_parse_enum(Outcome, row[5], path, lineno, "outcome"),
        ))
    return trials


def save_trials(trials: list[Trial], path) -> None:
    lines = [",".join(TRIALS_HEADER)]
    for t in trials:
        lines.append(",".join([str(t.subject_id), str(t.left_image),
                               str(t.right_image), t.task_target_side.value,
                               t.familiar_side.value, t.outcome.value]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_fixations(path) -> list[Fixation]:
    fixations = []
    for lineno, row in enumerate(_open_rows(path, FIXATIONS_HEADER, "fixations"),
                                 start=2):
        if len(row) != len(FIXATIONS_HEADER):
            raise DataFormatError(f"{path}: line {lineno}: expected "
                                  f"{len(FIXATIONS_HEADER)} fields, got {len(row)}")
        fixations.append(Fixation(
            subject_id=_parse_num(int, row[0], path, lineno, "subject_id"),
            image_id=_parse_num(int, row[1], path, lineno, "image_id"),
            x=_parse_num(float, row[2], path, lineno, "x_deg"),
            y=_parse_num(float, row[3], path, lineno, "y_deg"),
            duration=_parse_num(float, row[4], path, lineno, "duration_ms"),
            latency_from_onset=_parse_num(float, row[5], path, lineno, "latency_ms"),
            ordinal=_parse_num(int, row[6], path, lineno, "ordinal"),
        ))
    return fixations


def save_fixations(fixations: list[Fixation], path) -> None:
    lines = [",".join(FIXATIONS_HEADER)]
    for f in fixations:
        lines.append(",".join([str(f.subject_id), str(f.image_id), _fmt(f.x),
                               _fmt(f.y), _fmt(f.duration),
                               _fmt(f.latency_from_onset), str(f.ordinal)]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_voxels(path) -> list[PRFVoxel]:
    voxels = []
    for lineno, row in enumerate(_open_rows(path, VOXELS_HEADER, "voxels"), start=2):
        if len(row) != len(VOXELS_HEADER):
            raise DataFormatError(f"{path}: line {lineno}: expected "
                                  f"{len(VOXELS_HEADER)} fields, got {len(row)}")
        voxels.append(PRFVoxel(
            area=row[0],
            x_c=_parse_num(float, row[1], path, lineno, "x_c"),
            y_c=_parse_num(float, row[2], path, lineno, "y_c"),
            sigma=_parse_num(float, row[3], path, lineno, "sigma"),
            t_value=_parse_num(float, row[4], path, lineno, "t_value"),
            variance_explained=_parse_num(float, row[5], path, lineno,
                                          "variance_explained"),
        ))
    return voxels


def save_voxels(voxels: list[PRFVoxel], path) -> None:
    lines = [",".join(VOXELS_HEADER)]
    for v in voxels:
        lines.append(",".join([v.area, _fmt(v.x_c), _fmt(v.y_c), _fmt(v.sigma),
                               _fmt(v.t_value), _fmt(v.variance_explained)]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_responses(path) -> tuple[list[int], np.ndarray]:
    """Measured-response table: first column image_id, one further column
    per voxel in voxel-file order. Returns (image_ids, K x D matrix)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty responses file") from None
        if not header or header[0] != "image_id":
            raise DataFormatError(f"{path}: first column must be image_id")
        n_voxels = len(header) - 1
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != n_voxels + 1:
                raise DataFormatError(f"{path}: line {lineno}: expected "
                                      f"{n_voxels + 1} fields, got {len(row)}")
            ids.append(_parse_num(int, row[0], path, lineno, "image_id"))
            rows.append([_parse_num(float, v, path, lineno, f"v{j}")
                         for j, v in enumerate(row[1:])])
    return ids, np.array(rows)


def save_responses(image_ids: list[int], values: np.ndarray, path) -> None:
    values = np.atleast_2d(values)
    header = ["image_id"] + [f"v{j}" for j in range(values.shape[1])]
    lines = [",".join(header)]
    for img, row in zip(image_ids, values):
        lines.append(",".join([str(img)] + [_fmt(x) for x in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid(path) -> SalienceGrid:
    """Grid text format: header `GRID w h deg_per_bin`, then h lines of
    w space-separated decimals."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty grid file")
    parts = lines[0].split()
    if len(parts) != 4 or parts[0] != "GRID":
        raise DataFormatError(f"{path}: bad grid header {lines[0]!r}")
    w = _parse_num(int, parts[1], path, 1, "width")
    h = _parse_num(int, parts[2], path, 1, "height")
    deg = _parse_num(float, parts[3], path, 1, "deg_per_bin")
    data_lines = lines[1:]
    if len(data_lines) != h:
        raise DataFormatError(f"{path}: expected {h} data lines, got {len(data_lines)}")
    rows = []
    for lineno, line in enumerate(data_lines, start=2):
        vals = line.split()
        if len(vals) != w:
            raise DataFormatError(
                f"{path}: line {lineno}: expected {w} values, got {len(vals)}")
        rows.append([_parse_num(float, v, path, lineno, "value") for v in vals])
    arr = np.array(rows)
    if (arr < 0).any():
        raise DataFormatError(f"{path}: negative values in salience grid")
    return SalienceGrid(arr, deg_per_bin=deg)


def save_grid(grid: SalienceGrid, path) -> None:
    buf = _io.StringIO()
    buf.write(f"GRID {grid.width_bins} {grid.height_bins} {_fmt(grid.deg_per_bin)}\n")
    for row in grid.values:
        buf.write(" ".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def load_model(path) -> GlobalSalienceModel:
    """Model file: key=value lines with bracketed arrays for w and s."""
    path = Path(path)
    fields: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        M = int(fields["M"])
        K = int(fields["K"])
        C = float(fields["C"])
        tau = float(fields["tau"])
        phi = float(fields["phi"])
        w = _parse_array(fields["w"], path, "w")
        s = _parse_array(fields["s"], path, "s")
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing field {exc.args[0]}") from None
    if len(w) != M or len(s) != K:
        raise DataFormatError(f"{path}: array lengths disagree with M/K")
    return GlobalSalienceModel(w=np.array(w), tau=tau, phi=phi, s=np.array(s),
                               M=M, K=K, C=C)


def _parse_array(text: str, path, name) -> list[float]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise DataFormatError(f"{path}: field {name}: expected a bracketed array")
    inner = text[1:-1].strip()
    if not inner:
        return []
    return [float(v) for v in inner.split(",")]


def save_model(model: GlobalSalienceModel, path) -> None:
    lines = [
        f"M={model.M}",
        f"K={model.K}",
        f"C={_fmt(model.C)}",
        f"tau={_fmt(model.tau)}",
        f"phi={_fmt(model.phi)}",
        "w=[" + ", ".join(_fmt(v) for v in model.w) + "]",
        "s=[" + ", ".join(_fmt(v) for v in model.s) + "]",
    ]
    Path(path).write_text("\n".join(lines) + "\n")
