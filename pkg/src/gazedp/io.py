"""File formats: fixation CSV, gaze/value map text files, PGM rendering.

Formats are deliberately plain so artifacts are byte-reproducible:

* fixation CSV: header ``observer_id,x,y,weight`` (weight column
  optional, default 1), UTF-8, LF or CRLF; ``#`` lines are ignored.
* gaze map: line 1 ``width height``, then height rows of width
  space-separated integer counts.
* value map: line 1 ``width height normalization``, then height rows of
  width space-separated floats (repr round-trip).
* heatmap image: binary 8-bit grayscale PGM (P5) with a ``# gazedp v1``
  comment; pixel = round(255 * intensity).  PNG output is available
  when Pillow is installed.
"""

from __future__ import annotations

import os
from typing import Mapping

import numpy as np

from .core import AggregateMap, Fixation, GazeMap, GridSpec, Heatmap
from .errors import ParseError, ValidationError

FORMAT_VERSION_COMMENT = "# gazedp v1"


def load_fixations(path: str | os.PathLike) -> dict[str, list[Fixation]]:
    """Parse a fixation CSV, grouping rows by observer.

    Observers keep first-appearance order.  Raises ParseError with the
    line number on any malformed row, and on files with no data rows.
    """
    path = os.fspath(path)
    with open(path, encoding="utf-8", newline="") as fh:
        raw_lines = fh.read().splitlines()

    lines: list[tuple[int, str]] = []
    for lineno, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append((lineno, stripped))

    if not lines:
        raise ParseError("no fixation rows found", path=path)

    header_no, header = lines[0]
    columns = [col.strip() for col in header.split(",")]
    if columns not in (["observer_id", "x", "y", "weight"],
                       ["observer_id", "x", "y"]):
        raise ParseError(
            f"expected header 'observer_id,x,y[,weight]', got {header!r}",
            path=path, line=header_no)

    observers: dict[str, list[Fixation]] = {}
    for lineno, line in lines[1:]:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 3 or 4 fields, got {len(parts)}",
                             path=path, line=lineno)
        observer = parts[0]
        if not observer:
            raise ParseError("empty observer id", path=path, line=lineno)
        try:
            x = float(parts[1])
            y = float(parts[2])
            weight = int(parts[3]) if len(parts) == 4 and parts[3] else 1
            fixation = Fixation(x, y, weight)
        except (ValueError, ValidationError) as exc:
            raise ParseError(f"bad fixation row: {exc}",
                             path=path, line=lineno) from exc
        observers.setdefault(observer, []).append(fixation)

    if not observers:
        raise ParseError("no fixation rows found", path=path)
    return observers


def save_gaze_map(g: GazeMap, path: str | os.PathLike) -> None:
    """Write the canonical text form (see module docstring)."""
    lines = [f"{g.grid.width} {g.grid.height}"]
    for row in g.counts:
        lines.append(" ".join(str(int(v)) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def load_gaze_map(path: str | os.PathLike) -> GazeMap:
    path = os.fspath(path)
    rows, header = _read_grid_file(path, expect_fields=2)
    width, height = header
    grid = GridSpec(int(width), int(height))
    counts = _parse_grid_rows(rows, grid, path, to_int=True)
    return GazeMap(grid, counts)


def save_value_map(a: AggregateMap, path: str | os.PathLike) -> None:
    lines = [f"{a.grid.width} {a.grid.height} {a.normalization}"]
    for row in a.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def load_value_map(path: str | os.PathLike) -> AggregateMap:
    path = os.fspath(path)
    rows, header = _read_grid_file(path, expect_fields=3)
    width, height, normalization = header
    grid = GridSpec(int(width), int(height))
    values = _parse_grid_rows(rows, grid, path, to_int=False)
    return AggregateMap(grid, values, normalization=int(normalization))


def _read_grid_file(path, expect_fields):
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    lines = [(i, ln.strip()) for i, ln in enumerate(raw, start=1)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ParseError("empty map file", path=path)
    header_no, header = lines[0]
    fields = header.split()
    if len(fields) != expect_fields:
        raise ParseError(
            f"expected {expect_fields} header fields, got {len(fields)}",
            path=path, line=header_no)
    try:
        header_vals = [int(f) for f in fields]
    except ValueError as exc:
        raise ParseError(f"bad header: {exc}", path=path,
                         line=header_no) from exc
    return lines[1:], header_vals


def _parse_grid_rows(rows, grid: GridSpec, path, to_int: bool) -> np.ndarray:
    if len(rows) != grid.height:
        raise ParseError(
            f"expected {grid.height} data rows, got {len(rows)}", path=path)
    out = np.zeros(grid.shape, dtype=np.int64 if to_int else np.float64)
    for y, (lineno, line) in enumerate(rows):
        fields = line.split()
        if len(fields) != grid.width:
            raise ParseError(
                f"expected {grid.width} values, got {len(fields)}",
                path=path, line=lineno)
        try:
            out[y] = [int(f) if to_int else float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"bad value: {exc}", path=path,
                             line=lineno) from exc
    return out


def heatmap_bytes(h: Heatmap) -> np.ndarray:
    """8-bit pixel values: round(255 * intensity), clipped to [0, 255]."""
    return np.clip(np.rint(255.0 * h.intensities), 0, 255).astype(np.uint8)


def render_heatmap(h: Heatmap, path: str | os.PathLike) -> None:
    """Write a heatmap image; `.png` suffix selects PNG, else PGM (P5)."""
    path = os.fspath(path)
    pixels = heatmap_bytes(h)
    if path.lower().endswith(".png"):
        _write_png(pixels, path)
    else:
        header = (f"P5\n{FORMAT_VERSION_COMMENT}\n"
                  f"{h.grid.width} {h.grid.height}\n255\n")
        try:
            with open(path, "wb") as fh:
                fh.write(header.encode("ascii"))
                fh.write(pixels.tobytes())
        except OSError as exc:
            raise OSError(f"cannot write heatmap to {path}: {exc}") from exc


def _write_png(pixels: np.ndarray, path: str) -> None:
    try:
        from PIL import Image
    except ImportError as exc:
        raise ValidationError(
            "PNG output needs the optional pillow dependency; "
            "use a .pgm path instead") from exc
    Image.fromarray(pixels, mode="L").save(path, format="PNG")


def load_pgm(path: str | os.PathLike) -> tuple[np.ndarray, GridSpec]:
    """Read back a binary PGM written by render_heatmap."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        # skip whitespace and comment lines
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) != 4 or tokens[0] != b"P5":
        raise ParseError("not a binary PGM file", path=path)
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}", path=path)
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height,
                           offset=pos).reshape(height, width)
    return pixels.copy(), GridSpec(width, height)


def _write_text(path, text: str) -> None:
    path = os.fspath(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def observers_in_order(observers: Mapping[str, list[Fixation]]) -> list[str]:
    return list(observers.keys())
