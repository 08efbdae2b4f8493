"""
Readers for point clouds (xyz, csv), triangle meshes (ASCII OFF and OBJ) and
polygons, and the benchmark report writer/reader.
"""

import csv
import json
import logging
import os
from typing import NamedTuple

import numpy as np

from dynamic_pca.enum import Enum
from dynamic_pca.exceptions import (
    DimensionMismatch,
    FileFormatException,
    IndexOutOfRange,
)
from dynamic_pca.geometry import PointCloud, Polygon, TriMesh
from dynamic_pca.utils import finite_float

logger = logging.getLogger(__name__)

POINT_DIMS = (2, 3)


class PointFormat(Enum):
    XYZ = 'xyz'
    CSV = 'csv'


class MeshFormat(Enum):
    OFF = 'off'
    OBJ = 'obj'


class ReportFormat(Enum):
    CSV = 'csv'
    JSON = 'json'


EXTENSION_FORMATS = {
    '.xyz': PointFormat.XYZ,
    '.txt': PointFormat.XYZ,
    '.pts': PointFormat.XYZ,
    '.csv': PointFormat.CSV,
    '.off': MeshFormat.OFF,
    '.obj': MeshFormat.OBJ,
}

REPORT_FIELDS = (
    'algo',
    'op',
    'n',
    'm',
    'epsilon',
    'seconds',
    'volume',
    'candidates',
)


def infer_format(path):
    """File format implied by a path's extension, or None."""
    return EXTENSION_FORMATS.get(os.path.splitext(path)[1].lower())


def is_mesh_path(path):
    return infer_format(path) in MeshFormat.values()


def _lines(path):
    """(line number, stripped text) of every non-blank, non-comment line."""
    with open(path) as f:
        for number, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if line:
                yield number, line


def _parse_row(fields, number):
    try:
        return [finite_float(field) for field in fields]
    except ValueError as e:
        raise FileFormatException(str(e), line=number)


def _is_numeric(fields):
    try:
        for field in fields:
            float(field)
    except ValueError:
        return False
    return True


def load_points(path, fmt=None):
    """
    Loads a point cloud. xyz files hold one point per line as whitespace
    separated numbers; csv files are comma separated and may start with a
    header row (any non-numeric first row). Lines or trailing parts starting
    with '#' are comments.
    """
    fmt = fmt or infer_format(path) or PointFormat.XYZ
    PointFormat.from_string(fmt)

    rows = []
    dim = None
    first = True
    for number, line in _lines(path):
        if fmt == PointFormat.CSV:
            fields = [field.strip() for field in line.split(',')]
        else:
            fields = line.split()
        if first and fmt == PointFormat.CSV and not _is_numeric(fields):
            first = False
            continue
        first = False

        row = _parse_row(fields, number)
        if dim is None:
            dim = len(row)
            if dim not in POINT_DIMS:
                raise DimensionMismatch(
                    'expected 2 or 3 coordinates, got %d' % dim, line=number
                )
        elif len(row) != dim:
            raise DimensionMismatch(
                'expected %d coordinates, got %d' % (dim, len(row)),
                line=number,
            )
        rows.append(row)

    if not rows:
        raise FileFormatException('%s holds no points' % path)
    logger.debug('Loaded %d %d-d points from %s', len(rows), dim, path)
    return PointCloud(np.array(rows, dtype=float))


def load_polygon(path, fmt=None):
    """A 2D points file read as polygon vertices in boundary order."""
    cloud = load_points(path, fmt)
    if cloud.dim != 2:
        raise DimensionMismatch(
            'A polygon needs 2-d vertices, got %d-d' % cloud.dim
        )
    return Polygon(cloud.points)


def _face_indices(fields, number, base=0):
    indices = []
    for field in fields:
        # OBJ faces may be v, v/vt, v//vn or v/vt/vn.
        try:
            index = int(field.split('/', 1)[0])
        except ValueError:
            raise FileFormatException(
                'invalid face index %r' % field, line=number
            )
        indices.append(index - base)
    if len(indices) < 3:
        raise FileFormatException('a face needs at least 3 vertices', number)
    return indices


def _fan(face):
    """Fan-triangulates a face (v0, v1, ..., vk) into (v0, vi, vi+1)."""
    return [(face[0], face[i], face[i + 1]) for i in range(1, len(face) - 1)]


def _check_indices(faces, vertex_count):
    for number, face in faces:
        for index in face:
            if not 0 <= index < vertex_count:
                raise IndexOutOfRange(
                    'line %d: face index %d out of range for %d vertices'
                    % (number, index, vertex_count)
                )


def _load_off(path):
    lines = _lines(path)
    try:
        number, line = next(lines)
    except StopIteration:
        raise FileFormatException('%s is empty' % path)

    fields = line.split()
    if fields[0].upper() != 'OFF':
        raise FileFormatException('missing OFF header', line=number)
    fields = fields[1:]
    if not fields:
        try:
            number, line = next(lines)
        except StopIteration:
            raise FileFormatException('missing OFF counts')
        fields = line.split()
    try:
        vertex_count, face_count = int(fields[0]), int(fields[1])
    except (IndexError, ValueError):
        raise FileFormatException('invalid OFF counts', line=number)

    vertices = []
    faces = []
    for number, line in lines:
        fields = line.split()
        if len(vertices) < vertex_count:
            row = _parse_row(fields, number)
            if len(row) != 3:
                raise DimensionMismatch(
                    'expected 3 coordinates, got %d' % len(row), line=number
                )
            vertices.append(row)
        elif len(faces) < face_count:
            try:
                size = int(fields[0])
            except ValueError:
                raise FileFormatException('invalid face size', line=number)
            if len(fields) < size + 1:
                raise FileFormatException(
                    'face lists fewer than %d indices' % size, line=number
                )
            faces.append((number, _face_indices(fields[1 : size + 1], number)))

    if len(vertices) < vertex_count or len(faces) < face_count:
        raise FileFormatException(
            '%s ends early: %d/%d vertices, %d/%d faces'
            % (path, len(vertices), vertex_count, len(faces), face_count)
        )
    return vertices, faces


def _load_obj(path):
    vertices = []
    faces = []
    for number, line in _lines(path):
        fields = line.split()
        if fields[0] == 'v':
            row = _parse_row(fields[1:4], number)
            if len(row) != 3:
                raise DimensionMismatch(
                    'expected 3 coordinates, got %d' % len(row), line=number
                )
            vertices.append(row)
        elif fields[0] == 'f':
            faces.append((number, _face_indices(fields[1:], number, base=1)))
        # Normals, texture coordinates, groups and materials are ignored.
    return vertices, faces


def load_mesh(path, fmt=None):
    """
    Loads an ASCII OFF or OBJ triangle mesh. Faces with more than three
    vertices are fan-triangulated.
    """
    fmt = fmt or infer_format(path)
    MeshFormat.from_string(fmt)
    if fmt == MeshFormat.OFF:
        vertices, faces = _load_off(path)
    else:
        vertices, faces = _load_obj(path)

    _check_indices(faces, len(vertices))
    triangles = [tri for _, face in faces for tri in _fan(face)]
    logger.debug(
        'Loaded %d vertices, %d triangles from %s',
        len(vertices),
        len(triangles),
        path,
    )
    return TriMesh(np.array(vertices, dtype=float).reshape(-1, 3), triangles)


class ReportRow(NamedTuple):
    algo: str
    op: str
    n: int
    m: int
    epsilon: float
    seconds: float
    volume: float
    candidates: int


class Report(object):
    """Benchmark rows in the order they were recorded."""

    def __init__(self, rows=()):
        self.rows = []
        for row in rows:
            self.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def append(self, row):
        row = ReportRow(*row)
        for field in REPORT_FIELDS[2:]:
            value = getattr(row, field)
            if not np.isfinite(value) or value < 0:
                raise ValueError(
                    '%s must be finite and non-negative, got %r'
                    % (field, value)
                )
        self.rows.append(row)
        return row

    def add(self, **fields):
        return self.append(ReportRow(**fields))


def _format_value(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return '%d' % value
    return '%.17g' % value


def write_report(report, path, fmt=ReportFormat.CSV):
    """
    Writes a report as csv (columns algo,op,n,m,epsilon,seconds,volume,
    candidates) or as a json array of row objects. Reals are written with 17
    significant digits.
    """
    with open(path, 'w', newline='') as f:
        dump_report(report, f, fmt)


INT_FIELDS = ('n', 'm', 'candidates')


def _json_record(row):
    record = {}
    for field, value in zip(REPORT_FIELDS, row):
        if field in INT_FIELDS:
            value = int(value)
        elif not isinstance(value, str):
            value = float(value)
        record[field] = value
    return record


def dump_report(report, f, fmt=ReportFormat.CSV):
    """Like write_report, to an open text stream."""
    ReportFormat.from_string(fmt)
    if fmt == ReportFormat.CSV:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_FIELDS)
        for row in report:
            writer.writerow([_format_value(value) for value in row])
    else:
        # json floats are written with repr, which round-trips exactly.
        json.dump([_json_record(row) for row in report], f, indent=2)
        f.write('\n')


def _coerce(record, number=None):
    try:
        return ReportRow(
            algo=str(record['algo']),
            op=str(record['op']),
            n=int(record['n']),
            m=int(record['m']),
            epsilon=float(record['epsilon']),
            seconds=float(record['seconds']),
            volume=float(record['volume']),
            candidates=int(record['candidates']),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatException('invalid report row: %s' % e, line=number)


def read_report(path, fmt=None):
    """Parses a report written by write_report."""
    if fmt is None:
        is_json = path.lower().endswith('.json')
        fmt = ReportFormat.JSON if is_json else ReportFormat.CSV
    ReportFormat.from_string(fmt)
    with open(path, newline='') as f:
        if fmt == ReportFormat.JSON:
            try:
                records = json.load(f)
            except ValueError as e:
                raise FileFormatException('invalid json report: %s' % e)
            return Report(_coerce(record) for record in records)

        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != REPORT_FIELDS:
            raise FileFormatException('unexpected report header', line=1)
        return Report(
            _coerce(record, reader.line_num) for record in reader
        )
