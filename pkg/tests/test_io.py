import io

import numpy as np
import pytest

from dynamic_pca.exceptions import (
    DimensionMismatch,
    FileFormatException,
    IndexOutOfRange,
)
from dynamic_pca.io import (
    MeshFormat,
    PointFormat,
    Report,
    ReportFormat,
    ReportRow,
    dump_report,
    infer_format,
    is_mesh_path,
    load_mesh,
    load_points,
    load_polygon,
    read_report,
    write_report,
)

TETRA_OFF = """OFF
# a regular tetrahedron
4 4 0
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
"""

QUAD_OBJ = """# one square
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vn 0 0 1
f 1//1 2//1 3//1 4//1
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _row(**fields):
    values = dict(
        algo='ap',
        op='add-dynamic',
        n=1000,
        m=10,
        epsilon=0.0,
        seconds=0.1,
        volume=1.0,
        candidates=1000,
    )
    values.update(fields)
    return ReportRow(**values)


def test_infer_format():
    assert infer_format('cloud.XYZ') == PointFormat.XYZ
    assert infer_format('cloud.csv') == PointFormat.CSV
    assert infer_format('bunny.off') == MeshFormat.OFF
    assert infer_format('cloud') is None
    assert is_mesh_path('dir/bunny.obj')
    assert not is_mesh_path('cloud.pts')


class TestLoadPoints:
    def test_xyz(self, tmp_path):
        cloud = load_points(_write(tmp_path, 'a.xyz', '0 0 0\n1 1 1\n'))
        assert len(cloud) == 2
        assert cloud.dim == 3
        np.testing.assert_array_equal(cloud.points, [(0, 0, 0), (1, 1, 1)])

    def test_csv_header(self, tmp_path):
        cloud = load_points(_write(tmp_path, 'a.csv', 'x,y\n1,2\n'))
        np.testing.assert_array_equal(cloud.points, [(1, 2)])

    def test_comments_and_blank_lines(self, tmp_path):
        path = _write(tmp_path, 'a.xyz', '# header\n\n1 2  # first\n3 4\n')
        np.testing.assert_array_equal(
            load_points(path).points, [(1, 2), (3, 4)]
        )

    def test_explicit_format(self, tmp_path):
        path = _write(tmp_path, 'points', '1,2,3\n')
        np.testing.assert_array_equal(
            load_points(path, PointFormat.CSV).points, [(1, 2, 3)]
        )

    def test_dimension_mismatch(self, tmp_path):
        path = _write(tmp_path, 'a.xyz', '1 2\n1 2 3\n')
        with pytest.raises(DimensionMismatch) as exc_info:
            load_points(path)
        assert exc_info.value.line == 2
        assert str(exc_info.value).startswith('line 2:')

    def test_unsupported_dimension(self, tmp_path):
        for text in ('1\n2\n', '1 2 3 4\n5 6 7 8\n'):
            path = _write(tmp_path, 'a.xyz', text)
            with pytest.raises(DimensionMismatch) as exc_info:
                load_points(path)
            assert exc_info.value.line == 1

    def test_bad_number(self, tmp_path):
        path = _write(tmp_path, 'a.xyz', '1 2\n1 two\n')
        with pytest.raises(FileFormatException) as exc_info:
            load_points(path)
        assert exc_info.value.line == 2

    def test_non_finite(self, tmp_path):
        with pytest.raises(FileFormatException):
            load_points(_write(tmp_path, 'a.xyz', '1 nan\n'))

    def test_empty(self, tmp_path):
        with pytest.raises(FileFormatException):
            load_points(_write(tmp_path, 'a.xyz', '# nothing\n'))

    def test_round_trip(self, tmp_path):
        points = np.random.default_rng(0).standard_normal((20, 3))
        text = ''.join(
            ' '.join('%.17g' % value for value in row) + '\n'
            for row in points
        )
        loaded = load_points(_write(tmp_path, 'a.xyz', text))
        np.testing.assert_array_equal(loaded.points, points)

    def test_polygon(self, tmp_path):
        polygon = load_polygon(
            _write(tmp_path, 'a.xyz', '0 0\n1 0\n1 1\n0 1\n')
        )
        assert polygon.area() == 1.0
        with pytest.raises(DimensionMismatch):
            load_polygon(_write(tmp_path, 'b.xyz', '0 0 0\n1 0 0\n1 1 0\n'))


class TestLoadMesh:
    def test_off_tetrahedron(self, tmp_path):
        mesh = load_mesh(_write(tmp_path, 'tetra.off', TETRA_OFF))
        assert mesh.vertices.shape == (4, 3)
        assert len(mesh.triangles) == 4
        assert mesh.volume() == pytest.approx(8 / 3)

    def test_off_counts_on_header_line(self, tmp_path):
        header = 'OFF\n# a regular tetrahedron\n4 4 0'
        text = TETRA_OFF.replace(header, 'OFF 4 4 0')
        assert len(load_mesh(_write(tmp_path, 'a.off', text)).triangles) == 4

    def test_obj_quad_is_fanned(self, tmp_path):
        mesh = load_mesh(_write(tmp_path, 'quad.obj', QUAD_OBJ))
        np.testing.assert_array_equal(mesh.triangles, [(0, 1, 2), (0, 2, 3)])
        assert mesh.area() == pytest.approx(1.0)

    def test_index_out_of_range(self, tmp_path):
        text = TETRA_OFF.replace('3 1 3 2', '3 1 3 9')
        with pytest.raises(IndexOutOfRange):
            load_mesh(_write(tmp_path, 'a.off', text))

    def test_truncated_off(self, tmp_path):
        text = TETRA_OFF.rsplit('3 1 3 2', 1)[0]
        with pytest.raises(FileFormatException):
            load_mesh(_write(tmp_path, 'a.off', text))

    def test_missing_header(self, tmp_path):
        with pytest.raises(FileFormatException) as exc_info:
            load_mesh(_write(tmp_path, 'a.off', '4 4 0\n'))
        assert exc_info.value.line == 1

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_mesh(_write(tmp_path, 'a.xyz', '0 0 0\n'))


class TestReport:
    def test_empty_csv_is_header_only(self, tmp_path):
        path = str(tmp_path / 'report.csv')
        write_report(Report(), path)
        with open(path) as f:
            assert f.read() == (
                'algo,op,n,m,epsilon,seconds,volume,candidates\n'
            )

    def test_one_row(self):
        report = Report()
        report.add(**_row()._asdict())
        out = io.StringIO()
        dump_report(report, out)
        lines = out.getvalue().splitlines()
        assert len(lines) == 2
        assert lines[1] == 'ap,add-dynamic,1000,10,0,0.10000000000000001,1,1000'

    @pytest.mark.parametrize('fmt', [ReportFormat.CSV, ReportFormat.JSON])
    def test_round_trip(self, tmp_path, fmt):
        report = Report(
            [
                _row(),
                _row(algo='egp', epsilon=0.01, seconds=1 / 3, volume=2 ** 0.5),
                _row(op='preprocess', m=0, candidates=0),
            ]
        )
        path = str(tmp_path / ('report.' + fmt))
        write_report(report, path, fmt)
        assert read_report(path).rows == report.rows

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            Report([_row(seconds=-1.0)])
        with pytest.raises(ValueError):
            Report([_row(volume=float('inf'))])

    def test_unexpected_header(self, tmp_path):
        path = _write(tmp_path, 'report.csv', 'a,b\n1,2\n')
        with pytest.raises(FileFormatException):
            read_report(path)
