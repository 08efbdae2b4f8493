"""
Command line driver: static boxes, the static-vs-dynamic benchmark and the
continuous PCA check.

The commands don't need a Flask app, so they're registered as contextless
commands on a Flask AppGroup. Defaults come from load_settings(), so a
settings file named by $DYNAMIC_PCA_SETTINGS changes them without code
changes.

    dynamic-pca box --input bunny.xyz --mode egp --epsilon 0.01
    dynamic-pca bench --synthetic 200000 --batch 100 --reps 10
    dynamic-pca cpca --input cube.off --edits 20
"""

import concurrent.futures
import functools
import io
import logging
from typing import NamedTuple

import click
import numpy as np
from flask.cli import AppGroup

from dynamic_pca import config
from dynamic_pca.bbox import (
    GRID_SOURCES,
    Method,
    OrientedBox,
    build_box,
    pca_box,
    refine_tight,
)
from dynamic_pca.cpca import (
    APEX_MODES,
    Mode,
    cpca_apply_delta,
    cpca_delete_with_rebuild,
    cpca_static,
    decompose,
    facet_delta,
)
from dynamic_pca.exceptions import ApexOutside, PCAError
from dynamic_pca.geometry import (
    Polygon,
    normalize_to_unit_diameter,
    pull_facet,
    push_edge,
    push_facet,
    select_interior_point,
    triangle_areas,
)
from dynamic_pca.grid import build_grid
from dynamic_pca.io import (
    Report,
    ReportFormat,
    dump_report,
    is_mesh_path,
    load_mesh,
    load_points,
    load_polygon,
    write_report,
)
from dynamic_pca.linalg import random_rotation, relative_error
from dynamic_pca.moments import apply_add, apply_delete, summarize
from dynamic_pca.settings import load_settings
from dynamic_pca.utils import Timer, parse_vector, summarize_timings

__all__ = ['Manager', 'BenchConfig', 'cli', 'main']

logger = logging.getLogger(__name__)

# Box modes of the CLI: the point-based methods plus the continuous one.
CPCA_MODE = 'cpca'
BOX_MODES = Method.values() + [CPCA_MODE]

SEED_MASK = 2 ** 64 - 1

KERNEL_HINTS = {2: 'x,y', 3: 'x,y,z'}


class Manager(AppGroup):
    """
    A Flask command group that supports contextless commands, i.e. commands
    that don't require an app context and therefore never create an app.
    """

    def contextless_command(self, *args, **kwargs):
        """
        Decorator for a command that doesn't require app context.
        """
        kwargs['with_appcontext'] = False
        return self.command(*args, **kwargs)


def data_errors(func):
    """Reports data and file errors as a one-line message with exit code 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ApexOutside as e:
            dim = 3 if e.apex is None else len(e.apex)
            raise click.ClickException(
                '%s (supply a kernel point with --kernel %s)'
                % (e, KERNEL_HINTS.get(dim, 'x,y,z'))
            )
        except (PCAError, OSError) as e:
            raise click.ClickException(str(e))

    return wrapper


class BenchConfig(NamedTuple):
    input: str
    mode: str
    epsilons: tuple
    batch_sizes: tuple
    repetitions: int
    seed: int
    op: str = 'both'
    pipeline: str = 'both'
    tight: bool = False
    timings: bool = True
    threads: int = 1
    synthetic: int = 0
    normalize: bool = False

    @property
    def ops(self):
        return ('add', 'delete') if self.op == 'both' else (self.op,)

    @property
    def pipelines(self):
        if self.pipeline == 'both':
            return ('static', 'dynamic')
        return (self.pipeline,)


def _rng(*keys):
    return np.random.default_rng([key & SEED_MASK for key in keys])


def synthetic_cloud(count, seed):
    """A seeded, anisotropic, randomly rotated Gaussian cloud."""
    rng = _rng(seed)
    points = rng.standard_normal((count, 3)) * np.array([3.0, 1.5, 0.5])
    return points @ random_rotation(rng).T


def _load_cloud(path, normalize):
    if is_mesh_path(path):
        points = load_mesh(path).vertices
    else:
        points = load_points(path).points
    if normalize:
        points, _ = normalize_to_unit_diameter(points)
    return np.asarray(points)


def _echo_box(box):
    for i, axis in enumerate(box.frame.axes):
        click.echo(
            'axis %d: %s  extent: [%.17g, %.17g]'
            % (
                i + 1,
                ' '.join('%.17g' % value for value in axis),
                box.extents.lo[i],
                box.extents.hi[i],
            )
        )
    click.echo('volume: %.17g' % box.volume)


def _emit(report, out, fmt):
    if out:
        write_report(report, out, fmt)
    else:
        stream = io.StringIO()
        dump_report(report, stream, fmt)
        click.echo(stream.getvalue(), nl=False)


@click.group(cls=Manager)
@click.option('--verbose', is_flag=True, help='Log at DEBUG level.')
@click.pass_context
def cli(ctx, verbose):
    """Dynamic PCA bounding boxes."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    ctx.obj = load_settings()


def _report_options(func):
    func = click.option(
        '--format',
        'fmt',
        type=click.Choice(ReportFormat.values()),
        default=None,
        help='Report format (default from settings).',
    )(func)
    func = click.option(
        '--out', type=click.Path(dir_okay=False), help='Report file.'
    )(func)
    return func


@cli.contextless_command()
@click.option('--input', 'path', required=True, type=click.Path(exists=True))
@click.option('--mode', type=click.Choice(BOX_MODES), default=Method.AP)
@click.option('--epsilon', type=float, multiple=True)
@click.option('--tight', is_flag=True, help='Refine grid extents exactly.')
@click.option('--normalize', is_flag=True, help='Scale to unit diameter.')
@click.option('--no-timings', is_flag=True, help='Write 0 for all seconds.')
@_report_options
@click.pass_obj
@data_errors
def box(
    settings, path, mode, epsilon, tight, normalize, no_timings, out, fmt
):
    """Computes one static PCA box."""
    fmt = fmt or settings['DEFAULT_FORMAT']
    epsilons = epsilon or settings['DEFAULT_EPSILONS']
    for value in epsilons:
        if not value > 0:
            raise click.BadParameter(
                'must be positive, got %r' % value, param_hint='--epsilon'
            )

    report = Report()
    if mode == CPCA_MODE:
        result, count = _continuous_box(path, normalize)
        _echo_box(result)
        report.add(
            algo=mode,
            op='box',
            n=count,
            m=0,
            epsilon=0.0,
            seconds=0.0,
            volume=result.volume,
            candidates=result.extents.candidates,
        )
    else:
        points = _load_cloud(path, normalize)
        if mode == Method.AP:
            epsilons = (0.0,)
        for value in epsilons:
            with Timer(enabled=not no_timings) as timer:
                result, candidates = pca_box(
                    points, mode, epsilon=value or None, tight=tight
                )
            _echo_box(result)
            report.add(
                algo=mode,
                op='box',
                n=len(points),
                m=0,
                epsilon=value,
                seconds=timer.interval,
                volume=result.volume,
                candidates=candidates,
            )
    _emit(report, out, fmt)


def _continuous_box(path, normalize):
    if is_mesh_path(path):
        body = load_mesh(path)
        mode = Mode.POLYHEDRON_VOLUME
    else:
        body = load_polygon(path)
        mode = Mode.POLYGON_AREA
    if normalize:
        body, _ = normalize_to_unit_diameter(body)
    summary = cpca_static(body, mode)
    return build_box(summary, body.vertices), len(body.vertices)


class _Workspace(object):
    """The base cloud and its preprocessed state for one epsilon."""

    def __init__(self, points, mode, epsilon, tight):
        self.points = points
        self.mode = mode
        self.epsilon = epsilon
        self.tight = tight
        self.summary = summarize(points)
        self.grid = None
        if mode != Method.AP:
            self.grid = build_grid(points, epsilon, track_points=tight)

    def extents(self, summary, points, grid):
        if grid is None:
            return build_box(summary, points)
        result = build_box(summary, grid, GRID_SOURCES[self.mode])
        if self.tight:
            extents = refine_tight(
                grid,
                points,
                result.frame,
                result.extents,
                GRID_SOURCES[self.mode],
            )
            result = OrientedBox(result.frame, extents)
        return result

    def static(self, points):
        summary = summarize(points)
        grid = None
        if self.grid is not None:
            grid = build_grid(
                points,
                self.epsilon,
                origin=self.grid.origin,
                track_points=self.tight,
            )
        return self.extents(summary, points, grid)

    def dynamic(self, op, batch, points, grid):
        if op == 'add':
            summary = apply_add(self.summary, summarize(batch))
            if grid is not None:
                grid.update(added=batch)
        else:
            summary = apply_delete(self.summary, summarize(batch))
            if grid is not None:
                grid.update(removed=batch)
        return self.extents(summary, points, grid)

    def restore(self, op, batch, grid):
        if grid is None:
            return
        if op == 'add':
            grid.update(removed=batch)
        else:
            grid.update(added=batch)


def _repetition(workspace, bench, op, m, index, shared_grid):
    """
    One timed repetition. Returns {pipeline: (seconds, volume, candidates)}.
    Only the PCA work is timed; sampling and bookkeeping are not.
    """
    rng = _rng(bench.seed, m, index, 0 if op == 'add' else 1)
    points = workspace.points
    if op == 'add':
        low, high = points.min(axis=0), points.max(axis=0)
        batch = rng.uniform(low, high, size=(m, points.shape[1]))
        after = np.vstack([points, batch])
    else:
        picked = rng.choice(len(points), size=m, replace=False)
        batch = points[picked]
        after = np.delete(points, picked, axis=0)

    grid = shared_grid
    if grid is not None and bench.threads > 1:
        grid = grid.copy()

    results = {}
    for pipeline in bench.pipelines:
        with Timer(enabled=bench.timings) as timer:
            if pipeline == 'static':
                result = workspace.static(after)
            else:
                result = workspace.dynamic(op, batch, after, grid)
        if pipeline == 'dynamic':
            workspace.restore(op, batch, grid)
        results[pipeline] = (
            timer.interval,
            result.volume,
            result.extents.candidates,
        )

    if len(results) == 2:
        static, dynamic = results['static'][1], results['dynamic'][1]
        if relative_error(dynamic, static) > config.VOLUME_TOLERANCE:
            logger.warning(
                'Static and dynamic volumes differ: %r vs %r', static, dynamic
            )
    return results


def _run_repetitions(workspace, bench, op, m):
    run = functools.partial(
        _repetition, workspace, bench, op, m, shared_grid=workspace.grid
    )
    indices = range(bench.repetitions)
    if bench.threads == 1:
        return [run(index) for index in indices]
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=bench.threads
    ) as executor:
        return list(executor.map(run, indices))


def run_bench(bench, points):
    """Runs the benchmark described by a BenchConfig on a point array."""
    report = Report()
    epsilons = (0.0,) if bench.mode == Method.AP else bench.epsilons
    n = len(points)

    for epsilon in epsilons:
        with Timer(enabled=bench.timings) as timer:
            workspace = _Workspace(points, bench.mode, epsilon, bench.tight)
            initial = workspace.extents(
                workspace.summary, points, workspace.grid
            )
        report.add(
            algo=bench.mode,
            op='preprocess',
            n=n,
            m=0,
            epsilon=epsilon,
            seconds=timer.interval,
            volume=initial.volume,
            candidates=initial.extents.candidates,
        )

        for m in bench.batch_sizes:
            for op in bench.ops:
                results = _run_repetitions(workspace, bench, op, m)
                for pipeline in bench.pipelines:
                    seconds, volumes, candidates = zip(
                        *[result[pipeline] for result in results]
                    )
                    mean, median = summarize_timings(seconds)
                    tag = '%s-%s' % (op, pipeline)
                    for op_tag, value in (
                        (tag, mean),
                        (tag + '-median', median),
                    ):
                        report.add(
                            algo=bench.mode,
                            op=op_tag,
                            n=n,
                            m=m,
                            epsilon=epsilon,
                            seconds=value,
                            volume=float(np.mean(volumes)),
                            candidates=int(round(np.mean(candidates))),
                        )
    return report


@cli.contextless_command()
@click.option('--input', 'path', type=click.Path(exists=True))
@click.option('--synthetic', type=click.IntRange(min=2), default=None)
@click.option(
    '--mode', type=click.Choice(Method.values()), default=Method.AP
)
@click.option('--epsilon', type=float, multiple=True)
@click.option('--batch', type=click.IntRange(min=1), multiple=True)
@click.option('--reps', type=click.IntRange(min=1), default=None)
@click.option('--seed', type=int, default=None)
@click.option(
    '--op', type=click.Choice(['add', 'delete', 'both']), default='both'
)
@click.option(
    '--pipeline',
    type=click.Choice(['both', 'static', 'dynamic']),
    default='both',
)
@click.option('--tight', is_flag=True)
@click.option('--no-timings', is_flag=True, help='Write 0 for all seconds.')
@click.option('--threads', type=click.IntRange(min=1), default=1)
@click.option('--normalize', is_flag=True, help='Scale to unit diameter.')
@_report_options
@click.pass_obj
@data_errors
def bench(
    settings,
    path,
    synthetic,
    mode,
    epsilon,
    batch,
    reps,
    seed,
    op,
    pipeline,
    tight,
    no_timings,
    threads,
    normalize,
    out,
    fmt,
):
    """Times static against dynamic PCA boxes under point edits."""
    if bool(path) == bool(synthetic):
        raise click.UsageError('Pass exactly one of --input and --synthetic.')
    for value in epsilon:
        if not value > 0:
            raise click.BadParameter(
                'must be positive, got %r' % value, param_hint='--epsilon'
            )

    bench_config = BenchConfig(
        input=path or '',
        mode=mode,
        epsilons=epsilon or tuple(settings['DEFAULT_EPSILONS']),
        batch_sizes=batch or tuple(settings['DEFAULT_BATCH_SIZES']),
        repetitions=reps or settings['DEFAULT_REPETITIONS'],
        seed=settings['DEFAULT_SEED'] if seed is None else seed,
        op=op,
        pipeline=pipeline,
        tight=tight,
        timings=not no_timings,
        threads=threads,
        synthetic=synthetic or 0,
        normalize=normalize,
    )

    if synthetic:
        points = synthetic_cloud(synthetic, bench_config.seed)
        if normalize:
            points, _ = normalize_to_unit_diameter(points)
    else:
        points = _load_cloud(path, normalize)

    largest = max(bench_config.batch_sizes)
    if 'delete' in bench_config.ops and largest >= len(points):
        raise click.BadParameter(
            'cannot delete %d of %d points' % (largest, len(points)),
            param_hint='--batch',
        )

    report = run_bench(bench_config, points)
    _emit(report, out, fmt or settings['DEFAULT_FORMAT'])


def _pullable(mesh, peak):
    """True while a pushed peak is still shared by exactly three triangles."""
    return int((mesh.triangles == peak).any(axis=1).sum()) == 3


def edit_journal(body, mode, apex, edits, seed):
    """
    Applies a seeded journal of boundary edits to a body and tracks its
    continuous summary with delta updates. Polyhedra get facet pushes and
    pulls of the most recent push; polygons get edge pushes.

    Returns (edited body, summary, apex, rebuilds).
    """
    rng = _rng(seed, 1)
    summary = cpca_static(body, mode, apex=apex)
    peaks = []
    rebuilds = 0
    for _ in range(edits):
        if isinstance(body, Polygon):
            edge = int(rng.integers(len(body.vertices)))
            segment = body.segments()[edge]
            height = 0.1 * np.linalg.norm(segment[1] - segment[0])
            body, removed, added = push_edge(body, edge, height)
        elif peaks and rng.random() < 0.4 and _pullable(body, peaks[-1]):
            body, removed, added = pull_facet(body, peaks.pop())
        else:
            face = int(rng.integers(len(body.triangles)))
            area = float(triangle_areas(body.corners()[face : face + 1])[0])
            body, removed, added = push_facet(body, face, 0.1 * np.sqrt(area))
            peaks.append(len(body.vertices) - 1)

        plus, minus = facet_delta(removed, added, mode, apex=apex)
        if mode in APEX_MODES:
            result = cpca_delete_with_rebuild(
                summary, body, apex, added=plus, removed=minus
            )
            summary, apex = result.summary, result.apex
            rebuilds += result.rebuilt
        else:
            summary = cpca_apply_delta(summary, added=plus, removed=minus)
    return body, summary, apex, rebuilds


@cli.contextless_command()
@click.option('--input', 'path', required=True, type=click.Path(exists=True))
@click.option('--kernel', default=None, help='Apex override, e.g. 0.5,0.5,0.5')
@click.option('--edits', type=click.IntRange(min=0), default=None)
@click.option('--seed', type=int, default=None)
@click.option('--normalize', is_flag=True, help='Scale to unit diameter.')
@click.option('--no-timings', is_flag=True, help='Write 0 for all seconds.')
@_report_options
@click.pass_obj
@data_errors
def cpca(
    settings, path, kernel, edits, seed, normalize, no_timings, out, fmt
):
    """Continuous PCA of a mesh (or polygon) in every applicable mode."""
    edits = settings['CPCA_EDITS'] if edits is None else edits
    seed = settings['DEFAULT_SEED'] if seed is None else seed
    tolerance = settings['CPCA_TOLERANCE']

    if is_mesh_path(path):
        body = load_mesh(path)
        modes = (Mode.POLYHEDRON_VOLUME, Mode.POLYHEDRON_BOUNDARY)
    else:
        body = load_polygon(path)
        modes = (Mode.POLYGON_AREA, Mode.POLYGON_BOUNDARY)
    if normalize:
        body, _ = normalize_to_unit_diameter(body)

    apex = None
    if kernel:
        try:
            apex = np.array(parse_vector(kernel, dim=body.dim))
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint='--kernel')

    report = Report()
    worst = 0.0
    for mode in modes:
        mode_apex = None
        if mode in APEX_MODES:
            mode_apex = select_interior_point(body) if apex is None else apex
        with Timer(enabled=not no_timings) as timer:
            summary = cpca_static(body, mode, apex=mode_apex)
        result = build_box(summary, body.vertices)

        edited, tracked, final_apex, rebuilds = edit_journal(
            body, mode, mode_apex, edits, seed
        )
        expected = cpca_static(edited, mode, apex=final_apex)
        error = max(
            relative_error(tracked.cov, expected.cov),
            relative_error(tracked.centroid, expected.centroid),
            relative_error(tracked.measure, expected.measure),
        )
        worst = max(worst, error)

        click.echo('mode: %s' % mode)
        click.echo('measure: %.17g' % summary.measure)
        click.echo(
            'centroid: %s' % ' '.join('%.17g' % v for v in summary.centroid)
        )
        for row in summary.cov:
            click.echo('cov: %s' % ' '.join('%.17g' % v for v in row))
        _echo_box(result)
        click.echo(
            'delta error: %.3g (%d edits, %d rebuilds)'
            % (error, edits, rebuilds)
        )
        report.add(
            algo=mode,
            op='cpca',
            n=len(decompose(body, mode, apex=mode_apex)),
            m=edits,
            epsilon=0.0,
            seconds=timer.interval,
            volume=result.volume,
            candidates=result.extents.candidates,
        )

    _emit(report, out, fmt or settings['DEFAULT_FORMAT'])
    if worst > tolerance:
        raise click.ClickException(
            'Delta updates drifted from the static summary: error %g > %g'
            % (worst, tolerance)
        )


def main():
    cli(prog_name='dynamic-pca')
