"""Console script for cone_nn."""
import functools
import logging
import os
import re
import sys

import click
import numpy as np
import pandas as pd
from click.core import ParameterSource

from . import activations, experiments, geometry, network
from .activations import ActivationKind
from .errors import ConeNNError, ValidationError
from .tools import ensure_dir, format_float, parse_bounds, read_config, to_csv_text, unique, write_bytes, write_csv

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENVVAR = 'CONE_NN_OUTPUT_DIR'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class KindType(click.ParamType):
    """An activation name, e.g. ``cone`` or ``parameterized-cone:2``"""
    name = 'kind'

    def convert(self, value, param, ctx):
        if isinstance(value, ActivationKind):
            return value
        try:
            return ActivationKind.parse(value)
        except ValidationError as exc:
            self.fail(str(exc), param, ctx)


class KindListType(click.ParamType):
    """Comma separated activation names"""
    name = 'kinds'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return list(value)
        names = unique(v.strip() for v in value.split(',') if v.strip())
        if not names:
            self.fail("Give at least one activation", param, ctx)
        return [KindType().convert(name, param, ctx) for name in names]


class HiddenType(click.ParamType):
    """Hidden layers as ``WIDTHxKIND`` items separated by commas, e.g. ``10xcone,4xrelu``"""
    name = 'layers'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        layers = []
        for item in value.split(','):
            match = re.fullmatch(r'\s*(\d+)x(.+?)\s*', item)
            if match is None or int(match.group(1)) < 1:
                self.fail(f"Layer {item!r} must read WIDTHxKIND, e.g. 10xcone", param, ctx)
            layers.append((int(match.group(1)), KindType().convert(match.group(2), param, ctx)))
        return tuple(layers)


class WidthListType(click.ParamType):
    """Comma separated positive layer widths, e.g. ``10,32,64``"""
    name = 'widths'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return list(value)
        try:
            widths = unique(int(v) for v in value.split(',') if v.strip())
        except ValueError:
            self.fail(f"Widths must be integers, got {value!r}", param, ctx)
        if not widths or min(widths) < 1:
            self.fail(f"Give positive widths, got {value!r}", param, ctx)
        return widths


class BoundsType(click.ParamType):
    name = 'bounds'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            return parse_bounds(value)
        except ValidationError as exc:
            self.fail(str(exc), param, ctx)


def settings(ctx):
    """
    Command parameters after applying the ``--config`` file: a value given on the command line
    (or through the environment) wins over the file, which wins over the defaults.

    Returns
    -------
    dict
        parameter values keyed by name
    """
    merged = dict(ctx.params)
    path = merged.pop('config', None)
    if not path:
        return merged
    values = read_config(path)
    params = {p.name: p for p in ctx.command.params if p.name != 'config'}
    unknown = sorted(set(values) - set(params))
    if unknown:
        raise click.UsageError(f"Unknown key(s) {', '.join(unknown)} in {path}, valid keys are: "
                               f"{', '.join(sorted(params))}", ctx=ctx)
    for key, raw in values.items():
        if ctx.get_parameter_source(key) in (ParameterSource.DEFAULT, ParameterSource.DEFAULT_MAP):
            merged[key] = params[key].type_cast_value(ctx, raw)
    return merged


def handle_errors(command):
    """Turn library and I/O errors into a `click.ClickException`: message on stderr, exit code 1"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ConeNNError, OSError) as exc:
            logger.debug("Command failed", exc_info=True)
            raise click.ClickException(str(exc)) from exc

    return wrapper


config_option = click.option('--config', type=click.Path(exists=True, dir_okay=False),
                             help='key=value file of option defaults, overridden by explicit flags.')
out_dir_option = click.option('--out-dir', envvar=OUTPUT_DIR_ENVVAR, default='results', show_default=True,
                              type=click.Path(file_okay=False),
                              help=f'Directory of the result CSV files (env: {OUTPUT_DIR_ENVVAR}).')
scheduler_option = click.option('--scheduler', type=click.Choice(['threads', 'processes', 'synchronous']),
                                default='threads', show_default=True, help='dask scheduler running the trials.')


@click.group()
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default='WARNING', show_default=True)
@click.version_option(package_name='cone_nn', message='%(version)s')
def main(log_level):
    """Cone-like activation functions: curves, decision regions and training experiments."""
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, force=True)


@main.command('curves')
@click.option('--kinds', type=KindListType(), default='relu,cone,parabolic-cone', show_default=True,
              help=f"Comma separated activations among: {', '.join(activations.valid_names())}.")
@click.option('--zmin', type=float, default=-2.0, show_default=True)
@click.option('--zmax', type=float, default=4.0, show_default=True)
@click.option('--steps', type=click.IntRange(min=2), default=601, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='CSV file, standard output by default.')
@config_option
@click.pass_context
@handle_errors
def cmd_curves(ctx, **_):
    """Activation values and first derivatives over a range of pre-activations."""
    opts = settings(ctx)
    if not opts['zmin'] < opts['zmax']:
        raise click.UsageError(f"--zmin {opts['zmin']} must be lower than --zmax {opts['zmax']}", ctx=ctx)
    z = np.linspace(opts['zmin'], opts['zmax'], opts['steps'])
    table = pd.DataFrame({'z': z})
    for kind in opts['kinds']:
        table[f"g_{kind.name}"] = activations.forward(kind, z)
        table[f"dg_{kind.name}"] = activations.derivative(kind, z)
    if opts['out']:
        write_csv(table, opts['out'])
    else:
        click.echo(to_csv_text(table), nl=False)


def _report(stats_by_name, out_dir, table=None):
    table = experiments.summary_table(stats_by_name) if table is None else table
    experiments.write_results(out_dir, stats_by_name, table)
    shown = table.copy()
    for column in experiments.STAT_COLUMNS:
        shown[column] = shown[column].map(lambda v: f"{v:.4f}")
    click.echo(shown.to_string(index=False))
    for key, stats in stats_by_name.items():
        if stats.failed_trials:
            name = ' width '.join(map(str, key)) if isinstance(key, tuple) else key
            click.echo(f"{name}: failed trial(s) {list(stats.failed_trials)} excluded", err=True)


@main.command('xor')
@click.option('--kind', type=KindType(), default='cone', show_default=True)
@click.option('--trials', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--epochs', type=click.IntRange(min=1), default=5000, show_default=True)
@click.option('--lr', type=click.FloatRange(min=0, min_open=True), default=0.05, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@out_dir_option
@scheduler_option
@config_option
@click.pass_context
@handle_errors
def cmd_xor(ctx, **_):
    """Single hidden neuron trained on the four XOR points."""
    opts = settings(ctx)
    stats = experiments.xor_experiment(opts['kind'], trials=opts['trials'], epochs=opts['epochs'], lr=opts['lr'],
                                       base_seed=opts['seed'], scheduler=opts['scheduler'])
    _report({opts['kind'].name: stats}, opts['out_dir'])


@main.command('annulus')
@click.option('--kind', type=KindType(), default='cone', show_default=True)
@click.option('--hidden', type=click.IntRange(min=1), default=2, show_default=True)
@click.option('--trials', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--epochs', type=click.IntRange(min=1), default=2000, show_default=True)
@click.option('--lr', type=click.FloatRange(min=0, min_open=True), default=0.02, show_default=True)
@click.option('--n-per-class', type=click.IntRange(min=1), default=500, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@out_dir_option
@scheduler_option
@config_option
@click.pass_context
@handle_errors
def cmd_annulus(ctx, **_):
    """One hidden layer trained on a disk surrounded by a ring."""
    opts = settings(ctx)
    stats = experiments.annulus_experiment(opts['kind'], hidden=opts['hidden'], trials=opts['trials'],
                                           epochs=opts['epochs'], lr=opts['lr'], base_seed=opts['seed'],
                                           n_per_class=opts['n_per_class'], scheduler=opts['scheduler'])
    _report({opts['kind'].name: stats}, opts['out_dir'])


@main.command('bench')
@click.option('--data-dir', type=click.Path(file_okay=False), required=False,
              help='Extracted cifar-10-batches-bin directory.')
@click.option('--kinds', type=KindListType(), default='relu,leaky-relu,cone,parabolic-cone', show_default=True)
@click.option('--widths', type=WidthListType(), default='10,32,64', show_default=True,
              help='Comma separated hidden widths.')
@click.option('--train-per-class', type=click.IntRange(min=1), default=500, show_default=True)
@click.option('--test-per-class', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--trials', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--epochs', type=click.IntRange(min=1), default=30, show_default=True)
@click.option('--lr', type=click.FloatRange(min=0, min_open=True), default=1e-4, show_default=True)
@click.option('--batch-size', type=click.IntRange(min=1), default=128, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@out_dir_option
@scheduler_option
@config_option
@click.pass_context
@handle_errors
def cmd_bench(ctx, **_):
    """Activation comparison on a capped CIFAR-10 subset (3072 -> width -> 10, for each width)."""
    opts = settings(ctx)
    if not opts['data_dir']:
        raise click.UsageError("Missing option '--data-dir'", ctx=ctx)
    if not os.path.isdir(opts['data_dir']):
        raise FileNotFoundError(f"CIFAR-10 directory not found: {opts['data_dir']}")
    spec = experiments.DatasetSpec('cifar10', path=opts['data_dir'], train_per_class=opts['train_per_class'],
                                   test_per_class=opts['test_per_class'])
    cfg = experiments.ExperimentConfig(dataset=spec, hidden=((opts['widths'][0], opts['kinds'][0]),),
                                       epochs=opts['epochs'], lr=opts['lr'], batch_size=opts['batch_size'],
                                       trials=opts['trials'], base_seed=opts['seed'], scheduler=opts['scheduler'])
    table, stats = experiments.subset_benchmark(cfg, opts['kinds'], widths=opts['widths'])
    _report(stats, opts['out_dir'], table)


def grid_frame(grid):
    """Long-format table x2, x1, label of a raster grid, row-major"""
    return grid.to_dataframe().reset_index()[['x2', 'x1', 'label']]


def grid_pgm(grid):
    """
    Binary (P5) PGM image of a raster grid, class k drawn with gray level floor(255 k / (C - 1)).
    The top image row is the largest x2.

    Returns
    -------
    bytes
    """
    class_count = int(grid.attrs['class_count'])
    labels = grid.values.astype(np.int64)
    gray = (255 * labels) // (class_count - 1) if class_count > 1 else np.zeros_like(labels)
    height, width = labels.shape
    return f"P5 {width} {height} 255\n".encode('ascii') + gray[::-1].astype(np.uint8).tobytes()


def grid_wkt(geom, bounds):
    region = geometry.positive_region(geom, bounds)
    lines = geometry.boundary_lines(geom, bounds)
    rows = [{'feature': 'positive_region', 'wkt': region.wkt}]
    rows += [{'feature': f"boundary_{index}", 'wkt': line.wkt} for index, line in enumerate(lines)]
    return pd.DataFrame(rows)


@main.command('boundary')
@click.option('--model', type=click.Path(dir_okay=False), help='Saved network with 2 inputs.')
@click.option('--analytic', help='Single neuron KIND:W1,W2:B, e.g. cone:1,0:0.')
@click.option('--bounds', type=BoundsType(), default='-1,3,-1,3', show_default=True, help='x_min,x_max,y_min,y_max')
@click.option('--resolution', type=click.IntRange(min=2), default=101, show_default=True)
@click.option('--format', 'fmt', type=click.Choice(['csv', 'pgm', 'wkt']), default='csv', show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), required=True)
@config_option
@click.pass_context
@handle_errors
def cmd_boundary(ctx, **_):
    """Decision regions of a neuron or a 2-input network sampled over a rectangle."""
    opts = settings(ctx)
    if bool(opts['model']) == bool(opts['analytic']):
        raise click.UsageError("Give exactly one of --model and --analytic", ctx=ctx)
    if opts['analytic']:
        try:
            classifier = geometry.NeuronGeometry.parse(opts['analytic'])
        except ValidationError as exc:
            raise click.BadParameter(str(exc), ctx=ctx, param_hint="'--analytic'") from None
        if classifier.dim != 2:
            raise click.BadParameter(f"A neuron with 2 weights is needed, got {classifier.dim}", ctx=ctx,
                                     param_hint="'--analytic'")
    else:
        if opts['fmt'] == 'wkt':
            raise click.UsageError("--format wkt needs an --analytic neuron", ctx=ctx)
        classifier = network.load(opts['model'])
        if classifier.input_dim != 2:
            raise ValidationError(f"{opts['model']} has {classifier.input_dim} inputs, 2 are needed")
    if opts['fmt'] == 'wkt':
        write_csv(grid_wkt(classifier, opts['bounds']), opts['out'])
        return
    grid = geometry.raster_regions(classifier, opts['bounds'], opts['resolution'])
    if opts['fmt'] == 'csv':
        write_csv(grid_frame(grid), opts['out'])
    else:
        write_bytes(grid_pgm(grid), opts['out'])


def _dataset_options(command):
    options = [
        click.option('--dataset', type=click.Choice(experiments.DATASET_KINDS), default='xor', show_default=True),
        click.option('--data-path', help='CSV file or CIFAR-10 directory.'),
        click.option('--label-column', default='label', show_default=True),
        click.option('--train-per-class', type=click.IntRange(min=1), default=500, show_default=True),
        click.option('--test-per-class', type=click.IntRange(min=1), default=100, show_default=True),
        click.option('--seed', type=int, default=0, show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _dataset_spec(ctx, opts):
    if opts['dataset'] in ('csv', 'cifar10') and not opts['data_path']:
        raise click.UsageError(f"--dataset {opts['dataset']} needs --data-path", ctx=ctx)
    return experiments.DatasetSpec(opts['dataset'], path=opts['data_path'], label_column=opts['label_column'],
                                   train_per_class=opts['train_per_class'], test_per_class=opts['test_per_class'])


@main.command('train')
@_dataset_options
@click.option('--hidden', type=HiddenType(), default='1xcone', show_default=True,
              help='Hidden layers WIDTHxKIND separated by commas.')
@click.option('--epochs', type=click.IntRange(min=1), default=30, show_default=True)
@click.option('--lr', type=click.FloatRange(min=0, min_open=True), default=1e-4, show_default=True)
@click.option('--batch-size', type=click.IntRange(min=0), default=128, show_default=True,
              help='0 trains full batch.')
@click.option('--optimizer', type=click.Choice(['adam', 'sgd']), default='adam', show_default=True)
@click.option('--cone-bias/--no-cone-bias', default=True, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), required=True, help='Model file to write.')
@click.option('--curves', type=click.Path(dir_okay=False), help='Optional CSV of the training curve.')
@config_option
@click.pass_context
@handle_errors
def cmd_train(ctx, **_):
    """Train one network and save it."""
    opts = settings(ctx)
    cfg = experiments.ExperimentConfig(dataset=_dataset_spec(ctx, opts), hidden=opts['hidden'],
                                       epochs=opts['epochs'], lr=opts['lr'], batch_size=opts['batch_size'] or None,
                                       trials=1, base_seed=opts['seed'], optimizer=opts['optimizer'],
                                       cone_bias=opts['cone_bias'])
    train, test = cfg.dataset.load(seed=cfg.base_seed)
    result = experiments.train_trial(cfg, train, test, 0, keep_network=True)
    if result.failed:
        raise ConeNNError(f"Training diverged: {result.error}")
    if opts['curves']:
        write_csv(result.curve, opts['curves'])
    parent = os.path.dirname(opts['out'])
    if parent:
        ensure_dir(parent)
    network.save(result.network, opts['out'])
    click.echo(f"test accuracy: {format_float(result.accuracy)}")


@main.command('eval')
@click.option('--model', type=click.Path(dir_okay=False), required=True)
@_dataset_options
@config_option
@click.pass_context
@handle_errors
def cmd_eval(ctx, **_):
    """Accuracy and loss of a saved network on the test set of a dataset."""
    opts = settings(ctx)
    spec = _dataset_spec(ctx, opts)
    net = network.load(opts['model'])
    _, test = spec.load(seed=opts['seed'])
    loss = net.loss(test.features, test.onehot())
    click.echo(f"samples: {test.n_samples}")
    click.echo(f"accuracy: {format_float(net.accuracy(test.features, test.labels))}")
    click.echo(f"loss: {format_float(loss)}")


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
