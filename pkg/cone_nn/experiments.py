"""Seeded multi-trial training runs and their statistics.

Trial k of an experiment uses the seed ``base_seed + k`` for both the initialization and the
shuffling, so a configuration fixes every reported number.
"""
import logging
import os
from dataclasses import dataclass, field, replace
from functools import partial

import dask
import numpy as np
import pandas as pd
from more_itertools import chunked

from . import data
from .activations import ActivationKind, Tag
from .errors import DomainError, TrainingDivergedError, ValidationError
from .network import DenseLayer, Network
from .optim import AdamState, adam_step, sgd_step
from .tensor import Matrix
from .tools import ensure_dir, write_csv

logger = logging.getLogger(__name__)

STAT_COLUMNS = ['mean', 'median', 'std_dev', 'best', 'worst']
CURVE_COLUMNS = ['epoch', 'train_loss', 'train_acc', 'test_acc']
DATASET_KINDS = ('xor', 'annulus', 'csv', 'cifar10')
# hidden widths of the subset benchmark, those of the published CIFAR-10 runs
BENCH_WIDTHS = (10, 32, 64)

# Mean test accuracy of the published full-scale CNN runs (single dense layer of the given width),
# shown next to subset benchmark results for context only.
REFERENCE_CIFAR10_ACCURACY = {
    64: {'relu': 0.7196, 'leaky-relu': 0.7247, 'cone': 0.742728, 'parabolic-cone': 0.7510},
    32: {'relu': 0.7196, 'leaky-relu': 0.7052, 'cone': 0.7291, 'parabolic-cone': 0.7439},
    10: {'relu': 0.6157, 'leaky-relu': 0.6292, 'cone': 0.6844, 'parabolic-cone': 0.6998},
}


@dataclass(frozen=True)
class DatasetSpec:
    """
    Where the samples of an experiment come from.

    Parameters
    ----------
    kind: str
        one of ``xor``, ``annulus``, ``csv``, ``cifar10``
    path: str | None
        CSV file or CIFAR-10 directory
    label_column: str
        CSV label column
    split_fraction: float
        training share of the shuffled split (annulus and CSV)
    n_per_class: int
        annulus samples per class
    inner_radius: float
        annulus disk radius
    ring_radii: (float, float)
        annulus ring radii
    train_per_class: int | None
        CIFAR-10 training cap per class
    test_per_class: int | None
        CIFAR-10 test cap per class
    """
    kind: str = 'xor'
    path: str = None
    label_column: str = 'label'
    split_fraction: float = 0.8
    n_per_class: int = 500
    inner_radius: float = 1.0
    ring_radii: tuple = (1.5, 2.5)
    train_per_class: int = 500
    test_per_class: int = 100

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValidationError(f"Unknown dataset {self.kind!r}, valid datasets are: {', '.join(DATASET_KINDS)}")
        if self.kind in ('csv', 'cifar10') and not self.path:
            raise ValidationError(f"Dataset {self.kind} needs a path")

    def load(self, seed=0):
        """
        Training and test sets. XOR trains and tests on its four points; annulus and CSV data are
        split with `seed`; CSV features are standardized with the training statistics.

        Returns
        -------
        (data.Dataset, data.Dataset)
        """
        if self.kind == 'xor':
            xor = data.make_xor()
            return xor, xor
        if self.kind == 'annulus':
            annulus = data.make_annulus(self.n_per_class, self.inner_radius, self.ring_radii, seed=seed)
            return data.split(annulus, self.split_fraction, seed=seed)
        if self.kind == 'csv':
            table = data.load_csv(self.path, self.label_column)
            return data.normalize(*data.split(table, self.split_fraction, seed=seed))
        return data.load_cifar10_split(self.path, self.train_per_class, self.test_per_class)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A multi-trial training experiment.

    Parameters
    ----------
    dataset: DatasetSpec
        samples
    hidden: tuple of (int, ActivationKind)
        width and activation of each hidden layer; a linear layer of one unit per class follows
    epochs: int
        passes over the training set
    lr: float
        learning rate
    batch_size: int | None
        samples per update, None for full-batch training
    trials: int
        independent runs
    base_seed: int
        trial k uses seed ``base_seed + k``
    output_dir: str | None
        where `write_results` puts the CSV files
    optimizer: str
        ``adam`` or ``sgd``
    cone_bias: bool
        start cone-like layers with the mean training sample on the cone peak
        (`Network.center_cone_peaks`)
    scheduler: str
        dask scheduler running the trials (``threads``, ``processes`` or ``synchronous``)
    """
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    hidden: tuple = ((10, ActivationKind(Tag.CONE)),)
    epochs: int = 30
    lr: float = 1e-4
    batch_size: int = 128
    trials: int = 5
    base_seed: int = 0
    output_dir: str = None
    optimizer: str = 'adam'
    cone_bias: bool = True
    scheduler: str = 'threads'

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple((int(w), k) for w, k in self.hidden))
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if any(width < 1 for width, _ in self.hidden):
            raise ValidationError(f"Layer widths must be positive, got {[w for w, _ in self.hidden]}")
        if not self.lr > 0:
            raise ValidationError(f"lr must be positive, got {self.lr}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValidationError(f"batch_size must be positive, got {self.batch_size}")
        if self.optimizer not in ('adam', 'sgd'):
            raise ValidationError(f"Unknown optimizer {self.optimizer!r}, valid optimizers are: adam, sgd")

    @property
    def label(self):
        """Short description of the architecture, e.g. ``2x cone``"""
        return ' / '.join(f"{width}x {kind.name}" for width, kind in self.hidden) or 'linear'


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one seeded training run"""
    trial: int
    seed: int
    accuracy: float
    curve: pd.DataFrame
    network: Network = None
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(frozen=True)
class TrialStats:
    """
    Test-accuracy statistics over the successful trials of an experiment.

    ``std_dev`` uses the population divisor N, the median of an even number of trials is the
    midpoint of the two central values.
    """
    mean: float
    median: float
    std_dev: float
    best: float
    worst: float
    accuracies: tuple
    seeds: tuple = ()
    failed_trials: tuple = ()
    records: tuple = ()
    curves: pd.DataFrame = field(default=None, repr=False, compare=False)

    @classmethod
    def from_accuracies(cls, accuracies, **extra):
        return cls(**compute_stats(accuracies), accuracies=tuple(float(a) for a in accuracies), **extra)

    def as_row(self):
        return {name: getattr(self, name) for name in STAT_COLUMNS}


def compute_stats(accuracies):
    """
    Mean, median, standard deviation (divisor N), best and worst of a list of accuracies

    Parameters
    ----------
    accuracies: list of float
        at least one value

    Returns
    -------
    dict
        keys of `STAT_COLUMNS`
    """
    values = np.asarray(accuracies, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("No accuracy to summarize")
    return {
        'mean': float(np.mean(values)),
        'median': float(np.median(values)),
        'std_dev': float(np.std(values, ddof=0)),
        'best': float(np.max(values)),
        'worst': float(np.min(values)),
    }


def train_trial(cfg, train, test, trial, keep_network=False):
    """
    Train one network of the experiment

    Parameters
    ----------
    cfg: ExperimentConfig
    train: data.Dataset
    test: data.Dataset
    trial: int
        trial index, the seed is ``cfg.base_seed + trial``
    keep_network: bool
        keep the trained network in the result

    Returns
    -------
    TrialResult
        a failed result (``error`` set) when the training diverges
    """
    seed = cfg.base_seed + trial
    rng = data.make_rng(seed)
    net = Network.initialize(train.n_features, cfg.hidden, train.class_count, seed=rng, cone_bias=cfg.cone_bias)
    if cfg.cone_bias:
        net = net.center_cone_peaks(train.features)
    state = AdamState(lr=cfg.lr)
    onehot = train.onehot()
    batch_size = cfg.batch_size or train.n_samples
    rows = []
    logger.info("Trial %d (seed %d) of %s on %s started", trial, seed, cfg.label, train.name)
    try:
        for epoch in range(1, cfg.epochs + 1):
            total = 0.0
            for indices in chunked(rng.permutation(train.n_samples), batch_size):
                loss, grads = net.loss_and_grads(train.features.take_cols(indices), onehot.take_cols(indices))
                if not np.isfinite(loss):
                    raise TrainingDivergedError(f"Non-finite loss at epoch {epoch}")
                if cfg.optimizer == 'adam':
                    params, state = adam_step(state, net.parameters(), grads)
                else:
                    params = sgd_step(net.parameters(), grads, cfg.lr)
                net = net.with_parameters(params)
                total += loss * len(indices)
            rows.append((epoch, total / train.n_samples,
                         net.accuracy(train.features, train.labels), net.accuracy(test.features, test.labels)))
            logger.debug("Trial %d epoch %d: loss %.6g", trial, epoch, rows[-1][1])
    except (TrainingDivergedError, DomainError) as exc:
        logger.warning("Trial %d (seed %d) of %s diverged: %s", trial, seed, cfg.label, exc)
        return TrialResult(trial, seed, float('nan'), pd.DataFrame(rows, columns=CURVE_COLUMNS), error=str(exc))
    accuracy = rows[-1][3]
    logger.info("Trial %d (seed %d) of %s finished, test accuracy %.4f", trial, seed, cfg.label, accuracy)
    return TrialResult(trial, seed, accuracy, pd.DataFrame(rows, columns=CURVE_COLUMNS),
                       net if keep_network else None)


def run_trials(cfg, train=None, test=None):
    """
    Run every trial of an experiment and summarize the final test accuracies.

    Trials run concurrently through dask; each owns its network, optimizer state and generator,
    so the result does not depend on scheduling. Diverged trials are left out of the statistics
    and listed in ``failed_trials``.

    Parameters
    ----------
    cfg: ExperimentConfig
    train: data.Dataset | None
        training set, loaded from ``cfg.dataset`` with ``cfg.base_seed`` when absent
    test: data.Dataset | None
        test set

    Returns
    -------
    TrialStats
    """
    if train is None or test is None:
        train, test = cfg.dataset.load(seed=cfg.base_seed)
    # pure=False: no hashing of the datasets to name the tasks
    runner = dask.delayed(partial(train_trial, cfg, train, test), pure=False)
    tasks = [runner(trial) for trial in range(cfg.trials)]
    results = dask.compute(*tasks, scheduler=cfg.scheduler)
    succeeded = [r for r in results if not r.failed]
    failed = tuple(r.trial for r in results if r.failed)
    if not succeeded:
        raise TrainingDivergedError(f"All {cfg.trials} trials of {cfg.label} diverged")
    curves = pd.concat([r.curve.assign(trial=r.trial, seed=r.seed) for r in results], ignore_index=True)
    curves = curves[['trial', 'seed'] + CURVE_COLUMNS].astype(
        {'trial': int, 'seed': int, 'epoch': int, 'train_loss': float, 'train_acc': float, 'test_acc': float})
    records = tuple((r.trial, r.seed, r.accuracy, 'failed' if r.failed else 'ok') for r in results)
    stats = TrialStats.from_accuracies([r.accuracy for r in succeeded], seeds=tuple(r.seed for r in succeeded),
                                       failed_trials=failed, records=records, curves=curves)
    logger.info("%s on %s: mean %.4f, median %.4f, std %.4f, best %.4f, worst %.4f over %d trial(s)%s",
                cfg.label, train.name, stats.mean, stats.median, stats.std_dev, stats.best, stats.worst,
                len(succeeded), f", failed trials {list(failed)}" if failed else '')
    return stats


def analytic_xor_network():
    """
    Single cone neuron solving XOR by construction: ``w = (1, 1)``, ``b = 0`` puts (0,1) and (1,0)
    on the cone peak and (0,0), (1,1) on its zeros; the head predicts class 1 when the neuron
    output exceeds 0.5.

    Returns
    -------
    Network
    """
    neuron = DenseLayer(Matrix([[1.0, 1.0]]), Matrix([[0.0]]), ActivationKind(Tag.CONE))
    head = DenseLayer(Matrix([[-1.0], [1.0]]), Matrix([[0.5], [-0.5]]), ActivationKind(Tag.LINEAR))
    return Network([neuron, head])


def xor_experiment(kind, trials=5, epochs=5000, lr=0.05, base_seed=0, scheduler='threads'):
    """
    Train ``2 -> 1 neuron of kind -> 2 classes`` on the XOR points, full batch

    Returns
    -------
    TrialStats
        accuracies over the four points
    """
    cfg = ExperimentConfig(dataset=DatasetSpec('xor'), hidden=((1, kind),), epochs=epochs, lr=lr,
                           batch_size=None, trials=trials, base_seed=base_seed, scheduler=scheduler)
    return run_trials(cfg)


def annulus_experiment(kind, hidden=2, trials=5, epochs=2000, lr=0.02, base_seed=0, n_per_class=500,
                       scheduler='threads'):
    """
    Train ``2 -> hidden neurons of kind -> 2 classes`` on the disk-and-ring dataset, full batch

    Returns
    -------
    TrialStats
    """
    if hidden < 1:
        raise ValidationError(f"hidden must be >= 1, got {hidden}")
    cfg = ExperimentConfig(dataset=DatasetSpec('annulus', n_per_class=n_per_class), hidden=((hidden, kind),),
                           epochs=epochs, lr=lr, batch_size=None, trials=trials, base_seed=base_seed,
                           scheduler=scheduler)
    return run_trials(cfg)


def subset_benchmark(cfg, kinds, widths=None):
    """
    Compare activations on a capped CIFAR-10 subset with ``3072 -> width -> 10`` networks

    Parameters
    ----------
    cfg: ExperimentConfig
        template experiment; its dataset must be ``cifar10``. Only the hidden layer changes between
        runs.
    kinds: list of ActivationKind
        activations to compare
    widths: list of int | None
        hidden widths, `BENCH_WIDTHS` by default

    Returns
    -------
    (pandas.DataFrame, dict)
        summary table (one row per width and activation) and the `TrialStats` of each run, keyed
        by ``(activation name, width)``
    """
    if cfg.dataset.kind != 'cifar10':
        raise ValidationError(f"The subset benchmark runs on cifar10, not {cfg.dataset.kind}")
    widths = BENCH_WIDTHS if widths is None else tuple(widths)
    if not widths or min(widths) < 1:
        raise ValidationError(f"Widths must be positive, got {list(widths)}")
    train, test = cfg.dataset.load(seed=cfg.base_seed)
    stats = {}
    for width in widths:
        for kind in kinds:
            stats[kind.name, width] = run_trials(replace(cfg, hidden=((width, kind),)), train, test)
    return summary_table(stats), stats


def _key_columns(key, width=None):
    """``activation`` (and ``width`` when known) columns of a result key, a name or a (name, width) pair"""
    name, width = key if isinstance(key, tuple) else (key, width)
    return {'activation': name} if width is None else {'activation': name, 'width': width}


def summary_table(stats_by_name, width=None):
    """
    One row per run: activation name, width when known, the five statistics, trial counts and,
    when known for the width, the published full-scale mean accuracy

    Parameters
    ----------
    stats_by_name: dict
        `TrialStats` keyed by activation name, or by ``(activation name, width)``
    width: int | None
        width of every run keyed by name alone

    Returns
    -------
    pandas.DataFrame
    """
    rows = []
    for key, stats in stats_by_name.items():
        row = {**_key_columns(key, width), **stats.as_row(), 'trials': len(stats.accuracies),
               'failed': len(stats.failed_trials)}
        reference = REFERENCE_CIFAR10_ACCURACY.get(row.get('width'))
        if reference:
            row['reference_mean'] = reference.get(row['activation'], float('nan'))
        rows.append(row)
    return pd.DataFrame(rows)


def write_results(output_dir, stats_by_name, table=None):
    """
    Write ``summary.csv``, ``trials.csv`` (one row per trial, failed ones flagged) and
    ``curves.csv`` (epoch, train_loss, train_acc, test_acc per trial)

    Parameters
    ----------
    output_dir: str
        created when missing
    stats_by_name: dict
        `TrialStats` keyed by activation name, or by ``(activation name, width)``; a ``width``
        column follows ``activation`` in every file for the latter
    table: pandas.DataFrame | None
        summary table, `summary_table` of `stats_by_name` by default

    Returns
    -------
    list of str
        written paths
    """
    ensure_dir(output_dir)
    table = summary_table(stats_by_name) if table is None else table
    keys = ['activation', 'width'] if any(isinstance(k, tuple) for k in stats_by_name) else ['activation']
    trials, curves = [], []
    for key, stats in stats_by_name.items():
        columns = _key_columns(key)
        for trial, seed, accuracy, status in stats.records:
            trials.append({**columns, 'trial': trial, 'seed': seed, 'accuracy': accuracy, 'status': status})
        if stats.curves is not None:
            curves.append(stats.curves.assign(**columns))
    paths = [os.path.join(output_dir, f) for f in ('summary.csv', 'trials.csv', 'curves.csv')]
    write_csv(table, paths[0])
    write_csv(pd.DataFrame(trials, columns=keys + ['trial', 'seed', 'accuracy', 'status']), paths[1])
    curve_columns = keys + ['trial', 'seed'] + CURVE_COLUMNS
    curve_frame = pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(columns=curve_columns)
    write_csv(curve_frame[curve_columns], paths[2])
    logger.info("Results written to %s", output_dir)
    return paths
