"""Datasets: synthetic point sets, CSV tables and CIFAR-10 binary batches.

Every random draw goes through a PCG64 generator seeded by the caller, so datasets are
reproducible across platforms.
"""
import glob
import logging
import os
import warnings
from dataclasses import dataclass

import fsspec
import numpy as np
import pandas as pd

from .errors import DomainError, FormatError, ParseError, ValidationError
from .network import one_hot
from .tensor import Matrix

logger = logging.getLogger(__name__)

CIFAR10_CLASSES = 10
CIFAR10_IMAGE_BYTES = 3 * 32 * 32
CIFAR10_RECORD_BYTES = 1 + CIFAR10_IMAGE_BYTES
CIFAR10_TRAIN_PATTERN = 'data_batch_*.bin'
CIFAR10_TEST_FILE = 'test_batch.bin'


def make_rng(seed):
    """Seeded PCG64 generator"""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Dataset:
    """
    Labelled samples, one column per sample.

    Parameters
    ----------
    features: Matrix
        shape (n_features, n_samples)
    labels: numpy.ndarray
        integer class of each sample
    class_count: int
        number of classes, every label is lower
    name: str
        free text used in logs and result files
    """
    features: Matrix
    labels: np.ndarray
    class_count: int
    name: str = ''

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).ravel()
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)
        if labels.size != self.features.cols:
            raise ValidationError(f"{labels.size} labels for {self.features.cols} samples in dataset {self.name!r}")
        if self.class_count < 1:
            raise ValidationError(f"class_count must be positive, got {self.class_count}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ValidationError(f"Labels of dataset {self.name!r} must lie in [0, {self.class_count})")
        if not self.features.is_finite():
            raise DomainError(f"Dataset {self.name!r} has non-finite features")

    @property
    def n_samples(self):
        return self.features.cols

    @property
    def n_features(self):
        return self.features.rows

    def onehot(self):
        return one_hot(self.labels, self.class_count)

    def label_counts(self):
        """
        Number of samples per class

        Returns
        -------
        numpy.ndarray
            length `class_count`
        """
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features.take_cols(indices), self.labels[indices], self.class_count,
                       self.name if name is None else name)


def make_xor():
    """
    The four XOR points (0,0), (0,1), (1,0), (1,1) with labels 0, 1, 1, 0

    Returns
    -------
    Dataset
    """
    points = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    return Dataset(Matrix(points.T), np.array([0, 1, 1, 0]), 2, 'xor')


def make_annulus(n_per_class=500, inner_radius=1.0, ring_radii=(1.5, 2.5), seed=0):
    """
    A disk (class 0) surrounded by a ring (class 1), both sampled uniformly by area.

    Parameters
    ----------
    n_per_class: int
        samples of each class
    inner_radius: float
        radius of the disk
    ring_radii: (float, float)
        inner and outer radius of the ring
    seed: int
        seed of the generator

    Returns
    -------
    Dataset
        class 0 samples first, then class 1
    """
    lo, hi = (float(r) for r in ring_radii)
    if not 0.0 < inner_radius < lo < hi:
        raise ValidationError(f"Radii must satisfy 0 < inner_radius < ring_radii[0] < ring_radii[1], "
                              f"got {inner_radius}, ({lo}, {hi})")
    if n_per_class < 1:
        raise ValidationError(f"n_per_class must be positive, got {n_per_class}")
    rng = make_rng(seed)

    def polar(radii):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=n_per_class)
        return np.vstack([radii * np.cos(angles), radii * np.sin(angles)])

    # sqrt of a uniform draw gives a density uniform in area
    disk = polar(inner_radius * np.sqrt(rng.uniform(0.0, 1.0, size=n_per_class)))
    ring = polar(np.sqrt(rng.uniform(lo ** 2, hi ** 2, size=n_per_class)))
    labels = np.repeat([0, 1], n_per_class)
    return Dataset(Matrix(np.hstack([disk, ring])), labels, 2, 'annulus')


def read_cifar10_records(raw, source=''):
    """
    Split a CIFAR-10 binary batch into labels and pixel rows

    Parameters
    ----------
    raw: bytes
        content of a batch: records of 1 label byte followed by 3072 pixel bytes
        (red, green then blue planes of 32x32)
    source: str
        name used in error messages

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        labels of shape (n,) and pixels of shape (n, 3072), both uint8
    """
    if len(raw) % CIFAR10_RECORD_BYTES != 0:
        complete = len(raw) // CIFAR10_RECORD_BYTES
        raise FormatError(f"{source}: size {len(raw)} is not a multiple of {CIFAR10_RECORD_BYTES}, "
                          f"record {complete} is truncated", offset=complete * CIFAR10_RECORD_BYTES, record=complete)
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_BYTES)
    labels = records[:, 0]
    bad = np.flatnonzero(labels >= CIFAR10_CLASSES)
    if bad.size:
        index = int(bad[0])
        raise FormatError(f"{source}: label {labels[index]} of record {index} is above 9",
                          offset=index * CIFAR10_RECORD_BYTES, record=index)
    return labels, records[:, 1:]


def _cap_per_class(labels, max_per_class):
    """Indices keeping at most `max_per_class` samples of each class, in file order"""
    if max_per_class is None:
        return np.arange(labels.size)
    keep = np.zeros(labels.size, dtype=bool)
    for label in np.unique(labels):
        keep[np.flatnonzero(labels == label)[:max_per_class]] = True
    return np.flatnonzero(keep)


def _cifar10_files(path):
    if os.path.isdir(path):
        files = sorted(glob.glob(os.path.join(path, '*.bin')))
        if not files:
            raise FileNotFoundError(f"No CIFAR-10 .bin batch in {path}")
        return files
    if not os.path.exists(path):
        raise FileNotFoundError(f"CIFAR-10 batch not found: {path}")
    return [path]


def load_cifar10_binary(path, max_per_class=None, name=None):
    """
    Load CIFAR-10 batches in the binary layout.

    Parameters
    ----------
    path: str | list of str
        a batch file, a directory of ``*.bin`` batches or a list of batch files
    max_per_class: int | None
        keep only the first samples of each class (over all files, in order)
    name: str | None
        dataset name

    Returns
    -------
    Dataset
        pixels scaled to [0, 1], one 3072-vector per sample
    """
    files = [f for p in ([path] if isinstance(path, (str, os.PathLike)) else path) for f in _cifar10_files(str(p))]
    all_labels, all_pixels = [], []
    for file in files:
        with fsspec.open(file, 'rb') as f:
            labels, pixels = read_cifar10_records(f.read(), source=file)
        all_labels.append(labels)
        all_pixels.append(pixels)
    labels = np.concatenate(all_labels)
    pixels = np.concatenate(all_pixels)
    if max_per_class is not None and max_per_class < 1:
        raise ValidationError(f"max_per_class must be positive, got {max_per_class}")
    keep = _cap_per_class(labels, max_per_class)
    features = pixels[keep].T.astype(np.float64) / 255.0
    dataset = Dataset(Matrix(features), labels[keep], CIFAR10_CLASSES, name or 'cifar10')
    logger.info("Loaded %d CIFAR-10 samples from %d file(s), label distribution %s",
                dataset.n_samples, len(files), dataset.label_counts().tolist())
    return dataset


def load_cifar10_split(directory, train_per_class=500, test_per_class=100):
    """
    Training and test subsets from an extracted ``cifar-10-batches-bin`` directory

    Parameters
    ----------
    directory: str
        holds ``data_batch_1.bin`` ... ``data_batch_5.bin`` and ``test_batch.bin``
    train_per_class: int | None
        cap of training samples per class
    test_per_class: int | None
        cap of test samples per class

    Returns
    -------
    (Dataset, Dataset)
    """
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"CIFAR-10 directory not found: {directory}")
    train_files = sorted(glob.glob(os.path.join(directory, CIFAR10_TRAIN_PATTERN)))
    if not train_files:
        raise FileNotFoundError(f"No {CIFAR10_TRAIN_PATTERN} in {directory}")
    test_file = os.path.join(directory, CIFAR10_TEST_FILE)
    if not os.path.exists(test_file):
        raise FileNotFoundError(f"CIFAR-10 test batch not found: {test_file}")
    train = load_cifar10_binary(train_files, train_per_class, name='cifar10-train')
    test = load_cifar10_binary(test_file, test_per_class, name='cifar10-test')
    return train, test


def load_csv(path, label_column):
    """
    Load a numeric CSV table with a header row.

    Parameters
    ----------
    path: str
        CSV file
    label_column: str
        column holding the class; its distinct values are mapped to 0, 1... in sorted order

    Returns
    -------
    Dataset
    """
    with fsspec.open(path, 'r') as f:
        table = pd.read_csv(f, dtype=str, keep_default_na=False)
    if label_column not in table.columns:
        raise ValidationError(f"Label column {label_column!r} not in {path}, columns are {list(table.columns)}")
    if table.empty:
        raise ValidationError(f"No samples in {path}")
    feature_columns = [c for c in table.columns if c != label_column]
    if not feature_columns:
        raise ValidationError(f"No feature column in {path}")
    numeric = table[feature_columns].apply(lambda column: pd.to_numeric(column.str.strip(), errors='coerce'))
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=np.float64, na_value=0.0))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise ParseError(f"{path}: non-numeric cell {table.iloc[row, table.columns.get_loc(feature_columns[col])]!r} "
                         f"at row {row + 1}, column {feature_columns[col]!r}", row=row + 1, column=feature_columns[col])
    labels = table[label_column].str.strip()
    numeric_labels = pd.to_numeric(labels, errors='coerce')
    if not numeric_labels.isna().any():
        labels = numeric_labels
    codes, classes = pd.factorize(labels, sort=True)
    logger.info("Loaded %d samples of %d features and %d classes from %s",
                len(table), len(feature_columns), len(classes), path)
    return Dataset(Matrix(numeric.to_numpy(dtype=np.float64).T), codes, len(classes), os.path.basename(path))


def split(dataset, fraction, seed=0):
    """
    Shuffled split into training and test sets

    Parameters
    ----------
    dataset: Dataset
    fraction: float
        share of training samples, in (0, 1)
    seed: int

    Returns
    -------
    (Dataset, Dataset)
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"Split fraction must lie in (0, 1), got {fraction}")
    if dataset.n_samples < 2:
        raise ValidationError(f"Cannot split {dataset.n_samples} sample(s)")
    order = make_rng(seed).permutation(dataset.n_samples)
    n_train = min(max(int(round(fraction * dataset.n_samples)), 1), dataset.n_samples - 1)
    return (dataset.subset(order[:n_train], f"{dataset.name}-train"),
            dataset.subset(order[n_train:], f"{dataset.name}-test"))


def normalize(train, test):
    """
    Standardize both sets with the per-feature mean and standard deviation of the training set.

    Constant features keep a standard deviation of 1 and a `RuntimeWarning` is issued; they are
    centered on their value, so the training set holds exact zeros there.

    Returns
    -------
    (Dataset, Dataset)
    """
    values = train.features.values
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    # the rounded mean of a constant row can leave a tiny nonzero std
    clamped = np.flatnonzero(np.ptp(values, axis=1) == 0)
    if clamped.size:
        message = f"Zero-variance feature(s) {clamped.tolist()} in {train.name!r}, std clamped to 1"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)
        mean[clamped] = values[clamped, :1]
        std[clamped] = 1.0

    def apply(dataset):
        return Dataset(Matrix((dataset.features.values - mean) / std), dataset.labels, dataset.class_count,
                       dataset.name)

    return apply(train), apply(test)
