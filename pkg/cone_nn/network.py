"""Dense feed-forward networks with a softmax / categorical cross-entropy head."""
import logging
import struct
from dataclasses import dataclass
from functools import partial

import fsspec
import numpy as np

from . import activations
from .activations import ActivationKind, Tag
from .errors import DimensionError, DomainError, FormatError, ValidationError
from .tensor import Matrix, add_broadcast_col, elementwise

logger = logging.getLogger(__name__)

MAGIC = b'CONE'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sII')
_LAYER_HEADER = struct.Struct('<IIBd')


@dataclass(frozen=True)
class DenseLayer:
    """
    ``a = g(W a_prev + b)``

    Parameters
    ----------
    weights: Matrix
        shape (out_dim, in_dim)
    bias: Matrix
        shape (out_dim, 1)
    kind: ActivationKind
        activation g
    """
    weights: Matrix
    bias: Matrix
    kind: ActivationKind

    def __post_init__(self):
        if self.bias.shape != (self.weights.rows, 1):
            raise DimensionError(f"Bias of shape {self.bias.shape} for weights of shape {self.weights.shape}",
                                 shapes=[self.weights.shape, self.bias.shape])
        if not (self.weights.is_finite() and self.bias.is_finite()):
            raise DomainError("Layer parameters must be finite")

    @property
    def in_dim(self):
        return self.weights.cols

    @property
    def out_dim(self):
        return self.weights.rows


@dataclass(frozen=True)
class ForwardTrace:
    """Values cached by a forward pass over a batch, one column per sample"""
    inputs: Matrix
    pre_activations: list
    activations: list
    probabilities: Matrix

    @property
    def logits(self):
        return self.activations[-1]


def softmax(logits):
    """
    Column-wise softmax, stable for logits of any finite magnitude

    Parameters
    ----------
    logits: numpy.ndarray
        shape (class_count, batch)

    Returns
    -------
    numpy.ndarray
        probabilities of the same shape, each column sums to 1
    """
    shifted = logits - logits.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=0, keepdims=True)


def log_softmax(logits):
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def one_hot(labels, class_count):
    """
    One-hot columns for integer labels

    Returns
    -------
    Matrix
        shape (class_count, len(labels))
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValidationError(f"Labels must lie in [0, {class_count}), got range [{labels.min()}, {labels.max()}]")
    onehot = np.zeros((class_count, labels.size))
    onehot[labels, np.arange(labels.size)] = 1.0
    return Matrix(onehot)


class Network:
    """
    Ordered dense layers followed by a softmax over the outputs of the last layer.

    Parameters
    ----------
    layers: list of DenseLayer
        adjacent layers must chain, the last layer has one output per class
    """

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ValidationError("A network needs at least one layer")
        for index, (previous, layer) in enumerate(zip(layers, layers[1:]), start=1):
            if previous.out_dim != layer.in_dim:
                raise DimensionError(f"Layer {index} expects {layer.in_dim} inputs but layer {index - 1} "
                                     f"produces {previous.out_dim}",
                                     shapes=[previous.weights.shape, layer.weights.shape])
        self.layers = tuple(layers)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.layers == other.layers

    __hash__ = None

    def __repr__(self):
        shape = ' -> '.join([str(self.input_dim)] + [f"{layer.out_dim}:{layer.kind.name}" for layer in self.layers])
        return f"Network({shape})"

    @classmethod
    def initialize(cls, input_dim, hidden, class_count, seed=0, cone_bias=True):
        """
        Randomly initialized network.

        Weights are drawn uniformly in ``±sqrt(6 / (fan_in + fan_out))``, biases are 0 except for
        cone-like layers when `cone_bias` is set: their bias is 1 so that pre-activations start
        around the cone peak rather than on a zero.

        Parameters
        ----------
        input_dim: int
            number of features
        hidden: list of (int, ActivationKind)
            width and activation of each hidden layer
        class_count: int
            width of the last (linear) layer
        seed: int | numpy.random.Generator
            seed of a PCG64 generator, or the generator itself
        cone_bias: bool
            start cone-like layers with a bias of 1

        Returns
        -------
        Network
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))
        widths = [int(input_dim)] + [int(width) for width, _ in hidden] + [int(class_count)]
        kinds = [kind for _, kind in hidden] + [ActivationKind(Tag.LINEAR)]
        if min(widths) < 1:
            raise ValidationError(f"Layer widths must be positive, got {widths}")
        layers = []
        for fan_in, fan_out, kind in zip(widths, widths[1:], kinds):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            bias = np.ones((fan_out, 1)) if (cone_bias and kind.is_cone) else np.zeros((fan_out, 1))
            layers.append(DenseLayer(Matrix(weights), Matrix(bias), kind))
        return cls(layers)

    def center_cone_peaks(self, batch):
        """
        Same weights, with the bias of every cone-like layer set so that the mean of `batch`
        (propagated through the earlier layers) lands on the cone peak ``z = 1``.

        Samples around the mean then fall on both sides of the peak. For centered inputs this is
        the bias of 1 of `Network.initialize`.

        Parameters
        ----------
        batch: Matrix
            shape (input_dim, batch_size), typically the training features

        Returns
        -------
        Network
        """
        self._check_batch(batch)
        layers = []
        a = batch.values
        for layer in self.layers:
            bias = layer.bias
            if layer.kind.is_cone:
                bias = Matrix(1.0 - layer.weights.values @ a.mean(axis=1, keepdims=True))
            layer = DenseLayer(layer.weights, bias, layer.kind)
            a = np.asarray(activations.forward(layer.kind, layer.weights.values @ a + bias.values))
            layers.append(layer)
        return Network(layers)

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def class_count(self):
        return self.layers[-1].out_dim

    def parameters(self):
        """
        Parameters in a fixed order: weights then bias of layer 0, then layer 1...

        Returns
        -------
        list of Matrix
        """
        params = []
        for layer in self.layers:
            params.extend([layer.weights, layer.bias])
        return params

    def with_parameters(self, params):
        """Same architecture with the parameters replaced, in the order of `Network.parameters`"""
        params = list(params)
        if len(params) != 2 * len(self.layers):
            raise ValidationError(f"Expected {2 * len(self.layers)} parameter matrices, got {len(params)}")
        return Network([DenseLayer(weights, bias, layer.kind)
                        for layer, weights, bias in zip(self.layers, params[0::2], params[1::2])])

    def _check_batch(self, batch):
        if batch.rows != self.input_dim:
            raise DimensionError(f"Batch of {batch.rows} features for a network of {self.input_dim} inputs",
                                 shapes=[batch.shape, self.layers[0].weights.shape])

    def forward(self, batch):
        """
        Forward pass

        Parameters
        ----------
        batch: Matrix
            shape (input_dim, batch_size)

        Returns
        -------
        ForwardTrace
        """
        self._check_batch(batch)
        pre_activations, outputs = [], []
        a = batch
        for layer in self.layers:
            z = add_broadcast_col(layer.weights @ a, layer.bias)
            a = elementwise(z, partial(activations.forward, layer.kind))
            pre_activations.append(z)
            outputs.append(a)
        return ForwardTrace(batch, pre_activations, outputs, Matrix(softmax(a.values)))

    def loss_and_grads(self, batch, onehot_labels):
        """
        Mean categorical cross-entropy and its exact gradient

        Parameters
        ----------
        batch: Matrix
            shape (input_dim, batch_size)
        onehot_labels: Matrix
            shape (class_count, batch_size), one-hot columns

        Returns
        -------
        (float, list of Matrix)
            loss and one gradient per parameter, in the order of `Network.parameters`
        """
        self._check_batch(batch)
        y = onehot_labels.values
        if onehot_labels.shape != (self.class_count, batch.cols):
            raise ValidationError(f"Labels of shape {onehot_labels.shape}, expected {(self.class_count, batch.cols)}")
        if not (np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=0) == 1.0).all()):
            raise ValidationError("Labels must be one-hot columns")
        trace = self.forward(batch)
        n = batch.cols
        loss = float(-(log_softmax(trace.logits.values) * y).sum() / n)
        # softmax and cross-entropy combined: dL/d(outputs) = (p - y) / n
        upstream = Matrix((trace.probabilities.values - y) / n)
        grads = [None] * (2 * len(self.layers))
        for index in reversed(range(len(self.layers))):
            layer = self.layers[index]
            slope = elementwise(trace.pre_activations[index], partial(activations.derivative, layer.kind))
            delta = upstream * slope
            previous = trace.activations[index - 1] if index > 0 else trace.inputs
            grads[2 * index] = delta @ previous.T
            grads[2 * index + 1] = delta.sum_cols()
            upstream = layer.weights.T @ delta
        return loss, grads

    def loss(self, batch, onehot_labels):
        return self.loss_and_grads(batch, onehot_labels)[0]

    def predict_classes(self, batch):
        """
        Most probable class of each sample, ties going to the lowest index

        Returns
        -------
        numpy.ndarray
            integer class per sample
        """
        return np.argmax(self.forward(batch).probabilities.values, axis=0)

    def accuracy(self, batch, labels):
        labels = np.asarray(labels)
        return float(np.mean(self.predict_classes(batch) == labels))

    def to_bytes(self):
        """
        Serialize to the little-endian model format: magic ``CONE``, u32 version, u32 layer count,
        then per layer u32 in_dim, u32 out_dim, u8 activation tag, f64 cone exponent, the weights
        row-major and the bias, all f64.

        Returns
        -------
        bytes
        """
        chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(self.layers))]
        for layer in self.layers:
            chunks.append(_LAYER_HEADER.pack(layer.in_dim, layer.out_dim, int(layer.kind.tag), layer.kind.cone_beta))
            chunks.append(layer.weights.values.astype('<f8').tobytes())
            chunks.append(layer.bias.values.astype('<f8').tobytes())
        return b''.join(chunks)

    @classmethod
    def from_bytes(cls, stream):
        """
        Inverse of `Network.to_bytes`

        Parameters
        ----------
        stream: bytes

        Returns
        -------
        Network
        """
        reader = _Reader(bytes(stream))
        magic, version, layer_count = reader.unpack(_HEADER, 'header')
        if magic != MAGIC:
            raise FormatError(f"Bad magic {magic!r} at offset 0, expected {MAGIC!r}", offset=0)
        if version != FORMAT_VERSION:
            raise FormatError(f"Unsupported format version {version} at offset 4", offset=4)
        if layer_count < 1:
            raise FormatError(f"Layer count {layer_count} at offset 8 must be positive", offset=8)
        layers = []
        for index in range(layer_count):
            tag_offset = reader.offset + 8
            in_dim, out_dim, tag, beta = reader.unpack(_LAYER_HEADER, f"header of layer {index}")
            if in_dim < 1 or out_dim < 1:
                raise FormatError(f"Layer {index} has empty shape ({out_dim}, {in_dim})", offset=tag_offset - 8)
            if tag not in {t.value for t in Tag}:
                valid = ', '.join(f"{t.value}={t.cli_name}" for t in Tag)
                raise FormatError(f"Invalid activation tag {tag} at offset {tag_offset}, valid tags are: {valid}",
                                  offset=tag_offset)
            try:
                kind = ActivationKind(Tag(tag), cone_beta=beta)
            except ValidationError:
                raise FormatError(f"Invalid cone exponent {beta} at offset {tag_offset + 1}",
                                  offset=tag_offset + 1) from None
            param_offset = reader.offset
            weights = reader.array(in_dim * out_dim, f"weights of layer {index}").reshape(out_dim, in_dim)
            bias = reader.array(out_dim, f"bias of layer {index}").reshape(out_dim, 1)
            if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
                raise FormatError(f"Non-finite parameters in layer {index} at offset {param_offset}",
                                  offset=param_offset)
            layers.append(DenseLayer(Matrix(weights), Matrix(bias), kind))
        if reader.offset != len(reader.buffer):
            raise FormatError(f"{len(reader.buffer) - reader.offset} trailing bytes at offset {reader.offset}",
                              offset=reader.offset)
        try:
            return cls(layers)
        except DimensionError as exc:
            raise FormatError(f"Inconsistent layer shapes: {exc}", offset=_HEADER.size) from None


class _Reader:
    """Cursor over a byte buffer raising FormatError on truncation"""

    def __init__(self, buffer):
        self.buffer = buffer
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.buffer):
            raise FormatError(f"Truncated stream at offset {self.offset} while reading {what}: "
                              f"{size} bytes needed, {len(self.buffer) - self.offset} left", offset=self.offset)
        chunk = self.buffer[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout, what):
        return layout.unpack(self.take(layout.size, what))

    def array(self, count, what):
        return np.frombuffer(self.take(8 * count, what), dtype='<f8').astype(np.float64)


def save(net, path):
    """
    Write a network to a model file

    Parameters
    ----------
    net: Network
    path: str
        local path or fsspec URL
    """
    with fsspec.open(path, 'wb') as f:
        f.write(net.to_bytes())
    logger.info("Saved %d-layer network to %s", len(net.layers), path)


def load(path):
    """
    Read a model file written by `save`

    Parameters
    ----------
    path: str
        local path or fsspec URL

    Returns
    -------
    Network
    """
    with fsspec.open(path, 'rb') as f:
        return Network.from_bytes(f.read())
