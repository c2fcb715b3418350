"""Top-level package for cone_nn."""

__all__ = ['ActivationKind', 'Matrix', 'Network', 'DenseLayer', 'NeuronGeometry', 'Dataset', 'AdamState',
           'ExperimentConfig', 'DatasetSpec', 'TrialStats']

try:
    from importlib.metadata import version as _version
    __version__ = _version('cone_nn')
except Exception:  # pragma: no cover
    __version__ = '999'

from .activations import ActivationKind
from .data import Dataset
from .experiments import DatasetSpec, ExperimentConfig, TrialStats
from .geometry import NeuronGeometry
from .network import DenseLayer, Network
from .optim import AdamState
from .tensor import Matrix
