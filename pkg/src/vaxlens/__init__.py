"""vaxlens: explainable tabular modelling of vaccine-hesitancy surveys.

The pipeline: a typed feature schema and validated datasets, a hybrid
categorical encoder (integer codes for ordered scales, one-hot for unordered
categories), native tree / forest / k-NN classifiers with a randomized-search
cross-validation tuner, and two model-agnostic explainers: exact/sampled
Shapley attribution and a perturbation-based dependency-graph explainer with
composite-feature and cohort modes. A synthetic survey generator with planted
ground truth provides the validation oracle throughout.

Hot tree kernels run on a compiled Cython core when available, with a
bit-identical pure-numpy fallback (see ``vaxlens._kernels.BACKEND``).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .dataset import Dataset, filter_cohort, load_csv, split_stratified, write_csv
from .encoding import EncodedMatrix, EncoderMode, FittedEncoder
from .schema import FeatureSchema, FeatureSpec, Group, Kind, parse_schema, serialize_schema

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EncodedMatrix",
    "EncoderMode",
    "FeatureSchema",
    "FeatureSpec",
    "FittedEncoder",
    "Group",
    "KERNEL_BACKEND",
    "Kind",
    "filter_cohort",
    "load_csv",
    "parse_schema",
    "serialize_schema",
    "split_stratified",
    "write_csv",
    "__version__",
]
