"""Three-level diagnosis cascade.

Level 1 separates normal from cancerous ROIs; only cases called
cancerous move on.  Level 2 names the lesion type (six classes), level
3 the risk (benign or malignant).  Levels 2 and 3 are trained on the
ground-truth cancerous subset, not on level 1's predictions, so the
three nets are independently reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import neuralnet
from .features import FeatureVector, fit_scale
from .neuralnet import MlpConfig, MlpModel, TrainingReport


class Lesion(Enum):
    NORM = "NORM"
    ARCH = "ARCH"
    ASYM = "ASYM"
    CALC = "CALC"
    CIRC = "CIRC"
    MISC = "MISC"
    SPIC = "SPIC"


class Severity(Enum):
    NONE = "none"
    BENIGN = "benign"
    MALIGNANT = "malignant"


# fixed one-hot orderings (abnormal lesions alphabetical, benign first)
LESION_CLASSES = (Lesion.ARCH, Lesion.ASYM, Lesion.CALC, Lesion.CIRC, Lesion.MISC, Lesion.SPIC)
SEVERITY_CLASSES = (Severity.BENIGN, Severity.MALIGNANT)
LEVEL1_CLASSES = ("normal", "cancerous")


@dataclass(frozen=True)
class CaseLabel:
    lesion: Lesion
    severity: Severity

    def __post_init__(self):
        if (self.lesion is Lesion.NORM) != (self.severity is Severity.NONE):
            raise ValueError(
                f"label invariant violated: lesion={self.lesion.value} severity={self.severity.value}"
            )

    @property
    def is_cancer(self) -> bool:
        return self.lesion is not Lesion.NORM


@dataclass(frozen=True)
class Diagnosis:
    is_cancer: bool
    lesion: Lesion | None = None
    severity: Severity | None = None

    def __post_init__(self):
        if not self.is_cancer and (self.lesion is not None or self.severity is not None):
            raise ValueError("cancer-free diagnosis cannot carry lesion or severity")
        if self.is_cancer and (self.lesion is None or self.severity is None):
            raise ValueError("cancer diagnosis needs lesion and severity")


@dataclass(frozen=True)
class CascadeModel:
    net1: MlpModel  # normal vs cancerous
    net2: MlpModel  # six lesion classes
    net3: MlpModel  # benign vs malignant
    feature_scale: float
    filter_name: str
    k: int


def _one_hot(index: int, size: int) -> np.ndarray:
    t = np.zeros(size)
    t[index] = 1.0
    return t


def train_cascade(training_set, configs) -> tuple[CascadeModel, tuple[TrainingReport, ...]]:
    """Fit the three nets from (FeatureVector, CaseLabel) pairs.

    Fits the normalization scale on the given training vectors, trains
    net1 on everything and nets 2-3 on the cancerous subset.  Returns
    the model and one TrainingReport per net.
    """
    training_set = list(training_set)
    if not training_set:
        raise ValueError("empty training set")
    cfg1, cfg2, cfg3 = configs
    if not (cfg1.input_dim == cfg2.input_dim == cfg3.input_dim):
        raise ValueError("the three nets must share input_dim")
    if cfg1.output_dim != 2 or cfg2.output_dim != 6 or cfg3.output_dim != 2:
        raise ValueError("output dims must be 2 (level 1), 6 (level 2), 2 (level 3)")

    vectors = [v for v, _ in training_set]
    labels = [lab for _, lab in training_set]
    first = vectors[0]
    scale = fit_scale(vectors)
    xs = [v.values / scale for v in vectors]

    cancer_idx = [i for i, lab in enumerate(labels) if lab.is_cancer]
    if not cancer_idx:
        raise ValueError("no cancerous training cases; nets 2 and 3 have no data")
    if len(cancer_idx) == len(labels):
        raise ValueError("no NORM training cases; net 1 cannot learn the normal class")

    p1 = [(xs[i], _one_hot(int(labels[i].is_cancer), 2)) for i in range(len(labels))]
    p2 = [(xs[i], _one_hot(LESION_CLASSES.index(labels[i].lesion), 6)) for i in cancer_idx]
    p3 = [(xs[i], _one_hot(SEVERITY_CLASSES.index(labels[i].severity), 2)) for i in cancer_idx]

    nets = []
    reports = []
    for cfg, patterns in ((cfg1, p1), (cfg2, p2), (cfg3, p3)):
        model = neuralnet.init_model(cfg)
        reports.append(neuralnet.train(model, patterns))
        nets.append(model)

    model = CascadeModel(
        net1=nets[0], net2=nets[1], net3=nets[2],
        feature_scale=scale, filter_name=first.filter_name, k=first.k,
    )
    return model, tuple(reports)


def diagnose(model: CascadeModel, v: FeatureVector) -> Diagnosis:
    """Run the cascade on a raw (unnormalized) feature vector.

    The stored scale is applied here.  A normal level-1 verdict returns
    immediately without consulting nets 2 and 3.
    """
    x = v.values / model.feature_scale
    if neuralnet.predict(model.net1, x) == 0:
        return Diagnosis(is_cancer=False)
    lesion = LESION_CLASSES[neuralnet.predict(model.net2, x)]
    severity = SEVERITY_CLASSES[neuralnet.predict(model.net3, x)]
    return Diagnosis(is_cancer=True, lesion=lesion, severity=severity)


# --- directory serialization -------------------------------------------

_MANIFEST_LINE = "mammodx-cascade 1"
_NET_FILES = ("net1.txt", "net2.txt", "net3.txt")


def save_cascade(model: CascadeModel, out_dir, master_seed: int | None = None) -> None:
    """Write the three model files plus a key=value manifest."""
    os.makedirs(out_dir, exist_ok=True)
    for fname, net in zip(_NET_FILES, (model.net1, model.net2, model.net3)):
        neuralnet.save_model(net, os.path.join(out_dir, fname), feature_scale=model.feature_scale)
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write(_MANIFEST_LINE + "\n")
        fh.write(f"filter={model.filter_name}\n")
        fh.write(f"k={model.k}\n")
        fh.write(f"scale={format(model.feature_scale, '.17g')}\n")
        fh.write(f"lesion_classes={','.join(c.value for c in LESION_CLASSES)}\n")
        fh.write(f"severity_classes={','.join(c.value for c in SEVERITY_CLASSES)}\n")
        fh.write(f"level1_classes={','.join(LEVEL1_CLASSES)}\n")
        if master_seed is not None:
            fh.write(f"master_seed={master_seed}\n")


def load_cascade(model_dir) -> CascadeModel:
    """Inverse of save_cascade; validates manifest/net consistency."""
    manifest_path = os.path.join(model_dir, "manifest.txt")
    with open(manifest_path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MANIFEST_LINE:
        raise neuralnet.ModelFormatError(f"{manifest_path}: not a {_MANIFEST_LINE!r} manifest")
    entries = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise neuralnet.ModelFormatError(f"{manifest_path}: bad manifest line {line!r}")
        entries[key] = value
    try:
        filter_name = entries["filter"]
        k = int(entries["k"])
        scale = float(entries["scale"])
    except (KeyError, ValueError) as exc:
        raise neuralnet.ModelFormatError(f"{manifest_path}: missing or bad manifest entry: {exc}") from exc
    if entries.get("lesion_classes") != ",".join(c.value for c in LESION_CLASSES):
        raise neuralnet.ModelFormatError(f"{manifest_path}: unexpected lesion class ordering")

    nets = []
    for fname in _NET_FILES:
        net, net_scale = neuralnet.load_model(os.path.join(model_dir, fname))
        if net_scale != scale:
            raise neuralnet.ModelFormatError(f"{fname}: feature scale disagrees with manifest")
        nets.append(net)
    model = CascadeModel(
        net1=nets[0], net2=nets[1], net3=nets[2],
        feature_scale=scale, filter_name=filter_name, k=k,
    )
    if model.net1.config.input_dim != 3 * k:
        raise neuralnet.ModelFormatError(f"{model_dir}: net input_dim != 3*k")
    return model
