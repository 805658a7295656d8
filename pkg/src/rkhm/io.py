"""File formats: JSONL datasets, JSON kernel specs, models and reports.

Every write goes to a temporary file in the destination directory and is
moved into place with :func:`os.replace`, so readers never observe a
partial file.
"""
import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

from .codec import decode_value, encode_value
from .exceptions import ContractError
from .experiments import SyntheticDataset
from .kernels import Kernel, kernel_from_dict
from .presets import Preset
from .solver import Model


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_file(path)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def dumps(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=True)


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, obj):
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- datasets ---------------------------------------------------------------------------

class Dataset:
    """Supervised samples split into train and test parts.

    ``x`` and ``y`` entries are real vectors or algebra values; ``extra``
    carries optional per-sample fields (such as the noisy training inputs).
    """

    def __init__(self, train_x, train_y, test_x=(), test_y=(), meta=None, train_extra=None):
        self.train_x = list(train_x)
        self.train_y = list(train_y)
        self.test_x = list(test_x)
        self.test_y = list(test_y)
        if len(self.train_x) != len(self.train_y) or len(self.test_x) != len(self.test_y):
            raise ContractError("every sample needs both x and y")
        self.meta = dict(meta or {})
        self.train_extra = list(train_extra) if train_extra is not None else None

    @property
    def vector_valued(self):
        return all(isinstance(v, np.ndarray) and v.ndim == 1 and np.isrealobj(v)
                   for v in self.train_x + self.train_y)

    def split(self, name):
        if name == "train":
            return self.train_x, self.train_y
        if name == "test":
            return self.test_x, self.test_y
        raise ContractError(f"unknown split {name!r}")

    def arrays(self, name):
        xs, ys = self.split(name)
        return np.array(xs, dtype=float), np.array(ys, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return dataset_lines(self) == dataset_lines(other)

    @classmethod
    def from_synthetic(cls, ds):
        return cls(ds.train_x, ds.train_y, ds.test_x, ds.test_y, {"seed": ds.seed, "n": ds.n},
                   train_extra=[{"x_noisy": encode_value(v)} for v in ds.train_x_noisy])

    def to_synthetic(self):
        if not self.vector_valued:
            raise ContractError("dataset is not vector valued")
        noisy = [decode_value(e["x_noisy"]) for e in self.train_extra] if self.train_extra else self.train_x
        return SyntheticDataset(int(self.meta.get("seed", -1)), len(self.train_x),
                                np.array(self.train_x, dtype=float), np.array(noisy, dtype=float),
                                np.array(self.train_y, dtype=float), np.array(self.test_x, dtype=float),
                                np.array(self.test_y, dtype=float))


def dataset_lines(ds):
    lines = []
    for split in ("train", "test"):
        xs, ys = ds.split(split)
        for i, (x, y) in enumerate(zip(xs, ys)):
            rec = {"split": split, "index": i, "x": encode_value(x), "y": encode_value(y)}
            rec.update({k: v for k, v in ds.meta.items()})
            if split == "train" and ds.train_extra:
                rec.update(ds.train_extra[i])
            lines.append(dumps(rec))
    return lines


def write_dataset(path, ds):
    if isinstance(ds, SyntheticDataset):
        ds = Dataset.from_synthetic(ds)
    return atomic_write_text(path, "".join(line + "\n" for line in dataset_lines(ds)))


def read_dataset(path):
    train, test, meta, extra = [], [], {}, []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                x, y = decode_value(rec.pop("x")), decode_value(rec.pop("y"))
                split = rec.pop("split", "train")
            except (ValueError, KeyError, TypeError) as exc:
                raise ContractError(f"{path}:{lineno}: malformed record ({exc})") from None
            rec.pop("index", None)
            extras = {k: rec.pop(k) for k in ("x_noisy",) if k in rec}
            meta.update(rec)
            if split == "train":
                train.append((x, y))
                extra.append(extras)
            elif split == "test":
                test.append((x, y))
            else:
                raise ContractError(f"{path}:{lineno}: unknown split {split!r}")
    return Dataset([x for x, _ in train], [y for _, y in train], [x for x, _ in test],
                   [y for _, y in test], meta, extra if any(extra) else None)


# -- kernels and models ------------------------------------------------------------------

def write_kernel(path, spec):
    return write_json(path, spec.to_dict())


def read_kernel(path):
    return kernel_from_dict(read_json(path))


def _encode_point(v):
    if isinstance(v, Kernel):
        raise ContractError("cannot encode a kernel as a point")
    return encode_value(v)


def model_to_dict(model, adapter=None, preset=None):
    out = {"kernel": model.spec.to_dict(), "lambda": model.lam,
           "inputs": [_encode_point(x) for x in model.inputs],
           "coeffs": [encode_value(c) for c in model.coeffs],
           "solver_used": model.solver_used, "residual": model.residual}
    if adapter is not None:
        out["adapter"] = {"input_kind": adapter.input_kind, "target_kind": adapter.target_kind}
    if preset is not None:
        out["preset"] = preset
    return out


def model_from_dict(obj):
    spec = kernel_from_dict(obj["kernel"])
    model = Model(spec, [decode_value(v) for v in obj["inputs"]], [decode_value(c) for c in obj["coeffs"]],
                  float(obj["lambda"]), obj["solver_used"], float(obj["residual"]))
    adapter = None
    if "adapter" in obj:
        a = obj["adapter"]
        adapter = Preset(obj.get("preset", "custom"), None, a["input_kind"], a["target_kind"])
    return model, adapter


def write_model(path, model, adapter=None, preset=None):
    return write_json(path, model_to_dict(model, adapter, preset))


def read_model(path):
    return model_from_dict(read_json(path))


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return atomic_write_text(path, buf.getvalue())
