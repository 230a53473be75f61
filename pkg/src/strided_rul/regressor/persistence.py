"""Plain-text model files.

Every float is written with 17 significant digits, which is enough for an
exact float64 round trip, so a reloaded model predicts bit-for-bit the same.

Layout::

    strided-rul-mlp 1
    input_width <int>
    rng_seed <int>
    layers <count>
    layer <k> <width> <activation> <l1> <l2>      (one line per layer)
    W <k> <rows> <cols>
    <cols values>                                  (one line per row)
    b <k> <cols>
    <cols values>
"""
from __future__ import annotations

import os

import numpy as np

from ..errors import ParseError
from .model import LayerSpec, MlpModel

MAGIC = "strided-rul-mlp"
VERSION = 1


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def dumps(model: MlpModel) -> str:
    lines = [f"{MAGIC} {VERSION}", f"input_width {model.input_width}", f"rng_seed {model.rng_seed}",
             f"layers {len(model.layers)}"]
    for k, spec in enumerate(model.layers):
        lines.append(f"layer {k} {spec.width} {spec.activation} {_fmt([spec.l1])} {_fmt([spec.l2])}")
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W {k} {W.shape[0]} {W.shape[1]}")
        lines.extend(_fmt(row) for row in W)
        lines.append(f"b {k} {b.shape[0]}")
        lines.append(_fmt(b))
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, key: str | None = None) -> list[str]:
        if self.pos >= len(self.lines):
            raise ParseError("unexpected end of model file", self.pos + 1)
        tokens = self.lines[self.pos].split()
        self.pos += 1
        if key is not None and (not tokens or tokens[0] != key):
            raise ParseError(f"expected '{key}'", self.pos)
        return tokens

    def floats(self, n: int) -> np.ndarray:
        tokens = self.next()
        if len(tokens) != n:
            raise ParseError(f"expected {n} values, found {len(tokens)}", self.pos)
        return np.array([float(t) for t in tokens], dtype=np.float64)


def loads(text: str) -> MlpModel:
    src = _Lines(text)
    head = src.next(MAGIC)
    if len(head) != 2 or int(head[1]) != VERSION:
        raise ParseError(f"unsupported model file version {head[1:]}", 1)
    input_width = int(src.next("input_width")[1])
    rng_seed = int(src.next("rng_seed")[1])
    n_layers = int(src.next("layers")[1])
    layers = []
    for _ in range(n_layers):
        _, _, width, activation, l1, l2 = src.next("layer")
        layers.append(LayerSpec(int(width), activation, float(l1), float(l2)))
    weights, biases = [], []
    for _ in range(n_layers):
        _, _, rows, cols = src.next("W")
        weights.append(np.array([src.floats(int(cols)) for _ in range(int(rows))]).reshape(int(rows), int(cols)))
        _, _, n = src.next("b")
        biases.append(src.floats(int(n)))
    return MlpModel(input_width, layers, weights, biases, rng_seed)


def save_model(model: MlpModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load_model(path: str | os.PathLike) -> MlpModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
