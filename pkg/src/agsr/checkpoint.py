"""Binary checkpoint format.

Layout (all integers little-endian u32, floats little-endian f64)::

    b"AGSR" | version | repeated: name_len, name, rows, cols, rows*cols floats

Besides the model parameters, a checkpoint carries run metadata under
``meta.*`` / ``config.*`` and the optimizer moments under ``adam.*`` so a
run can be resumed bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import model as m
from .exceptions import BadMagic, TruncatedFile, VersionMismatch
from .training import Adam, TrainConfig, TrainState

MAGIC = b"AGSR"
FORMAT_VERSION = 1


def write_arrays(path, arrays: dict) -> None:
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for name, value in arrays.items():
        value = np.atleast_2d(np.asarray(value, dtype="<f8"))
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<II", *value.shape))
        chunks.append(np.ascontiguousarray(value).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_arrays(path) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: not an AGSR checkpoint")
    if len(data) < 8:
        raise TruncatedFile(f"{path}: missing version field")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    arrays = {}
    pos = 8
    while pos < len(data):
        try:
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + name_len].decode("utf-8")
            if len(name) != name_len:
                raise TruncatedFile(f"{path}: truncated array name")
            pos += name_len
            rows, cols = struct.unpack_from("<II", data, pos)
            pos += 8
        except struct.error as exc:
            raise TruncatedFile(f"{path}: truncated header") from exc
        nbytes = rows * cols * 8
        if pos + nbytes > len(data):
            raise TruncatedFile(f"{path}: array {name!r} is truncated")
        arrays[name] = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=pos).reshape(rows, cols).astype(np.float64)
        pos += nbytes
    return arrays


def _adam_arrays(prefix: str, opt: Adam, names) -> dict:
    out = {f"{prefix}.t": np.array([[opt.t]], dtype=float)}
    for name in names:
        if name in opt.m:
            out[f"{prefix}.m.{name}"] = opt.m[name]
            out[f"{prefix}.v.{name}"] = opt.v[name]
    return out


def _restore_adam(prefix: str, opt: Adam, arrays: dict, names) -> None:
    opt.t = int(arrays[f"{prefix}.t"][0, 0])
    for name in names:
        if f"{prefix}.m.{name}" in arrays:
            opt.m[name] = arrays[f"{prefix}.m.{name}"].copy()
            opt.v[name] = arrays[f"{prefix}.v.{name}"].copy()


def save_checkpoint(state: TrainState, path) -> None:
    gen, disc, cfg = state.generator, state.discriminator, state.config
    arrays = {name: p.value for name, p in gen.params.items()}
    if disc is not None:
        arrays.update({name: p.value for name, p in disc.params.items()})
    meta = {
        "meta.n_lr": gen.n_lr, "meta.n_hr": gen.n_hr, "meta.k": gen.k,
        "meta.variant": m.VARIANTS.index(gen.variant),
        "meta.disc_hidden": cfg.disc_hidden,
        "config.epochs": cfg.epochs, "config.lr_g": cfg.lr_g, "config.lr_d": cfg.lr_d,
        "config.lambda": cfg.lam, "config.seed": cfg.seed,
        "config.adversarial": float(bool(cfg.adversarial)),
        "train.epoch": state.epoch,
    }
    arrays.update({k: np.array([[float(v)]]) for k, v in meta.items()})
    arrays.update(_adam_arrays("adam.g", state.opt_g, gen.params))
    if disc is not None:
        arrays.update(_adam_arrays("adam.d", state.opt_d, disc.params))
    write_arrays(path, arrays)


def load_checkpoint(path) -> TrainState:
    arrays = read_arrays(path)

    def scalar(name):
        return arrays[name][0, 0]

    cfg = TrainConfig(
        epochs=int(scalar("config.epochs")), lr_g=float(scalar("config.lr_g")),
        lr_d=float(scalar("config.lr_d")), lam=float(scalar("config.lambda")),
        k=int(scalar("meta.k")), seed=int(scalar("config.seed")),
        variant=m.VARIANTS[int(scalar("meta.variant"))],
        adversarial=bool(scalar("config.adversarial")),
        disc_hidden=int(scalar("meta.disc_hidden")))
    n_lr, n_hr = int(scalar("meta.n_lr")), int(scalar("meta.n_hr"))
    gen = m.Generator(n_lr, n_hr, cfg.k, cfg.variant)
    for name, p in gen.params.items():
        p.value = arrays[name].copy()
    disc = opt_d = None
    if cfg.adversarial:
        disc = m.Discriminator(n_hr, cfg.disc_hidden)
        for name, p in disc.params.items():
            p.value = arrays[name].copy()
        opt_d = Adam(cfg.lr_d)
        _restore_adam("adam.d", opt_d, arrays, disc.params)
    opt_g = Adam(cfg.lr_g)
    _restore_adam("adam.g", opt_g, arrays, gen.params)
    return TrainState(cfg, gen, disc, opt_g, opt_d, epoch=int(scalar("train.epoch")))
