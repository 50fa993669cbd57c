"""Snapshot files, CSV tables and run configuration files."""
from __future__ import annotations

import configparser
import contextlib
import csv
import os
import struct
import tempfile

import numpy as np

from . import spectral as sp
from .solver import InitialSpec, SimConfig, State
from .spectral import SCALAR, SYM, TENSOR, VECTOR, Grid

MAGIC = b"OLDB"
VERSION = 1
HEADER = struct.Struct("<4sHBBI20s")  # 32 bytes; time stored in the first 8 reserved bytes
RANK_CODES = {SCALAR: 0, VECTOR: 1, SYM: 2, TENSOR: 3}
RANK_NAMES = {v: k for k, v in RANK_CODES.items()}


class SnapshotError(ValueError):
    pass


@contextlib.contextmanager
def atomic_open(path, mode="w", **kw):
    """Write to a temporary file next to ``path`` and rename on success."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


# -- binary snapshots -----------------------------------------------------------


def encode_field(f, t=0.0):
    g = f.grid
    reserved = struct.pack("<d", float(t)) + bytes(12)
    head = HEADER.pack(MAGIC, VERSION, g.n, RANK_CODES[f.rank], g.N, reserved)
    return head + np.ascontiguousarray(sp.inverse_transform(f), dtype="<f8").tobytes()


def write_snapshot(path, fields_, t=0.0):
    """Write one or more fields as consecutive records."""
    if isinstance(fields_, sp.SpectralField):
        fields_ = [fields_]
    with atomic_open(path, "wb") as fh:
        for f in fields_:
            fh.write(encode_field(f, t))


def write_state(path, state):
    write_snapshot(path, [state.u, state.tau], state.t)


def read_snapshot(path):
    """Return the list of ``(field, t)`` records in a snapshot file."""
    with open(path, "rb") as fh:
        data = fh.read()
    out, pos = [], 0
    while pos < len(data):
        if len(data) - pos < HEADER.size:
            raise SnapshotError("truncated header")
        magic, version, n, rank, N, reserved = HEADER.unpack_from(data, pos)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotError(f"unsupported version {version}")
        if rank not in RANK_NAMES:
            raise SnapshotError(f"unknown rank code {rank}")
        try:
            grid = Grid(n, N)
        except ValueError as err:
            raise SnapshotError(str(err)) from err
        rname = RANK_NAMES[rank]
        shape = (grid.ncomp(rname),) + grid.shape
        nbytes = 8 * int(np.prod(shape))
        pos += HEADER.size
        if len(data) - pos < nbytes:
            raise SnapshotError("truncated data")
        values = np.frombuffer(data, dtype="<f8", count=nbytes // 8, offset=pos).reshape(shape)
        pos += nbytes
        t = struct.unpack_from("<d", reserved)[0]
        out.append((sp.transform(values.astype(float), grid, rname), t))
    if not out:
        raise SnapshotError("empty snapshot")
    return out


def read_state(path, project=True):
    """Read a ``(u, tau)`` state file.

    Real-space storage adds rounding noise to every Fourier mode; with
    ``project`` the noise outside the dealiased, divergence-free subspace the
    solver works in is removed again.
    """
    recs = read_snapshot(path)
    if len(recs) != 2 or recs[0][0].rank != VECTOR or recs[1][0].rank != SYM:
        raise SnapshotError("a state file holds a vector record followed by a symmetric tensor record")
    (u, t), (tau, _) = recs
    if project:
        u = sp.leray_project(sp.dealias(u))
        tau = sp.dealias(tau)
    return State(t, u, tau)


# -- CSV ----------------------------------------------------------------------------


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows, meta=None):
    """CSV with optional ``# key=value`` comment lines before the header row."""
    with atomic_open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path):
    """Return ``(meta, header, rows)``; numeric cells are converted to float."""
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = []
    for row in reader:
        conv = []
        for cell in row:
            try:
                conv.append(float(cell))
            except ValueError:
                conv.append(cell)
        rows.append(conv)
    return meta, header, rows


# -- configuration --------------------------------------------------------------

# section -> {key: (SimConfig or InitialSpec attribute, type)}
SCHEMA = {
    "grid": {"n": ("n", int), "N": ("N", int)},
    "physics": {"b": ("b", float), "mu": ("mu", float), "k1": ("k1", float), "k2": ("k2", float)},
    "integrator": {
        "dt": ("dt", float),
        "t_end": ("t_end", float),
        "scheme": ("integrator", str),
        "dealias": ("dealias", str),
        "cfl": ("cfl", float),
        "linear": ("linear", bool),
    },
    "initial": {
        "kind": ("initial.kind", str),
        "amplitude": ("initial.amplitude", float),
        "tau_amplitude": ("initial.tau_amplitude", float),
        "kmin": ("initial.kmin", float),
        "kmax": ("initial.kmax", float),
        "eps": ("initial.eps", float),
        "envelope_width": ("initial.envelope_width", float),
        "path": ("initial.path", str),
        "seed": ("seed", int),
    },
    "output": {
        "every": ("output_every", float),
        "snapshot_every": ("snapshot_every", float),
        "j0": ("j0", int),
        "p": ("p", float),
    },
}


def _parse_value(raw, typ):
    raw = raw.strip()
    if typ is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ is float:
        if "/" in raw:
            a, b = raw.split("/", 1)
            return float(a) / float(b)
        return float(raw)
    return typ(raw)


def config_from_mapping(values):
    """Build a :class:`SimConfig` from ``{"section.key": "text"}`` pairs."""
    top, init = {}, {}
    for dotted, raw in values.items():
        section, _, key = dotted.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ValueError(f"unknown config key {dotted!r}")
        attr, typ = SCHEMA[section][key]
        val = None if (raw is None or str(raw).strip().lower() == "none") else _parse_value(str(raw), typ)
        if attr.startswith("initial."):
            init[attr.split(".", 1)[1]] = val
        else:
            top[attr] = val
    init = {k: v for k, v in init.items() if v is not None or k == "path"}
    top = {k: v for k, v in top.items() if v is not None or k == "snapshot_every"}
    return SimConfig(initial=InitialSpec(**init), **top)


def read_config(path, overrides=None):
    """Read a sectioned key-value file; ``overrides`` (``section.key -> text``) win."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if path is not None:
        with open(path) as fh:
            cp.read_file(fh)
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            values[f"{section}.{key}"] = raw
    values.update(overrides or {})
    return config_from_mapping(values)


def config_to_text(cfg):
    """Inverse of :func:`read_config` (round-trips every schema field)."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (attr, _) in keys.items():
            obj, name = (cfg.initial, attr.split(".", 1)[1]) if attr.startswith("initial.") else (cfg, attr)
            val = getattr(obj, name)
            lines.append(f"{key} = {fmt(val) if isinstance(val, float) else val}")
        lines.append("")
    return "\n".join(lines)
