"""File formats: CSV tables, the dataset file, manifests and run configs.

Numeric tables are plain CSV with a one-line header; floats are written with
``repr`` so they round-trip exactly and reruns are byte-identical.
"""

import configparser
import csv
import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import InputError
from .experiment import PERTURBATION_LAWS, TRUTHS, Scenario
from .forward import PdeConfig, default_pde
from .rng import MAX_SEED
from .sampler import ChainRecord, Dataset

__all__ = [
    "OutputDir",
    "RunConfig",
    "load_config",
    "load_dataset",
    "read_csv",
    "read_record",
    "save_dataset",
    "sha256_file",
    "write_csv",
    "write_record",
]


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Read a numeric CSV; returns ``(header, array)``.

    Raises :class:`InputError` naming the file and line of the first
    malformed row.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}:1: empty file, expected a header line") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class OutputDir:
    """Stage outputs in a temporary directory and publish them on success.

    On any exception the staged files are removed and the target directory
    is left as it was.
    """

    def __init__(self, target):
        self.target = Path(target)
        self.path = None
        self.files = []

    def __enter__(self):
        parent = self.target.parent if str(self.target.parent) else Path(".")
        try:
            parent.mkdir(parents=True, exist_ok=True)
            self.path = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=parent))
        except OSError as exc:
            raise InputError(f"cannot create output directory under {parent}: {exc.strerror or exc}") from exc
        return self

    def file(self, name):
        self.files.append(name)
        return self.path / name

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.path, ignore_errors=True)
            return False
        try:
            self.target.mkdir(parents=True, exist_ok=True)
            for name in self.files:
                os.replace(self.path / name, self.target / name)
        except OSError as exc:
            for name in self.files:
                (self.target / name).unlink(missing_ok=True)
            raise InputError(f"cannot write to {self.target}: {exc.strerror or exc}") from exc
        finally:
            shutil.rmtree(self.path, ignore_errors=True)
        return False


def write_manifest(out, command, config, seed, extra=None):
    """Write ``manifest.json`` listing every staged file with its sha256."""
    from . import __version__

    hashes = {name: sha256_file(out.path / name) for name in sorted(out.files)}
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        "files": hashes,
    }
    if extra:
        manifest.update(extra)
    with open(out.file("manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- dataset file ------------------------------------------------------------


def save_dataset(path, dataset, scenario, seed, noise):
    doc = {
        "format": "hpcond-dataset-1",
        "scenario": scenario.to_dict(),
        "scenario_hash": scenario.hash(),
        "seed": seed,
        "noise": bool(noise),
        "sigma1": dataset.sigma1,
        "radii": list(dataset.radii),
        "times": list(dataset.times),
        "values": dataset.values.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_dataset(path, scenario=None):
    """Load a dataset file; if ``scenario`` is given its hash must match."""
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read dataset {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: malformed dataset file: {exc.msg}") from exc
    try:
        ds = Dataset(doc["radii"], doc["times"], doc["values"], doc["sigma1"])
    except KeyError as exc:
        raise InputError(f"{path}: dataset file lacks field {exc}") from None
    if scenario is not None and doc.get("scenario_hash") != scenario.hash():
        raise InputError(
            f"{path}: scenario hash {doc.get('scenario_hash')} does not match the configured scenario "
            f"{scenario.hash()}; regenerate the data or use the matching config"
        )
    return ds, doc


# -- chain record --------------------------------------------------------------


def write_record(out, record):
    n = record.n
    header = ["step", "point"] + [f"u_{i}" for i in range(1, n + 1)] + ["sigma2", "log_posterior"]
    rows = []
    for pt, (smp, lp) in enumerate(((record.samples, record.log_posterior_trace), (record.pivot_samples, record.pivot_trace))):
        for step, theta, v in zip(record.steps, smp, lp):
            rows.append([int(step), pt, *theta, v])
    rows.sort(key=lambda r: (r[0], r[1]))
    write_csv(out.file("samples.csv"), header, rows)
    tr_rows = [[int(s), a, b] for s, a, b in zip(record.steps, record.log_posterior_trace, record.pivot_trace)]
    write_csv(out.file("trace.csv"), ["step", "log_posterior", "log_posterior_pivot"], tr_rows)


def read_record(directory, summary=None):
    """Rebuild a :class:`ChainRecord` from ``samples.csv`` and ``summary.json``."""
    directory = Path(directory)
    header, data = read_csv(directory / "samples.csv")
    if header[:2] != ["step", "point"] or header[-2:] != ["sigma2", "log_posterior"]:
        raise InputError(f"{directory / 'samples.csv'}:1: unexpected header {header}")
    if summary is None:
        try:
            with open(directory / "summary.json") as fh:
                summary = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {directory / 'summary.json'}: {exc}") from exc
    p0 = data[data[:, 1] == 0]
    p1 = data[data[:, 1] == 1]
    if len(p0) == 0:
        raise InputError(f"{directory / 'samples.csv'}: no samples")
    return ChainRecord(
        samples=p0[:, 2:-1],
        log_posterior_trace=p0[:, -1],
        steps=p0[:, 0].astype(np.int64),
        acceptance_count=int(summary["acceptance_count"]),
        n_steps=int(summary["n_steps"]),
        burn_in=int(summary["burn_in"]),
        thinning=int(summary["thinning"]),
        u0=float(summary["u0"]),
        t_f=float(summary["t_f"]),
        pivot_samples=p1[:, 2:-1] if len(p1) else None,
        pivot_trace=p1[:, -1] if len(p1) else None,
    )


# -- run configuration ---------------------------------------------------------

_PDE_FIELDS = {f.name: f.type for f in fields(PdeConfig)}


@dataclass
class RunConfig:
    """Resolved settings for one CLI invocation."""

    scenario: Scenario
    seed: int = None
    steps: int = 20000
    burn_in: int = None
    thinning: int = 10
    ensemble_size: int = 100
    snr_list: tuple = (10.0, 1000.0)
    law: str = "knots"
    noise: bool = True
    extra: dict = field(default_factory=dict)

    def require_seed(self):
        if self.seed is None:
            raise InputError("a seed is required: pass --seed or set [run] seed in the config")
        return self.seed

    def to_dict(self):
        return {
            "scenario": self.scenario.to_dict(),
            "seed": self.seed,
            "steps": self.steps,
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "ensemble_size": self.ensemble_size,
            "snr_list": list(self.snr_list),
            "law": self.law,
            "noise": self.noise,
        }

    def to_ini(self):
        sc = self.scenario
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["scenario"] = {
            "name": sc.name,
            "truth": sc.truth,
            "n": str(sc.n),
            "snr": repr(float(sc.snr)),
            "r0": repr(float(sc.r0)),
        }
        cp["pde"] = {k: _fmt(v) for k, v in sc.pde.to_dict().items()}
        cp["hyperprior"] = {"a": repr(float(sc.hyper_a)), "b": repr(float(sc.hyper_b))}
        run = {"steps": str(self.steps), "thinning": str(self.thinning), "noise": str(self.noise).lower()}
        if self.seed is not None:
            run["seed"] = str(self.seed)
        if self.burn_in is not None:
            run["burn_in"] = str(self.burn_in)
        cp["run"] = run
        cp["propagate"] = {
            "ensemble_size": str(self.ensemble_size),
            "snr_list": ", ".join(repr(float(s)) for s in self.snr_list),
            "law": self.law,
        }
        from io import StringIO

        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()


def _get(section, key, conv, default):
    if section is None or key not in section:
        return default
    raw = section[key]
    try:
        return conv(raw)
    except ValueError:
        raise InputError(f"bad value for [{section.name}] {key}: {raw!r}") from None


def _bool(s):
    v = s.strip().lower()
    if v in {"1", "true", "yes", "on"}:
        return True
    if v in {"0", "false", "no", "off"}:
        return False
    raise ValueError(s)


def _seed(s):
    v = int(s, 0) if isinstance(s, str) else int(s)
    if not 0 <= v <= MAX_SEED:
        raise ValueError(s)
    return v


def load_config(path=None, seed=None, steps=None, snr=None, no_noise=False):
    """Build a :class:`RunConfig` from an INI file plus command-line overrides.

    Sections: ``[scenario]`` (name, truth, n, snr, r0), ``[pde]`` (any
    physical constant or ``Nr``/``Nt``; unspecified values come from
    :func:`~hpcond.forward.default_pde`), ``[hyperprior]`` (a, b), ``[run]`` (seed, steps, burn_in,
    thinning, noise) and ``[propagate]`` (ensemble_size, snr_list, law).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        except configparser.Error as exc:
            raise InputError(f"malformed config {path}: {exc}") from exc
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in ("scenario", "pde", "hyperprior", "run", "propagate")}
    known = set(sec)
    unknown = [s for s in cp.sections() if s not in known]
    if unknown:
        raise InputError(f"unknown config section(s): {', '.join(unknown)}")

    truth = _get(sec["scenario"], "truth", str, None) or _get(sec["scenario"], "name", str, "example1")
    if truth not in TRUTHS:
        raise InputError(f"unknown truth {truth!r}; choose from {sorted(TRUTHS)}")
    name = _get(sec["scenario"], "name", str, truth)

    overrides = {}
    if sec["pde"] is not None:
        for key, raw in sec["pde"].items():
            if key not in _PDE_FIELDS:
                raise InputError(f"unknown [pde] key {key!r}")
            conv = int if key in ("Nr", "Nt") else float
            overrides[key] = _get(sec["pde"], key, conv, None)
    pde = default_pde(**overrides)

    scenario = Scenario(
        name=name,
        truth=truth,
        pde=pde,
        n=_get(sec["scenario"], "n", int, 10),
        snr=snr if snr is not None else _get(sec["scenario"], "snr", float, 1e3),
        r0=_get(sec["scenario"], "r0", float, 0.0),
        hyper_a=_get(sec["hyperprior"], "a", float, 1.0),
        hyper_b=_get(sec["hyperprior"], "b", float, 1.0),
    )
    cfg = RunConfig(
        scenario=scenario,
        seed=seed if seed is not None else _get(sec["run"], "seed", _seed, None),
        steps=steps if steps is not None else _get(sec["run"], "steps", int, 20000),
        burn_in=_get(sec["run"], "burn_in", int, None),
        thinning=_get(sec["run"], "thinning", int, 10),
        ensemble_size=_get(sec["propagate"], "ensemble_size", int, 100),
        snr_list=_get(sec["propagate"], "snr_list", lambda s: tuple(float(x) for x in s.split(",")), (10.0, 1000.0)),
        law=_get(sec["propagate"], "law", str, "knots"),
        noise=not no_noise and _get(sec["run"], "noise", _bool, True),
    )
    if cfg.law not in PERTURBATION_LAWS:
        raise InputError(f"unknown perturbation law {cfg.law!r}; choose from {PERTURBATION_LAWS}")
    if cfg.steps < 0 or cfg.thinning < 1 or cfg.ensemble_size < 1:
        raise InputError("steps must be >= 0, thinning >= 1 and ensemble_size >= 1")
    return cfg
