"""Command-line interface: ``hpcond simulate | generate-data | infer | diagnose | propagate``.

Exit codes: 0 on success, 1 for input or I/O errors, 2 for numerical
failures. Every command writes into a staging directory first and publishes
its files together with ``manifest.json`` only when it has succeeded.
"""

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import plots
from .errors import InputError, NumericalError
from .experiment import generate_data, nondecreasing_after, propagate_uncertainty
from .gmrf import HyperPrior
from .io import (
    OutputDir,
    load_config,
    load_dataset,
    read_csv,
    read_record,
    save_dataset,
    sha256_file,
    write_csv,
    write_manifest,
    write_record,
)
from .rng import MAX_SEED, make_rng
from .sampler import PosteriorModel, estimators, k_quantile_bands, run_chain

log = logging.getLogger("hpcond")

# Sub-stream keys under the master seed.
DATA_STREAM = 0
CHAIN_STREAM = 1
BAND_QUANTILES = (2.5, 50.0, 97.5)
N_K_SAMPLES = 100
HIST_BINS = 30


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed {v} outside [0, 2**64 - 1]")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _pos_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", required=True, help="output directory")
    common.add_argument("--seed", metavar="U64", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--steps", metavar="N", type=_nonneg_int, help="number of sampler transitions")
    common.add_argument("--snr", metavar="X", type=_pos_float, help="signal-to-noise ratio of the data")
    common.add_argument("--no-noise", action="store_true", help="disable all noise draws")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="hpcond", description="Bayesian recovery of time-dependent thermal conductivity.")
    p.add_argument("--version", action="version", version=f"hpcond {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="solve the direct problem for the true conductivity")
    sub.add_parser("generate-data", parents=[common], help="write a synthetic noisy dataset")
    inf = sub.add_parser("infer", parents=[common], help="sample the posterior for a dataset")
    inf.add_argument("--dataset", metavar="FILE", required=True, help="dataset file from generate-data")
    dia = sub.add_parser("diagnose", parents=[common], help="plots and tables for an infer output")
    dia.add_argument("--chain", metavar="DIR", required=True, help="output directory of infer")
    sub.add_parser("propagate", parents=[common], help="forward propagation of conductivity noise")
    return p


def _write_config(out, cfg):
    with open(out.file("config.ini"), "w") as fh:
        fh.write(cfg.to_ini())


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _warn(warnings, msg):
    warnings.append(msg)
    print(f"hpcond: warning: {msg}", file=sys.stderr)


# -- commands ----------------------------------------------------------------


def cmd_simulate(args, cfg):
    from .forward import solve

    sc = cfg.scenario
    field = solve(sc.true_k, sc.pde)
    with OutputDir(args.out) as out:
        header = [f"r={r!r}" for r in field.r_grid.tolist()]
        write_csv(out.file("field.csv"), header, field.values)
        write_csv(out.file("grid_t.csv"), ["t"], field.t_grid[:, None])
        write_csv(out.file("grid_r.csv"), ["r"], field.r_grid[:, None])
        _write_json(
            out.file("metadata.json"),
            {"scenario": sc.to_dict(), "scenario_hash": sc.hash(), "shape": list(field.values.shape)},
        )
        _write_config(out, cfg)
        write_manifest(out, "simulate", cfg.to_dict(), cfg.seed)


def cmd_generate_data(args, cfg):
    seed = cfg.require_seed()
    sc = cfg.scenario
    ds = generate_data(sc, make_rng(seed, DATA_STREAM), noise=cfg.noise)
    with OutputDir(args.out) as out:
        save_dataset(out.file("dataset.json"), ds, sc, seed, cfg.noise)
        rows = [(r, t, ds.values[i, j]) for i, r in enumerate(ds.radii) for j, t in enumerate(ds.times)]
        write_csv(out.file("observations.csv"), ["radius", "time", "value"], rows)
        _write_config(out, cfg)
        write_manifest(out, "generate-data", cfg.to_dict(), seed, {"scenario_hash": sc.hash(), "sigma1": ds.sigma1})


def _model(cfg, dataset):
    sc = cfg.scenario
    return PosteriorModel(sc.pde, sc.constraints, dataset, sc.n, HyperPrior(sc.hyper_a, sc.hyper_b))


def cmd_infer(args, cfg):
    seed = cfg.require_seed()
    sc = cfg.scenario
    ds, _ = load_dataset(args.dataset, sc)
    model = _model(cfg, ds)
    warnings = []
    if cfg.steps == 0:
        _warn(warnings, "zero steps requested: the report holds the initial state only")
    record = run_chain(
        None,
        cfg.steps,
        model,
        make_rng(seed, CHAIN_STREAM),
        thinning=cfg.thinning,
        burn_in=cfg.burn_in,
        progress=lambda m: log.info("step %d / %d", m, cfg.steps),
    )
    if not np.all(np.isfinite(record.samples)):
        raise NumericalError("non-finite values in the chain")
    theta_map, theta_cm = estimators(record)
    bands = k_quantile_bands(record, BAND_QUANTILES)
    tk = record.knot_times
    k_true = sc.true_k(tk)
    k_map = np.exp(np.concatenate(([model.u0], theta_map[:-1])))
    k_cm = np.exp(np.concatenate(([model.u0], theta_cm[:-1])))
    ess = {f"u_{i}": record.ess(i - 1) for i in range(1, sc.n + 1)}
    ess["sigma2"] = record.ess(-1)
    summary = {
        "n": sc.n,
        "n_steps": record.n_steps,
        "burn_in": record.burn_in,
        "thinning": record.thinning,
        "acceptance_count": record.acceptance_count,
        "acceptance_rate": record.acceptance_rate,
        "u0": record.u0,
        "t_f": record.t_f,
        "sigma1": ds.sigma1,
        "theta_map": theta_map.tolist(),
        "theta_cm": theta_cm.tolist(),
        "ess": ess,
        "warnings": warnings,
    }
    with OutputDir(args.out) as out:
        write_record(out, record)
        write_csv(
            out.file("estimators.csv"),
            ["t", "k_true", "k_map", "k_cm"],
            np.column_stack([tk, k_true, k_map, k_cm]),
        )
        write_csv(
            out.file("bands.csv"),
            ["t"] + [f"q{q:g}" for q in BAND_QUANTILES],
            np.column_stack([tk, bands.T]),
        )
        _write_json(out.file("summary.json"), summary)
        shutil.copyfile(args.dataset, out.file("dataset.json"))
        _write_config(out, cfg)
        write_manifest(out, "infer", cfg.to_dict(), seed)
    log.info("acceptance rate %.3f", record.acceptance_rate)


def _load_chain(chain_dir):
    chain_dir = Path(chain_dir)
    cfg = load_config(chain_dir / "config.ini")
    try:
        with open(chain_dir / "summary.json") as fh:
            summary = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {chain_dir / 'summary.json'}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{chain_dir / 'summary.json'}:{exc.lineno}: {exc.msg}") from exc
    record = read_record(chain_dir, summary)
    ds, _ = load_dataset(chain_dir / "dataset.json", cfg.scenario)
    # Also validate the trace table so a damaged file is reported.
    read_csv(chain_dir / "trace.csv")
    return cfg, record, ds


def cmd_diagnose(args, cfg_cli):
    cfg, record, ds = _load_chain(args.chain)
    sc = cfg.scenario
    model = _model(cfg, ds)
    theta_map, theta_cm = estimators(record)
    post = record.post_burn_in()
    t = sc.pde.t_grid
    tk = record.knot_times

    def k_curve(theta):
        return np.exp(np.interp(t, tk, np.concatenate(([model.u0], theta[:-1]))))

    k_true = sc.true_k(t)
    k_map, k_cm = k_curve(theta_map), k_curve(theta_cm)
    pick = np.unique(np.linspace(0, len(post) - 1, min(N_K_SAMPLES, len(post))).round().astype(int))
    k_samples = np.array([k_curve(post[i]) for i in pick])
    bands = k_quantile_bands(record, BAND_QUANTILES)

    s2 = post[:, -1]
    counts, edges = np.histogram(s2, bins=HIST_BINS, density=True)

    f_map = model.forward.field(model.full(theta_map[:-1]))
    f_cm = model.forward.field(model.full(theta_cm[:-1]))
    fits = np.column_stack([t, f_map[:, 0], f_cm[:, 0], f_map[:, -1], f_cm[:, -1]])
    if not np.all(np.isfinite(fits)):
        raise NumericalError("non-finite temperatures for the point estimators")

    with OutputDir(args.out) as out:
        write_csv(
            out.file("trace_plot.csv"),
            ["step", "log_posterior", "log_posterior_pivot"],
            np.column_stack([record.steps, record.log_posterior_trace, record.pivot_trace]),
        )
        write_csv(out.file("sigma2_hist.csv"), ["left", "right", "density"], np.column_stack([edges[:-1], edges[1:], counts]))
        write_csv(
            out.file("k_panel.csv"),
            ["t", "k_true", "k_map", "k_cm"] + [f"sample_{i}" for i in pick],
            np.column_stack([t, k_true, k_map, k_cm, k_samples.T]),
        )
        write_csv(out.file("k_bands.csv"), ["t"] + [f"q{q:g}" for q in BAND_QUANTILES], np.column_stack([tk, bands.T]))
        write_csv(out.file("temperature_fits.csv"), ["t", "T0_map", "T0_cm", "TR_map", "TR_cm"], fits)
        rows = [(r, tt, ds.values[i, j]) for i, r in enumerate(ds.radii) for j, tt in enumerate(ds.times)]
        write_csv(out.file("data.csv"), ["radius", "time", "value"], rows)

        trace = (record.steps, record.log_posterior_trace, record.pivot_trace)
        kdata = dict(t=t, k_true=k_true, k_map=k_map, k_cm=k_cm, k_samples=k_samples, bands=bands, t_knots=tk)
        fig = plots.Figure(figsize=(5, 3.6))
        plots.trace_plot(fig.subplots(), *trace)
        fig.tight_layout()
        plots.save_svg(fig, out.file("trace.svg"))
        fig = plots.Figure(figsize=(5, 3.6))
        plots.sigma2_histogram(fig.subplots(), edges, counts)
        fig.tight_layout()
        plots.save_svg(fig, out.file("sigma2_hist.svg"))
        fig = plots.Figure(figsize=(5, 3.6))
        plots.k_panel(fig.subplots(), **kdata)
        fig.tight_layout()
        plots.save_svg(fig, out.file("k_panel.svg"))
        fig = plots.Figure(figsize=(10, 3.6))
        ax0, ax1 = fig.subplots(1, 2)
        for ax, col, label in ((ax0, 0, "0"), (ax1, 1, "R")):
            plots.temperature_fits(
                ax,
                t,
                [("MAP", fits[:, 1 + 2 * col], "r--"), ("CM", fits[:, 2 + 2 * col], "g-.")],
                ds.times,
                ds.values[col],
                label,
            )
        fig.tight_layout()
        plots.save_svg(fig, out.file("temperature_fits.svg"))
        plots.save_svg(plots.chain_figure(trace, (edges, counts), kdata), out.file("figure.svg"))
        _write_config(out, cfg)
        write_manifest(out, "diagnose", cfg.to_dict(), cfg.seed, {"chain_manifest_sha256": sha256_file(Path(args.chain) / "manifest.json")})


def cmd_propagate(args, cfg):
    seed = cfg.require_seed()
    sc = cfg.scenario
    warnings = []
    if cfg.ensemble_size == 1:
        _warn(warnings, "ensemble_size = 1: variance curves are identically zero")
    res = propagate_uncertainty(sc, cfg.ensemble_size, cfg.snr_list, seed, law=cfg.law, noise=cfg.noise)
    t = res.t_grid
    monotone = {}
    for j, snr in enumerate(res.snr_list):
        ok = nondecreasing_after(res.var_center[j], t)
        monotone[f"{snr:g}"] = ok
        if not ok:
            _warn(warnings, f"centre variance at SNR {snr:g} decreases after t = 50 s")
    if np.any(~np.isfinite(res.var_center)) or np.any(~np.isfinite(res.var_boundary)):
        raise NumericalError("non-finite ensemble variance")
    final = res.var_center[:, -1]
    summary = {
        "snr_list": list(res.snr_list),
        "ensemble_size": cfg.ensemble_size,
        "law": cfg.law,
        "final_var_center": final.tolist(),
        "final_var_boundary": res.var_boundary[:, -1].tolist(),
        "center_monotone_after_50s": monotone,
        "redraws": res.redraws,
        "warnings": warnings,
    }
    if len(final) >= 2 and final[-1] > 0:
        summary["final_var_center_ratio_first_to_last"] = float(final[0] / final[-1])
    header, cols = ["t"], [t]
    for j, snr in enumerate(res.snr_list):
        header += [f"var_center_snr{snr:g}", f"var_boundary_snr{snr:g}"]
        cols += [res.var_center[j], res.var_boundary[j]]
    with OutputDir(args.out) as out:
        write_csv(out.file("variance.csv"), header, np.column_stack(cols))
        kh = ["t"] + [f"snr{snr:g}_m{i}" for snr in res.snr_list for i in range(cfg.ensemble_size)]
        write_csv(out.file("k_ensemble.csv"), kh, np.column_stack([t, res.k_samples.reshape(-1, t.size).T]))
        _write_json(out.file("summary.json"), summary)
        plots.save_svg(plots.propagation_figure(res), out.file("propagation.svg"))
        _write_config(out, cfg)
        write_manifest(out, "propagate", cfg.to_dict(), seed)


COMMANDS = {
    "simulate": cmd_simulate,
    "generate-data": cmd_generate_data,
    "infer": cmd_infer,
    "diagnose": cmd_diagnose,
    "propagate": cmd_propagate,
}


def main(argv=None):
    logging.basicConfig(format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        log.setLevel(logging.INFO if args.verbose else logging.WARNING)
        cfg = load_config(args.config, seed=args.seed, steps=args.steps, snr=args.snr, no_noise=args.no_noise)
        COMMANDS[args.command](args, cfg)
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"hpcond: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, ValueError, OSError) as exc:
        print(f"hpcond: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
