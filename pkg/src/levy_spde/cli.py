"""Command line runner: ``levy-spde <subcommand> --config exp.yaml [--seed N] [--out DIR]
[--override key=value ...]``.

Exit status: 0 pass, 1 a condition fails, 2 inconclusive, 3 usage or configuration error.
Every run writes CSV artifacts and ``manifest.json`` (config hash, seeds, versions and
artifact checksums) into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .admissibility import (
    Status,
    check_beta_moment,
    check_variance,
    check_schrodinger_condition,
    check_integrable_kernel,
    check_centered_square,
    incomplete_gamma_identity,
)
from .agmon import agmon_field
from .config import ConfigError, ExperimentConfig, load_config
from .elliptic_solver import assemble
from .kernel_analysis import build_profile
from .solutions import AdmissibilityWarning, InadmissibleKernel, generalized_batch, mild_field
from .stats import (
    empirical_cf_test,
    moment_estimate,
    pairing_cf,
    stationarity_test,
    tail_index,
    variance_checks_apply,
)
from .white_noise import pair_batch, realization_seed, sample_noise, sample_noise_batch, save_binary

log = logging.getLogger("levy_spde")

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
BATCH = 1000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Run:
    """Output directory bookkeeping for one subcommand invocation."""

    def __init__(self, name: str, cfg: ExperimentConfig):
        self.name = name
        self.cfg = cfg
        self.out = Path(cfg.output)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[Path] = []
        self.seeds: list[int] = []

    def path(self, filename: str) -> Path:
        p = self.out / filename
        self.artifacts.append(p)
        return p

    def write_csv(self, filename: str, header, rows) -> Path:
        p = self.path(filename)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        return p

    def finish(self, status: int) -> int:
        versions = {"levy_spde": __version__, "python": platform.python_version()}
        for pkg in ("numpy", "scipy", "pyamg", "numba", "pydantic", "pyyaml"):
            try:
                versions[pkg] = metadata.version(pkg)
            except metadata.PackageNotFoundError:
                pass
        manifest = {
            "subcommand": self.name,
            "exit_status": status,
            "config_sha256": self.cfg.digest(),
            "config": self.cfg.experiment(),
            "base_seed": self.cfg.seed,
            "realization_seeds": self.seeds,
            "versions": versions,
            "artifacts": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(set(self.artifacts))},
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return status


def _status_exit(statuses) -> int:
    statuses = set(statuses)
    if Status.FAILS in statuses:
        return EXIT_FAIL
    if statuses & {Status.INCONCLUSIVE, Status.NOT_APPLICABLE}:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


# --- subcommands --------------------------------------------------------------------------------------------

def cmd_check(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("triplet", "check")
    t = cfg.triplet.build()
    chk = cfg.check
    needs_kernel = {"integrable", "beta", "centered"} & set(chk.conditions)
    profiles = None
    if needs_kernel:
        cfg.require("kernel")
        kernel = cfg.kernel.build()
        profiles = [build_profile(kernel, R) for R in chk.R_list]
    reports = []
    for cond in chk.conditions:
        if cond == "integrable":
            reports.append(check_integrable_kernel(profiles, t))
        elif cond == "beta":
            if chk.beta is None:
                raise ConfigError("check.beta is required for the beta condition")
            reports.append(check_beta_moment(profiles, t, chk.beta))
        elif cond == "centered":
            reports.append(check_centered_square(profiles, t))
        elif cond == "variance":
            d = chk.d if chk.d is not None else (cfg.kernel.d if cfg.kernel else None)
            if d is None:
                raise ConfigError("check.d (or a kernel) is required for the variance condition")
            reports.append(check_variance(t, d))
        elif cond == "schrodinger":
            cfg.require("grid", "agmon")
            if chk.k is None:
                raise ConfigError("check.k is required for the schrodinger condition")
            af = _agmon(cfg)
            reports.append(check_schrodinger_condition(af, t, chk.k))
    for rep in reports:
        print(rep.render())
    rows = [row for rep in reports for row in rep.csv_rows()]
    run.write_csv("check.csv", ["check", "condition", "status", "value", "bound", "witness"], rows)
    return _status_exit(e.status for rep in reports for e in rep.entries)


def cmd_simulate_noise(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("triplet", "eps", "grid", "n_realizations")
    t, grid = cfg.triplet.build(), cfg.grid.build()
    rows = []
    for i in range(cfg.n_realizations):
        seed = realization_seed(cfg.seed, i)
        noise = sample_noise(grid, t, cfg.eps, seed)
        bpath, hpath = save_binary(noise, run.path(f"noise_{i:05d}.bin"))
        run.artifacts.append(hpath)
        run.seeds.append(seed)
        inc = noise.increments
        rows.append([i, seed, repr(float(inc.sum())), repr(float(inc.min())), repr(float(inc.max()))])
    run.write_csv("noise_summary.csv", ["index", "seed", "total", "min", "max"], rows)
    print(f"wrote {cfg.n_realizations} realizations on {grid.resolution} to {run.out}")
    return EXIT_PASS


def _operator(cfg: ExperimentConfig):
    grid = cfg.grid.build()
    oc = cfg.operator
    return assemble(oc.build(grid.d), grid, pad=oc.pad, growth=oc.growth)


def _batches(cfg: ExperimentConfig, n: int, start: int = 0):
    t, grid = cfg.triplet.build(), cfg.grid.build()
    for lo in range(start, start + n, BATCH):
        m = min(BATCH, start + n - lo)
        yield lo, sample_noise_batch(grid, t, cfg.eps, cfg.seed, m, start=lo)


def cmd_solve(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("triplet", "eps", "grid", "operator", "phi", "n_realizations")
    op = _operator(cfg)
    phis = [b.build() for b in cfg.phi]
    rows = []
    for lo, inc in _batches(cfg, cfg.n_realizations):
        S = generalized_batch(inc, op, phis)
        for i, row in enumerate(S):
            seed = realization_seed(cfg.seed, lo + i)
            run.seeds.append(seed)
            rows += [[seed, f"phi{k}", repr(float(v))] for k, v in enumerate(row)]
    run.write_csv("generalized_samples.csv", ["seed", "phi_id", "value"], rows)
    print(f"wrote {len(rows)} generalized samples to {run.out}")
    return EXIT_PASS


def cmd_mild(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("triplet", "eps", "grid", "kernel", "n_realizations")
    t, grid = cfg.triplet.build(), cfg.grid.build()
    G = cfg.kernel.green()
    fields = np.empty((cfg.n_realizations,) + grid.shape)
    rows = []
    flagged = False
    centre = tuple(n // 2 for n in grid.resolution)
    for i in range(cfg.n_realizations):
        seed = realization_seed(cfg.seed, i)
        run.seeds.append(seed)
        noise = sample_noise(grid, t, cfg.eps, seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AdmissibilityWarning)
            u = mild_field(noise, G, check=(i == 0))
        for w in caught:
            print(str(w.message), file=sys.stderr)
        flagged = flagged or u.flagged
        fields[i] = u.value
        rows.append([seed, repr(float(u.value.mean())), repr(float(u.value.var())), repr(float(u.value[centre]))])
    fields.astype("<f8").tofile(run.path("mild_fields.bin"))
    header = {"shape": list(fields.shape), "dtype": "<f8", "order": "C", **grid.to_dict(), "kernel": G.name,
              "flagged": flagged}
    run.path("mild_fields.bin.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    run.write_csv("mild_summary.csv", ["seed", "mean", "variance", "centre_value"], rows)
    print(f"wrote {cfg.n_realizations} mild fields to {run.out}" + (" (flagged)" if flagged else ""))
    return EXIT_INCONCLUSIVE if flagged else EXIT_PASS


def _agmon(cfg: ExperimentConfig):
    grid = cfg.grid.build()
    ac = cfg.agmon
    V = ac.potential.build(grid.d)
    origin = None
    if ac.origin is not None:
        origin = grid.centers()[tuple(ac.origin)]
    return agmon_field(V, grid, origin, ac.stencil_radius)


def cmd_agmon(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("grid", "agmon")
    af = _agmon(cfg)
    fpath, vpath = af.to_csv(run.out / "agmon")
    run.artifacts += [fpath, vpath]
    rows = []
    for R in cfg.agmon.radii:
        v = af.ball_volume(R)
        rows.append([repr(float(R)), repr(float(v.value)), v.status.value])
    run.write_csv("agmon_balls.csv", ["R", "volume", "status"], rows)
    print(f"m at origin: {af.m_values[af.origin]:.10g}; reach of the grid: {af.radius_max:.6g}")
    return EXIT_PASS


def cmd_verify(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("triplet", "eps", "grid", "operator", "phi", "verify")
    t, grid = cfg.triplet.build(), cfg.grid.build()
    vc = cfg.verify
    op = _operator(cfg)
    n = vc.n_per_shift
    z = np.linspace(-vc.z_max, vc.z_max, vc.z_points)
    ok = True
    ecf_rows, ks_rows, tail_rows = [], [], []
    for k, bump in enumerate(cfg.phi):
        phi = bump.build()
        vals = phi(grid.centers())
        # noise pairings against the exact characteristic function
        noise_pairs = np.concatenate([pair_batch(inc, vals) for _, inc in _batches(cfg, n)])
        rep = empirical_cf_test(noise_pairs, pairing_cf(t, vals, grid.cell_volume), z)
        print(f"phi{k}: {rep.render()}")
        ok &= rep.passed
        ecf_rows += [[f"phi{k}", repr(float(zz)), repr(float(e))] for zz, e in zip(z, rep.errors)]
        # solution samples under shifts, each shift from its own seed range
        sets = {}
        for j, shift in enumerate(vc.shifts):
            moved = phi.shifted(shift)
            s = np.concatenate([generalized_batch(inc, op, [moved])[:, 0]
                                for _, inc in _batches(cfg, n, start=(j + 1) * n)])
            sets[",".join(f"{c:g}" for c in shift)] = s
        ks = stationarity_test(sets)
        print(f"phi{k}: {ks.render()}")
        ok &= ks.passed
        ks_rows += [[f"phi{k}", a, b, repr(st), repr(p)] for a, b, st, p in ks.pairs]
        base = next(iter(sets.values()))
        if variance_checks_apply(t):
            m = moment_estimate(base, 2.0, seed=cfg.seed)
            tail_rows.append([f"phi{k}", "second_moment", repr(m.value), repr(m.ci[0]), repr(m.ci[1])])
        else:
            ti = tail_index(base, 0.02, seed=cfg.seed)
            tail_rows.append([f"phi{k}", "tail_index", repr(ti.estimate), repr(ti.ci[0]), repr(ti.ci[1])])
    run.seeds = [cfg.seed]
    run.write_csv("verify_ecf.csv", ["phi_id", "z", "abs_error"], ecf_rows)
    run.write_csv("verify_ks.csv", ["phi_id", "shift_a", "shift_b", "ks_statistic", "p_value"], ks_rows)
    run.write_csv("verify_moments.csv", ["phi_id", "quantity", "estimate", "ci_low", "ci_high"], tail_rows)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_gamma_identity(cfg: ExperimentConfig, run: Run) -> int:
    cfg.require("gamma_identity")
    d, r = cfg.gamma_identity.d, cfg.gamma_identity.r
    res = incomplete_gamma_identity(d, r)
    cf, ig, q = res["closed_form"], res["incomplete_gamma"], res["quadrature"]
    print(f"closed form      {cf:.15g}\nincomplete gamma {ig:.15g}\nquadrature       {q:.15g}")
    run.write_csv("gamma_identity.csv", ["d", "r", "closed_form", "incomplete_gamma", "quadrature"],
                  [[d, repr(r), repr(cf), repr(ig), repr(q)]])
    agree = abs(cf - ig) <= 1e-10 and abs(cf - q) <= 1e-10
    return EXIT_PASS if agree else EXIT_FAIL


COMMANDS = {
    "check": cmd_check,
    "simulate-noise": cmd_simulate_noise,
    "solve": cmd_solve,
    "mild": cmd_mild,
    "agmon": cmd_agmon,
    "verify": cmd_verify,
    "gamma-identity": cmd_gamma_identity,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levy-spde", description="Lévy white noise SPDE experiments")
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a dotted config key, value parsed as YAML; repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, args.override, args.seed, args.out)
        run = Run(args.subcommand, cfg)
        status = COMMANDS[args.subcommand](cfg, run)
    except InadmissibleKernel as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_FAIL)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run.finish(status)


if __name__ == "__main__":
    sys.exit(main())
