"""Config-driven experiment runner emitting plot-ready CSV files.

Configs are INI-style key-value files (one section per concern); every
stochastic estimate column in the CSVs is paired with an SE or CI column,
and all numbers are written with 17 significant digits so they round-trip
exactly through double precision.  Output is reproducible bit-for-bit from
(config, master seed) regardless of worker count.
"""

import argparse
import configparser
import csv
import os
import sys

import numpy as np
from scipy import stats

from . import chain, engine, entropy, geometry, sampling, stationary
from .rng import RngStream

Z95 = 1.959963984540054  # two-sided 95% normal quantile


class ConfigError(Exception):
    """Invalid experiment configuration (exit code 1)."""


class RunAbortError(Exception):
    """Simulation aborted at runtime (exit code 2)."""


SCENARIOS = ("two_plates", "triangle", "disc_union", "custom_polygon", "engine")

# allowed keys per section; strict rejection of anything else
_SCHEMA = {
    "experiment": {"scenario", "master_seed", "output_dir", "workers"},
    "geometry": {"separation", "side", "radius", "ratio", "vertices"},
    "components": {"temperatures", "accommodations"},
    "run": {"n_steps", "burn_in", "ensemble", "n_samples", "mass"},
    "engine": {"t_h", "t_c", "alpha_h", "alpha_c", "m1", "m2", "force",
               "side", "n_collisions", "n_runs", "burn_in"},
    "sweep": {"parameter", "values"},
}

_GEOMETRY_KEYS = {
    "two_plates": {"separation"},
    "triangle": {"side"},
    "disc_union": {"radius", "ratio"},
    "custom_polygon": {"vertices"},
    "engine": set(),
}

_SWEEP_PARAMS = {
    "two_plates": {"delta_t"},
    "triangle": {"delta_t"},
    "disc_union": {"delta_t", "ratio"},
    "custom_polygon": {"delta_t"},
    "engine": {"force"},
}


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _parse_floats(text, field):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"field {field!r}: expected a list of numbers, "
                          f"got {text!r}")


class ExperimentConfig:
    """Validated experiment description parsed from an INI file."""

    def __init__(self, path, seed_override=None, workers_override=None,
                 out_override=None):
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key in parser[section]:
                if key not in _SCHEMA[section]:
                    raise ConfigError(
                        f"unknown key {key!r} in section [{section}]")
        if "experiment" not in parser:
            raise ConfigError("missing [experiment] section")
        exp = parser["experiment"]
        self.scenario = exp.get("scenario", "")
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"field 'scenario': must be one of {SCENARIOS}, "
                f"got {self.scenario!r}")
        try:
            self.master_seed = int(exp.get("master_seed", "0"))
        except ValueError:
            raise ConfigError("field 'master_seed': expected an integer")
        if seed_override is not None:
            self.master_seed = seed_override
        if self.master_seed < 0:
            raise ConfigError("field 'master_seed': must be non-negative")
        try:
            self.workers = int(exp.get("workers", "1"))
        except ValueError:
            raise ConfigError("field 'workers': expected an integer")
        if workers_override is not None:
            self.workers = workers_override
        if self.workers < 1:
            raise ConfigError("field 'workers': must be >= 1")
        self.output_dir = out_override or exp.get("output_dir", ".")

        geo = parser["geometry"] if "geometry" in parser else {}
        allowed = _GEOMETRY_KEYS[self.scenario]
        for key in geo:
            if key not in allowed:
                raise ConfigError(
                    f"geometry key {key!r} does not apply to scenario "
                    f"{self.scenario!r}")
        self.separation = float(geo.get("separation", 1.0))
        self.side = float(geo.get("side", 1.0))
        self.radius = float(geo.get("radius", 1.0))
        self.ratio = float(geo.get("ratio", 0.5))
        self.vertices = None
        if self.scenario == "custom_polygon":
            if "vertices" not in geo:
                raise ConfigError("custom_polygon needs geometry.vertices "
                                  "(semicolon-separated 'x y' pairs)")
            verts = []
            for i, pair in enumerate(geo["vertices"].split(";")):
                xy = _parse_floats(pair, "vertices")
                if len(xy) != 2:
                    raise ConfigError(
                        f"field 'vertices', entry {i}: expected 'x y'")
                verts.append(tuple(xy))
            if len(verts) < 3:
                raise ConfigError("field 'vertices': need at least 3 points")
            self.vertices = verts

        if self.scenario == "engine":
            if "components" in parser and len(parser["components"]):
                raise ConfigError(
                    "the engine scenario takes its temperatures from "
                    "[engine], not [components]")
            self.temperatures = self.accommodations = None
        else:
            if "components" not in parser:
                raise ConfigError("missing [components] section")
            comp = parser["components"]
            if "temperatures" not in comp:
                raise ConfigError("missing components.temperatures")
            self.temperatures = _parse_floats(comp["temperatures"],
                                              "temperatures")
            n = self._n_components()
            if len(self.temperatures) != n:
                raise ConfigError(
                    f"field 'temperatures': scenario {self.scenario!r} "
                    f"needs {n} values, got {len(self.temperatures)}")
            if any(t <= 0 for t in self.temperatures):
                raise ConfigError("field 'temperatures': all must be > 0")
            acc = comp.get("accommodations", " ".join(["1.0"] * n))
            self.accommodations = _parse_floats(acc, "accommodations")
            if len(self.accommodations) != n:
                raise ConfigError(
                    f"field 'accommodations': need {n} values")
            if any(not (0.0 < a <= 1.0) for a in self.accommodations):
                raise ConfigError(
                    "field 'accommodations': all must be in (0, 1]")

        run_sec = parser["run"] if "run" in parser else {}
        self.n_steps = int(run_sec.get("n_steps", 100000))
        self.burn_in = int(run_sec.get("burn_in", 1000))
        self.ensemble = int(run_sec.get("ensemble", 1))
        self.n_samples = int(run_sec.get("n_samples", 100000))
        self.mass = float(run_sec.get("mass", 1.0))
        if self.n_steps <= self.burn_in or self.burn_in < 0:
            raise ConfigError("need run.n_steps > run.burn_in >= 0")
        if self.ensemble < 1:
            raise ConfigError("field 'ensemble': must be >= 1")
        if self.mass <= 0:
            raise ConfigError("field 'mass': must be > 0")

        eng = parser["engine"] if "engine" in parser else {}
        if self.scenario == "engine":
            try:
                self.engine_params = engine.EngineParams(
                    T_h=float(eng.get("t_h", 50.0)),
                    T_c=float(eng.get("t_c", 1.0)),
                    alpha_h=float(eng.get("alpha_h", 1.0)),
                    alpha_c=float(eng.get("alpha_c", 1.0)),
                    m1=float(eng.get("m1", 1000.0)),
                    m2=float(eng.get("m2", 1.0)),
                    force=float(eng.get("force", 0.0)),
                    side=float(eng.get("side", 1.0)),
                )
            except ValueError as exc:
                raise ConfigError(f"section [engine]: {exc}")
            self.n_collisions = int(eng.get("n_collisions", 1000))
            self.n_runs = int(eng.get("n_runs", 200))
            self.engine_burn_in = int(eng.get("burn_in", 100))
            if self.n_collisions < 2 or self.n_runs < 1:
                raise ConfigError("need engine.n_collisions >= 2 and "
                                  "engine.n_runs >= 1")
            if not (0 <= self.engine_burn_in < self.n_collisions - 1):
                raise ConfigError("engine.burn_in out of range")
        elif "engine" in parser and len(eng):
            raise ConfigError(
                f"section [engine] does not apply to scenario "
                f"{self.scenario!r}")

        self.sweep_parameter = None
        self.sweep_values = None
        if "sweep" in parser and len(parser["sweep"]):
            sw = parser["sweep"]
            if "parameter" not in sw or "values" not in sw:
                raise ConfigError("[sweep] needs both 'parameter' and "
                                  "'values'")
            param = sw["parameter"].lower()
            if param not in _SWEEP_PARAMS[self.scenario]:
                raise ConfigError(
                    f"sweep parameter {param!r} does not exist in scenario "
                    f"{self.scenario!r} (allowed: "
                    f"{sorted(_SWEEP_PARAMS[self.scenario])})")
            values = _parse_floats(sw["values"], "values")
            if not values:
                raise ConfigError("field 'values': empty sweep")
            if not all(np.isfinite(values)):
                raise ConfigError("field 'values': sweep values must be "
                                  "finite")
            self.sweep_parameter = param
            self.sweep_values = values

    def _n_components(self):
        if self.scenario == "two_plates":
            return 2
        if self.scenario == "triangle":
            return 3
        if self.scenario == "disc_union":
            return 2
        return len(self.vertices)

    def table(self):
        if self.scenario == "engine":
            raise ConfigError("the engine scenario has no chain table")
        if self.scenario == "two_plates":
            return geometry.two_plates(self.temperatures, self.accommodations,
                                       self.separation)
        if self.scenario == "triangle":
            return geometry.equilateral_triangle(
                self.temperatures, self.accommodations, self.side)
        if self.scenario == "disc_union":
            return geometry.disc_union(self.radius, self.ratio,
                                       self.temperatures, self.accommodations)
        return geometry.polygon(self.vertices, self.temperatures,
                                self.accommodations)

    def with_sweep_value(self, value):
        """A copy of this config with the sweep parameter applied."""
        import copy
        out = copy.copy(self)
        out.sweep_parameter = None
        out.sweep_values = None
        if self.sweep_parameter == "ratio":
            if not (0.0 < value < 1.0):
                raise ConfigError(f"sweep ratio {value} outside (0, 1)")
            out.ratio = value
        elif self.sweep_parameter == "delta_t":
            base = min(self.temperatures)
            temps = list(self.temperatures)
            temps[-1] = base + value
            if temps[-1] <= 0:
                raise ConfigError(f"sweep delta_t {value} makes a "
                                  "non-positive temperature")
            out.temperatures = temps
        elif self.sweep_parameter == "force":
            import dataclasses
            out.engine_params = dataclasses.replace(self.engine_params,
                                                    force=value)
        return out


# ---------------------------------------------------------------------------
# CSV helpers

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v)
                             for v in row])


def _outdir(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


# ---------------------------------------------------------------------------
# subcommand bodies (each returns a list of "name: value" summary lines)

def _chain_worker(arg):
    cfg_table, n_steps, burn_in, mass, seed, index, t_init = arg
    rng = RngStream(seed, index)
    gen = rng.generator()
    x0 = chain.sample_initial(cfg_table, t_init, gen, mass)
    return chain.run(cfg_table, sampling.ReflectionLaw(), x0, n_steps,
                     burn_in=burn_in, rng=gen, mass=mass)


def _pool_map(fn, args, workers):
    if workers > 1 and len(args) > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            return pool.map(fn, args)
    return [fn(a) for a in args]


def _run_ensemble_summary(cfg, table):
    t_init = float(np.mean(cfg.temperatures))
    args = [(table, cfg.n_steps, cfg.burn_in, cfg.mass, cfg.master_seed,
             i, t_init) for i in range(cfg.ensemble)]
    parts = _pool_map(_chain_worker, args, cfg.workers)
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def cmd_simulate(cfg):
    table = cfg.table()
    summary = _run_ensemble_summary(cfg, table)
    if summary.steps == 0:
        raise RunAbortError("all trajectories aborted before burn-in")
    out = _outdir(cfg)
    visits = summary.visits
    mean_e = summary.mean_post_energy()
    var_e = summary.var_post_energy()
    se_e = np.sqrt(np.maximum(var_e, 0.0) / np.maximum(visits, 1))
    mt = [sampling.moment_table(t, table.dimension, cfg.mass).energy_coefficient
          for t in cfg.temperatures]
    rows = []
    for i in range(table.n_components):
        rows.append([i, visits[i], visits[i] / max(summary.steps, 1),
                     mean_e[i], se_e[i],
                     mean_e[i] / cfg.temperatures[i],
                     mt[i]])
    path = os.path.join(out, "simulate.csv")
    _write_csv(path, ["component", "visits", "visit_fraction",
                      "mean_post_energy", "se_mean_post_energy",
                      "energy_over_temperature",
                      "single_wall_energy_coefficient"], rows)
    lines = [f"wrote: {path}",
             f"collisions kept: {summary.steps}",
             f"aborted trajectories: {summary.aborted_trajectories}",
             f"reflection resamples: {summary.resamples}"]
    return lines


def cmd_transition_matrix(cfg):
    table = cfg.table()
    tm = stationary.estimate_transition_matrix(
        table, cfg.n_samples, RngStream(cfg.master_seed, 0))
    out = _outdir(cfg)
    rows = []
    for i in range(tm.n):
        for j in range(tm.n):
            rows.append([i, j, tm.p[i, j], tm.se[i, j], tm.counts[i, j]])
    path = os.path.join(out, "transition_matrix.csv")
    _write_csv(path, ["from", "to", "p", "se", "count"], rows)
    return [f"wrote: {path}",
            f"samples: {tm.n_samples}  discarded: {tm.discarded}"]


def _mixture_for(cfg, table, use_estimate):
    if use_estimate:
        tm = stationary.estimate_transition_matrix(
            table, cfg.n_samples, RngStream(cfg.master_seed, 0))
    else:
        try:
            tm = stationary.exact_transition_matrix(table)
        except ValueError:
            tm = stationary.estimate_transition_matrix(
                table, cfg.n_samples, RngStream(cfg.master_seed, 0))
    return tm, stationary.stationary_mixture(table, tm)


def cmd_stationary(cfg):
    table = cfg.table()
    use_estimate = cfg.scenario in ("disc_union", "custom_polygon")
    tm, mix = _mixture_for(cfg, table, use_estimate)
    out = _outdir(cfg)
    rows = []
    cond = mix.conditional_weights()
    for i in range(table.n_components):
        for k in range(table.n_components):
            rows.append([i, k, mix.temperatures[k], mix.c[i, k], cond[i, k]])
    path = os.path.join(out, "stationary.csv")
    _write_csv(path, ["component", "source", "source_temperature",
                      "weight", "conditional_weight"], rows)
    mass_defect = float(np.abs(mix.c.sum(axis=1) - mix.abar).max())
    return [f"wrote: {path}",
            f"transition matrix: "
            f"{'estimated' if tm.n_samples else 'closed form'}",
            f"restricted-mass defect: {mass_defect:.3e}"]


def cmd_entropy(cfg):
    table = cfg.table()
    use_estimate = cfg.scenario in ("disc_union", "custom_polygon")
    tm, mix = _mixture_for(cfg, table, use_estimate)
    report = entropy.entropy_production(tm, table.components, mix,
                                        mass=cfg.mass)
    out = _outdir(cfg)
    se = report.se if report.se is not None else 0.0
    rows = [["e_p", "", report.e_p, se, report.e_p_reference_constant]]
    for i in range(table.n_components):
        rows.append([f"heat_{i}", i, report.heats[i], "", ""])
    for i in range(table.n_components):
        for j in range(table.n_components):
            if i != j:
                rows.append([f"pair_flux_{i}_{j}", f"{i}->{j}",
                             report.pair_fluxes[i, j], "", ""])
    path = os.path.join(out, "entropy.csv")
    _write_csv(path, ["quantity", "index", "value", "se_delta_method",
                      "value_reference_moment_convention"], rows)
    lines = [f"wrote: {path}",
             f"e_p = {_fmt(report.e_p)} (SE {_fmt(se)})"]
    if cfg.scenario == "two_plates":
        cf = entropy.two_plates_entropy(*cfg.accommodations,
                                        *cfg.temperatures, mass=cfg.mass)
        lines.append(f"closed form e_p = {_fmt(cf.e_p)}")
    return lines


def cmd_engine(cfg):
    if cfg.scenario != "engine":
        raise ConfigError("the engine subcommand needs scenario = engine")
    out = _outdir(cfg)
    rec = engine.engine_run(cfg.engine_params, cfg.n_collisions,
                            RngStream(cfg.master_seed, 0))
    if len(rec) <= cfg.engine_burn_in + 1:
        raise RunAbortError("representative engine trajectory stopped at a "
                            f"boundary corner after {len(rec)} collisions")
    rows = [[k, rec.t[k], rec.x_w[k], rec.w[k], rec.q_h[k], rec.q_c[k],
             rec.work[k], rec.energy[k], int(rec.wall[k])]
            for k in range(len(rec))]
    traj_path = os.path.join(out, "trajectory.csv")
    _write_csv(traj_path, ["collision", "t", "x_w", "w", "q_h", "q_c",
                           "work", "energy", "wall"], rows)

    ens = engine.run_ensemble(cfg.engine_params, cfg.n_runs, cfg.n_collisions,
                              cfg.master_seed, burn_in=cfg.engine_burn_in,
                              workers=cfg.workers)
    rows = []
    n_good = 0
    for key in ("drift", "displacement", "eps", "eps_bar", "q_h", "q_c",
                "work"):
        vals = ens[key][np.isfinite(ens[key])]
        n_good = max(n_good, len(vals))
        if len(vals) == 0:
            raise RunAbortError("every engine run stopped before burn-in")
        mean = float(vals.mean())
        se = (float(vals.std(ddof=1) / np.sqrt(len(vals)))
              if len(vals) > 1 else 0.0)
        rows.append([key, mean, se, mean - Z95 * se, mean + Z95 * se])
    ens_path = os.path.join(out, "ensemble.csv")
    _write_csv(ens_path, ["quantity", "mean", "se", "ci95_low", "ci95_high"],
               rows)
    n_trunc = int(ens["aborted"].sum())
    return [f"wrote: {traj_path}",
            f"wrote: {ens_path}",
            f"runs: {cfg.n_runs}  truncated at a corner: {n_trunc}",
            f"first law holds on trajectory: {rec.check_first_law()}"]


def cmd_sweep(cfg):
    if cfg.sweep_parameter is None:
        raise ConfigError("sweep needs a [sweep] section")
    out = _outdir(cfg)
    param = cfg.sweep_parameter
    rows = []
    lines = []
    for index, value in enumerate(cfg.sweep_values):
        sub = cfg.with_sweep_value(value)
        sub.master_seed = cfg.master_seed ^ index
        if cfg.scenario == "engine":
            ens = engine.run_ensemble(sub.engine_params, sub.n_runs,
                                      sub.n_collisions, sub.master_seed,
                                      burn_in=sub.engine_burn_in,
                                      workers=sub.workers)
            row = [value]
            for key in ("drift", "eps", "eps_bar"):
                vals = ens[key][np.isfinite(ens[key])]
                if len(vals) == 0:
                    raise RunAbortError(
                        f"all runs stopped before burn-in at {param} = "
                        f"{value}")
                mean = float(vals.mean())
                se = (float(vals.std(ddof=1) / np.sqrt(len(vals)))
                      if len(vals) > 1 else 0.0)
                row += [mean, se, mean - Z95 * se, mean + Z95 * se]
            rows.append(row)
        else:
            table = sub.table()
            use_estimate = sub.scenario in ("disc_union", "custom_polygon")
            tm, mix = _mixture_for(sub, table, use_estimate)
            report = entropy.entropy_production(tm, table.components, mix,
                                                mass=sub.mass)
            se = report.se if report.se is not None else 0.0
            rows.append([value, report.e_p, se,
                         report.e_p - Z95 * se, report.e_p + Z95 * se,
                         report.e_p_reference_constant])
    if cfg.scenario == "engine":
        header = [param]
        for key in ("drift", "eps", "eps_bar"):
            header += [f"{key}_mean", f"{key}_se",
                       f"{key}_ci95_low", f"{key}_ci95_high"]
    else:
        header = [param, "e_p", "se_delta_method", "ci95_low", "ci95_high",
                  "e_p_reference_moment_convention"]
    path = os.path.join(out, "sweep.csv")
    _write_csv(path, header, rows)
    lines.insert(0, f"wrote: {path} ({len(rows)} rows)")
    return lines


def cmd_selftest(cfg):
    """Reciprocity and sampler goodness-of-fit battery."""
    lines = []
    failures = 0
    gen = RngStream(cfg.master_seed, 0).generator()
    for dim in (2, 3):
        comp = geometry.BoundaryComponent(
            0, geometry.Plate(1, 1.0), temperature=1.7, accommodation=0.6)
        disc, ok = sampling.reciprocity_test(comp, dim, 100000, gen)
        lines.append(f"reciprocity dim={dim}: max discrepancy "
                     f"{disc:.3f} -> {'pass' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    for dim in (2, 3):
        for temp in (0.5, 1.0, 3.0):
            v = sampling.sample_maxwellian(temp, dim, gen, size=100000)
            speeds = np.linalg.norm(v, axis=1)
            ks = stats.kstest(speeds, lambda r: sampling.speed_cdf(
                r, temp, dim))
            ok = ks.pvalue > 0.001
            lines.append(f"speed-law KS dim={dim} T={temp}: p={ks.pvalue:.4f}"
                         f" -> {'pass' if ok else 'FAIL'}")
            failures += 0 if ok else 1
    for dim in (2, 3):
        u = sampling.sample_knudsen_cosine(dim, gen, size=100000)
        if dim == 2:
            # the tangential component sin(theta) is uniform on (-1, 1)
            ks = stats.kstest(u[:, 0], stats.uniform(loc=-1.0, scale=2.0).cdf)
        else:
            # cos(theta)^2 is uniform on (0, 1)
            ks = stats.kstest(u[:, -1] ** 2, stats.uniform.cdf)
        ok = ks.pvalue > 0.001
        lines.append(f"cosine-law KS dim={dim}: p={ks.pvalue:.4f} -> "
                     f"{'pass' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    if failures:
        raise RunAbortError(f"selftest: {failures} check(s) failed\n"
                            + "\n".join(lines))
    return lines


_COMMANDS = {
    "simulate": cmd_simulate,
    "transition-matrix": cmd_transition_matrix,
    "stationary": cmd_stationary,
    "entropy": cmd_entropy,
    "engine": cmd_engine,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="thermobilliards",
        description="Random-billiard thermodynamics experiment runner.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config master seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker pool size (output-invariant)")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig(args.config, seed_override=args.seed,
                               workers_override=args.workers,
                               out_override=args.out)
        lines = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except RunAbortError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 2
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
