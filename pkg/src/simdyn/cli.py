"""Configuration-driven experiment runner.

Every subcommand writes a JSON summary, CSV series where applicable, and a
run manifest (config echo, versions, seed, wall time). Result files embed
the config hash and are byte-identical for a fixed config+seed under any
worker count; only the manifest carries timing.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import SimdynError
from .function_space import PotentialSpec, grid_nodes
from .statistics import (
    clt_experiment,
    correlation_series,
    decay_rate_fit,
    ergodic_average_check,
    lil_diagnostic,
    normalized_sums,
    variance_along_word,
)
from .recurrence import CountQuery, asymptotic_fit, count_periodic
from .transfer import (
    build_collective_operator,
    leading_spectral_data,
    normalize,
    pressure_derivative_check,
    solve_kappa,
    theta_contraction_report,
    verify_spectrum_match,
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, header, rows, config_hash: str):
    lines = [f"# config_sha256={config_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict, config_hash: str):
    payload = dict(payload)
    payload["config_sha256"] = config_hash
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _plotdata(path: Path, triples, config_hash: str):
    _write_csv(path, ["series", "x", "y"], triples, config_hash)


class Runner:
    def __init__(self, cfg: ExperimentConfig, outdir: Path, plots: bool, emit_plot_data: bool):
        self.cfg = cfg
        self.outdir = outdir
        self.plots = plots
        self.emit_plot_data = emit_plot_data
        self.hash = cfg.sha256()
        self.family = cfg.family()
        ex = cfg.data["experiment"]
        self.q = ex["q"]
        self.interp = ex["interpolation"]
        self.seed = ex["seed"]
        self.workers = ex["workers"]
        self.files = []

    def path(self, name: str) -> Path:
        p = self.outdir / name
        self.files.append(p)
        return p

    def plot_path(self, name: str) -> Path:
        d = self.outdir / "plots"
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    # ------------------------------------------------------------------

    def spectral(self, per_map: bool = False):
        f = self.cfg.potential()
        M = build_collective_operator(self.family, f, self.q, self.interp)
        s = leading_spectral_data(M)
        summary = {
            "rho": s.rho,
            "pressure": float(np.log(s.rho)),
            "gap": s.gap,
            "residual": s.residual,
            "q": self.q,
            "potential": f.describe(),
            "degrees": list(self.family.degrees),
            "invariance_defect": s.invariance_defect,
            "method": s.method,
        }
        if per_map:
            from .transfer import build_per_map_operator

            blocks = []
            for d in range(1, len(self.family) + 1):
                Md = build_per_map_operator(
                    self.family[d], f, self.q, self.interp, family=self.family, map_index=d
                )
                sd = leading_spectral_data(Md)
                blocks.append({"map": d, "rho": sd.rho, "gap": sd.gap, "residual": sd.residual})
            summary["per_map"] = blocks
        theta = self.cfg.get("experiment", "theta")
        if theta is not None:
            summary["theta_contraction"] = theta_contraction_report(
                self.family, f, theta, self.cfg.get("experiment", "alpha"), s.rho
            )
        xs = grid_nodes(self.q)
        rows = list(zip(xs, s.phi.values, s.nu))
        return summary, rows, s

    def run_pressure(self):
        summary, rows, _ = self.spectral()
        _write_json(self.path("pressure_summary.json"), summary, self.hash)
        _write_csv(self.path("pressure_series.csv"), ["x", "phi", "nu"], rows, self.hash)
        return summary

    def run_spectrum(self):
        summary, rows, s = self.spectral(per_map=self.cfg.get("spectrum", "per_map"))
        _write_json(self.path("spectrum_summary.json"), summary, self.hash)
        _write_csv(self.path("spectrum_series.csv"), ["x", "phi", "nu"], rows, self.hash)
        if self.plots:
            from . import plotting

            xs = grid_nodes(self.q)
            plotting.plot_eigen(xs, s.phi.values, s.densities(), self.plot_path("spectrum_eigen.png"))
        if self.emit_plot_data:
            xs = grid_nodes(self.q)
            triples = [("phi", x, v) for x, v in zip(xs, s.phi.values)]
            triples += [("nu_density", x, v) for x, v in zip(xs, s.densities())]
            _plotdata(self.path("spectrum_plotdata.csv"), triples, self.hash)
        return summary

    def run_normalize_check(self):
        out = []
        for text in self.cfg.get("normalize", "potentials"):
            f = PotentialSpec.parse(text)
            M = build_collective_operator(self.family, f, self.q, self.interp)
            s = leading_spectral_data(M, tol=1e-12, max_iter=20000)
            Mn = normalize(M, s)
            ones = np.ones(Mn.dim)
            defect = float(np.abs(Mn.matrix @ ones - s.rho * ones).max())
            out.append({"potential": text, "rho": s.rho, "sup_defect": defect})
        summary = {"checks": out, "q": self.q, "degrees": list(self.family.degrees)}
        _write_json(self.path("normalize-check_summary.json"), summary, self.hash)
        _write_csv(
            self.path("normalize-check_series.csv"),
            ["potential", "rho", "sup_defect"],
            [(c["potential"], c["rho"], c["sup_defect"]) for c in out],
            self.hash,
        )
        return summary

    def run_skew_match(self):
        f = self.cfg.potential()
        depth = self.cfg.get("skew", "depth")
        report = verify_spectrum_match(self.family, f, depth, self.q, interp=self.interp)
        report.update({"depth": depth, "q": self.q, "potential": f.describe()})
        _write_json(self.path("skew-match_summary.json"), report, self.hash)
        return report

    def run_average(self):
        f_text = self.cfg.get("average", "f")
        f = self.cfg.potential(f_text)
        bits = self.cfg.get("average", "x_bits")
        rng = np.random.Generator(np.random.Philox(key=np.array([self.seed, 0], dtype=np.uint64)))
        num = int.from_bytes(rng.bytes(bits // 8), "big") | 1
        x = Fraction(num % (2**bits), 2**bits)
        n_max = self.cfg.get("average", "n_max")
        ns = sorted(set(list(range(1, 9)) + [int(v) for v in np.geomspace(8, n_max, 12)])) if n_max > 8 else list(range(1, n_max + 1))
        rows = ergodic_average_check(self.family, f, x, ns)
        csv_rows = [(n, "" if b is None else b, k, t) for n, b, k, t in rows]
        _write_csv(self.path("average_series.csv"), ["n", "brute", "koopman", "target"], csv_rows, self.hash)
        last = rows[-1]
        summary = {
            "x_bits": bits,
            "n_max": n_max,
            "final_n": last[0],
            "final_average": last[2],
            "target": last[3],
            "final_gap": abs(last[2] - last[3]),
            "potential": f.describe(),
        }
        _write_json(self.path("average_summary.json"), summary, self.hash)
        if self.plots:
            from . import plotting

            plotting.plot_average([r[0] for r in rows], [r[2] for r in rows], last[3], self.plot_path("average.png"))
        if self.emit_plot_data:
            _plotdata(
                self.path("average_plotdata.csv"),
                [("koopman", r[0], r[2]) for r in rows],
                self.hash,
            )
        return summary

    def run_correlations(self):
        g_text = self.cfg.get("correlations", "g") or "centered"
        h_text = self.cfg.get("correlations", "h") or g_text
        g = PotentialSpec.parse(g_text).to_grid(self.q, self.interp, self.family)
        h = PotentialSpec.parse(h_text).to_grid(self.q, self.interp, self.family)
        base = self.cfg.word(self.cfg.get("correlations", "word"))
        n_max = self.cfg.get("correlations", "n_max")
        series = correlation_series(
            self.family, base, g, h, range(0, n_max + 1), g_label=g_text, h_label=h_text
        )
        rows = [
            (n, v, float(np.log10(abs(v))) if abs(v) > 0 else float("-inf"))
            for n, v in series.entries
        ]
        _write_csv(self.path("correlations_series.csv"), ["n", "value", "log10_abs"], rows, self.hash)
        try:
            theta_hat, c_hat, r2 = decay_rate_fit(series)
            fit = {"theta_hat": theta_hat, "c_hat": c_hat, "r2": r2}
        except SimdynError as exc:
            fit = {"error": str(exc)}
        summary = {"g": g_text, "h": h_text, "word": base.serialize(), "n_max": n_max, "fit": fit}
        _write_json(self.path("correlations_summary.json"), summary, self.hash)
        if self.plots and "theta_hat" in fit:
            from . import plotting

            ns = [n for n, v in series.entries if abs(v) > 1e-14]
            vs = [v for _, v in series.entries if abs(v) > 1e-14]
            plotting.plot_decay(ns, vs, fit["theta_hat"], fit["c_hat"], self.plot_path("correlations_decay.png"))
        if self.emit_plot_data:
            _plotdata(
                self.path("correlations_plotdata.csv"),
                [("correlation", n, v) for n, v in series.entries],
                self.hash,
            )
        return summary

    def run_variance(self):
        g_text = self.cfg.get("variance", "g") or "centered"
        g = PotentialSpec.parse(g_text).to_grid(self.q, self.interp, self.family)
        word = self.cfg.word(self.cfg.get("variance", "word"))
        n = self.cfg.get("variance", "n")
        res = variance_along_word(self.family, g, word, n)
        if n <= 32:
            checkpoints = list(range(1, n + 1))
        else:
            checkpoints = sorted(set([1, 2, 4] + [int(v) for v in np.geomspace(8, n, 24)]))
        rows = []
        for m in checkpoints:
            r = variance_along_word(self.family, g, word, m, agree_tol=None)
            rows.append((m, r.green_kubo, "" if r.direct is None else r.direct))
        _write_csv(self.path("variance_series.csv"), ["n", "green_kubo", "direct"], rows, self.hash)
        summary = {
            "g": g_text,
            "word": word.serialize(),
            "n": n,
            "value": res.value,
            "direct": res.direct,
            "green_kubo": res.green_kubo,
            "agreement": None if res.direct is None else res.agreement(),
            "truncated_blocks": res.truncated_blocks,
            "total_blocks": res.total_blocks,
        }
        _write_json(self.path("variance_summary.json"), summary, self.hash)
        return summary

    def run_clt(self):
        g = PotentialSpec.parse("centered").to_grid(self.q, self.interp, self.family)
        n = self.cfg.get("clt", "n")
        samples = self.cfg.get("clt", "samples")
        policy = self.cfg.get("clt", "word_policy")
        word = self.cfg.word(self.cfg.get("clt", "word"))
        report = clt_experiment(
            self.family, g, n, samples, self.seed, word_policy=policy, word=word, workers=self.workers
        )
        summary = report.as_dict()
        summary["config_echo"] = self.cfg.canonical_json()
        _write_json(self.path("clt_summary.json"), summary, self.hash)
        z = np.sort(
            normalized_sums(
                self.family, g, n, samples, self.seed, word_policy=policy, word=word, workers=self.workers
            )
        )
        edges = np.linspace(z[0], z[-1], 81)
        hist, _ = np.histogram(z, bins=edges)
        rows = [(float(edges[i]), float(edges[i + 1]), int(hist[i])) for i in range(len(hist))]
        _write_csv(self.path("clt_series.csv"), ["bin_lo", "bin_hi", "count"], rows, self.hash)
        if self.plots:
            from . import plotting

            plotting.plot_clt_hist(z, float(np.sqrt(report.variance_estimate)), self.plot_path("clt_hist.png"))
        if self.emit_plot_data:
            _plotdata(
                self.path("clt_plotdata.csv"),
                [("hist_count", 0.5 * (r[0] + r[1]), r[2]) for r in rows],
                self.hash,
            )
        return summary

    def run_lil(self):
        g = PotentialSpec.parse("centered").to_grid(self.q, self.interp, self.family)
        n_max = self.cfg.get("lil", "n_max")
        samples = self.cfg.get("lil", "samples")
        n0 = self.cfg.get("lil", "n0")
        word = self.cfg.word(self.cfg.get("lil", "word"))
        summary_obj = lil_diagnostic(
            self.family, g, n_max, samples, self.seed, word=word, n0=n0, workers=self.workers
        )
        summary = summary_obj.as_dict()
        summary["config_echo"] = self.cfg.canonical_json()
        summary["note"] = "diagnostic only; the limsup claim is asymptotic and not decidable at desk scale"
        _write_json(self.path("lil_summary.json"), summary, self.hash)
        return summary

    def run_kappa(self):
        f = self.cfg.potential()
        lo = self.cfg.get("kappa", "lo")
        hi = self.cfg.get("kappa", "hi")
        tol = self.cfg.get("kappa", "tol")
        qk = self.cfg.get("kappa", "q") or self.q
        sol = solve_kappa(self.family, f, (lo, hi), tol=tol, q=qk)
        summary = {
            "kappa": sol.kappa,
            "pressure_at_kappa": sol.pressure_at_kappa,
            "integral_residual": sol.integral_residual,
            "bracket": [lo, hi],
            "q": qk,
            "potential": f.describe(),
        }
        _write_json(self.path("kappa_summary.json"), summary, self.hash)
        return summary

    def run_count(self):
        f = self.cfg.potential()
        a = self.cfg.get("window", "a")
        b = self.cfg.get("window", "b")
        n_min = self.cfg.get("count", "n_min")
        n_max = self.cfg.get("count", "n_max")
        kappa = None
        try:
            qk = self.cfg.get("kappa", "q") or min(self.q, 256)
            kappa = solve_kappa(
                self.family, f, (self.cfg.get("kappa", "lo"), self.cfg.get("kappa", "hi")),
                tol=self.cfg.get("kappa", "tol"), q=qk,
            )
        except SimdynError:
            kappa = None
        rows = []
        for n in range(n_min, n_max + 1):
            res = count_periodic(
                self.family, CountQuery(n=n, a=a, b=b, f=f, kappa=kappa), workers=self.workers
            )
            rows.append(res.as_row())
        _write_csv(
            self.path("count_series.csv"),
            ["n", "count", "predicted", "ratio", "points_enumerated", "boundary_hits"],
            rows,
            self.hash,
        )
        summary = {
            "window": [a, b],
            "n_min": n_min,
            "n_max": n_max,
            "potential": f.describe(),
            "kappa": None if kappa is None else kappa.kappa,
        }
        if kappa is not None and n_max > n_min:
            fit = asymptotic_fit(self.family, f, kappa, a, b, range(n_min, n_max + 1), workers=self.workers)
            summary["C_hat"] = fit.C_hat
            summary["ratio_drift"] = fit.drift
            if self.plots:
                from . import plotting

                plotting.plot_count_ratios(
                    [r[0] for r in fit.ratio_series],
                    [r[3] for r in fit.ratio_series],
                    self.plot_path("count_ratios.png"),
                )
        _write_json(self.path("count_summary.json"), summary, self.hash)
        if self.emit_plot_data:
            _plotdata(
                self.path("count_plotdata.csv"),
                [("count", r[0], r[1]) for r in rows],
                self.hash,
            )
        return summary

    def run_derivative_check(self):
        f = self.cfg.potential()
        g = PotentialSpec.parse(self.cfg.get("derivative", "g"))
        h = self.cfg.get("derivative", "h_step")
        fd_slope, integral, second_fd, proxy = pressure_derivative_check(self.family, f, g, self.q, h=h)
        summary = {
            "fd_slope": fd_slope,
            "integral": integral,
            "first_order_gap": abs(fd_slope - integral),
            "second_fd": second_fd,
            "variance_proxy": proxy,
            "h": h,
            "f": f.describe(),
            "g": g.describe(),
        }
        _write_json(self.path("derivative-check_summary.json"), summary, self.hash)
        return summary


SUBCOMMANDS = {
    "pressure": Runner.run_pressure,
    "spectrum": Runner.run_spectrum,
    "normalize-check": Runner.run_normalize_check,
    "skew-match": Runner.run_skew_match,
    "average": Runner.run_average,
    "correlations": Runner.run_correlations,
    "variance": Runner.run_variance,
    "clt": Runner.run_clt,
    "lil": Runner.run_lil,
    "kappa": Runner.run_kappa,
    "count": Runner.run_count,
    "derivative-check": Runner.run_derivative_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simdyn", description=__doc__)
    p.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", help="INI config file; defaults apply when omitted")
    p.add_argument("--output", default="simdyn-out", help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--q", type=int, help="override experiment.q")
    p.add_argument("--workers", type=int, help="override experiment.workers")
    p.add_argument("--degrees", help="override experiment.degrees, e.g. 2,3")
    p.add_argument("--potential", help="override experiment.potential")
    p.add_argument("--plots", action="store_true", help="render figures to <output>/plots")
    p.add_argument("--emit-plot-data", action="store_true", help="write tidy long-format CSV for external plotting")
    return p


def run(subcommand: str, cfg: ExperimentConfig, output_dir, plots: bool = False, emit_plot_data: bool = False) -> dict:
    """Run one subcommand; returns the JSON summary dict."""
    outdir = Path(output_dir)
    t0 = time.perf_counter()
    cfg.validate()
    outdir.mkdir(parents=True, exist_ok=True)
    runner = Runner(cfg, outdir, plots, emit_plot_data)
    summary = SUBCOMMANDS[subcommand](runner)
    wall = time.perf_counter() - t0
    manifest = {
        "subcommand": subcommand,
        "config": cfg.data,
        "config_sha256": cfg.sha256(),
        "seed": cfg.get("experiment", "seed"),
        "wall_time_s": wall,
        "versions": {
            "simdyn": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "outputs": [p.name for p in runner.files],
    }
    (outdir / "run_manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return summary


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig.defaults()
        for item in args.set:
            key, _, value = item.partition("=")
            cfg.override(key.strip(), value.strip())
        if args.seed is not None:
            cfg.override("experiment.seed", str(args.seed))
        if args.q is not None:
            cfg.override("experiment.q", str(args.q))
        if args.workers is not None:
            cfg.override("experiment.workers", str(args.workers))
        if args.degrees is not None:
            cfg.override("experiment.degrees", args.degrees)
        if args.potential is not None:
            cfg.override("experiment.potential", args.potential)
        cfg.validate()
        run(args.subcommand, cfg, args.output, plots=args.plots, emit_plot_data=args.emit_plot_data)
    except SimdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
