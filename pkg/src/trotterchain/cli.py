"""Experiment runner: config parsing, pipelines, CSV/JSON artifacts.

Verbs: ``charges``, ``decay``, ``spectrum``, ``tomo``, ``mitigate``, ``fit``.
Every output embeds the config hash and the code version; identical
(config, seed) pairs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analysis, measure, mitigate, spectral, tomo
from .charges import ChargeSpec, assemble_cached
from .circuit import Circuit, InitialStateSpec, build_circuit, build_evolution
from .noise import amp_phase_damping, depolarizing
from .sim import (
    DensityMatrix,
    NoiseModel,
    StateVector,
    apply_readout_flips,
    evolve_noisy,
    evolve_pure,
    exact_expectation,
    rotated_probabilities,
    sample,
)

SCHEMA_VERSION = 1

_CONFIG_KEYS = {
    "schema_version",
    "n_sites",
    "alpha",
    "depth_max",
    "initial_state",
    "charges",
    "engine",
    "noise",
    "shots_total",
    "seed",
    "exact_reference",
    "fit_window",
    "beta_star",
}

_NOISE_KEYS = {"kind", "p1", "p2", "lambda_a", "lambda_p", "readout_flip"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_sites: int
    alpha: float = 0.3
    depth_max: int = 30
    initial_state: InitialStateSpec | None = None
    charges: tuple = ((1, "plus"),)
    engine: str = "noisy"
    noise: dict = field(default_factory=lambda: {"kind": "depolarizing", "p1": 0.0013, "p2": 0.013})
    shots_total: int = 100_000
    seed: int = 0
    exact_reference: bool = True
    fit_window: int | None = None
    beta_star: float = 0.01

    def __post_init__(self):
        if self.n_sites % 2:
            raise ConfigError("n_sites must be even")
        if self.engine not in ("pure", "noisy"):
            raise ConfigError(f"unknown engine {self.engine!r}")
        for order, variant in self.charges:
            try:
                ChargeSpec(order, variant, self.n_sites)  # validates N > 2n+1
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.initial_state is not None and self.initial_state.n_sites != self.n_sites:
            raise ConfigError("initial state length must match n_sites")
        unknown = set(self.noise) - _NOISE_KEYS
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")

    @property
    def delta(self) -> float:
        return float(np.tan(self.alpha))

    def init_spec(self) -> InitialStateSpec:
        return self.initial_state or InitialStateSpec.neel(self.n_sites)

    def noise_model(self) -> NoiseModel:
        kind = self.noise.get("kind", "none")
        readout = self.noise.get("readout_flip")
        if kind == "none":
            return NoiseModel(readout_flip=readout)
        if kind == "depolarizing":
            p1, p2 = self.noise.get("p1"), self.noise.get("p2")
            return NoiseModel(
                after_one_qubit=None if p1 is None else depolarizing(p1),
                after_two_qubit=None if p2 is None else depolarizing(p2),
                readout_flip=readout,
            )
        if kind == "damping":
            la = self.noise.get("lambda_a", 0.018)
            lp = self.noise.get("lambda_p", 0.018)
            one = self.noise.get("p1")  # one-qubit gates are noise-free unless asked
            return NoiseModel(
                after_one_qubit=None if one is None else amp_phase_damping(la, lp),
                after_two_qubit=amp_phase_damping(la, lp),
                readout_flip=readout,
            )
        raise ConfigError(f"unknown noise kind {kind!r}")

    def to_dict(self) -> dict:
        spec = self.init_spec()
        return {
            "schema_version": SCHEMA_VERSION,
            "n_sites": self.n_sites,
            "alpha": self.alpha,
            "depth_max": self.depth_max,
            "initial_state": {"letters": spec.letters, "bits": list(spec.bits)},
            "charges": [list(c) for c in self.charges],
            "engine": self.engine,
            "noise": dict(self.noise),
            "shots_total": self.shots_total,
            "seed": self.seed,
            "exact_reference": self.exact_reference,
            "fit_window": self.fit_window,
            "beta_star": self.beta_star,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {doc.get('schema_version')}")
        init = doc.get("initial_state")
        spec = None
        if init is not None:
            if isinstance(init, str):
                n = doc["n_sites"]
                if init == "neel":
                    spec = InitialStateSpec.neel(n)
                elif init == "zeros":
                    spec = InitialStateSpec.zeros(n)
                else:
                    raise ConfigError(f"unknown initial_state shorthand {init!r}")
            else:
                spec = InitialStateSpec(init["letters"], tuple(init["bits"]))
        kwargs = {
            "n_sites": doc["n_sites"],
            "initial_state": spec,
            "charges": tuple((int(n), str(v)) for n, v in doc.get("charges", [[1, "plus"]])),
        }
        for key in (
            "alpha",
            "depth_max",
            "engine",
            "noise",
            "shots_total",
            "seed",
            "exact_reference",
            "fit_window",
            "beta_star",
        ):
            if key in doc:
                kwargs[key] = doc[key]
        return cls(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def _header(config: ExperimentConfig) -> str:
    return f"# trotterchain={__version__} config_sha256={config.digest()}\n"


def _word_seed(seed: int, depth: int, label: str, word: str) -> int:
    return zlib.crc32(f"{depth}:{label}:{word}".encode()) ^ (seed & 0xFFFFFFFF)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def decay_table(config: ExperimentConfig, workers: int = 1) -> list:
    """Rows (d, charge, variant, estimate, s_q, exact) for d = 0..depth_max."""
    delta = config.delta
    noise = config.noise_model()
    charge_ops: dict = {}
    plans: dict = {}
    for order, variant in config.charges:
        spec = ChargeSpec(order, variant, config.n_sites)
        q = assemble_cached(spec)
        plan = measure.build_cover(q)
        n_w = max(1, config.shots_total // len(plan.words))
        if config.shots_total < len(plan.words):
            raise ConfigError(
                f"shots_total {config.shots_total} below the {len(plan.words)} "
                f"words needed for {spec.label}"
            )
        plans[spec.label] = measure.MeasurementPlan(plan.words, n_w)
        charge_ops[spec.label] = (spec, q)

    init = config.init_spec()
    if config.engine == "pure":
        state = StateVector.from_spec(init)
    else:
        state = DensityMatrix.from_spec(init)
    step_gates = build_evolution(config.n_sites, config.alpha, 1)
    step = Circuit(config.n_sites, step_gates, 0, len(step_gates), 1)

    rows = []
    for d in range(config.depth_max + 1):
        if d > 0:
            if config.engine == "pure":
                state = evolve_pure(step, state)
            else:
                state = evolve_noisy(step, state, noise)
        for label in sorted(charge_ops):
            spec, q = charge_ops[label]
            plan = plans[label]

            def run_word(item):
                wi, w = item
                counts = sample(
                    state,
                    w.letters,
                    plan.shots_per_word,
                    _word_seed(config.seed, d, label, w.letters),
                    noise,
                    word_index=wi,
                )
                return w, counts

            records = measure.ShotRecords(config.n_sites)
            items = list(enumerate(plan.words))
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    for w, counts in pool.map(run_word, items):
                        records.add(w, counts)
            else:
                for w, counts in map(run_word, items):
                    records.add(w, counts)
            est = measure.estimate(records, plan, q, delta)
            exact = exact_expectation(state, q, delta) if config.exact_reference else None
            rows.append((d, spec.order, spec.variant, est.value, est.std_uncertainty, exact))
    return rows


def exact_decay_series(config: ExperimentConfig) -> dict:
    """Exact expectation trajectories per charge label (no sampling)."""
    delta = config.delta
    noise = config.noise_model()
    charge_ops = {
        ChargeSpec(n, v, config.n_sites).label: assemble_cached(ChargeSpec(n, v, config.n_sites))
        for n, v in config.charges
    }
    init = config.init_spec()
    state = (
        StateVector.from_spec(init) if config.engine == "pure" else DensityMatrix.from_spec(init)
    )
    step_gates = build_evolution(config.n_sites, config.alpha, 1)
    step = Circuit(config.n_sites, step_gates, 0, len(step_gates), 1)
    out = {label: [] for label in charge_ops}
    for d in range(config.depth_max + 1):
        if d > 0:
            state = (
                evolve_pure(step, state)
                if config.engine == "pure"
                else evolve_noisy(step, state, noise)
            )
        for label, q in charge_ops.items():
            out[label].append(exact_expectation(state, q, delta))
    return {k: np.array(v) for k, v in out.items()}


def write_decay_csv(path: str, config: ExperimentConfig, rows: list):
    with open(path, "w", newline="") as fh:
        fh.write(_header(config))
        fh.write("d,charge,variant,estimate,s_q,exact\n")
        for d, order, variant, est, s_q, exact in rows:
            exact_s = "" if exact is None else repr(exact)
            fh.write(f"{d},{order},{variant},{est!r},{s_q!r},{exact_s}\n")


def spectrum_report(config: ExperimentConfig) -> dict:
    step_gates = build_evolution(config.n_sites, config.alpha, 1)
    step = Circuit(config.n_sites, step_gates, 0, len(step_gates), 1)
    op = spectral.vectorize_step(step, config.noise_model())
    vals = spectral.spectrum(op)
    report = {
        "eigenvalues": spectral.spectrum_csv_rows(vals),
        "decay_rate": spectral.decay_rate(op),
    }
    try:
        fp = spectral.fixed_point(op)
        report["fixed_point_c2"] = {}
        for order, variant in config.charges:
            spec = ChargeSpec(order, variant, config.n_sites)
            q = assemble_cached(spec)
            report["fixed_point_c2"][spec.label] = exact_expectation(fp, q, config.delta)
    except (ValueError, spectral.DegenerateFixedPointError) as exc:
        report["fixed_point_error"] = str(exc)
    return report


_TOMO_STATES = ("neel", "zeros", "yzx")


def _tomo_initial(kind: str, n: int) -> InitialStateSpec:
    if kind == "neel":
        return InitialStateSpec.neel(n)
    if kind == "zeros":
        return InitialStateSpec.zeros(n)
    pattern = ("YZX" * n)[:n]
    return InitialStateSpec(pattern, (0,) * n)


def tomo_report(config: ExperimentConfig, steps: list | None = None) -> dict:
    """Self- and pairwise fidelities of reconstructed states along evolution."""
    n = config.n_sites
    shots = None if config.exact_reference else config.shots_total
    noise = config.noise_model()
    step_gates = build_evolution(n, config.alpha, 1)
    step = Circuit(n, step_gates, 0, len(step_gates), 1)
    probe = list(range(config.depth_max + 1)) if steps is None else sorted(steps)

    states = {kind: DensityMatrix.from_spec(_tomo_initial(kind, n)) for kind in _TOMO_STATES}
    ideal0 = {kind: tomo.reconstruct(states[kind], None) for kind in _TOMO_STATES}
    recon: dict = {kind: {} for kind in _TOMO_STATES}
    for d in range(max(probe) + 1):
        if d > 0:
            for kind in _TOMO_STATES:
                states[kind] = evolve_noisy(step, states[kind], noise)
        if d in probe:
            for kind in _TOMO_STATES:
                recon[kind][d] = tomo.reconstruct(states[kind], shots, config.seed + d)

    report = {"steps": probe, "self_fidelity": {}, "pairwise_fidelity": {}}
    for kind in _TOMO_STATES:
        report["self_fidelity"][kind] = [
            tomo.fidelity(ideal0[kind], recon[kind][d]) for d in probe
        ]
    for i, a in enumerate(_TOMO_STATES):
        for b in _TOMO_STATES[i + 1 :]:
            report["pairwise_fidelity"][f"{a}|{b}"] = [
                tomo.fidelity(recon[a][d], recon[b][d]) for d in probe
            ]
    return report


def mitigation_table(config: ExperimentConfig) -> list:
    """Rows (d, unmitigated, mitigated, exact), normalized by the noiseless value.

    Estimates are exact-mode (deterministic); the reported uncertainties are
    the true estimator standard deviations at the configured shot budget.
    """
    delta = config.delta
    noise = config.noise_model()
    n = config.n_sites
    order, variant = config.charges[0]
    spec = ChargeSpec(order, variant, n)
    q = assemble_cached(spec)
    plan = measure.build_cover(q)
    n_w = max(1, config.shots_total // len(plan.words))
    plan = measure.MeasurementPlan(plan.words, n_w)
    init = config.init_spec()

    calib = mitigate.calibrate(noise, n, shots=None)
    noiseless = exact_expectation(StateVector.from_spec(init), q, delta)

    rows = []
    flips = noise.flip_probs(n)
    for d in range(config.depth_max + 1):
        values = {}
        sigmas = {}
        for k in (0, 1):
            circ = mitigate.zne_fold(build_circuit(init, config.alpha, d), k)
            # the init section is part of the folded circuit, so start from |0..0>
            rho = DensityMatrix(n, np.zeros((1 << n, 1 << n), dtype=complex))
            rho.entries[0, 0] = 1.0
            rho = evolve_noisy(circ, rho, noise)
            dists = {}
            dists_corrected = {}
            for w in plan.words:
                p = rotated_probabilities(rho, w.letters)
                p = np.clip(p, 0.0, None)
                p /= p.sum()
                if flips is not None:
                    p = apply_readout_flips(p, flips, n)
                dists[w.letters] = p
                dists_corrected[w.letters] = mitigate.correct(p, calib)
            raw_mean, raw_sd = measure.exact_estimator_variance(dists, plan, q, delta)
            cor_mean, cor_sd = measure.exact_estimator_variance(dists_corrected, plan, q, delta)
            if k == 0:
                values["raw"], sigmas["raw"] = raw_mean, raw_sd
            values[k], sigmas[k] = cor_mean, cor_sd
        mit = mitigate.zne_extrapolate(values[0], values[1])
        mit_sd = mitigate.zne_sigma(sigmas[0], sigmas[1])
        rows.append(
            (
                d,
                values["raw"] / noiseless,
                sigmas["raw"] / abs(noiseless),
                mit / noiseless,
                mit_sd / abs(noiseless),
                1.0,
            )
        )
    return rows


def write_mitigation_csv(path: str, config: ExperimentConfig, rows: list):
    with open(path, "w", newline="") as fh:
        fh.write(_header(config))
        fh.write("d,unmitigated,unmitigated_sd,mitigated,mitigated_sd,exact\n")
        for row in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")


def fit_report(config: ExperimentConfig, rows: list) -> dict:
    """Exponential and early-linear fits of a decay table, per charge."""
    series: dict = {}
    for d, order, variant, est, s_q, exact in rows:
        key = f"Q{order}{'+' if variant == 'plus' else '-' if variant == 'minus' else 'dif'}"
        series.setdefault(key, []).append(
            (d, exact if exact is not None else est, 0.0 if exact is not None else s_q)
        )
    out = {}
    for key, pts in sorted(series.items()):
        pts.sort()
        ds = analysis.DecaySeries(
            [p[0] for p in pts],
            [p[1] for p in pts],
            [p[2] for p in pts] if any(p[2] > 0 for p in pts) else None,
        )
        fit = analysis.fit_exp(ds)
        entry = {
            "exp": {
                "parameters": fit.parameters,
                "std_errors": fit.std_errors,
                "converged": fit.converged,
            }
        }
        window = config.fit_window or min(6, len(pts))
        if pts[0][1] != 0.0:
            lin = analysis.fit_early_linear(ds, window)
            beta = lin.parameters["beta"]
            verdict = analysis.benchmark_verdict(
                beta,
                config.beta_star,
                config.n_sites,
                config.depth_max,
                int(key[1]),
                config.init_spec().label(),
            )
            entry["early_linear"] = {
                "parameters": lin.parameters,
                "std_errors": lin.std_errors,
                "window": window,
            }
            entry["benchmark"] = verdict.to_dict()
        out[key] = entry
    return out


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------


def _write_json(path: str, config: ExperimentConfig, payload: dict):
    doc = {
        "trotterchain": __version__,
        "config_sha256": config.digest(),
        "config": config.to_dict(),
    }
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trotterchain",
        description="Trotterized XXX chain: charges, decay, spectra, tomography, mitigation",
    )
    parser.add_argument("verb", choices=["charges", "decay", "spectrum", "tomo", "mitigate", "fit"])
    parser.add_argument("--config", required=True, help="experiment JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = ExperimentConfig.from_dict({**config.to_dict(), "seed": args.seed})
        os.makedirs(args.out, exist_ok=True)

        if args.verb == "charges":
            for order, variant in config.charges:
                spec = ChargeSpec(order, variant, config.n_sites)
                q = assemble_cached(spec)
                path = os.path.join(args.out, f"charge_{spec.label}_N{config.n_sites}.json")
                _write_json(path, config, {"charge": q.to_dict(order, variant)})
                print(f"wrote {path} ({len(q)} terms)")
        elif args.verb == "decay":
            rows = decay_table(config, workers=args.workers)
            path = os.path.join(args.out, "decay.csv")
            write_decay_csv(path, config, rows)
            print(f"wrote {path} ({len(rows)} rows)")
        elif args.verb == "spectrum":
            report = spectrum_report(config)
            path = os.path.join(args.out, "spectrum.csv")
            with open(path, "w", newline="") as fh:
                fh.write(_header(config))
                fh.write("re,im\n")
                for re, im in report["eigenvalues"]:
                    fh.write(f"{re!r},{im!r}\n")
            meta = {k: v for k, v in report.items() if k != "eigenvalues"}
            _write_json(os.path.join(args.out, "spectrum.json"), config, meta)
            print(f"wrote {path} and spectrum.json")
        elif args.verb == "tomo":
            report = tomo_report(config)
            path = os.path.join(args.out, "tomo.json")
            _write_json(path, config, report)
            print(f"wrote {path}")
        elif args.verb == "mitigate":
            rows = mitigation_table(config)
            path = os.path.join(args.out, "mitigation.csv")
            write_mitigation_csv(path, config, rows)
            print(f"wrote {path}")
        elif args.verb == "fit":
            decay_path = os.path.join(args.out, "decay.csv")
            rows = read_decay_csv(decay_path)
            report = fit_report(config, rows)
            path = os.path.join(args.out, "fits.json")
            _write_json(path, config, {"fits": report})
            csv_path = os.path.join(args.out, "fits.csv")
            with open(csv_path, "w", newline="") as fh:
                fh.write(_header(config))
                fh.write("charge,model,parameter,value,std_error,converged\n")
                for key, entry in sorted(report.items()):
                    for model in ("exp", "early_linear"):
                        if model not in entry:
                            continue
                        conv = entry[model].get("converged", True)
                        for name, val in sorted(entry[model]["parameters"].items()):
                            err = entry[model]["std_errors"][name]
                            fh.write(f"{key},{model},{name},{val!r},{err!r},{conv}\n")
            bench_path = os.path.join(args.out, "benchmarks.jsonl")
            with open(bench_path, "w") as fh:
                for key, entry in sorted(report.items()):
                    if "benchmark" in entry:
                        fh.write(json.dumps({"charge": key, **entry["benchmark"]}, sort_keys=True))
                        fh.write("\n")
            print(f"wrote {path}, {csv_path} and {bench_path}")
    except Exception as exc:  # surface context, exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def read_decay_csv(path: str) -> list:
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("d,"):
                continue
            d, order, variant, est, s_q, exact = line.rstrip("\n").split(",")
            rows.append(
                (
                    int(d),
                    int(order),
                    variant,
                    float(est),
                    float(s_q),
                    float(exact) if exact else None,
                )
            )
    return rows


if __name__ == "__main__":
    sys.exit(main())
