"""Experiment orchestration: sampling runs, bootstrap runs, reference law,
comparison artifacts, and the self-verification suite.

Every random consumer owns a substream derived from (master_seed, path), so
any output file is a pure function of the config regardless of how many
threads execute the trial map. Aggregation is always in unit-index order and
floats are serialized through repr, which keeps reruns byte-identical.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bootstrap, hoeffding, linalg, model, oja, randgen, reference, stats

# replicate blocks are fixed-size so shard boundaries never depend on threads
_REPLICATE_BLOCK = 64
# SVG polylines thin to this many jumps; CSVs always keep every sample
_SVG_MAX_JUMPS = 1024

_SUMMARY_KEYS = ("config_echo", "ks", "trace_vbar", "frob_vbar",
                 "weights_top10", "quantiles", "checks")


class ConfigError(ValueError):
    """Invalid experiment configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 5000
    d: int = 100
    beta: float = 1.0
    c: float = 0.01
    scale: float = 5.0
    trials: int = 300
    replicates: int = 300
    eta_rule: str = "log_n"
    eta_value: float | None = None
    master_seed: int = 0
    mc_m_estimate: int = 10**5
    mc_chisq: int = 10**5
    output_dir: str = "out"

    def __post_init__(self):
        if self.n < 2 or self.d < 2:
            raise ConfigError("need n >= 2 and d >= 2")
        if self.trials < 1 or self.replicates < 1:
            raise ConfigError("need trials >= 1 and replicates >= 1")
        if self.mc_m_estimate < 1 or self.mc_chisq < 1:
            raise ConfigError("Monte Carlo sizes must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 bits")
        if self.eta_rule == "log_n":
            if self.eta_value is not None:
                raise ConfigError("log_n rule takes no value")
        elif self.eta_rule == "fixed":
            if self.eta_value is None or not self.eta_value > 0:
                raise ConfigError("fixed eta rule needs a positive value")
        else:
            raise ConfigError(f"unknown eta_rule {self.eta_rule!r}")
        if self.scale <= 0 or self.c < 0:
            raise ConfigError("need scale > 0 and c >= 0")

    @property
    def eta_n(self) -> float:
        if self.eta_rule == "log_n":
            return float(np.log(self.n))
        return float(self.eta_value)

    def spectral_model(self) -> model.SpectralModel:
        return model.spectral_decompose(
            model.KernelSpec(d=self.d, c=self.c, beta=self.beta, scale=self.scale))

    def stream(self, *path) -> randgen.RngStream:
        return randgen.derive_stream(self.master_seed, path)

    def echo(self) -> dict:
        rule = "log_n" if self.eta_rule == "log_n" else {"fixed": float(self.eta_value)}
        return {
            "n": self.n, "d": self.d, "beta": self.beta, "c": self.c,
            "scale": self.scale, "trials": self.trials,
            "replicates": self.replicates, "eta_rule": rule,
            "master_seed": self.master_seed,
            "mc_m_estimate": self.mc_m_estimate, "mc_chisq": self.mc_chisq,
            "output_dir": str(self.output_dir),
        }


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    known = {"n", "d", "beta", "c", "scale", "trials", "replicates",
             "eta_rule", "master_seed", "mc_m_estimate", "mc_chisq",
             "output_dir"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    rule = kwargs.pop("eta_rule", "log_n")
    if isinstance(rule, str):
        kwargs["eta_rule"], kwargs["eta_value"] = rule, None
    elif isinstance(rule, dict) and set(rule) == {"fixed"}:
        kwargs["eta_rule"], kwargs["eta_value"] = "fixed", float(rule["fixed"])
    else:
        raise ConfigError("eta_rule must be \"log_n\" or {\"fixed\": value}")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, seed=None, out=None) -> ExperimentConfig:
    """Read a JSON config file and apply CLI overrides for seed and output dir."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
    if seed is not None:
        raw = {**raw, "master_seed": seed}
    if out is not None:
        raw = {**raw, "output_dir": str(out)}
    return config_from_dict(raw)


def _parallel_map(fn, units, threads: int):
    units = list(units)
    if threads <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, units))


def draw_u0(config: ExperimentConfig) -> np.ndarray:
    return oja.normalize(config.stream("u0").normal(0.0, 1.0, config.d))


def run_sampling_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """Fixed u0, `trials` fresh datasets, one Oja pass each; errors vs true v1."""
    mdl = config.spectral_model()
    u0 = draw_u0(config)
    eta = config.eta_n

    def one_trial(j: int) -> float:
        data = model.sample_x(mdl, config.stream("trial", j), config.n)
        v_hat = oja.run(data, config.n, eta, u0)
        return oja.sin2(v_hat, mdl.v1)

    errors = np.array(_parallel_map(one_trial, range(config.trials), threads))
    scaled = (config.n / eta) * errors
    return {
        "cdf": stats.ecdf(errors),
        "samples": errors,
        "scaled_samples": scaled,
        "scaled_cdf": stats.ecdf(scaled),
        "mean": float(errors.mean()),
        "median": float(np.median(errors)),
        "model": mdl,
        "u0": u0,
    }


def run_bootstrap_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """One dataset, m multiplier-perturbed replicate chains, errors vs the
    unperturbed estimate. Replicates shard into fixed blocks whose multiplier
    streams are per-replicate, so the numbers are schedule-independent."""
    mdl = config.spectral_model()
    u0 = draw_u0(config)
    eta = config.eta_n
    data = model.sample_x(mdl, config.stream("data", 0), config.n)
    v_hat = oja.run(data, config.n, eta, u0)
    streams = [config.stream("w", i) for i in range(config.replicates)]

    def one_block(block: range) -> np.ndarray:
        ens = bootstrap.ensemble_init(u0, len(block), eta, config.n)
        chunk = [streams[i] for i in block]
        for x in data:
            ens = bootstrap.ensemble_step(ens, x, chunk)
        return ens.replicates

    blocks = [range(i, min(i + _REPLICATE_BLOCK, config.replicates))
              for i in range(0, config.replicates, _REPLICATE_BLOCK)]
    replicates = np.vstack(_parallel_map(one_block, blocks, threads))
    errors = np.clip(1.0 - (replicates @ v_hat) ** 2, 0.0, 1.0)
    cdf = stats.ecdf(errors)
    return {
        "cdf": cdf,
        "errors": errors,
        "v_hat": v_hat,
        "quantiles": {f"q{p}": cdf.quantile(p) for p in (0.9, 0.95, 0.99)},
        "model": mdl,
        "u0": u0,
    }


def run_reference(config: ExperimentConfig) -> dict:
    """Assemble the reference covariance and sample its weighted chi-square law.

    The draws are on the scale of (n/eta_n) * sin2, the units the limit law
    is stated in.
    """
    mdl = config.spectral_model()
    ref = reference.build_reference(mdl, config.stream("mc", "m_estimate"),
                                    config.eta_n, config.n, config.mc_m_estimate)
    weights = reference.chisq_weights(ref.vbar)
    samples = reference.sample_weighted_chisq(weights, config.stream("mc", "chisq"),
                                              config.mc_chisq)
    cdf = stats.ecdf(samples)
    return {
        "reference": ref,
        "weights": weights,
        "samples": samples,
        "cdf": cdf,
        "quantiles": {f"q{p}": cdf.quantile(p) for p in (0.9, 0.95, 0.99)},
    }


def compare(cdf_a: stats.EmpiricalCdf, cdf_b: stats.EmpiricalCdf, label: str,
            name_a: str = "a", name_b: str = "b", out_dir=None) -> dict:
    """Kolmogorov distance between two CDFs, with optional plot artifacts."""
    ks = stats.kolmogorov_distance(cdf_a, cdf_b)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_pooled_csv(out / f"{label}_cdf.csv", [(name_a, cdf_a), (name_b, cdf_b)])
        (out / f"{label}.svg").write_text(
            render_cdf_svg([(name_a, cdf_a), (name_b, cdf_b)]))
    return {"ks": ks}


# -- verification suite ------------------------------------------------------

def _check_hoeffding(config: ExperimentConfig, with_multipliers: bool) -> dict:
    worst = 0.0
    case = 0
    for n in (4, 6):
        for d in (2, 3):
            mdl = model.spectral_decompose(
                model.KernelSpec(d=d, c=config.c, beta=config.beta, scale=config.scale))
            for eta in (1.0, float(np.log(n))):
                st = config.stream("verify", "hoeffding", case)
                data = model.sample_x(mdl, st, n)
                if with_multipliers:
                    w = np.concatenate([[0.0], st.normal(0.0, 0.5, n - 1)])
                    total, _ = hoeffding.bootstrap_hoeffding_sum(data, w, eta)
                    direct = hoeffding.bootstrap_direct_product(data, w, eta)
                else:
                    total, _ = hoeffding.hoeffding_sum(data, mdl.sigma, eta)
                    direct = hoeffding.direct_product(data, eta)
                err = (linalg.frobenius_norm(total - direct)
                       / max(1.0, linalg.frobenius_norm(direct)))
                worst = max(worst, err)
                case += 1
    name = "bootstrap_hoeffding_exactness" if with_multipliers else "hoeffding_exactness"
    return {"name": name, "value": worst, "bound": 1e-10, "passed": bool(worst <= 1e-10)}


def _check_orthogonality(config: ExperimentConfig) -> dict:
    # lopsided two-point mean-zero law so the centered factor does not vanish
    sup = np.array([[1.2, 0.5], [-0.6, -0.25]])
    spec = model.DiscreteSpec(sup, np.array([1 / 3, 2 / 3]))
    worst = hoeffding.orthogonality_table(spec, n=4, eta_n=1.0)
    return {"name": "orthogonality", "value": worst, "bound": 1e-10,
            "passed": bool(worst <= 1e-10)}


def _check_chisq_moments(config: ExperimentConfig, weights: reference.WeightedChiSq) -> dict:
    draws = reference.sample_weighted_chisq(
        weights, config.stream("verify", "moments"), config.mc_chisq)
    se_mean = np.sqrt(weights.variance / draws.size)
    mean_dev = abs(draws.mean() - weights.mean) / max(se_mean, 1e-300)
    m4 = float(np.mean((draws - draws.mean()) ** 4))
    se_var = np.sqrt(max(m4 - draws.var() ** 2, 1e-300) / draws.size)
    var_dev = abs(draws.var() - weights.variance) / se_var
    passed = mean_dev <= 4.0 and var_dev <= 5.0
    return {"name": "chisq_moments",
            "value": {"mean_sigmas": float(mean_dev), "var_sigmas": float(var_dev)},
            "bound": {"mean_sigmas": 4.0, "var_sigmas": 5.0}, "passed": bool(passed)}


def _check_anticoncentration(config: ExperimentConfig,
                             weights: reference.WeightedChiSq) -> dict:
    out = reference.anticoncentration_check(
        weights, 0.01, config.stream("verify", "anticoncentration"),
        n_mc=config.mc_chisq)
    return {"name": "anticoncentration", "value": out["max_window_prob"],
            "bound": out["bound"], "passed": bool(out["pass"])}


def _check_covariance_rate(config: ExperimentConfig) -> dict:
    # fixed estimation size: this is a build self-check, so its noise level
    # must not depend on the config's Monte Carlo budget
    d = min(config.d, 10)
    mdl = model.spectral_decompose(
        model.KernelSpec(d=d, c=config.c, beta=config.beta, scale=config.scale))
    medians = {}
    for n in (500, 2000):
        eta = float(np.log(n))
        ref = reference.build_reference(
            mdl, config.stream("verify", "rate_m", n), eta, n, 2 * 10**4)
        diffs = []
        for j in range(21):
            data = model.sample_x(mdl, config.stream("verify", "rate", n, j), n)
            cov = bootstrap.bootstrap_covariance(data, mdl, eta)
            diffs.append(abs(float(np.trace(cov - ref.vbar))))
        medians[n] = float(np.median(diffs))
    ratio = medians[500] / max(medians[2000], 1e-300)
    return {"name": "covariance_rate", "value": ratio, "bound": [1.3, 5.0],
            "passed": bool(1.3 <= ratio <= 5.0)}


def _check_vbar_closed_form(config: ExperimentConfig) -> dict:
    mdl = model.spectral_decompose(
        model.KernelSpec(d=10, c=config.c, beta=config.beta, scale=config.scale))
    n, eta = 1000, float(np.log(1000))
    raw = config.stream("verify", "vbar").normal(0.0, 1.0, (9, 9))
    m = raw @ raw.T
    lp = reference.contraction_ratios(mdl, eta, n)
    closed = reference.assemble_vbar(m, lp, eta, n, mdl.v_perp)
    brute = np.zeros((9, 9))
    for i in range(1, n + 1):
        dia = np.diag(lp ** (i - 1))
        brute += dia @ m @ dia
    brute = (eta / n) * mdl.v_perp @ brute @ mdl.v_perp.T
    rel = (linalg.frobenius_norm(closed - brute)
           / max(linalg.frobenius_norm(brute), 1e-300))
    return {"name": "vbar_closed_form", "value": rel, "bound": 1e-10,
            "passed": bool(rel <= 1e-10)}


def verify(config: ExperimentConfig) -> dict:
    """Run the named self-checks; each appears exactly once in the report."""
    ref_out = run_reference(config)
    checks = [
        _check_hoeffding(config, with_multipliers=False),
        _check_hoeffding(config, with_multipliers=True),
        _check_orthogonality(config),
        _check_chisq_moments(config, ref_out["weights"]),
        _check_anticoncentration(config, ref_out["weights"]),
        _check_covariance_rate(config),
        _check_vbar_closed_form(config),
    ]
    return {"checks": checks, "passed": bool(all(c["passed"] for c in checks))}


# -- file output -------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def write_cdf_csv(path, cdf: stats.EmpiricalCdf) -> None:
    lines = ["t,F"]
    n = cdf.count
    lines.extend(f"{_fmt(t)},{_fmt((i + 1) / n)}"
                 for i, t in enumerate(cdf.sorted_samples))
    Path(path).write_text("\n".join(lines) + "\n")


def write_pooled_csv(path, named_cdfs) -> None:
    lines = ["curve,t,F"]
    for name, cdf in named_cdfs:
        n = cdf.count
        lines.extend(f"{name},{_fmt(t)},{_fmt((i + 1) / n)}"
                     for i, t in enumerate(cdf.sorted_samples))
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_json(path, config: ExperimentConfig, **fields) -> None:
    unknown = set(fields) - set(_SUMMARY_KEYS)
    if unknown:
        raise ValueError(f"unknown summary fields: {sorted(unknown)}")
    payload = {key: fields.get(key) for key in _SUMMARY_KEYS}
    payload["config_echo"] = config.echo()
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _svg_steps(cdf: stats.EmpiricalCdf):
    """Jump points (t_i, F_i) thinned to a bounded count for plotting."""
    t = cdf.sorted_samples
    f = np.arange(1, cdf.count + 1) / cdf.count
    if t.size > _SVG_MAX_JUMPS:
        idx = np.unique(np.linspace(0, t.size - 1, _SVG_MAX_JUMPS).astype(int))
        t, f = t[idx], f[idx]
    return t, f


def render_cdf_svg(named_cdfs, width: int = 800, height: int = 600) -> str:
    """Overlaid empirical CDF step curves as a self-contained SVG document."""
    colors = ("#1f6fb4", "#c23b22", "#3a8f3a", "#8250a0")
    left, right, top, bottom = 70.0, 20.0, 20.0, 50.0
    pw, ph = width - left - right, height - top - bottom
    lo = min(float(cdf.sorted_samples[0]) for _, cdf in named_cdfs)
    hi = max(float(cdf.sorted_samples[-1]) for _, cdf in named_cdfs)
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    sx = lambda t: left + (t - lo) / (hi - lo) * pw
    sy = lambda p: top + (1.0 - p) * ph
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left:.2f}" y1="{top + ph:.2f}" x2="{left + pw:.2f}" '
        f'y2="{top + ph:.2f}" stroke="black" stroke-width="1"/>',
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" '
        f'y2="{top + ph:.2f}" stroke="black" stroke-width="1"/>',
        f'<text x="{left:.2f}" y="{height - 14:.2f}" font-size="13">{lo:.4g}</text>',
        f'<text x="{left + pw - 40:.2f}" y="{height - 14:.2f}" font-size="13">{hi:.4g}</text>',
        f'<text x="{left - 28:.2f}" y="{sy(0.0) + 4:.2f}" font-size="13">0</text>',
        f'<text x="{left - 28:.2f}" y="{sy(1.0) + 4:.2f}" font-size="13">1</text>',
    ]
    for k, (name, cdf) in enumerate(named_cdfs):
        t, f = _svg_steps(cdf)
        pts = [f"{sx(t[0]):.2f},{sy(0.0):.2f}"]
        prev = 0.0
        for ti, fi in zip(t, f):
            pts.append(f"{sx(ti):.2f},{sy(prev):.2f}")
            pts.append(f"{sx(ti):.2f},{sy(fi):.2f}")
            prev = fi
        pts.append(f"{sx(hi):.2f},{sy(prev):.2f}")
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{left + pw - 150:.2f}" y="{top + 18 + 16 * k:.2f}" '
                     f'font-size="13" fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
