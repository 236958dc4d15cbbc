"""Seeded experiment runners behind the ``ladfusion`` command line.

Every runner takes an :class:`ExperimentConfig` and returns a
:class:`RunResult` holding plain-row tables, a summary dict and a
:class:`RunManifest`.  Tables are deterministic for a fixed config and seed;
wall-clock measurements live in the manifest and in the benchmark table
only.
"""

import itertools
import platform
import time
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import check_paired
from .diffusion import (ad_embed, ad_spectrum, build_ad, build_lad, diffusion_map,
                        lad_embed, lad_spectrum)
from .exceptions import InvalidArgumentError
from .io import digest, write_json, write_rows
from .kernels import median_sq_distance
from .landmarks import density_sample, uniform_subset
from .manifolds import PairedDataset, dataset_from_params, make_generator, sample_pair
from .metrics import (closed_dimension, eigenvalue_diff_ratio, eigenvector_alignment,
                      embedding_similarity, subspace_alignment)
from .oracle import LandmarkOperator, discrete_operator_row, make_scheme

EXPERIMENTS = ("landmark_sweep", "alpha_sweep", "initial_sensor", "landmark_cases",
               "variance_rate", "bench_timing", "embed", "generate")
ALPHAS = [0.0, 0.25, 0.5, 0.75, 1.0]


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run.

    ``eps_factor`` multiplies the median squared distance of each sensor;
    explicit ``eps1``/``eps2`` override it.  Fields irrelevant to an
    experiment are ignored by its runner.
    """

    experiment_id: str
    sensor1: object = "deformed_torus"
    sensor2: object = "torus"
    n: int = 2000
    m: int = 256
    m_grid: list = field(default_factory=lambda: [32, 64, 128, 256, 512])
    n_grid: list = field(default_factory=list)
    n_grid_ad: list = field(default_factory=list)
    alphas: list = field(default_factory=lambda: [0.5])
    eps_factor: float = 0.05
    eps1: float = None
    eps2: float = None
    eps_grid: list = field(default_factory=list)
    q: int = 3
    t: float = 1.0
    trials: int = 5
    seed: int = 0
    density: str = None
    landmark_density: str = None
    landmark_cases: list = field(default_factory=list)
    scenarios: list = field(default_factory=list)
    start_sensor: str = "sensor2"
    eval_point: list = field(default_factory=list)
    test_function: str = "x"
    similarity_band: float = 0.02
    pair_gap: float = 0.25
    repeats: int = 5
    warmup: int = 1
    method: str = "lad"
    input1: str = None
    input2: str = None
    header: bool = False
    out: str = "out"

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENTS:
            raise InvalidArgumentError(
                f"unknown experiment {self.experiment_id!r}; choose from {EXPERIMENTS}")
        for name in ("m_grid", "alphas"):
            if not getattr(self, name):
                raise InvalidArgumentError(f"{name} must be nonempty")
        if int(self.trials) < 1:
            raise InvalidArgumentError("trials must be >= 1")
        if self.eps_factor <= 0:
            raise InvalidArgumentError("eps_factor must be positive")
        for a in self.alphas:
            if not 0.0 <= float(a) <= 1.0:
                raise InvalidArgumentError(f"alpha {a} outside [0, 1]")

    def to_dict(self):
        return asdict(self)


_DEFAULTS = {
    "landmark_sweep": dict(sensor1="deformed_torus", sensor2="torus", n=2000,
                           m_grid=[32, 64, 128, 256, 512], alphas=[0.5], trials=5),
    "alpha_sweep": dict(sensor1="ellipse", sensor2="circle", n=1000, m=400, alphas=ALPHAS,
                        trials=5, scenarios=["uniform", "cosine", "recovery"]),
    "landmark_cases": dict(sensor1="ellipse", sensor2="circle", n=1400, m=400,
                           alphas=ALPHAS, trials=1, density="cosine",
                           landmark_cases=["case1", "case2", "case3", "case4"],
                           pair_gap=0.05),
    "initial_sensor": dict(sensor1="trefoil", sensor2="circle", n=1000, m=100,
                           alphas=[0.5], q=3, trials=1, eps_factor=1.0),
    "variance_rate": dict(sensor1={"name": "circle", "params": {"scale": 1.5}},
                          sensor2="circle", n=1500, m=750, alphas=ALPHAS, trials=20,
                          eps_grid=list(np.geomspace(0.002, 0.05, 8)),
                          landmark_density="cosine", eval_point=[np.pi / 4],
                          test_function="x"),
    "bench_timing": dict(sensor1="deformed_torus", sensor2="torus", m=256,
                         n_grid=[2000, 4000, 8000, 16000], n_grid_ad=[500, 1000, 2000, 4000],
                         m_grid=[64, 128, 256, 512, 1024], n=8000, alphas=[0.5],
                         repeats=3, warmup=1, trials=1),
    "embed": dict(n=1000, m=100, alphas=[0.5], trials=1),
    "generate": dict(n=1000, trials=1),
}

# the sphere variant of the variance experiment
VARIANCE_S2 = dict(sensor1="scaled_sphere", sensor2="sphere", n=1500, m=1000,
                   landmark_density="uniform", eval_point=[0.0, 0.0], test_function="x+z",
                   eps_grid=list(np.geomspace(0.02, 0.3, 8)))

_PAPER_SCALE = {
    "landmark_sweep": dict(n=5000, m_grid=[int(2 ** (i / 2)) for i in range(11, 22)],
                           trials=30),
    "alpha_sweep": dict(n=2500, m=1000),
    "landmark_cases": dict(n=3500, m=1000),
    "variance_rate": dict(n=3000, m=1500, trials=50),
}


def make_config(experiment_id, overrides=None, paper_scale=False):
    """Defaults for ``experiment_id`` updated by ``overrides``.

    Raises :class:`InvalidArgumentError` on unknown keys.
    """
    if experiment_id not in EXPERIMENTS:
        raise InvalidArgumentError(
            f"unknown experiment {experiment_id!r}; choose from {EXPERIMENTS}")
    values = dict(_DEFAULTS[experiment_id])
    if paper_scale:
        values.update(_PAPER_SCALE.get(experiment_id, {}))
    overrides = dict(overrides or {})
    if overrides.pop("setup", None) == "S2":
        values.update(VARIANCE_S2)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {unknown}")
    values.update(overrides)
    values["experiment_id"] = experiment_id
    return ExperimentConfig(**values)


def trial_seed(seed, *keys):
    """Independent integer seed derived from the run seed and trial keys."""
    ss = np.random.SeedSequence([int(seed)] + [int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class RunManifest:
    config: dict
    eps: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""
    environment: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


@dataclass
class RunResult:
    tables: dict
    summary: dict
    manifest: RunManifest


class _Stages:
    """Wall-clock bookkeeping per named stage."""

    def __init__(self):
        self.times = {}

    def __call__(self, name):
        stages = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                stages.times[name] = stages.times.get(name, 0.0) + time.perf_counter() - self.t0

        return _Timer()


def _manifest(cfg, eps, seeds, stages):
    return RunManifest(cfg.to_dict(), eps, seeds, dict(stages.times),
                       environment={"python": platform.python_version(),
                                    "numpy": np.__version__})


def _bandwidths(cfg, dataset):
    e1 = cfg.eps1 if cfg.eps1 is not None else cfg.eps_factor * median_sq_distance(dataset.sensor1)
    e2 = cfg.eps2 if cfg.eps2 is not None else cfg.eps_factor * median_sq_distance(dataset.sensor2)
    return float(e1), float(e2)


def _pair(cfg):
    return (make_generator(cfg.sensor1), make_generator(cfg.sensor2))


def _base_row(cfg, trial, seed, alpha, m, n, e1, e2):
    return {"seed": seed, "trial": trial, "alpha": alpha, "m": m, "n": n,
            "eps1": e1, "eps2": e2}


def _comparison(lad_spec, ad_spec, E_lad, E_ad, k, q):
    """Ratios and alignments for pairs 1..k plus subspace and similarity."""
    k = min(k, len(lad_spec.eigenvalues) - 1, len(ad_spec.eigenvalues) - 1)
    idx = list(range(1, k + 1))
    out = {}
    for i, r in zip(idx, eigenvalue_diff_ratio(lad_spec.eigenvalues, ad_spec.eigenvalues, idx)):
        out[f"ratio_{i}"] = r
    for i in idx:
        out[f"align_{i}"] = eigenvector_alignment(lad_spec.eigenvectors[:, i],
                                                  ad_spec.eigenvectors[:, i])
    out[f"subspace_{q}"] = subspace_alignment(lad_spec.eigenvectors[:, 1:q + 1],
                                              ad_spec.eigenvectors[:, 1:q + 1])
    out["similarity"] = embedding_similarity(E_ad.coords, E_lad.coords)
    return out


def _medians(rows, keys, columns):
    """Median of ``columns`` over rows grouped by ``keys``, in sorted key order."""
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key in sorted(groups):
        rec = dict(zip(keys, key))
        for c in columns:
            rec[c] = float(np.median([r[c] for r in groups[key]]))
        out.append(rec)
    return out


def _ad_reference(cfg, dataset, e1, e2, k, q=None):
    model = build_ad(dataset, e1, e2, cfg.start_sensor)
    spec = ad_spectrum(model, k + 1)
    return spec, ad_embed(model, q or cfg.q, cfg.t, spectrum=spec)


def _lad_result(cfg, dataset, landmarks, e1, e2, alpha, k, q=None):
    model = build_lad(dataset, landmarks, e1, e2, alpha, cfg.start_sensor)
    spec = lad_spectrum(model, min(k + 1, landmarks.m))
    return spec, lad_embed(model, q or cfg.q, cfg.t, spectrum=spec)


def run_landmark_sweep(cfg):
    """LAD against AD over landmark counts with uniform subset landmarks."""
    stages = _Stages()
    seeds = {"dataset": trial_seed(cfg.seed, 0)}
    with stages("data"):
        data = sample_pair(_pair(cfg), cfg.n, cfg.density, seeds["dataset"])
        e1, e2 = _bandwidths(cfg, data)
    k = 6
    with stages("ad"):
        ad_spec, ad_emb = _ad_reference(cfg, data, e1, e2, k)
    rows, timing = [], []
    for alpha in cfg.alphas:
        for m in cfg.m_grid:
            for trial in range(cfg.trials):
                s = trial_seed(cfg.seed, 1, m, trial)
                seeds[f"m{m}_t{trial}"] = s
                t0 = time.perf_counter()
                with stages("lad"):
                    L = uniform_subset(data, m, s)
                    spec, emb = _lad_result(cfg, data, L, e1, e2, alpha, k)
                timing.append({"m": m, "trial": trial, "alpha": alpha,
                               "lad_seconds": time.perf_counter() - t0})
                row = _base_row(cfg, trial, s, alpha, m, cfg.n, e1, e2)
                row.update(_comparison(spec, ad_spec, emb, ad_emb, k, cfg.q))
                rows.append(row)
    cols = [c for c in rows[0] if c.startswith(("ratio", "align", "subspace", "similarity"))]
    summary_rows = _medians(rows, ["alpha", "m"], cols)
    ad_seconds = stages.times["ad"]
    for r in timing:
        r["ad_seconds"] = ad_seconds
    summary = {"medians": summary_rows, "eps1": e1, "eps2": e2,
               "ad_eigenvalues": ad_spec.eigenvalues[:k + 1]}
    return RunResult({"landmark_sweep": rows, "timing": timing}, summary,
                     _manifest(cfg, {"eps1": e1, "eps2": e2}, seeds, stages))


_SCENARIOS = {
    # data density, landmark kind
    "uniform": (None, "uniform"),
    "cosine": (None, "cosine"),
    "recovery": ("arctan", "subset"),
}


def run_alpha_sweep(cfg):
    """LAD against AD across alpha for several landmark scenarios.

    ``"uniform"`` and ``"cosine"`` draw landmarks from that weight with
    uniformly sampled data; ``"recovery"`` samples data from the arctan
    weight and takes landmarks as a uniform subset of the data.
    """
    stages = _Stages()
    seeds, eps, rows = {}, {}, []
    k = 6
    for name in cfg.scenarios:
        if name not in _SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {name!r}; choose from {sorted(_SCENARIOS)}")
        # seeds follow the scenario, not its position in the list
        si = list(_SCENARIOS).index(name)
        dens, kind = _SCENARIOS[name]
        seeds[f"{name}_dataset"] = ds = trial_seed(cfg.seed, 0, si)
        with stages("data"):
            data = sample_pair(_pair(cfg), cfg.n, dens, ds)
            e1, e2 = _bandwidths(cfg, data)
        eps[name] = {"eps1": e1, "eps2": e2}
        with stages("ad"):
            ad_spec, ad_emb = _ad_reference(cfg, data, e1, e2, k)
        for trial in range(cfg.trials):
            s = trial_seed(cfg.seed, 1, si, trial)
            seeds[f"{name}_t{trial}"] = s
            L = (uniform_subset(data, cfg.m, s) if kind == "subset"
                 else density_sample(kind, cfg.m, s, _pair(cfg)))
            for alpha in cfg.alphas:
                with stages("lad"):
                    spec, emb = _lad_result(cfg, data, L, e1, e2, alpha, k)
                row = {"scenario": name}
                row.update(_base_row(cfg, trial, s, alpha, cfg.m, cfg.n, e1, e2))
                row.update(_comparison(spec, ad_spec, emb, ad_emb, k, cfg.q))
                rows.append(row)
    cols = [c for c in rows[0] if c.startswith(("ratio", "align", "subspace", "similarity"))]
    med = _medians(rows, ["scenario", "alpha"], cols)
    summary = {"medians": med}
    uni = [r["similarity"] for r in med if r["scenario"] == "uniform"]
    if uni:
        summary["uniform_similarity_max"] = max(uni)
        summary["uniform_within_band"] = bool(max(uni) <= cfg.similarity_band)
    return RunResult({"alpha_sweep": rows}, summary, _manifest(cfg, eps, seeds, stages))


def _closed_similarity(cfg, a, b):
    """Similarity on the leading coordinates, ``q`` of them grown so that no
    eigenvalue pair closer than ``pair_gap`` is split in either embedding."""
    k = max(closed_dimension(np.concatenate([[1.0], e.eigenvalues_used]), cfg.q, cfg.pair_gap)
            for e in (a, b))
    return embedding_similarity(a.coords[:, :k], b.coords[:, :k]), k


def run_landmark_cases(cfg):
    """Pairwise similarity of LAD embeddings built on different landmark weights.

    Embeddings are compared on the pair-closed dimension (see
    :func:`_closed_similarity`); a split near-degenerate pair would leave one
    coordinate free to rotate inside its eigenspace.
    """
    stages = _Stages()
    seeds = {"dataset": trial_seed(cfg.seed, 0)}
    with stages("data"):
        data = sample_pair(_pair(cfg), cfg.n, cfg.density, seeds["dataset"])
        e1, e2 = _bandwidths(cfg, data)
    extra = cfg.q + 3
    with stages("ad"):
        ad_spec, ad_emb = _ad_reference(cfg, data, e1, e2, extra, extra)
    pair_rows, ad_rows = [], []
    for trial in range(cfg.trials):
        sets = {}
        for ci, case in enumerate(cfg.landmark_cases):
            s = trial_seed(cfg.seed, 1, ci, trial)
            seeds[f"{case}_t{trial}"] = s
            sets[case] = (s, density_sample(case, cfg.m, s, _pair(cfg)))
        for alpha in cfg.alphas:
            embs = {}
            for case, (s, L) in sets.items():
                with stages("lad"):
                    _, embs[case] = _lad_result(cfg, data, L, e1, e2, alpha, extra, extra)
                row = {"case": case}
                row.update(_base_row(cfg, trial, s, alpha, cfg.m, cfg.n, e1, e2))
                row["similarity_to_ad"], row["dimension"] = _closed_similarity(
                    cfg, ad_emb, embs[case])
                ad_rows.append(row)
            for a, b in itertools.combinations(cfg.landmark_cases, 2):
                row = {"case_a": a, "case_b": b}
                row.update(_base_row(cfg, trial, seeds["dataset"], alpha, cfg.m, cfg.n, e1, e2))
                row["similarity"], row["dimension"] = _closed_similarity(cfg, embs[a], embs[b])
                pair_rows.append(row)
    per_alpha = []
    for alpha in cfg.alphas:
        pw = [r["similarity"] for r in pair_rows if r["alpha"] == alpha]
        ta = [r["similarity_to_ad"] for r in ad_rows if r["alpha"] == alpha]
        per_alpha.append({"alpha": alpha, "mean_pairwise": float(np.mean(pw)),
                          "mean_to_ad": float(np.mean(ta))})
    summary = {"per_alpha": per_alpha, "eps1": e1, "eps2": e2}
    return RunResult({"pairwise": pair_rows, "to_ad": ad_rows}, summary,
                     _manifest(cfg, {"eps1": e1, "eps2": e2}, seeds, stages))


def run_initial_sensor(cfg):
    """AD and LAD from each start sensor against single-sensor diffusion maps.

    Alignments are subspace alignments of the leading nontrivial
    coordinates: ``q`` of them, grown so that no eigenvalue pair closer than
    ``pair_gap`` (relative) is split in either embedding.  Closed curves
    have harmonic pairs whose members differ by up to ~20% at the median
    bandwidth, hence the wide default; see :func:`closed_dimension`.
    Embeddings are written with ``q`` coordinates.
    """
    stages = _Stages()
    seeds = {"dataset": trial_seed(cfg.seed, 0), "landmarks": trial_seed(cfg.seed, 1)}
    with stages("data"):
        data = sample_pair(_pair(cfg), cfg.n, cfg.density, seeds["dataset"])
        e1, e2 = _bandwidths(cfg, data)
        L = uniform_subset(data, cfg.m, seeds["landmarks"])
    alpha = cfg.alphas[0]
    extra = cfg.q + 3
    embs = {}
    with stages("embed"):
        for start in ("sensor2", "sensor1"):
            embs[f"ad_{start}"] = ad_embed(build_ad(data, e1, e2, start), extra, cfg.t)
            embs[f"lad_{start}"] = lad_embed(build_lad(data, L, e1, e2, alpha, start),
                                             extra, cfg.t)
        embs["dm_sensor1"] = diffusion_map(data.sensor1, e1, extra, cfg.t)
        embs["dm_sensor2"] = diffusion_map(data.sensor2, e2, extra, cfg.t)

    def dim(e):
        lam = np.concatenate([[1.0], e.eigenvalues_used])
        return closed_dimension(lam, cfg.q, cfg.pair_gap)

    rows = []
    pairs = [(f, r) for f in ("ad_sensor2", "lad_sensor2", "ad_sensor1", "lad_sensor1")
             for r in ("dm_sensor1", "dm_sensor2")]
    pairs += [("lad_sensor2", "ad_sensor2"), ("lad_sensor1", "ad_sensor1")]
    for fused, ref in pairs:
        k = max(dim(embs[fused]), dim(embs[ref]))
        row = {"embedding": fused, "reference": ref}
        row.update(_base_row(cfg, 0, seeds["landmarks"], alpha, cfg.m, cfg.n, e1, e2))
        row["dimension"] = k
        row["alignment"] = subspace_alignment(embs[fused].coords[:, :k],
                                              embs[ref].coords[:, :k])
        rows.append(row)
    lookup = {(r["embedding"], r["reference"]): r["alignment"] for r in rows}
    summary = {
        "alignments": {f"{a}|{b}": v for (a, b), v in sorted(lookup.items())},
        "ending_margin_start2": lookup[("lad_sensor2", "dm_sensor1")]
        - lookup[("lad_sensor2", "dm_sensor2")],
        "ending_margin_start1": lookup[("lad_sensor1", "dm_sensor2")]
        - lookup[("lad_sensor1", "dm_sensor1")],
    }
    tables = {"alignment": rows}
    for name, e in sorted(embs.items()):
        tables[f"embedding_{name}"] = [dict(zip([f"c{j + 1}" for j in range(cfg.q)], r))
                                       for r in e.coords[:, :cfg.q]]
    return RunResult(tables, summary, _manifest(cfg, {"eps1": e1, "eps2": e2}, seeds, stages))


def _test_function(name, generator):
    """Function of the latent parameter given by sensor-2 coordinates."""
    coords = {"x": lambda P: P[:, 0], "x+z": lambda P: P[:, 0] + P[:, 2]}
    if name not in coords:
        raise InvalidArgumentError(f"unknown test function {name!r}; choose from {sorted(coords)}")
    g = generator

    def f(lat):
        lat = np.asarray(lat, dtype=float)
        lat = lat.reshape(-1, g.intrinsic_dim)
        return coords[name](g.embed(lat))

    return f


def fit_rate(eps, deviation):
    """Convergence rate ``-slope`` of ``log deviation`` against ``log eps``."""
    slope = np.polyfit(np.log(eps), np.log(deviation), 1)[0]
    return float(-slope)


def run_variance_rate(cfg):
    """RMS deviation between the discrete LAD row action and the continuous
    operator at a fixed point, over a grid of bandwidths.

    Row 0 of every trial dataset is pinned to ``eval_point``; the remaining
    samples are uniform on sensor 2 and the landmarks follow
    ``landmark_density``.  Both sensors share one bandwidth per grid value.
    """
    stages = _Stages()
    pair = _pair(cfg)
    g2 = pair[1]
    if not cfg.eps_grid:
        raise InvalidArgumentError("eps_grid must be nonempty")
    x0 = np.asarray(cfg.eval_point, dtype=float).reshape(1, g2.intrinsic_dim)
    f = _test_function(cfg.test_function, g2)
    eps = np.asarray(cfg.eps_grid, dtype=float)
    with stages("oracle"):
        sd = make_scheme(g2, cfg.density)
        sl = make_scheme(g2, cfg.landmark_density)
        f0 = float(f(x0)[0])
        cont = {}
        for e in eps:
            op = LandmarkOperator(pair, sd, sl, e)
            for alpha in cfg.alphas:
                cont[(e, alpha)] = (f0 - op.apply(f, x0[0], alpha)) / e
    seeds, rows = {}, []
    for trial in range(cfg.trials):
        s_data, s_lan = trial_seed(cfg.seed, 0, trial), trial_seed(cfg.seed, 1, trial)
        seeds[f"t{trial}"] = [s_data, s_lan]
        with stages("sample"):
            d = sample_pair(pair, cfg.n, cfg.density, s_data)
            d = dataset_from_params(pair, np.vstack([x0, d.params[1:]]), s_data)
            L = density_sample(cfg.landmark_density or "uniform", cfg.m, s_lan, pair)
        fv = f(d.params)
        with stages("deviation"):
            for e in eps:
                for alpha in cfg.alphas:
                    row = _base_row(cfg, trial, s_data, alpha, cfg.m, cfg.n, e, e)
                    row["landmark_seed"] = s_lan
                    disc = discrete_operator_row(d, L, fv, 0, e, alpha)
                    row["deviation"] = abs(disc - cont[(e, alpha)])
                    rows.append(row)
    rms, rates = [], []
    for alpha in cfg.alphas:
        dev = []
        for e in eps:
            vals = [r["deviation"] for r in rows if r["alpha"] == alpha and r["eps1"] == e]
            dev.append(float(np.sqrt(np.mean(np.square(vals)))))
            rms.append({"alpha": alpha, "eps": e, "rms_deviation": dev[-1]})
        rates.append({"alpha": alpha, "rate": fit_rate(eps, dev)})
    summary = {"rates": rates, "rms": rms}
    return RunResult({"deviation": rows, "rms": rms, "rates": rates}, summary,
                     _manifest(cfg, {"eps_grid": list(eps)}, seeds, stages))


def _timed(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), times


def fit_exponent(sizes, seconds):
    """Slope of ``log seconds`` against ``log size``."""
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


def run_bench(cfg):
    """Median wall-clock of build plus spectrum for AD and LAD.

    Three sweeps: LAD over ``n_grid`` at ``m``, AD over ``n_grid_ad`` and
    LAD over ``m_grid`` at ``n``.  Bandwidths are fixed per dataset before
    timing so the heuristic is not part of the timed region.
    """
    stages = _Stages()
    k = cfg.q + 1
    alpha = cfg.alphas[0]
    seeds, rows = {}, []

    def dataset(n):
        s = trial_seed(cfg.seed, 0, n)
        seeds[f"n{n}"] = s
        d = sample_pair(_pair(cfg), n, cfg.density, s)
        return d, _bandwidths(cfg, d)

    def lad_job(d, e, m, s):
        L = uniform_subset(d, m, s)
        return lambda: lad_spectrum(build_lad(d, L, e[0], e[1], alpha), k)

    def ad_job(d, e):
        return lambda: ad_spectrum(build_ad(d, e[0], e[1]), k)

    def record(sweep, method, n, m, fn):
        med, times = _timed(fn, cfg.repeats, cfg.warmup)
        rows.append({"sweep": sweep, "method": method, "n": n, "m": m,
                     "median_seconds": med, "runs": ";".join(f"{t:.6f}" for t in times)})
        return med

    with stages("lad_vs_n"):
        lad_n = [record("lad_vs_n", "lad", n, cfg.m, lad_job(*dataset(n), cfg.m,
                                                             trial_seed(cfg.seed, 1, n)))
                 for n in cfg.n_grid]
    with stages("ad_vs_n"):
        ad_n = [record("ad_vs_n", "ad", n, None, ad_job(*dataset(n))) for n in cfg.n_grid_ad]
    with stages("lad_vs_m"):
        d, e = dataset(cfg.n)
        lad_m = [record("lad_vs_m", "lad", cfg.n, m, lad_job(d, e, m, trial_seed(cfg.seed, 2, m)))
                 for m in cfg.m_grid]
    summary = {}
    if len(lad_n) > 1:
        summary["lad_exponent_n"] = fit_exponent(cfg.n_grid, lad_n)
    if len(ad_n) > 1:
        summary["ad_exponent_n"] = fit_exponent(cfg.n_grid_ad, ad_n)
    if len(lad_m) > 1:
        summary["lad_exponent_m"] = fit_exponent(cfg.m_grid, lad_m)
    both = sorted(set(cfg.n_grid) & set(cfg.n_grid_ad))
    summary["head_to_head"] = [
        {"n": n, "m": cfg.m,
         "lad_seconds": lad_n[cfg.n_grid.index(n)],
         "ad_seconds": ad_n[cfg.n_grid_ad.index(n)]} for n in both]
    return RunResult({"timing": rows}, summary, _manifest(cfg, {}, seeds, stages))


def run_generate(cfg):
    """Sample a paired dataset."""
    stages = _Stages()
    with stages("sample"):
        data = sample_pair(_pair(cfg), cfg.n, cfg.density, cfg.seed)
    tables = {name: [dict(zip([f"c{j + 1}" for j in range(a.shape[1])], r)) for r in a]
              for name, a in (("sensor1", data.sensor1), ("sensor2", data.sensor2),
                              ("params", data.params))}
    return RunResult(tables, {"n": data.n}, _manifest(cfg, {}, {"dataset": cfg.seed}, stages))


def run_embed(cfg, sensor1=None, sensor2=None):
    """Embed given (or generated) paired samples with AD, LAD or per-sensor DM.

    ``cfg.method`` is one of ``"lad"``, ``"ad"``, ``"dm1"``, ``"dm2"``.
    """
    stages = _Stages()
    seeds = {}
    if sensor1 is None:
        seeds["dataset"] = cfg.seed
        data = sample_pair(_pair(cfg), cfg.n, cfg.density, cfg.seed)
        sensor1, sensor2 = data.sensor1, data.sensor2
    X1, X2 = check_paired(sensor1, sensor2)
    data = PairedDataset(X1, X2, np.empty((len(X1), 0)))
    e1, e2 = _bandwidths(cfg, data)
    with stages("embed"):
        if cfg.method == "lad":
            seeds["landmarks"] = s = trial_seed(cfg.seed, 1)
            L = uniform_subset(data, min(cfg.m, data.n), s)
            emb = lad_embed(build_lad(data, L, e1, e2, cfg.alphas[0], cfg.start_sensor),
                            cfg.q, cfg.t)
        elif cfg.method == "ad":
            emb = ad_embed(build_ad(data, e1, e2, cfg.start_sensor), cfg.q, cfg.t)
        elif cfg.method in ("dm1", "dm2"):
            X, e = (X1, e1) if cfg.method == "dm1" else (X2, e2)
            emb = diffusion_map(X, e, cfg.q, cfg.t)
        else:
            raise InvalidArgumentError(f"unknown method {cfg.method!r}; choose lad, ad, dm1, dm2")
    rows = [dict(zip([f"c{j + 1}" for j in range(emb.q)], r)) for r in emb.coords]
    summary = {"eigenvalues": emb.eigenvalues_used, "method": cfg.method,
               "max_imag_ratio": emb.metadata.get("max_imag_ratio"),
               "eps1": e1, "eps2": e2, "t": emb.diffusion_time,
               "start_sensor": emb.start_sensor}
    return RunResult({"embedding": rows}, summary,
                     _manifest(cfg, {"eps1": e1, "eps2": e2}, seeds, stages))


RUNNERS = {
    "landmark_sweep": run_landmark_sweep,
    "alpha_sweep": run_alpha_sweep,
    "landmark_cases": run_landmark_cases,
    "initial_sensor": run_initial_sensor,
    "variance_rate": run_variance_rate,
    "bench_timing": run_bench,
    "generate": run_generate,
    "embed": run_embed,
}


def run(cfg):
    return RUNNERS[cfg.experiment_id](cfg)


def write_result(result, out_dir):
    """Write tables as CSV, the summary and the manifest as JSON.

    Returns the manifest path.  Output digests and the timestamp are
    recorded in the manifest only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_rows(out / f"{name}.csv", rows) for name, rows in sorted(result.tables.items())]
    paths.append(write_json(out / "summary.json", result.summary))
    man = replace(result.manifest,
                  outputs={p.name: digest(p) for p in paths},
                  timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    return write_json(out / "manifest.json", man.to_dict())
