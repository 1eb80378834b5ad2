"""The full pipeline on a latent-class benchmark population.

A hidden class drives 12 categorical attributes, so the joint has strong
structure that a marginal sampler cannot reproduce. The pipeline splits
the sample, fits a VAE, a Gibbs sampler, and a Chow-Liu Bayesian network,
samples 5,000 agents from each, and scores everything against the test
split. The printed table mirrors the report CSV: SRMSE per view plus the
diversity statistics (mu_NS = 0 flags pure replication).
"""

import tempfile
from pathlib import Path

from agentsynth.pipeline import ExperimentConfig, MethodSpec, run_pipeline
from agentsynth.synthdata import SyntheticGeneratorSpec

print(__doc__)

out_dir = Path(tempfile.mkdtemp(prefix="agentsynth-demo-"))
config = ExperimentConfig(
    seed=2,
    out_dir=str(out_dir),
    synthetic=SyntheticGeneratorSpec(
        "latent-class", size=6000, seed=11, n_variables=12, n_classes=5,
        category_width=4, dependence=0.85),
    train_frac=0.25,
    val_frac_of_train=0.2,
    methods=[
        MethodSpec("vae", "vae", {"hidden": [64], "latent_dim": 6, "beta": 0.5,
                                  "epochs": 80, "batch_size": 64, "seed": 3}),
        MethodSpec("gibbs", "gibbs", {"warmup": 1000, "thinning": 5, "seed": 4}),
        MethodSpec("bn", "bn", {"algorithm": "tree"}),
    ],
    generation_count=5000,
)

report = run_pipeline(config)

header = f"{'model':<18}{'Marg.':>8}{'Bivar.':>8}{'Trivar.':>9}{'Basic':>8}{'Pair.':>8}{'mu_NS':>8}{'s_NS':>8}"
print(header)
print("-" * len(header))
for name in report.method_names:
    row = report.rows[name]
    pair = f"{row.pairwise.srmse:7.3f}" if row.pairwise else "    n/a"
    print(f"{name:<18}"
          f"{row.views['marginal'].srmse:8.3f}"
          f"{row.views['bivariate'].srmse:8.3f}"
          f"{row.views['trivariate'].srmse:9.3f}"
          f"{row.views['projected'].srmse:8.3f}"
          f" {pair}"
          f"{row.diversity.mu_ns:8.3f}"
          f"{row.diversity.sigma_ns:8.3f}")

print(f"\nartifacts written under {out_dir}:")
for path in sorted(out_dir.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(out_dir)}")
