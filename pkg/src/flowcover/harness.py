"""Random instance generation and paired verification campaigns.

A campaign runs ``trials`` seeded (instance, shift) pairs through the full
pipeline and the brute-force oracle, collecting per-trial reports.  Trial i
of a campaign with base seed s uses seed s+i for both the instance draw and
the grid shift, so a single ``gen``/``pipeline`` run with seed s+i reproduces
trial i exactly.

Instances are drawn uniformly within the configured caps and redrawn (from
the same seeded stream, hence reproducibly) until the preprocessed horizon
fits the campaign's horizon cap, which also keeps the exhaustive oracle
within budget.  Trials may run in a process pool; results are merged in trial
order, so summaries and solution data are identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random

from .jobs import JobInstance, make_instance, perturb_release_times, total_horizon
from .oracle import OracleBudget, VerifyReport, verify_pair

CSV_HEADER = "seed,n,P,K,shift,T,dp_cost,oracle_cost,states,ms"


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    trials: int = 1
    K: int = 2
    epsilon: Fraction = Fraction(1)
    n_max: int = 4
    p_max: int = 4
    w_max: int = 4
    horizon_max: int = 64
    leaf_len: int = 1
    cost_model: str = "weighted_length"
    workers: int = 1
    budget: OracleBudget = field(default_factory=OracleBudget)

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if min(self.n_max, self.p_max, self.w_max, self.horizon_max, self.workers) < 1:
            raise ValueError("size caps and workers must be >= 1")


def random_instance(rng: Random, n_max: int, p_max: int, w_max: int) -> JobInstance:
    """Uniform draw within the caps; releases land in [0, p_max]."""
    n = rng.randint(1, n_max)
    triples = [
        (rng.randint(0, p_max), rng.randint(1, p_max), rng.randint(1, w_max))
        for _ in range(n)
    ]
    return make_instance(triples)


def campaign_instance(seed: int, cfg: CampaignConfig, max_attempts: int = 1000) -> JobInstance:
    """Seeded draw, redrawn until the preprocessed horizon fits the cap."""
    rng = Random(seed)
    for _ in range(max_attempts):
        inst = random_instance(rng, cfg.n_max, cfg.p_max, cfg.w_max)
        work = perturb_release_times(inst, cfg.epsilon)
        if total_horizon(work) <= cfg.horizon_max:
            return inst
    raise RuntimeError(
        f"no instance under horizon cap {cfg.horizon_max} in {max_attempts} draws; "
        "loosen the caps"
    )


def run_trial(cfg: CampaignConfig, trial: int) -> VerifyReport:
    seed = cfg.seed + trial
    instance = campaign_instance(seed, cfg)
    return verify_pair(
        instance,
        K=cfg.K,
        seed=seed,
        epsilon=cfg.epsilon,
        leaf_len=cfg.leaf_len,
        cost_model=cfg.cost_model,
        budget=cfg.budget,
    )


@dataclass(frozen=True)
class CampaignResult:
    config: CampaignConfig
    reports: tuple[VerifyReport, ...]

    @property
    def verified(self) -> int:
        return sum(1 for r in self.reports if r.ok)

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.reports if r.skipped)

    @property
    def failures(self) -> tuple[VerifyReport, ...]:
        return tuple(r for r in self.reports if not r.ok and not r.skipped)

    def summary_dict(self, include_timing: bool = False) -> dict:
        """Campaign summary; timing is excluded by default so the output is
        byte-identical across repeated runs and worker counts."""
        rows = []
        for trial, r in enumerate(self.reports):
            row = {
                "trial": trial,
                "seed": r.seed,
                "status": r.status,
                "n": r.n,
                "P": r.P,
                "T": r.T,
                "shift": r.shift,
                "dp_cost": r.dp_cost,
                "oracle_cost": r.oracle_cost,
                "dp_selection": list(r.dp_selection or ()),
                "oracle_selection": list(r.oracle_selection or ()),
                "states": r.dp_states,
            }
            if include_timing:
                row["ms"] = round(r.dp_ms + (r.oracle_ms or 0.0), 3)
            rows.append(row)
        return {
            "K": self.config.K,
            "epsilon": str(self.config.epsilon),
            "seed": self.config.seed,
            "trials": self.config.trials,
            "verified": self.verified,
            "failed": len(self.failures),
            "skipped": self.skipped,
            "results": rows,
        }

    def summary_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.summary_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def csv_lines(self) -> list[str]:
        lines = [CSV_HEADER]
        for r in self.reports:
            oracle_cost = "" if r.oracle_cost is None else str(r.oracle_cost)
            dp_cost = "" if r.dp_cost is None else str(r.dp_cost)
            ms = round(r.dp_ms + (r.oracle_ms or 0.0))
            lines.append(
                f"{r.seed},{r.n},{r.P},{r.K},{r.shift},{r.T},"
                f"{dp_cost},{oracle_cost},{r.dp_states},{ms}"
            )
        return lines

    def plot_lines(self) -> list[str]:
        """State count against n*P for verified trials, gnuplot/CSV friendly."""
        points = sorted((r.n * r.P, r.dp_states) for r in self.reports if r.ok)
        return ["nP,states"] + [f"{np},{states}" for np, states in points]


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Run all trials, in a process pool when ``cfg.workers`` > 1.

    Reports come back in trial order regardless of scheduling, so any two
    runs of the same config produce identical results.
    """
    trials = range(cfg.trials)
    if cfg.workers <= 1:
        reports = [run_trial(cfg, t) for t in trials]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(run_trial, [cfg] * cfg.trials, trials))
    return CampaignResult(config=cfg, reports=tuple(reports))
