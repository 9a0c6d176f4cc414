"""Evaluation report structures persisted by experiment runs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..metrics import MetricBundle


@dataclass
class ReportRow:
    """One table row: a named model evaluated on one partition, with CAI
    computed against the baseline row of the same table."""

    name: str
    acc: float
    acc_gap: float
    acc_min: float
    cai_05: float
    cai_75: float
    per_bin_acc: list = field(default_factory=list)
    bin_counts: list = field(default_factory=list)

    @classmethod
    def from_bundle(cls, name: str, bundle: MetricBundle, cai_05: float, cai_75: float) -> "ReportRow":
        d = bundle.to_dict()
        return cls(
            name=name,
            acc=bundle.acc,
            acc_gap=bundle.acc_gap,
            acc_min=bundle.acc_min,
            cai_05=cai_05,
            cai_75=cai_75,
            per_bin_acc=d["per_bin_acc"],
            bin_counts=d["bin_counts"],
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalReport:
    seed: int
    config_hash: str
    real_factor: str
    sensitivity_ranking: list = field(default_factory=list)  # [{code, acc, acc_gap, acc_min}]
    examined_codes: list = field(default_factory=list)
    unsupervised: dict = field(default_factory=dict)    # code -> [row dicts]
    generalization: dict = field(default_factory=dict)  # code -> [row dicts]
    semisupervised: dict = field(default_factory=dict)  # {selected_kind, selected_code, row, grid}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "real_factor": self.real_factor,
            "sensitivity_ranking": self.sensitivity_ranking,
            "examined_codes": self.examined_codes,
            "unsupervised": {str(k): v for k, v in self.unsupervised.items()},
            "generalization": {str(k): v for k, v in self.generalization.items()},
            "semisupervised": self.semisupervised,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            seed=d["seed"],
            config_hash=d["config_hash"],
            real_factor=d["real_factor"],
            sensitivity_ranking=d["sensitivity_ranking"],
            examined_codes=d["examined_codes"],
            unsupervised={int(k): v for k, v in d["unsupervised"].items()},
            generalization={int(k): v for k, v in d["generalization"].items()},
            semisupervised=d["semisupervised"],
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        with open(path) as f:
            return cls.from_dict(json.load(f))
