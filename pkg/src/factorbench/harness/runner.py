"""Stage-checkpointed experiment orchestrator.

Stages run in a fixed order, each persisting its artifacts into the output
directory and recording completion in state.json; a rerun with the same
config resumes after the last completed stage. A rerun with a different
config against the same directory is refused.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path

from ..errors import FactorBenchError, InputError
from ..factorworld.dataset import generate_dataset, label_distribution, load_dataset, save_dataset
from ..factorworld.spec import default_spec
from ..generative.handles import save_montage, traversal_grid
from ..generative.infogan import load_generator, train_infogan
from ..generative.oracle import oracle_generator
from ..interventions.dispatch import InterventionConfig, InterventionContext, apply_intervention
from ..seeding import derive_seed
from ..task.classifier import ClassifierHandle, train_classifier
from .config import ExperimentConfig
from .report import EvalReport
from .scan import sensitivity_scan
from .settings import (
    acai_select,
    generalization_setting,
    real_factor_values,
    unsupervised_setting,
)

logger = logging.getLogger("factorbench")

STAGES = ("data", "generator", "baseline", "scan", "interventions", "settings", "acai", "report")


def _write_curve_csv(path: Path, history: list[dict]) -> None:
    import csv

    if not history:
        path.write_text("")
        return
    fields = list(history[0].keys())
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(history)


def ensure_disjoint_splits(splits: dict[str, list]) -> None:
    """Train/val/test must not share a single image; overlap is an error."""
    import hashlib

    seen: dict[str, str] = {}
    for name, samples in splits.items():
        for s in samples:
            digest = hashlib.blake2b(s.image.tobytes(), digest_size=16).hexdigest()
            owner = seen.get(digest)
            if owner is not None and owner != name:
                raise InputError(f"splits {owner!r} and {name!r} share an identical image")
            seen[digest] = name


class StageFailure(FactorBenchError, RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig, resume: bool = True):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.state_path = self.out / "state.json"
        self.state = self._load_state(resume)
        config.save(self.out / "config_resolved.json")

        self.splits: dict = {}
        self.spec = None
        self.generator = None
        self.baseline: ClassifierHandle | None = None
        self.ranking = None
        self.examined: list[int] = []
        self.intervened: dict[tuple[int, str], ClassifierHandle] = {}
        self.report: EvalReport | None = None

    def _load_state(self, resume: bool) -> dict:
        if self.state_path.exists():
            with open(self.state_path) as f:
                state = json.load(f)
            if state.get("config_hash") != self.config.hash():
                raise InputError(
                    f"output dir {self.out} holds a run with config hash "
                    f"{state.get('config_hash')}, current config hashes to {self.config.hash()}"
                )
            if not resume:
                state["completed"] = []
            return state
        return {"config_hash": self.config.hash(), "completed": [], "failed_stage": None}

    def _save_state(self) -> None:
        with open(self.state_path, "w") as f:
            json.dump(self.state, f, indent=2)

    def _done(self, stage: str) -> bool:
        return stage in self.state["completed"]

    def _mark(self, stage: str) -> None:
        if stage not in self.state["completed"]:
            self.state["completed"].append(stage)
        self.state["failed_stage"] = None
        self.state.pop("error", None)
        self._save_state()

    # ---- stages -------------------------------------------------------

    def _stage_data(self):
        cfg = self.config.data
        self.spec = default_spec(
            sensitive_factor=cfg.sensitive_factor,
            sensitivity=cfg.sensitivity,
            noise_sigma=cfg.noise_sigma,
            n_classes=cfg.n_classes,
            image_size=cfg.image_size,
        )
        data_dir = self.out / "data"
        sizes = {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test}
        if self._done("data"):
            for split in sizes:
                samples, spec, _ = load_dataset(data_dir / split)
                self.splits[split] = samples
            self.spec = spec
            return
        for split, n in sizes.items():
            seed = derive_seed(self.config.seed, "data", split)
            samples = generate_dataset(self.spec, n, seed)
            save_dataset(samples, self.spec, seed, data_dir / split)
            self.splits[split] = samples
        ensure_disjoint_splits(self.splits)
        self._mark("data")

    def _stage_generator(self):
        gcfg = self.config.generator
        if gcfg.kind == "oracle":
            mapping = dict(gcfg.oracle_mapping)
            if not mapping:
                mapping = {i: f.name for i, f in enumerate(self.spec.factors)}
            self.generator = oracle_generator(self.spec, mapping, d_z=gcfg.d_z, d_c=gcfg.d_c)
            meta = {"kind": "oracle", "mapping": {str(k): v for k, v in mapping.items()}}
            with open(self.out / "generator.json", "w") as f:
                json.dump(meta, f, indent=2)
            self._mark("generator")
            return
        gan_path = self.out / "generator.pt"
        if self._done("generator") and gan_path.exists():
            self.generator = load_generator(gan_path)
            return
        icfg = gcfg.infogan_config(seed=derive_seed(self.config.seed, "gan"))
        gen, _ = train_infogan(self.splits["train"], icfg, checkpoint_dir=self.out)
        gen.save(gan_path)
        with open(self.out / "generator.json", "w") as f:
            json.dump({"kind": "infogan", "path": gan_path.name}, f, indent=2)
        self.generator = gen
        self._mark("generator")

    def _stage_baseline(self):
        path = self.out / "baseline.pt"
        if self._done("baseline") and path.exists():
            self.baseline = ClassifierHandle.load(path)
            return
        ccfg = replace(self.config.classifier, seed=derive_seed(self.config.seed, "classifier"))
        self.baseline = train_classifier(
            self.splits["train"], ccfg, n_classes=self.spec.n_classes, metadata={"role": "baseline"}
        )
        self.baseline.save(path)
        self._mark("baseline")

    def _stage_scan(self):
        path = self.out / "scan.json"
        ecfg = self.config.evaluation
        if self._done("scan") and path.exists():
            with open(path) as f:
                payload = json.load(f)
            self.ranking = payload["ranking"]
            self.examined = payload["examined"]
            return
        dist = label_distribution(self.splits["test"], self.spec.n_classes)
        ranked = sensitivity_scan(
            self.baseline,
            self.generator,
            dist,
            len(self.splits["test"]),
            seed=derive_seed(self.config.seed, "synth-eval"),
            n_bins=ecfg.n_bins,
            min_count=ecfg.min_count,
            synth_multiplier=ecfg.synth_multiplier,
        )
        self.ranking = [
            {"code": i, "acc": b.acc, "acc_gap": b.acc_gap, "acc_min": b.acc_min}
            for i, b in ranked
        ]
        self.examined = [r["code"] for r in self.ranking[: self.config.grid.top_codes]]
        with open(path, "w") as f:
            json.dump({"ranking": self.ranking, "examined": self.examined}, f, indent=2)
        self._mark("scan")

    def _intervention_dir(self, code: int, kind: str) -> Path:
        return self.out / "interventions" / f"{kind}-{code}"

    def _stage_interventions(self):
        gcfg = self.config.grid
        ccfg = replace(self.config.classifier, seed=derive_seed(self.config.seed, "classifier"))
        context = InterventionContext(
            train_set=self.splits["train"],
            generator=self.generator,
            classifier_config=ccfg,
            test_size=len(self.splits["test"]),
            n_classes=self.spec.n_classes,
        )
        for code in self.examined:
            for kind in gcfg.kinds:
                run_dir = self._intervention_dir(code, kind)
                ckpt = run_dir / "checkpoint.pt"
                if ckpt.exists():
                    self.intervened[(code, kind)] = ClassifierHandle.load(ckpt)
                    continue
                icfg = InterventionConfig(
                    kind=kind,
                    factor_index=code,
                    da_multiplier=gcfg.da_multiplier,
                    aa_weight=gcfg.aa_weight,
                    aa_bins=gcfg.aa_bins,
                    sc_weight=gcfg.sc_weight,
                    sc_code_batch=gcfg.sc_code_batch,
                    symmetric_kl=gcfg.symmetric_kl,
                    seed=derive_seed(self.config.seed, "intervention", kind, code),
                )
                logger.info("training intervention %s-%s", kind, code)
                handle = apply_intervention(icfg, context)
                run_dir.mkdir(parents=True, exist_ok=True)
                handle.save(ckpt)
                with open(run_dir / "config.json", "w") as f:
                    json.dump(handle.metadata, f, indent=2, default=str)
                _write_curve_csv(run_dir / "curve.csv", handle.history)
                self.intervened[(code, kind)] = handle
        self._mark("interventions")

    def _report_skeleton(self) -> EvalReport:
        return EvalReport(
            seed=self.config.seed,
            config_hash=self.config.hash(),
            real_factor=self.config.real_factor,
            sensitivity_ranking=self.ranking,
            examined_codes=self.examined,
        )

    def _frozen_edges(self) -> tuple[float, float] | None:
        """Bin-edge range for the real factor; for extracted factors the
        validation min/max, frozen here and reused on test."""
        if self.config.factor_source == "manifest":
            return None
        values = real_factor_values(
            self.splits["val"], self.spec, self.config.real_factor, self.config.factor_source
        )
        return float(values.min()), float(values.max())

    def _stage_settings(self):
        path = self.out / "report.json"
        if self._done("settings") and path.exists():
            self.report = EvalReport.load(path)
            return
        ecfg = self.config.evaluation
        report = self._report_skeleton()
        dist = label_distribution(self.splits["test"], self.spec.n_classes)
        edges = self._frozen_edges()
        for code in self.examined:
            intervened = {
                f"{kind}-{code}": self.intervened[(code, kind)] for kind in self.config.grid.kinds
            }
            unsup = unsupervised_setting(
                self.baseline,
                intervened,
                self.generator,
                code,
                dist,
                len(self.splits["test"]),
                seed=derive_seed(self.config.seed, "synth-eval"),
                n_bins=ecfg.n_bins,
                min_count=ecfg.min_count,
                synth_multiplier=ecfg.synth_multiplier,
            )
            gen_rows = generalization_setting(
                self.baseline,
                intervened,
                self.splits["test"],
                self.spec,
                self.config.real_factor,
                source=self.config.factor_source,
                n_bins=ecfg.n_bins,
                min_count=ecfg.min_count,
                edges_range=edges,
            )
            report.unsupervised[code] = [r.to_dict() for r in unsup]
            report.generalization[code] = [r.to_dict() for r in gen_rows]
        report.save(path)
        self.report = report
        self._mark("settings")

    def _stage_acai(self):
        path = self.out / "report.json"
        if self._done("acai") and self.report and self.report.semisupervised:
            return
        ecfg = self.config.evaluation
        candidates = [(code, kind) for code in self.examined for kind in self.config.grid.kinds]
        edges = self._frozen_edges()
        selected, grid = acai_select(
            candidates,
            self.splits["val"],
            self.spec,
            self.config.real_factor,
            self.baseline,
            classifier_for=lambda code, kind: self.intervened[(code, kind)],
            source=self.config.factor_source,
            n_bins=ecfg.n_bins,
            min_count=ecfg.min_count,
            edges_range=edges,
        )
        code, kind = selected
        test_rows = generalization_setting(
            self.baseline,
            {f"ACAI ({kind}-{code})": self.intervened[(code, kind)]},
            self.splits["test"],
            self.spec,
            self.config.real_factor,
            source=self.config.factor_source,
            n_bins=ecfg.n_bins,
            min_count=ecfg.min_count,
            edges_range=edges,
        )
        self.report.semisupervised = {
            "selected_code": code,
            "selected_kind": kind,
            "selection_criterion": "max validation CAI_0.5; ties: val acc, lower code, grid order",
            "row": test_rows[1].to_dict(),
            "grid": grid,
        }
        self.report.save(path)
        self._mark("acai")

    def _stage_report(self):
        from ..cli import emit_report  # late import: cli is the presentation layer

        ecfg = self.config.evaluation
        for code in self.examined:
            grid = traversal_grid(
                self.generator,
                code,
                ecfg.traversal_steps,
                ecfg.traversal_rows,
                seed=derive_seed(self.config.seed, "traversal", code),
            )
            save_montage(grid, self.out / f"traversal_code{code}.png")
        emit_report(self.report, self.out)
        self._mark("report")

    # ---- driver -------------------------------------------------------

    def _run_stage_checked(self, stage: str) -> None:
        stage_fns = {
            "data": self._stage_data,
            "generator": self._stage_generator,
            "baseline": self._stage_baseline,
            "scan": self._stage_scan,
            "interventions": self._stage_interventions,
            "settings": self._stage_settings,
            "acai": self._stage_acai,
            "report": self._stage_report,
        }
        try:
            stage_fns[stage]()
        except Exception as exc:
            self.state["failed_stage"] = stage
            self.state["error"] = str(exc)
            self._save_state()
            raise StageFailure(stage, exc) from exc

    def run(self, until: str | None = None) -> EvalReport | None:
        if until is not None and until not in STAGES:
            raise InputError(f"unknown stage {until!r}, expected one of {STAGES}")
        for stage in STAGES:
            self._run_stage_checked(stage)
            if stage == until:
                break
        return self.report


def run_experiment(config: ExperimentConfig, resume: bool = True, until: str | None = None):
    """Execute (or resume) the full pipeline; returns the EvalReport when the
    evaluation stages were reached."""
    return ExperimentRunner(config, resume=resume).run(until=until)
