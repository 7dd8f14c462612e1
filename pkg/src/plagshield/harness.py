"""Experiment orchestration: corpus generation, evaluation stages, reports.

Stages mirror the evaluation protocol: effect on unrelated programs,
insertion-based obfuscation, refactoring-based obfuscation, AI-based
obfuscation/generation (through the chat client), and the cost of
threshold-driven obfuscation against each defense variant.

Determinism contract: everything under ``stages/``, ``attacks/`` and the
manifest is byte-reproducible from (config, seed), for any worker count.
Wall-clock measurements go to ``timings/`` only.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import random
from dataclasses import dataclass

from .attacks import (REFACTOR_OPS, AttackTrace, ObfuscationRecipe,
                      insert_dead_exhaustive, insert_dead_threshold,
                      refactor_obfuscate)
from .corpus import (SOURCE_EXTENSIONS, CorpusManifest, ingest_corpus,
                     load_corpus_programs)
from .detector import VARIANTS, DefenseConfig, compare, compare_corpus
from .errors import MissingArtifacts
from .matcher import MatchParams
from .minilang.generator import GeneratorConfig, generate_program
from .report import StageReport, VariantReport, box_plot_svg
from .smm import SmmParams
from .stats import cliffs_delta, delta_report, summarize, wilcoxon_one_sided
from .tokens import Program

STAGES = ("unrelated", "insertion", "refactoring", "llm_obf", "llm_gen", "threshold_cost")


@dataclass
class ExperimentConfig:
    corpus_dir: str
    output_dir: str
    seed: int = 1
    jobs: int = 1
    variants: tuple[str, ...] = VARIANTS
    categories: tuple[str, ...] = ("OP", "P2S")
    # matcher: default cut-off 9 suits token-dense languages; MiniLang emits
    # roughly one token per statement, so experiments calibrate to 5
    min_match_len: int = 5
    smm_max_gap: int = 6
    smm_min_neighbor_len: int = 2
    smm_count_gap_tokens: bool = True
    insertion_programs: int = 20
    refactor_programs: int = 20
    refactor_intensity: int = 50
    refactor_ops: tuple[str, ...] = REFACTOR_OPS
    threshold_programs: int = 5
    threshold_target: float = 25.0
    threshold_max_iters: int = 300
    llm_prompts_file: str = ""
    llm_obf_programs: int = 3
    llm_gen_n: int = 10
    llm_assignment: str = "Read integers and print derived values."
    alpha_plag: float = 0.01
    alpha_gen: float = 0.05
    continuity_correction: bool = True
    generator_programs: int = 40
    generator_min_statements: int = 60
    generator_max_statements: int = 120
    extensions: tuple[str, ...] = SOURCE_EXTENSIONS

    def __post_init__(self):
        if not self.variants:
            raise ValueError("at least one detector variant is required")
        if not self.categories:
            raise ValueError("at least one pair category is required")
        for variant in self.variants:
            if variant not in VARIANTS:
                raise ValueError(f"unknown variant {variant!r}")

    def match_params(self) -> MatchParams:
        return MatchParams(self.min_match_len)

    def smm_params(self) -> SmmParams:
        return SmmParams(self.smm_max_gap, self.smm_min_neighbor_len,
                         self.smm_count_gap_tokens)

    def defense(self, variant: str) -> DefenseConfig:
        return DefenseConfig.from_variant(variant, self.smm_params())

    def to_file(self, path: str) -> None:
        record = dataclasses.asdict(self)
        for key, value in record.items():
            if isinstance(value, tuple):
                record[key] = list(value)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(record, handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as handle:
            record = json.load(handle)
        for key in ("variants", "categories", "refactor_ops", "extensions"):
            if key in record:
                record[key] = tuple(record[key])
        return cls(**record)


def derive_seed(base: int, *parts) -> int:
    text = ":".join([str(base)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def generate_corpus(config: ExperimentConfig) -> list[str]:
    """Write a seeded synthetic corpus in submission layout."""
    os.makedirs(config.corpus_dir, exist_ok=True)
    gen_config = GeneratorConfig(
        min_statements=config.generator_min_statements,
        max_statements=config.generator_max_statements)
    ids = []
    for index in range(config.generator_programs):
        program_id = f"gen{index:03d}"
        seed = derive_seed(config.seed, "corpus", program_id)
        program = generate_program(seed, program_id, gen_config)
        sub_dir = os.path.join(config.corpus_dir, program_id)
        os.makedirs(sub_dir, exist_ok=True)
        for path, text in program.files:
            with open(os.path.join(sub_dir, os.path.basename(path)), "w",
                      encoding="utf-8") as handle:
                handle.write(text)
        ids.append(program_id)
    return ids


class Harness:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = config.output_dir

    # --- filesystem layout ---

    def _path(self, *parts: str) -> str:
        full = os.path.join(self.out, *parts)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def stage_dir(self, stage: str) -> str:
        path = os.path.join(self.out, "stages", stage)
        os.makedirs(path, exist_ok=True)
        return path

    # --- corpus ---

    def ensure_manifest(self) -> CorpusManifest:
        manifest_path = self._path("manifest.json")
        if os.path.exists(manifest_path):
            return CorpusManifest.load(manifest_path)
        if not os.path.isdir(self.config.corpus_dir):
            raise MissingArtifacts(
                f"corpus directory {self.config.corpus_dir!r} not found",
                hint="run `plagshield gen-corpus` or point corpus_dir at submissions")
        manifest = ingest_corpus(self.config.corpus_dir, self.config.extensions)
        manifest.save(manifest_path)
        with open(self._path("exclusions.log"), "w", encoding="utf-8") as handle:
            for item in manifest.excluded:
                handle.write(f"{item['program_id']}: {item['reason']}\n")
        self.config.to_file(self._path("config.json"))
        return manifest

    def originals(self) -> dict:
        manifest = self.ensure_manifest()
        programs = load_corpus_programs(self.config.corpus_dir, manifest,
                                        self.config.extensions)
        return {pid: programs[pid] for pid in manifest.ids("original") if pid in programs}

    def victims(self, count: int, label: str) -> list[tuple[str, Program]]:
        """Deterministic victim selection among MiniLang originals."""
        programs = self.originals()
        candidates = sorted(pid for pid, item in programs.items()
                            if isinstance(item, Program))
        if not candidates:
            raise MissingArtifacts("no MiniLang originals to attack",
                                   hint="token-stream imports cannot be attacked")
        rng = random.Random(derive_seed(self.config.seed, "victims", label))
        picked = sorted(rng.sample(candidates, min(count, len(candidates))))
        return [(pid, programs[pid]) for pid in picked]

    # --- similarity computation ---

    def op_similarities(self, variant: str) -> list[tuple[str, str, float]]:
        programs = self.originals()
        ordered = [programs[pid] for pid in sorted(programs)]
        results = compare_corpus(ordered, self.config.match_params(),
                                 self.config.defense(variant), jobs=self.config.jobs)
        return [(r.id_a, r.id_b, r.similarity) for r in results]

    def pair_similarities(self, variant: str,
                          pairs: list[tuple[Program, Program]]) -> list[tuple[str, str, float]]:
        params = self.config.match_params()
        defense = self.config.defense(variant)
        out = []
        for a, b in pairs:
            result = compare(a, b, params, defense)
            out.append((result.id_a, result.id_b, result.similarity))
        return out

    def persist_similarities(self, stage: str, variant: str, category: str,
                             sims: list[tuple[str, str, float]]) -> None:
        path = os.path.join(self.stage_dir(stage), f"similarities_{variant}_{category}.json")
        record = {"stage": stage, "variant": variant, "category": category,
                  "pairs": [[a, b, s] for a, b, s in sorted(sims)]}
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(record, handle, indent=2, sort_keys=True)
            handle.write("\n")

    # --- stage assembly ---

    def _attack_stage(self, stage: str, attacked: dict[str, tuple[Program, AttackTrace]],
                      category: str = "P2S") -> StageReport:
        """Common evaluation: OP baseline plus per-variant attacked-pair stats."""
        programs = self.originals()
        report = StageReport(stage=stage, metadata={
            "seed": self.config.seed,
            "min_match_len": self.config.min_match_len,
            "alpha": self.config.alpha_plag,
            "quartiles": "type-7 linear interpolation",
            "continuity_correction": self.config.continuity_correction,
        })
        plot_groups = []
        base_sims: list[float] = []
        for variant in self.config.variants:
            op = self.op_similarities(variant)
            self.persist_similarities(stage, variant, "OP", op)
            pairs = [(programs[src], prog) for src, (prog, _) in sorted(attacked.items())]
            p2s = self.pair_similarities(variant, pairs)
            self.persist_similarities(stage, variant, category, p2s)

            op_values = [s for _, _, s in op]
            p2s_values = [s for _, _, s in sorted(p2s)]
            if variant == "Base":
                base_sims = p2s_values
            op_summary = summarize(op_values)
            report.reports.append(VariantReport(variant, "OP", op_summary))
            wilcoxon = cliff = None
            if variant != "Base" and base_sims:
                wilcoxon = wilcoxon_one_sided(
                    p2s_values, base_sims,
                    continuity_correction=self.config.continuity_correction)
                cliff = cliffs_delta(p2s_values, base_sims)
            report.reports.append(VariantReport(
                variant, category, summarize(p2s_values),
                deltas=delta_report(summarize(p2s_values), op_summary),
                wilcoxon=wilcoxon, cliffs=cliff))
            plot_groups.append((f"{variant} OP", op_values))
            plot_groups.append((f"{variant} {category}", p2s_values))
        self._write_stage_report(stage, report, plot_groups)
        return report

    def _write_stage_report(self, stage: str, report: StageReport,
                            plot_groups: list[tuple[str, list[float]]]) -> None:
        directory = self.stage_dir(stage)
        with open(os.path.join(directory, "report.json"), "w", encoding="utf-8") as handle:
            handle.write(report.to_json())
        with open(os.path.join(directory, "report.csv"), "w", encoding="utf-8") as handle:
            handle.write(report.to_csv())
        with open(os.path.join(directory, "boxplot.svg"), "w", encoding="utf-8") as handle:
            handle.write(box_plot_svg(plot_groups, title=f"stage: {stage}"))

    def _persist_attack(self, stage: str, program: Program, trace: AttackTrace) -> None:
        base = os.path.join(self.out, "attacks", stage)
        os.makedirs(base, exist_ok=True)
        for path, text in program.files:
            with open(os.path.join(base, os.path.basename(path)), "w",
                      encoding="utf-8") as handle:
                handle.write(text)
        # wall_time intentionally stays out of the record; see timings/
        with open(os.path.join(base, f"{program.program_id}.trace.json"), "w",
                  encoding="utf-8") as handle:
            json.dump(trace.to_record(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    def _record_timing(self, stage: str, rows: list[dict]) -> None:
        with open(self._path("timings", f"{stage}.json"), "w", encoding="utf-8") as handle:
            json.dump(rows, handle, indent=2, sort_keys=True)
            handle.write("\n")

    # --- stages ---

    def stage_unrelated(self) -> StageReport:
        report = StageReport(stage="unrelated", metadata={
            "seed": self.config.seed, "min_match_len": self.config.min_match_len,
            "alpha": self.config.alpha_plag,
            "note": "original pairs should NOT shift upward under defenses",
        })
        plot_groups = []
        base_values: list[float] = []
        for variant in self.config.variants:
            op = self.op_similarities(variant)
            self.persist_similarities("unrelated", variant, "OP", op)
            values = [s for _, _, s in sorted(op)]
            if variant == "Base":
                base_values = values
            wilcoxon = cliff = None
            if variant != "Base" and base_values:
                wilcoxon = wilcoxon_one_sided(
                    values, base_values,
                    continuity_correction=self.config.continuity_correction)
                cliff = cliffs_delta(values, base_values)
            report.reports.append(VariantReport(
                variant, "OP", summarize(values), wilcoxon=wilcoxon, cliffs=cliff))
            plot_groups.append((variant, values))
        self._write_stage_report("unrelated", report, plot_groups)
        return report

    def stage_insertion(self) -> StageReport:
        attacked = {}
        timing = []
        for pid, program in self.victims(self.config.insertion_programs, "insertion"):
            seed = derive_seed(self.config.seed, "insertion", pid)
            out, trace = insert_dead_exhaustive(program, seed, output_id=f"{pid}-ins")
            attacked[pid] = (out, trace)
            self._persist_attack("insertion", out, trace)
            timing.append({"program": pid, "wall_time": trace.wall_time})
        self._record_timing("insertion", timing)
        return self._attack_stage("insertion", attacked)

    def stage_refactoring(self) -> StageReport:
        attacked = {}
        timing = []
        for pid, program in self.victims(self.config.refactor_programs, "refactoring"):
            recipe = ObfuscationRecipe(
                "refactoring", seed=derive_seed(self.config.seed, "refactoring", pid),
                intensity=self.config.refactor_intensity,
                op_whitelist=self.config.refactor_ops)
            out, trace = refactor_obfuscate(program, recipe, output_id=f"{pid}-ref")
            attacked[pid] = (out, trace)
            self._persist_attack("refactoring", out, trace)
            timing.append({"program": pid, "wall_time": trace.wall_time})
        self._record_timing("refactoring", timing)
        return self._attack_stage("refactoring", attacked)

    def stage_llm_obf(self, endpoint) -> StageReport:
        from .llm import load_prompt_file, obfuscate_via_llm
        if not self.config.llm_prompts_file:
            raise MissingArtifacts("llm stage needs a prompts file",
                                   hint="set llm_prompts_file in the config")
        templates = [t for t in load_prompt_file(self.config.llm_prompts_file)
                     if t.mode == "obfuscate"]
        if not templates:
            raise MissingArtifacts("prompts file has no obfuscate templates")
        attacked = {}
        jobs = []
        for pid, program in self.victims(self.config.llm_obf_programs, "llm_obf"):
            for template in templates:
                result = obfuscate_via_llm(program, template, endpoint,
                                           output_id=f"{pid}-llm{template.id}")
                jobs.append({"program": pid, **result.to_record()})
                if result.program is not None and pid not in attacked:
                    trace = AttackTrace(
                        recipe=ObfuscationRecipe("llm", seed=template.id),
                        source_id=pid, output_id=result.program.program_id,
                        outcome=result.outcome)
                    attacked[pid] = (result.program, trace)
                    self._persist_attack("llm_obf", result.program, trace)
        with open(os.path.join(self.stage_dir("llm_obf"), "jobs.json"), "w",
                  encoding="utf-8") as handle:
            json.dump(jobs, handle, indent=2, sort_keys=True)
            handle.write("\n")
        if not attacked:
            raise MissingArtifacts("no valid llm obfuscation outputs",
                                   hint="inspect stages/llm_obf/jobs.json")
        return self._attack_stage("llm_obf", attacked)

    def stage_llm_gen(self, endpoint) -> StageReport:
        from .llm import generate_via_llm, load_prompt_file
        if not self.config.llm_prompts_file:
            raise MissingArtifacts("llm stage needs a prompts file",
                                   hint="set llm_prompts_file in the config")
        templates = [t for t in load_prompt_file(self.config.llm_prompts_file)
                     if t.mode == "generate"]
        if not templates:
            raise MissingArtifacts("prompts file has no generate templates")
        generated: list[Program] = []
        jobs = []
        per_template = max(1, self.config.llm_gen_n // len(templates))
        for template in templates:
            results = generate_via_llm(self.config.llm_assignment, template, endpoint,
                                       per_template, seed_tag=str(self.config.seed))
            for result in results:
                jobs.append(result.to_record())
                if result.program is not None:
                    generated.append(result.program)
        with open(os.path.join(self.stage_dir("llm_gen"), "jobs.json"), "w",
                  encoding="utf-8") as handle:
            json.dump(jobs, handle, indent=2, sort_keys=True)
            handle.write("\n")
        if len(generated) < 2:
            raise MissingArtifacts("need at least two valid generated programs")

        report = StageReport(stage="llm_gen", metadata={
            "seed": self.config.seed, "min_match_len": self.config.min_match_len,
            "alpha": self.config.alpha_gen,
        })
        plot_groups = []
        base_fg: list[float] = []
        for variant in self.config.variants:
            op = self.op_similarities(variant)
            self.persist_similarities("llm_gen", variant, "OP", op)
            fg_results = compare_corpus(generated, self.config.match_params(),
                                        self.config.defense(variant), jobs=self.config.jobs)
            fg = [(r.id_a, r.id_b, r.similarity) for r in fg_results]
            self.persist_similarities("llm_gen", variant, "FG", fg)
            op_values = [s for _, _, s in op]
            fg_values = [s for _, _, s in sorted(fg)]
            if variant == "Base":
                base_fg = fg_values
            wilcoxon = cliff = None
            if variant != "Base" and base_fg:
                wilcoxon = wilcoxon_one_sided(
                    fg_values, base_fg,
                    continuity_correction=self.config.continuity_correction)
                cliff = cliffs_delta(fg_values, base_fg)
            op_summary = summarize(op_values)
            report.reports.append(VariantReport(variant, "OP", op_summary))
            report.reports.append(VariantReport(
                variant, "FG", summarize(fg_values),
                deltas=delta_report(summarize(fg_values), op_summary),
                wilcoxon=wilcoxon, cliffs=cliff))
            plot_groups.append((f"{variant} OP", op_values))
            plot_groups.append((f"{variant} FG", fg_values))
        self._write_stage_report("llm_gen", report, plot_groups)
        return report

    def stage_threshold_cost(self) -> StageReport:
        rows = []
        timing = []
        for pid, program in self.victims(self.config.threshold_programs, "threshold"):
            for variant in self.config.variants:
                seed = derive_seed(self.config.seed, "threshold", pid, variant)
                out, trace = insert_dead_threshold(
                    program, self.config.defense(variant),
                    self.config.threshold_target, seed,
                    max_iters=self.config.threshold_max_iters,
                    params=self.config.match_params(),
                    output_id=f"{pid}-thr-{variant}")
                self._persist_attack("threshold_cost", out, trace)
                rows.append({
                    "program": pid, "variant": variant,
                    "iterations": trace.iterations,
                    "accepted_insertions": trace.inserted_statements,
                    "size_growth": trace.size_growth,
                    "outcome": trace.outcome,
                    "final_similarity": trace.similarity_trajectory[-1],
                })
                timing.append({"program": pid, "variant": variant,
                               "wall_time": trace.wall_time})
        self._record_timing("threshold_cost", timing)

        aggregates = {}
        for variant in self.config.variants:
            of_variant = [r for r in rows if r["variant"] == variant]
            aggregates[variant] = {
                "median_iterations": summarize(
                    [r["iterations"] for r in of_variant]).median,
                "median_accepted_insertions": summarize(
                    [r["accepted_insertions"] for r in of_variant]).median,
                "median_size_growth": summarize(
                    [r["size_growth"] for r in of_variant]).median,
                "outcomes": sorted(r["outcome"] for r in of_variant),
            }
        directory = self.stage_dir("threshold_cost")
        with open(os.path.join(directory, "report.json"), "w", encoding="utf-8") as handle:
            json.dump({"stage": "threshold_cost", "rows": rows,
                       "aggregates": aggregates,
                       "threshold": self.config.threshold_target,
                       "max_iters": self.config.threshold_max_iters},
                      handle, indent=2, sort_keys=True)
            handle.write("\n")
        plot_groups = [(variant,
                        [r["size_growth"] for r in rows if r["variant"] == variant])
                       for variant in self.config.variants]
        with open(os.path.join(directory, "boxplot.svg"), "w", encoding="utf-8") as handle:
            handle.write(box_plot_svg(plot_groups, title="threshold attack: size growth",
                                      y_label="size growth [%]",
                                      y_max=max(100.0, max(
                                          r["size_growth"] for r in rows) + 10)))
        report = StageReport(stage="threshold_cost", metadata=aggregates)
        return report

    def run_stage(self, stage: str, llm_endpoint=None) -> StageReport:
        self.ensure_manifest()
        if stage == "unrelated":
            return self.stage_unrelated()
        if stage == "insertion":
            return self.stage_insertion()
        if stage == "refactoring":
            return self.stage_refactoring()
        if stage == "llm_obf":
            if llm_endpoint is None:
                raise MissingArtifacts("llm_obf needs an endpoint",
                                       hint="set PLAGSHIELD_LLM_URL")
            return self.stage_llm_obf(llm_endpoint)
        if stage == "llm_gen":
            if llm_endpoint is None:
                raise MissingArtifacts("llm_gen needs an endpoint",
                                       hint="set PLAGSHIELD_LLM_URL")
            return self.stage_llm_gen(llm_endpoint)
        if stage == "threshold_cost":
            return self.stage_threshold_cost()
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")


def detect_ranked(corpus_dir: str, config: ExperimentConfig,
                  variant: str = "Both") -> list:
    """Corpus scan producing the ranked pair list (highest similarity first)."""
    harness = Harness(config)
    programs = harness.originals()
    ordered = [programs[pid] for pid in sorted(programs)]
    results = compare_corpus(ordered, config.match_params(),
                             config.defense(variant), jobs=config.jobs)
    return sorted(results, key=lambda r: (-r.similarity, r.id_a, r.id_b))
