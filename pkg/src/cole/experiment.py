"""Experiment configuration and the run / analyze / solve / resume commands.

Each ``cmd_*`` function returns a process exit status: 0 on success, 1 for
unusable input (bad config, malformed CSV, incompatible checkpoint) and 2
for failures while running. Output files written before a failure are kept.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .engine import CheckpointVersionError, Engine, EngineConfig, GenerationRecord
from .games import MatrixCoopGame, gen_convention_game, gen_dominant_game
from .graph import (
    PayoffMatrix,
    build_preference_graph,
    centrality_history,
    history_to_csv,
    preference_edges_to_csv,
    weighted_pagerank,
    wpg_to_csv,
)
from .shapley import CharacteristicFunction, SolverConfig, characteristic_value, solution_to_json, solve, unpopularity

log = logging.getLogger(__name__)

GAME_KINDS = ("dominant", "convention", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of a run, as one flat key-value document."""

    game: str = "dominant"
    game_actions: int = 4
    game_bonus: float = 1.0
    game_blocks: int = 2
    game_block_size: int = 2
    game_intra: float = 1.0
    game_inter: float = 0.0
    game_jitter: bool = True
    game_seed: int = 0
    game_path: str = ""
    noise_mode: str = "exact"
    episodes: int = 100
    generations: int = 10
    a: int = 1
    b: int = 3
    alpha: float = 1.0
    c: float = 1.0
    k: int = 3
    mc_samples: int = 10_000
    exact_limit: int = 10
    damping: float = 0.85
    cap: int = 50
    evict_window: int = 10
    oracle: str = "exact"
    local_steps: int = 10
    local_step_size: float = 1.0
    local_explore: float = 0.1
    ties: str = "lowest"
    seed: int = 0
    out: str = "runs/cole"

    def __post_init__(self):
        if self.game not in GAME_KINDS:
            raise ConfigError(f"game must be one of {GAME_KINDS}, got {self.game!r}")
        if self.game == "file" and not self.game_path:
            raise ConfigError("game 'file' needs game_path")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.ties not in ("lowest", "highest"):
            raise ConfigError(f"unknown tie rule {self.ties!r}")
        try:
            self.engine_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(obj) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in obj.items():
            default = known[key].default
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(f"{key} must be true/false")
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key} must be an integer")
            elif isinstance(default, float):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key} must be a number")
                value = float(value)
            elif not isinstance(value, str):
                raise ConfigError(f"{key} must be a string")
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            alpha=self.alpha,
            c=self.c,
            k=self.k,
            a=self.a,
            b=self.b,
            mc_samples=self.mc_samples,
            exact_limit=self.exact_limit,
            damping=self.damping,
            cap=self.cap,
            evict_window=self.evict_window,
            oracle=self.oracle,
            local_steps=self.local_steps,
            local_step_size=self.local_step_size,
            local_explore=self.local_explore,
            ties=self.ties,
        )

    def build_game(self) -> MatrixCoopGame:
        if self.game == "dominant":
            core = gen_dominant_game(self.game_actions, self.game_bonus).payoff_core
        elif self.game == "convention":
            core = gen_convention_game(
                self.game_blocks,
                self.game_intra,
                self.game_inter,
                seed=self.game_seed,
                block_size=self.game_block_size,
                jitter=self.game_jitter,
            ).payoff_core
        else:
            core = MatrixCoopGame.from_json(Path(self.game_path).read_text()).payoff_core
        return MatrixCoopGame(core, self.noise_mode, self.episodes)


def _write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def summary_line(rec: GenerationRecord) -> str:
    o = rec.oracle
    return (
        f"gen {rec.generation:4d}  eta_new={o.eta_new:.4f}  rank={o.rank}  "
        f"accepted={str(o.accepted).lower()}  J={o.objective_value:.6g}"
    )


def write_run_outputs(out: Path, engine: Engine, config: ExperimentConfig) -> None:
    payoff = engine.population.payoff
    _write(out / "payoff.csv", payoff.to_csv())
    if payoff.n >= 2:
        _write(out / "eta_history.csv", history_to_csv(centrality_history(payoff, config.ties)))
    _write(out / "checkpoint.json", json.dumps(engine.checkpoint(experiment=config.to_dict())) + "\n")


def _run_generations(engine: Engine, n: int, log_path: Path, stream) -> None:
    with open(log_path, "a") as fh:
        for _ in range(n):
            rec = engine.step()
            fh.write(rec.to_json() + "\n")
            fh.flush()
            print(summary_line(rec), file=stream)


def cmd_run(config_path, out=None, seed=None, generations=None, ties=None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        config = ExperimentConfig.load(config_path)
        overrides = {
            k: v
            for k, v in {"out": out, "seed": seed, "generations": generations, "ties": ties}.items()
            if v is not None
        }
        if overrides:
            config = ExperimentConfig.from_dict({**config.to_dict(), **overrides})
        game = config.build_game()
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(config.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write(out_dir / "config.json", config.to_json())
        log_path = out_dir / "generations.jsonl"
        log_path.write_text("")
        engine = Engine(game, config.engine_config(), config.seed)
        _run_generations(engine, config.generations, log_path, stream)
        write_run_outputs(out_dir, engine, config)
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 2
        log.exception("run failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def cmd_resume(checkpoint_path, extra_generations: int, out=None, stream=None) -> int:
    stream = stream or sys.stdout
    checkpoint_path = Path(checkpoint_path)
    try:
        obj = json.loads(checkpoint_path.read_text())
        engine = Engine.from_checkpoint(obj)
        config = ExperimentConfig.from_dict(obj["experiment"])
    except (CheckpointVersionError, ConfigError, ValueError, KeyError, OSError, TypeError) as exc:
        print(f"cannot resume from {checkpoint_path}: {exc}", file=sys.stderr)
        return 1
    if extra_generations < 0:
        print("extra generations must be >= 0", file=sys.stderr)
        return 1
    if extra_generations == 0:
        return 0
    out_dir = Path(out) if out is not None else checkpoint_path.parent
    config = ExperimentConfig.from_dict(
        {**config.to_dict(), "out": str(out_dir), "generations": config.generations + extra_generations}
    )
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _run_generations(engine, extra_generations, out_dir / "generations.jsonl", stream)
        _write(out_dir / "config.json", config.to_json())
        write_run_outputs(out_dir, engine, config)
    except Exception as exc:  # noqa: BLE001
        log.exception("resume failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def _load_payoff(path) -> PayoffMatrix:
    return PayoffMatrix.from_csv(Path(path).read_text())


def cmd_analyze(payoff_csv, ties: str = "lowest", out=".", stream=None) -> int:
    stream = stream or sys.stdout
    try:
        m = _load_payoff(payoff_csv)
        if m.n < 2:
            raise ValueError("analysis needs at least two strategies")
    except (ValueError, OSError) as exc:
        print(f"malformed payoff CSV {payoff_csv}: {exc}", file=sys.stderr)
        return 1
    try:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        pg = build_preference_graph(m, ties)
        _write(out_dir / "preference_edges.csv", preference_edges_to_csv(m, pg))
        _write(out_dir / "eta_history.csv", history_to_csv(centrality_history(m, ties)))
        _write(out_dir / "wpg.csv", wpg_to_csv(weighted_pagerank(m, ties=ties)))
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"analyzed {m.n} strategies -> {out_dir}", file=stream)
    return 0


def cmd_solve(payoff_csv, mc_samples: int = 10_000, seed: int = 0, out=".", ties: str = "lowest", stream=None) -> int:
    stream = stream or sys.stdout
    try:
        m = _load_payoff(payoff_csv)
        if m.n < 2:
            raise ValueError("solve needs at least two strategies")
        if mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
    except (ValueError, OSError) as exc:
        print(f"malformed input {payoff_csv}: {exc}", file=sys.stderr)
        return 1
    try:
        config = SolverConfig(mc_samples=mc_samples, seed=seed, ties=ties)
        shap, phi = solve(m, config)
        extra = {}
        if shap.method == "exact":
            cf = CharacteristicFunction(unpopularity(m, config), m)
            gap = abs(float(np.sum(shap.sv)) - characteristic_value(cf, range(m.n)))
            extra["efficiency_gap"] = gap
            status = "pass" if gap <= 1e-9 else "FAIL"
            print(f"efficiency |sum(sv) - v(N)| = {gap:.3e} [{status}]", file=stream)
        else:
            print(f"monte_carlo estimate with {shap.samples} samples (seed {seed})", file=stream)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        text = solution_to_json(shap, phi, seed=seed, **extra)
        _write(out_dir / "shapley.json", text + "\n")
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0
