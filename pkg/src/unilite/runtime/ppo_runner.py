"""Synchronized PPO: strictly alternating collect/update cycles.

Collection and updates run on one thread, so collector-active and
learner-update intervals can never overlap; the weight slot is still used
for the handoff so the trace carries the same synchronization events as
the loose regimes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..algos import AcOpt, AcParams, adaptive_lr_step, gae, ppo_update
from ..envcore import materialize
from ..envcore.rng import stream
from ..tensornet import Arch, init_params, save_checkpoint
from ..traceview import (
    Tracer,
    attribute_cycles,
    export_chrome_json,
    overhead_report,
    render_cycle_table,
    render_overhead,
    segment_cycles,
    write_cycle_csv,
)
from .collect import SegmentCollector
from .report import MetricsWriter, RunClock, RunConfig, RunReport
from .sync import WeightSlot

PPO_FIELDS = [
    "iteration", "env_steps", "policy_loss", "value_loss", "entropy", "kl",
    "lr", "staleness", "mean_episode_reward", "mean_tracking_kernel",
]


def build_ac_params(cfg: RunConfig, pool) -> AcParams:
    actor = init_params(
        Arch(pool.obs_dim, cfg.hidden_dims, pool.action_dim),
        seed=cfg.seed,
        init_noise_std=cfg.init_noise_std,
    )
    critic = init_params(
        Arch(pool.critic_obs_dim, cfg.hidden_dims, 1), seed=cfg.seed + 1
    )
    return AcParams(actor, critic)


def finalize_trace(tracer: Tracer, out_dir: Path | None, report: RunReport,
                   report_lines: list[str]) -> None:
    """Export trace, run the cycle analyses, and write report files."""
    events = tracer.events()
    if out_dir is not None and tracer.enabled:
        trace_path = out_dir / "trace.json"
        export_chrome_json(events, trace_path)
        report.trace_path = str(trace_path)
    if tracer.enabled:
        try:
            cycles = segment_cycles(events)
            cycle_report = attribute_cycles(events, cycles)
            report.retained_cycle_mean_ms = cycle_report.mean("cycle_ms")
            report_lines.append(render_cycle_table(cycle_report))
            report_lines.append(render_overhead(overhead_report(cycle_report)))
            if out_dir is not None:
                write_cycle_csv(cycle_report, out_dir / "report.csv")
        except ValueError:
            pass  # too few cycles to analyze
    if out_dir is not None:
        (out_dir / "report.txt").write_text("".join(report_lines))


def run_ppo_sync(cfg: RunConfig) -> RunReport:
    assert cfg.algo == "ppo"
    clock = RunClock()
    tracer = Tracer(enabled=cfg.trace_enabled)
    pool = materialize(cfg.task, cfg.num_envs, cfg.backend, cfg.seed)
    params = build_ac_params(cfg, pool)
    opt = AcOpt.for_params(params, cfg.ppo.lr)
    slot = WeightSlot(tracer)
    slot.publish(params)

    collector = SegmentCollector(pool, tracer, cfg.seed)
    rng_update = stream(cfg.seed, "update")
    out_dir = cfg.out_dir
    metrics = MetricsWriter(
        out_dir / "metrics.csv" if out_dir else None, PPO_FIELDS
    )
    report = RunReport(env_steps_per_cycle=cfg.num_envs * cfg.steps_per_env)

    for it in range(cfg.max_iterations):
        version, weights = slot.fetch()
        segment = collector.collect(weights, cfg.steps_per_env, version)
        segment.advantages, segment.returns = gae(
            segment.rewards, segment.values, segment.terminated,
            segment.truncated, segment.bootstrap_value,
            cfg.ppo.gamma, cfg.ppo.lam,
            truncation_values=segment.truncation_values,
        )
        with tracer.span("learner", "learner/update"):
            stats = ppo_update(segment, params, opt, cfg.ppo, rng_update)
        opt.set_lr(adaptive_lr_step(opt.lr, stats.kl, cfg.ppo, it))
        slot.publish(params)

        row = {
            "iteration": it,
            "env_steps": collector.total_env_steps,
            "mean_episode_reward": collector.tracker.mean_episode_reward(),
            "mean_tracking_kernel": collector.tracker.take_kernel_mean(),
            **stats.as_row(),
        }
        metrics.write(row)
        report.reward_curve.append((it, row["mean_episode_reward"]))
        report.kernel_curve.append((it, row["mean_tracking_kernel"]))
        if out_dir is not None and (it + 1) % cfg.save_interval == 0:
            save_checkpoint(out_dir / f"checkpoint_{it + 1:06d}.npz",
                            params.actor)

    metrics.close()
    if out_dir is not None:
        report.metrics_path = str(out_dir / "metrics.csv")
        save_checkpoint(out_dir / "checkpoint_final.npz", params.actor)

    report.total_env_steps = collector.total_env_steps
    report.wall_time_s = clock.elapsed()
    report.env_steps_per_s = report.total_env_steps / max(report.wall_time_s,
                                                          1e-9)
    lines = [report.render()]
    finalize_trace(tracer, out_dir, report, lines)
    return report
