"""Command-line interface composing the modules into desk-scale experiments.

One executable, one subcommand per experiment.  Every subcommand is
deterministic under a fixed seed, writes CSV artifacts (with a rendered
figure alongside) into the output directory, and uses the exit-code
contract 0 = success, 1 = check failure, 2 = usage/config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import drift, fsq, metrics, plotting, policy, rollout, world
from .config import (
    ConfigError,
    RunConfig,
    SeedStream,
    config_echo,
    parse_config,
    read_pgm,
    write_csv,
    write_pgm,
)
from .rewards import RewardConfig, group_advantages

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return parse_config(Path(args.config).read_text())
    return parse_config("{}")


def _outdir(args, cfg: RunConfig | None = None) -> Path:
    out = Path(args.out if args.out else (cfg.output_dir if cfg else "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path) -> None:
    (out / "config_echo.json").write_text(config_echo(cfg))


def cmd_fsq_selftest(args) -> int:
    try:
        levels = fsq.FsqLevels.parse(args.levels)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    size = fsq.codebook_size(levels)
    if size > 1_000_000:
        print(f"error: codebook size {size} exceeds the 10^6 self-test cap",
              file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args)
    for index in range(size):
        code = fsq.decode_index(index, levels)
        back = fsq.encode_index(code, levels).index
        if back != index:
            print(f"FAIL: index {index} round-trips to {back}")
            return EXIT_CHECK_FAILED
        z = fsq.codeword_to_real(code, levels)
        if fsq.quantize(z, levels) != code:
            print(f"FAIL: codeword {code.digits} is not a quantizer fixed point")
            return EXIT_CHECK_FAILED
    write_csv(out / "codebook_stats.csv",
              ["levels", "dims", "codebook_size", "round_trips_ok"],
              [[",".join(str(l) for l in levels.levels), levels.dim, size, size]],
              seed=0)
    print(f"K={size}, all {size} round-trips pass -> {out / 'codebook_stats.csv'}")
    return EXIT_OK


def _toy_setup(cfg: RunConfig):
    w = cfg.world
    tok = world.ToyTokenizerConfig(
        height=w.height, width=w.width,
        context_patch=w.context_patch, dynamics_patch=w.dynamics_patch,
        levels=fsq.FsqLevels((7, 5)),
    )
    state = world.WorldState(
        height=w.height, width=w.width,
        row=(w.height - w.extent) // 2, col=(w.width - w.extent) // 2,
        extent=w.extent, background=w.background,
    )
    return tok, state


def _toy_action_blocks(action_ids, codebook_size: int):
    offset = 2 * codebook_size
    return [[offset + a] for a in action_ids]


def run_rollout_pair(cfg: RunConfig, seeds: SeedStream, window: int,
                     horizon: int):
    """AR and SWR rollouts on the toy world; returns frames, traces, ground truth."""
    tok, state = _toy_setup(cfg)
    action_rng = seeds.derive("rollout.actions")
    action_names = [world.ACTIONS[action_rng.integers(0, len(world.ACTIONS))]
                    for _ in range(horizon)]
    gt_states = world.simulate_trajectory(state, action_names)
    gt_frames = [world.render(s) for s in gt_states]
    true_dyn = [world.encode_frame(f, tok)[1] for f in gt_frames]
    codec = world.ToyCodec(tok)
    x0 = world.render(state)
    blocks = _toy_action_blocks(
        [world.ACTIONS.index(a) for a in action_names], tok.codebook_size
    )

    results = {}
    for mode, win in (("ar", None), ("swr", window)):
        predictor = world.make_drifting_predictor(
            true_dyn, cfg.world.corruption, tok
        )
        rng = seeds.derive(f"rollout.{mode}")
        if win is None:
            frames, trace = rollout.decode_ar(predictor, codec, x0, blocks,
                                              horizon, rng=rng)
        else:
            frames, trace = rollout.decode_swr(predictor, codec, x0, blocks,
                                               horizon, win, rng=rng)
        results[mode] = (frames, trace)
    return results, gt_frames


def _token_geometry_trace(cfg: RunConfig, horizon: int, window: int):
    """Token-count-faithful traces at the configured clip geometry."""
    clip = cfg.clip
    codec = rollout.StubCodec(clip.context_tokens, clip.dynamics_tokens)
    blocks = [[0] * clip.action_dims for _ in range(horizon)]
    predictor = rollout.make_stub_predictor(clip.dynamics_tokens)
    x0 = np.zeros((1, 1))
    _, ar_trace = rollout.decode_ar(predictor, codec, x0, blocks, horizon)
    _, swr_trace = rollout.decode_swr(predictor, codec, x0, blocks, horizon, window)
    return ar_trace, swr_trace


def _trace_rows(trace: rollout.RolloutTrace, frame_mse=None):
    rows = []
    reenc = set(trace.reencode_steps)
    for i, plen in enumerate(trace.prompt_lengths, start=1):
        rows.append([
            i, plen, int(i in reenc),
            "" if frame_mse is None else f"{frame_mse[i - 1]:.8g}",
        ])
    return rows


def cmd_rollout(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    _echo_config(cfg, out)
    seeds = SeedStream(cfg.seed)
    horizon = cfg.decode.horizon
    window = cfg.decode.window

    results, gt_frames = run_rollout_pair(cfg, seeds, window, horizon)
    header = ["step", "prompt_len", "reencode_flag", "frame_mse_vs_gt"]
    comparison = []
    per_mode_mse = {}
    for mode, (frames, trace) in results.items():
        mses = [metrics.mse(f, g) for f, g in zip(frames, gt_frames)]
        ssims = [metrics.ssim(f, g)[0] for f, g in zip(frames, gt_frames)]
        per_mode_mse[mode] = (mses, ssims)
        write_csv(out / f"trace_toy_{mode}.csv", header,
                  _trace_rows(trace, mses), seed=cfg.seed)
        for i, f in enumerate(frames):
            write_pgm(out / "frames" / f"{mode}_{i:03d}.pgm", f)
    for i, f in enumerate(gt_frames):
        write_pgm(out / "frames" / f"gt_{i:03d}.pgm", f)

    rows = []
    for i in range(horizon):
        rows.append([
            i,
            f"{per_mode_mse['ar'][0][i]:.8g}", f"{per_mode_mse['ar'][1][i]:.8g}",
            f"{per_mode_mse['swr'][0][i]:.8g}", f"{per_mode_mse['swr'][1][i]:.8g}",
        ])
    write_csv(out / "comparison.csv",
              ["frame", "ar_mse", "ar_ssim", "swr_mse", "swr_ssim"],
              rows, seed=cfg.seed)

    ar_trace, swr_trace = _token_geometry_trace(cfg, horizon, window)
    write_csv(out / "trace_tokens_ar.csv", header,
              _trace_rows(ar_trace), seed=cfg.seed)
    write_csv(out / "trace_tokens_swr.csv", header,
              _trace_rows(swr_trace), seed=cfg.seed)

    plotting.plot_rollout_comparison(
        list(range(horizon)), per_mode_mse["ar"][0], per_mode_mse["swr"][0],
        window, out / "comparison.png",
    )
    print(
        f"T={horizon} W={window}: token-level max prompt "
        f"AR={ar_trace.max_prompt_length} SWR={swr_trace.max_prompt_length} "
        f"(re-encodings {swr_trace.reencode_count}); "
        f"toy mean MSE AR={np.mean(per_mode_mse['ar'][0]):.5f} "
        f"SWR={np.mean(per_mode_mse['swr'][0]):.5f}"
    )
    return EXIT_OK


def cmd_drift_sweep(args) -> int:
    cfg = _load_config(args)
    d = cfg.drift
    overrides = {}
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.eps is not None:
        overrides["eps"] = args.eps
    if args.delta_q is not None:
        overrides["delta_q"] = args.delta_q
    if args.window_list is not None:
        overrides["window_list"] = tuple(
            int(w) for w in args.window_list.split(","))
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.trials is not None:
        overrides["trials"] = args.trials
    d = replace(d, **overrides)
    seed = args.seed if args.seed is not None else cfg.seed
    if d.alpha >= 1.0:
        print("error: sliding-window bound undefined at alpha = 1", file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args, cfg)
    params = drift.DriftParams(eps=d.eps, delta_q=d.delta_q, alpha=d.alpha,
                               window=d.window_list[0], horizon=d.horizon)
    rows = drift.sweep_window(params, d.window_list, trials=d.trials, seed=seed)
    write_csv(out / "window_sweep.csv",
              ["W", "bound", "empirical_max", "eta_star"],
              [[r["W"], f"{r['bound']:.12g}", f"{r['empirical_max']:.12g}",
                f"{r['eta_star']:.12g}"] for r in rows],
              seed=seed)
    plotting.plot_window_sweep(rows, out / "window_sweep.png")
    violations = [r for r in rows if r["empirical_max"] > r["bound"] + 1e-12]
    if violations:
        print(f"FAIL: empirical envelope exceeds bound at W={violations[0]['W']}")
        return EXIT_CHECK_FAILED
    print(f"all {len(rows)} windows bounded -> {out / 'window_sweep.csv'}")
    return EXIT_OK


def _fd_preflight(vocab: int, reward_cfg: RewardConfig, seed: int) -> float:
    """Max relative error of the analytic gradient vs central differences."""
    rng = np.random.default_rng(seed)
    pol = policy.TabularPolicy(rng.normal(size=vocab), rng.normal(size=(vocab, vocab)))
    ref = policy.TabularPolicy(rng.normal(size=vocab), rng.normal(size=(vocab, vocab)))
    old = policy.TabularPolicy(pol.start_logits + 0.1 * rng.normal(size=vocab),
                               pol.logits + 0.1 * rng.normal(size=(vocab, vocab)))
    sequences = [policy.sample_rollout(old, 4, rng)[0] for _ in range(4)]
    logp_old = np.array([policy.log_prob(old, s) for s in sequences])
    advantages = group_advantages(rng.normal(size=len(sequences)))
    g_start, g_logits = policy.grpo_gradient(
        pol, sequences, logp_old, advantages, ref, reward_cfg)
    analytic = np.concatenate([g_start, g_logits.ravel()])
    fd = np.empty_like(analytic)
    h = 1e-5

    def loss_at(flat):
        p = policy.TabularPolicy(flat[:vocab].copy(),
                                 flat[vocab:].reshape(vocab, vocab).copy())
        return policy.surrogate_loss(p, sequences, logp_old, advantages, ref,
                                     reward_cfg)

    theta = np.concatenate([pol.start_logits, pol.logits.ravel()])
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        fd[i] = (loss_at(up) - loss_at(down)) / (2 * h)
    scale = max(np.abs(analytic).max(), np.abs(fd).max(), 1e-8)
    return float(np.abs(analytic - fd).max() / scale)


def cmd_grpo_train(args) -> int:
    cfg = _load_config(args)
    t = cfg.train
    overrides = {}
    if args.group_size is not None:
        overrides["group_size"] = args.group_size
    if args.iters is not None:
        overrides["iterations"] = args.iters
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    t = replace(t, **overrides)
    reward_cfg = cfg.reward
    if args.beta is not None or args.clip is not None:
        reward_cfg = replace(
            reward_cfg,
            kl_beta=args.beta if args.beta is not None else reward_cfg.kl_beta,
            clip_eps=args.clip if args.clip is not None else reward_cfg.clip_eps,
        )
    out = _outdir(args, cfg)
    _echo_config(cfg, out)

    fd_err = _fd_preflight(t.vocab, reward_cfg, cfg.seed)
    if fd_err > 1e-4:
        print(f"FAIL: finite-difference preflight error {fd_err:.3e} > 1e-4")
        return EXIT_CHECK_FAILED

    train_cfg = policy.TrainConfig(
        vocab=t.vocab, length=t.length, group_size=t.group_size,
        iterations=t.iterations, learning_rate=t.learning_rate,
        reward=reward_cfg,
    )
    pol = policy.TabularPolicy.uniform(t.vocab)

    def reward_for(target):
        return lambda seq: float(np.sum(np.asarray(seq) == target))

    # Reward-refresh hook: swap the reward target every N iterations,
    # standing in for re-scoring rollouts with a refreshed scorer.
    history = []
    if args.swap_reward_every:
        chunk = args.swap_reward_every
        targets = [t.target_token, (t.target_token + 1) % t.vocab]
        done = 0
        phase = 0
        while done < t.iterations:
            n = min(chunk, t.iterations - done)
            sub = policy.train(pol, reward_for(targets[phase % 2]),
                               replace(train_cfg, iterations=n),
                               seed=cfg.seed + done)
            for h in sub:
                h["iteration"] += done
            history.extend(sub)
            done += n
            phase += 1
    else:
        history = policy.train(pol, reward_for(t.target_token), train_cfg,
                               seed=cfg.seed)

    write_csv(out / "training_history.csv",
              ["iteration", "mean_reward", "kl", "grad_norm"],
              [[h["iteration"], f"{h['mean_reward']:.8g}", f"{h['kl']:.8g}",
                f"{h['grad_norm']:.8g}"] for h in history],
              seed=cfg.seed)
    np.savez(out / "policy_final.npz",
             start_logits=pol.start_logits, logits=pol.logits)
    if history:
        plotting.plot_training_history(history, out / "training_history.png")
        q = max(1, len(history) // 4)
        first = np.mean([h["mean_reward"] for h in history[:q]])
        last = np.mean([h["mean_reward"] for h in history[-q:]])
        trend = "up" if last > first else "flat/down"
        print(f"fd preflight {fd_err:.2e}; reward first-quartile {first:.3f} "
              f"-> last-quartile {last:.3f} (trend {trend})")
    else:
        print(f"fd preflight {fd_err:.2e}; no iterations requested")
    return EXIT_OK


def _load_frames(directory: Path):
    paths = sorted(directory.glob("*.pgm"))
    if not paths:
        raise ValueError(f"no PGM frames in {directory}")
    return np.stack([read_pgm(p) for p in paths]), paths


def cmd_metrics(args) -> int:
    dir_a, dir_b = Path(args.frames_a), Path(args.frames_b)
    try:
        clip_a, _ = _load_frames(dir_a)
        clip_b, _ = _load_frames(dir_b)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if clip_a.shape != clip_b.shape:
        print(f"error: frame stacks disagree: {clip_a.shape} vs {clip_b.shape}",
              file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args)

    union = None
    coverage = 0.0
    if clip_a.shape[0] >= 2:
        mask = metrics.motion_mask(clip_a, tau=args.tau, theta=args.theta,
                                   kernel_size=args.kernel)
        if mask.union.any():
            union = mask.union
            coverage = metrics.roi_coverage(mask.union)
    if union is None and args.roi_required:
        print("FAIL: empty ROI")
        return EXIT_CHECK_FAILED

    rows = []
    series = {"mse": [], "psnr": [], "ssim": []}
    for i, (a, b) in enumerate(zip(clip_a, clip_b)):
        m = metrics.mse(a, b)
        p = metrics.psnr(a, b)
        s = metrics.ssim(a, b)[0]
        series["mse"].append(m)
        series["psnr"].append(min(p, 1e9))
        series["ssim"].append(s)
        if union is not None:
            rm = metrics.roi_metric(a, b, union, "mse")
            rp = metrics.roi_metric(a, b, union, "psnr")
            rs = metrics.roi_metric(a, b, union, "ssim")
            roi_cols = [f"{rm:.8g}", f"{rp:.8g}", f"{rs:.8g}"]
        else:
            roi_cols = ["", "", ""]
        rows.append([i, f"{m:.8g}", f"{p:.8g}", f"{s:.8g}", *roi_cols,
                     f"{coverage:.8g}"])
    header = ["frame_index", "mse", "psnr", "ssim",
              "roi_mse", "roi_psnr", "roi_ssim", "coverage"]
    write_csv(out / "metrics.csv", header, rows, seed=0)

    agg = [["mean", f"{np.mean(series['mse']):.8g}", "",
            f"{np.mean(series['ssim']):.8g}", "", "", "", f"{coverage:.8g}"]]
    write_csv(out / "metrics_aggregate.csv",
              ["stat", "mse", "psnr", "ssim", "roi_mse", "roi_psnr", "roi_ssim",
               "coverage"],
              agg, seed=0)
    plotting.plot_metric_series(list(range(len(rows))), series,
                                out / "metrics.png")
    print(f"{len(rows)} frames; mean MSE {np.mean(series['mse']):.6g}, "
          f"coverage {coverage:.4f} -> {out / 'metrics.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokenworld",
        description="Token-level world-model experiments at desk scale.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fsq-selftest", help="exhaustive codebook round-trip audit")
    p.add_argument("--levels", default="7,5,5,5,5",
                   help="comma-separated FSQ level list")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fsq_selftest)

    p = sub.add_parser("rollout", help="AR vs sliding-window rollout comparison")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("drift-sweep", help="window sweep of the drift bound")
    p.add_argument("--config", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--delta-q", dest="delta_q", type=float, default=None)
    p.add_argument("--window-list", dest="window_list", default=None,
                   help="comma-separated window sizes")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_drift_sweep)

    p = sub.add_parser("grpo-train", help="GRPO training on the toy policy")
    p.add_argument("--config", default=None)
    p.add_argument("--group-size", dest="group_size", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--swap-reward-every", dest="swap_reward_every", type=int,
                   default=None, help="swap the reward target every N iterations")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grpo_train)

    p = sub.add_parser("metrics", help="pixel and ROI metrics over frame dirs")
    p.add_argument("frames_a", help="ground-truth frame directory (PGM)")
    p.add_argument("frames_b", help="generated frame directory (PGM)")
    p.add_argument("--tau", type=int, default=3)
    p.add_argument("--theta", type=float, default=15.0)
    p.add_argument("--kernel", type=int, default=15)
    p.add_argument("--roi-required", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
