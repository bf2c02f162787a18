"""Command-line front end.

Subcommands: ``run``, ``sweep``, ``qos-check``, ``validate-oracle``,
``rules check``, ``plot``.  Exit codes: 0 on success, 1 on usage or
configuration errors, 2 when a gated check hits an undefined metric.
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .config import ConfigError, ExperimentConfig, parse_config_file
from .metrics import UndefinedMetricError
from .rules import RulesetError
from .traffic import load_ruleset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNDEFINED_METRIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_experiment_flags(p: argparse.ArgumentParser, with_rate: bool) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--scenario", help="chain preset (scenario1_ids, scenario2_ips, "
                                      "fiveg_ids, fiveg_ips)")
    p.add_argument("--mode", help="security mode override: ids|ips|none "
                                  "(sweep accepts a comma list)")
    p.add_argument("--placement", choices=("vm", "container"))
    p.add_argument("--transport", choices=("tcp", "udp"))
    if with_rate:
        p.add_argument("--rate", type=float, help="mean offered packets per second")
    p.add_argument("--payload", type=int, help="payload bytes (default 512)")
    p.add_argument("--duration", type=float, help="seconds per repetition (default 30)")
    p.add_argument("--reps", type=int, help="repetitions (default 20)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--queue-capacity", type=int, help="inline inspection queue slots")
    p.add_argument("--nat-capacity", type=int, help="max live NAT bindings")
    p.add_argument("--ruleset", help="rules file (default: bundled sample rules)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--alert-log", help="alert log output path")


_FLAG_TO_KEY = {
    "scenario": "scenario", "mode": "mode", "placement": "placement",
    "transport": "transport", "rate": "rate_pps", "payload": "payload_bytes",
    "duration": "duration_s", "reps": "reps", "seed": "seed",
    "queue_capacity": "queue_capacity", "nat_capacity": "nat_capacity",
    "ruleset": "ruleset_path", "out": "out", "alert_log": "alert_log",
}


def _config_from_args(args, allow_mode_list: bool = False) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = parse_config_file(args.config, cfg)
    overrides = {}
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "mode" and allow_mode_list and "," in value:
            continue  # handled by the sweep command itself
        overrides[key] = value
    return cfg.with_overrides(**overrides).validate()


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    summary, traces = bench.cmd_run(cfg, out_csv=cfg.out, alert_log=cfg.alert_log)
    print(f"scenario={cfg.scenario} mode={cfg.effective_mode} "
          f"placement={cfg.placement} transport={cfg.transport} "
          f"rate={cfg.rate_pps:g}pps reps={cfg.reps}")
    def fmt(v, hw):
        if v is None:
            return "undefined"
        return f"{v:.3f}" + (f" ± {hw:.3f}" if hw is not None else "")
    print(f"  throughput_bps: {fmt(summary.throughput_bps, summary.throughput_hw)}")
    print(f"  latency_us:     {fmt(summary.latency_us, summary.latency_hw)}")
    print(f"  jitter_us:      {fmt(summary.jitter_us, summary.jitter_hw)}")
    print(f"  drop_pct:       {fmt(summary.drop_pct, summary.drop_hw)}")
    if cfg.out:
        print(f"  csv: {cfg.out}")
    if cfg.alert_log:
        total = sum(len(t.alerts) for t in traces)
        print(f"  alerts: {total} -> {cfg.alert_log}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args, allow_mode_list=True)
    try:
        rates = [float(r) for r in args.rates.split(",") if r.strip()]
    except ValueError:
        print(f"bad --rates list: {args.rates!r}", file=sys.stderr)
        return EXIT_USAGE
    if not rates:
        print("--rates must name at least one rate", file=sys.stderr)
        return EXIT_USAGE
    modes = None
    if args.mode and "," in args.mode:
        modes = [m.strip() for m in args.mode.split(",") if m.strip()]
    rows = bench.cmd_sweep(cfg, rates, modes=modes, out_csv=cfg.out)
    print(bench.CSV_HEADER)
    for row in rows:
        print(row)
    return EXIT_OK


def _cmd_qos_check(args) -> int:
    profile = bench.QOS_PROFILES.get(args.profile)
    if profile is None:
        known = ", ".join(sorted(bench.QOS_PROFILES))
        print(f"unknown profile {args.profile!r}; known: {known}", file=sys.stderr)
        return EXIT_USAGE
    if args.csv:
        values = _summary_from_csv(args.csv)
        if values is None:
            print(f"no summary row found in {args.csv}", file=sys.stderr)
            return EXIT_USAGE
        latency, throughput, drop = values
    else:
        latency, throughput, drop = args.latency_us, args.throughput_bps, args.drop_pct
        if latency is None or throughput is None or drop is None:
            print("qos-check needs --csv or all of --latency-us/--throughput-bps/--drop-pct",
                  file=sys.stderr)
            return EXIT_USAGE
    try:
        check = bench.qos_check(latency, throughput, drop, profile)
    except UndefinedMetricError as exc:
        print(f"undefined metric: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED_METRIC
    print(f"profile: {profile.name} (latency <= {profile.max_latency_ms:g} ms, "
          f"rate >= {profile.min_rate_bps:g} bps, "
          f"reliability >= {profile.min_reliability_pct:g}%)")
    print(f"  latency:     {'PASS' if check.latency_ok else 'FAIL'} "
          f"({latency / 1000.0:.3f} ms)")
    print(f"  rate:        {'PASS' if check.rate_ok else 'FAIL'} ({throughput:.0f} bps)")
    print(f"  reliability: {'PASS' if check.reliability_ok else 'FAIL'} "
          f"({100.0 - drop:.6f}%)")
    return EXIT_OK


def _summary_from_csv(path: str):
    cols = bench.CSV_COLUMNS
    try:
        with open(path, encoding="utf-8") as handle:
            lines = [line.rstrip("\n") for line in handle]
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    for line in reversed(lines):
        parts = line.split(",")
        if len(parts) == len(cols) and parts[cols.index("rep")] == "mean":
            def pick(name):
                text = parts[cols.index(name)]
                return float(text) if text else None
            return pick("latency_us"), pick("throughput_bps"), pick("drop_pct")
    return None


def _cmd_validate_oracle(args) -> int:
    try:
        rhos = [float(r) for r in args.rho.split(",") if r.strip()]
    except ValueError:
        print(f"bad --rho list: {args.rho!r}", file=sys.stderr)
        return EXIT_USAGE
    if not rhos:
        print("--rho must name at least one utilization", file=sys.stderr)
        return EXIT_USAGE
    rows = bench.validate_oracle(rhos, capacity=args.queue_capacity,
                                 offered_per_rep=args.offered, reps=args.reps,
                                 base_seed=args.seed)
    print(f"{'rho':>6} {'simulated':>12} {'analytic':>12} {'|delta|':>10}")
    for row in rows:
        print(f"{row.rho:>6.2f} {row.simulated_loss:>12.6f} "
              f"{row.analytic_loss:>12.6f} {row.abs_error:>10.6f}")
    return EXIT_OK


def _cmd_rules_check(args) -> int:
    try:
        ruleset = load_ruleset(args.file)
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RulesetError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{args.file}: OK ({len(ruleset)} rules)")
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        written = bench_plot(args.csv, args.out_dir, args.metrics.split(","))
    except ImportError:
        print("plotting needs matplotlib (pip install secsim[plot])", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"plot failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for path in written:
        print(path)
    return EXIT_OK


def bench_plot(csv_path: str, out_dir: str, metric_names: list[str]) -> list[str]:
    """Render metric-vs-rate SVG line charts, one series per (mode, placement)."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = bench.CSV_COLUMNS
    idx = {name: cols.index(name) for name in cols}
    series: dict[tuple[str, str], list[tuple[float, dict]]] = {}
    with open(csv_path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle][1:]
    for line in lines:
        parts = line.split(",")
        if len(parts) != len(cols) or parts[idx["rep"]] != "mean":
            continue
        key = (parts[idx["mode"]], parts[idx["placement"]])
        point = {name: parts[idx[name]] for name in cols}
        series.setdefault(key, []).append((float(parts[idx["rate_pps"]]), point))

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for metric in metric_names:
        metric = metric.strip()
        if metric not in cols:
            raise ValueError(f"unknown metric column {metric!r}")
        fig, ax = plt.subplots(figsize=(6, 4))
        for (mode, placement), points in sorted(series.items()):
            points.sort(key=lambda p: p[0])
            xs = [rate for rate, _ in points]
            ys = [float(p[metric]) if p[metric] else float("nan") for _, p in points]
            ax.plot(xs, ys, marker="o", label=f"{mode}/{placement}")
        ax.set_xlabel("offered rate (pps)")
        ax.set_ylabel(metric)
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, f"{metric}.svg")
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


def build_parser() -> _Parser:
    parser = _Parser(prog="secsim",
                     description="Discrete-event benchmark for softwarized "
                                 "security service chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_experiment_flags(p_run, with_rate=True)
    p_run.set_defaults(handler=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an experiment across offered rates")
    _add_experiment_flags(p_sweep, with_rate=False)
    p_sweep.add_argument("--rates", required=True, help="comma list of rates (pps)")
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_qos = sub.add_parser("qos-check", help="gate metrics against a QoS profile")
    p_qos.add_argument("--profile", required=True)
    p_qos.add_argument("--csv", help="read the summary row of this CSV")
    p_qos.add_argument("--latency-us", type=float)
    p_qos.add_argument("--throughput-bps", type=float)
    p_qos.add_argument("--drop-pct", type=float)
    p_qos.set_defaults(handler=_cmd_qos_check)

    p_oracle = sub.add_parser("validate-oracle",
                              help="compare simulated queue loss to the closed form")
    p_oracle.add_argument("--rho", default="0.5,0.9,1.0,1.2")
    p_oracle.add_argument("--queue-capacity", type=int, default=10)
    p_oracle.add_argument("--offered", type=int, default=6000,
                          help="mean offered packets per repetition")
    p_oracle.add_argument("--reps", type=int, default=20)
    p_oracle.add_argument("--seed", type=int, default=7)
    p_oracle.set_defaults(handler=_cmd_validate_oracle)

    p_rules = sub.add_parser("rules", help="rule file utilities")
    rules_sub = p_rules.add_subparsers(dest="rules_command", required=True)
    p_check = rules_sub.add_parser("check", help="parse a rules file and report")
    p_check.add_argument("file")
    p_check.set_defaults(handler=_cmd_rules_check)

    p_plot = sub.add_parser("plot", help="render SVG charts from a sweep CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--out-dir", default="plots")
    p_plot.add_argument("--metrics", default="throughput_bps,latency_us,jitter_us,drop_pct")
    p_plot.set_defaults(handler=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except (ConfigError, RulesetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
