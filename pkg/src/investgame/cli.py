"""Command-line interface: validate, simulate, verify, certify.

Exit codes are uniform across subcommands: 0 the check passed, 1 the
check ran and came out false, 2 usage or configuration errors.  All file
outputs honor the INVESTGAME_OUTDIR environment variable; identical
configuration (seeds included) produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, lyapunov
from .dynamics import iterate, write_csv
from .geometry import hull_point
from .stage_game import GameParams, example_game, validate_params, vertices
from .strategies import build_profile, induced_map

OUTDIR_ENV = "INVESTGAME_OUTDIR"


class ConfigError(Exception):
    pass


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(OUTDIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _load_game(path: str | None) -> GameParams:
    if path is None:
        return example_game()
    try:
        return GameParams.from_file(path)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"bad game file {path}: {exc}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    out = _resolve_out(out)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_validate(args) -> int:
    try:
        params = GameParams.from_file(args.game)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        report = validate_params(params)
    except ValueError as exc:  # non-finite entries
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if report.ok:
        print("ok")
        return 0
    for v in report.violations:
        print(f"violated: {v}")
    return 1


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config) if args.config else {}
    game_path = args.game or cfg.get("game")
    params = _load_game(game_path)
    report = validate_params(params)
    if not report.ok:
        raise ConfigError("game parameters are inadmissible: " + "; ".join(report.violations))
    descs = cfg.get("strategies")
    if descs is None:
        raise ConfigError("run config needs a 'strategies' list of three descriptors")
    profile = build_profile(descs, params)
    n = int(args.n or cfg.get("n", 100_000))
    start_cfg = cfg.get("start", {"weights": [0.125] * 8})
    if "point" in start_cfg:
        x1 = tuple(float(c) for c in start_cfg["point"])
    elif "weights" in start_cfg:
        x1 = hull_point(vertices(params), start_cfg["weights"])
    else:
        raise ConfigError("start must give 'point' or 'weights'")
    traj = iterate(induced_map(profile, params), x1, n)
    comment = "strategies: " + json.dumps([s.descriptor() for s in profile], sort_keys=True)
    out = _resolve_out(args.out or cfg.get("out"))
    if out:
        with open(out, "w", newline="") as fh:
            write_csv(traj, fh, comment=comment)
    else:
        write_csv(traj, sys.stdout, comment=comment)
    return 0


def _harness_config(params: GameParams, cfg: dict, args) -> harness.HarnessConfig:
    kwargs: dict = {"params": params}
    if args.eps is not None:
        kwargs["eps"] = args.eps
    elif "eps" in cfg:
        kwargs["eps"] = float(cfg["eps"])
    if args.n is not None:
        kwargs["n"] = int(args.n)
    elif "n" in cfg:
        kwargs["n"] = int(cfg["n"])
    if args.slack is not None:
        kwargs["slack"] = args.slack
    elif "slack" in cfg:
        kwargs["slack"] = float(cfg["slack"])
    for key in ("window", "dist_slack", "dist_pitch"):
        if key in cfg:
            kwargs[key] = float(cfg[key])
    if "starts" in cfg:
        kwargs["starts"] = tuple(tuple(map(float, w)) for w in cfg["starts"])
    return harness.HarnessConfig(**kwargs)


def cmd_verify(args) -> int:
    cfg = _load_json(args.config) if args.config else {}
    out = args.out or cfg.get("out")
    if args.claim in ("t3", "t4", "t2"):
        params = _load_game(args.game or cfg.get("game"))
        config = _harness_config(params, cfg, args)
        if args.claim == "t3":
            report = harness.verify_t3(config)
        elif args.claim == "t4":
            report = harness.verify_t4(config)
        else:
            report = harness.verify_t2(config)
    elif args.claim == "example1":
        a = tuple(cfg.get("a", (0.0, -1.0)))
        b = tuple(cfg.get("b", (2.0, 1.0)))
        n = int(args.n or cfg.get("n", 100_000))
        tol = float(cfg.get("tol", 0.05))
        starts_cfg = cfg.get("starts", 20)
        if isinstance(starts_cfg, int):
            starts = harness.example1_starts(starts_cfg, seed=int(cfg.get("seed", 7)))
        else:
            starts = [tuple(map(float, s)) for s in starts_cfg]
        report = harness.run_example1(a, b, starts, n, tol)
    elif args.claim == "example2":
        eps = float(args.eps if args.eps is not None else cfg.get("eps", 0.4))
        n = int(args.n or cfg.get("n", 100_000))
        tol = float(cfg.get("tol", 0.1))
        starts = cfg.get("starts")
        if starts is not None:
            starts = [tuple(map(float, s)) for s in starts]
        report = harness.run_example2(eps, starts, n, tol, pipeline=bool(cfg.get("pipeline", True)))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown claim {args.claim!r}")
    _emit(report.as_dict(), out)
    return 0 if report.passed else 1


def _certify_blackwell(cfg: dict) -> tuple[bool, dict]:
    target = cfg.get("target")
    pitch = float(cfg.get("pitch", 0.25))
    if target in ("example1_line", "example1_segment", "example1_singleton"):
        a = tuple(cfg.get("a", (0.0, -1.0)))
        b = tuple(cfg.get("b", (2.0, 1.0)))
        rep = harness.run_example1(a, b, starts=[(0.5, 0.5)], n=1000, tol=1.0, pitch=pitch)
        key = {
            "example1_line": "blackwell_line",
            "example1_segment": "blackwell_segment",
            "example1_singleton": "blackwell_singleton",
        }[target]
        sub = rep.meta[key]
        return bool(sub["holds"]), sub
    if target in ("example2_triangle", "example2_union"):
        eps = float(cfg.get("eps", 0.4))
        rep = harness.run_example2(eps, n=1000, tol=10.0, pipeline=True, pitch=pitch)
        key = "blackwell_triangle" if target == "example2_triangle" else "blackwell_union"
        sub = rep.meta[key]
        return bool(sub["holds"]), sub
    raise ConfigError(f"unknown blackwell target {target!r}")


def _certify_lyapunov(cfg: dict, want_decrease: bool) -> tuple[bool, dict]:
    params = _load_game(cfg.get("game"))
    map_kind = cfg.get("map", "all_good")
    pitch = float(cfg.get("pitch", 0.25))
    if map_kind == "all_good":
        c = float(cfg.get("c", 0.3))
        spec = lyapunov.six_direction_spec(c, cfg.get("delta"))
        mmap = lyapunov.good_profile_plane_map(params)
    elif map_kind == "two_good":
        eps = float(cfg.get("eps", 0.4))
        eta = float(cfg.get("eta", 0.1))
        c = (eps + eta) / 2.0**0.5
        delta = float(cfg.get("delta", eta / (2.0 * 2.0**0.5)))
        spec = lyapunov.four_direction_spec(c, delta)
        mmap = lyapunov.two_good_plane_map(params, eps)
    else:
        raise ConfigError(f"unknown map kind {map_kind!r}")
    grid = lyapunov.certification_grid(spec, params, pitch)
    base = lyapunov.check_lyapunov(spec, mmap, grid, pitch=pitch)
    payload = {"kind": "lyapunov", "map": mmap.label, "c": spec.c, "delta": spec.delta}
    payload.update(base.as_dict())
    if not want_decrease:
        return base.holds, payload
    consts = lyapunov.t1_constants(spec, float(cfg.get("m_bound", 60.0)))
    dec = lyapunov.decrease_check(spec, mmap, consts, grid, pitch=pitch)
    payload = {
        "kind": "decrease",
        "map": mmap.label,
        "c": spec.c,
        "delta": spec.delta,
        "constants": {
            "m_bound": consts.m_bound, "delta": consts.delta,
            "r": consts.r, "gamma": consts.gamma, "alpha0": consts.alpha0,
        },
        "lyapunov_holds": base.holds,
    }
    payload.update(dec.as_dict())
    return base.holds and dec.holds, payload


def cmd_certify(args) -> int:
    cfg = _load_json(args.config) if args.config else {}
    if args.pitch is not None:
        cfg["pitch"] = args.pitch
    out = args.out or cfg.get("out")
    if args.kind == "blackwell":
        ok, payload = _certify_blackwell(cfg)
        payload = {"kind": "blackwell", **payload}
    elif args.kind == "lyapunov":
        ok, payload = _certify_lyapunov(cfg, want_decrease=False)
    elif args.kind == "decrease":
        ok, payload = _certify_lyapunov(cfg, want_decrease=True)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown certification kind {args.kind!r}")
    _emit(payload, out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="investgame",
        description="Simulate and verify threshold strategies in the repeated 3-player invest dilemma.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a game file's admissibility inequalities")
    p_val.add_argument("game")
    p_val.set_defaults(func=cmd_validate)

    p_sim = sub.add_parser("simulate", help="run the mean dynamics and emit a trajectory CSV")
    p_sim.add_argument("config", nargs="?", help="run configuration JSON")
    p_sim.add_argument("--game")
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--out")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run a claim's verification battery")
    p_ver.add_argument("claim", choices=("t3", "t4", "t2", "example1", "example2"))
    p_ver.add_argument("config", nargs="?")
    p_ver.add_argument("--game")
    p_ver.add_argument("--n", type=int)
    p_ver.add_argument("--eps", type=float)
    p_ver.add_argument("--slack", type=float)
    p_ver.add_argument("--out")
    p_ver.set_defaults(func=cmd_verify)

    p_cert = sub.add_parser("certify", help="grid-certify a Blackwell or Lyapunov property")
    p_cert.add_argument("kind", choices=("blackwell", "lyapunov", "decrease"))
    p_cert.add_argument("config", nargs="?")
    p_cert.add_argument("--pitch", type=float, help="certification grid pitch (payoff units)")
    p_cert.add_argument("--out")
    p_cert.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already; normalize others
        return 2 if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
