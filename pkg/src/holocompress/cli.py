"""
Command-line driver.

Each experiment subcommand builds an :class:`ExperimentConfig` from an
optional ``--config`` file and its flags (flags win), runs it and writes a
CSV plus manifest.  Exit status: 0 when every checked inequality holds, 1
when one is violated, 2 for malformed input or infeasible configs.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import KINDS, ConfigError, ExperimentConfig, reproduce, run, validate

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.replace(",", " ").split()]


def _ints(s: str) -> list[int]:
    out = []
    for part in s.replace(",", " ").split():
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b)))
        else:
            out.append(int(part))
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML config file; flags override its values")
    p.add_argument("--out", help="CSV output path (manifest is written alongside)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads for independent sweep points")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")


def _harmonic_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--length", type=int, help="chain length")
    g.add_argument("--grid", help="grid extents ROWSxCOLS")
    p.add_argument("--mass", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--bc", choices=["open", "periodic"])
    p.add_argument("--region", help="site list, a:b slice, a-b range or YAML literal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holocompress", description="Holographic compression experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lemma-sweep", help="truncation bounds on random distributions")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--generators", help="comma-separated generator kinds")

    p = sub.add_parser("spin-compress", help="compress a spin-chain ground state onto a boundary shell")
    _common(p)
    p.add_argument("--model", choices=["tfim", "heisenberg"])
    p.add_argument("--length", type=int)
    p.add_argument("--field", type=float)
    p.add_argument("--coupling", type=float)
    p.add_argument("--bc", choices=["open", "periodic"])
    p.add_argument("--region")
    p.add_argument("--epsilon", type=_floats, help="target errors, e.g. '0.5,0.2,0.1'")
    p.add_argument("--export-dir", help="write truncated states and unitaries here")

    p = sub.add_parser("gauss-compress", help="compress a harmonic-lattice ground state")
    _common(p)
    _harmonic_flags(p)
    p.add_argument("--epsilon", type=_floats)

    p = sub.add_parser("renyi-counterexample", help="minimal ranks of the flat-tail spectra")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--volumes", type=_ints, help="e.g. '8:25'")
    p.add_argument("--k-boundary", type=_floats)
    p.add_argument("--epsilon", type=_floats)
    p.add_argument("--alphas", help="e.g. '1.5,2,4,inf'")
    p.add_argument("--hierarchy-trials", type=int)

    p = sub.add_parser("decay-fit", help="cross-correlation decay and off-diagonal norm bounds")
    _common(p)
    _harmonic_flags(p)
    p.add_argument("--ls", type=_ints, help="cut distances, e.g. '2:13'")

    p = sub.add_parser("density-lemma", help="level-set bounds for continuous densities")
    _common(p)
    p.add_argument("--resolution", type=int)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("validate", help="static checks of a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("reproduce", help="re-run a manifest and compare its CSV")
    p.add_argument("manifest")
    p.add_argument("--threads", type=int)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        base = ExperimentConfig.load(args.config).to_dict()
        if args.command in KINDS and base["kind"] != args.command:
            raise ConfigError(f"config kind {base['kind']!r} does not match subcommand {args.command!r}")
    else:
        if args.command not in KINDS:
            raise ConfigError("a config file is required")
        base = {"kind": args.command}
    model = dict(base.get("model") or {})
    params = dict(base.get("params") or {})
    tols = dict(base.get("tolerances") or {})

    def put(target, key, value):
        if value is not None:
            target[key] = value

    a = vars(args)
    put(base, "output", a.get("out"))
    put(base, "seed", a.get("seed"))
    put(base, "threads", a.get("threads"))
    put(base, "region", a.get("region"))
    put(base, "epsilons", a.get("epsilon"))
    for item in a.get("tol") or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        tols[k.strip()] = float(v)
    cmd = args.command
    if cmd == "lemma-sweep":
        put(params, "trials", a.get("trials"))
        put(params, "n_min", a.get("n_min"))
        put(params, "n_max", a.get("n_max"))
        if a.get("generators"):
            params["kinds"] = [g.strip() for g in a["generators"].split(",")]
    elif cmd == "spin-compress":
        for key in ("model", "length", "field", "coupling", "bc"):
            put(model, key, a.get(key))
        put(params, "export_dir", a.get("export_dir"))
    elif cmd in ("gauss-compress", "decay-fit"):
        if a.get("length") is not None:
            model.update(lattice="chain", length=a["length"])
            model.pop("grid", None)
        if a.get("grid"):
            try:
                r, c = (int(x) for x in a["grid"].lower().split("x"))
            except ValueError as exc:
                raise ConfigError(f"--grid expects ROWSxCOLS, got {a['grid']!r}") from exc
            model.update(lattice="grid", grid=[r, c])
        for key in ("mass", "kappa", "bc"):
            put(model, key, a.get(key))
        if cmd == "decay-fit":
            put(params, "ls", a.get("ls"))
    elif cmd == "renyi-counterexample":
        put(params, "d", a.get("d"))
        put(params, "volumes", a.get("volumes"))
        put(params, "k_boundary", a.get("k_boundary"))
        put(params, "hierarchy_trials", a.get("hierarchy_trials"))
        if a.get("alphas"):
            params["alphas"] = [x.strip() for x in a["alphas"].split(",")]
    elif cmd == "density-lemma":
        put(params, "resolution", a.get("resolution"))
    base.update(model=model, params=params, tolerances=tols)
    return ExperimentConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    if args.command == "reproduce":
        try:
            problems = reproduce(args.manifest, threads=args.threads)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for p in problems:
            print(p)
        print("reproduced" if not problems else f"{len(problems)} differences")
        return EXIT_OK if not problems else EXIT_VIOLATION

    try:
        cfg = _config_from_args(args)
    except (ConfigError, OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d)
        if not diags:
            print("ok")
        return EXIT_OK if not diags else EXIT_CONFIG

    try:
        res = run(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(res.rows)} rows to {res.csv_path} (manifest {res.manifest_path})")
    for v in res.violations:
        print(f"VIOLATION {v}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
