"""Command-line front end.

Usage::

    magicsim modes --config trap.json --out out/
    magicsim couplings --preset be_axial_200
    magicsim evolve --preset desk_equivalence --frame dressed
    magicsim equivalence --preset desk_equivalence
    magicsim sweep --preset be_axial_200 --param gradient --values 35,65,200
    magicsim scenario be_axial_200

Exit codes: 0 ok, 2 configuration error, 3 solver failure, 4 numerical
abort, 5 equivalence check failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .crystal import ConvergenceError, UnstableCrystalError, prepare
from .dynamics import (
    Frame,
    LevelIdentificationError,
    NormDriftError,
    equivalence_check,
    evolve_timedep,
    frame_transform,
    ground_state,
    propagate_const,
)
from .estimators import (
    CARRIER_FLAG,
    SWEEP_PARAMS,
    addressing_separation,
    carrier_suppression_check,
    run_scenario,
    scenario_configs,
    sweep,
)
from .hamiltonians import coupling_table, h_dressed, h_dynamic_lab, h_dynamic_rwa, h_static
from .model import ConfigError, config_from_dict, config_to_dict, to_hz
from .operators import SZ, embed, fock_ladder, layout_for

log = logging.getLogger("magicsim")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NUMERIC, EXIT_EQUIV = 0, 2, 3, 4, 5


def fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue().encode()


def json_bytes(obj):
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def preset_names():
    root = resources.files("magicsim").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path=None, preset=None):
    """Return ``(system, resolved_dict)``; raises :class:`ConfigError`."""
    if preset is not None:
        if preset not in preset_names():
            raise ConfigError(f"unknown preset {preset!r}; choose from {preset_names()}")
        text = resources.files("magicsim").joinpath(f"presets/{preset}.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    system = config_from_dict(data)
    return system, config_to_dict(system)


def config_digest(resolved):
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


# --- payload builders: each returns {filename: bytes} -------------------------


def payload_modes(system, args):
    crystal, modes = prepare(system, all_modes=True)
    n = system.n_ions
    rows = [
        [i + 1, to_hz(modes.frequencies[i]), *modes.coeffs[:, i]]
        for i in range(modes.n_modes)
    ]
    return {
        "modes.csv": csv_bytes(["mode_index", "freq_hz", *[f"b_{j + 1}" for j in range(n)]], rows),
        "positions.csv": csv_bytes(
            ["ion_index", "z_m"], [[j + 1, z] for j, z in enumerate(crystal.positions)]
        ),
    }


def payload_couplings(system, args):
    crystal, modes = prepare(system, all_modes=True)
    table = coupling_table(system, crystal, modes)
    dynamic = system.field.kind == "dynamic"
    header = ["ion", "mode", "epsilon"] + (["omega_grad_rabi_hz"] if dynamic else [])
    rows = []
    for j in range(system.n_ions):
        for n in range(modes.n_modes):
            row = [j + 1, n + 1, table.epsilon[j, n]]
            if dynamic:
                row.append(to_hz(table.omega_grad_rabi[j, n]))
            rows.append(row)
    jrows = [
        [i + 1, k + 1, to_hz(table.j_matrix[i, k])]
        for i in range(system.n_ions)
        for k in range(system.n_ions)
    ]
    scalars = {"field_kind": system.field.kind}
    if dynamic:
        ratio = carrier_suppression_check(system)
        scalars["omega0_rabi_hz"] = [to_hz(x) for x in table.omega0_rabi]
        scalars["carrier_ratio"] = ratio
        scalars["carrier_flag"] = ratio >= CARRIER_FLAG
    if system.n_ions >= 2:
        scalars["delta_omega_hz"] = [
            to_hz(x) for x in addressing_separation(system, crystal, modes.axis)
        ]
    return {
        "couplings.csv": csv_bytes(header, rows),
        "jmatrix.csv": csv_bytes(["i", "j", "J_hz"], jrows),
        "scalars.json": json_bytes(scalars),
    }


OBSERVABLES = ("populations", "sigma_z", "n", "norm")


def _observable_columns(layout, n_spins, n_modes, requested):
    cutoff = layout[n_spins] if n_modes else 2
    a, ad = fock_ladder(cutoff)
    cols = []
    for name in requested:
        if name == "populations":
            proj = np.diag([1.0, 0.0]).astype(complex)
            cols += [(f"p_up_{j + 1}", embed(proj, j, layout)) for j in range(n_spins)]
        elif name == "sigma_z":
            cols += [(f"sigma_z_{j + 1}", embed(SZ, j, layout)) for j in range(n_spins)]
        elif name == "n":
            cols += [(f"n_{m + 1}", embed(ad @ a, n_spins + m, layout)) for m in range(n_modes)]
        elif name == "norm":
            cols.append(("norm", None))
    return cols


def payload_evolve(system, args):
    crystal, modes = prepare(system)
    n_spins = system.n_ions
    layout = layout_for(n_spins, modes.n_modes, system.sim.fock_cutoff)
    psi0 = ground_state(layout, n_spins)
    kind = system.field.kind
    samples = args.samples
    frame = args.frame
    if frame in ("dressed", "rwa") and kind != "dynamic":
        raise ConfigError(f"frame {frame!r} needs a dynamic field")

    if frame == "lab" and kind == "static":
        times = np.linspace(0.0, system.sim.t_final, samples + 1)
        states = propagate_const(h_static(system, crystal, modes), psi0, times)
    elif frame == "lab":
        rep = evolve_timedep(h_dynamic_lab(system, crystal, modes), psi0, system.sim, n_samples=samples)
        times, states = rep.times, rep.states
    elif frame == "dressed":
        start = frame_transform(psi0, Frame.dressed(layout, n_spins, system.field.omega_b), 0.0)
        times = np.linspace(0.0, system.sim.t_final, samples + 1)
        states = propagate_const(h_dressed(system, crystal, modes), start, times)
    else:
        h = h_dynamic_rwa(system, crystal, modes)
        if h.period_hint is None:
            times = np.linspace(0.0, system.sim.t_final, samples + 1)
            states = propagate_const(h.static, psi0, times)
        else:
            rep = evolve_timedep(h, psi0, system.sim, n_samples=samples)
            times, states = rep.times, rep.states

    cols = _observable_columns(layout, n_spins, modes.n_modes, args.observable or OBSERVABLES)
    rows = []
    for t, psi in zip(times, states):
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > 1e-8:
            raise NormDriftError(f"norm drift {abs(norm - 1):.3g} at t={t:.6g} s")
        row = [t]
        for _, op in cols:
            row.append(norm if op is None else float(np.real(np.vdot(psi, op @ psi))))
        rows.append(row)
    name = Path(args.trajectory).name if args.trajectory else f"trajectory_{frame}.csv"
    return {name: csv_bytes(["t_s", *[c for c, _ in cols]], rows)}


def payload_equivalence(system, args):
    rep = equivalence_check(system, n_samples=args.samples)
    body = {
        "max_infidelity": rep.max_infidelity,
        "ratio": rep.ratio,
        "bound": rep.bound,
        "calibration_C": rep.calibration,
        "passes": rep.passes,
    }
    return {"equivalence.json": json_bytes(body)}, rep.passes


def payload_sweep(system, args):
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    try:
        parsed = [int(v) if args.param in ("n_ions", "fock_cutoff") else float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad --values: {exc}") from None
    rows_res = sweep(system, args.param, parsed, workers=args.workers)
    keys = sorted({k for r in rows_res for k in r.outputs})
    rows = [
        [args.param, v, *[r.outputs.get(k, "") for k in keys]]
        for v, r in zip(parsed, rows_res)
    ]
    return {"sweep.csv": csv_bytes(["param", "value", *keys], rows)}


def payload_scenario(args):
    res = run_scenario(args.name)
    body = {
        "name": res.name,
        "inputs": config_to_dict(res.inputs),
        "outputs": res.outputs,
        "units": res.units,
        "notes": res.notes,
    }
    return {f"scenario_{res.name}.json": json_bytes(body)}


# --- driver ------------------------------------------------------------------


def _build(args):
    """Return ``(payloads, resolved_config, passes)``."""
    if args.command == "scenario":
        if args.name not in scenario_configs():
            raise ConfigError(f"unknown scenario {args.name!r}")
        system = scenario_configs()[args.name]
        return payload_scenario(args), config_to_dict(system), True
    system, resolved = load_config(args.config, args.preset)
    if args.command == "equivalence":
        payloads, passes = payload_equivalence(system, args)
        return payloads, resolved, passes
    builder = {
        "modes": payload_modes,
        "couplings": payload_couplings,
        "evolve": payload_evolve,
        "sweep": payload_sweep,
    }[args.command]
    return builder(system, args), resolved, True


def _write(out_dir, payloads, resolved, command):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, data in payloads.items():
        (out_dir / name).write_bytes(data)
    manifest = {
        "config_digest": config_digest(resolved),
        "tool_version": __version__,
        "subcommand": command,
        "timestamp": timestamp(),
        "outputs": {name: hashlib.sha256(data).hexdigest() for name, data in sorted(payloads.items())},
    }
    (out_dir / "manifest.json").write_bytes(json_bytes(manifest))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON configuration file")
    src.add_argument("--preset", help="named configuration shipped with the package")
    common.add_argument(
        "--out", type=Path, default=None,
        help="output directory (default: $MAGICSIM_OUT or ./out)",
    )
    common.add_argument(
        "--seedless", action="store_true",
        help="compute every payload twice and abort unless the bytes agree",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="magicsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common], help="equilibrium positions and normal modes")
    sub.add_parser("couplings", parents=[common], help="epsilon, Rabi frequencies and J matrix")
    ev = sub.add_parser("evolve", parents=[common], help="state trajectory and observables")
    ev.add_argument("--frame", choices=("lab", "dressed", "rwa"), default="lab")
    ev.add_argument("--observable", action="append", choices=OBSERVABLES)
    ev.add_argument("--samples", type=int, default=200)
    ev.add_argument("--trajectory", help="trajectory file name inside the output directory")
    eq = sub.add_parser("equivalence", parents=[common], help="lab vs dressed-frame certificate")
    eq.add_argument("--samples", type=int, default=400)
    sw = sub.add_parser("sweep", parents=[common], help="scalar estimates over one parameter")
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--values", required=True, help="comma-separated values (frequencies in Hz)")
    sw.add_argument("--workers", type=int, default=1)
    sc = sub.add_parser("scenario", parents=[common], help="worked example bundle")
    sc.add_argument("name", choices=sorted(scenario_configs()))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if args.command != "scenario" and args.config is None and args.preset is None:
        parser.error("one of --config or --preset is required")
    out_dir = args.out or Path(os.environ.get("MAGICSIM_OUT", "out"))

    try:
        payloads, resolved, passes = _build(args)
        if args.seedless:
            again, _, _ = _build(args)
            if again != payloads:
                raise NormDriftError("payloads differ between identical runs")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ConvergenceError, UnstableCrystalError, LevelIdentificationError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except NormDriftError as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERIC

    _write(out_dir, payloads, resolved, args.command)
    if not passes:
        log.error("equivalence check failed")
        return EXIT_EQUIV
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
