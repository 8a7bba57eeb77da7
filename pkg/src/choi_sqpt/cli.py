"""Command-line frontend emitting JSON run reports.

Subcommands: element, full, validate, plan, convert.  Reports are JSON
objects with sorted keys so identical invocations (with identical seeds)
produce byte-identical output apart from the duration field.

Exit codes: 0 success, 2 bad arguments, 3 channel or chi file parse
failure, 4 physicality validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .basis import chi_choi_to_pauli, chi_pauli_to_choi
from .channels import (
    ChannelFormatError,
    QuantumChannel,
    chi_oracle,
    load_channel,
    preset_channel,
    validate_cptp,
)
from .measure import BackendConfig, PhysicalityError
from .tomo import (
    CHI_CONVENTION,
    PAULI_CONVENTION,
    chi_from_json,
    chi_to_json,
    full_sqpt,
    plan_element,
    reconstruct_element,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PHYSICALITY = 4

SEED_ENV_VAR = "CHOI_SQPT_SEED"


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _add_channel_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--channel", metavar="PATH", help="channel JSON file")
    group.add_argument("--preset", metavar="NAME", help="named preset channel")
    parser.add_argument(
        "--param",
        metavar="V",
        type=float,
        action="append",
        default=[],
        help="preset parameter (repeatable)",
    )
    parser.add_argument("--dim", type=int, default=None, help="system dimension")


def _add_backend_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend", choices=("exact", "sampled"), default="exact"
    )
    parser.add_argument("--shots", type=int, default=None, help="shots per setting")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"master seed (default: ${SEED_ENV_VAR} or 0)",
    )


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", metavar="PATH", help="write the JSON report here")
    parser.add_argument(
        "--pretty", action="store_true", help="print a human-readable summary"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="choi-sqpt",
        description=(
            "Partial standard quantum process tomography in the matrix-unit "
            "(Choi) operator basis."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_element = sub.add_parser(
        "element", help="reconstruct a single chi matrix element"
    )
    _add_channel_args(p_element)
    _add_backend_args(p_element)
    _add_output_args(p_element)
    p_element.add_argument("--target", required=True, metavar="e,f,g,h")
    p_element.add_argument(
        "--lambda",
        dest="lambda_indices",
        action="store_true",
        help="interpret --target as data-matrix (lambda) indices a,b,c,d",
    )

    p_full = sub.add_parser("full", help="reconstruct the complete chi matrix")
    _add_channel_args(p_full)
    _add_backend_args(p_full)
    _add_output_args(p_full)
    p_full.add_argument(
        "--strategy",
        choices=("choi-four", "product-hermitian"),
        default="choi-four",
    )
    p_full.add_argument("--tp-shortcut", action="store_true")
    p_full.add_argument("--local-dim", type=int, default=None)
    p_full.add_argument("--sites", type=int, default=None)

    p_validate = sub.add_parser("validate", help="check a channel's physicality")
    _add_channel_args(p_validate)
    _add_output_args(p_validate)
    p_validate.add_argument("--tol", type=float, default=1e-10)

    p_plan = sub.add_parser(
        "plan", help="print the measurement plan for one element"
    )
    _add_channel_args(p_plan, required=False)
    _add_output_args(p_plan)
    p_plan.add_argument("--target", required=True, metavar="e,f,g,h")
    p_plan.add_argument(
        "--lambda", dest="lambda_indices", action="store_true",
        help="interpret --target as data-matrix (lambda) indices a,b,c,d",
    )

    p_convert = sub.add_parser(
        "convert", help="convert a chi matrix between Choi and Pauli bases"
    )
    _add_channel_args(p_convert, required=False)
    _add_output_args(p_convert)
    p_convert.add_argument("--chi", metavar="PATH", help="chi JSON file to convert")
    p_convert.add_argument("--to", choices=("pauli", "choi"), default="pauli")

    return parser


class _UsageError(ValueError):
    pass


def _resolve_channel(args) -> tuple[QuantumChannel, dict]:
    if args.channel:
        try:
            channel = load_channel(args.channel)
        except OSError as exc:
            raise ChannelFormatError(f"cannot read {args.channel}: {exc}") from exc
        if args.dim is not None and args.dim != channel.dim:
            raise _UsageError(
                f"--dim {args.dim} contradicts channel file dimension {channel.dim}"
            )
        descriptor = {"source": "file", "path": args.channel, "dim": channel.dim}
        return channel, descriptor
    dim = args.dim if args.dim is not None else 2
    try:
        channel = preset_channel(args.preset, args.param, dim)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    descriptor = {
        "source": "preset",
        "name": args.preset,
        "params": [float(p) for p in args.param],
        "dim": channel.dim,
    }
    return channel, descriptor


def _resolve_backend(args) -> tuple[BackendConfig, dict]:
    if args.seed is not None:
        seed = args.seed
    else:
        raw = os.environ.get(SEED_ENV_VAR, "0")
        try:
            seed = int(raw)
        except ValueError as exc:
            raise _UsageError(f"${SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    if args.backend == "sampled":
        if args.shots is None:
            raise _UsageError("--backend sampled requires --shots")
        config = BackendConfig("sampled", args.shots, seed)
    else:
        config = BackendConfig("exact", 0, seed)
    echo = {"mode": config.mode, "shots": config.shots, "seed": config.master_seed}
    return config, echo


def _parse_target(text: str, dim: int, as_lambda: bool) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise _UsageError(f"--target needs four comma-separated indices, got {text!r}")
    try:
        indices = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise _UsageError(f"--target indices must be integers, got {text!r}") from exc
    for idx in indices:
        if not 0 <= idx < dim:
            raise _UsageError(f"target index {idx} out of range for dimension {dim}")
    if as_lambda:
        a, b, c, d = indices
        return (c, a, d, b)
    return indices


def _chi_payload(chi: np.ndarray, std_errors: np.ndarray, convention: str) -> dict:
    payload = chi_to_json(chi, convention)
    payload["std_errors"] = [float(v) for v in np.asarray(std_errors).reshape(-1)]
    return payload


def _emit(report: dict, args, pretty_lines: list[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.pretty:
        print("\n".join(pretty_lines))
    elif not args.output:
        sys.stdout.write(text)


def _base_report(argv: list[str]) -> dict:
    return {
        "tool": {"name": "choi-sqpt", "version": __version__},
        "command": list(argv),
    }


def _cmd_element(args, report: dict) -> tuple[int, list[str]]:
    channel, descriptor = _resolve_channel(args)
    config, backend_echo = _resolve_backend(args)
    target = _parse_target(args.target, channel.dim, args.lambda_indices)
    plan = plan_element(*target, channel.dim)
    started = time.perf_counter()
    estimate = reconstruct_element(plan, channel, config)
    duration = time.perf_counter() - started
    e, f, g, h = target
    report.update(
        channel=descriptor,
        backend=backend_echo,
        results={
            "target": {"chi": list(target), "lambda": [f, h, e, g]},
            "value": _pair(estimate.value),
            "std_error": estimate.std_error,
            "settings_used": estimate.settings_used,
            "backend": estimate.backend,
        },
        settings={"plan_settings": plan.settings_count},
        duration_seconds=duration,
    )
    lines = [
        f"chi[{e},{f};{g},{h}] = {estimate.value.real:+.9f} "
        f"{estimate.value.imag:+.9f}i  ± {estimate.std_error:.3e}",
        f"settings: {plan.settings_count}  backend: {estimate.backend}",
    ]
    return EXIT_OK, lines


def _cmd_full(args, report: dict) -> tuple[int, list[str]]:
    channel, descriptor = _resolve_channel(args)
    config, backend_echo = _resolve_backend(args)
    started = time.perf_counter()
    result = full_sqpt(
        channel,
        config,
        strategy=args.strategy,
        tp_shortcut=args.tp_shortcut,
        local_dim=args.local_dim,
        n_sites=args.sites,
    )
    duration = time.perf_counter() - started
    report.update(
        channel=descriptor,
        backend=backend_echo,
        results={
            "strategy": result.strategy,
            "tp_shortcut": args.tp_shortcut,
            "chi": _chi_payload(result.chi, result.std_errors, CHI_CONVENTION),
        },
        settings={
            "total": result.settings_total,
            "measured": result.settings_measured,
            "inferred": result.settings_inferred,
        },
        duration_seconds=duration,
    )
    trace = complex(np.trace(result.chi))
    lines = [
        f"strategy: {result.strategy}  dim: {channel.dim}",
        f"settings: total {result.settings_total}, measured "
        f"{result.settings_measured}, inferred {result.settings_inferred}",
        f"trace(chi) = {trace.real:+.9f} {trace.imag:+.9f}i",
    ]
    return EXIT_OK, lines


def _cmd_validate(args, report: dict) -> tuple[int, list[str]]:
    channel, descriptor = _resolve_channel(args)
    if args.tol <= 0:
        raise _UsageError("--tol must be positive")
    started = time.perf_counter()
    verdict = validate_cptp(channel, args.tol)
    duration = time.perf_counter() - started
    report.update(
        channel=descriptor,
        results={
            "tol": verdict.tol,
            "tp_deviation": verdict.tp_deviation,
            "trace_preserving": verdict.trace_preserving,
            "min_chi_eigenvalue": verdict.min_chi_eigenvalue,
            "completely_positive": verdict.completely_positive,
            "chi_trace": verdict.chi_trace,
            "trace_law_delta": abs(verdict.chi_trace - channel.dim),
            "cptp": verdict.cptp,
        },
        duration_seconds=duration,
    )
    lines = [
        f"trace-preserving: {verdict.trace_preserving} "
        f"(deviation {verdict.tp_deviation:.3e})",
        f"completely positive: {verdict.completely_positive} "
        f"(min chi eigenvalue {verdict.min_chi_eigenvalue:.3e})",
        f"trace(chi) = {verdict.chi_trace:.12f} (expect {channel.dim} if TP)",
    ]
    return EXIT_OK if verdict.cptp else EXIT_PHYSICALITY, lines


def _cmd_plan(args, report: dict) -> tuple[int, list[str]]:
    if args.channel or args.preset:
        channel, descriptor = _resolve_channel(args)
        dim = channel.dim
    elif args.dim is not None:
        dim, descriptor = args.dim, {"source": "none", "dim": args.dim}
    else:
        raise _UsageError("plan needs --dim or a channel source")
    if dim < 2:
        raise _UsageError("--dim must be at least 2")
    target = _parse_target(args.target, dim, args.lambda_indices)
    started = time.perf_counter()
    plan = plan_element(*target, dim)
    duration = time.perf_counter() - started
    settings_json = []
    for setting in plan.settings:
        obs: dict = {"kind": "projector" if setting.is_projector else "hermitian"}
        obs["data"] = [_pair(z) for z in np.asarray(setting.observable).reshape(-1)]
        settings_json.append(
            {
                "input": [_pair(z) for z in setting.input_state],
                "observable": obs,
            }
        )
    e, f, g, h = target
    report.update(
        channel=descriptor,
        results={
            "target": {"chi": list(target), "lambda": [f, h, e, g]},
            "settings": settings_json,
            "terms": [
                {"weight": _pair(w), "setting": idx} for w, idx in plan.terms
            ],
        },
        settings={"plan_settings": plan.settings_count},
        duration_seconds=duration,
    )
    lines = [
        f"target chi[{e},{f};{g},{h}]  (lambda[{f},{h};{e},{g}])",
        f"settings: {plan.settings_count}, terms: {len(plan.terms)}",
    ]
    return EXIT_OK, lines


def _cmd_convert(args, report: dict) -> tuple[int, list[str]]:
    if args.chi and (args.channel or args.preset):
        raise _UsageError("pass either --chi or a channel source, not both")
    if args.chi:
        try:
            with open(args.chi, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ChannelFormatError(f"cannot read chi file {args.chi}: {exc}") from exc
        try:
            chi, convention = chi_from_json(obj)
        except ValueError as exc:
            raise ChannelFormatError(str(exc)) from exc
        descriptor = {"source": "chi-file", "path": args.chi}
        expected = CHI_CONVENTION if args.to == "pauli" else PAULI_CONVENTION
        if convention != expected:
            raise _UsageError(
                f"conversion to {args.to} needs a {expected} input, got {convention}"
            )
        dim = int(np.sqrt(chi.shape[0]))
    elif args.channel or args.preset:
        if args.to != "pauli":
            raise _UsageError("a channel source already yields the Choi form")
        channel, descriptor = _resolve_channel(args)
        chi = chi_oracle(channel)
        dim = channel.dim
    else:
        raise _UsageError("convert needs --chi or a channel source")

    n_qubits = dim.bit_length() - 1
    if dim < 2 or 2**n_qubits != dim:
        raise _UsageError(
            f"basis conversion is defined for qubit systems; dimension {dim} "
            "is not a power of two"
        )
    started = time.perf_counter()
    if args.to == "pauli":
        converted = chi_choi_to_pauli(chi, n_qubits)
        out_convention = PAULI_CONVENTION
    else:
        converted = chi_pauli_to_choi(chi, n_qubits)
        out_convention = CHI_CONVENTION
    duration = time.perf_counter() - started
    zeros = np.zeros(converted.shape)
    report.update(
        channel=descriptor,
        results={
            "direction": args.to,
            "n_qubits": n_qubits,
            "chi": _chi_payload(converted, zeros, out_convention),
        },
        duration_seconds=duration,
    )
    lines = [
        f"converted {dim * dim} x {dim * dim} chi to {out_convention}",
    ]
    return EXIT_OK, lines


_COMMANDS = {
    "element": _cmd_element,
    "full": _cmd_full,
    "validate": _cmd_validate,
    "plan": _cmd_plan,
    "convert": _cmd_convert,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    report = _base_report(list(argv))
    try:
        exit_code, pretty_lines = _COMMANDS[args.command](args, report)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ChannelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PhysicalityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args, pretty_lines)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
