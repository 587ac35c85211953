"""Command-line client of the majorant service.

The CLI is a thin client: it builds a request, sends it through the HTTP
API (in-process by default, or to a remote server given --server), and
writes the response as CSV or JSON.  Exit codes: 0 success, 1 usage or
parameter error, 2 statistical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any

import httpx

from . import __version__
from .config import DEFAULTS, RunConfig, load_config_file, resolve
from .writers import render_csv, render_report_json, write_text

USAGE_ERROR = 1
STAT_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract wants 1
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


class Client:
    """HTTP access to the service, in-process unless a server is given."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            from starlette.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code == 404:
            raise ValueError(resp.json().get("detail", "not found"))
        if resp.status_code == 422:
            detail = resp.json().get("detail", "invalid request")
            raise ValueError(str(detail))
        resp.raise_for_status()
        return resp.json()

    def close(self) -> None:
        self._client.close()


def _parse_grid(spec: str) -> list[float]:
    """'start:stop:step' inclusive of both endpoints."""
    try:
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValueError(f"bad grid spec {spec!r}; expected start:stop:step")
    if step <= 0 or stop < start:
        raise ValueError("grid step must be positive and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def _floats(csv: str) -> list[float]:
    return [float(v) for v in csv.split(",") if v != ""]


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (flags take precedence)")
    common.add_argument("--server", help="base URL of a running service (default: in-process)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output file (default: stdout)")

    p = _Parser(prog="majorant", description=__doc__)
    p.add_argument("--version", action="version", version=f"majorant {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    kb = sub.add_parser("simulate-kb", parents=[common],
                        help="joint path of B, its majorant K, and X = 2K - B")
    kb.add_argument("--horizon", type=float)
    kb.add_argument("--dt", type=float)
    kb.add_argument("--delta", type=float)
    kb.add_argument("--anchor-slope", type=float, dest="anchor_slope")

    sz = sub.add_parser("simulate-z", parents=[common],
                        help="one path of the degenerate process Z")
    sz.add_argument("--z", type=float)
    sz.add_argument("--variant", choices=("limit", "path-decomposition", "mixture"))
    sz.add_argument("--horizon", type=float)
    sz.add_argument("--dt", type=float)

    dens = sub.add_parser("density", help="closed-form density evaluation")
    dsub = dens.add_subparsers(dest="density_kind", required=True)
    d1 = dsub.add_parser("z-onepoint", parents=[common])
    d1.add_argument("--z", type=float)
    d1.add_argument("--t", type=float)
    d1.add_argument("--x-grid", required=True, help="start:stop:step")
    dm = dsub.add_parser("z-multipoint", parents=[common])
    dm.add_argument("--z", type=float)
    dm.add_argument("--times", required=True, help="comma-separated")
    dm.add_argument("--values", required=True, help="comma-separated")
    dm.add_argument("--method", choices=("closed", "quadrature"), default="closed")
    dc = dsub.add_parser("curve", parents=[common])
    dc.add_argument("--kind", required=True,
                    choices=("chi5", "z-infimum", "mixture-weight", "bes-infimum", "bes5-from-zero"))
    dc.add_argument("--x-grid", required=True, help="start:stop:step")
    dc.add_argument("--z", type=float)
    dc.add_argument("--t", type=float)
    dc.add_argument("--n", type=int)
    dc.add_argument("--h", type=float)

    ex = sub.add_parser("experiment", parents=[common], help="run a statistical experiment")
    ex.add_argument("name", choices=("projection", "drift", "generator", "reflection",
                                     "semimartingale", "infimum", "z-equivalence"))
    ex.add_argument("--n", type=int)
    ex.add_argument("--z", type=float)
    ex.add_argument("--horizon", type=float)
    ex.add_argument("--dt", type=float)
    ex.add_argument("--eta", type=float)
    ex.add_argument("--epsilon", type=float)
    ex.add_argument("--s", type=float)
    ex.add_argument("--n-accept", type=int, dest="n_accept")
    ex.add_argument("--gamma", choices=("default", "uniform"))
    ex.add_argument("--negative-control", action="store_true", default=None,
                    dest="negative_control")

    sub.add_parser("selftest", parents=[common], help="fast invariant battery")
    return p


_EXPERIMENT_PARAMS = {
    "projection": ("n",),
    "drift": ("epsilon", "s", "n_accept"),
    "generator": ("z", "gamma", "n"),
    "reflection": ("z", "horizon", "dt"),
    "semimartingale": ("horizon", "dt", "eta", "negative_control"),
    "infimum": ("z", "n"),
    "z-equivalence": ("z", "n"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = load_config_file(args.config)
        cfg = RunConfig(
            command=args.command,
            seed=int(resolve("seed", args.seed, file_cfg)),
            threads=int(resolve("threads", args.threads, file_cfg)),
            format=str(resolve("format", args.format, file_cfg)),
            out=args.out,
        )
        client = Client(args.server)
        try:
            return _dispatch(client, cfg, args, file_cfg)
        finally:
            client.close()
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def _get(args, file_cfg, key, default=None):
    return resolve(key, getattr(args, key, None), file_cfg, default)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        write_text(cfg.out, text)
    else:
        sys.stdout.write(text)


def _dispatch(client: Client, cfg: RunConfig, args, file_cfg) -> int:
    if cfg.command == "simulate-kb":
        payload = {
            "seed": cfg.seed,
            "horizon": _get(args, file_cfg, "horizon"),
            "dt": _get(args, file_cfg, "dt"),
            "anchor_slope": _get(args, file_cfg, "anchor_slope", DEFAULTS["b"]),
        }
        if getattr(args, "delta", None) is not None:
            payload["delta"] = args.delta
        cfg.params.update(payload)
        data = client.post("/simulate/kb", payload)
        text = render_csv(
            {"t": data["times"], "B": data["brownian"], "K": data["majorant"], "X": data["reflected"]},
            {**cfg.describe(), "version": __version__},
        )
        _emit(cfg, text)
        return 0

    if cfg.command == "simulate-z":
        payload = {
            "seed": cfg.seed,
            "z": _get(args, file_cfg, "z"),
            "variant": getattr(args, "variant", None) or file_cfg.get("variant", "path-decomposition"),
            "horizon": _get(args, file_cfg, "horizon"),
            "dt": _get(args, file_cfg, "dt"),
        }
        cfg.params.update(payload)
        data = client.post("/simulate/z", payload)
        meta = {**cfg.describe(), "version": __version__,
                "floor": data["floor"], "tail_inf": data["tail_inf"]}
        if data.get("tau") is not None:
            meta["tau"] = data["tau"]
        text = render_csv({"t": data["times"], "Z": data["values"]}, meta)
        _emit(cfg, text)
        return 0

    if cfg.command == "density":
        return _density(client, cfg, args, file_cfg)

    if cfg.command == "experiment":
        params: dict[str, Any] = {}
        for key in _EXPERIMENT_PARAMS[args.name]:
            val = _get(args, file_cfg, key, default="__none__")
            if val not in (None, "__none__"):
                params[key] = val
        cfg.params.update({"experiment": args.name, **params})
        data = client.post(f"/experiment/{args.name}", {
            "seed": cfg.seed, "threads": cfg.threads, "params": params,
        })
        text = render_report_json(data["reports"], {**cfg.describe(), "version": __version__})
        _emit(cfg, text)
        return 0 if data["passed"] else STAT_FAILURE

    if cfg.command == "selftest":
        data = client.post("/selftest", {"seed": cfg.seed, "threads": cfg.threads})
        text = render_report_json(data["reports"], {**cfg.describe(), "version": __version__})
        _emit(cfg, text)
        return 0 if data["passed"] else STAT_FAILURE

    raise ValueError(f"unknown command {cfg.command!r}")


def _density(client: Client, cfg: RunConfig, args, file_cfg) -> int:
    kind = args.density_kind
    if kind == "z-onepoint":
        xs = _parse_grid(args.x_grid)
        payload = {"z": _get(args, file_cfg, "z"), "t": _get(args, file_cfg, "t", 1.0), "x": xs}
        cfg.params.update({"density": kind, "z": payload["z"], "t": payload["t"], "x_grid": args.x_grid})
        data = client.post("/density/z-onepoint", payload)
        text = render_csv({"x": data["x"], "density": data["density"]},
                          {**cfg.describe(), "version": __version__})
        _emit(cfg, text)
        return 0
    if kind == "z-multipoint":
        payload = {
            "z": _get(args, file_cfg, "z"),
            "times": _floats(args.times),
            "values": _floats(args.values),
            "method": args.method,
        }
        cfg.params.update({"density": kind, **payload})
        data = client.post("/density/z-multipoint", payload)
        _emit(cfg, render_report_json(
            [{"name": "z-multipoint", "density": data["density"], "method": data["method"],
              "verdict": True}],
            {**cfg.describe(), "version": __version__},
        ))
        return 0
    # curve
    xs = _parse_grid(args.x_grid)
    params = {}
    for key in ("z", "t", "n", "h"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    payload = {"kind": args.kind, "x": xs, "params": params}
    cfg.params.update({"density": f"curve:{args.kind}", "x_grid": args.x_grid, **params})
    data = client.post("/density/curve", payload)
    text = render_csv({"x": data["x"], "density": data["density"]},
                      {**cfg.describe(), "version": __version__})
    _emit(cfg, text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
