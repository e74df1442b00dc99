"""Command-line front end.

Every verb prints one JSON document to stdout and exits 0 on success; failures
print {"error": {...}} and exit nonzero. State (storage, ledger, job registry)
lives under the directory named by the gateway config, so verbs compose across
invocations: simulate -> upload -> recon -> status -> image -> ledger-verify.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from cloudmri.gateway.config import (
    GatewayConfig,
    resolve_config_path,
    write_default_config,
)
from cloudmri.gateway.service import GatewayError, GatewayService


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.handler(args)
    except GatewayError as exc:
        _emit({"error": {"code": type(exc).__name__, "message": str(exc)}})
        return _exit_code_for(exc.status)
    except FileNotFoundError as exc:
        _emit({"error": {"code": "FileNotFound", "message": str(exc)}})
        return 1
    except Exception as exc:
        _emit({"error": {"code": type(exc).__name__, "message": str(exc)}})
        return 1
    payload, code = result if isinstance(result, tuple) else (result, 0)
    _emit(payload)
    return code


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2))


def _exit_code_for(status: int) -> int:
    return {400: 2, 403: 3, 404: 4}.get(status, 1)


def _config_path(args) -> Path:
    config_path = resolve_config_path(getattr(args, "gateway_config", None))
    if not config_path.is_file():
        raise FileNotFoundError(
            f"gateway config {config_path} not found; run `cloudmri init` or set CLOUDMRI_CONFIG"
        )
    return config_path


def _service(args) -> GatewayService:
    return GatewayService(GatewayConfig.load(_config_path(args)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cloudmri", description=__doc__)
    parser.add_argument(
        "-C", "--gateway-config",
        help="path to the gateway config JSON (default: $CLOUDMRI_CONFIG or ./cloudmri-state/config.json)",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("init", help="write a demo gateway config and state directory")
    p.add_argument("--dir", default="cloudmri-state")
    p.set_defaults(handler=cmd_init)

    p = sub.add_parser("simulate", help="generate a phantom scan container (.cmri)")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("upload", help="seal a container and upload it")
    p.add_argument("file")
    p.add_argument("--actor", required=True)
    p.add_argument("--key-id", default=None, help="key id from config (default: first key)")
    p.add_argument("--profile", default=None, help="network profile name")
    p.set_defaults(handler=cmd_upload)

    p = sub.add_parser("recon", help="submit a reconstruction job")
    p.add_argument("dataset_id")
    p.add_argument("--actor", required=True)
    p.add_argument("--algorithm", default="fista", choices=("zero_filled", "ista", "fista"))
    p.add_argument("--lambda", dest="l1_weight", type=float, default=0.01)
    p.add_argument("--accel", type=float, default=4.0)
    p.add_argument("--pattern", default="random_lines_center",
                   choices=("full", "uniform_lines", "random_lines_center"))
    p.add_argument("--center-fraction", type=float, default=0.08)
    p.add_argument("--mask-seed", type=int, default=1234)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--no-wait", action="store_true", help="return immediately after submit")
    p.set_defaults(handler=cmd_recon)

    p = sub.add_parser("status", help="query a job")
    p.add_argument("job_id")
    p.set_defaults(handler=cmd_status)

    p = sub.add_parser("image", help="fetch a reconstructed image payload")
    p.add_argument("image_id")
    p.add_argument("--actor", required=True)
    p.add_argument("--out", default=None, help="write the full payload to this file")
    p.set_defaults(handler=cmd_image)

    p = sub.add_parser("ledger-verify", help="recompute the audit chain")
    p.set_defaults(handler=cmd_ledger_verify)

    p = sub.add_parser("bench", help="transfer-time table and local-vs-cloud recon benchmark")
    p.add_argument("--profiles", default="LOCAL_4G,CLOUD_6G",
                   help="comma-separated profile names for the transfer table")
    p.add_argument("--bytes", dest="byte_count", type=float, default=10e9)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--accel", type=float, default=4.0)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("fedsim", help="run a federated averaging simulation")
    p.add_argument("--config", required=True, help="federation config JSON")
    p.set_defaults(handler=cmd_fedsim)

    p = sub.add_parser("nodes", help="show the compute fleet")
    p.add_argument("--config", default=None, help="fleet config JSON (default: gateway fleet)")
    p.set_defaults(handler=cmd_nodes)

    p = sub.add_parser("serve", help="run the REST gateway")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("kernel-bench", help="compare compiled and NumPy wavelet kernels")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--reps", type=int, default=20)
    p.set_defaults(handler=cmd_kernel_bench)

    return parser


def cmd_init(args) -> dict:
    config_path = write_default_config(args.dir)
    return {
        "config": str(config_path),
        "hint": f"export CLOUDMRI_CONFIG={config_path}",
    }


def cmd_simulate(args) -> dict:
    from cloudmri.acquisition import simulated_dataset
    from cloudmri.raw_format import encode_dataset

    dataset = simulated_dataset(args.size, noise_sigma=args.noise, seed=args.seed)
    data = encode_dataset(dataset)
    Path(args.out).write_bytes(data)
    return {"file": args.out, "byte_count": len(data), "matrix": [args.size, args.size]}


def cmd_upload(args) -> dict:
    from cloudmri.transport import seal

    with _service(args) as service:
        key_id = args.key_id or next(iter(service.config.keys), None)
        if key_id is None or key_id not in service.config.keys:
            raise GatewayError(f"no usable key id (requested {args.key_id!r})")
        container = Path(args.file).read_bytes()
        blob = seal(service.config.keys[key_id], container, os.urandom(12))
        return service.upload_dataset(args.actor, blob.to_bytes(), key_id, args.profile)


def cmd_recon(args) -> dict:
    with _service(args) as service:
        params = {
            "algorithm": args.algorithm,
            "lambda": args.l1_weight,
            "max_iters": args.max_iters,
            "tol": args.tol,
            "wavelet_levels": args.levels,
        }
        from cloudmri.gateway.service import NotFound
        from cloudmri.gateway.storage import ObjectNotFound
        from cloudmri.raw_format import decode_dataset

        try:
            container = service.store.get(args.dataset_id)
        except ObjectNotFound as exc:
            raise NotFound(str(exc)) from exc
        matrix_y = decode_dataset(container.data).header.matrix_y
        mask_spec = {
            "pattern": args.pattern,
            "n": matrix_y,
            "acceleration": args.accel,
            "center_fraction": args.center_fraction,
            "seed": args.mask_seed,
        }
        job_id = service.submit_job(args.actor, args.dataset_id, params, mask_spec)
        if args.no_wait:
            return {"job_id": job_id, "state": "QUEUED"}
        return service.wait_for_job(job_id)


def cmd_status(args) -> dict:
    with _service(args) as service:
        return service.job_status(args.job_id)


def cmd_image(args) -> dict:
    with _service(args) as service:
        payload = service.get_image(args.actor, args.image_id)
    if args.out:
        Path(args.out).write_text(json.dumps(payload))
        return {
            "file": args.out,
            "width": payload["width"],
            "height": payload["height"],
            "meta": payload["meta"],
        }
    return payload


def cmd_ledger_verify(args):
    from cloudmri.ledger import verify_file

    config = GatewayConfig.load(_config_path(args))
    result = verify_file(config.storage_dir / "ledger.log").to_dict()
    return result, (0 if result["ok"] else 5)


def cmd_bench(args) -> dict:
    from cloudmri.acquisition import generate_phantom, make_mask, simulated_dataset
    from cloudmri.recon import ReconParams, benchmark_local_vs_cloud
    from cloudmri.transport import estimate_transfer_time

    with _service(args) as service:
        transfer_table = []
        for name in args.profiles.split(","):
            profile = service.config.profiles.get(name.strip())
            if profile is None:
                raise GatewayError(f"unknown profile {name.strip()!r}")
            transfer_table.append(
                {
                    "profile": profile.name,
                    "bytes": args.byte_count,
                    "transfer_s": estimate_transfer_time(int(args.byte_count), profile),
                }
            )
        dataset = simulated_dataset(args.size)
        mask = make_mask("random_lines_center", args.size, acceleration=args.accel,
                         center_fraction=0.08, seed=1234)
        rows = benchmark_local_vs_cloud(
            dataset,
            mask,
            ReconParams(algorithm="fista"),
            service.orchestrator.nodes(),
            reference=generate_phantom(args.size),
        )
    return {"transfer_per_file": transfer_table, "recon_benchmark": rows}


def cmd_fedsim(args) -> dict:
    from cloudmri.federated import FederationConfig, run_federation

    with open(args.config) as fh:
        fed_config = FederationConfig.from_dict(json.load(fh))
    with _service(args) as service:
        return run_federation(fed_config, ledger=service.ledger, clock=service.clock)


def cmd_nodes(args) -> dict:
    from cloudmri.orchestrator import fleet_from_json

    if args.config:
        fleet = fleet_from_json(args.config)
        return {
            "nodes": [
                {
                    "node_id": n.node_id,
                    "kind": n.kind,
                    "compute_rate_units_per_s": n.compute_rate_units_per_s,
                    "profile": n.profile.to_dict(),
                }
                for n in fleet
            ]
        }
    with _service(args) as service:
        return {
            "nodes": [
                {
                    "node_id": n.node_id,
                    "kind": n.kind,
                    "compute_rate_units_per_s": n.compute_rate_units_per_s,
                    "profile": n.profile.to_dict(),
                    "healthy": n.healthy,
                    "backlog_s": n.backlog_s,
                }
                for n in service.orchestrator.nodes()
            ]
        }


def cmd_serve(args) -> dict:
    import uvicorn

    from cloudmri.gateway.api import create_app

    service = _service(args)
    try:
        uvicorn.run(create_app(service), host=args.host, port=args.port, log_level="warning")
    finally:
        service.close()
    return {"stopped": True}


def cmd_kernel_bench(args) -> dict:
    from cloudmri.recon.bench import kernel_benchmark

    return kernel_benchmark(size=args.size, reps=args.reps)


if __name__ == "__main__":
    sys.exit(main())
