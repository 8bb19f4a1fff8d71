"""Run the REST gateway as a local HTTP server for interactive use.

Users come from a JSON key table (see `load_users`); without one, a demo
table covering every role is installed so the web UI can be exercised
immediately.
"""
from __future__ import annotations

import argparse
from typing import Optional

from .gateway import GatewayConfig, GatewayService, Role, UserAccount, create_app, load_users
from .ledger import single_dc_topology

DEMO_USERS = [
    UserAccount("u-ship-ap", "shipper1", Role.SHIPPER_AP, "key-ship-ap"),
    UserAccount("u-ship-recv", "shipper1", Role.SHIPPER_RECEIVING, "key-ship-recv"),
    UserAccount("u-supp", "supplier1", Role.SUPPLIER_AR, "key-supp"),
    UserAccount("u-ocm", "ocm1", Role.CARRIER_AR, "key-ocm"),
    UserAccount("u-land", "landcarrier1", Role.CARRIER_AR, "key-land"),
    UserAccount("u-ocean", "oceancarrier1", Role.CARRIER_AR, "key-ocean"),
    UserAccount("u-admin", "shipper1", Role.ADMIN, "key-admin"),
]


def build_app(users: Optional[list[UserAccount]] = None, block_log_path: Optional[str] = None):
    from fastapi.middleware.cors import CORSMiddleware

    users = users or list(DEMO_USERS)
    orgs = sorted({u.org_id for u in users})
    config = GatewayConfig(topology=single_dc_topology(orgs), block_log_path=block_log_path)
    app = create_app(GatewayService(config, users))
    # The single-page UI is served from a different origin than the API.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    return app


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Serve the accounts-payable REST gateway")
    parser.add_argument("--users", help="JSON user table (userId, orgId, role, apiKey)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--block-log", help="append-only block log path")
    args = parser.parse_args(argv)

    import uvicorn

    users = load_users(args.users) if args.users else None
    uvicorn.run(build_app(users, args.block_log), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
