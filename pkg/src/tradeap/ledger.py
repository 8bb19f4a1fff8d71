"""Simulated permissioned ledger: endorse -> order -> validate -> commit.

Contract functions are deterministic Python callables executed against a
snapshot of committed state. Endorsement collects attestations from the
endorsing peers of the organizations in the touched scopes (majority
policy). The single orderer cuts blocks at the configured size or timeout,
and commit validates read-set versions (whole-key MVCC) in block order.

Time is virtual: a discrete-event scheduler drives every stage, so an
entire run is reproducible from the RNG seed. Live callers submit and then
drain the scheduler to synchronously push work through the pipeline.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Optional

from .edi import canonical_json
from .errors import (
    AccessError,
    ContractError,
    DocValidationError,
    IntegrityError,
    NotFoundError,
)


@dataclass(frozen=True)
class PeerConfig:
    peer_id: str
    org_id: str
    datacenter_id: str
    endorser: bool = True
    faulty: bool = False  # test hook: produces divergent endorsements


@dataclass(frozen=True)
class LatencyRange:
    """Uniform link latency in milliseconds."""

    low_ms: float
    high_ms: float

    def sample(self, rng: random.Random) -> float:
        return rng.uniform(self.low_ms, self.high_ms) / 1000.0


class NetworkTopology:
    def __init__(
        self,
        peers: list[PeerConfig],
        orderer_datacenter_id: str,
        link_latency: dict[tuple[str, str], LatencyRange],
    ):
        self.peers = list(peers)
        self.orderer_datacenter_id = orderer_datacenter_id
        self.link_latency = dict(link_latency)
        self._validate()

    def _validate(self) -> None:
        ids = [p.peer_id for p in self.peers]
        if len(set(ids)) != len(ids):
            raise DocValidationError("peerId", "peer ids must be unique")
        orgs = {p.org_id for p in self.peers}
        if not orgs:
            raise DocValidationError("peers", "at least one peer required")
        dcs = {p.datacenter_id for p in self.peers} | {self.orderer_datacenter_id}
        intra_high = 0.0
        inter_low = math.inf
        for a in dcs:
            for b in dcs:
                key = (a, b)
                if key not in self.link_latency:
                    raise DocValidationError("linkLatency", f"missing entry for {key}")
                if self.link_latency[(a, b)] != self.link_latency[(b, a)]:
                    raise DocValidationError("linkLatency", f"asymmetric entry for {key}")
                rng_ = self.link_latency[key]
                if a == b:
                    intra_high = max(intra_high, rng_.high_ms)
                else:
                    inter_low = min(inter_low, rng_.low_ms)
        if inter_low < intra_high:
            raise DocValidationError("linkLatency", "intra-DC latency must be below inter-DC")

    def latency(self, dc_a: str, dc_b: str, rng: random.Random) -> float:
        return self.link_latency[(dc_a, dc_b)].sample(rng)

    def endorsing_peers(self, orgs: Optional[set[str]] = None) -> list[PeerConfig]:
        peers = [p for p in self.peers if p.endorser]
        if orgs:
            scoped = [p for p in peers if p.org_id in orgs]
            if scoped:
                return scoped
        return peers

    def org_datacenter(self, org: Optional[str]) -> str:
        for p in self.peers:
            if p.org_id == org:
                return p.datacenter_id
        return self.orderer_datacenter_id

    @property
    def orgs(self) -> set[str]:
        return {p.org_id for p in self.peers}


def single_dc_topology(
    orgs: Iterable[str], peers_per_org: int = 1, dc: str = "dc1"
) -> NetworkTopology:
    peers = [
        PeerConfig(f"{org}-peer{i}", org, dc)
        for org in orgs
        for i in range(peers_per_org)
    ]
    return NetworkTopology(peers, dc, {(dc, dc): LatencyRange(0.1, 0.9)})


def multi_dc_topology(
    orgs: Iterable[str],
    num_dcs: int,
    peers_per_org: int = 1,
    intra: LatencyRange = LatencyRange(0.1, 0.9),
    inter: LatencyRange = LatencyRange(50.0, 130.0),
) -> NetworkTopology:
    """Peers round-robined over datacenters; the orderer sits in its own DC."""
    orgs = list(orgs)
    dcs = [f"dc{i + 1}" for i in range(num_dcs)]
    orderer_dc = dcs[0] if num_dcs == 1 else f"dc{num_dcs + 1}"
    all_dcs = dcs + ([orderer_dc] if orderer_dc not in dcs else [])
    peers = []
    i = 0
    for org in orgs:
        for j in range(peers_per_org):
            peers.append(PeerConfig(f"{org}-peer{j}", org, dcs[i % num_dcs]))
            i += 1
    latency = {}
    for a in all_dcs:
        for b in all_dcs:
            latency[(a, b)] = intra if a == b else inter
    return NetworkTopology(peers, orderer_dc, latency)


class Validity(str, Enum):
    VALID = "VALID"
    MVCC_CONFLICT = "MVCC_CONFLICT"
    ENDORSEMENT_FAILURE = "ENDORSEMENT_FAILURE"


class TxPhase(str, Enum):
    SUBMITTED = "SUBMITTED"
    ENDORSED = "ENDORSED"
    ORDERED = "ORDERED"
    COMMITTED = "COMMITTED"
    FAILED = "FAILED"


@dataclass
class LedgerTransaction:
    tx_id: str
    contract_function: str
    args: dict
    client_org: Optional[str]
    read_set: dict[str, int] = field(default_factory=dict)
    write_set: dict[str, Any] = field(default_factory=dict)
    scopes: dict[str, list[str]] = field(default_factory=dict)
    endorsements: list[tuple[str, str]] = field(default_factory=list)
    submit_time: float = 0.0
    commit_time: Optional[float] = None
    validity: Optional[Validity] = None
    phase: TxPhase = TxPhase.SUBMITTED
    result: Any = None
    error: Optional[str] = None

    @property
    def latency(self) -> Optional[float]:
        if self.commit_time is None:
            return None
        return self.commit_time - self.submit_time

    def to_dict(self) -> dict:
        return {
            "txId": self.tx_id,
            "contractFunction": self.contract_function,
            "args": self.args,
            "clientOrg": self.client_org,
            "readSet": self.read_set,
            "writeSet": self.write_set,
            "scopes": self.scopes,
            "endorsements": [list(e) for e in self.endorsements],
            "submitTime": self.submit_time,
            "commitTime": self.commit_time,
            "validity": self.validity.value if self.validity else None,
        }


@dataclass
class Block:
    block_no: int
    transactions: list[LedgerTransaction]
    prev_digest: str
    digest: str = ""

    def header_dict(self) -> dict:
        return {
            "blockNo": self.block_no,
            "prevDigest": self.prev_digest,
            "transactions": [tx.to_dict() for tx in self.transactions],
        }

    def compute_digest(self) -> str:
        return hashlib.sha256(canonical_json(self.header_dict())).hexdigest()

    def to_dict(self) -> dict:
        data = self.header_dict()
        data["digest"] = self.digest
        return data


class VirtualScheduler:
    """Minimal discrete-event scheduler over virtual seconds."""

    def __init__(self):
        self.now = 0.0
        self._seq = itertools.count()
        self._heap: list[tuple[float, int, Callable[[], None]]] = []

    def at(self, when: float, fn: Callable[[], None]) -> None:
        if when < self.now:
            when = self.now
        heapq.heappush(self._heap, (when, next(self._seq), fn))

    def after(self, delay: float, fn: Callable[[], None]) -> None:
        self.at(self.now + delay, fn)

    def run_until_idle(self) -> None:
        while self._heap:
            when, _, fn = heapq.heappop(self._heap)
            self.now = max(self.now, when)
            fn()

    def advance_to(self, when: float) -> None:
        while self._heap and self._heap[0][0] <= when:
            t, _, fn = heapq.heappop(self._heap)
            self.now = max(self.now, t)
            fn()
        self.now = max(self.now, when)


class StateView:
    """Read/write-set recording view handed to contract functions."""

    def __init__(self, ledger: "Ledger", client_org: Optional[str] = None):
        self._ledger = ledger
        self._client_org = client_org
        self.read_set: dict[str, int] = {}
        self.write_set: dict[str, Any] = {}
        self.scopes: dict[str, list[str]] = {}

    def _visible(self, key: str) -> bool:
        if self._client_org == Ledger.PRIVILEGED_ORG:
            return True
        scope = self._ledger._scopes.get(key)
        return scope is None or self._client_org in scope

    def get(self, key: str) -> Any:
        if key in self.write_set:
            return self.write_set[key]
        value, version = self._ledger._state.get(key, (None, 0))
        self.read_set[key] = version
        return value

    def keys(self, prefix: str) -> list[str]:
        # Range read over the keys visible to the submitting org (a peer only
        # holds the collections its org is party to). Versions of every
        # matching key are recorded so concurrent writes under the prefix
        # invalidate this transaction.
        matched = sorted(
            k for k in self._ledger._state if k.startswith(prefix) and self._visible(k)
        )
        for k in matched:
            self.read_set[k] = self._ledger._state[k][1]
        extra = sorted(k for k in self.write_set if k.startswith(prefix) and k not in matched)
        return matched + extra

    def put(self, key: str, value: Any, scope: Optional[Iterable[str]] = None) -> None:
        # Writes are version-checked at commit even if the key was not read.
        if key not in self.read_set:
            self.read_set[key] = self._ledger._state.get(key, (None, 0))[1]
        self.write_set[key] = value
        if scope is not None:
            self.scopes[key] = sorted(set(scope))


@dataclass(frozen=True)
class ContractVersion:
    effective_from: float
    fn: Callable[[StateView, dict], Any]
    version: str


class Ledger:
    PRIVILEGED_ORG = "system"

    def __init__(
        self,
        topology: NetworkTopology,
        block_size: int = 100,
        block_timeout: float = 0.5,
        seed: int = 0,
        exec_cost: Optional[dict[str, float]] = None,
        validate_cost_factor: float = 0.85,
        verify_cost: float = 0.00002,
        block_log_path: Optional[str] = None,
    ):
        if block_size <= 0 or block_timeout <= 0:
            raise DocValidationError("blockSize", "block size and timeout must be positive")
        self.topology = topology
        self.block_size = block_size
        self.block_timeout = block_timeout
        self.rng = random.Random(seed)
        self.scheduler = VirtualScheduler()
        self.exec_cost = dict(exec_cost or {})
        self.validate_cost_factor = validate_cost_factor
        self.verify_cost = verify_cost
        self.block_log_path = block_log_path

        self._state: dict[str, tuple[Any, int]] = {}
        self._scopes: dict[str, frozenset[str]] = {}
        self._provenance: dict[str, tuple[str, dict]] = {}
        self._contracts: dict[str, list[ContractVersion]] = {}
        self._required_approvers: dict[str, frozenset[str]] = {}
        self.blocks: list[Block] = []
        self.transactions: dict[str, LedgerTransaction] = {}
        self.committed: list[LedgerTransaction] = []
        self._version_counter = 0
        self._tx_seq = itertools.count(1)
        self._pending: list[LedgerTransaction] = []
        self._cut_scheduled_for: Optional[float] = None
        self._commit_free_at = 0.0

    # -- contract registry -------------------------------------------------

    def register_contract(
        self,
        name: str,
        fn: Callable[[StateView, dict], Any],
        required_approvers: Optional[Iterable[str]] = None,
        exec_cost: Optional[float] = None,
    ) -> None:
        self._contracts[name] = [ContractVersion(-math.inf, fn, "v1")]
        self._required_approvers[name] = frozenset(
            required_approvers if required_approvers is not None else self.topology.orgs
        )
        if exec_cost is not None:
            self.exec_cost[name] = exec_cost

    def upgrade_contract(
        self,
        name: str,
        fn: Callable[[StateView, dict], Any],
        effective_from: float,
        approvals: Iterable[str],
        version: Optional[str] = None,
    ) -> list[str]:
        """Register a new version and recompute advices dated >= effective_from.

        Requires approval from every org party to the contract; recomputation
        happens through ordinary (auditable) ledger transactions.
        """
        if name not in self._contracts:
            raise NotFoundError(f"unknown contract function {name!r}")
        missing = self._required_approvers[name] - set(approvals)
        if missing:
            raise AccessError(f"missing approvals from {sorted(missing)}")
        versions = self._contracts[name]
        versions.append(
            ContractVersion(effective_from, fn, version or f"v{len(versions) + 1}")
        )
        versions.sort(key=lambda v: v.effective_from)
        resubmitted = []
        for key, (fn_name, args) in sorted(self._provenance.items()):
            if fn_name != name:
                continue
            shipment_date = args.get("shipmentDate")
            if shipment_date is not None and shipment_date >= effective_from:
                resubmitted.append(self.submit(name, args, self.PRIVILEGED_ORG))
        return resubmitted

    def _resolve(self, name: str, args: dict) -> ContractVersion:
        versions = self._contracts.get(name)
        if not versions:
            raise NotFoundError(f"unknown contract function {name!r}")
        date = args.get("shipmentDate", math.inf)
        chosen = versions[0]
        for v in versions:
            if v.effective_from <= date:
                chosen = v
        return chosen

    # -- submission path ---------------------------------------------------

    def submit(self, fn_name: str, args: dict, client_org: Optional[str] = None) -> str:
        """Enter the endorsement stage; returns the tx id immediately."""
        contract = self._resolve(fn_name, args)
        tx = LedgerTransaction(
            tx_id=f"tx{next(self._tx_seq):08d}",
            contract_function=fn_name,
            args=args,
            client_org=client_org,
            submit_time=self.scheduler.now,
        )
        self.transactions[tx.tx_id] = tx

        # Endorsement simulation: execute once against committed state.
        # Deterministic contracts produce identical rw-sets on every peer.
        view = StateView(self, client_org)
        try:
            tx.result = contract.fn(view, args)
        except ContractError as exc:
            tx.phase = TxPhase.FAILED
            tx.error = str(exc)
            raise
        tx.read_set = view.read_set
        tx.write_set = view.write_set
        tx.scopes = view.scopes

        self._authorize(tx, client_org)

        touched_orgs: set[str] = set()
        for key in set(tx.read_set) | set(tx.write_set):
            scope = self._scopes.get(key) or frozenset(tx.scopes.get(key, ()))
            touched_orgs |= scope
        endorsers = self.topology.endorsing_peers(touched_orgs & self.topology.orgs)
        agreeing = [p for p in endorsers if not p.faulty]
        if len(agreeing) * 2 <= len(endorsers):
            tx.phase = TxPhase.FAILED
            tx.validity = Validity.ENDORSEMENT_FAILURE
            tx.error = "endorsement policy not satisfied"
            return tx.tx_id
        tx.endorsements = [(p.peer_id, f"sig:{p.peer_id}:{tx.tx_id}") for p in agreeing]

        client_dc = self.topology.org_datacenter(client_org)
        cost = self.exec_cost.get(fn_name, 0.001)
        endorse_latency = cost + max(
            2 * self.topology.latency(client_dc, p.datacenter_id, self.rng) for p in endorsers
        )
        to_orderer = self.topology.latency(
            client_dc, self.topology.orderer_datacenter_id, self.rng
        )

        def arrive():
            tx.phase = TxPhase.ENDORSED
            self._arrive_at_orderer(tx)

        self.scheduler.after(endorse_latency + to_orderer, arrive)
        return tx.tx_id

    def _authorize(self, tx: LedgerTransaction, client_org: Optional[str]) -> None:
        if client_org == self.PRIVILEGED_ORG:
            return
        for key in set(tx.read_set) | set(tx.write_set):
            scope = self._scopes.get(key)
            if scope is not None and client_org not in scope:
                tx.phase = TxPhase.FAILED
                tx.error = f"org {client_org!r} outside scope of {key!r}"
                raise AccessError(tx.error)

    # -- ordering ----------------------------------------------------------

    def _arrive_at_orderer(self, tx: LedgerTransaction) -> None:
        tx.phase = TxPhase.ORDERED
        self._pending.append(tx)
        if len(self._pending) >= self.block_size:
            self._cut_block()
        elif self._cut_scheduled_for is None:
            deadline = self.scheduler.now + self.block_timeout
            self._cut_scheduled_for = deadline
            self.scheduler.at(deadline, self._timeout_cut)

    def _timeout_cut(self) -> None:
        if self._cut_scheduled_for is None or self.scheduler.now < self._cut_scheduled_for:
            return
        self._cut_scheduled_for = None
        if self._pending:
            self._cut_block()

    def _cut_block(self) -> None:
        txs = self._pending[: self.block_size]
        self._pending = self._pending[self.block_size :]
        self._cut_scheduled_for = None
        if self._pending:
            deadline = self.scheduler.now + self.block_timeout
            self._cut_scheduled_for = deadline
            self.scheduler.at(deadline, self._timeout_cut)

        # Commit stage is a serial resource: per-tx validation plus one
        # block delivery round to the slowest peer datacenter.
        start = max(self._commit_free_at, self.scheduler.now)
        duration = sum(
            self.validate_cost_factor * self.exec_cost.get(tx.contract_function, 0.001)
            + len(tx.endorsements) * self.verify_cost
            for tx in txs
        )
        peer_dcs = {p.datacenter_id for p in self.topology.peers}
        duration += max(
            self.topology.latency(self.topology.orderer_datacenter_id, dc, self.rng)
            for dc in peer_dcs
        )
        self._commit_free_at = start + duration
        self.scheduler.at(self._commit_free_at, lambda: self._commit_block(txs))

    # -- validation & commit -------------------------------------------------

    def _commit_block(self, txs: list[LedgerTransaction]) -> None:
        prev = self.blocks[-1].digest if self.blocks else "0" * 64
        for tx in txs:
            conflict = any(
                self._state.get(key, (None, 0))[1] != version
                for key, version in tx.read_set.items()
            )
            tx.validity = Validity.MVCC_CONFLICT if conflict else Validity.VALID
            tx.commit_time = self.scheduler.now
            tx.phase = TxPhase.COMMITTED
            if tx.validity is Validity.VALID:
                self._apply(tx)
            self.committed.append(tx)
        block = Block(len(self.blocks), txs, prev)
        block.digest = block.compute_digest()
        self.blocks.append(block)
        if self.block_log_path:
            with open(self.block_log_path, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(block.to_dict()).decode("utf-8") + "\n")

    def _apply(self, tx: LedgerTransaction) -> None:
        # Sorted application keeps version assignment identical under replay.
        for key, value in sorted(tx.write_set.items()):
            self._version_counter += 1
            self._state[key] = (value, self._version_counter)
            if key in tx.scopes:
                self._scopes[key] = frozenset(tx.scopes[key])
            self._provenance[key] = (tx.contract_function, tx.args)

    # -- queries -------------------------------------------------------------

    def query(self, key: str, org: Optional[str]) -> Any:
        """Committed value for scoped readers; access error outside the scope."""
        scope = self._scopes.get(key)
        if scope is not None and org != self.PRIVILEGED_ORG and org not in scope:
            raise AccessError(f"org {org!r} outside scope of {key!r}")
        entry = self._state.get(key)
        return entry[0] if entry else None

    def query_prefix(self, prefix: str, org: Optional[str]) -> dict[str, Any]:
        out = {}
        for key in sorted(self._state):
            if not key.startswith(prefix):
                continue
            scope = self._scopes.get(key)
            if scope is not None and org != self.PRIVILEGED_ORG and org not in scope:
                continue
            out[key] = self._state[key][0]
        return out

    def tx_status(self, tx_id: str) -> LedgerTransaction:
        try:
            return self.transactions[tx_id]
        except KeyError:
            raise NotFoundError(f"unknown transaction {tx_id!r}")

    def run_until_idle(self) -> None:
        self.scheduler.run_until_idle()

    def world_state_digest(self) -> str:
        payload = {k: [v, ver] for k, (v, ver) in self._state.items()}
        return hashlib.sha256(canonical_json(payload)).hexdigest()

    def preload(self, key: str, value: Any, scope: Optional[Iterable[str]] = None) -> None:
        """Seed genesis state outside the pipeline (benchmark fixtures)."""
        self._version_counter += 1
        self._state[key] = (value, self._version_counter)
        if scope is not None:
            self._scopes[key] = frozenset(scope)


def replay_block_log(lines: Iterable[str]) -> tuple[str, int]:
    """Replay a block log on a fresh peer; returns (world-state digest, blocks).

    Verifies the hash chain and re-derives each transaction's validity from
    the recorded read sets; any divergence is an integrity error.
    """
    import json

    state: dict[str, tuple[Any, int]] = {}
    version_counter = 0
    prev = "0" * 64
    count = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        data = json.loads(line)
        if data["prevDigest"] != prev:
            raise IntegrityError(f"block {data['blockNo']}: broken hash chain")
        recorded = data.pop("digest")
        recomputed = hashlib.sha256(canonical_json(data)).hexdigest()
        if recomputed != recorded:
            raise IntegrityError(f"block {data['blockNo']}: digest mismatch")
        for tx in data["transactions"]:
            conflict = any(
                state.get(key, (None, 0))[1] != version
                for key, version in tx["readSet"].items()
            )
            validity = "MVCC_CONFLICT" if conflict else "VALID"
            if tx["validity"] != validity:
                raise IntegrityError(f"tx {tx['txId']}: validity diverged on replay")
            if validity == "VALID":
                for key, value in sorted(tx["writeSet"].items()):
                    version_counter += 1
                    state[key] = (value, version_counter)
        prev = recorded
        count += 1
    payload = {k: [v, ver] for k, (v, ver) in state.items()}
    return hashlib.sha256(canonical_json(payload)).hexdigest(), count


def verify_main(argv: Optional[list[str]] = None) -> int:
    """CLI: replay a block log file and print its world-state digest."""
    import argparse

    parser = argparse.ArgumentParser(description="Replay and verify a ledger block log")
    parser.add_argument("block_log", help="path to the append-only block log (JSON lines)")
    args = parser.parse_args(argv)
    with open(args.block_log, encoding="utf-8") as fh:
        digest, blocks = replay_block_log(fh)
    print(f"blocks={blocks} worldStateDigest={digest}")
    return 0
