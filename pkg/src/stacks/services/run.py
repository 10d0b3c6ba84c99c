"""Service assembly: build each service from config and start it.

``start_all`` hosts the whole stack in one process, each service bound
to its own port; every non-repository service still consumes the
repository through its HTTP surface, so single-process and multi-process
deployments exercise the same boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..access import (
    ProfileStore,
    RightsBroker,
    SessionStore,
    UserRegistry,
    load_policy,
)
from ..access.rights import DecisionLog
from ..ingest import CrosswalkRegistry, IngestPipeline
from ..repository import MetadataRepository
from ..search import SearchService
from .access_server import AccessServices, serve_access
from .clients import RepositoryClient
from .ingest_server import serve_ingest
from .mr_server import serve_repository
from .search_server import serve_search


@dataclass
class Stack:
    config: object
    servers: dict = field(default_factory=dict)
    repo: object = None
    pipeline: object = None
    search: object = None
    access: object = None

    def url(self, name):
        return self.servers[name].url

    def shutdown(self):
        for server in self.servers.values():
            server.shutdown()


def start_repository(config, stack):
    root = config.storage_root
    root.mkdir(parents=True, exist_ok=True)
    repo_cfg = config["repository"]
    repo = MetadataRepository(root / "records.log", size_cap=repo_cfg["size_cap"])
    host, port = config.service_address("mr")
    server = serve_repository(
        repo,
        host,
        port,
        privileged_token=repo_cfg["privileged_token"],
        page_size=repo_cfg["page_size"],
        token_ttl=repo_cfg["token_ttl"],
        repository_name=repo_cfg["repository_name"],
        admin_email=repo_cfg["admin_email"],
    )
    stack.repo = repo
    stack.servers["mr"] = server
    return server


def start_ingest(config, stack, mr_url):
    registry = CrosswalkRegistry.load(config.path(config["ingest"]["crosswalk_dir"]))
    gather_cfg = config["gather"]
    pipeline = IngestPipeline(
        RepositoryClient(mr_url),
        config.storage_root / "ingest",
        registry,
        gather_defaults={
            "politeness_delay": gather_cfg["politeness_delay"],
            "user_agent": gather_cfg["user_agent"],
        },
    )
    host, port = config.service_address("ingest")
    server = serve_ingest(pipeline, host, port)
    stack.pipeline = pipeline
    stack.servers["ingest"] = server
    return server


def start_search(config, stack, mr_url):
    service = SearchService(
        config.storage_root / "search",
        repo=RepositoryClient(mr_url),
        config=config.search_config(),
    )
    host, port = config.service_address("search")
    server = serve_search(service, host, port)
    stack.search = service
    stack.servers["search"] = server
    return server


def start_access(config, stack, mr_url):
    access_cfg = config["access"]
    policy = load_policy(config.path(access_cfg["policy_file"]))
    root = config.storage_root / "access"
    registry = UserRegistry(root / "users.json")
    sessions = SessionStore(policy.categories, ttl=access_cfg["session_ttl"])
    profiles = ProfileStore(root / "profiles.json", policy.profile_schema)
    broker = RightsBroker(
        RepositoryClient(mr_url),
        policy.categories,
        default_terms=policy.default_terms,
        log=DecisionLog(root / "decisions.log"),
        report_floor=access_cfg["report_floor"],
    )
    services = AccessServices(
        registry, sessions, profiles, broker, policy, access_cfg["admin_secret"]
    )
    host, port = config.service_address("access")
    server = serve_access(services, host, port)
    stack.access = services
    stack.servers["access"] = server
    return server


SERVICE_NAMES = ("mr", "ingest", "search", "access")


def start_all(config):
    stack = Stack(config)
    mr_server = start_repository(config, stack)
    mr_url = mr_server.url
    start_ingest(config, stack, mr_url)
    start_search(config, stack, mr_url)
    start_access(config, stack, mr_url)
    return stack


def start_one(config, name):
    stack = Stack(config)
    if name == "mr":
        start_repository(config, stack)
        return stack
    mr_url = config.service_url("mr")
    if name == "ingest":
        start_ingest(config, stack, mr_url)
    elif name == "search":
        start_search(config, stack, mr_url)
    elif name == "access":
        start_access(config, stack, mr_url)
    else:
        raise ValueError("unknown service %r" % name)
    return stack
