"""Operator command line.

One executable, subcommand per task: run services, register collections,
drive every ingest path, run harvests, sync the search index, query,
check rights, manage users, pull usage reports. Every command is
scriptable: no prompts, structured diagnostics on stderr, exit code 0 on
success, 2 on usage errors, 3 when a service cannot be reached, 1 on
service-reported failures.
"""

from __future__ import annotations

import json
import sys
import time

import click
import requests

from .config import load_config
from .errors import StacksError
from .services.http import raise_from_body

EXIT_SERVICE_UNREACHABLE = 3


class Ctx:
    def __init__(self, config_path):
        self.config = load_config(config_path)

    def url(self, service):
        return self.config.service_url(service)


def _fail(message, code=1):
    click.echo("error: %s" % message, err=True)
    sys.exit(code)


def _request(method, url, **kwargs):
    try:
        resp = requests.request(method, url, timeout=kwargs.pop("timeout", 60), **kwargs)
    except requests.RequestException as exc:
        _fail("cannot reach service at %s (%s)" % (url, exc), EXIT_SERVICE_UNREACHABLE)
    if resp.status_code >= 400:
        try:
            raise_from_body(resp.status_code, resp.content)
        except StacksError as exc:
            _fail("%s: %s" % (type(exc).__name__, exc))
    return resp.json()


def _parse_fields(pairs):
    """el=value or el.qualifier=value pairs into a QDC element map."""
    elements = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.UsageError("field %r is not name=value" % pair)
        name, value = pair.split("=", 1)
        qualifier = ""
        if "." in name:
            name, qualifier = name.split(".", 1)
        elements.setdefault(name, []).append([qualifier, value])
    return elements


@click.group()
@click.option(
    "--config",
    "config_path",
    envvar="STACKS_CONFIG",
    default=None,
    help="Path to the JSON config file (or $STACKS_CONFIG; defaults to ./stacks.json).",
)
@click.pass_context
def cli(ctx, config_path):
    """Desk-scale digital library services and their operator tools."""
    ctx.obj = Ctx(config_path)


@cli.command()
@click.argument(
    "target", type=click.Choice(["mr", "ingest", "porch", "search", "access", "all"])
)
@click.pass_obj
def serve(obj, target):
    """Run one service, or the whole stack in one process."""
    from .services import run as runmod

    if target == "porch":
        target = "ingest"  # the staging pipeline service
    stack = runmod.start_all(obj.config) if target == "all" else runmod.start_one(obj.config, target)
    for name, server in sorted(stack.servers.items()):
        click.echo("%s: %s" % (name, server.url))
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        stack.shutdown()


@cli.group()
def collection():
    """Collection registration."""


@collection.command("register")
@click.option("--title", required=True)
@click.option("--description", required=True)
@click.option(
    "--type",
    "aggregation_type",
    type=click.Choice(["administrative", "semantic", "personal"]),
    default="semantic",
    show_default=True,
)
@click.option("--term", "terms", multiple=True, help="audience=use-type pair; repeatable.")
@click.option("--editor", "editors", multiple=True, help="Authorized direct-entry editor; repeatable.")
@click.option("--column", "columns", multiple=True, help="Batch column mapping col=element[.qualifier]; repeatable.")
@click.option("--identifier", default="", help="Collection-level locator.")
@click.pass_obj
def collection_register(obj, title, description, aggregation_type, terms, editors, columns, identifier):
    """Register a collection and print its new handle."""
    qdc = {"title": [["", title]], "description": [["", description]]}
    if identifier:
        qdc["identifier"] = [["", identifier]]
    access_terms = []
    for term in terms:
        if "=" not in term:
            raise click.UsageError("--term must be audience=use-type")
        audience, use_type = term.split("=", 1)
        access_terms.append([audience, use_type])
    ingest_config = {}
    if columns:
        column_map = {}
        for pair in columns:
            if "=" not in pair:
                raise click.UsageError("--column must be col=element[.qualifier]")
            col, target = pair.split("=", 1)
            column_map[col] = target
        ingest_config["column_map"] = column_map
    result = _request(
        "POST",
        obj.url("mr") + "/structural",
        json={
            "method": "register_collection",
            "params": {
                "qdc": qdc,
                "aggregation_type": aggregation_type,
                "access_terms": access_terms,
                "ingest_config": ingest_config,
                "authority_list": list(editors),
            },
        },
    )
    click.echo(result["result"]["handle"])


@cli.group()
def ingest():
    """Feed records through the staged ingest pipeline."""


def _echo_ingest_result(result):
    click.echo(
        "staged=%d committed=%d failed=%d deleted=%d"
        % (result["staged"], result["committed"], len(result["failed"]), result["deleted"])
    )
    for source_id, report in result["failed"]:
        findings = "; ".join(
            "%s: %s" % (f[0], f[2]) for f in report.get("findings", []) if f[1] == "fail"
        )
        click.echo("failed %s: %s" % (source_id, findings), err=True)
    if result.get("error"):
        _fail(result["error"])


@ingest.command("batch")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--collection", required=True)
@click.option(
    "--encoding", type=click.Choice(["xml", "csv", "tsv"]), default=None,
    help="Defaults from the file extension.",
)
@click.pass_obj
def ingest_batch(obj, file, collection, encoding):
    """Upload a batch file (XML container, CSV, or TSV)."""
    if encoding is None:
        suffix = file.rsplit(".", 1)[-1].lower()
        encoding = suffix if suffix in ("xml", "csv", "tsv") else "xml"
    with open(file, "rb") as fh:
        body = fh.read()
    result = _request(
        "POST",
        obj.url("ingest") + "/upload",
        params={"collection": collection, "encoding": encoding},
        data=body,
    )
    _echo_ingest_result(result["result"])


@ingest.command("oai")
@click.option("--endpoint", required=True)
@click.option("--prefix", default="oai_dc", show_default=True)
@click.option("--set", "set_spec", default=None)
@click.option("--collection", required=True)
@click.pass_obj
def ingest_oai(obj, endpoint, prefix, set_spec, collection):
    """Harvest an OAI provider into a collection (incremental)."""
    result = _request(
        "POST",
        obj.url("ingest") + "/ingest",
        json={
            "action": "oai",
            "params": {
                "endpoint": endpoint,
                "prefix": prefix,
                "set": set_spec,
                "collection": collection,
            },
        },
        timeout=600,
    )
    _echo_ingest_result(result["result"])


@ingest.command("gather")
@click.option("--seed", "seeds", multiple=True, required=True)
@click.option("--scope", "scopes", multiple=True, required=True)
@click.option("--page-cap", type=int, default=100, show_default=True)
@click.option("--collection", required=True)
@click.pass_obj
def ingest_gather(obj, seeds, scopes, page_cap, collection):
    """Gather open-access pages within scope and describe them."""
    result = _request(
        "POST",
        obj.url("ingest") + "/ingest",
        json={
            "action": "gather",
            "params": {
                "seeds": list(seeds),
                "scope": list(scopes),
                "page_cap": page_cap,
                "collection": collection,
            },
        },
        timeout=600,
    )
    _echo_ingest_result(result["result"])


@cli.group()
def entry():
    """Direct metadata entry."""


@entry.command("put")
@click.option("--collection", required=True)
@click.option("--editor", required=True)
@click.option("--field", "fields", multiple=True, required=True,
              help="element=value or element.qualifier=value; repeatable.")
@click.option("--kind", type=click.Choice(["item", "collection"]), default="item")
@click.pass_obj
def entry_put(obj, collection, editor, fields, kind):
    """Create or update one record by hand; prints the handle."""
    result = _request(
        "POST",
        obj.url("ingest") + "/ingest",
        json={
            "action": "entry",
            "params": {
                "qdc": _parse_fields(fields),
                "collection": collection,
                "editor": editor,
                "kind": kind,
            },
        },
    )
    click.echo(result["result"]["handle"])


@cli.group()
def harvest():
    """Client-side harvesting without a running stack."""


@harvest.command("run")
@click.option("--endpoint", required=True)
@click.option("--prefix", default="oai_dc", show_default=True)
@click.option("--from", "from_", default=None)
@click.option("--until", default=None)
@click.option("--set", "set_spec", default=None)
@click.option("--state-dir", default=None,
              help="Persist per-source state here and harvest incrementally.")
@click.option("--every", type=int, default=None,
              help="Repeat on a fixed interval (seconds); needs --state-dir.")
def harvest_run(endpoint, prefix, from_, until, set_spec, state_dir, every):
    """Stream a harvest; one identifier<TAB>datestamp<TAB>status line per record."""
    from .harvest import harvest as run_harvest
    from .harvest import incremental_sync, load_state, save_state
    from .harvest.client import HarvestError

    if every and not state_dir:
        raise click.UsageError("--every needs --state-dir")

    def one_pass():
        if state_dir:
            state = load_state(state_dir, endpoint, prefix, set_spec)
            delta, new_state = incremental_sync(state, {})
            for item in delta.new + delta.changed:
                click.echo("%s\t%s\t%s" % (item.identifier, item.datestamp, item.status))
            for identifier in delta.deleted:
                click.echo("%s\t\tdeleted" % identifier)
            save_state(state_dir, new_state)
        else:
            for item in run_harvest(endpoint, prefix, from_, until, set_spec):
                click.echo("%s\t%s\t%s" % (item.identifier, item.datestamp, item.status))

    try:
        one_pass()
        while every:
            time.sleep(every)
            one_pass()
    except KeyboardInterrupt:
        pass
    except HarvestError as exc:
        _fail(str(exc), EXIT_SERVICE_UNREACHABLE)
    except StacksError as exc:
        _fail(str(exc))


@cli.group()
def index():
    """Search index maintenance."""


@index.command("sync")
@click.option("--every", type=int, default=None,
              help="Repeat on a fixed interval (seconds).")
@click.pass_obj
def index_sync(obj, every):
    """Incrementally sync the search index from the repository."""

    def one_pass():
        result = _request("POST", obj.url("search") + "/sync", json={}, timeout=600)
        stats = result["result"]
        click.echo(
            "added=%d updated=%d removed=%d"
            % (stats["added"], stats["updated"], stats["removed"])
        )

    try:
        one_pass()
        while every:
            time.sleep(every)
            one_pass()
    except KeyboardInterrupt:
        pass


@cli.command()
@click.argument("expression")
@click.option("--limit", type=int, default=None)
@click.option("--offset", type=int, default=0)
@click.option("--machine", is_flag=True, help="One entry per line: handle<TAB>score<TAB>title.")
@click.pass_obj
def query(obj, expression, limit, offset, machine):
    """Run a search query and print the ranked list."""
    payload = {"expression": expression, "offset": offset}
    if limit is not None:
        payload["limit"] = limit
    result = _request("POST", obj.url("search") + "/search", json=payload)
    entries = result["entries"]
    if machine:
        for entry in entries:
            click.echo(
                "%s\t%.6f\t%s"
                % (entry["handle"], entry["score"], entry["summary"]["title"])
            )
        return
    click.echo("%d results (showing %d)" % (result["total"], len(entries)))
    if result.get("notice"):
        click.echo("note: %s" % result["notice"], err=True)
    for i, entry in enumerate(entries, start=offset + 1):
        summary = entry["summary"]
        flags = " [annotated]" if summary.get("has_annotations") else ""
        click.echo(
            "%3d. %-18s %8.4f  %s%s"
            % (i, entry["handle"], entry["score"], summary["title"], flags)
        )
        if summary.get("description"):
            click.echo("     %s" % summary["description"][:100])


@cli.group()
def rights():
    """Access decisions."""


@rights.command("check")
@click.option("--item", required=True)
@click.option("--username", default=None)
@click.option("--password", default=None)
@click.option("--anonymous", is_flag=True)
@click.pass_obj
def rights_check(obj, item, username, password, anonymous):
    """Authenticate and ask the rights broker about one item."""
    if anonymous or not username:
        auth = {"action": "anonymous"}
    else:
        if password is None:
            raise click.UsageError("--username needs --password")
        auth = {"action": "login", "username": username, "secret": password}
    session = _request("POST", obj.url("access") + "/auth", json=auth)
    decision = _request(
        "POST",
        obj.url("access") + "/rights",
        json={"item": item},
        headers={"X-Session-Token": session["token"]},
    )
    click.echo(decision["outcome"])
    if decision.get("use_statement"):
        click.echo(decision["use_statement"])
    if decision.get("matched"):
        click.echo(
            "matched: %s / %s"
            % (decision["matched"]["audience"], decision["matched"]["use_type"])
        )


@cli.group()
def user():
    """Local user registry."""


@user.command("add")
@click.option("--username", required=True)
@click.option("--password", required=True)
@click.option("--category", "categories", multiple=True)
@click.option("--attr", "attrs", multiple=True, help="key=value attribute; repeatable.")
@click.pass_obj
def user_add(obj, username, password, categories, attrs):
    """Register a user (requires the operator secret in the config)."""
    attributes = {}
    for pair in attrs:
        if "=" not in pair:
            raise click.UsageError("--attr must be key=value")
        key, value = pair.split("=", 1)
        attributes[key] = value
    _request(
        "POST",
        obj.url("access") + "/auth",
        json={
            "action": "register",
            "admin_secret": obj.config["access"]["admin_secret"],
            "username": username,
            "secret": password,
            "categories": list(categories),
            "attributes": attributes,
        },
    )
    click.echo("registered %s" % username)


@cli.command()
@click.option("--collection", required=True)
@click.option("--from", "from_", default=None, help="First day (YYYY-MM-DD).")
@click.option("--until", default=None, help="Last day (YYYY-MM-DD).")
@click.option("--machine", is_flag=True)
@click.pass_obj
def report(obj, collection, from_, until, machine):
    """Aggregate usage report for a collection."""
    params = {"collection": collection}
    if from_:
        params["from"] = from_
    if until:
        params["until"] = until
    data = _request("GET", obj.url("access") + "/report", params=params)
    if machine:
        click.echo(json.dumps(data))
        return
    click.echo("usage for %s" % data["collection"])
    for cell in data["cells"]:
        click.echo(
            "%s  %-24s %-22s %5d"
            % (cell["day"], cell["category"], cell["use_type"], cell["count"])
        )
    if data["suppressed"]:
        click.echo("(%d small cells suppressed)" % data["suppressed"])


def main():
    cli(prog_name="stacks")


if __name__ == "__main__":
    main()
