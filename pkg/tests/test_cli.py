import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from stacks.cli import cli
from stacks.services.run import start_all

from .test_services import make_config

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def cli_stack(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    config = make_config(tmp)
    stack = start_all(config)
    # config file pointing at the live ephemeral ports
    ports = {
        name: stack.servers[name].server_address[1]
        for name in ("mr", "ingest", "search", "access")
    }
    config_path = tmp / "stacks.json"
    config_path.write_text(
        json.dumps(
            {
                "storage": {"root": str(tmp / "data")},
                "services": {n: {"port": p} for n, p in ports.items()},
                "access": {"admin_secret": "op-secret"},
            }
        )
    )
    yield stack, str(config_path), tmp
    stack.shutdown()


def run_cli(config_path, *args):
    return CliRunner().invoke(cli, ["--config", config_path, *args], prog_name="stacks")


def test_unknown_subcommand_is_usage_error_exit_2(cli_stack):
    _, config_path, _ = cli_stack
    result = run_cli(config_path, "bogus")
    assert result.exit_code == 2
    assert "Usage" in result.output or "Error" in result.output


def test_collection_register_prints_handle(cli_stack):
    _, config_path, _ = cli_stack
    result = run_cli(
        config_path,
        "collection",
        "register",
        "--title",
        "Desk Physics Demos",
        "--type",
        "semantic",
        "--description",
        "Bench-scale demos.",
        "--term",
        "public=open",
        "--editor",
        "op@example.org",
        "--column",
        "title=title",
        "--column",
        "url=identifier.url",
    )
    assert result.exit_code == 0, result.output
    handle = result.output.strip()
    assert "/" in handle and handle.startswith("na-")


def test_full_cli_pipeline(cli_stack, tmp_path):
    stack, config_path, tmp = cli_stack
    reg = run_cli(
        config_path,
        "collection", "register",
        "--title", "CLI corpus",
        "--description", "Records for CLI tests.",
        "--term", "public=open",
        "--editor", "op@example.org",
        "--column", "title=title",
        "--column", "url=identifier.url",
        "--column", "subject=subject",
    )
    assert reg.exit_code == 0, reg.output
    coll = reg.output.strip()

    batch = tmp_path / "rows.tsv"
    batch.write_text(
        "title\turl\tsubject\n"
        "Water pollution basics\thttp://cli/1\twater\n"
        "Comet watching\thttp://cli/2\tastronomy\n"
    )
    ingested = run_cli(
        config_path, "ingest", "batch", str(batch), "--collection", coll
    )
    assert ingested.exit_code == 0, ingested.output
    assert "committed=2" in ingested.output

    entry = run_cli(
        config_path,
        "entry", "put",
        "--collection", coll,
        "--editor", "op@example.org",
        "--field", "title=Hand-entered record",
        "--field", "identifier=http://cli/3",
        "--field", "audience.grade=elementary",
    )
    assert entry.exit_code == 0, entry.output

    synced = run_cli(config_path, "index", "sync")
    assert synced.exit_code == 0, synced.output
    assert "added=" in synced.output

    q = run_cli(config_path, "query", ":: water pollution", "--machine")
    assert q.exit_code == 0, q.output
    lines = [l for l in q.output.splitlines() if l.strip()]
    assert lines
    parts = lines[0].split("\t")
    assert len(parts) == 3
    float(parts[1])  # score column parses
    assert parts[0].startswith("na-")

    human = run_cli(config_path, "query", 'subject="water" :: pollution')
    assert human.exit_code == 0
    assert "results" in human.output


def test_query_empty_expression_fails_cleanly(cli_stack):
    _, config_path, _ = cli_stack
    result = run_cli(config_path, "query", "::")
    assert result.exit_code == 1
    assert "QueryError" in result.output or "error" in result.output.lower()


def test_user_add_and_rights_check(cli_stack):
    _, config_path, _ = cli_stack
    reg = run_cli(
        config_path,
        "collection", "register",
        "--title", "Guarded CLI",
        "--description", "d",
        "--term", "k12-students=open",
        "--term", "corporate-research=for-fee",
    )
    coll = reg.output.strip()
    entry = run_cli(
        config_path,
        "entry", "put",
        "--collection", coll,
        "--editor", "x",  # no editors registered: expect forbidden
        "--field", "title=t",
        "--field", "identifier=http://cli/guard",
    )
    assert entry.exit_code == 1  # Forbidden surfaces as service error

    added = run_cli(
        config_path,
        "user", "add",
        "--username", "kid",
        "--password", "pw",
        "--category", "elementary-students",
    )
    assert added.exit_code == 0, added.output

    # grant through collection fallback terms
    from stacks.services import RepositoryClient

    stack, _, _ = cli_stack[0], None, None
    client = RepositoryClient(cli_stack[0].url("mr"))
    from stacks.qdc import QdcRecord
    from stacks.repository import Handle

    item = client.put_record(
        "item",
        QdcRecord().add("title", "guarded").add("identifier", "http://cli/g2"),
        collection=Handle.parse(coll),
    )
    checked = run_cli(
        config_path,
        "rights", "check",
        "--item", str(item),
        "--username", "kid",
        "--password", "pw",
    )
    assert checked.exit_code == 0, checked.output
    assert checked.output.splitlines()[0] == "grant"

    anon = run_cli(config_path, "rights", "check", "--item", str(item), "--anonymous")
    assert anon.exit_code == 0
    assert anon.output.splitlines()[0] == "deny"


def test_report_command(cli_stack):
    _, config_path, _ = cli_stack
    reg = run_cli(
        config_path,
        "collection", "register",
        "--title", "Reported CLI",
        "--description", "d",
        "--term", "public=open",
    )
    coll = reg.output.strip()
    result = run_cli(config_path, "report", "--collection", coll)
    assert result.exit_code == 0
    assert "usage for %s" % coll in result.output


def test_harvest_run_client_side(cli_stack, tmp_path):
    stack, config_path, _ = cli_stack
    result = run_cli(
        config_path,
        "harvest", "run",
        "--endpoint", stack.url("mr") + "/oai",
        "--prefix", "oai_dc",
    )
    assert result.exit_code == 0, result.output
    line = result.output.splitlines()[0]
    ident, datestamp, status = line.split("\t")
    assert ident.startswith("oai:") and status in ("active", "deleted")

    state_dir = tmp_path / "state"
    inc = run_cli(
        config_path,
        "harvest", "run",
        "--endpoint", stack.url("mr") + "/oai",
        "--prefix", "oai_dc",
        "--state-dir", str(state_dir),
    )
    assert inc.exit_code == 0
    assert list(state_dir.glob("*.json"))


def test_connection_failure_exit_3(tmp_path):
    dead = tmp_path / "dead.json"
    dead.write_text(
        json.dumps(
            {
                "services": {
                    "mr": {"port": 9},
                    "ingest": {"port": 9},
                    "search": {"port": 9},
                    "access": {"port": 9},
                }
            }
        )
    )
    result = run_cli(str(dead), "query", ":: anything")
    assert result.exit_code == 3
    assert "cannot reach" in result.output


def test_config_with_unknown_key_fails(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"srevices": {}}')
    result = run_cli(str(bad), "query", ":: x")
    assert result.exit_code != 0
