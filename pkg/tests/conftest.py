import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hault.elgamal import Keypair
from hault.group import load_profile
from hault.ledger import Ledger
from hault.wallet import WalletContext

TOY_B = 6


@pytest.fixture(scope="session")
def toy():
    return load_profile("toy")


@pytest.fixture(scope="session")
def prod():
    return load_profile("babyjubjub")


@pytest.fixture
def rng():
    return random.Random(20251118)


@pytest.fixture
def keypair(toy, rng):
    return Keypair.generate(toy, rng)


@dataclass
class World:
    """A toy ledger with owner, auditor and three users, plus their wallets."""

    ledger: Ledger
    keys: dict
    rng: random.Random
    wallets: dict = field(default_factory=dict)

    def ctx(self, who):
        ctx = self.wallets.get(who)
        if ctx is None:
            ctx = WalletContext(self.keys[who], who, self.ledger.b, self.ledger.state.auditor_pk, rng=self.rng)
            self.wallets[who] = ctx
        if who in self.ledger.state.users:
            ctx.refresh(self.ledger)
        return ctx

    def pk(self, who):
        return self.keys[who].pk

    def balance(self, who):
        return self.ctx(who).balance()


def make_world(curve, b, seed=1, users=("alice", "bob", "carol"), owner_native=1000):
    rng = random.Random(seed)
    keys = {name: Keypair.generate(curve, rng) for name in ("owner", "auditor", *users)}
    ledger = Ledger.create(curve, b, "owner", keys["owner"].pk, "auditor", keys["auditor"].pk,
                           {"owner": owner_native})
    for name in users:
        ledger.add_user("owner", name, keys[name].pk)
    return World(ledger, keys, rng)


@pytest.fixture
def world(toy):
    return make_world(toy, TOY_B)


# -- acceptance report ---------------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by this test")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or report.failed:
        n, title = crit
        prev = _CRITERIA.get(n, (title, True))
        _CRITERIA[n] = (title, prev[1] and report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
