import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robabsa.corpus import AbsaInstance, AspectSpan, Polarity, tree_from_heads
from robabsa.toydata import load_toy

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def toy():
    return load_toy()


def make_instance(forms, heads, labels, span, label=Polarity.POSITIVE, upos=None, name="x", **kw):
    tree = tree_from_heads(forms, heads, labels, upos=upos)
    return AbsaInstance(name, tree, AspectSpan(*span), label, **kw)


def random_heads(rng, n):
    """Heads of a uniformly shuffled random tree (1-based, one 0)."""
    order = [int(i) for i in rng.permutation(n)]
    heads = [0] * n
    for k, tok in enumerate(order[1:], start=1):
        heads[tok] = order[int(rng.integers(k))] + 1
    return heads


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


TINY_TRAIN = """\
# small model so CLI runs stay quick
d_model = 16
n_transformer_layers = 1
n_heads = 2
d_ff = 32
d_gcn = 8
n_gcn_layers = 1
d_label_embedding = 4
max_epochs = 1
batch_size = 16
figures = false
"""


def run_cli(*args, env_config=None, monkeypatch=None):
    """Run the CLI in-process and return its exit code."""
    from robabsa.cli import main
    if monkeypatch is not None:
        if env_config is None:
            monkeypatch.delenv("ROBABSA_CONFIG", raising=False)
        else:
            monkeypatch.setenv("ROBABSA_CONFIG", str(env_config))
    try:
        return main([str(a) for a in args])
    except SystemExit as exc:
        return exc.code


# criterion id -> (description, passed, detail); printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}. {name}: {detail}")
