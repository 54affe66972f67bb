import pytest

from lfconstrain.automata import build_m_lf
from lfconstrain.decode import init_layer
from lfconstrain.vocab import FieldKind, VocabSpec, build_synthetic_vocab, eqs_sample_vocab, micro_vocab

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def full_vocab():
    return build_synthetic_vocab(VocabSpec())


@pytest.fixture(scope="session")
def full_dfa(full_vocab):
    return build_m_lf(full_vocab)


@pytest.fixture(scope="session")
def full_layer(full_vocab):
    return init_layer(len(full_vocab), 300, 13)


@pytest.fixture(scope="session")
def mid_vocab():
    return build_synthetic_vocab(VocabSpec.scaled(5000))


@pytest.fixture(scope="session")
def mid_dfa(mid_vocab):
    return build_m_lf(mid_vocab)


@pytest.fixture(scope="session")
def sample_vocab():
    return eqs_sample_vocab()


@pytest.fixture(scope="session")
def sample_dfa(sample_vocab):
    return build_m_lf(sample_vocab)


@pytest.fixture(scope="session")
def tiny_vocab():
    """The seven-token vocabulary used for the enumeration examples."""
    return micro_vocab(["(", ")", "EQ", "F", "enumValue", "X", "display"],
                       {"F": FieldKind.EnumUnordered})


@pytest.fixture(scope="session")
def micro12():
    """Twelve tokens, EOS included: every construct except AND/OR appears."""
    return micro_vocab(
        ["(", ")", "EQ", "LS", "NOT", "display", "enumValue", "F", "N", "X", "7", "EOS"],
        {"F": FieldKind.EnumUnordered, "N": FieldKind.Numeric},
    )
