"""Run the usage examples embedded in docstrings."""

import doctest

import pytest

import mallowsim.coupling
import mallowsim.exact_law
import mallowsim.perms

MODULES = [mallowsim.perms, mallowsim.exact_law, mallowsim.coupling]


@pytest.mark.parametrize("module", MODULES, ids=lambda m: m.__name__)
def test_docstring_examples(module):
    result = doctest.testmod(module, verbose=False)
    assert result.attempted > 0
    assert result.failed == 0
