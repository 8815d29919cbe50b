# File: tests/test_utils.py
import numpy as np
import pytest

from pathcg.errors import NumericalError, ValidationError
from pathcg.utils.decorators import exits_on_error, returns_finite, timed, with_context


def test_with_context_tags_only_untagged_errors():
    @with_context('inner')
    def fail(error):
        raise error

    with pytest.raises(ValidationError) as info:
        fail(ValidationError('bad'))
    assert info.value.context == 'inner'

    tagged = ValidationError('bad')
    tagged.context = 'outer'
    with pytest.raises(ValidationError) as info:
        fail(tagged)
    assert info.value.context == 'outer'


def test_returns_finite():
    @returns_finite('ratio')
    def ratio(a, b):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.asarray(a) / b

    assert ratio([1.0, 2.0], 2.0).tolist() == [0.5, 1.0]
    with pytest.raises(NumericalError):
        ratio([1.0, 0.0], 0.0)


def test_timed_returns_elapsed_seconds():
    result, elapsed = timed(lambda: 7)()
    assert result == 7
    assert elapsed >= 0.0


def test_exits_on_error_uses_the_error_exit_code():
    @exits_on_error
    def command():
        raise ValidationError('bad input')

    with pytest.raises(SystemExit) as info:
        command()
    assert info.value.code == 2
