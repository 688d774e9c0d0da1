"""Shared fixtures and hand-derived oracles.

The analyzer oracle below is worked out on paper from the element
definitions alone (split each beam by polarization, erase the mark, mix
beams 1/4 and 2/3 on symmetric splitters) so the tests do not trust the
pipeline they are checking.
"""

import numpy as np
import pytest

from teleoptics.states import BasisKet, JonesVector, Polarization, random_jones

H = Polarization.H
V = Polarization.V


def analyzer_oracle(psi: JonesVector) -> dict:
    """Expected joint amplitudes after the four-way analyzer.

    Derivation sketch: the source puts (|a,a'> + |b,b'>)/sqrt(2), both H.
    Encoding gives (alpha|H> + beta|V>) on photon 1's occupied beam. The
    splitters send V from a to beam 1 and H to 2, V from b to 3 and H to 4;
    the rotators make everything H; the mixers then give
    1' = (1+4)/sqrt(2), 4' = (1-4)/sqrt(2), 2' = (2+3)/sqrt(2),
    3' = (2-3)/sqrt(2). Collecting terms per detector beam:
    """
    a, b = psi.alpha, psi.beta
    return {
        BasisKet("1'", H, "a'", H): b / 2,
        BasisKet("1'", H, "b'", H): a / 2,
        BasisKet("2'", H, "a'", H): a / 2,
        BasisKet("2'", H, "b'", H): b / 2,
        BasisKet("3'", H, "a'", H): a / 2,
        BasisKet("3'", H, "b'", H): -b / 2,
        BasisKet("4'", H, "a'", H): b / 2,
        BasisKet("4'", H, "b'", H): -a / 2,
    }


def assert_state_matches(state, expected: dict, tol: float = 1e-12) -> None:
    keys = set(state.kets())
    assert keys == set(expected), f"ket support differs: {keys ^ set(expected)}"
    for ket, amp in expected.items():
        assert abs(state.amplitude(ket) - amp) < tol


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def generic_psi():
    """A state with no vanishing component and a nontrivial phase."""
    return JonesVector.from_bloch(1.1, 0.4)


def haar_states(count: int, seed: int = 7):
    gen = np.random.default_rng(seed)
    return [random_jones(gen) for _ in range(count)]
