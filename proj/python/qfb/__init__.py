"""Hahn-Exton q-Bessel functions, their zeros and q-Fourier-Bessel expansions.

Numbers are passed and returned as decimal strings so that no precision is lost
at the boundary. Results are the same JSON documents the ``qfb`` command-line
tool writes, decoded into Python dictionaries.
"""

import json

from . import _core

__all__ = ["evaluate", "zeros", "verify", "expand", "qintegral_power", "check_ids", "check_anchor"]


def evaluate(q, nu, z, digits=120, base="q^2"):
    """J_nu(z; base) and its z-derivative (``None`` where it is singular)."""
    return json.loads(_core.evaluate(str(q), str(nu), str(z), digits, base))


def zeros(q, nu, k_max, digits=120):
    """Table of the first ``k_max`` positive zeros of J_nu(.; q^2)."""
    return json.loads(_core.zeros(str(q), str(nu), k_max, digits))


def verify(q, nu, k_max=12, digits=120, checks=(), f=None):
    """Run the verification suite (all checks when ``checks`` is empty).

    ``f`` is a builtin integrand name or a lattice-function dictionary used by
    the Riemann-Lebesgue check.
    """
    if isinstance(f, dict):
        f = json.dumps(f)
    return json.loads(_core.verify(str(q), str(nu), k_max, digits, list(checks), f))


def expand(q, nu, f="one", K=8, k_max=12, points=24, digits=120):
    """q-Fourier-Bessel expansion of ``f`` (builtin name or lattice dictionary)."""
    if isinstance(f, dict):
        f = json.dumps(f)
    return json.loads(_core.expand(str(q), str(nu), f, K, k_max, points, digits))


def qintegral_power(q, s, digits=120):
    """Jackson q-integral of t^s over [0, 1] as a decimal string."""
    return _core.qintegral_power(str(q), str(s), digits)


def check_ids():
    """Verification check ids in canonical order."""
    return list(_core.check_ids())


def check_anchor(check):
    """The property a verification check measures."""
    return _core.check_anchor(check)
