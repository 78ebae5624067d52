"""
Radial generator table

Reproduces the per-profile eigenvalue maps and sandwich constants at a radius
R, side by side with their numerical sup/inf counterparts.
"""

from dataclasses import asdict, dataclass
from typing import List

from kfbd.generators.base import RadialGenerator, get_generator
from kfbd.utils.config import GeneratorSpec

AGREEMENT_TOLERANCE = 1e-8


@dataclass
class TableRow:
    profile: str
    R: float
    lambda_perp: float
    lambda_par: float
    L_closed: float
    L_numeric: float
    m_closed: float
    m_numeric: float
    agree: bool

    def to_dict(self) -> dict:
        return asdict(self)


def table_profiles(lam: float = 0.5, p: float = 3.0) -> List[RadialGenerator]:
    """Every supplied profile, parameterised for the table"""
    specs = [
        GeneratorSpec(profile="square"),
        GeneratorSpec(profile="exp_centered"),
        GeneratorSpec(profile="logcosh"),
        GeneratorSpec(profile="sqrtplus"),
        GeneratorSpec(profile="quartic", lam=lam),
        GeneratorSpec(profile="power", p=p),
    ]
    return [get_generator(spec) for spec in specs]


def table_row(g: RadialGenerator, R: float) -> TableRow:
    closed = g.closed_form_constants(R)
    numeric = g.numerical_constants(R)
    if closed is None:
        closed = numeric
    agree = _close(closed.L, numeric.L) and _close(closed.m, numeric.m)
    return TableRow(
        profile=g.label,
        R=R,
        lambda_perp=float(g.lambda_perp(R)),
        lambda_par=float(g.lambda_par(R)),
        L_closed=closed.L,
        L_numeric=numeric.L,
        m_closed=closed.m,
        m_numeric=numeric.m,
        agree=agree,
    )


def reproduce_table(R: float = 1.0, lam: float = 0.5, p: float = 3.0) -> List[TableRow]:
    return [table_row(g, R) for g in table_profiles(lam, p)]


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= AGREEMENT_TOLERANCE * max(1.0, abs(a), abs(b))
