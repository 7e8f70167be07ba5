"""Built-in field and action corpus used by the verification suite and tests.

Fields at desk scale on C^1 and C^2:

* well2:     |z|^2                        (quadratic well, Levi = 1)
* well4:     |z|^4                        (quartic well, degenerate at 0)
* round2:    |z|^2 + |w|^2                (round potential, Levi = I)
* quartic2:  round2 + 0.1 |z|^2 |w|^2     (min Levi eigenvalue is exactly 1)
* cross2:    round2 + 0.5 Re(z cj(w))     (constant Levi with eigenvalues 3/4, 5/4)
* avg_linear / avg_quartic: SU(2) Haar averages of perturbed fields; the
  odd perturbation 0.2 Re(z) integrates to zero, leaving radial potentials
  with their unique minimum at the origin.
* saddle:    Re(z^2), the planted pluriharmonic failure case.
"""

from __future__ import annotations

from .expr import PotentialField, parse_expression
from .symmetry import GroupAction, QuadratureRule, haar_average

WELL2 = "z1*cj(z1)"
WELL4 = "z1^2*cj(z1)^2"
ROUND2 = "z1*cj(z1) + z2*cj(z2)"
QUARTIC2 = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)"
CROSS2 = "z1*cj(z1) + z2*cj(z2) + 0.25*z1*cj(z2) + 0.25*cj(z1)*z2"
SADDLE = "0.5*z1^2 + 0.5*cj(z1)^2"
PERTURBATION = "0.2*(0.5*z1 + 0.5*cj(z1))"   # 0.2 Re(z1)

# minimum Levi eigenvalue of each strictly-PSH corpus field (constant in
# all cases: round/quartic collapse to exactly 1, the cross term shifts
# the constant Levi spectrum to 1 +- 1/4)
MIN_LEVI = {"well2": 1.0, "round2": 1.0, "quartic2": 1.0, "cross2": 0.75}


def base_fields():
    return {
        "well2": PotentialField.from_text(WELL2, 1, domain_radius=4.0),
        "well4": PotentialField.from_text(WELL4, 1, domain_radius=4.0),
        "round2": PotentialField.from_text(ROUND2, 2, domain_radius=2.5),
        "quartic2": PotentialField.from_text(QUARTIC2, 2, domain_radius=2.5),
        "cross2": PotentialField.from_text(CROSS2, 2, domain_radius=2.5),
    }


def averaged_fields():
    su2 = GroupAction.su2()
    rule = QuadratureRule.for_su2(su2)
    avg_linear = haar_average(
        PotentialField.from_text(ROUND2 + " + " + PERTURBATION, 2,
                                 domain_radius=2.5), su2, rule)
    avg_quartic = haar_average(
        PotentialField.from_text(QUARTIC2 + " + " + PERTURBATION, 2,
                                 domain_radius=2.5), su2, rule)
    return {"avg_linear": avg_linear, "avg_quartic": avg_quartic}


def all_fields():
    fields = base_fields()
    fields.update(averaged_fields())
    return fields


def psh_field_names():
    """Corpus fields that are strictly PSH on their working balls."""
    return ("well2", "round2", "quartic2", "cross2", "avg_linear", "avg_quartic")


def unit_levi_field_names():
    """Fields whose minimum Levi eigenvalue is identically 1."""
    return ("well2", "round2", "quartic2")


def moment_field_names():
    """The C^2 corpus fields eligible for the moment-map pipeline."""
    return ("round2", "quartic2")


def saddle_field():
    return PotentialField(1, parse_expression(SADDLE, 1))


def actions():
    return {
        "circle11": GroupAction.circle([1, 1]),
        "circle1": GroupAction.circle([1]),
        "su2": GroupAction.su2(),
        "sign_flip": GroupAction.finite([[[1, 0], [0, 1]], [[-1, 0], [0, -1]]]),
    }
