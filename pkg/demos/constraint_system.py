"""Show the linear system generated for Church 2, its LP file and a witness."""

from __future__ import annotations

from ealint.constraints import all_constraints
from ealint.decoration import decorate_assignment, decorate_term, instantiate, show_param_term
from ealint.lambda_core import parse_term, principal_type
from ealint.lp import optimize, scale_to_integers


def main() -> None:
    m = parse_term(r"\y. \z. y (y z)")
    theta, _ = principal_type(m)
    t, sigma = decorate_term(m), decorate_assignment(theta)
    cs = all_constraints(t, sigma)
    print(show_param_term(t))
    print(cs.listing())
    print()
    print(cs.to_lp())
    res = optimize(cs)
    phi = scale_to_integers(res.point, cs)
    print(f"optimum {res.value}: {phi}")
    print(instantiate(phi, t))


if __name__ == "__main__":
    main()
