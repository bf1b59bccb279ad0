"""Infer EAL types for the first few Church numerals and their compositions."""

from __future__ import annotations

from ealint.lambda_core import parse_term
from ealint.pipeline import infer
from ealint.pseudo_term import show_eal_type


def church(n: int) -> str:
    body = "z"
    for _ in range(n):
        body = f"s ({body})"
    return rf"\s. \z. {body}"


def main() -> None:
    terms = {f"church {n}": church(n) for n in range(4)}
    terms["twice twice"] = rf"({church(2)}) ({church(2)})"
    terms["S combinator"] = r"\x. \y. \z. x z (y z)"
    terms["self application"] = r"\x. x x"
    for name, src in terms.items():
        res = infer(parse_term(src))
        if res.typed:
            print(f"{name:18} {res.pseudo_term}  :  {show_eal_type(res.eal_type)}")
        else:
            print(f"{name:18} {res.status}")


if __name__ == "__main__":
    main()
