import os
import os.path
import typing
from fractions import Fraction

import faker

from emergence_lab.systems import SymbolicSystem

fake = faker.Faker()
fake.seed_instance(7)

SPECS_DIR = os.path.join(os.path.dirname(os.path.realpath(__file__)), "specs")


def get_spec_path(fname: str) -> str:
    ext = os.path.splitext(fname)[1]
    if ext != ".json":
        raise ValueError(f"File format '{ext}' not supported. Spec files must have the .json extension.")
    return os.path.join(SPECS_DIR, fname)


def load_spec_file(fname: str) -> str:
    with open(get_spec_path(fname)) as f:
        return f.read()


def random_word(system: SymbolicSystem, length: int) -> str:
    symbols = [fake.random_int(min=0, max=system.m - 1)]
    while len(symbols) < length:
        successors = [s for s in range(system.m) if system.allowed(symbols[-1], s)]
        symbols.append(fake.random_element(successors))
    return "".join(system.symbols[s] for s in symbols)


def random_words(system: SymbolicSystem, length: int, count: int) -> typing.List[str]:
    return sorted({random_word(system, length) for _ in range(count)})


def random_measure_atoms(system: SymbolicSystem, length: int, support: int) -> typing.List[typing.Dict[str, str]]:
    words = random_words(system, length, support)
    raw = [fake.random_int(min=1, max=9) for _ in words]
    total = sum(raw)
    return [{"word": word, "weight": str(Fraction(value, total))} for word, value in zip(words, raw)]
