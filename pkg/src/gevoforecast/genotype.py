"""Chromosomes and the genotype-to-phenotype mapping.

A chromosome is a fixed-length array of 8-bit codons.  Mapping expands the
grammar's start symbol, always rewriting the leftmost nonterminal; each
rewrite of a rule with more than one choice consumes the next codon and
selects choice ``codon % number_of_choices``.  Rules with a single choice
consume no codon.  When codons run out, reading wraps to the start of the
chromosome, at most ``max_wraps`` times; if nonterminals remain afterwards
the result is invalid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .grammar import Grammar

# guards single-choice recursive rules, which expand without consuming codons
MAX_EXPANSIONS = 100_000


@dataclass(frozen=True)
class TraceStep:
    codon_index: Optional[int]  # None when the rule had a single choice
    codon: Optional[int]
    rule: str
    n_choices: int
    choice: int
    choice_text: str


@dataclass
class MappingResult:
    phenotype: Optional[str]  # None marks an invalid mapping
    codons_consumed: int
    wraps_used: int
    trace: Optional[List[TraceStep]] = field(default=None, repr=False)

    @property
    def invalid(self) -> bool:
        return self.phenotype is None


def random_chromosome(rng: np.random.Generator, length: int) -> np.ndarray:
    """Uniform independent codons in [0, 255]."""
    if length < 1:
        raise ValueError("chromosome length must be >= 1")
    return rng.integers(0, 256, size=length, dtype=np.uint8)


def map_genotype(
    chromosome: np.ndarray,
    grammar: Grammar,
    max_wraps: int = 3,
    trace: bool = False,
) -> MappingResult:
    codons = [int(c) for c in chromosome]
    length = len(codons)
    if length == 0:
        raise ValueError("empty chromosome")
    table = grammar.expansion_table()
    read_limit = (max_wraps + 1) * length

    stack = [(True, grammar.start)]
    out: list = []
    reads = 0
    expansions = 0
    steps: Optional[list] = [] if trace else None

    while stack:
        is_nt, text = stack.pop()
        if not is_nt:
            out.append(text)
            continue
        choices = table[text]
        n = len(choices)
        if n == 1:
            idx = 0
            codon = None
            codon_index = None
        else:
            if reads >= read_limit:
                return MappingResult(None, reads, max_wraps, steps)
            codon_index = reads % length
            codon = codons[codon_index]
            reads += 1
            idx = codon % n
        expansions += 1
        if expansions > MAX_EXPANSIONS:
            return MappingResult(None, reads, _wraps(reads, length), steps)
        if steps is not None:
            chosen = "".join(
                (f"<{t}>" if nt else t) for nt, t in choices[idx]
            )
            steps.append(TraceStep(codon_index, codon, text, n, idx, chosen))
        stack.extend(reversed(choices[idx]))

    return MappingResult("".join(out), reads, _wraps(reads, length), steps)


def _wraps(reads: int, length: int) -> int:
    return 0 if reads == 0 else (reads - 1) // length
