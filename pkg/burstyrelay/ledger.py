#!/usr/bin/env python3
"""
Receiver-side decoding by incremental Gauss-Jordan elimination.

A ``ReceiverLedger`` holds the equations a receiver has observed in reduced
row-echelon form, keyed by pivot symbol. A symbol counts as decoded as soon as
its pivot row has no other unknowns; decoded symbols are substituted out of
every remaining row and never change again.
"""
from dataclasses import dataclass, field

from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Any, Dict, List, Set, Tuple, Optional, Sequence, CoefficientMap
from burstyrelay.errors import InconsistentSystemError
from burstyrelay.field import inverse_mod


@dataclass(frozen=True)
class LinearObservation:
    coefficients: CoefficientMap
    value: int


@dataclass
class ReceiverLedger:
    prime: int
    name: str = "rx"
    keep_observations: bool = False
    rows: Dict[Any, Dict[Any, int]] = field(default_factory=dict)
    rhs: Dict[Any, int] = field(default_factory=dict)
    occurs: Dict[Any, Set[Any]] = field(default_factory=dict)
    decoded: Dict[Any, int] = field(default_factory=dict)
    observations: List[LinearObservation] = field(default_factory=list)
    observation_count: int = 0

    def unresolved(self) -> int:
        """Number of rows still carrying more than one unknown."""
        return len(self.rows)

    def _link(self, pivot: Any, row: Dict[Any, int]) -> None:
        for var in row:
            if var != pivot:
                self.occurs.setdefault(var, set()).add(pivot)

    def _unlink(self, pivot: Any, row: Dict[Any, int]) -> None:
        for var in row:
            if var != pivot:
                owners = self.occurs.get(var)
                if owners is not None:
                    owners.discard(pivot)
                    if not owners:
                        del self.occurs[var]

    def _settle(self, pivot: Any, fresh: List[Tuple[Any, int]]) -> None:
        """Move singleton rows into ``decoded``, cascading substitutions."""
        work = [pivot]
        while work:
            var = work.pop()
            row = self.rows.get(var)
            if row is None or len(row) != 1:
                continue
            value = self.rhs.pop(var)
            del self.rows[var]
            self.decoded[var] = value
            fresh.append((var, value))
            for owner in self.occurs.pop(var, set()):
                owner_row = self.rows[owner]
                coef = owner_row.pop(var)
                self.rhs[owner] = (self.rhs[owner] - coef * value) % self.prime
                if len(owner_row) == 1:
                    work.append(owner)

    def add_equation(self, coefficients: CoefficientMap, value: int, slot: int = 0) -> List[Tuple[Any, int]]:
        prime = self.prime
        row: Dict[Any, int] = {}
        rhs = value % prime
        for var, coef in coefficients.items():
            coef %= prime
            if coef == 0:
                continue
            if var in self.decoded:
                rhs = (rhs - coef * self.decoded[var]) % prime
            else:
                row[var] = (row.get(var, 0) + coef) % prime

        # Substituting pivot rows only introduces non-pivot variables.
        for var in [v for v in row if v in self.rows]:
            coef = row.pop(var)
            if coef == 0:
                continue
            for other, c in self.rows[var].items():
                if other != var:
                    row[other] = (row.get(other, 0) - coef * c) % prime
            rhs = (rhs - coef * self.rhs[var]) % prime

        row = {var: coef for var, coef in row.items() if coef != 0}
        if not row:
            if rhs != 0:
                raise InconsistentSystemError(f"inconsistent system at {self.name}, slot {slot}")
            return []

        pivot = next(iter(row))
        scale = inverse_mod(row[pivot], prime)
        row = {var: coef * scale % prime for var, coef in row.items()}
        rhs = rhs * scale % prime

        touched = list(self.occurs.pop(pivot, set()))
        for owner in touched:
            owner_row = self.rows[owner]
            coef = owner_row.pop(pivot)
            self._unlink(owner, owner_row)
            for var, c in row.items():
                if var != pivot:
                    updated = (owner_row.get(var, 0) - coef * c) % prime
                    if updated == 0:
                        owner_row.pop(var, None)
                    else:
                        owner_row[var] = updated
            self.rhs[owner] = (self.rhs[owner] - coef * rhs) % prime
            self._link(owner, owner_row)

        self.rows[pivot] = row
        self.rhs[pivot] = rhs
        self._link(pivot, row)

        fresh: List[Tuple[Any, int]] = []
        for candidate in [pivot] + touched:
            self._settle(candidate, fresh)
        return fresh

    def ingest(
        self,
        coefficient_maps: Sequence[CoefficientMap],
        values: Sequence[int],
        slot: int,
    ) -> List[Tuple[Any, int]]:
        """Append one observation per receive antenna; return newly decoded symbols."""
        assert len(coefficient_maps) == len(values)
        fresh: List[Tuple[Any, int]] = []
        for coefficients, value in zip(coefficient_maps, values):
            self.observation_count += 1
            if self.keep_observations:
                self.observations.append(LinearObservation(dict(coefficients), value))
            if not coefficients and value % self.prime == 0:
                continue
            fresh.extend(self.add_equation(coefficients, value, slot))
        return fresh

    def value_of(self, var: Any) -> Optional[int]:
        return self.decoded.get(var)

    def unknowns(self) -> Set[Any]:
        """Symbols still present in unresolved rows."""
        return set(self.rows) | set(self.occurs)

    def forget(self, keep: Set[Any]) -> int:
        """
        Drop decoded values outside ``keep``. Only safe for symbols no later
        equation will carry; returns how many were dropped.
        """
        stale = [var for var in self.decoded if var not in keep]
        for var in stale:
            del self.decoded[var]
        if stale:
            logger.opt(lazy=True).debug("{} forgot {} decoded symbols", lambda: self.name, lambda: len(stale))
        return len(stale)


@beartype
def receiver_ingest(
    ledger: ReceiverLedger,
    reception: Sequence[int],
    coefficient_maps: Sequence[CoefficientMap],
    slot: int = 0,
) -> List[Tuple[Any, int]]:
    return ledger.ingest(coefficient_maps, reception, slot)
