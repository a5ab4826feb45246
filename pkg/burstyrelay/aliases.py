#!/usr/bin/env python3
import collections
import collections.abc

# pylint: disable=unused-import

Tuple = tuple
List = list
Dict = dict
Set = set
FrozenSet = frozenset

Deque = collections.deque
DefaultDict = collections.defaultdict
Counter = collections.Counter

Iterable = collections.abc.Iterable
Iterator = collections.abc.Iterator
Callable = collections.abc.Callable
Mapping = collections.abc.Mapping
Sequence = collections.abc.Sequence

from typing import Any, Optional, Union

# A column vector over the prime field, entries in [0, prime).
Vector = List[int]

# Coefficients of one linear equation, keyed by symbol identity.
CoefficientMap = Dict[Any, int]
