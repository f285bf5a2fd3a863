#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Interval class: half-open [begin, end) spans over sample or frame
indices. Voiced regions, STFT frame coverage and the reconstruction
interior are all expressed as Intervals.

Copyright 2013-2018 Chaim Leib Halbert
Modifications copyright 2014 Konstantin Tretyakov
Modifications copyright 2026 The specterra developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

   http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""
from collections import namedtuple


class Interval(namedtuple('IntervalBase', ['begin', 'end', 'data'])):
    """
    A half-open span ``[begin, end)`` with an optional data field.

        >>> iv = Interval(160, 480, 'voiced')
        >>> iv.length()
        320
        >>> iv.widen(200, 0, 500)
        Interval(0, 500, 'voiced')
    """
    __slots__ = ()

    def __new__(cls, begin, end, data=None):
        return super(Interval, cls).__new__(cls, begin, end, data)

    def is_null(self):
        """
        Whether this is a null (empty) interval.
        :rtype: bool
        """
        return self.begin >= self.end

    def length(self):
        """
        Number of indices covered; 0 for null intervals.
        :rtype: int
        """
        if self.is_null():
            return 0
        return self.end - self.begin

    def clip(self, begin, end):
        """
        Intersection with the range [begin, end). Disjoint ranges give a
        null Interval anchored at the clipped begin.

            >>> Interval(-5, 20).clip(0, 10)
            Interval(0, 10)
            >>> Interval(30, 40).clip(0, 10).is_null()
            True

        :rtype: Interval
        """
        lo = max(self.begin, begin)
        hi = min(self.end, end)
        return Interval(lo, max(lo, hi), self.data)

    def widen(self, amount, lower, upper):
        """
        Grow both ends by amount, then clip to [lower, upper).
        :rtype: Interval
        """
        return Interval(self.begin - amount, self.end + amount, self.data).clip(lower, upper)

    def take(self, seq):
        """
        The slice of seq covered by this Interval.

            >>> Interval(1, 3).take([10, 11, 12, 13])
            [11, 12]
        """
        return seq[self.begin:self.end]

    def __repr__(self):
        """
        Executable string representation of this Interval.
        :rtype: str
        """
        if self.data is None:
            return "Interval({0}, {1})".format(self.begin, self.end)
        return "Interval({0}, {1}, {2})".format(self.begin, self.end, repr(self.data))

    __str__ = __repr__
