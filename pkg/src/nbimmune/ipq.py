"""Indexed max-priority queue with arbitrary-key updates."""

from __future__ import annotations

__all__ = ["IndexedPriorityQueue"]


class IndexedPriorityQueue:
    """Binary max-heap of ``(score, key)`` pairs with a key -> slot index.

    The maximum score wins; equal scores go to the smallest key.  ``peek``
    is O(1); ``push``, ``pop``, ``update`` and ``remove`` are O(log n).

    >>> q = IndexedPriorityQueue([("a", 5), ("b", 7)])
    >>> q.pop()
    ('b', 7)
    """

    def __init__(self, items=()):
        self._keys = []
        self._scores = []
        self._pos = {}
        for key, score in items:
            if key in self._pos:
                raise ValueError(f"duplicate key {key!r}")
            self._pos[key] = len(self._keys)
            self._keys.append(key)
            self._scores.append(score)
        # bottom-up heapify, O(n)
        for i in range(len(self._keys) // 2 - 1, -1, -1):
            self._sift_down(i)

    def __len__(self):
        return len(self._keys)

    def __contains__(self, key):
        return key in self._pos

    def keys(self):
        return self._pos.keys()

    def __getitem__(self, key):
        return self._scores[self._pos[key]]

    def _above(self, i, j):
        # True if slot i should sit above slot j
        si, sj = self._scores[i], self._scores[j]
        return si > sj or (si == sj and self._keys[i] < self._keys[j])

    def _swap(self, i, j):
        keys, scores, pos = self._keys, self._scores, self._pos
        keys[i], keys[j] = keys[j], keys[i]
        scores[i], scores[j] = scores[j], scores[i]
        pos[keys[i]] = i
        pos[keys[j]] = j

    def _sift_up(self, i):
        while i > 0:
            parent = (i - 1) >> 1
            if not self._above(i, parent):
                break
            self._swap(i, parent)
            i = parent

    def _sift_down(self, i):
        size = len(self._keys)
        while True:
            best = i
            left = 2 * i + 1
            if left < size and self._above(left, best):
                best = left
            right = left + 1
            if right < size and self._above(right, best):
                best = right
            if best == i:
                return
            self._swap(i, best)
            i = best

    def push(self, key, score):
        if key in self._pos:
            raise ValueError(f"duplicate key {key!r}")
        self._pos[key] = len(self._keys)
        self._keys.append(key)
        self._scores.append(score)
        self._sift_up(len(self._keys) - 1)

    def peek(self):
        if not self._keys:
            raise IndexError("peek from empty queue")
        return self._keys[0], self._scores[0]

    def pop(self):
        if not self._keys:
            raise IndexError("pop from empty queue")
        top = (self._keys[0], self._scores[0])
        self._delete_slot(0)
        return top

    def update(self, key, score):
        """Change the score of ``key``; ``KeyError`` if it is not queued."""
        i = self._pos[key]
        old = self._scores[i]
        self._scores[i] = score
        if score > old:
            self._sift_up(i)
        elif score < old:
            self._sift_down(i)

    def remove(self, key):
        self._delete_slot(self._pos[key])

    def _delete_slot(self, i):
        last = len(self._keys) - 1
        if i != last:
            self._swap(i, last)
        key = self._keys.pop()
        self._scores.pop()
        del self._pos[key]
        if i < last:
            self._sift_down(i)
            self._sift_up(i)

    def check_heap(self):
        """Assert the heap and index invariants (for tests)."""
        for i in range(1, len(self._keys)):
            assert not self._above(i, (i - 1) >> 1), i
        for key, i in self._pos.items():
            assert self._keys[i] == key
