"""Small hashable-item union-find with path compression and union by size."""

from __future__ import annotations


class UnionFind:
    def __init__(self, items=()):
        self.parent = {}
        self.size = {}
        for it in items:
            self.add(it)

    def add(self, item):
        if item not in self.parent:
            self.parent[item] = item
            self.size[item] = 1

    def find(self, item):
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def groups(self) -> list:
        by_root = {}
        for item in self.parent:
            by_root.setdefault(self.find(item), []).append(item)
        return sorted(sorted(g) for g in by_root.values())
