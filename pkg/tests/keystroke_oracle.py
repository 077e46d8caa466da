"""Independent keystroke-distance oracle: uniform-cost search over the raw
operation semantics, with no cursor clamping and no algebraic shortcuts."""

import heapq

INF = float("inf")


def keystroke_search(a: str, b: str, jump: int, init: int) -> int:
    n, m = len(a), len(b)
    start = (0, 0, init, False)
    best = {start: 0}
    heap = [(0, start)]
    while heap:
        cost, state = heapq.heappop(heap)
        if cost > best.get(state, INF):
            continue
        p, q, d, deleting = state
        if p == n and q == m and not deleting:
            return cost

        moves = []
        if not deleting:
            if p < n and q < m and a[p] == b[q]:
                moves.append((0, (p + 1, q + 1, d + 1, False)))  # M
            if d == 0:
                if p < n:
                    moves.append((1, (p + 1, q, 0, False)))  # D
                if q < m:
                    moves.append((1, (p, q + 1, 0, False)))  # A
                moves.append((1, (p, q, 0, True)))  # S
        else:
            if p < n:
                moves.append((0, (p + 1, q, d, True)))  # K
            if d == 0:
                moves.append((1, (p, q, d, False)))  # E
        if d > 0:
            moves.append((min(d, jump), (p, q, 0, deleting)))  # C

        for step, nxt in moves:
            nc = cost + step
            if nc < best.get(nxt, INF):
                best[nxt] = nc
                heapq.heappush(heap, (nc, nxt))
    raise AssertionError("goal unreachable")
