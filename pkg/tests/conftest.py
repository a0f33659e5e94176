from collections import deque


def bfs_oracle(m, source):
    """Graph distances from a vertex, plain deque BFS over the rotation system."""
    vo = m.vertex_of
    adj = [[] for _ in range(m.n_vertices)]
    for d in range(m.n_darts):
        adj[vo[d]].append(vo[m.alpha[d]])
    dist = [-1] * m.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def pointed_code(m, v):
    from quadmaps.planar_map import canonical_code
    vo = m.vertex_of
    return canonical_code(m, [int(vo[d] == v) for d in range(m.n_darts)])
