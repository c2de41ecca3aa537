# Manifold geometry, Holevo cost and the descent solver
