"""Weyl-law ratio N(lambda) / (omega_n vol lambda^(n/2) / (2 pi)^n) for each backend."""

from fracfield.manifold import IntervalDirichlet, Sphere2, Torus, weyl_diagnostic

for backend, k in ((Sphere2(64), 200), (Torus(1), 64), (Torus(2), 500), (IntervalDirichlet(), 512)):
    rep = weyl_diagnostic(backend, k)
    print(f"{backend.backend_id:>16}: ratio at k = {k}: {rep.last:.4f}")
