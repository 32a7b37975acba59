"""Shared fixtures-in-plain-functions for the test modules."""

import numpy as np

from poispath.core import PoissonStructure

SU2_PI = {(1, 2): "x3", (1, 3): "-x2", (2, 3): "x1"}


def su2():
    """Linear structure on the dual of so(3) = su(2)."""
    return PoissonStructure(3, SU2_PI, label="su2")


def su2_scaled(a):
    """Radially rescaled version: entries multiplied by a(R)."""
    pi = {
        (1, 2): f"({a})*x3",
        (1, 3): f"-({a})*x2",
        (2, 3): f"({a})*x1",
    }
    return PoissonStructure(3, pi, label=f"su2_scaled[{a}]")


def symplectic_plane():
    return PoissonStructure(2, {(1, 2): "1"}, label="plane")


# linear structure of the 8-dim algebra behind the Gell-Mann matrices,
# written out entry by entry as an independent statement of the constants
SU3_PI = {
    (1, 2): "x3",
    (1, 3): "-x2",
    (1, 4): "x7/2",
    (1, 5): "-x6/2",
    (1, 6): "x5/2",
    (1, 7): "-x4/2",
    (2, 3): "x1",
    (2, 4): "x6/2",
    (2, 5): "x7/2",
    (2, 6): "-x4/2",
    (2, 7): "-x5/2",
    (3, 4): "x5/2",
    (3, 5): "-x4/2",
    (3, 6): "-x7/2",
    (3, 7): "x6/2",
    (4, 5): "x3/2 + sqrt(3)/2*x8",
    (4, 6): "x2/2",
    (4, 7): "x1/2",
    (4, 8): "-sqrt(3)/2*x5",
    (5, 6): "-x1/2",
    (5, 7): "x2/2",
    (5, 8): "sqrt(3)/2*x4",
    (6, 7): "-x3/2 + sqrt(3)/2*x8",
    (6, 8): "-sqrt(3)/2*x7",
    (7, 8): "sqrt(3)/2*x6",
}


def su3():
    return PoissonStructure(8, SU3_PI, label="su3")


def su2_splitting(a="1"):
    """Inverse of the anchor on sphere tangents for the rescaled structures:
    sigma(v) = (v x x) / (a R^2)."""
    den = f"(({a})*(x1^2 + x2^2 + x3^2))"
    return [
        ["0", f"x3/{den}", f"-x2/{den}"],
        [f"-x3/{den}", "0", f"x1/{den}"],
        [f"x2/{den}", f"-x1/{den}", "0"],
    ]


def eval_components(components, point, env=None):
    from poispath import expr

    return np.array([expr.evaluate(c, point, env or {}) for c in components])


def su2_matrix_basis():
    """Anti-Hermitian 2x2 basis E_k = -(i/2) sigma_k with [E_i,E_j] = eps_ijk E_k."""
    sigma = np.array([[[0, 1], [1, 0]],
                      [[0, -1j], [1j, 0]],
                      [[1, 0], [0, -1]]], dtype=complex)
    return -0.5j * sigma


def seeded_family(structure, seed, x0):
    """Reproducible mild deformation family around a drift, for identity tests."""
    from poispath.homotopy import PathFamily

    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.35, 0.35, size=(3, 4)).tolist()
    comps = []
    for i in range(3):
        comps.append(f"{c[i][0]!r}*eps*(1 - 2*t) + {c[i][1]!r}*eps*sin(t)"
                     f" + {c[i][2]!r}*eps^2*t*(1-t) + {c[i][3]!r}*eps*x{i + 1}")
    comps[2] += " + 1"
    return PathFamily(structure, comps, x0)


def seeded_fields(structure, seed):
    """A Hamiltonian, an infinitesimal rotation, and a generic quadratic field."""
    from poispath import expr

    rng = np.random.default_rng(seed)
    h = " + ".join(f"{v!r}*x{i + 1}" for i, v in
                   enumerate(rng.uniform(-1, 1, 3).tolist()))
    hamiltonian = structure.hamiltonian_field(expr.parse(h, 3))
    w = rng.uniform(-1, 1, 3).tolist()
    rotation = (f"{w[1]!r}*x3 - {w[2]!r}*x2", f"{w[2]!r}*x1 - {w[0]!r}*x3",
                f"{w[0]!r}*x2 - {w[1]!r}*x1")
    cv = rng.uniform(-0.5, 0.5, 3).tolist()
    qv = rng.uniform(-0.5, 0.5, 3).tolist()
    generic = tuple(f"{cv[i]!r} + {qv[i]!r}*x{(i + 1) % 3 + 1}*x{(i + 2) % 3 + 1}"
                    for i in range(3))
    return hamiltonian, rotation, generic
