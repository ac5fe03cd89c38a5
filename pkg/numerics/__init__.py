"""
Numerical core: grids and exponents, modular spaces, potentials,
the discrete p(x)-Laplacian, the energy functional and the mountain-pass solver.
Pure code: raises VexpError subclasses and never touches I/O.
"""
