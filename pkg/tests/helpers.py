import numpy as np


def radial_bump(height=0.3, radius=0.5):
    """Autonomous radial Hamiltonian h * bump(|w|^2 / r^2); its value at 0 is h."""
    from zollcap.lift import bump_hamiltonian
    return bump_hamiltonian([0j], [radius], [height], name="radial bump")


def complex_grid(n_x, n_y, box=0.5):
    """n_x * n_y distinct points of the square [-box, box]^2 as complex numbers."""
    x = np.linspace(-box, box, n_x)
    y = np.linspace(-box, box, n_y)
    return (x[:, None] + 1j * y[None, :]).ravel()
