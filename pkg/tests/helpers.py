import numpy as np
from numpy import ndarray


def random_hermitian_psd(rng: np.random.Generator, n: int, scale: float = 1.0) -> ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a @ a.conj().T) / n


def random_complex(rng: np.random.Generator, *shape: int) -> ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
