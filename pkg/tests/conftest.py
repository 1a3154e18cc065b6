import numpy as np
import pytest

from qcseg import CohortSpec, generate_cohort


@pytest.fixture(scope="session")
def small_sax_cohort():
    spec = CohortSpec(
        n_subjects=4, task="sax", frames_T=10, slices_S=2, height=48, width=48, seed=21
    )
    return generate_cohort(spec)


@pytest.fixture(scope="session")
def small_aorta_cohort():
    spec = CohortSpec(
        n_subjects=3, task="aorta", frames_T=12, slices_S=1, height=48, width=48, seed=22
    )
    return generate_cohort(spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
