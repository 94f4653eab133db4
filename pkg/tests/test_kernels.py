import numpy as np
import pytest

from mdgice import kernels
from mdgice.problems import builtin, initialize_unknowns
from mdgice.solver import make_disc

needs_compiled = pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="extension not built")


def perturbed(name, p, backend, dissipation=0.0, seed=0):
    spec = builtin(name)
    disc = make_disc(spec, spec.build_mesh(), p, spec.initial_condition, backend, dissipation)
    u = initialize_unknowns(spec, disc)
    rng = np.random.default_rng(seed)
    u[:disc.n_flow] *= 1 + 0.05 * rng.standard_normal(disc.n_flow)
    u[disc.n_flow:] += 0.01 * rng.standard_normal(disc.n_geom)
    return disc, u


@needs_compiled
@pytest.mark.parametrize("name", ["sod", "noh", "lemma1_advection", "lemma2_burgers"])
@pytest.mark.parametrize("p", [0, 1, 2, 3])
@pytest.mark.parametrize("dissipation", [0.0, 1.0])
def test_backends_agree(name, p, dissipation):
    dp, u = perturbed(name, p, "python", dissipation)
    dc, _ = perturbed(name, p, "compiled", dissipation)
    Rp, Jp = dp.raw(u)
    Rc, Jc = dc.raw(u)
    scale = max(1.0, np.abs(Rp).max())
    assert np.max(np.abs(Rp - Rc)) < 1e-13 * scale
    assert np.max(np.abs(Jp - Jc)) < 1e-13 * max(1.0, np.abs(Jp).max())


@needs_compiled
def test_backends_agree_on_batches():
    dp, u = perturbed("lax", 2, "python")
    dc, _ = perturbed("lax", 2, "compiled")
    U = np.stack([u, 1.01 * u, u + 1e-3])
    assert np.allclose(dp.residual_batch(U), dc.residual_batch(U), rtol=0, atol=1e-12)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("MDGICE_BACKEND", "python")
    assert kernels.default_backend() == "python"
    monkeypatch.delenv("MDGICE_BACKEND")
    assert kernels.default_backend() == ("compiled" if kernels.HAVE_COMPILED else "python")
    with pytest.raises(ValueError):
        kernels.get_kernel("fortran")


def test_dissipation_vanishes_for_equal_states():
    # the dissipative term only acts on jumps: a constant state is unaffected
    spec = builtin("sod").with_(right=(1.0, 0.0, 1.0))
    d0 = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition, dissipation=0.0)
    d1 = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition, dissipation=1.0)
    u = initialize_unknowns(spec, d0)
    assert np.max(np.abs(d1.residual(u) - d0.residual(u))) < 1e-15
