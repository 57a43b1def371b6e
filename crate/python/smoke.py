"""Exercise the extension module end to end on the two-spin model."""

import math

import nhcrit_py as nh


def main():
    model = nh.Model.lmg(2)
    assert model.dim == 3

    gamma = 0.6
    s = math.sqrt(gamma**2 - 0.25)
    spectrum, state = nh.steady_state(model, gamma)
    assert abs(state.energy - 0.5j * (s - gamma)) < 1e-12
    r = 4 * (gamma + s) ** 2
    assert abs(state.sz(2) - (1 - r) / (2 * (1 + r))) < 1e-12
    assert abs(state.h1_density - (gamma / s - 1) / 2) < 1e-10
    assert spectrum.biorthogonality_error() < 1e-12

    rho = state.rdm(2, 1)
    assert abs(rho[0][0] + rho[1][1] - 1) < 1e-12

    ep = nh.locate_ep(model, 0.2, 0.8)
    assert abs(ep.gamma_c - 0.5) < 1e-6 and ep.p == 2

    gammas = [0.5 + 10 ** (-4 + 2 * i / 20) for i in range(21)]
    records = nh.sweep(model, [0.5] + gammas)
    fit = nh.fit_exponent(
        [rec.gamma for rec in records], [rec.sz for rec in records], 0.5, window=(1e-4, 1e-2)
    )
    assert 0.45 < fit.exponent < 0.55, fit.exponent

    psi0 = nh.random_state(3)
    t = nh.convergence_time(spectrum, psi0, 0.99)
    assert nh.evolve(spectrum, psi0, t).fidelity_to_steady >= 0.99 - 1e-9

    try:
        nh.Model([[1, 0], [0, 1]], [[0, 1j], [0, 0]])
    except ValueError:
        pass
    else:
        raise AssertionError("non-Hermitian H1 accepted")

    print(f"ok: E_S = {state.energy:.6f}, gamma_c = {ep.gamma_c:.8f}, exponent = {fit.exponent:.4f}, t99 = {t:.3f}")


if __name__ == "__main__":
    main()
