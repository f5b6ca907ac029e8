"""Quick end-to-end check of the Python bindings.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/python
"""

import math

import sphereheat_py as sh


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    t = 1.0
    m = sh.heat_moment(16, t, [0, 2])
    close(m.value, 1 - math.exp(-t), 1e-12)
    for route in ("series", "eigen"):
        close(sh.heat_moment(16, t, [2, 0], route=route).value, sh.heat_moment(16, t, [2, 0]).value, 1e-12)
    close(sh.heat_moment(32, t, [4, 0], precision="extended").value, sh.heat_moment(32, t, [4, 0]).value, 1e-10)
    close(abs(sh.heat_moment(8, t, [1, 1]).value), 0.0, 1e-12)

    close(sh.gaussian_moment([0, 2], t), 1 - math.exp(-t), 1e-15)
    close(sh.gaussian_moment([2], math.log(2)), 0.5 - math.log(2) / 2, 1e-15)
    assert sh.limit_density(t, [0.1, -0.2]) > 0

    coeffs, eigenvalue = sh.eigen_polynomial(2, 10)
    assert coeffs[0] == "1" and eigenvalue == "-2", (coeffs, eigenvalue)
    fcoeffs, lam = sh.eigen_polynomial_f64(4, 10)
    close(lam, -4 * (1 + 2 / 10), 1e-15)
    assert len(fcoeffs) == 3

    (mean, se), = sh.mc_moments(4, 0.5, [[0, 2]], paths=20000, step=0.02, seed=1)
    close(mean, 1 - math.exp(-0.5), 5 * se)
    again = sh.mc_moments(4, 0.5, [[0, 2]], paths=20000, step=0.02, seed=1)
    assert again[0] == (mean, se)

    csv = sh.run_study([[2, 0]], [16, 32, 64], [1.0])
    header, *rows = csv.strip().splitlines()
    assert header == "monomial,N,t,route,value,limit,abs_error,stderr,fitted_rate"
    assert len(rows) == 3
    rate = float(rows[-1].rsplit(",", 1)[1])
    close(rate, 1.0, 0.15)

    close(sh.pde_deviation(1.0, first_coordinate=False), 0.0, 1e-5)

    passed, report = sh.verify("operators")
    assert passed, report

    try:
        sh.heat_moment(1, t, [2])
    except ValueError:
        pass
    else:
        raise AssertionError("N=1 accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
