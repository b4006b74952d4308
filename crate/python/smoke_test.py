"""Smoke test for the frechet_solve extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/frechet_solve-*.whl
"""

import json
import math

import frechet_solve as fs


def main():
    assert fs.problems() == ["scalar-quadratic", "fourier-quadratic", "fourier-antiderivative"]
    assert "logistic-scalar" in fs.cauchy_problems()

    p = fs.Problem("scalar-quadratic")
    res = fs.solve(p, fs.Point.scalar(0.5))
    assert res.converged, res
    x = res.solution.coords[0]
    assert abs(x - (math.sqrt(6.0) - 2.0)) < 1e-9, x
    assert abs(p.eval(res.solution).coords[0] - 0.5) < 1e-9
    assert json.loads(res.to_json())["status"] == "converged"

    q = fs.Problem("fourier-antiderivative")
    assert q.loss == 1
    y = fs.Point.cosine(q.center.modes, 1, 0.05)
    res = fs.solve(q, y)
    assert res.converged and res.residual_rho < 1e-9, res

    rep = fs.verify_inverse(p, samples=50, seed=7)
    assert rep.passed and rep.violations == 0, rep
    assert rep.to_csv().startswith("sample,")
    assert fs.verify_surj(fs.Problem("fourier-quadratic"), samples=5, seed=1).passed
    assert fs.verify_inject(p, samples=20).passed
    assert fs.verify_ift(samples=10).passed

    ode = fs.solve_cauchy("linear-scalar", r=0.5, grid=200)
    assert ode.solve.converged
    assert max(ode.closed_form_error) < 1e-8, ode.closed_form_error
    assert abs(ode.values[-1].coords[0] - math.exp(0.5)) < 1e-8
    assert len(ode.times) == 201

    try:
        fs.Problem("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown problem accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
