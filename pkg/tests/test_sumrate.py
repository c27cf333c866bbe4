"""Weighted sumrate, SINR, and the stacked-channel co-gradient."""
import numpy as np
import pytest

from izosga.config import Geometry, NetworkConfig
from izosga.sumrate import Precoder, cogradient, sinr, stack_channel, sumrate

from _oracles import central_difference, reference_sinr, reference_sumrate

RNG = np.random.default_rng(77)


def make_config(m=3, k=3, noise=0.5):
    users = np.column_stack([np.linspace(42, 45, k), np.full(k, 5.0), np.full(k, 1.5)])
    return NetworkConfig(
        num_antennas=m,
        num_users=k,
        num_irs_elements=4,
        power_budget=1.0,
        noise_variances=np.full(k, noise),
        sumrate_weights=np.ones(k),
        geometry=Geometry(
            ap_position=np.array([0.0, 0.0, 10.0]),
            irs_position=np.array([40.0, 2.0, 6.0]),
            user_positions=users,
        ),
    )


def random_instance(m=3, k=3, rng=RNG):
    h = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    w = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    w *= np.sqrt(1.0 / np.sum(np.abs(w) ** 2))
    return h, Precoder(w=w, power_budget=1.0)


def test_sumrate_matches_loop_reference():
    cfg = make_config()
    for trial in range(50):
        h, prec = random_instance()
        val = sumrate(prec, h, cfg)
        ref = reference_sumrate(prec.w, h, cfg.noise_variances, cfg.sumrate_weights)
        assert val.value == pytest.approx(ref, rel=1e-12, abs=1e-12)
        for k in range(3):
            assert val.per_user_sinr[k] == pytest.approx(
                reference_sinr(prec.w, h, cfg.noise_variances, k), rel=1e-12
            )


def test_sinr_function_matches_reference():
    cfg = make_config()
    h, prec = random_instance()
    for k in range(3):
        assert sinr(prec, h[:, k], k, cfg.noise_variances[k]) == pytest.approx(
            reference_sinr(prec.w, h, cfg.noise_variances, k), rel=1e-12
        )
    with pytest.raises(ValueError):
        sinr(prec, h[:, 0], 0, 0.0)


def test_weights_scale_their_term():
    cfg = make_config()
    h, prec = random_instance()
    base = sumrate(prec, h, cfg).value
    cfg2 = make_config()
    cfg2.sumrate_weights = np.array([2.0, 1.0, 1.0])
    boosted = sumrate(prec, h, cfg2).value
    rate0 = np.log2(1.0 + reference_sinr(prec.w, h, cfg.noise_variances, 0))
    assert boosted - base == pytest.approx(rate0, rel=1e-10)


def test_zero_channel_user_contributes_nothing():
    cfg = make_config()
    h, prec = random_instance()
    h = h.copy()
    h[:, 1] = 0.0
    val = sumrate(prec, h, cfg)
    assert val.per_user_sinr[1] == 0.0
    g = cogradient(prec, h, cfg)
    assert np.all(np.isfinite(g.view(float)))


def test_precoder_validation():
    with pytest.raises(ValueError):
        Precoder(w=np.ones((2, 2)) * 10.0, power_budget=1.0)  # violates budget
    with pytest.raises(ValueError):
        Precoder(w=np.full((2, 2), np.nan), power_budget=1.0)
    with pytest.raises(ValueError):
        Precoder(w=np.ones(4), power_budget=1.0)
    with pytest.raises(ValueError):
        Precoder(w=np.ones((2, 2)) * 0.1, power_budget=0.0)
    prec = Precoder(w=np.full((2, 2), 0.5 + 0.0j), power_budget=1.0)
    assert prec.power() == pytest.approx(1.0)


def test_dimension_checks():
    cfg = make_config()
    h, prec = random_instance()
    with pytest.raises(ValueError):
        sumrate(prec, h[:, :2], cfg)
    with pytest.raises(ValueError):
        cogradient(prec, h[:2, :], cfg)


def test_stack_channel_column_order():
    h = np.arange(6).reshape(2, 3) + 1j * np.arange(6).reshape(2, 3)
    v = stack_channel(h)
    for k in range(3):
        assert np.array_equal(v[2 * k: 2 * (k + 1)], h[:, k])


def test_cogradient_matches_finite_differences():
    # dF = 2 Re(g^H dz) against central differences along random directions
    cfg = make_config()
    rng = np.random.default_rng(123)
    for trial in range(20):
        h, prec = random_instance(rng=rng)
        g = cogradient(prec, h, cfg)
        for _ in range(5):
            d = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            tau = 1e-6
            fp = sumrate(prec, h + tau * d, cfg).value
            fm = sumrate(prec, h - tau * d, cfg).value
            predicted = 2.0 * np.real(np.vdot(g, stack_channel(d)))
            measured = (fp - fm) / (2.0 * tau)
            assert predicted == pytest.approx(measured, rel=2e-7, abs=2e-7)


def test_cogradient_real_imag_parts_are_partial_derivatives():
    # coordinate-wise: dF/dRe(z_i) = 2 Re(g_i), dF/dIm(z_i) = 2 Im(g_i)
    cfg = make_config(m=2, k=2)
    h, prec = random_instance(m=2, k=2)
    g = cogradient(prec, h, cfg)

    def f_real(x):
        hh = (x[:4] + 1j * x[4:]).reshape((2, 2), order="F")
        return sumrate(prec, hh, cfg).value

    x0 = np.concatenate([stack_channel(h).real, stack_channel(h).imag])
    fd = central_difference(f_real, x0, 1e-6)
    assert np.allclose(fd[:4], 2.0 * g.real, rtol=1e-5, atol=1e-7)
    assert np.allclose(fd[4:], 2.0 * g.imag, rtol=1e-5, atol=1e-7)
