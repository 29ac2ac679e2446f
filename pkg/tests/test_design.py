"""Design calculator: duty ratios, inductance bounds, output capacitor."""

import pytest

from bdcsim.design import (
    DesignSpec,
    boost_duty,
    buck_duty,
    design,
    min_inductance_boost,
    min_inductance_buck,
    output_capacitance,
)

# The 24 V bus / 12 V battery / 20 kHz reference operating point.
REF_SPEC = DesignSpec(pv_voltage=24.0, pv_current=3.0, battery_voltage=12.0,
                      switching_frequency=20e3, load_voltage=24.0,
                      load_current=2.4, ripple_current=0.3)


class TestBuckDuty:
    def test_two_to_one_step_down(self):
        assert buck_duty(24.0, 12.0) == pytest.approx(0.5)

    def test_unity_conversion(self):
        assert buck_duty(15.0, 15.0) == pytest.approx(1.0)

    def test_four_to_one(self):
        assert buck_duty(48.0, 12.0) == pytest.approx(0.25)

    def test_rejects_step_up(self):
        with pytest.raises(ValueError, match="step up"):
            buck_duty(12.0, 24.0)

    def test_inverse_of_conversion_ratio(self):
        for v_s, v_o in ((24.0, 12.0), (30.0, 7.5), (100.0, 99.0)):
            assert v_s * buck_duty(v_s, v_o) == pytest.approx(v_o, rel=1e-15)


class TestBoostDuty:
    def test_one_to_two_step_up(self):
        assert boost_duty(12.0, 24.0) == pytest.approx(0.5)

    def test_unity_conversion(self):
        assert boost_duty(15.0, 15.0) == pytest.approx(0.0)

    def test_one_to_four(self):
        assert boost_duty(12.0, 48.0) == pytest.approx(0.75)

    def test_rejects_step_down(self):
        with pytest.raises(ValueError, match="step down"):
            boost_duty(24.0, 12.0)

    def test_inverse_of_conversion_ratio(self):
        for v_in, v_o in ((12.0, 24.0), (5.0, 40.0), (11.0, 12.0)):
            d = boost_duty(v_in, v_o)
            assert v_in / (1.0 - d) == pytest.approx(v_o, rel=1e-12)


class TestInductances:
    def test_buck_reference_point(self):
        assert min_inductance_buck(24.0, 0.5, 20e3, 0.3) == pytest.approx(1000e-6)

    def test_buck_quarter_duty(self):
        assert min_inductance_buck(24.0, 0.25, 20e3, 0.3) == pytest.approx(750e-6)

    def test_boost_reference_point(self):
        assert min_inductance_boost(12.0, 0.5, 20e3, 0.3) == pytest.approx(1000e-6)

    def test_boost_three_quarter_duty(self):
        assert min_inductance_boost(12.0, 0.75, 20e3, 0.3) == pytest.approx(1500e-6)

    def test_boost_zero_duty_needs_nothing(self):
        assert min_inductance_boost(12.0, 0.0, 20e3, 0.3) == 0.0

    def test_inverse_scaling_in_frequency_and_ripple(self):
        base = min_inductance_buck(24.0, 0.5, 20e3, 0.3)
        assert min_inductance_buck(24.0, 0.5, 40e3, 0.3) == pytest.approx(base / 2)
        assert min_inductance_buck(24.0, 0.5, 20e3, 0.6) == pytest.approx(base / 2)
        base_b = min_inductance_boost(12.0, 0.5, 20e3, 0.3)
        assert min_inductance_boost(12.0, 0.5, 40e3, 0.3) == pytest.approx(base_b / 2)
        assert min_inductance_boost(12.0, 0.5, 20e3, 0.6) == pytest.approx(base_b / 2)

    def test_rejects_bad_duty(self):
        with pytest.raises(ValueError, match="d1"):
            min_inductance_buck(24.0, 1.0, 20e3, 0.3)


class TestOutputCapacitance:
    def test_reference_point(self):
        assert output_capacitance(2.4, 25e-6, 0.24) == pytest.approx(250e-6)

    def test_doubling_ripple_halves_capacitance(self):
        assert output_capacitance(2.4, 25e-6, 0.48) == pytest.approx(125e-6)

    def test_half_current(self):
        assert output_capacitance(1.2, 25e-6, 0.24) == pytest.approx(125e-6)

    def test_rejects_zero_ripple(self):
        with pytest.raises(ValueError, match="dv"):
            output_capacitance(2.4, 25e-6, 0.0)


class TestDesign:
    def test_reference_design(self):
        r = design(REF_SPEC)
        assert r.d1 == pytest.approx(0.5)
        assert r.d2 == pytest.approx(0.5)
        assert r.l_min == pytest.approx(1000e-6)
        assert r.l_max == pytest.approx(1000e-6)
        assert r.c_out == pytest.approx(250e-6)
        assert r.dv == pytest.approx(0.24)

    def test_symmetric_ratios_give_equal_duties(self):
        """pv = 2 * battery and load = 2 * battery make both duties equal."""
        spec = DesignSpec(pv_voltage=36.0, pv_current=2.0, battery_voltage=18.0,
                          switching_frequency=50e3, load_voltage=36.0,
                          load_current=1.0, ripple_current=0.2)
        r = design(spec)
        assert r.d1 == pytest.approx(r.d2)

    def test_doubling_frequency_halves_both_inductances(self):
        fast = DesignSpec(pv_voltage=24.0, pv_current=3.0, battery_voltage=12.0,
                          switching_frequency=40e3, load_voltage=24.0,
                          load_current=2.4, ripple_current=0.3)
        slow = design(REF_SPEC)
        quick = design(fast)
        assert quick.l_min == pytest.approx(slow.l_min / 2)
        assert quick.l_max == pytest.approx(slow.l_max / 2)

    def test_ripple_voltage_is_fraction_of_load(self):
        spec = DesignSpec(pv_voltage=24.0, pv_current=3.0, battery_voltage=12.0,
                          switching_frequency=20e3, load_voltage=24.0,
                          load_current=2.4, ripple_current=0.3,
                          ripple_fraction=0.02)
        r = design(spec)
        assert r.dv == pytest.approx(0.48)
        assert r.c_out == pytest.approx(125e-6)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DesignSpec(pv_voltage=12.0, pv_current=3.0, battery_voltage=12.0,
                       switching_frequency=20e3, load_voltage=24.0,
                       load_current=2.4, ripple_current=0.3)
        with pytest.raises(ValueError):
            DesignSpec(pv_voltage=24.0, pv_current=3.0, battery_voltage=12.0,
                       switching_frequency=20e3, load_voltage=24.0,
                       load_current=2.4, ripple_current=0.3, ripple_fraction=1.5)
