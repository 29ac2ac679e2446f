"""Converter design calculator: duty ratios, inductance bounds, output capacitor.

Standard steady-state CCM relations.  The output-capacitor sizing keeps the
conventional charge-balance arithmetic with the on-time taken as d1 / f_s.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DesignSpec:
    """Electrical specification the converter is designed against."""

    pv_voltage: float          # V, PV array voltage
    pv_current: float          # A, PV array current
    battery_voltage: float     # V, battery voltage
    switching_frequency: float  # Hz
    load_voltage: float        # V, regulated load voltage
    load_current: float        # A
    ripple_current: float      # A, target inductor peak-to-peak ripple
    ripple_fraction: float = 0.01  # output voltage ripple as a fraction of load voltage

    def __post_init__(self) -> None:
        if not self.pv_voltage > self.battery_voltage > 0.0:
            raise ValueError("require pv_voltage > battery_voltage > 0")
        if self.load_voltage <= self.battery_voltage:
            raise ValueError("require load_voltage > battery_voltage")
        if self.switching_frequency <= 0.0:
            raise ValueError("switching_frequency must be positive")
        if self.ripple_current <= 0.0:
            raise ValueError("ripple_current must be positive")
        if not 0.0 < self.ripple_fraction < 1.0:
            raise ValueError("ripple_fraction must be in (0, 1)")
        if self.pv_current <= 0.0 or self.load_current <= 0.0:
            raise ValueError("currents must be positive")


@dataclass(frozen=True)
class DesignResult:
    d1: float       # buck (charging) duty ratio
    d2: float       # boost (discharging) duty ratio
    l_min: float    # H, buck-side minimum inductance for the ripple target
    l_max: float    # H, boost-side inductance for the same ripple target
    c_out: float    # F, output capacitance
    dv: float       # V, absolute output ripple voltage


def buck_duty(v_s: float, v_o: float) -> float:
    """Buck conversion ratio d = v_o / v_s."""
    if v_o <= 0.0 or v_s <= 0.0:
        raise ValueError("voltages must be positive")
    if v_o > v_s:
        raise ValueError(f"buck cannot step up: v_o={v_o} > v_s={v_s}")
    return v_o / v_s


def boost_duty(v_in: float, v_o: float) -> float:
    """Boost conversion ratio d = (v_o - v_in) / v_o."""
    if v_in <= 0.0 or v_o <= 0.0:
        raise ValueError("voltages must be positive")
    if v_in > v_o:
        raise ValueError(f"boost cannot step down: v_in={v_in} > v_o={v_o}")
    return (v_o - v_in) / v_o


def min_inductance_buck(v_p: float, d1: float, f_s: float, delta_i: float) -> float:
    """Minimum buck inductance holding ripple to delta_i:
    L = v_p * d1 * (1 - d1) / (f_s * delta_i)."""
    if not 0.0 < d1 < 1.0:
        raise ValueError(f"d1 must be in (0, 1), got {d1}")
    if f_s <= 0.0 or delta_i <= 0.0:
        raise ValueError("f_s and delta_i must be positive")
    return v_p * d1 * (1.0 - d1) / (f_s * delta_i)


def min_inductance_boost(v_b: float, d2: float, f_s: float, delta_i: float) -> float:
    """Boost inductance for the same ripple target: L = v_b * d2 / (f_s * delta_i)."""
    if not 0.0 <= d2 < 1.0:
        raise ValueError(f"d2 must be in [0, 1), got {d2}")
    if f_s <= 0.0 or delta_i <= 0.0:
        raise ValueError("f_s and delta_i must be positive")
    return v_b * d2 / (f_s * delta_i)


def output_capacitance(i_o: float, on_time: float, dv: float) -> float:
    """Output capacitance from charge balance: C = i_o * on_time / dv."""
    if i_o <= 0.0 or on_time <= 0.0:
        raise ValueError("i_o and on_time must be positive")
    if dv <= 0.0:
        raise ValueError("dv must be positive (dv = 0 gives unbounded capacitance)")
    return i_o * on_time / dv


def design(spec: DesignSpec) -> DesignResult:
    """Full design pass over a specification.

    Both inductances are computed and reported: the buck and boost ripple
    constraints generally differ, and at the symmetric 2:1 operating point
    they happen to coincide.
    """
    d1 = buck_duty(spec.pv_voltage, spec.battery_voltage)
    d2 = boost_duty(spec.battery_voltage, spec.load_voltage)
    l_min = min_inductance_buck(spec.pv_voltage, d1,
                                spec.switching_frequency, spec.ripple_current)
    l_max = min_inductance_boost(spec.battery_voltage, d2,
                                 spec.switching_frequency, spec.ripple_current)
    dv = spec.ripple_fraction * spec.load_voltage
    on_time = d1 / spec.switching_frequency
    c_out = output_capacitance(spec.load_current, on_time, dv)
    return DesignResult(d1=d1, d2=d2, l_min=l_min, l_max=l_max, c_out=c_out, dv=dv)
