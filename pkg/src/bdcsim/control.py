"""Digital controller: mode supervisor, PWM generation and regulation.

The controller runs once per switching period, the way a timer interrupt
on a small microcontroller would: it reads filtered measurements, picks the
operating mode from source sufficiency with hysteresis, and nudges the duty
cycle one increment at a time.  Charging regulates battery current (constant
current) and hands over to constant voltage at the float threshold;
discharging regulates the load-rail voltage through the boost leg.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .circuit import GateCommand

# Battery relaxation below the float voltage before charging resumes after
# a rest (trickle) phase.
TRICKLE_EXIT_DROP = 0.2  # V


class Mode(Enum):
    CHARGING = "charging"
    DISCHARGING = "discharging"
    TRICKLE = "trickle"


class CcCvPhase(Enum):
    CONSTANT_CURRENT = "cc"
    CONSTANT_VOLTAGE = "cv"


@dataclass(frozen=True)
class ControllerConfig:
    """Setpoints and tuning of the digital controller."""

    v_ref_load: float = 24.0      # V, regulated load-rail target
    i_charge_ref: float = 3.0     # A, constant-current charging setpoint
    i_discharge_ref: float = 2.4  # A, nominal discharge current magnitude (reporting)
    v_float: float = 13.8         # V, battery voltage handing CC over to CV / rest
    v_bus_low: float = 12.6       # V, below this the source is insufficient
    v_bus_high: float = 20.4      # V, above this the source is sufficient
    duty_step: float = 0.005      # duty increment per control period
    duty_min: float = 0.02        # duty saturation floor
    duty_max: float = 0.95        # duty saturation ceiling
    i_deadband: float = 0.05      # A, current-comparator resolution (hold inside)
    v_deadband: float = 0.1       # V, voltage-comparator resolution (hold inside)

    def __post_init__(self) -> None:
        if not 0.0 <= self.duty_min < self.duty_max <= 1.0:
            raise ValueError("require 0 <= duty_min < duty_max <= 1")
        if self.v_bus_low >= self.v_bus_high:
            raise ValueError("require v_bus_low < v_bus_high")
        if self.duty_step <= 0.0:
            raise ValueError("duty_step must be positive")
        if self.i_deadband < 0.0 or self.v_deadband < 0.0:
            raise ValueError("deadbands must be non-negative")


@dataclass(frozen=True)
class ControllerState:
    """Controller state carried between switching periods.

    The acc_* fields are the sensor-filter accumulators: the plant stepper
    adds one sample per integration step and the controller consumes the
    period average at the next carrier wrap.
    """

    mode: Mode
    duty: float
    cc_cv_phase: CcCvPhase = CcCvPhase.CONSTANT_CURRENT
    carrier_phase: float = 0.0    # in [0, 1), wraps once per switching period
    acc_i_batt: float = 0.0
    acc_v_load: float = 0.0
    acc_v_batt: float = 0.0
    acc_count: int = 0


def initial_controller_state(cfg: ControllerConfig, mode: Mode = Mode.TRICKLE,
                             duty: float | None = None) -> ControllerState:
    """Cold-start state: duty parked at the saturation floor (soft start)."""
    return ControllerState(mode=mode, duty=cfg.duty_min if duty is None else duty)


def select_mode(v_bus: float, v_batt: float, soc: float, prev: Mode,
                cfg: ControllerConfig) -> Mode:
    """Hysteretic mode decision from source sufficiency and battery voltage.

    The source voltage rules: at or below v_bus_low the battery must carry
    the load (discharging); at or above v_bus_high the source is sufficient
    and the battery charges, resting (trickle) once its voltage reaches the
    float threshold.  Between the thresholds the previous mode is retained,
    except that a full battery still drops into rest and a rested battery
    that has relaxed by TRICKLE_EXIT_DROP resumes charging.  soc is accepted
    for charge-based cutoffs but the rule is purely voltage driven.
    """
    if v_bus <= cfg.v_bus_low:
        return Mode.DISCHARGING
    if v_bus < cfg.v_bus_high and prev is Mode.DISCHARGING:
        return Mode.DISCHARGING
    if prev is Mode.TRICKLE:
        if v_batt < cfg.v_float - TRICKLE_EXIT_DROP:
            return Mode.CHARGING
        return Mode.TRICKLE
    if prev is Mode.CHARGING and v_batt >= cfg.v_float:
        return Mode.TRICKLE
    return Mode.CHARGING


def pwm_gate(carrier_phase: float, duty: float, mode: Mode) -> GateCommand:
    """Gate command for the current carrier phase.

    Charging drives the buck leg S1, discharging the boost leg S2, and
    trickle keeps both switches off to disconnect bus and battery.  The two
    legs are mutually exclusive by construction, so shoot-through cannot be
    commanded.
    """
    if not 0.0 <= carrier_phase < 1.0:
        raise ValueError(f"carrier_phase must be in [0, 1), got {carrier_phase}")
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty must be in [0, 1], got {duty}")
    active = carrier_phase < duty
    if mode is Mode.CHARGING:
        return GateCommand(s1_on=active, s2_on=False)
    if mode is Mode.DISCHARGING:
        return GateCommand(s1_on=False, s2_on=active)
    return GateCommand(s1_on=False, s2_on=False)


def regulate(meas_v_load: float, meas_i_batt: float, meas_v_batt: float,
             st: ControllerState, cfg: ControllerConfig) -> ControllerState:
    """One comparator-style regulation step, called once per switching period.

    Discharging: raise duty while the load rail is under the reference,
    lower it while over (boost gain is monotone in duty).  Charging:
    constant-current increments on battery current until the battery
    voltage reaches the float threshold, then the same increment rule holds
    the battery at the float voltage.  Errors within the comparator
    deadband leave the duty untouched: a finite-resolution sense chain
    cannot act on them, and the hold is what lets the increment law settle
    instead of hunting around the setpoint.  Duty saturates to
    [duty_min, duty_max] after every update.  Trickle leaves the state
    untouched.
    """
    if st.mode is Mode.TRICKLE:
        return st
    duty = st.duty
    phase = st.cc_cv_phase
    if st.mode is Mode.DISCHARGING:
        duty += _increment(cfg.v_ref_load - meas_v_load, cfg.v_deadband, cfg.duty_step)
    else:  # CHARGING
        if phase is CcCvPhase.CONSTANT_CURRENT and meas_v_batt >= cfg.v_float:
            phase = CcCvPhase.CONSTANT_VOLTAGE
        if phase is CcCvPhase.CONSTANT_CURRENT:
            duty += _increment(cfg.i_charge_ref - meas_i_batt, cfg.i_deadband,
                               cfg.duty_step)
        else:
            duty += _increment(cfg.v_float - meas_v_batt, cfg.v_deadband,
                               cfg.duty_step)
    duty = min(max(duty, cfg.duty_min), cfg.duty_max)
    return replace(st, duty=duty, cc_cv_phase=phase)


def _increment(error: float, deadband: float, step: float) -> float:
    if error > deadband:
        return step
    if error < -deadband:
        return -step
    return 0.0


def desired_current_envelope(i_star: float, ripple: float) -> tuple[float, float]:
    """Predicted (min, max) of the inductor current around its commanded
    average for a given peak-to-peak ripple."""
    if ripple < 0.0:
        raise ValueError(f"ripple must be non-negative, got {ripple}")
    return (i_star - 0.5 * ripple, i_star + 0.5 * ripple)
