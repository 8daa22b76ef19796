import pytest
from hypothesis import given, strategies as st

from fleetpilot import motion, sim
from fleetpilot.motion import (
    Ack,
    AckKind,
    ActionKind,
    DroneAction,
    decode_response,
    encode_action,
    validate_action,
)


class TestValidateAction:
    def test_valid_fly_returned_unchanged(self):
        action = DroneAction.fly(1, "left", 50)
        assert validate_action(action) is action

    def test_fly_below_minimum_distance(self):
        with pytest.raises(motion.RangeViolation) as exc:
            validate_action(DroneAction.fly(1, "left", 10))
        err = exc.value
        assert (err.field, err.value, err.minimum, err.maximum) == ("distance_cm", 10, 20, 500)

    def test_rotate_zero_degrees(self):
        with pytest.raises(motion.RangeViolation) as exc:
            validate_action(DroneAction.rotate(2, "cw", 0))
        err = exc.value
        assert (err.field, err.value, err.minimum, err.maximum) == ("degrees", 0, 1, 360)

    def test_hover_out_of_range(self):
        with pytest.raises(motion.RangeViolation):
            validate_action(DroneAction.hover(1, 31.0))
        with pytest.raises(motion.RangeViolation):
            validate_action(DroneAction(1, ActionKind.HOVER, seconds=0.05))

    def test_bad_direction(self):
        with pytest.raises(motion.InvalidDirection):
            validate_action(DroneAction.fly(1, "sideways", 50))
        with pytest.raises(motion.InvalidDirection):
            validate_action(DroneAction.flip(1, "up"))
        with pytest.raises(motion.InvalidDirection):
            validate_action(DroneAction.rotate(1, "left", 90))

    def test_drone_id_must_be_positive(self):
        with pytest.raises(motion.RangeViolation):
            validate_action(DroneAction.takeoff(0))

    def test_extraneous_field_rejected(self):
        with pytest.raises(motion.FieldMismatch):
            validate_action(DroneAction(1, ActionKind.TAKEOFF, distance_cm=50))
        with pytest.raises(motion.FieldMismatch):
            validate_action(DroneAction(1, ActionKind.FLY, direction="left"))

    @given(st.integers(min_value=20, max_value=500),
           st.sampled_from(motion.FLY_DIRECTIONS),
           st.integers(min_value=1, max_value=8))
    def test_validation_is_pure_and_accepts_all_valid(self, d, direction, drone):
        action = DroneAction.fly(drone, direction, d)
        assert validate_action(action) == validate_action(action) == action


class TestEncodeAction:
    @pytest.mark.parametrize(
        "action, wire",
        [
            (DroneAction.takeoff(1), "takeoff"),
            (DroneAction.land(1), "land"),
            (DroneAction.fly(1, "left", 50), "left 50"),
            (DroneAction.fly(1, "right", 20), "right 20"),
            (DroneAction.fly(2, "forward", 500), "forward 500"),
            (DroneAction.fly(2, "back", 120), "back 120"),
            (DroneAction.fly(1, "up", 40), "up 40"),
            (DroneAction.fly(1, "down", 40), "down 40"),
            (DroneAction.flip(1, "right"), "flip r"),
            (DroneAction.flip(1, "left"), "flip l"),
            (DroneAction.flip(1, "forward"), "flip f"),
            (DroneAction.flip(1, "back"), "flip b"),
            (DroneAction.rotate(2, "ccw", 90), "ccw 90"),
            (DroneAction.rotate(2, "cw", 360), "cw 360"),
        ],
    )
    def test_wire_table(self, action, wire):
        assert encode_action(action) == wire

    def test_hover_has_no_wire_form(self):
        with pytest.raises(ValueError):
            encode_action(DroneAction.hover(1, 2.0))

    @given(st.sampled_from(motion.FLY_DIRECTIONS),
           st.integers(min_value=20, max_value=500))
    def test_output_is_printable_ascii_single_spaces(self, direction, d):
        wire = encode_action(DroneAction.fly(1, direction, d))
        assert wire.isascii() and wire.isprintable()
        assert "  " not in wire and not wire.startswith(" ") and not wire.endswith(" ")


class TestDecodeResponse:
    def test_ok(self):
        assert decode_response(b"ok").kind is AckKind.OK
        assert decode_response(b" OK \r\n").kind is AckKind.OK

    def test_error_literal(self):
        ack = decode_response(b"error")
        assert ack.kind is AckKind.ERROR and ack.text == "error"

    def test_numeric_value(self):
        ack = decode_response(b"87")
        assert ack.kind is AckKind.VALUE and ack.value == 87

    def test_empty_raises(self):
        with pytest.raises(motion.EmptyResponse):
            decode_response(b"")
        with pytest.raises(motion.EmptyResponse):
            decode_response(b"  \r\n")

    def test_arbitrary_text_is_error(self):
        ack = decode_response(b"error Motor stop")
        assert ack.kind is AckKind.ERROR and "Motor stop" in ack.text


def _all_wire_actions():
    """Every kind x direction, with boundary magnitudes."""
    actions = [DroneAction.takeoff(1), DroneAction.land(1)]
    for direction in motion.FLY_DIRECTIONS:
        for d in (20, 500, 137):
            actions.append(DroneAction.fly(1, direction, d))
    for direction in motion.FLIP_DIRECTIONS:
        actions.append(DroneAction.flip(1, direction))
    for direction in motion.ROTATE_DIRECTIONS:
        for g in (1, 360, 95):
            actions.append(DroneAction.rotate(1, direction, g))
    return actions


class TestWireRoundTrip:
    @pytest.mark.parametrize("action", _all_wire_actions(), ids=encode_action)
    def test_sim_parser_reconstructs_action(self, action):
        assert sim.wire_to_action(encode_action(action), action.drone) == action

    @given(st.sampled_from(motion.FLY_DIRECTIONS),
           st.integers(min_value=20, max_value=500),
           st.integers(min_value=1, max_value=4))
    def test_fly_round_trip_sampled(self, direction, d, drone):
        action = DroneAction.fly(drone, direction, d)
        assert sim.wire_to_action(encode_action(action), drone) == action
