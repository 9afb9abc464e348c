import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stegabot.core import (
    MAX_PAYLOAD,
    BitFrame,
    MorseSequence,
    Symbol,
    add_salt,
    bits_to_bytes,
    bytes_to_bits,
    frame_message,
    morse_to_text,
    salted_length,
    text_to_morse,
    unframe_message,
    xor_fold,
)
from stegabot.errors import (
    ChecksumMismatch,
    EmptyMessage,
    InvalidMorseSequence,
    MagicNotFound,
    MessageTooLong,
    NonAsciiCharacter,
    TruncatedFrame,
    UnknownSymbolGroup,
    UnsupportedCharacter,
)

D, H, L, W = Symbol.DOT, Symbol.DASH, Symbol.LETTER_GAP, Symbol.WORD_GAP
ascii_text = st.text(alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x7E), min_size=1, max_size=200)


def test_single_char_frame():
    f = frame_message("A")
    assert (f.length, f.payload, f.checksum) == (1, b"A", 0x41)
    assert f.to_bytes() == b"RS\x00\x01A\x41"


def test_sos_checksum_by_hand():
    f = frame_message("SOS")
    assert f.length == 3
    assert f.checksum == 0x53 ^ 0x4F ^ 0x53 == 0x4F
    assert f.bit_count == 64


@pytest.mark.parametrize("text,err", [("", EmptyMessage), ("héllo", NonAsciiCharacter), ("tab\there", NonAsciiCharacter),
                                       ("x" * (MAX_PAYLOAD + 1), MessageTooLong)])
def test_frame_rejects(text, err):
    with pytest.raises(err):
        frame_message(text)


def test_max_payload_fits():
    assert frame_message("x" * MAX_PAYLOAD).length == MAX_PAYLOAD


def test_unframe_sos():
    assert unframe_message(frame_message("SOS").to_bits()) == "SOS"


def test_flipped_payload_bit_fails_checksum():
    bits = frame_message("SOS").to_bits().copy()
    bits[35] ^= 1
    with pytest.raises(ChecksumMismatch):
        unframe_message(bits)


def test_all_zero_stream():
    with pytest.raises(MagicNotFound):
        unframe_message(np.zeros(4000, dtype=np.uint8))


def test_truncated():
    bits = frame_message("hello world").to_bits()[:-12]
    with pytest.raises(TruncatedFrame):
        unframe_message(bits)


def test_scan_window():
    bits = np.concatenate([np.zeros(100, np.uint8), frame_message("hi").to_bits()])
    assert unframe_message(bits) == "hi"
    with pytest.raises(MagicNotFound):
        unframe_message(bits, max_scan=50)


def test_false_magic_before_real_frame():
    # a stray "RS" earlier in the stream must not hide the real frame
    junk = bytes_to_bits(b"RS\x00\x09garbage!!")
    bits = np.concatenate([junk, frame_message("real").to_bits()])
    assert unframe_message(bits) == "real"


@given(ascii_text)
def test_frame_round_trip(text):
    assert unframe_message(frame_message(text).to_bits()) == text


@given(st.binary(max_size=64))
def test_bits_bytes_inverse(data):
    assert bits_to_bytes(bytes_to_bits(data)) == data
    assert xor_fold(data) == (np.bitwise_xor.reduce(np.frombuffer(data, np.uint8)) if data else 0)


def test_bits_are_msb_first():
    assert bytes_to_bits(b"\x80").tolist() == [1, 0, 0, 0, 0, 0, 0, 0]


# --- Morse ---------------------------------------------------------------------

def test_sos_morse():
    assert text_to_morse("SOS").symbols == (D, D, D, L, H, H, H, L, D, D, D)
    assert str(text_to_morse("SOS")) == "... --- ..."


def test_e_is_dot():
    assert text_to_morse("E").symbols == (D,)


def test_unsupported_character():
    with pytest.raises(UnsupportedCharacter):
        text_to_morse("é")


def test_word_gap_and_case():
    seq = text_to_morse("hi  you")
    assert W in seq.symbols
    assert morse_to_text(seq) == "HI YOU"


def test_unknown_group():
    with pytest.raises(UnknownSymbolGroup):
        morse_to_text(MorseSequence((D, D, D, D, D, D, D, D)))


@pytest.mark.parametrize("symbols", [(L, D), (D, L), (D, L, L, D), (D, W, L, D)])
def test_sequence_invariants(symbols):
    with pytest.raises(InvalidMorseSequence):
        MorseSequence(symbols)


def test_parse_matches_str():
    seq = text_to_morse("SOS HELP")
    assert MorseSequence.parse(str(seq)) == seq


words = st.lists(st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,?!", min_size=1, max_size=6),
                 min_size=1, max_size=4)


@given(words)
def test_morse_round_trip(ws):
    text = " ".join(ws)
    assert morse_to_text(text_to_morse(text)) == text


# --- salt ---------------------------------------------------------------------

def test_zero_salt_is_identity():
    bits = bytes_to_bits(b"abc")
    assert np.array_equal(add_salt(bits, 0.0, 7), bits)


def test_salt_half():
    bits = np.random.default_rng(3).integers(0, 2, 80, dtype=np.uint8)
    out = add_salt(bits, 0.5, 1)
    assert out.size == 160
    assert np.array_equal(out[:80], bits)
    assert np.array_equal(out, add_salt(bits, 0.5, 1))


def test_salted_frame_still_unframes():
    bits = add_salt(frame_message("SOS"), 0.75, 99)
    assert unframe_message(bits) == "SOS"


@given(st.integers(1, 500), st.floats(0, 0.95), st.integers(0, 2**64 - 1))
def test_salt_length(n, ratio, seed):
    out = add_salt(np.ones(n, np.uint8), ratio, seed)
    assert out.size == salted_length(n, ratio)
    assert out.size * (1 - ratio) >= n - 1e-9
    assert set(np.unique(out)) <= {0, 1}


def test_bad_salt_ratio():
    with pytest.raises(ValueError):
        add_salt(np.ones(8, np.uint8), 1.0, 0)


def test_bitframe_is_frozen():
    f = BitFrame(b"x")
    with pytest.raises(Exception):
        f.payload = b"y"
