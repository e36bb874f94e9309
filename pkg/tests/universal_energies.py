"""Printed values of the universal two-center energies.

Each entry is ``(x, y, column, base, mantissa, exponent)``: the printed value
is ``base + mantissa * 10**exponent``. ``base`` is -1 or +1 for entries
written as an offset from a threshold and 0 for plain numbers. ``None`` marks
a printed dash (no solution). Rows at the fold ``y = y_c(x)`` are listed
separately because ``y_c`` is itself computed.
"""

ENTRIES = [
    # x = 0.01
    (0.01, -100, "g_minus", -1, 1.6054, -5),
    (0.01, -100, "g_plus", None, None, None),
    (0.01, -100, "u", None, None, None),
    (0.01, -10, "g_minus", -1, 1.6080, -5),
    (0.01, -1, "g_minus", -1, 1.6082, -5),
    (0.01, 1, "g_minus", -1, 1.6083, -5),
    (0.01, 1, "g_plus", 1, -8.1723, -5),
    (0.01, 10, "g_minus", -1, 1.6086, -5),
    (0.01, 10, "g_plus", 1, -4.9876, -3),
    (0.01, 10, "u", 1, -4.9875, -3),
    (0.01, 100, "g_minus", -1, 1.6112, -5),
    (0.01, 100, "g_plus", 0, 6.0000, -1),
    (0.01, 100, "u", 0, 6.0000, -1),
    (0.01, 1000, "g_minus", -1, 1.6381, -5),
    (0.01, 1000, "g_plus", -1, 7.6923, -2),
    (0.01, 1000, "u", -1, 7.6923, -2),
    (0.01, 10000, "g_minus", -1, 1.9939, -5),
    (0.01, 10000, "g_plus", -1, 7.9219, -4),
    (0.01, 10000, "u", -1, 8.0687, -4),
    (0.01, 100000, "g_minus", None, None, None),
    (0.01, 100000, "g_plus", None, None, None),
    (0.01, 100000, "u", -1, 2.3836, -5),
    # x = 0.5
    (0.5, -100, "g_minus", -1, 9.6266, -3),
    (0.5, -10, "g_minus", -1, 2.8822, -2),
    (0.5, -1, "g_minus", -1, 3.9225, -2),
    (0.5, -1, "u", None, None, None),
    (0.5, 1, "g_minus", -1, 4.3115, -2),
    (0.5, 1, "g_plus", 0, 7.9970, -1),
    (0.5, 10, "g_minus", None, None, None),
    (0.5, 10, "g_plus", None, None, None),
    (0.5, 10, "u", 0, -6.5311, -1),
    (0.5, 100, "g_minus", None, None, None),
    (0.5, 100, "u", -1, 2.1489, -2),
    # x = 1.5
    (1.5, -100, "g_minus", -1, 1.5460, -2),
    (1.5, -10, "g_minus", -1, 9.4260, -2),
    (1.5, -1, "g_minus", 0, -7.0313, -1),
    (1.5, 0.5, "g_minus", None, None, None),
    (1.5, 0.5, "g_plus", None, None, None),
    (1.5, 0.5, "u", None, None, None),
    (1.5, 1, "g_minus", None, None, None),
    (1.5, 1, "g_plus", None, None, None),
    (1.5, 10, "g_minus", None, None, None),
    (1.5, 10, "u", 0, -7.8507, -1),
    (1.5, 100, "u", -1, 2.0170, -2),
]

# entries printed as "1 (exact)"
EXACT_THRESHOLD = [
    (x, y, col) for x in (0.01, 0.5, 1.5) for (y, col) in ((-1, "g_plus"), (1, "u"))
]

# (x, printed y_c, printed eps_gc as (base, mantissa, exponent), eps_u at y_c or None)
FOLD_ROWS = [
    (0.01, 25401.358108598, (-1, 5.6189, -5), (-1, 1.5048, -4)),
    (0.5, 9.436540350268, (0, -8.6525, -1), (0, -6.2449, -1)),
    (1.5, 0.33389617926, (0, -1.6277, -1), None),
]

X_C = 1.198076
EPS_GC_AT_X_C = -0.379162


def tolerance(exponent: int) -> float:
    """Half a unit in the last printed digit of a five-digit mantissa."""
    return 0.5 * 10.0 ** (exponent - 4)


def printed_digits_ulp(value_text: str) -> float:
    """One unit in the last printed digit of a decimal literal."""
    frac = value_text.split(".")[1] if "." in value_text else ""
    return 10.0 ** (-len(frac))
