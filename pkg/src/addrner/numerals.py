"""Slovak cardinal numerals for house numbers 1-999."""

from __future__ import annotations

UNITS = ["", "jeden", "dva", "tri", "štyri", "päť", "šesť", "sedem", "osem", "deväť"]
TEENS = [
    "desať", "jedenásť", "dvanásť", "trinásť", "štrnásť",
    "pätnásť", "šestnásť", "sedemnásť", "osemnásť", "devätnásť",
]
TENS = [
    "", "", "dvadsať", "tridsať", "štyridsať",
    "päťdesiat", "šesťdesiat", "sedemdesiat", "osemdesiat", "deväťdesiat",
]
HUNDREDS = [
    "", "sto", "dvesto", "tristo", "štyristo",
    "päťsto", "šesťsto", "sedemsto", "osemsto", "deväťsto",
]

SLASH_WORD = "lomeno"


def _parts(n: int) -> list[str]:
    hundreds, rest = divmod(n, 100)
    words = []
    if hundreds:
        words.append(HUNDREDS[hundreds])
    if 10 <= rest < 20:
        words.append(TEENS[rest - 10])
    else:
        tens, units = divmod(rest, 10)
        if tens:
            words.append(TENS[tens])
        if units:
            words.append(UNITS[units])
    return words


def verbalize_house_number(n: int, spaced: bool = False) -> list[str]:
    """Cardinal words for ``n``.

    Written Slovak joins the whole numeral into one word (834 ->
    ``osemstotridsaťštyri``). With ``spaced=True`` the hundreds, tens and
    units come out as separate tokens, the way a transcript of dictated
    digits often looks (``osemsto tridsať štyri``).
    """
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= 999:
        raise ValueError(f"house number must be an integer in 1..999, got {n!r}")
    parts = _parts(n)
    return parts if spaced else ["".join(parts)]
