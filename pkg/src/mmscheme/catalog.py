"""Schemes shipped with the package.

``stapleton59-file`` is the rank-23 coefficient file, ``stapleton59-naive``
the same algorithm written out term by term before reduction (110
additions), and ``stapleton59-slp`` the 59-addition schedule.  The two
3x3 forms differ by a sign on some products, so they are kept separately.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Union

from .formats import parse_scheme, parse_slp
from .model import BilinearScheme, StraightLineProgram
from .verify import extract_scheme

STAPLETON59_FILE = """\
0 1 0 0 0 0 1 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0
1 0 0 0 0 0 0 -1 0 0 -1 0 1 -1 1 0 0 0 0 0 0 0 0
0 0 0 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 -1 0 0
0 0 1 0 1 0 0 0 0 0 0 -1 0 0 1 1 1 -1 1 0 0 0 -1
0 0 -1 0 0 0 0 0 0 1 0 0 0 0 0 -1 -1 0 -1 0 0 0 0
0 0 -1 0 -1 0 0 0 1 0 0 0 0 0 0 0 -1 0 -1 0 0 0 0
0 0 1 0 1 0 0 0 0 0 -1 -1 1 0 1 1 1 0 0 0 0 -1 -1
0 0 -1 0 0 0 0 1 0 0 1 0 -1 0 -1 -1 -1 0 0 0 0 0 0
0 0 -1 -1 -1 0 0 0 0 0 0 1 0 0 0 0 0 0 0 -1 0 1 0
#
0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 1 0 0 0 0 1
0 1 0 0 0 0 0 0 0 0 0 -1 0 0 0 0 0 1 0 -1 0 -1 0
0 0 0 0 0 0 0 -1 0 0 -1 -1 1 0 1 0 0 1 0 -1 0 -1 -1
0 0 0 0 0 0 0 0 0 1 0 0 0 1 -1 -1 0 0 0 0 0 0 1
1 0 0 0 0 0 0 0 1 0 0 -1 1 0 0 0 1 1 -1 -1 0 -1 0
0 0 0 0 0 0 0 -1 1 0 0 -1 1 0 1 1 1 1 -1 -1 0 -1 -1
0 0 0 0 1 0 0 0 -1 0 0 1 0 0 0 0 0 0 0 0 -1 0 1
0 0 0 0 0 1 0 0 -1 0 0 0 0 0 0 0 0 0 0 -1 0 0 0
0 0 1 1 0 0 0 0 -1 0 0 0 0 0 0 -1 -1 0 0 0 0 0 0
#
0 0 0 0 0 0 1 0 0 0 0 0 0 -1 0 0 0 0 0 0 1 0 0
1 1 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
-1 0 -1 1 0 0 0 0 0 0 -1 0 1 0 0 0 -1 0 -1 0 0 0 0
0 0 0 0 -1 0 0 0 0 1 0 -1 0 0 0 0 0 -1 0 0 0 1 0
-1 0 0 0 1 0 0 0 -1 -1 0 1 1 1 -1 1 -1 0 0 0 0 -1 0
1 0 0 0 0 0 0 0 0 1 0 0 -1 -1 1 -1 1 0 1 0 0 0 0
0 0 0 0 0 0 0 -1 0 0 0 1 0 -1 1 0 0 1 0 0 0 -1 -1
1 0 0 0 0 0 0 1 0 0 0 0 -1 0 0 0 0 0 0 1 0 1 0
-1 0 -1 0 0 0 0 -1 0 0 0 0 1 0 0 0 -1 0 -1 0 0 0 0
"""

STAPLETON59_NAIVE = """\
M0 = A1 * B4
M1 = A0 * B1
M2 = (A3 - A4 - A5 + A6 - A7 - A8) * B8
M3 = (A2 - A8) * B8
M4 = (A3 - A5 + A6 - A8) * B6
M5 = A2 * B7
M6 = A0 * B0
M7 = (A1 - A7) * (B2 + B5)
M8 = A5 * (B4 + B5 - B6 - B7 - B8)
M9 = A4 * B3
M10 = (A0 - A1 - A6 + A7) * B2
M11 = (A3 + A6 - A8) * (B1 + B2 + B4 + B5 - B6)
M12 = (A1 + A6 - A7) * (B2 + B4 + B5)
M13 = A1 * B3
M14 = (A1 + A3 + A6 - A7) * (B2 - B3 + B5)
M15 = (A3 - A4 + A6 - A7) * (B3 - B5 + B8)
M16 = (A3 - A4 - A5 + A6 - A7) * (B4 + B5 - B8)
M17 = A3 * (B0 + B1 + B2 + B4 + B5)
M18 = (A3 - A4 - A5) * (B4 + B5)
M19 = A8 * (B1 + B2 + B4 + B5 + B7)
M20 = A2 * B6
M21 = (A6 - A8) * (B1 + B2 + B4 + B5)
M22 = (A3 + A6) * (B0 - B2 + B3 - B5 + B6)
C0 = M6 + M13 + M20
C1 = M0 + M1 + M5
C2 = -M0 - M2 + M3 + M10 + M12 - M16 + M18
C3 = -M4 + M9 - M11 + M17 + M21
C4 = -M0 + M4 - M8 - M9 + M11 + M12 - M13 - M14 - M15 - M16 - M21
C5 = M0 + M9 - M12 + M13 + M14 + M15 + M16 - M18
C6 = -M7 + M11 + M13 + M14 - M17 - M21 + M22
C7 = M0 + M7 - M12 + M19 + M21
C8 = -M0 - M2 - M7 + M12 - M16 + M18
"""

STAPLETON59_SLP = """\
t0 = A3 + A6
t1 = A1 - A7
t2 = A4 + A5
t3 = A7 - t0
t4 = A6 + t1
t5 = A8 - t0
t6 = t2 + t3
u0 = B2 + B5
u1 = B4 + u0
u2 = B1 + u1
u3 = B4 + B5
u4 = B3 - u0
u5 = B8 - u3
M0 = A1 * B4
M1 = A0 * B1
M2 = (A8 + t6) * B8
M3 = (A2 - A8) * B8
M4 = (A5 + t5) * B6
M5 = A2 * B7
M6 = A0 * B0
M7 = t1 * u0
M8 = A5 * (B6 + B7 + u5)
M9 = A4 * B3
M10 = (A0 - t4) * B2
M11 = t5 * (B6 - u2)
M12 = t4 * u1
M13 = A1 * B3
M14 = (t0 + t1) * u4
M15 = (A4 + t3) * (B3 - B5 + B8)
M16 = t6 * u5
M17 = A3 * (B0 + u2)
M18 = (A3 - t2) * u3
M19 = A8 * (B7 + u2)
M20 = A2 * B6
M21 = (A6 - A8) * u2
M22 = t0 * (B0 + B6 + u4)
v0 = M0 - M12
v1 = M16 + v0
v2 = M11 - M21
v3 = M14 - M13
v4 = M18 - v1
v5 = M2 + v4
v6 = M4 + M9
v7 = M15 + v3
v8 = M17 - v2
C0 = M6 + M13 + M20
C1 = M0 + M1 + M5
C2 = M3 + M10 + v5
C3 = v6 + v8
C4 = M8 - v1 + v2 - v6 + v7
C5 = M9 - v4 - v7
C6 = -M7 + M22 - v3 - v8
C7 = M7 + M19 + M21 + v0
C8 = -M7 + v5
"""

# Strassen's seven products for 2x2 blocks A0 A1 / A2 A3 times B0 B1 / B2 B3.
STRASSEN = """\
M0 = (A0 + A3) * (B0 + B3)
M1 = (A2 + A3) * B0
M2 = A0 * (B1 - B3)
M3 = A3 * (B2 - B0)
M4 = (A0 + A1) * B3
M5 = (A2 - A0) * (B0 + B1)
M6 = (A1 - A3) * (B2 + B3)
C0 = M0 + M3 - M4 + M6
C1 = M2 + M4
C2 = M1 + M3
C3 = M0 - M1 + M2 + M5
"""

NAMES = ("stapleton59-file", "stapleton59-naive", "stapleton59-slp", "strassen")


@lru_cache(maxsize=None)
def builtin(name: str) -> Union[BilinearScheme, StraightLineProgram]:
    """Look up a builtin by name; raises KeyError for unknown names."""
    if name == "stapleton59-file":
        return parse_scheme(STAPLETON59_FILE, name=name)
    if name == "stapleton59-naive":
        return extract_scheme(parse_slp(STAPLETON59_NAIVE), name=name)
    if name == "stapleton59-slp":
        return parse_slp(STAPLETON59_SLP)
    if name == "strassen":
        return extract_scheme(parse_slp(STRASSEN), name=name)
    raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(NAMES)}")
