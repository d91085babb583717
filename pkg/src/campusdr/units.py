"""Unit conversion constants shared across the package.

Power is carried in kW, electrical energy in kWh, tank/thermal energy in kJ,
boiler heat and heat demand in kBtu per slot, temperatures in degC, prices in
$/kWh ($/kBtu for gas). All conversions between those systems go through the
constants below so there is exactly one place where the factors live.
"""

KJ_PER_KWH = 3600.0
KJ_PER_KBTU = 1055.06
KBTU_PER_KWH = KJ_PER_KWH / KJ_PER_KBTU  # 3.41213...


def kwh_to_kj(kwh: float) -> float:
    return kwh * KJ_PER_KWH


def kbtu_to_kj(kbtu: float) -> float:
    return kbtu * KJ_PER_KBTU


def kwh_to_kbtu(kwh: float) -> float:
    return kwh * KBTU_PER_KWH
