#!/usr/bin/env python3
"""Placeholder for fetching DK1 day-ahead prices.

The hourly price data for the DK1 bidding zone is not bundled with this
repository; download it yourself (for example from the ENTSO-E
transparency platform or from Energi Data Service, dataset "Elspotprices",
PriceArea = DK1) and convert it to the price CSV format storkit reads:

    timestamp,price
    2024-01-01T00:00:00,29.48
    2024-01-01T01:00:00,28.99
    ...

Requirements:
  * strictly consecutive hourly timestamps, no gaps, no duplicates
    (one row per hour; beware the DST switch in late March);
  * prices in EUR/MWh, matching `price_unit = per_mwh` in the example
    configs (storkit converts to EUR/kWh on load);
  * a plain two-column header exactly as above.

A `period,price` integer-indexed variant is accepted too:

    period,price
    1,29.48
    2,28.99

Run, for example:

    storkit roll --config configs/slow_storage_leakage.conf \
                 --prices dk1_2024_q1.csv --out out/dk1
"""

import sys

if __name__ == "__main__":
    sys.stderr.write(__doc__ + "\n")
    sys.stderr.write("This placeholder does not download anything; see above.\n")
    sys.exit(2)
