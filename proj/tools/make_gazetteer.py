#!/usr/bin/env python3
"""Regenerate data/gazetteer.tsv from the GeoNames snapshot bundled with geonamescache.

Country coordinates are taken from the capital city (or the most populous city
when the capital is missing). Run from the repository root:

    pip install geonamescache
    python3 tools/make_gazetteer.py > data/gazetteer.tsv
"""
import sys

import geonamescache

NAME_OVERRIDES = {
    "CG": "Congo",
    "CD": "Democratic Republic of the Congo",
    "CI": "Ivory Coast",
    "NL": "Netherlands",
}

ALIASES = {
    "US": ["USA", "U.S.", "U.S.A.", "United States of America"],
    "GB": ["UK", "U.K.", "Great Britain", "Britain", "England", "Scotland", "Wales", "Northern Ireland"],
    "CN": ["People's Republic of China", "PRC", "Mainland China", "P.R. China"],
    "KR": ["Korea", "Republic of Korea", "Korea, Republic of", "S. Korea"],
    "KP": ["DPRK", "Democratic People's Republic of Korea"],
    "IR": ["Islamic Republic of Iran", "Iran, Islamic Republic of"],
    "RU": ["Russian Federation"],
    "TW": ["Taiwan, Province of China", "Republic of China"],
    "CG": ["Republic of the Congo", "Congo-Brazzaville", "Congo Republic"],
    "CD": ["DR Congo", "DRC", "Democratic Republic of Congo", "Congo-Kinshasa", "Zaire"],
    "CI": ["Côte d'Ivoire", "Cote d'Ivoire"],
    "NL": ["The Netherlands", "Holland"],
    "CZ": ["Czech Republic"],
    "VN": ["Viet Nam"],
    "LA": ["Lao PDR", "Lao People's Democratic Republic"],
    "SY": ["Syrian Arab Republic"],
    "TZ": ["United Republic of Tanzania"],
    "BO": ["Bolivia, Plurinational State of"],
    "VE": ["Venezuela, Bolivarian Republic of"],
    "MM": ["Burma"],
    "SZ": ["Swaziland"],
    "MK": ["Macedonia"],
    "TR": ["Türkiye", "Turkiye"],
    "HK": ["Hong Kong SAR"],
    "MO": ["Macau", "Macao SAR"],
    "SA": ["KSA", "Kingdom of Saudi Arabia"],
    "AE": ["UAE"],
    "PS": ["Palestinian Territories", "Gaza", "West Bank"],
    "CV": ["Cape Verde"],
    "TL": ["East Timor"],
}

# Places without a city in the snapshot.
FALLBACK_COORDS = {"AQ": (-75.0, 0.0)}


def main():
    gc = geonamescache.GeonamesCache()
    countries = gc.get_countries()
    cities_by_cc = {}
    for city in gc.get_cities().values():
        cities_by_cc.setdefault(city["countrycode"], []).append(city)

    out = sys.stdout
    out.write("canonical_name\tcountry\tiso2\tlatitude\tlongitude\tcontinent\taliases\n")
    for iso, c in sorted(countries.items(), key=lambda kv: NAME_OVERRIDES.get(kv[0], kv[1]["name"])):
        name = NAME_OVERRIDES.get(iso, c["name"]).strip()
        cities = cities_by_cc.get(iso, [])
        capital = [x for x in cities if x["name"] == c["capital"]]
        if capital:
            lat, lon = capital[0]["latitude"], capital[0]["longitude"]
        elif cities:
            top = max(cities, key=lambda x: x["population"])
            lat, lon = top["latitude"], top["longitude"]
        elif iso in FALLBACK_COORDS:
            lat, lon = FALLBACK_COORDS[iso]
        else:
            sys.stderr.write(f"skipping {iso} {name}: no coordinates\n")
            continue
        aliases = list(ALIASES.get(iso, []))
        if name != c["name"].strip():
            aliases.insert(0, c["name"].strip())
        aliases = [a for a in dict.fromkeys(aliases) if a != name]
        out.write(f"{name}\t{name}\t{iso}\t{lat:.4f}\t{lon:.4f}\t{c['continentcode']}\t{'|'.join(aliases)}\n")


if __name__ == "__main__":
    main()
