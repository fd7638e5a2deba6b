#!/usr/bin/env python3
"""Writes the bundled fixture corpus under fixtures/corpus/.

Layout:
  web/<host>/ads.txt | sellers.json | meta   replayed by the fixture transport
  whois/<domain>.txt                         registrant records
  lists/*.txt                                verified, objectionable and allowlists
  seeds.csv                                  rank,domain
  aliases.txt                                sellers.json location overrides

and fixtures/temporal/, two sellers.json crawls of the same networks taken
months apart:
  april/web, october/web                     replayed trees
  seeds.txt                                  networks to start from
  verified_networks.txt                      shared by both runs
"""

import json
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent / "corpus"
WEB = ROOT / "web"
TEMPORAL = Path(__file__).resolve().parent / "temporal"

GOOGLE_PUB = "pub-3176064900167527"
SPUTNIK_SITES = [
    "sputniknews.com", "ria.ru", "snanews.de", "sputnik.by", "sputnik.kz",
    "sputnik.md", "sputnik.az", "sputnik-georgia.com", "sputnik-tj.com",
    "sputnik.kg", "sputniknews.gr", "sputniknews.lt", "sputnik-abkhazia.info",
    "sputnik-ossetia.ru",
]
KIOSKED_SITES = [f"kiosk-site{i:02d}.com" for i in range(1, 13)]
COPIERS = ["copier1.net", "copier2.net", "copier3.net"]


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def ads(host: str, lines: list[str]) -> None:
    write(WEB / host / "ads.txt", "\n".join(lines) + "\n")


def sellers(host: str, entries: list[dict], **extra) -> None:
    body = {"version": "1.0", **extra, "sellers": entries}
    write(WEB / host / "sellers.json", json.dumps(body, indent=2) + "\n")


def seller(seller_id, seller_type, domain=None, name=None, confidential=False):
    e = {"seller_id": seller_id, "seller_type": seller_type}
    if name is not None:
        e["name"] = name
    if domain is not None:
        e["domain"] = domain
    if confidential:
        e["is_confidential"] = 1
    return e


def meta(host: str, text: str) -> None:
    write(WEB / host / "meta", text)


def whois(domain: str, org: str | None) -> None:
    lines = [f"Domain Name: {domain.upper()}", "Registrar: Example Registrar, Inc."]
    if org is not None:
        lines.append(f"Registrant Organization: {org}")
    write(ROOT / "whois" / f"{domain}.txt", "\n".join(lines) + "\n")


def main() -> None:
    if ROOT.exists():
        shutil.rmtree(ROOT)

    # Publishers.
    for i, site in enumerate(SPUTNIK_SITES):
        ads(site, [
            "# ad inventory",
            f"google.com, {GOOGLE_PUB}, DIRECT, f08c47fec0942fa0",
            f"appnexus.com, {8000 + i}, RESELLER",
        ])
        org = "Rossiya Segodnya" if i % 5 else "REDACTED FOR PRIVACY"
        whois(site, org)

    ads("gbnews.uk", [
        "spotx.tv, 123456, DIRECT, 7842df1d2fe2db34",
        "sovrn.com, 987654, DIRECT, fafdf38b16bf6b2b",
        "pubmatic.com, 156001, RESELLER, 5d62403b186f2ace",
        "contact=ads@gbnews.uk",
    ])
    write(WEB / "newscientist.com" / "placeholder", "")
    meta("newscientist.com", '[paths."ads.txt"]\nstatus = "redirect"\nlocation = "https://www.newscientist.com/ads.txt"\n')
    ads("www.newscientist.com", [
        "spotx.tv, 123456, DIRECT, 7842df1d2fe2db34",
        "sovrn.com, 987654, DIRECT, fafdf38b16bf6b2b",
        "google.com, pub-5555000011112222, DIRECT",
    ])
    whois("gbnews.uk", "GB News Limited")
    whois("newscientist.com", "New Scientist Ltd")

    ads("quora.com", ["google.com, pub-9000000000000001, DIRECT, f08c47fec0942fa0"])
    whois("quora.com", "Quora, Inc.")

    ads("mangaread.org", [
        "beachfront.com, 13310, DIRECT",
        "pubmatic.com, 156002, RESELLER",
    ])
    whois("mangaread.org", "Privacy service provided by Withheld for Privacy ehf")

    for i, site in enumerate(KIOSKED_SITES):
        ads(site, ["yahoo.com, 56848, DIRECT"])
        whois(site, f"Kiosk Publisher {i + 1:02d} Oy")

    ads("appsite.com", [
        "keenkale.com, 900, RESELLER",
        "lkqd.com, 901, RESELLER",
        "adingo.jp, 902, RESELLER",
        "pubmatic.com, 156003, RESELLER",
        "adyoulike.com, 55, RESELLER",
        "mytarget.com, 77, RESELLER",
        *[f"{c}, 31{n}, RESELLER" for n, c in enumerate(COPIERS)],
    ])
    whois("appsite.com", "Appsite Studios LLC")

    write(WEB / "noads.org" / "index.html", "<html></html>\n")
    meta("deadsite.com", 'status = "timeout"\n')

    # Networks.
    google_entries = [seller(GOOGLE_PUB, "PUBLISHER", "sputniknews.com", "Rossiya Segodnya")]
    google_entries += [
        seller("pub-9000000000000001", "PUBLISHER", "quora.com", "Quora"),
        seller("pub-5555000011112222", "PUBLISHER", "newscientist.com", "New Scientist"),
    ]
    sellers("realtimebidding.google.com", google_entries, contact_email="sellers@google.com")
    write(WEB / "google.com" / "index.html", "<html></html>\n")

    sellers("spotx.tv", [seller("123456", "PUBLISHER", "gbnews.uk", "GB News")])
    sellers("sovrn.com", [seller("987654", "PUBLISHER", "gbnews.uk", "GB News")])
    sellers("beachfront.com", [
        seller("13310", "INTERMEDIARY", None, "MangaRead"),
        seller("13311", "PUBLISHER", None, "Other Publisher"),
    ])
    sellers("yahoo.com", [seller("56848", "PUBLISHER", "kiosked.com", "Kiosked")])
    sellers("kiosked.com", [
        seller(f"k{i}", "PUBLISHER", site, f"Kiosk Publisher {i + 1:02d}")
        for i, site in enumerate(KIOSKED_SITES)
    ])
    sellers("appnexus.com", [seller("1", "PUBLISHER", None, "Unrelated")])

    sellers("keenkale.com", [seller("kk-7", "PUBLISHER", "smaato.com", "Smaato")])
    sellers("lkqd.com", [seller("lq-3", "PUBLISHER", "smaato.com", "Smaato Inc.")])
    sellers("adingo.jp", [seller("ad-12", "PUBLISHER", "smaato.com", "Smaato")])
    sellers("pubmatic.com", [
        seller("156001", "INTERMEDIARY", None, "GB News reseller account"),
        seller("156190", "INTERMEDIARY", "smaato.com", "Smaato"),
        seller("156777", "INTERMEDIARY", "ghostexchange.io", "Ghost Exchange"),
        seller("156888", "INTERMEDIARY", "slowads.net", "Slow Ads"),
    ])
    sellers("smaato.com", [
        seller("1100", "PUBLISHER", "puzzlegame.app", "Puzzle Game"),
        seller("1101", "PUBLISHER", "snanews.de", "SNA News"),
        seller("1102", "PUBLISHER", None, None, confidential=True),
    ])
    meta("slowads.net", 'status = "timeout"\n')

    sellers("adyoulike.com", [
        seller("a1", "PUBLISHER", "fastnews24.com", "Fast News"),
        seller("a2", "PUBLISHER", "fastnews24.com", "FastNews Media Group"),
        seller("a3", "PUBLISHER", "fastnews24.com", "Daily Fast"),
        seller("a4", "PUBLISHER", "honest.example", "Honest Publisher"),
    ])
    sellers("mytarget.com", [
        seller(f"mt{i}", "PUBLISHER", None, None, confidential=True) for i in range(6)
    ])

    copied = {
        "contact_email": "ops@bignetwork.com",
        "version": "1.0",
        "sellers": [
            seller("c-1", "PUBLISHER", "smaato.com", "Smaato"),
            seller("c-2", "PUBLISHER", "someapp.com", "Some App"),
        ],
    }
    for c in COPIERS:
        write(WEB / c / "sellers.json", json.dumps(copied, indent=2) + "\n")

    # Seeds, aliases and lists.
    publishers = (
        SPUTNIK_SITES + ["gbnews.uk", "newscientist.com", "quora.com", "mangaread.org"]
        + KIOSKED_SITES + ["appsite.com", "noads.org", "deadsite.com"]
    )
    seed_lines = [f"{rank},{d}" for rank, d in enumerate(publishers, start=1)]
    write(ROOT / "seeds.csv", "\n".join(seed_lines) + "\n")
    write(ROOT / "aliases.txt", "google.com https://realtimebidding.google.com/sellers.json\n")

    write(ROOT / "lists" / "misinformation.txt",
          "# known misinformation outlets\nsputniknews.com\nria.ru\nsnanews.de\nfastnews24.com\n")
    write(ROOT / "lists" / "piracy.txt", "mangaread.org\n")
    write(ROOT / "lists" / "illegal.txt", "# none in this corpus\n")
    write(ROOT / "lists" / "verified_networks.txt", "\n".join([
        "google.com", "spotx.tv", "sovrn.com", "beachfront.com", "yahoo.com", "pubmatic.com",
        "smaato.com", "keenkale.com", "lkqd.com", "adingo.jp", "adyoulike.com", "mytarget.com",
        "appnexus.com", "kiosked.com",
    ]) + "\n")
    write(ROOT / "lists" / "content_owners.txt", "yahoo.com\namazon.com\n")


def temporal() -> None:
    """33 verified hidden intermediaries in April, 37 in October.

    Each hin-NN.net serves a file with one named client and is listed as
    PUBLISHER by listing-a.com (and from October also by listing-b.com for
    the first five) and as INTERMEDIARY by resale.com. Two unverified ones
    exist in April; one of them is gone by October.
    """
    if TEMPORAL.exists():
        shutil.rmtree(TEMPORAL)
    verified = [f"hin-{i:02d}.net" for i in range(1, 38)]
    runs = {
        "april": (verified[:33], ["shadow-1.biz", "shadow-2.biz"]),
        "october": (verified, ["shadow-1.biz"]),
    }
    for run, (hidden, unverified) in runs.items():
        web = TEMPORAL / run / "web"
        subjects = hidden + unverified
        a = [seller(f"a{i}", "PUBLISHER", d, d) for i, d in enumerate(subjects)]
        b = [seller(f"b{i}", "PUBLISHER", d, d) for i, d in enumerate(subjects[:5])] if run == "october" else []
        r = [seller(f"r{i}", "INTERMEDIARY", d, d) for i, d in enumerate(subjects)]
        for host, entries in (("listing-a.com", a), ("listing-b.com", b), ("resale.com", r)):
            body = {"version": "1.0", "sellers": entries}
            write(web / host / "sellers.json", json.dumps(body, indent=2) + "\n")
        for i, d in enumerate(subjects):
            body = {"sellers": [seller(str(i), "PUBLISHER", f"client-of-{d}", "Client Site")]}
            write(web / d / "sellers.json", json.dumps(body) + "\n")
    write(TEMPORAL / "seeds.txt", "listing-a.com\nlisting-b.com\nresale.com\n")
    write(TEMPORAL / "verified_networks.txt", "\n".join(verified + ["listing-a.com", "listing-b.com", "resale.com"]) + "\n")


if __name__ == "__main__":
    main()
    temporal()
