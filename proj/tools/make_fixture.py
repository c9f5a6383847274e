#!/usr/bin/env python3
"""Writes the bundled synthetic fixture (data/fixture/) and its expected
build manifest. The manifest is computed here, independently of the C++
pipeline, by enumerating the same stages with the standard library.

    python3 tools/make_fixture.py data/fixture
"""

import datetime as dt
import math
import random
import sys
import unicodedata
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

SEED = 20200201
COUNTRIES = ["ES", "MX", "AR", "CO", "US", "BR"]
COVERED = ["ES", "MX", "AR", "CO", "US"]  # BR groups are dropped by the filter
LANG_OF = {"ES": "es", "MX": "es", "AR": "es", "CO": "es", "US": "en", "BR": "pt"}
CATEGORIES = ["Media", "Politics", "Conspiracy Theories"]
KEYTERMS = ["vacuna", "plandemia"]
MEDIA = ["native_video", "live_video", "external_video"]
WINDOW = (dt.datetime(2020, 2, 1, tzinfo=dt.timezone.utc), dt.datetime(2021, 10, 1, tzinfo=dt.timezone.utc))
QUANTILE = 0.75
MIN_SHARES = 2


def generate(rng):
    groups = []
    for g in range(48):
        country = rng.choice(COUNTRIES)
        lang = LANG_OF[country] if rng.random() > 0.1 else "en"
        cat = rng.choice(CATEGORIES)
        gid = f"g{g:03d}"
        name = rng.choice(["Salud", "Noticias", "Verdad", "Libertad", "Familia"]) + f" {g}"
        if rng.random() < 0.08:
            lang = ""  # unlabeled language
        groups.append((gid, name, country, lang, cat))

    urls = []
    for u in range(60):
        urls.append((f"https://video.example.org/v/{u}", rng.choice(["es", "en", "pt"]), rng.choice(CATEGORIES)))

    messages = ["la vacuna mata", "No a la Vacúna", "PLANDEMIA ya", "mira esto", "la plandemía sigue",
                "vacunación obligatoria", "que hay de la VACUNA?"]
    posts = []
    for gid, name, country, lang, cat in groups:
        k = rng.randint(1, 14)
        for _ in range(k):
            # prefer urls matching the group's language and category
            weights = [(3.0 if ul == (lang or "es") else 1.0) * (2.5 if uc == cat else 1.0) for _, ul, uc in urls]
            url, _, _ = rng.choices(urls, weights=weights)[0]
            r = rng.random()
            if r < 0.08:
                url = url.replace("https://video.example.org", "HTTPS://Video.Example.ORG") + "?fbclid=x1"
            elif r < 0.14:
                url = url + "?utm_source=fb&t=3"
            when = WINDOW[0] + dt.timedelta(seconds=rng.randint(-30 * 86400, 640 * 86400))
            fmt = rng.random()
            if fmt < 0.5:
                ts = when.strftime("%Y-%m-%dT%H:%M:%SZ")
            elif fmt < 0.8:
                ts = when.astimezone(dt.timezone(dt.timedelta(hours=-5))).strftime("%Y-%m-%dT%H:%M:%S-05:00")
            else:
                ts = when.strftime("%Y-%m-%d %H:%M:%S")
            media = rng.choice(MEDIA) if rng.random() > 0.1 else rng.choice(["photo", "link", "status"])
            posts.append((gid, name, ts, media, url, rng.choice(messages)))
    rng.shuffle(posts)

    sci = []
    for i, a in enumerate(COVERED):
        for b in COVERED[i:]:
            v = rng.uniform(5e4, 5e5) if a == b else 10 ** rng.uniform(1.0, 4.0)
            sci.append((a, b, round(v, 3)))
    return groups, posts, sci


def fold(s):
    return "".join(c for c in unicodedata.normalize("NFD", s) if unicodedata.category(c) != "Mn").lower()


def parse_time(ts):
    if ts.endswith("Z"):
        ts = ts[:-1] + "+00:00"
    t = dt.datetime.fromisoformat(ts)
    if t.tzinfo is None:
        t = t.replace(tzinfo=dt.timezone.utc)
    return t


def canonical(url):
    p = urlsplit(url)
    query = "&".join(q for q in p.query.split("&") if q and not (q.split("=")[0] == "fbclid" or q.startswith("utm_")))
    return urlunsplit((p.scheme.lower(), p.netloc.lower(), p.path, query, p.fragment))


def manifest(groups, posts, sci):
    attrs = {g[0]: g[2:] for g in groups}
    m = [("posts_read", len(posts))]
    m.append(("posts_unknown_media", sum(p[3] not in MEDIA and p[3] != "other" for p in posts)))
    terms = [fold(k) for k in KEYTERMS]
    kept = [p for p in posts
            if WINDOW[0] <= parse_time(p[2]) < WINDOW[1] and p[3] in MEDIA
            and any(t in fold(p[5]) or t in fold(p[1]) for t in terms)]
    m.append(("posts_retained", len(kept)))
    shares = {}
    for p in kept:
        key = (p[0], canonical(p[4]))
        shares[key] = shares.get(key, 0) + 1
    m += [("bipartite_groups", len({g for g, _ in shares})), ("bipartite_urls", len({u for _, u in shares})),
          ("bipartite_edges", len(shares))]
    total = {}
    for (g, _), c in shares.items():
        total[g] = total.get(g, 0) + c
    active = {k: c for k, c in shares.items() if total[k[0]] >= MIN_SHARES}
    m += [("threshold_groups", len({g for g, _ in active})), ("threshold_urls", len({u for _, u in active})),
          ("threshold_edges", len(active))]
    urls_of = {}
    for g, u in active:
        urls_of.setdefault(g, set()).add(u)
    names = sorted(urls_of)
    edges = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            w = len(urls_of[a] & urls_of[b])
            if w:
                edges[(a, b)] = w
    m += [("projected_nodes", len(names)), ("projected_edges", len(edges))]
    ws = sorted(edges.values())
    k = max(1, math.ceil(QUANTILE * len(ws)))
    t = ws[k - 1]
    trimmed = {e: w for e, w in edges.items() if w >= t}
    nodes = {v for e in trimmed for v in e}
    m += [("trim_threshold_weight", t), ("trimmed_nodes", len(nodes)), ("trimmed_edges", len(trimmed))]
    ok = {v for v in nodes if all(attrs[v]) and attrs[v][0] in COVERED}
    filtered = {e: w for e, w in trimmed.items() if e[0] in ok and e[1] in ok}
    fnodes = {v for e in filtered for v in e}
    m += [("filtered_nodes", len(fnodes)), ("filtered_edges", len(filtered)),
          ("final_nodes", len(fnodes)), ("final_edges", len(filtered)),
          ("final_dyads", len(fnodes) * (len(fnodes) - 1) // 2)]
    return m


def write_csv(path, header, rows):
    def q(x):
        x = str(x)
        return '"' + x.replace('"', '""') + '"' if any(c in x for c in ',"\n') else x
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(q(x) for x in r) + "\n")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/fixture")
    out.mkdir(parents=True, exist_ok=True)
    groups, posts, sci = generate(random.Random(SEED))
    write_csv(out / "posts.csv", ["group_id", "group_name", "post_time", "media_type", "url", "message"], posts)
    write_csv(out / "attributes.csv", ["node_id", "domain", "language", "category"], [(g[0], *g[2:]) for g in groups])
    write_csv(out / "sci.csv", ["country_a", "country_b", "sci"], sci)
    with open(out / "expected_manifest.txt", "w") as f:
        for k, v in manifest(groups, posts, sci):
            f.write(f"{k}={v}\n")


if __name__ == "__main__":
    main()
