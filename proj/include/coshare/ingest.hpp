#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "coshare/csv.hpp"
#include "coshare/error.hpp"
#include "coshare/graph.hpp"
#include "coshare/text.hpp"

namespace coshare {

enum class MediaType { native_video, live_video, external_video, other };

inline std::string_view to_string(MediaType m) {
    switch (m) {
    case MediaType::native_video: return "native_video";
    case MediaType::live_video: return "live_video";
    case MediaType::external_video: return "external_video";
    case MediaType::other: return "other";
    }
    return "other";
}

/// Unknown strings map to nullopt; callers decide whether that is `other`.
inline std::optional<MediaType> parse_media_type(std::string_view s) {
    std::string k(trim(s));
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
    if (k == "native_video")
        return MediaType::native_video;
    if (k == "live_video")
        return MediaType::live_video;
    if (k == "external_video")
        return MediaType::external_video;
    if (k == "other")
        return MediaType::other;
    return std::nullopt;
}

inline bool is_video(MediaType m) { return m != MediaType::other; }

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size())
        return false;
    for (std::size_t k = pos; k < pos + len; ++k)
        if (!std::isdigit(static_cast<unsigned char>(s[k])))
            return false;
    std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return true;
}

inline std::optional<Date> parse_ymd(std::string_view s) {
    int y, m, d;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !read_int(s, 0, 4, y) || !read_int(s, 5, 2, m) ||
        !read_int(s, 8, 2, d))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        return std::nullopt;
    return Date{ymd};
}

} // namespace detail

/// Parses `YYYY-MM-DD`.
inline std::optional<Date> parse_date(std::string_view s) {
    s = trim(s);
    if (s.size() != 10)
        return std::nullopt;
    return detail::parse_ymd(s);
}

/// Parses ISO 8601 `YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|±HH[:]MM]`, or a bare date.
/// A missing offset is read as UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    s = trim(s);
    auto date = detail::parse_ymd(s);
    if (!date)
        return std::nullopt;
    if (s.size() == 10)
        return Timestamp{*date};
    if (s[10] != 'T' && s[10] != ' ')
        return std::nullopt;
    int hh, mm, ss = 0;
    if (!detail::read_int(s, 11, 2, hh) || s.size() < 16 || s[13] != ':' || !detail::read_int(s, 14, 2, mm))
        return std::nullopt;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (!detail::read_int(s, pos + 1, 2, ss))
            return std::nullopt;
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            const auto start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
                ++pos;
            if (pos == start)
                return std::nullopt;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;
    int offset_min = 0;
    if (pos < s.size()) {
        const char c = s[pos];
        if (c == 'Z' && pos + 1 == s.size()) {
            // UTC
        } else if (c == '+' || c == '-') {
            int oh, om = 0;
            if (!detail::read_int(s, pos + 1, 2, oh))
                return std::nullopt;
            std::size_t p = pos + 3;
            if (p < s.size() && s[p] == ':')
                ++p;
            if (p < s.size()) {
                if (!detail::read_int(s, p, 2, om) || p + 2 != s.size())
                    return std::nullopt;
            }
            offset_min = (c == '+' ? 1 : -1) * (oh * 60 + om);
        } else {
            return std::nullopt;
        }
    }
    return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_min};
}

struct PostRecord {
    NodeId group_id;
    std::string group_name;
    Timestamp post_time;
    MediaType media_type;
    std::string url;
    std::string message;
};

struct IngestConfig {
    Date date_from;
    Date date_to; // exclusive
    std::vector<std::string> key_terms;
    std::int64_t min_total_shares = 2;

    void validate() const {
        if (!(date_from < date_to))
            throw InputError("ingest: date_from must precede date_to");
        if (key_terms.empty())
            throw InputError("ingest: at least one key term is required");
        for (const auto& k : key_terms)
            if (trim(k).empty())
                throw InputError("ingest: empty key term");
        if (min_total_shares < 1)
            throw InputError("ingest: min_total_shares must be >= 1");
    }
};

enum class PostFormat { delimited, json_lines };

struct ParsedPosts {
    std::vector<PostRecord> records;
    std::size_t unknown_media_types = 0; // rows whose media_type was mapped to `other`
};

namespace detail {

inline PostRecord make_record(std::size_t row, std::string_view group_id, std::string_view group_name,
                              std::string_view post_time, std::string_view media, std::string_view url,
                              std::string_view message, std::size_t& unknown_media) {
    const auto where = [&] { return "row " + std::to_string(row) + ": "; };
    if (trim(group_id).empty())
        throw InputError(where() + "empty group_id");
    auto ts = parse_timestamp(post_time);
    if (!ts)
        throw InputError(where() + "malformed post_time '" + std::string(post_time) + "'");
    auto mt = parse_media_type(media);
    if (!mt) {
        ++unknown_media;
        mt = MediaType::other;
    }
    if (is_video(*mt) && trim(url).empty())
        throw InputError(where() + "empty url for video post");
    return PostRecord{NodeId(group_id), std::string(group_name), *ts, *mt, std::string(trim(url)),
                      std::string(message)};
}

inline constexpr std::array<std::string_view, 6> post_columns = {"group_id", "group_name", "post_time",
                                                                 "media_type", "url",        "message"};

} // namespace detail

/// Parses exported post records. Row numbers in errors count the header as row 1
/// (delimited) or the first line as row 1 (JSON lines).
inline ParsedPosts parse_posts(std::istream& in, PostFormat format, char delim = ',') {
    ParsedPosts out;
    if (format == PostFormat::delimited) {
        if (in.peek() == std::char_traits<char>::eof())
            return out;
        csv::Table t(in, delim);
        std::array<std::size_t, 6> col{};
        for (std::size_t k = 0; k < col.size(); ++k)
            col[k] = t.column(detail::post_columns[k]);
        for (const auto& r : t.rows()) {
            const auto f = [&](std::size_t k) -> const std::string& {
                if (col[k] >= r.fields.size())
                    throw InputError("row " + std::to_string(r.line) + ": missing column '" +
                                     std::string(detail::post_columns[k]) + "'");
                return r.fields[col[k]];
            };
            out.records.push_back(
                detail::make_record(r.line, f(0), f(1), f(2), f(3), f(4), f(5), out.unknown_media_types));
        }
        return out;
    }
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError("row " + std::to_string(row) + ": invalid JSON: " + e.what());
        }
        if (!j.is_object())
            throw InputError("row " + std::to_string(row) + ": expected a JSON object");
        std::array<std::string, 6> v;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const auto key = std::string(detail::post_columns[k]);
            auto it = j.find(key);
            if (it == j.end())
                throw InputError("row " + std::to_string(row) + ": missing column '" + key + "'");
            if (it->is_string())
                v[k] = it->get<std::string>();
            else if (!it->is_null())
                v[k] = it->dump();
        }
        out.records.push_back(
            detail::make_record(row, v[0], v[1], v[2], v[3], v[4], v[5], out.unknown_media_types));
    }
    return out;
}

/// True when the record passes the date window, media, and key-term filters.
inline bool passes_filter(const PostRecord& r, const IngestConfig& cfg,
                          const std::vector<std::string>& folded_terms) {
    if (r.post_time < Timestamp{cfg.date_from} || !(r.post_time < Timestamp{cfg.date_to}))
        return false;
    if (!is_video(r.media_type))
        return false;
    const auto msg = text::fold(r.message);
    const auto name = text::fold(r.group_name);
    return std::any_of(folded_terms.begin(), folded_terms.end(), [&](const std::string& t) {
        return msg.find(t) != std::string::npos || name.find(t) != std::string::npos;
    });
}

inline std::vector<PostRecord> filter_posts(const std::vector<PostRecord>& records, const IngestConfig& cfg) {
    cfg.validate();
    std::vector<std::string> terms;
    for (const auto& k : cfg.key_terms)
        terms.push_back(text::fold(trim(k)));
    std::vector<PostRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const PostRecord& r) { return passes_filter(r, cfg, terms); });
    return out;
}

/// Lowercases scheme and host and drops `fbclid` and `utm_*` query parameters.
inline std::string canonicalize_url(std::string_view raw) {
    std::string url(trim(raw));
    const auto lower = [](std::string& s, std::size_t b, std::size_t e) {
        for (auto k = b; k < e && k < s.size(); ++k)
            s[k] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[k])));
    };
    const auto scheme_end = url.find("://");
    std::size_t path_start = 0;
    if (scheme_end != std::string::npos) {
        lower(url, 0, scheme_end);
        const auto auth_start = scheme_end + 3;
        auto auth_end = url.find_first_of("/?#", auth_start);
        if (auth_end == std::string::npos)
            auth_end = url.size();
        const auto at = url.rfind('@', auth_end);
        const auto host_start = (at != std::string::npos && at >= auth_start) ? at + 1 : auth_start;
        lower(url, host_start, auth_end);
        path_start = auth_end;
    }
    const auto q = url.find('?', path_start);
    if (q == std::string::npos)
        return url;
    auto frag = url.find('#', q);
    const std::string fragment = frag == std::string::npos ? "" : url.substr(frag);
    const std::string query = url.substr(q + 1, (frag == std::string::npos ? url.size() : frag) - q - 1);
    std::string kept;
    std::size_t start = 0;
    while (start <= query.size()) {
        auto amp = query.find('&', start);
        if (amp == std::string::npos)
            amp = query.size();
        const std::string param = query.substr(start, amp - start);
        const std::string key = param.substr(0, param.find('='));
        if (!param.empty() && key != "fbclid" && key.rfind("utm_", 0) != 0) {
            if (!kept.empty())
                kept.push_back('&');
            kept += param;
        }
        start = amp + 1;
    }
    return url.substr(0, q) + (kept.empty() ? "" : "?" + kept) + fragment;
}

/// One group node per group_id, one url node per (canonical) url, share counts per pair.
inline BipartiteGraph build_bipartite(const std::vector<PostRecord>& records, bool url_canonicalize = true) {
    BipartiteGraph g;
    for (const auto& r : records) {
        if (trim(r.url).empty())
            continue;
        g.add_share(r.group_id, NodeId(url_canonicalize ? canonicalize_url(r.url) : r.url));
    }
    return g;
}

/// Drops groups whose total share count is below the threshold, then urls left
/// without sharers. Applied once.
inline BipartiteGraph apply_min_activity(const BipartiteGraph& g, std::int64_t min_total_shares) {
    if (min_total_shares < 1)
        throw InputError("min_total_shares must be >= 1");
    BipartiteGraph out;
    for (const auto& [grp, row] : g.adjacency()) {
        std::int64_t total = 0;
        for (const auto& [u, c] : row)
            total += c;
        if (total < min_total_shares)
            continue;
        out.add_group(grp);
        for (const auto& [u, c] : row)
            out.add_share(grp, u, c);
    }
    return out;
}

} // namespace coshare
