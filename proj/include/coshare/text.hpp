#pragma once

// UTF-8 folding for key-term matching: lowercase plus removal of diacritics.
// Covers ASCII, Latin-1 Supplement, Latin Extended-A, combining marks,
// and the Greek and basic Cyrillic blocks. Other code points pass through.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace coshare::text {

namespace detail {

// U+00C0 .. U+017F
inline constexpr std::array<std::string_view, 192> latin_fold = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e",
    "i", "i", "i", "i", "d", "n", "o", "o", "o", "o", "o", "\xC3\x97",
    "o", "u", "u", "u", "u", "y", "th", "ss", "a", "a", "a", "a",
    "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", "\xC3\xB7", "o", "u", "u", "u",
    "u", "y", "th", "y", "a", "a", "a", "a", "a", "a", "c", "c",
    "c", "c", "c", "c", "c", "c", "d", "d", "d", "d", "e", "e",
    "e", "e", "e", "e", "e", "e", "e", "e", "g", "g", "g", "g",
    "g", "g", "g", "g", "h", "h", "h", "h", "i", "i", "i", "i",
    "i", "i", "i", "i", "i", "i", "ij", "ij", "j", "j", "k", "k",
    "q", "l", "l", "l", "l", "l", "l", "l", "l", "l", "l", "n",
    "n", "n", "n", "n", "n", "'n", "ng", "ng", "o", "o", "o", "o",
    "o", "o", "oe", "oe", "r", "r", "r", "r", "r", "r", "s", "s",
    "s", "s", "s", "s", "s", "s", "t", "t", "t", "t", "t", "t",
    "u", "u", "u", "u", "u", "u", "u", "u", "u", "u", "u", "u",
    "w", "w", "y", "y", "y", "z", "z", "z", "z", "z", "z", "s",
};

// U+0370 .. U+045F; 0 leaves the code point as is
inline constexpr std::array<char16_t, 240> greek_cyrillic_fold = {
    0x0371, 0, 0x0373, 0, 0x02B9, 0, 0x0377, 0, 0, 0, 0, 0,
    0, 0, 0x003B, 0x03F3, 0, 0, 0, 0, 0, 0x00A8, 0x03B1, 0x00B7,
    0x03B5, 0x03B7, 0x03B9, 0, 0x03BF, 0, 0x03C5, 0x03C9, 0x03B9, 0x03B1, 0x03B2, 0x03B3,
    0x03B4, 0x03B5, 0x03B6, 0x03B7, 0x03B8, 0x03B9, 0x03BA, 0x03BB, 0x03BC, 0x03BD, 0x03BE, 0x03BF,
    0x03C0, 0x03C1, 0, 0x03C3, 0x03C4, 0x03C5, 0x03C6, 0x03C7, 0x03C8, 0x03C9, 0x03B9, 0x03C5,
    0x03B1, 0x03B5, 0x03B7, 0x03B9, 0x03C5, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0x03C3, 0,
    0, 0, 0, 0, 0, 0, 0x03B9, 0x03C5, 0x03BF, 0x03C5, 0x03C9, 0x03D7,
    0x03B2, 0x03B8, 0, 0x03D2, 0x03D2, 0x03C6, 0x03C0, 0, 0x03D9, 0, 0x03DB, 0,
    0x03DD, 0, 0x03DF, 0, 0x03E1, 0, 0x03E3, 0, 0x03E5, 0, 0x03E7, 0,
    0x03E9, 0, 0x03EB, 0, 0x03ED, 0, 0x03EF, 0, 0x03BA, 0x03C1, 0, 0,
    0x03B8, 0x03B5, 0, 0x03F8, 0, 0x03F2, 0x03FB, 0, 0, 0x037B, 0x037C, 0x037D,
    0x0435, 0x0435, 0x0452, 0x0433, 0x0454, 0x0455, 0x0456, 0x0456, 0x0458, 0x0459, 0x045A, 0x045B,
    0x043A, 0x0438, 0x0443, 0x045F, 0x0430, 0x0431, 0x0432, 0x0433, 0x0434, 0x0435, 0x0436, 0x0437,
    0x0438, 0x0438, 0x043A, 0x043B, 0x043C, 0x043D, 0x043E, 0x043F, 0x0440, 0x0441, 0x0442, 0x0443,
    0x0444, 0x0445, 0x0446, 0x0447, 0x0448, 0x0449, 0x044A, 0x044B, 0x044C, 0x044D, 0x044E, 0x044F,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0x0438, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0x0435, 0x0435, 0, 0x0433,
    0, 0, 0, 0x0456, 0, 0, 0, 0, 0x043A, 0x0438, 0x0443, 0,
};

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Decodes one code point at s[i], advancing i. Invalid bytes decode as U+FFFD.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i++]);
    if (b0 < 0x80)
        return b0;
    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        return 0xFFFD;
    }
    for (int k = 0; k < extra; ++k) {
        if (i >= s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80)
            return 0xFFFD;
        cp = (cp << 6) | (static_cast<unsigned char>(s[i++]) & 0x3F);
    }
    return cp;
}

} // namespace detail

/// Lowercases and strips diacritics so that "MÉDICOS" and "medicos" compare equal.
inline std::string fold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        char32_t cp = detail::next_code_point(s, i);
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp + 32 : cp));
        } else if (cp >= 0xC0 && cp <= 0x17F) {
            out += detail::latin_fold[cp - 0xC0];
        } else if (cp >= 0x300 && cp <= 0x36F) {
            // combining diacritical mark
        } else if (cp >= 0x370 && cp <= 0x45F) {
            const char16_t f = detail::greek_cyrillic_fold[cp - 0x370];
            detail::append_utf8(out, f ? f : cp);
        } else {
            detail::append_utf8(out, cp);
        }
    }
    return out;
}

/// Substring match after folding both sides.
inline bool contains_folded(std::string_view haystack, std::string_view needle) {
    return fold(haystack).find(fold(needle)) != std::string::npos;
}

} // namespace coshare::text
