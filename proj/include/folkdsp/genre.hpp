#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "folkdsp/error.hpp"

namespace folkdsp {

/// The closed label set. Enumerator order is the fixed class order used for
/// tie-breaking, confusion-matrix layout and model outputs (alphabetical).
enum class Genre : unsigned char { Bambuco, Carranga, Cumbia, Joropo, Pasillo, Vallenato };

inline constexpr std::size_t kNumGenres = 6;

inline constexpr std::array<Genre, kNumGenres> kGenres = {
    Genre::Bambuco, Genre::Carranga, Genre::Cumbia, Genre::Joropo, Genre::Pasillo, Genre::Vallenato};

inline constexpr std::array<std::string_view, kNumGenres> kGenreNames = {
    "Bambuco", "Carranga", "Cumbia", "Joropo", "Pasillo", "Vallenato"};

constexpr std::size_t index_of(Genre g) noexcept { return static_cast<std::size_t>(g); }

constexpr std::string_view name_of(Genre g) noexcept { return kGenreNames[index_of(g)]; }

inline Genre genre_at(std::size_t i) {
    if (i >= kNumGenres) throw DataError("genre index out of range: " + std::to_string(i));
    return kGenres[i];
}

/// "Bambuco, Carranga, ..." for error messages.
inline std::string genre_list() {
    std::string out;
    for (std::size_t i = 0; i < kNumGenres; ++i) {
        if (i) out += ", ";
        out += kGenreNames[i];
    }
    return out;
}

/// Exact match on the canonical spelling; `case_insensitive` relaxes that for
/// directory names.
inline std::optional<Genre> try_parse_genre(std::string_view s, bool case_insensitive = false) {
    for (std::size_t i = 0; i < kNumGenres; ++i) {
        const auto name = kGenreNames[i];
        if (name.size() != s.size()) continue;
        bool eq = true;
        for (std::size_t c = 0; c < s.size() && eq; ++c) {
            eq = case_insensitive
                     ? std::tolower(static_cast<unsigned char>(s[c])) ==
                           std::tolower(static_cast<unsigned char>(name[c]))
                     : s[c] == name[c];
        }
        if (eq) return kGenres[i];
    }
    return std::nullopt;
}

inline Genre parse_genre(std::string_view s) {
    if (auto g = try_parse_genre(s)) return *g;
    throw DataError("unknown genre label \"" + std::string(s) + "\"; valid labels are: " + genre_list());
}

}  // namespace folkdsp
