#pragma once
// Temperament dimensions and the six ordered question types.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "srta/error.hpp"

namespace srta {

// Order doubles as the one-hot label layout (HA, RD, NS).
enum class Dimension { HA = 0, RD = 1, NS = 2 };

inline constexpr std::array<Dimension, 3> kDimensions{Dimension::HA, Dimension::RD, Dimension::NS};

inline constexpr std::size_t index_of(Dimension d) { return static_cast<std::size_t>(d); }

inline constexpr std::string_view code_of(Dimension d) {
    switch (d) {
        case Dimension::HA: return "HA";
        case Dimension::RD: return "RD";
        case Dimension::NS: return "NS";
    }
    return "?";
}

// Display aliases: harm avoidance is risk-averse, novelty seeking is the risk
// taker, reward dependence is risk-dependent.
inline constexpr std::string_view alias_of(Dimension d) {
    switch (d) {
        case Dimension::HA: return "Averse";
        case Dimension::RD: return "Dependent";
        case Dimension::NS: return "Taker";
    }
    return "?";
}

inline std::optional<Dimension> parse_dimension(std::string_view s) {
    for (Dimension d : kDimensions)
        if (code_of(d) == s) return d;
    return std::nullopt;
}

// Tie-break rank when bins hold equal counts: NS before RD before HA.
inline constexpr int tie_rank(Dimension d) {
    switch (d) {
        case Dimension::NS: return 0;
        case Dimension::RD: return 1;
        case Dimension::HA: return 2;
    }
    return 3;
}

class QuestionType {
public:
    // Canonical order: the three majors then the three minors. Feature
    // encoding and bank files both rely on it.
    enum class Kind { HA_NS = 0, RD_HA, NS_RD, NS_HA, HA_RD, RD_NS };

    constexpr QuestionType() = default;
    constexpr QuestionType(Kind k) : kind_(k) {}

    static constexpr std::array<Kind, 6> all() {
        return {Kind::HA_NS, Kind::RD_HA, Kind::NS_RD, Kind::NS_HA, Kind::HA_RD, Kind::RD_NS};
    }

    static std::optional<QuestionType> from_pair(Dimension first, Dimension second) {
        for (Kind k : all()) {
            QuestionType t(k);
            if (t.first() == first && t.second() == second) return t;
        }
        return std::nullopt;
    }

    static std::optional<QuestionType> parse(std::string_view s) {
        if (s.size() != 5 || s[2] != '/') return std::nullopt;
        auto a = parse_dimension(s.substr(0, 2));
        auto b = parse_dimension(s.substr(3, 2));
        if (!a || !b) return std::nullopt;
        return from_pair(*a, *b);
    }

    constexpr Kind kind() const { return kind_; }
    constexpr std::size_t index() const { return static_cast<std::size_t>(kind_); }

    constexpr Dimension first() const {
        switch (kind_) {
            case Kind::HA_NS: case Kind::HA_RD: return Dimension::HA;
            case Kind::RD_HA: case Kind::RD_NS: return Dimension::RD;
            case Kind::NS_RD: case Kind::NS_HA: return Dimension::NS;
        }
        return Dimension::HA;
    }

    constexpr Dimension second() const {
        switch (kind_) {
            case Kind::HA_NS: case Kind::RD_NS: return Dimension::NS;
            case Kind::RD_HA: case Kind::NS_HA: return Dimension::HA;
            case Kind::NS_RD: case Kind::HA_RD: return Dimension::RD;
        }
        return Dimension::HA;
    }

    constexpr bool major() const { return index() < 3; }

    constexpr bool involves(Dimension d) const { return first() == d || second() == d; }

    std::string code() const {
        std::string s(code_of(first()));
        s += '/';
        s += code_of(second());
        return s;
    }

    friend constexpr bool operator==(QuestionType, QuestionType) = default;

private:
    Kind kind_ = Kind::HA_NS;
};

inline QuestionType parse_question_type(std::string_view s) {
    auto t = QuestionType::parse(s);
    if (!t) fail(ErrorCode::Parse, "unknown question type '" + std::string(s) + "'");
    return *t;
}

}  // namespace srta
